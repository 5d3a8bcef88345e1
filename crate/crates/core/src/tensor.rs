//! Dense complex storage for the two- and four-point correlation matrices.
//!
//! Both containers are flat, row-major `Vec<Complex64>` wrappers indexed by
//! 0-based site indices. File formats and documentation use 1-based sites
//! `1..=L`; the shift happens at the API boundary, never inside kernels.

use num_complex::Complex64;

/// L×L complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    l: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(l: usize) -> Self {
        Self { l, data: vec![Complex64::new(0.0, 0.0); l * l] }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let l = diag.len();
        let mut m = Self::zeros(l);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn from_vec(l: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), l * l);
        Self { l, data }
    }

    #[inline]
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.l).map(|m| self[(m, m)].re).collect()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Largest |D_mn - conj(D_nm)| over all pairs.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.l {
            for n in 0..self.l {
                let d = (self[(m, n)] - self[(n, m)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (m, n): (usize, usize)) -> &Complex64 {
        &self.data[m * self.l + n]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (m, n): (usize, usize)) -> &mut Complex64 {
        &mut self.data[m * self.l + n]
    }
}

/// L×L×L×L complex tensor, row-major (strides L³, L², L, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct CTen4 {
    l: usize,
    data: Vec<Complex64>,
}

impl CTen4 {
    pub fn zeros(l: usize) -> Self {
        Self { l, data: vec![Complex64::new(0.0, 0.0); l * l * l * l] }
    }

    pub fn from_vec(l: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), l * l * l * l);
        Self { l, data }
    }

    #[inline]
    pub fn l(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn idx(&self, m: usize, n: usize, p: usize, q: usize) -> usize {
        ((m * self.l + n) * self.l + p) * self.l + q
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Worst violation of the exchange symmetry F_mnpq = s·F_nmpq = s·F_mnqp.
    pub fn exchange_defect(&self, sign: f64) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.l {
            for n in 0..self.l {
                for p in 0..self.l {
                    for q in 0..self.l {
                        let f = self[(m, n, p, q)];
                        worst = worst.max((f - sign * self[(n, m, p, q)]).norm());
                        worst = worst.max((f - sign * self[(m, n, q, p)]).norm());
                    }
                }
            }
        }
        worst
    }

    /// Worst violation of F_mnpq = conj(F_qpnm).
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..self.l {
            for n in 0..self.l {
                for p in 0..self.l {
                    for q in 0..self.l {
                        let d = (self[(m, n, p, q)] - self[(q, p, n, m)].conj()).norm();
                        worst = worst.max(d);
                    }
                }
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize, usize, usize)> for CTen4 {
    type Output = Complex64;
    #[inline]
    fn index(&self, (m, n, p, q): (usize, usize, usize, usize)) -> &Complex64 {
        &self.data[((m * self.l + n) * self.l + p) * self.l + q]
    }
}

impl std::ops::IndexMut<(usize, usize, usize, usize)> for CTen4 {
    #[inline]
    fn index_mut(&mut self, (m, n, p, q): (usize, usize, usize, usize)) -> &mut Complex64 {
        let i = self.idx(m, n, p, q);
        &mut self.data[i]
    }
}

/// Largest entrywise |a - b| between two equal-length complex slices.
pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
