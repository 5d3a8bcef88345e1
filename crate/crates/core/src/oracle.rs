//! Brute-force Lindblad evolution on the full Fock space.
//!
//! Only usable at small L, and deliberately so: every production path in
//! this crate (initial correlations, both equation-of-motion sets, the
//! observable formulas) is tested against density-matrix evolution done
//! here with none of the correlation-matrix machinery. Fermions are
//! represented with Jordan-Wigner sign strings on the occupation basis so
//! that site operators anticommute; bosons are truncated at a per-site
//! occupation cap `n_max`.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{Dissipator, Statistics, SystemConfig};
use crate::tensor::{CMat, CTen4};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("superoperator dimension {0}^2 exceeds the guard rail of 10^6")]
    DimensionGuard(usize),
    #[error("basis/config mismatch: {0}")]
    Mismatch(String),
    #[error("non-finite density matrix at t = {0}")]
    NonFinite(f64),
}

/// Occupation-number basis of `L` sites with per-site cap `n_max`
/// (`n_max = 1` for fermions), optionally restricted to total number `N`.
pub struct FockBasis {
    pub l: usize,
    pub statistics: Statistics,
    pub n_max: u8,
    pub sector: Option<usize>,
    states: Vec<Vec<u8>>,
    index: std::collections::HashMap<Vec<u8>, usize>,
}

impl FockBasis {
    pub fn new(l: usize, statistics: Statistics, n_max: u8, sector: Option<usize>) -> Self {
        let n_max = match statistics {
            Statistics::Fermion => 1,
            Statistics::Boson => n_max,
        };
        let mut states = Vec::new();
        let mut current = vec![0u8; l];
        loop {
            let total: usize = current.iter().map(|&n| n as usize).sum();
            if sector.map_or(true, |n| total == n) {
                states.push(current.clone());
            }
            // odometer increment over the mixed-radix occupation list
            let mut site = 0;
            loop {
                if site == l {
                    let index = states
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (s.clone(), i))
                        .collect();
                    return Self { l, statistics, n_max, sector, states, index };
                }
                if current[site] < n_max {
                    current[site] += 1;
                    break;
                }
                current[site] = 0;
                site += 1;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occupations(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Annihilation operator a_j (0-based site) as a dense dim×dim matrix.
    /// Fermionic operators carry the (-1)^{Σ_{k<j} n_k} string.
    pub fn annihilation(&self, j: usize) -> CMat {
        let d = self.dim();
        let mut op = CMat::zeros(d);
        for (col, occ) in self.states.iter().enumerate() {
            let n = occ[j];
            if n == 0 {
                continue;
            }
            let mut target = occ.clone();
            target[j] = n - 1;
            // a sector-restricted basis has no image state; entry is dropped
            let Some(row) = self.index_of(&target) else { continue };
            let amp = match self.statistics {
                Statistics::Fermion => {
                    let string: u32 = occ[..j].iter().map(|&x| x as u32).sum();
                    if string % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Statistics::Boson => (n as f64).sqrt(),
            };
            op[(row, col)] = C64::new(amp, 0.0);
        }
        op
    }

    pub fn creation(&self, j: usize) -> CMat {
        dagger(&self.annihilation(j))
    }

    /// Number operator n̂_j, diagonal in this basis.
    pub fn number(&self, j: usize) -> CMat {
        let mut op = CMat::zeros(self.dim());
        for (i, occ) in self.states.iter().enumerate() {
            op[(i, i)] = C64::new(occ[j] as f64, 0.0);
        }
        op
    }

    /// The hopping Hamiltonian -Σ_{j=1}^{L-1} (a†_{j+1} a_j + h.c.), built
    /// directly from matrix elements so it also works on fixed-N sectors
    /// (where products of truncated a-matrices would vanish). For adjacent
    /// fermionic hops the Jordan-Wigner strings cancel.
    pub fn hopping_hamiltonian(&self) -> CMat {
        let d = self.dim();
        let mut h = CMat::zeros(d);
        for (col, occ) in self.states.iter().enumerate() {
            for j in 0..self.l - 1 {
                // a†_{j+1} a_j
                if occ[j] == 0 || occ[j + 1] >= self.n_max {
                    continue;
                }
                let mut target = occ.clone();
                target[j] -= 1;
                target[j + 1] += 1;
                let Some(row) = self.index_of(&target) else { continue };
                let amp = match self.statistics {
                    Statistics::Fermion => 1.0,
                    Statistics::Boson => {
                        (occ[j] as f64).sqrt() * (occ[j + 1] as f64 + 1.0).sqrt()
                    }
                };
                let v = C64::new(-amp, 0.0);
                h[(row, col)] += v;
                h[(col, row)] += v.conj();
            }
        }
        h
    }

    /// Projector |occ⟩⟨occ| of a Fock product state.
    pub fn pure_state(&self, occ: &[u8]) -> Option<DensityMatrix> {
        let i = self.index_of(occ)?;
        let mut rho = CMat::zeros(self.dim());
        rho[(i, i)] = ONE;
        Some(DensityMatrix { t: 0.0, rho })
    }

    /// Lift a density matrix from this (sector-restricted) basis into a
    /// larger one. Needed before [`correlations_from_rho`]: operator
    /// products like a_p a_q pass through states outside a fixed-N sector,
    /// so extraction is only faithful in an unrestricted basis.
    pub fn embed(&self, rho: &DensityMatrix, full: &FockBasis) -> Option<DensityMatrix> {
        let map: Option<Vec<usize>> =
            self.states.iter().map(|occ| full.index_of(occ)).collect();
        let map = map?;
        let mut out = CMat::zeros(full.dim());
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out[(map[i], map[j])] = rho.rho[(i, j)];
            }
        }
        Some(DensityMatrix { t: rho.t, rho: out })
    }
}

pub fn dagger(a: &CMat) -> CMat {
    let d = a.l();
    let mut out = CMat::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = a[(j, i)].conj();
        }
    }
    out
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let d = a.l();
    assert_eq!(d, b.l());
    let mut out = CMat::zeros(d);
    for i in 0..d {
        for k in 0..d {
            let aik = a[(i, k)];
            if aik == ZERO {
                continue;
            }
            for j in 0..d {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    out
}

/// tr(a·b) without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let d = a.l();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub t: f64,
    pub rho: CMat,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.rho.l()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.rho[(i, i)]).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.rho.hermiticity_defect()
    }

    /// Smallest eigenvalue, estimated by power iteration on c·I - ρ.
    /// Good to far better than the 1e-9 positivity tolerance it is used
    /// to check, since ρ's spectrum lives in [0, 1].
    pub fn min_eigenvalue_estimate(&self) -> f64 {
        let d = self.dim();
        let c = 2.0;
        let mut v: Vec<C64> =
            (0..d).map(|i| C64::new(1.0 + (i as f64 * 0.37).sin(), 0.0)).collect();
        for _ in 0..300 {
            let mut w = vec![ZERO; d];
            for (i, wi) in w.iter_mut().enumerate() {
                let mut acc = c * v[i];
                for j in 0..d {
                    acc -= self.rho[(i, j)] * v[j];
                }
                *wi = acc;
            }
            let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for x in &mut w {
                *x /= norm;
            }
            v = w;
        }
        // Rayleigh quotient refinement of the dominant eigenvalue of cI - ρ
        let mut num = ZERO;
        for i in 0..d {
            let mut acc = c * v[i];
            for j in 0..d {
                acc -= self.rho[(i, j)] * v[j];
            }
            num += v[i].conj() * acc;
        }
        c - num.re
    }
}

/// Vectorized Lindblad generator in CSR form, acting on row-major vec(ρ).
pub struct SuperOp {
    dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<C64>,
}

impl SuperOp {
    /// Hilbert-space dimension d; the operator itself is d²×d².
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let d2 = self.dim * self.dim;
        assert_eq!(x.len(), d2);
        assert_eq!(y.len(), d2);
        for row in 0..d2 {
            let mut acc = ZERO;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            y[row] = acc;
        }
    }

    fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        let d2 = dim * dim;
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut col = Vec::with_capacity(trip.len());
        let mut val: Vec<C64> = Vec::with_capacity(trip.len());
        let mut rows = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            if rows.last() == Some(&r) && col.last() == Some(&c) {
                *val.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col.push(c);
                val.push(v);
            }
        }
        let mut row_ptr = vec![0usize; d2 + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..d2 {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, col, val }
    }
}

struct TripletBuilder {
    dim: usize,
    trip: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    fn new(dim: usize) -> Self {
        Self { dim, trip: Vec::new() }
    }

    fn nonzeros(a: &CMat) -> Vec<(usize, usize, C64)> {
        let d = a.l();
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if a[(i, j)] != ZERO {
                    out.push((i, j, a[(i, j)]));
                }
            }
        }
        out
    }

    /// coeff · A ρ B, vectorized row-major: S[(i,j),(k,l)] += coeff·A_ik·B_lj.
    fn add_sandwich(&mut self, a: &CMat, b: &CMat, coeff: C64) {
        let d = self.dim;
        for &(i, k, av) in &Self::nonzeros(a) {
            for &(l, j, bv) in &Self::nonzeros(b) {
                self.trip.push((i * d + j, k * d + l, coeff * av * bv));
            }
        }
    }

    /// coeff · A ρ.
    fn add_left(&mut self, a: &CMat, coeff: C64) {
        let d = self.dim;
        for &(i, k, av) in &Self::nonzeros(a) {
            for j in 0..d {
                self.trip.push((i * d + j, k * d + j, coeff * av));
            }
        }
    }

    /// coeff · ρ B.
    fn add_right(&mut self, b: &CMat, coeff: C64) {
        let d = self.dim;
        for &(l, j, bv) in &Self::nonzeros(b) {
            for i in 0..d {
                self.trip.push((i * d + j, i * d + l, coeff * bv));
            }
        }
    }
}

/// Vectorized generator of Eq.-of-motion dρ/dt = -i[H,ρ] + Σ_k D[J_k]ρ with
/// the hopping Hamiltonian and the config's dissipator.
pub fn build_lindbladian(config: &SystemConfig, basis: &FockBasis) -> Result<SuperOp, OracleError> {
    if basis.l != config.l {
        return Err(OracleError::Mismatch(format!(
            "basis has L = {}, config has L = {}",
            basis.l, config.l
        )));
    }
    if basis.statistics != config.statistics {
        return Err(OracleError::Mismatch("statistics differ".into()));
    }
    let d = basis.dim();
    if d * d > 1_000_000 {
        return Err(OracleError::DimensionGuard(d));
    }

    let h = basis.hopping_hamiltonian();

    let mut jumps: Vec<CMat> = Vec::new();
    match config.dissipator {
        Dissipator::Dephasing { gamma } => {
            let s = gamma.sqrt();
            for j in 0..config.l {
                let mut n = basis.number(j);
                for x in n.as_mut_slice() {
                    *x *= s;
                }
                jumps.push(n);
            }
        }
        Dissipator::InOut { gamma_in, gamma_out } => {
            if basis.sector.is_some() {
                return Err(OracleError::Mismatch(
                    "in/out flow leaves any fixed-N sector".into(),
                ));
            }
            let (si, so) = (gamma_in.sqrt(), gamma_out.sqrt());
            for j in 0..config.l {
                let a = basis.annihilation(j);
                let mut up = dagger(&a);
                for x in up.as_mut_slice() {
                    *x *= si;
                }
                jumps.push(up);
                let mut down = a;
                for x in down.as_mut_slice() {
                    *x *= so;
                }
                jumps.push(down);
            }
        }
    }

    let mut builder = TripletBuilder::new(d);
    builder.add_left(&h, C64::new(0.0, -1.0));
    builder.add_right(&h, C64::new(0.0, 1.0));
    let half = C64::new(-0.5, 0.0);
    for j in &jumps {
        let jd = dagger(j);
        let jdj = matmul(&jd, j);
        builder.add_sandwich(j, &jd, ONE);
        builder.add_left(&jdj, half);
        builder.add_right(&jdj, half);
    }
    Ok(SuperOp::from_triplets(d, builder.trip))
}

/// Fixed-step RK4 on vec(ρ), sampled at the first step boundary at or after
/// each requested time. No trace renormalization: trace drift is a test
/// signal, not something to hide.
pub fn evolve_rho(
    rho0: &DensityMatrix,
    superop: &SuperOp,
    t_grid: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>, OracleError> {
    assert!(dt > 0.0);
    let d = rho0.dim();
    let d2 = d * d;
    let mut y: Vec<C64> = rho0.rho.as_slice().to_vec();
    let mut k = vec![ZERO; d2];
    let mut tmp = vec![ZERO; d2];
    let mut acc = vec![ZERO; d2];
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t = rho0.t;
    let mut step_index: u64 = 0;
    let t0 = rho0.t;

    let mut want = t_grid.iter().copied().peekable();
    let snapshot = |t: f64, y: &[C64]| DensityMatrix {
        t,
        rho: CMat::from_vec(d, y.to_vec()),
    };
    while let Some(&tw) = want.peek() {
        if tw <= t + 1e-12 {
            out.push(snapshot(t, &y));
            want.next();
            continue;
        }
        superop.apply(&y, &mut k);
        for i in 0..d2 {
            acc[i] = y[i] + k[i] * (dt / 6.0);
            tmp[i] = y[i] + k[i] * (dt / 2.0);
        }
        superop.apply(&tmp, &mut k);
        for i in 0..d2 {
            acc[i] += k[i] * (dt / 3.0);
            tmp[i] = y[i] + k[i] * (dt / 2.0);
        }
        superop.apply(&tmp, &mut k);
        for i in 0..d2 {
            acc[i] += k[i] * (dt / 3.0);
            tmp[i] = y[i] + k[i] * dt;
        }
        superop.apply(&tmp, &mut k);
        for i in 0..d2 {
            y[i] = acc[i] + k[i] * (dt / 6.0);
        }
        step_index += 1;
        t = t0 + step_index as f64 * dt;
        if !y[0].re.is_finite() {
            return Err(OracleError::NonFinite(t));
        }
    }
    Ok(out)
}

/// Extract (D, F) from a density matrix: D_mn = tr(ρ a†_m a_n),
/// F_mnpq = tr(ρ a†_m a†_n a_p a_q).
///
/// `basis` must be unrestricted: the operator products visit states outside
/// a fixed-N sector. Use [`FockBasis::embed`] first when evolving in one.
pub fn correlations_from_rho(rho: &DensityMatrix, basis: &FockBasis) -> (CMat, CTen4) {
    debug_assert!(basis.sector.is_none(), "extraction needs the full basis");
    let l = basis.l;
    let a_ops: Vec<CMat> = (0..l).map(|j| basis.annihilation(j)).collect();
    let adags: Vec<CMat> = a_ops.iter().map(dagger).collect();

    let mut d_mat = CMat::zeros(l);
    for m in 0..l {
        let rho_adag = matmul(&rho.rho, &adags[m]);
        for n in 0..l {
            d_mat[(m, n)] = trace_prod(&rho_adag, &a_ops[n]);
        }
    }

    // pair products: P_mn = a†_m a†_n, Q_pq = a_p a_q
    let mut f = CTen4::zeros(l);
    for m in 0..l {
        for n in 0..l {
            let p_mn = matmul(&adags[m], &adags[n]);
            let rho_p = matmul(&rho.rho, &p_mn);
            for p in 0..l {
                let rp = matmul(&rho_p, &a_ops[p]);
                for q in 0..l {
                    f[(m, n, p, q)] = trace_prod(&rp, &a_ops[q]);
                }
            }
        }
    }
    (d_mat, f)
}

/// Convenience wrapper used by tests and `oracle-check`: evolve the config's
/// initial Fock state and return correlation matrices on the sample grid.
pub fn oracle_correlations(
    config: &SystemConfig,
    n_max: u8,
    t_grid: &[f64],
) -> Result<Vec<(f64, CMat, CTen4)>, OracleError> {
    let basis = FockBasis::new(config.l, config.statistics, n_max, None);
    let occ: Vec<u8> = config
        .initial_state
        .occupations(config.l)
        .iter()
        .map(|&x| x as u8)
        .collect();
    let rho0 = basis
        .pure_state(&occ)
        .ok_or_else(|| OracleError::Mismatch("initial state not in basis".into()))?;
    let superop = build_lindbladian(config, &basis)?;
    let series = evolve_rho(&rho0, &superop, t_grid, config.dt)?;
    Ok(series
        .into_iter()
        .map(|rho| {
            let (d, f) = correlations_from_rho(&rho, &basis);
            (rho.t, d, f)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_initial_correlations, InitialState};
    use crate::tensor::max_abs_diff;
    use approx::assert_abs_diff_eq;

    fn config(
        l: usize,
        statistics: Statistics,
        dissipator: Dissipator,
        initial_state: InitialState,
    ) -> SystemConfig {
        SystemConfig::new(l, statistics, dissipator, initial_state, 5.0, vec![0.0, 5.0])
    }

    #[test]
    fn fermion_operators_anticommute() {
        let basis = FockBasis::new(4, Statistics::Fermion, 1, None);
        assert_eq!(basis.dim(), 16);
        for i in 0..4 {
            for j in 0..4 {
                let ai = basis.annihilation(i);
                let aj = basis.annihilation(j);
                let adj = basis.creation(j);
                // {a_i, a_j} = 0
                let mut anti = matmul(&ai, &aj);
                let ba = matmul(&aj, &ai);
                for (x, y) in anti.as_mut_slice().iter_mut().zip(ba.as_slice()) {
                    *x += y;
                }
                assert!(anti.as_slice().iter().all(|x| x.norm() < 1e-14));
                // {a_i, a†_j} = δ_ij
                let mut anti = matmul(&ai, &adj);
                let ba = matmul(&adj, &ai);
                for (x, y) in anti.as_mut_slice().iter_mut().zip(ba.as_slice()) {
                    *x += y;
                }
                for r in 0..16 {
                    for c in 0..16 {
                        let expect = if r == c && i == j { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(anti[(r, c)].re, expect, epsilon = 1e-14);
                        assert_abs_diff_eq!(anti[(r, c)].im, 0.0, epsilon = 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn boson_commutator_holds_below_truncation() {
        let basis = FockBasis::new(3, Statistics::Boson, 3, None);
        let a = basis.annihilation(1);
        let adag = basis.creation(1);
        let mut comm = matmul(&a, &adag);
        let ba = matmul(&adag, &a);
        for (x, y) in comm.as_mut_slice().iter_mut().zip(ba.as_slice()) {
            *x -= y;
        }
        // [a, a†] = 1 on all states except those already at the cap
        for (i, occ) in basis.states.iter().enumerate() {
            if occ[1] < 3 {
                assert_abs_diff_eq!(comm[(i, i)].re, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn two_site_rabi_oscillation() {
        // single fermion, no dissipation: D_11(t) = cos²(t)
        let cfg = config(
            2,
            Statistics::Fermion,
            Dissipator::Dephasing { gamma: 0.0 },
            InitialState::DomainWall,
        );
        let basis = FockBasis::new(2, Statistics::Fermion, 1, None);
        let rho0 = basis.pure_state(&[1, 0]).unwrap();
        let superop = build_lindbladian(&cfg, &basis).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let series = evolve_rho(&rho0, &superop, &grid, 0.001).unwrap();
        for rho in &series {
            let (d, _) = correlations_from_rho(rho, &basis);
            assert_abs_diff_eq!(d[(0, 0)].re, rho.t.cos().powi(2), epsilon = 1e-7);
            assert_abs_diff_eq!((rho.trace() - ONE).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn dephasing_keeps_diagonal_states_fixed() {
        let cfg = config(
            4,
            Statistics::Fermion,
            Dissipator::Dephasing { gamma: 1.3 },
            InitialState::Staggered,
        );
        let basis = FockBasis::new(4, Statistics::Fermion, 1, None);
        let rho0 = basis.pure_state(&[0, 1, 0, 1]).unwrap();
        let superop = build_lindbladian(&cfg, &basis).unwrap();
        // dissipator-only generator: drop the Hamiltonian by comparing
        // populations, which the dephasing part alone cannot change.
        let series = evolve_rho(&rho0, &superop, &[0.0, 0.5], cfg.dt).unwrap();
        let n_tot = |rho: &DensityMatrix| {
            let (d, _) = correlations_from_rho(rho, &basis);
            (0..4).map(|m| d[(m, m)].re).sum::<f64>()
        };
        assert_abs_diff_eq!(n_tot(&series[0]), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n_tot(&series[1]), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn trace_preserved_and_positivity_kept() {
        for dissipator in [
            Dissipator::Dephasing { gamma: 0.7 },
            Dissipator::InOut { gamma_in: 0.2, gamma_out: 0.3 },
        ] {
            let cfg = config(4, Statistics::Fermion, dissipator, InitialState::Staggered);
            let basis = FockBasis::new(4, Statistics::Fermion, 1, None);
            let rho0 = basis.pure_state(&[0, 1, 0, 1]).unwrap();
            let superop = build_lindbladian(&cfg, &basis).unwrap();
            let series = evolve_rho(&rho0, &superop, &[5.0], cfg.dt).unwrap();
            let rho = &series[0];
            assert!((rho.trace() - ONE).norm() < 1e-9, "trace drift");
            assert!(rho.hermiticity_defect() < 1e-10);
            assert!(rho.min_eigenvalue_estimate() > -1e-9);
        }
    }

    #[test]
    fn mean_number_follows_rate_equation() {
        // fermion in/out: d<N>/dt = γ_in L - (γ_in + γ_out) <N>
        let (gin, gout) = (0.2, 0.2);
        let cfg = config(
            4,
            Statistics::Fermion,
            Dissipator::InOut { gamma_in: gin, gamma_out: gout },
            InitialState::Staggered,
        );
        let basis = FockBasis::new(4, Statistics::Fermion, 1, None);
        let rho0 = basis.pure_state(&[0, 1, 0, 1]).unwrap();
        let superop = build_lindbladian(&cfg, &basis).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let series = evolve_rho(&rho0, &superop, &grid, cfg.dt).unwrap();
        let l = 4.0;
        let rate = gin + gout;
        let n_inf = gin * l / rate;
        for rho in &series {
            let (d, _) = correlations_from_rho(rho, &basis);
            let n: f64 = (0..4).map(|m| d[(m, m)].re).sum();
            let expect = n_inf + (2.0 - n_inf) * (-rate * rho.t).exp();
            assert_abs_diff_eq!(n, expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn initial_correlations_match_definitional_extraction() {
        for (stat, n_max) in [(Statistics::Fermion, 1u8), (Statistics::Boson, 2u8)] {
            for init in [InitialState::Staggered, InitialState::DomainWall, InitialState::Uniform]
            {
                let cfg = config(4, stat, Dissipator::Dephasing { gamma: 1.0 }, init);
                let basis = FockBasis::new(4, stat, n_max, None);
                let occ: Vec<u8> = init.occupations(4).iter().map(|&x| x as u8).collect();
                let rho = basis.pure_state(&occ).unwrap();
                let (d, f) = correlations_from_rho(&rho, &basis);
                let built = build_initial_correlations(&cfg).unwrap();
                assert!(
                    max_abs_diff(d.as_slice(), built.d.as_slice()) < 1e-13,
                    "{stat:?} {init:?} D"
                );
                assert!(
                    max_abs_diff(f.as_slice(), built.f.as_slice()) < 1e-13,
                    "{stat:?} {init:?} F"
                );
            }
        }
    }

    #[test]
    fn maximally_mixed_two_site_fermion() {
        let basis = FockBasis::new(2, Statistics::Fermion, 1, None);
        let d = basis.dim();
        let mut rho = CMat::zeros(d);
        for i in 0..d {
            rho[(i, i)] = C64::new(1.0 / d as f64, 0.0);
        }
        let rho = DensityMatrix { t: 0.0, rho };
        let (dm, f) = correlations_from_rho(&rho, &basis);
        assert_abs_diff_eq!(dm[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(dm[(1, 1)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(dm[(0, 1)].norm(), 0.0, epsilon = 1e-14);
        assert!(f.hermiticity_defect() < 1e-14);
        assert!(f.exchange_defect(-1.0) < 1e-14);
    }

    #[test]
    fn dimension_guard_fires() {
        let cfg = config(
            10,
            Statistics::Fermion,
            Dissipator::Dephasing { gamma: 1.0 },
            InitialState::Staggered,
        );
        let basis = FockBasis::new(10, Statistics::Fermion, 1, None);
        assert!(matches!(
            build_lindbladian(&cfg, &basis),
            Err(OracleError::DimensionGuard(_))
        ));
    }

    #[test]
    fn sector_restriction_matches_full_space_for_dephasing() {
        let cfg = config(
            4,
            Statistics::Fermion,
            Dissipator::Dephasing { gamma: 0.8 },
            InitialState::Staggered,
        );
        let full = FockBasis::new(4, Statistics::Fermion, 1, None);
        let sector = FockBasis::new(4, Statistics::Fermion, 1, Some(2));
        assert_eq!(sector.dim(), 6);
        let occ = [0u8, 1, 0, 1];
        let run = |basis: &FockBasis| {
            let rho0 = basis.pure_state(&occ).unwrap();
            let superop = build_lindbladian(&cfg, basis).unwrap();
            evolve_rho(&rho0, &superop, &[2.0], cfg.dt).unwrap().remove(0)
        };
        let (d_full, f_full) = correlations_from_rho(&run(&full), &full);
        let embedded = run(&sector).clone();
        let embedded = sector.embed(&embedded, &full).unwrap();
        let (d_sec, f_sec) = correlations_from_rho(&embedded, &full);
        assert!(max_abs_diff(d_full.as_slice(), d_sec.as_slice()) < 1e-10);
        assert!(max_abs_diff(f_full.as_slice(), f_sec.as_slice()) < 1e-10);
    }
}
