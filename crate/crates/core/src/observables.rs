//! Observables of a correlation state: surface roughness, total-number
//! moments, and left-right particle transfer.
//!
//! The surface height at site j is `ĥ_j = Σ_{k≤j} (n̂_k - ν)`; the roughness
//! is its standard deviation, evaluated at j = L/2 where it grows longest:
//!
//! ```text
//! w² = ±Σ_{m,n≤L/2} F_mnmn + (1 - νL)·Σ_{m≤L/2} D_mm + ν²L²/4
//!      - (Σ_{m≤L/2} D_mm - νL/2)²        (- fermions, + bosons)
//! ```
//!
//! `⟨N̂²⟩ = Σ_m D_mm + Σ_{m,n} F_mnnm` follows from normal-ordering `N̂²` and
//! holds for both statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CorrelationState, Statistics, SystemConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Roughness,
    TotalNumber,
    TotalNumberSq,
    Transfer,
}

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("csv parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sampled time series of the requested observables for one run.
/// Columns that were not requested are `None`; present columns have the
/// same length as `times`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub w: Option<Vec<f64>>,
    pub n_tot: Option<Vec<f64>>,
    pub n_tot_sq: Option<Vec<f64>>,
    pub p_tra: Option<Vec<f64>>,
    /// "w" for exact runs, "w_eff" for the effective dynamics.
    pub w_column: String,
    pub config: SystemConfig,
}

impl ObservableSeries {
    pub fn new(config: SystemConfig) -> Self {
        Self {
            times: Vec::new(),
            w: None,
            n_tot: None,
            n_tot_sq: None,
            p_tra: None,
            w_column: "w".to_string(),
            config,
        }
    }

    /// (t, w) pairs with w > 0, for log-log fits.
    pub fn positive_w_points(&self) -> Vec<(f64, f64)> {
        match &self.w {
            Some(w) => self
                .times
                .iter()
                .zip(w)
                .filter(|&(&t, &w)| t > 0.0 && w > 0.0)
                .map(|(&t, &w)| (t, w))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# config: {}", self.config.to_json())?;
        writeln!(out, "t,{},n_tot,n_tot_sq,p_tra", self.w_column)?;
        let cell = |col: &Option<Vec<f64>>, i: usize| match col {
            Some(v) => format!("{:.12e}", v[i]),
            None => String::new(),
        };
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:.12e},{},{},{},{}",
                self.times[i],
                cell(&self.w, i),
                cell(&self.n_tot, i),
                cell(&self.n_tot_sq, i),
                cell(&self.p_tra, i),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("csv is utf8")
    }

    pub fn read_csv<R: std::io::BufRead>(reader: R) -> Result<Self, SeriesError> {
        let mut config: Option<SystemConfig> = None;
        let mut header: Option<Vec<String>> = None;
        let mut cols: Vec<Vec<Option<f64>>> = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(json) = rest.trim().strip_prefix("config:") {
                    config = Some(
                        serde_json::from_str(json.trim())
                            .map_err(|e| SeriesError::Parse(format!("config block: {e}")))?,
                    );
                }
                continue;
            }
            if header.is_none() {
                header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
                cols = vec![Vec::new(); header.as_ref().unwrap().len()];
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(SeriesError::Parse(format!(
                    "row has {} fields, header has {}",
                    fields.len(),
                    cols.len()
                )));
            }
            for (col, field) in cols.iter_mut().zip(&fields) {
                if field.is_empty() {
                    col.push(None);
                } else {
                    let v = field
                        .parse::<f64>()
                        .map_err(|e| SeriesError::Parse(format!("{field:?}: {e}")))?;
                    col.push(Some(v));
                }
            }
        }
        let header = header.ok_or_else(|| SeriesError::Parse("missing header row".into()))?;
        let config = config.ok_or_else(|| SeriesError::Parse("missing # config: block".into()))?;
        if header.first().map(String::as_str) != Some("t") {
            return Err(SeriesError::Parse("first column must be t".into()));
        }
        let times: Vec<f64> = cols[0]
            .iter()
            .map(|v| v.ok_or_else(|| SeriesError::Parse("empty t cell".into())))
            .collect::<Result<_, _>>()?;
        let mut series = ObservableSeries::new(config);
        series.times = times;
        let dense = |col: &[Option<f64>]| -> Option<Vec<f64>> {
            if col.iter().all(Option::is_some) {
                Some(col.iter().map(|v| v.unwrap()).collect())
            } else {
                None
            }
        };
        for (name, col) in header.iter().zip(&cols).skip(1) {
            match name.as_str() {
                "w" | "w_eff" => {
                    series.w = dense(col);
                    series.w_column = name.clone();
                }
                "n_tot" => series.n_tot = dense(col),
                "n_tot_sq" => series.n_tot_sq = dense(col),
                "p_tra" => series.p_tra = dense(col),
                other => {
                    return Err(SeriesError::Parse(format!("unknown column {other:?}")))
                }
            }
        }
        Ok(series)
    }
}

/// w² of Eq.-form above from the two half-chain sums; shared between the
/// exact and effective dynamics.
pub fn roughness_squared_from_sums(
    sum_f_half: f64,
    sum_d_half: f64,
    nu: f64,
    l: usize,
    statistics: Statistics,
) -> f64 {
    let nl = nu * l as f64;
    let sign = -statistics.exchange_sign(); // fermions: -(-1) = ... see below
    // the formula carries -Σ F for fermions and +Σ F for bosons
    let fsign = match statistics {
        Statistics::Fermion => -1.0,
        Statistics::Boson => 1.0,
    };
    let _ = sign;
    fsign * sum_f_half + (1.0 - nl) * sum_d_half + nl * nl / 4.0
        - (sum_d_half - nl / 2.0).powi(2)
}

/// Surface roughness w(L, t) at j = L/2. Clamps the microscopically
/// negative w² that roundoff can produce; anything below -1e-9 is logged
/// because it signals a real inconsistency rather than roundoff.
pub fn roughness(state: &CorrelationState, statistics: Statistics, nu: f64) -> f64 {
    let l = state.l();
    let half = l / 2;
    let mut sum_f = 0.0;
    for m in 0..half {
        for n in 0..half {
            sum_f += state.f[(m, n, m, n)].re;
        }
    }
    let sum_d: f64 = (0..half).map(|m| state.d[(m, m)].re).sum();
    let w2 = roughness_squared_from_sums(sum_f, sum_d, nu, l, statistics);
    if w2 < -1e-9 {
        log::warn!("roughness: w² = {w2:.3e} < -1e-9 at t = {}; clamping", state.t);
    }
    w2.max(0.0).sqrt()
}

/// ⟨N̂_tot⟩ = Re Σ_m D_mm.
pub fn total_number(state: &CorrelationState) -> f64 {
    let l = state.l();
    let (mut re, mut im) = (0.0, 0.0);
    for m in 0..l {
        re += state.d[(m, m)].re;
        im += state.d[(m, m)].im;
    }
    if im.abs() > 1e-9 {
        log::warn!("total_number: imaginary part {im:.3e} at t = {}", state.t);
    }
    re
}

/// ⟨N̂²_tot⟩ = Re (Σ_m D_mm + Σ_{m,n} F_mnnm).
pub fn total_number_sq(state: &CorrelationState) -> f64 {
    let l = state.l();
    let mut acc = 0.0;
    for m in 0..l {
        acc += state.d[(m, m)].re;
        for n in 0..l {
            acc += state.f[(m, n, n, m)].re;
        }
    }
    acc
}

/// Net left-to-right transfer P_tra(t) from sampled occupation profiles.
/// `diagonals[k]` is the D-diagonal at sample k; `initial` at t = 0.
pub fn transfer(diagonals: &[Vec<f64>], initial: &[f64]) -> Vec<f64> {
    let l = initial.len();
    let half = l / 2;
    let nl0: f64 = initial[..half].iter().sum();
    let nr0: f64 = initial[half..].iter().sum();
    diagonals
        .iter()
        .map(|diag| {
            debug_assert_eq!(diag.len(), l);
            let nl: f64 = diag[..half].iter().sum();
            let nr: f64 = diag[half..].iter().sum();
            (nr - nr0) - (nl - nl0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_initial_correlations, Dissipator, InitialState, Statistics, SystemConfig,
    };
    use approx::assert_abs_diff_eq;

    fn cfg(l: usize, statistics: Statistics, init: InitialState) -> SystemConfig {
        SystemConfig::new(
            l,
            statistics,
            Dissipator::Dephasing { gamma: 1.0 },
            init,
            1.0,
            vec![0.0, 1.0],
        )
    }

    #[test]
    fn fock_states_have_zero_roughness_and_definite_moments() {
        for stat in [Statistics::Fermion, Statistics::Boson] {
            for init in [InitialState::Staggered, InitialState::DomainWall, InitialState::Uniform]
            {
                let config = cfg(8, stat, init);
                let state = build_initial_correlations(&config).unwrap();
                assert_eq!(roughness(&state, stat, config.nu), 0.0, "{stat:?} {init:?}");
                let n = total_number(&state);
                assert_eq!(n, config.nu * 8.0);
                assert_abs_diff_eq!(total_number_sq(&state), n * n, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn transfer_is_zero_at_t0_and_antisymmetric() {
        let initial = vec![1.0, 1.0, 0.0, 0.0];
        let p = transfer(&[initial.clone()], &initial);
        assert_eq!(p[0], 0.0);
        // moving half a particle from site 2 to site 3 transfers 1.0 net
        let p = transfer(&[vec![1.0, 0.5, 0.5, 0.0]], &initial);
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn csv_round_trip_preserves_series() {
        let config = cfg(8, Statistics::Fermion, InitialState::Staggered);
        let mut series = ObservableSeries::new(config);
        series.times = vec![0.0, 0.5, 1.0];
        series.w = Some(vec![0.0, 0.3, 0.4]);
        series.n_tot = Some(vec![4.0, 4.0, 4.0]);
        let text = series.to_csv_string();
        assert!(text.starts_with("# config: "));
        assert!(text.contains("t,w,n_tot,n_tot_sq,p_tra"));
        let back = ObservableSeries::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.times, series.times);
        assert_eq!(back.w, series.w);
        assert_eq!(back.n_tot, series.n_tot);
        assert_eq!(back.n_tot_sq, None);
        assert_eq!(back.p_tra, None);
        assert_eq!(back.config.l, 8);
    }

    #[test]
    fn csv_rejects_unknown_columns() {
        let text = "# config: {\"L\":8,\"statistics\":\"fermion\",\"dissipator\":{\"kind\":\"dephasing\",\"gamma\":1.0},\"initial_state\":\"staggered\",\"nu\":0.5,\"dt\":0.05,\"t_final\":1.0,\"sample_times\":[0.0,1.0]}\nt,w,bogus\n0.0,0.1,0.2\n";
        assert!(ObservableSeries::read_csv(text.as_bytes()).is_err());
    }
}
