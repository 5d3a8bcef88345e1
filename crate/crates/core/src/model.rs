//! System definition: lattice, particle statistics, dissipator, initial state.
//!
//! The lattice is the open chain of sites `1..=L` (L even) with
//! nearest-neighbor hopping `H = -Σ_{j=1}^{L-1} (a†_{j+1} a_j + a†_j a_{j+1})`.
//! Dissipation is on-site, either dephasing (jump operators `√γ n̂_j`) or
//! particle in/out-flow (`√γ_in a†_j`, `√γ_out a_j`).
//!
//! All dynamics in this crate acts on the two-point matrix
//! `D_mn = ⟨a†_m a_n⟩` and the four-point tensor `F_mnpq = ⟨a†_m a†_n a_p a_q⟩`
//! rather than on a density matrix; [`build_initial_correlations`] produces
//! the exact (D, F) of the three Fock product states used throughout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{CMat, CTen4};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    Fermion,
    Boson,
}

impl Statistics {
    /// Sign picked up when exchanging two creation (or two annihilation)
    /// operators: -1 for fermions, +1 for bosons.
    pub fn exchange_sign(self) -> f64 {
        match self {
            Statistics::Fermion => -1.0,
            Statistics::Boson => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dissipator {
    Dephasing { gamma: f64 },
    InOut { gamma_in: f64, gamma_out: f64 },
}

impl Dissipator {
    /// Largest rate entering the generator; used by the step-size policy.
    pub fn max_rate(&self) -> f64 {
        match *self {
            Dissipator::Dephasing { gamma } => gamma,
            Dissipator::InOut { gamma_in, gamma_out } => gamma_in.max(gamma_out),
        }
    }

    pub fn is_dephasing(&self) -> bool {
        matches!(self, Dissipator::Dephasing { .. })
    }

    fn rate_violations(&self, out: &mut Vec<String>) {
        match *self {
            Dissipator::Dephasing { gamma } => {
                if gamma < 0.0 {
                    out.push("rates must be nonnegative (gamma < 0)".into());
                }
            }
            Dissipator::InOut { gamma_in, gamma_out } => {
                if gamma_in < 0.0 || gamma_out < 0.0 {
                    out.push("rates must be nonnegative (gamma_in/gamma_out < 0)".into());
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Every even site occupied (`|SS⟩`), filling 1/2.
    Staggered,
    /// Left half of the chain occupied (`|DWS⟩`), filling 1/2.
    DomainWall,
    /// Every site occupied (`|US⟩`), filling 1.
    Uniform,
}

impl InitialState {
    /// The filling factor ν the height operator is defined with.
    pub fn default_filling(self) -> f64 {
        match self {
            InitialState::Staggered | InitialState::DomainWall => 0.5,
            InitialState::Uniform => 1.0,
        }
    }

    /// Site occupations ν_m for 1-based sites m = 1..=l, returned 0-indexed.
    pub fn occupations(self, l: usize) -> Vec<f64> {
        (1..=l)
            .map(|site| {
                let occupied = match self {
                    InitialState::Staggered => site % 2 == 0,
                    InitialState::DomainWall => site <= l / 2,
                    InitialState::Uniform => true,
                };
                if occupied {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("config file: {0}")]
    ConfigFile(String),
}

/// Fully resolved run description. Construct via [`SystemConfig::new`] or
/// [`SystemConfig::from_json_str`]; both apply the ν and dt defaults.
#[derive(Clone, Debug, Serialize)]
pub struct SystemConfig {
    /// Lattice size (number of sites), even and ≥ 4.
    #[serde(rename = "L")]
    pub l: usize,
    pub statistics: Statistics,
    pub dissipator: Dissipator,
    pub initial_state: InitialState,
    /// Initial filling factor; enters the height operator and the roughness
    /// formula. Defaults to the value implied by `initial_state`.
    pub nu: f64,
    /// Integrator step.
    pub dt: f64,
    pub t_final: f64,
    /// Strictly increasing observation times in [0, t_final]. Samples are
    /// taken at the first integrator step boundary at or after each entry.
    pub sample_times: Vec<f64>,
}

impl SystemConfig {
    /// Default step-size policy: `min(0.05, 0.05 / max(1, γ_max))`.
    ///
    /// The stiffest term in either equation set is the linear damping of F,
    /// with rate at most 4γ_max; this keeps RK4 far inside its stability
    /// region for any rate choice.
    pub fn default_dt(dissipator: &Dissipator) -> f64 {
        0.05_f64.min(0.05 / dissipator.max_rate().max(1.0))
    }

    pub fn new(
        l: usize,
        statistics: Statistics,
        dissipator: Dissipator,
        initial_state: InitialState,
        t_final: f64,
        sample_times: Vec<f64>,
    ) -> Self {
        Self {
            l,
            statistics,
            dissipator,
            initial_state,
            nu: initial_state.default_filling(),
            dt: Self::default_dt(&dissipator),
            t_final,
            sample_times,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// All invariant violations, empty iff the config is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.l % 2 != 0 {
            v.push("L must be even".into());
        }
        if self.l < 4 {
            v.push("L must be >= 4".into());
        }
        self.dissipator.rate_violations(&mut v);
        if !(self.dt > 0.0) {
            v.push("dt must be positive".into());
        }
        if !(self.t_final > 0.0) {
            v.push("t_final must be positive".into());
        }
        if !self.sample_times.windows(2).all(|w| w[0] < w[1]) {
            v.push("sample_times must be strictly increasing".into());
        }
        if self
            .sample_times
            .iter()
            .any(|&t| t < 0.0 || t > self.t_final)
        {
            v.push("sample_times must lie in [0, t_final]".into());
        }
        if self.sample_times.is_empty() {
            v.push("sample_times must be nonempty".into());
        }
        let n_particles: f64 = self.initial_state.occupations(self.l).iter().sum();
        if (self.nu * self.l as f64 - n_particles).abs() > 1e-9 {
            v.push(format!(
                "nu*L = {} must equal the initial particle number {}",
                self.nu * self.l as f64,
                n_particles
            ));
        }
        v
    }

    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidConfig(v.join("; ")))
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let file: ConfigFile =
            serde_json::from_str(s).map_err(|e| ModelError::ConfigFile(e.to_string()))?;
        file.resolve()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// On-disk config schema. Unknown keys are rejected so that typos fail
/// loudly instead of silently falling back to defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "L")]
    l: usize,
    statistics: Statistics,
    dissipator: DissipatorFile,
    initial_state: InitialState,
    #[serde(default)]
    nu: Option<f64>,
    #[serde(default)]
    dt: Option<f64>,
    t_final: f64,
    #[serde(default)]
    sample_times: Option<Vec<f64>>,
    #[serde(default)]
    sample_spec: Option<SampleSpec>,
}

// serde's deny_unknown_fields does not compose with internally tagged enums,
// so the dissipator is parsed as a plain struct and checked by hand.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DissipatorFile {
    kind: String,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    gamma_in: Option<f64>,
    #[serde(default)]
    gamma_out: Option<f64>,
}

impl DissipatorFile {
    fn resolve(&self) -> Result<Dissipator, ModelError> {
        match self.kind.as_str() {
            "dephasing" => {
                if self.gamma_in.is_some() || self.gamma_out.is_some() {
                    return Err(ModelError::ConfigFile(
                        "dephasing takes `gamma`, not `gamma_in`/`gamma_out`".into(),
                    ));
                }
                let gamma = self.gamma.ok_or_else(|| {
                    ModelError::ConfigFile("dephasing requires `gamma`".into())
                })?;
                Ok(Dissipator::Dephasing { gamma })
            }
            "in_out" => {
                if self.gamma.is_some() {
                    return Err(ModelError::ConfigFile(
                        "in_out takes `gamma_in`/`gamma_out`, not `gamma`".into(),
                    ));
                }
                let gamma_in = self.gamma_in.ok_or_else(|| {
                    ModelError::ConfigFile("in_out requires `gamma_in`".into())
                })?;
                let gamma_out = self.gamma_out.ok_or_else(|| {
                    ModelError::ConfigFile("in_out requires `gamma_out`".into())
                })?;
                Ok(Dissipator::InOut { gamma_in, gamma_out })
            }
            other => Err(ModelError::ConfigFile(format!(
                "unknown dissipator kind {other:?} (expected \"dephasing\" or \"in_out\")"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleSpec {
    grid: String,
    count: usize,
    #[serde(default)]
    t_min: Option<f64>,
}

impl SampleSpec {
    fn resolve(&self, t_final: f64) -> Result<Vec<f64>, ModelError> {
        if self.count < 2 {
            return Err(ModelError::ConfigFile("sample_spec.count must be >= 2".into()));
        }
        match self.grid.as_str() {
            "linear" => Ok((0..self.count)
                .map(|i| t_final * i as f64 / (self.count - 1) as f64)
                .collect()),
            "log" => {
                let t_min = self.t_min.ok_or_else(|| {
                    ModelError::ConfigFile("log sample_spec requires `t_min`".into())
                })?;
                if !(t_min > 0.0 && t_min < t_final) {
                    return Err(ModelError::ConfigFile(
                        "log sample_spec needs 0 < t_min < t_final".into(),
                    ));
                }
                // t = 0 included explicitly; the log grid starts at t_min.
                let mut ts = vec![0.0];
                let (a, b) = (t_min.ln(), t_final.ln());
                ts.extend((0..self.count).map(|i| {
                    let x = (a + (b - a) * i as f64 / (self.count - 1) as f64).exp();
                    x.min(t_final)
                }));
                *ts.last_mut().unwrap() = t_final;
                Ok(ts)
            }
            other => Err(ModelError::ConfigFile(format!(
                "unknown sample grid {other:?} (expected \"linear\" or \"log\")"
            ))),
        }
    }
}

impl ConfigFile {
    fn resolve(self) -> Result<SystemConfig, ModelError> {
        let dissipator = self.dissipator.resolve()?;
        let sample_times = match (self.sample_times, self.sample_spec) {
            (Some(ts), None) => ts,
            (None, Some(spec)) => spec.resolve(self.t_final)?,
            (Some(_), Some(_)) => {
                return Err(ModelError::ConfigFile(
                    "give either sample_times or sample_spec, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ModelError::ConfigFile(
                    "one of sample_times or sample_spec is required".into(),
                ))
            }
        };
        let cfg = SystemConfig {
            l: self.l,
            statistics: self.statistics,
            dissipator,
            initial_state: self.initial_state,
            nu: self.nu.unwrap_or_else(|| self.initial_state.default_filling()),
            dt: self.dt.unwrap_or_else(|| SystemConfig::default_dt(&dissipator)),
            t_final: self.t_final,
            sample_times,
        };
        cfg.ensure_valid()?;
        Ok(cfg)
    }
}

/// Time slice of the correlation data the dynamics acts on.
#[derive(Clone, Debug)]
pub struct CorrelationState {
    pub t: f64,
    /// D_mn = ⟨a†_m a_n⟩.
    pub d: CMat,
    /// F_mnpq = ⟨a†_m a†_n a_p a_q⟩.
    pub f: CTen4,
}

impl CorrelationState {
    pub fn l(&self) -> usize {
        self.d.l()
    }
}

/// Exact (D, F) of the Fock product state selected by the config, at t = 0.
///
/// With site occupations ν_m ∈ {0, 1} the nonzero four-point entries are
/// `F_mnnm = ν_m ν_n` and `F_mnmn = s·ν_m ν_n` for m ≠ n (s the exchange
/// sign); the bosonic same-site entry `F_mmmm = ν_m(ν_m - 1)` vanishes for
/// these occupations.
pub fn build_initial_correlations(config: &SystemConfig) -> Result<CorrelationState, ModelError> {
    if config.l % 2 != 0 || config.l < 4 {
        return Err(ModelError::InvalidConfig("L must be even and >= 4".into()));
    }
    let mut rate_issues = Vec::new();
    config.dissipator.rate_violations(&mut rate_issues);
    if !rate_issues.is_empty() {
        return Err(ModelError::InvalidConfig(rate_issues.join("; ")));
    }

    let l = config.l;
    let occ = config.initial_state.occupations(l);
    let d = CMat::from_diag(&occ);
    let sign = config.statistics.exchange_sign();
    let mut f = CTen4::zeros(l);
    for m in 0..l {
        for n in 0..l {
            if m == n {
                continue;
            }
            let w = occ[m] * occ[n];
            if w == 0.0 {
                continue;
            }
            f[(m, n, n, m)] = Complex64::new(w, 0.0);
            f[(m, n, m, n)] = Complex64::new(sign * w, 0.0);
        }
    }
    Ok(CorrelationState { t: 0.0, d, f })
}
