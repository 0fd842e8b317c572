//! Open-system propagation of the detection cycle.
//!
//! Two backends share one output contract ([`PopulationSeries`]):
//!
//! - [`propagate_cycle`] evolves the full N-cavity density matrix with a
//!   first-order discretized Lindblad equation. Practical for N <= 3.
//! - [`effective_propagate_cycle`] follows only the collective mode that the
//!   inverse ED maps back onto the primary cavity, with loss rates projected
//!   onto that mode. Works for any N.
//!
//! Signal runs switch heating off; background runs switch the drive off.
//! The readout is the probability of finding `m + 1` photons in the primary
//! cavity after the inverse ED. It is evaluated in the Heisenberg picture, so
//! one forward run yields the readout for every integration time on the grid.

mod dlme;
mod effective;
mod full;
mod lossy_ed;

pub use dlme::{dlme_step, Channel, Jump};
pub use effective::effective_propagate_cycle;
pub use full::{propagate_cycle, propagate_cycle_state};
pub use lossy_ed::{calibrate_multiplier, lossy_ed_apply, swap_fidelity};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::EdScheme;

/// Steps with `dt * (total rate on one mode)` above this are rejected.
pub const STABILITY_LIMIT: f64 = 0.05;
pub const DEFAULT_LEAK_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_WINDOW_SUBSTEPS: usize = 256;

/// Per-cavity Markovian loss rates, rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gamma_up: Vec<f64>,
    pub gamma_down: Vec<f64>,
    pub gamma_phi: Vec<f64>,
}

impl NoiseModel {
    pub fn new(gamma_up: Vec<f64>, gamma_down: Vec<f64>, gamma_phi: Vec<f64>) -> Result<Self> {
        let model = Self { gamma_up, gamma_down, gamma_phi };
        model.validate()?;
        Ok(model)
    }

    pub fn uniform(n: usize, up: f64, down: f64, phi: f64) -> Self {
        Self { gamma_up: vec![up; n], gamma_down: vec![down; n], gamma_phi: vec![phi; n] }
    }

    pub fn noiseless(n: usize) -> Self {
        Self::uniform(n, 0.0, 0.0, 0.0)
    }

    /// Decay `omega / q_cav`, detailed-balance heating at occupation
    /// `n_th`, and dephasing at a tenth of the decay rate.
    pub fn thermal(n: usize, omega: f64, q_cav: f64, n_th: f64) -> Self {
        let down = omega / q_cav;
        Self::uniform(n, down * n_th / (1.0 + n_th), down, down / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gamma_up.len();
        if n == 0 || self.gamma_down.len() != n || self.gamma_phi.len() != n {
            return Err(Error::invalid("rate lists must be non-empty and of equal length"));
        }
        let all = self.gamma_up.iter().chain(&self.gamma_down).chain(&self.gamma_phi);
        if all.clone().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid("loss rates must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn n_cavities(&self) -> usize {
        self.gamma_up.len()
    }

    pub fn rates(&self, cavity: usize) -> ModeRates {
        ModeRates { up: self.gamma_up[cavity], down: self.gamma_down[cavity], phi: self.gamma_phi[cavity] }
    }

    pub fn max_total_rate(&self) -> f64 {
        (0..self.n_cavities()).map(|j| self.rates(j).total()).fold(0.0, f64::max)
    }

    pub fn without_heating(&self) -> Self {
        Self { gamma_up: vec![0.0; self.n_cavities()], ..self.clone() }
    }

    pub fn without_dephasing(&self) -> Self {
        Self { gamma_phi: vec![0.0; self.n_cavities()], ..self.clone() }
    }

    pub fn heating_only(&self) -> Self {
        let n = self.n_cavities();
        Self { gamma_up: self.gamma_up.clone(), gamma_down: vec![0.0; n], gamma_phi: vec![0.0; n] }
    }

    fn mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeRates {
    pub up: f64,
    pub down: f64,
    pub phi: f64,
}

impl ModeRates {
    pub fn total(&self) -> f64 {
        self.up + self.down + self.phi
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { up: self.up * factor, down: self.down * factor, phi: self.phi * factor }
    }
}

/// Loss rates seen by the primary cavity after the ED conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedRates {
    pub n_cavities: usize,
    pub fock: usize,
    /// Heating into `|m+1>`.
    pub gamma_m_plus_1: f64,
    /// Decay out of `|m>`.
    pub gamma_m: f64,
    /// Dephasing-induced swap out of `|m>`.
    pub gamma_m_phi: f64,
    pub bar_gamma_up_1: f64,
    pub bar_gamma_down: f64,
    pub bar_gamma_phi: f64,
}

impl TransformedRates {
    /// Single-photon decay rate of the primary mode, decay plus swap-out.
    pub fn gamma_down_eff(&self) -> f64 {
        self.bar_gamma_down + (1.0 - 1.0 / self.n_cavities as f64) * self.bar_gamma_phi
    }

    pub fn gamma_up_eff(&self) -> f64 {
        self.bar_gamma_up_1
    }
}

pub fn transformed_rates(n: usize, noise: &NoiseModel, m: usize) -> Result<TransformedRates> {
    noise.validate()?;
    if noise.n_cavities() != n {
        return Err(Error::invalid(format!("noise model has {} cavities, expected {n}", noise.n_cavities())));
    }
    let up = NoiseModel::mean(&noise.gamma_up);
    let down = NoiseModel::mean(&noise.gamma_down);
    let phi = NoiseModel::mean(&noise.gamma_phi);
    let mf = m as f64;
    Ok(TransformedRates {
        n_cavities: n,
        fock: m,
        gamma_m_plus_1: (mf + 1.0) * up,
        gamma_m: mf * down,
        gamma_m_phi: mf * (1.0 - 1.0 / n as f64) * phi,
        bar_gamma_up_1: up,
        bar_gamma_down: down,
        bar_gamma_phi: phi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    /// Drive on, heating off.
    Signal,
    /// Drive off, heating on.
    Background,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Full,
    Effective,
}

/// Which loss channels of the coupled cavities are raised while a
/// beamsplitter runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowElevation {
    #[default]
    DecayDephasing,
    /// Heating is raised by the same factor as well.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdSettings {
    pub scheme: EdScheme,
    /// Single-photon swap fidelity of one beamsplitter; 1 means ideal gates.
    pub fidelity: f64,
    /// Beamsplitter rate, rad/s.
    pub g_bs: f64,
    pub substeps: usize,
    pub elevation: WindowElevation,
}

impl EdSettings {
    pub fn ideal(scheme: EdScheme) -> Self {
        Self {
            scheme,
            fidelity: 1.0,
            g_bs: 2.0 * std::f64::consts::PI * 1e6,
            substeps: DEFAULT_WINDOW_SUBSTEPS,
            elevation: WindowElevation::default(),
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.fidelity >= 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fidelity > 0.0 && self.fidelity <= 1.0) {
            return Err(Error::invalid(format!("beamsplitter fidelity {} outside (0, 1]", self.fidelity)));
        }
        if !(self.g_bs > 0.0 && self.g_bs.is_finite()) {
            return Err(Error::invalid("beamsplitter rate must be positive"));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("beamsplitter windows need at least one substep"));
        }
        Ok(())
    }
}

/// Everything needed to simulate one detection cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub n_cavities: usize,
    /// Initial Fock number `m` of the primary cavity.
    pub fock: usize,
    /// Per-mode truncation; `None` means `m + 4`.
    pub cutoff: Option<usize>,
    pub noise: NoiseModel,
    /// Dark-matter coupling, rad/s.
    pub coupling: f64,
    pub tau_dm: f64,
    pub ed: EdSettings,
    /// Integration step; `None` means [`default_dt`].
    pub dt: Option<f64>,
    /// Integration times at which the readout is reported, s.
    pub sample_times: Vec<f64>,
    pub kind: RunKind,
    pub leak_threshold: f64,
}

impl CycleSpec {
    pub fn new(
        noise: NoiseModel,
        fock: usize,
        coupling: f64,
        tau_dm: f64,
        sample_times: Vec<f64>,
        kind: RunKind,
    ) -> Self {
        Self {
            n_cavities: noise.n_cavities(),
            fock,
            cutoff: None,
            noise,
            coupling,
            tau_dm,
            ed: EdSettings::ideal(EdScheme::Binary),
            dt: None,
            sample_times,
            kind,
            leak_threshold: DEFAULT_LEAK_THRESHOLD,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff.unwrap_or(self.fock + 4)
    }

    /// Rates active during this run.
    pub fn run_noise(&self) -> NoiseModel {
        match self.kind {
            RunKind::Signal => self.noise.without_heating(),
            RunKind::Background => self.noise.clone(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(self.tau_dm, self.noise.max_total_rate()))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.noise.n_cavities() != self.n_cavities {
            return Err(Error::invalid("noise model and cavity count disagree"));
        }
        if !(self.tau_dm > 0.0) || !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(Error::invalid("coupling must be non-negative and tau_dm positive"));
        }
        if self.cutoff() < self.fock + 2 {
            return Err(Error::invalid(format!(
                "cutoff {} cannot hold the readout level {}",
                self.cutoff(),
                self.fock + 1
            )));
        }
        let dt = self.dt();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("time step must be positive"));
        }
        if self.sample_times.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || self.sample_times.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::invalid("sample times must be non-negative and sorted"));
        }
        self.ed.validate()
    }

    /// Step indices at which samples are recorded.
    pub(crate) fn sample_steps(&self) -> Vec<usize> {
        let dt = self.dt();
        self.sample_times.iter().map(|t| (t / dt).round() as usize).collect()
    }
}

/// `min(tau_dm / 200, 0.02 / max_rate)`.
pub fn default_dt(tau_dm: f64, max_rate: f64) -> f64 {
    let drive = tau_dm / 200.0;
    if max_rate > 0.0 {
        drive.min(0.02 / max_rate)
    } else {
        drive
    }
}

/// Readout probability of `|m+1>` in the primary cavity versus integration
/// time, with per-sample diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSeries {
    pub backend: Backend,
    pub kind: RunKind,
    pub dt: f64,
    pub t: Vec<f64>,
    pub population: Vec<f64>,
    pub trace_error: Vec<f64>,
    pub leakage: Vec<f64>,
    /// Largest anti-Hermitian part removed by symmetrization.
    pub max_hermiticity_correction: f64,
    /// Loss multiplier applied during beamsplitter windows, if any.
    pub window_multiplier: Option<f64>,
}
