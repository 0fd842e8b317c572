//! TOML run configuration. Every physical field carries its unit in the
//! name; unknown keys are rejected.

use std::path::Path;

use fock_haloscope::drive::{coupling_g, CavityGeometry, DmParams};
use fock_haloscope::engine::{EdSettings, NoiseModel, WindowElevation};
use fock_haloscope::gates::EdScheme;
use fock_haloscope::protocol::{BackendChoice, ProtocolConfig};
use fock_haloscope::sensitivity::{thermal_occupation, SensitivityParams, DEFAULT_ZETA_SNR};
use fock_haloscope::units::{gev_per_cm3_to_si, hz_to_angular, millikelvin_to_kelvin};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub backend: Option<BackendChoice>,
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub dm: DmSection,
    #[serde(default)]
    pub ed: EdSection,
    #[serde(default)]
    pub timing: TimingSection,
    pub gates: Option<GatesSection>,
    pub mc: Option<McSection>,
    pub cycle: Option<CycleSection>,
    pub sweep: Option<SweepSection>,
    pub scan: Option<ScanSection>,
    pub exclusion: Option<ExclusionSection>,
    pub reach: Option<ReachSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub freq_hz: f64,
    pub temperature_mk: f64,
    pub q_cav: f64,
    pub n_cavities: usize,
    pub fock: usize,
    /// Uniform overrides of the thermally derived rates, rad/s.
    pub gamma_up_per_s: Option<f64>,
    pub gamma_down_per_s: Option<f64>,
    pub gamma_phi_per_s: Option<f64>,
}

impl Default for CavitySection {
    fn default() -> Self {
        Self {
            freq_hz: 7e9,
            temperature_mk: 50.0,
            q_cav: 1e8,
            n_cavities: 1,
            fock: 0,
            gamma_up_per_s: None,
            gamma_down_per_s: None,
            gamma_phi_per_s: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmSection {
    pub epsilon: Option<f64>,
    /// Takes precedence over the coupling derived from `epsilon`.
    pub coupling_rad_per_s: Option<f64>,
    pub rho_gev_cm3: f64,
    pub q_dm: f64,
}

impl Default for DmSection {
    fn default() -> Self {
        Self { epsilon: None, coupling_rad_per_s: None, rho_gev_cm3: 0.45, q_dm: 1e6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdSection {
    /// Binary for power-of-two arrays, linear otherwise, when absent.
    pub scheme: Option<EdScheme>,
    pub fidelity: f64,
    pub g_bs_hz: f64,
    pub substeps: usize,
    pub elevation: WindowElevation,
}

impl Default for EdSection {
    fn default() -> Self {
        Self { scheme: None, fidelity: 1.0, g_bs_hz: 1e6, substeps: 256, elevation: WindowElevation::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSection {
    pub tau_tot_s: f64,
    pub tau_spam_s: f64,
    pub dt_s: Option<f64>,
    pub cutoff: Option<usize>,
}

impl Default for TimingSection {
    fn default() -> Self {
        Self { tau_tot_s: 1.0, tau_spam_s: 20e-6, dt_s: None, cutoff: None }
    }
}

/// Either an explicit list or `{ start, stop, points }` inclusive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) if r.points == 1 => vec![r.start],
            Grid::Range(r) => {
                (0..r.points).map(|k| r.start + (r.stop - r.start) * k as f64 / (r.points - 1) as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatesSection {
    pub n_cavities: Vec<usize>,
    pub schemes: Vec<EdScheme>,
    pub alpha: f64,
    pub max_fock: usize,
    pub tolerance: f64,
}

impl Default for GatesSection {
    fn default() -> Self {
        Self {
            n_cavities: vec![1, 2, 4],
            schemes: vec![EdScheme::Linear, EdScheme::Binary],
            alpha: 0.05,
            max_fock: 3,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub coupling_rad_per_s: f64,
    pub tau_dm_s: f64,
    pub detuning_rad_per_s: f64,
    pub t_over_tau_dm: Grid,
    pub trajectories: usize,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            coupling_rad_per_s: 1.0,
            tau_dm_s: 1.0,
            detuning_rad_per_s: 0.0,
            t_over_tau_dm: Grid::Range(GridRange { start: 0.0, stop: 20.0, points: 50 }),
            trajectories: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSection {
    pub tau_int_over_tau_dm: Grid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_cavities: Vec<usize>,
    pub fock: Vec<usize>,
    pub tau_int_over_tau_dm: Grid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub n_cavities: Vec<usize>,
    pub fock: Vec<usize>,
    pub tau_int_over_tau_dm: Grid,
    /// False skips the simulation and reports the lossless prediction.
    #[serde(default = "yes")]
    pub simulate: bool,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_zeta")]
    pub zeta_snr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionSection {
    pub freq_start_hz: f64,
    pub freq_stop_hz: f64,
    pub points: usize,
    pub temperatures_mk: Vec<f64>,
    pub tau_tot_s: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "default_zeta")]
    pub zeta_snr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachSection {
    pub target_epsilon: f64,
    pub budget_s: f64,
    pub freq_start_hz: f64,
    pub freq_stop_hz: f64,
    pub arrays: Vec<ArrayChoice>,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "default_zeta")]
    pub zeta_snr: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayChoice {
    pub n_cavities: usize,
    pub fock: usize,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    1e-16
}

fn default_zeta() -> f64 {
    DEFAULT_ZETA_SNR
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Compact JSON of the fully defaulted configuration.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn sha256(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn omega(&self) -> f64 {
        hz_to_angular(self.cavity.freq_hz)
    }

    pub fn temperature_k(&self) -> f64 {
        millikelvin_to_kelvin(self.cavity.temperature_mk)
    }

    pub fn tau_dm(&self) -> f64 {
        self.dm.q_dm / self.omega()
    }

    pub fn noise(&self, n_cavities: usize) -> NoiseModel {
        let omega = self.omega();
        let mut noise =
            NoiseModel::thermal(n_cavities, omega, self.cavity.q_cav, thermal_occupation(omega, self.temperature_k()));
        let c = &self.cavity;
        for (rates, value) in [
            (&mut noise.gamma_up, c.gamma_up_per_s),
            (&mut noise.gamma_down, c.gamma_down_per_s),
            (&mut noise.gamma_phi, c.gamma_phi_per_s),
        ] {
            if let Some(v) = value {
                rates.iter_mut().for_each(|r| *r = v);
            }
        }
        noise
    }

    pub fn coupling(&self) -> Result<f64, CliError> {
        if let Some(g) = self.dm.coupling_rad_per_s {
            return Ok(g);
        }
        let epsilon =
            self.dm.epsilon.ok_or_else(|| CliError::Config("set dm.coupling_rad_per_s or dm.epsilon".into()))?;
        let omega = self.omega();
        let dm =
            DmParams { epsilon, rho: gev_per_cm3_to_si(self.dm.rho_gev_cm3), q_dm: self.dm.q_dm, omega, detuning: 0.0 };
        dm.validate()?;
        Ok(coupling_g(&dm, &CavityGeometry::tm010(omega)?))
    }

    pub fn protocol(&self, n_cavities: usize, fock: usize) -> Result<ProtocolConfig, CliError> {
        let mut config = ProtocolConfig::new(self.noise(n_cavities), fock, self.coupling()?, self.tau_dm());
        let ed = &self.ed;
        config.ed = EdSettings {
            scheme: ed.scheme.unwrap_or(config.ed.scheme),
            fidelity: ed.fidelity,
            g_bs: hz_to_angular(ed.g_bs_hz),
            substeps: ed.substeps,
            elevation: ed.elevation,
        };
        config.tau_tot = self.timing.tau_tot_s;
        config.tau_spam = self.timing.tau_spam_s;
        config.dt = self.timing.dt_s;
        config.cutoff = self.timing.cutoff;
        config.backend = self.backend.unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    pub fn sensitivity(&self, n_cavities: usize, fock: usize, eta: f64, zeta_snr: f64) -> SensitivityParams {
        SensitivityParams {
            zeta_snr,
            eta,
            rho: gev_per_cm3_to_si(self.dm.rho_gev_cm3),
            q_dm: self.dm.q_dm,
            q_cav: self.cavity.q_cav,
            n_cavities,
            fock,
            temperature: self.temperature_k(),
        }
    }
}
