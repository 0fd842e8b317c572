//! Detection-cycle orchestration and figures of merit.
//!
//! A cycle prepares `|m>` in the primary cavity, distributes it over the
//! array, integrates the dark-matter drive for `tau_int`, undoes the
//! distribution and asks whether the primary cavity holds `m + 1` photons.
//! Signal and background probabilities come from separate runs and are
//! combined into an SNR for a total integration time `tau_tot`.

mod semiclassical;

pub use semiclassical::{
    instantaneous_signal_rate, optimal_tau_int, rate_equation_populations, semiclassical_rates, snr_approx,
    spam_background, OptimalTau, RatePopulations, SemiclassicalParams, SemiclassicalRates,
};

use serde::{Deserialize, Serialize};

use crate::drive::{coupling_g, CavityGeometry, DmParams};
use crate::engine::{
    effective_propagate_cycle, propagate_cycle, propagate_cycle_state, transformed_rates, Backend, CycleSpec,
    EdSettings, NoiseModel, PopulationSeries, RunKind, TransformedRates, DEFAULT_LEAK_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::fock::{make_space, Populations};
use crate::gates::{EdPlan, EdScheme};
use crate::sensitivity::thermal_occupation;

pub const DEFAULT_TAU_SPAM: f64 = 20e-6;
/// Largest cavity count handled by the full backend under `auto`.
pub const FULL_BACKEND_MAX_CAVITIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Auto,
    Full,
    Effective,
}

impl std::str::FromStr for BackendChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "full" => Ok(Self::Full),
            "effective" => Ok(Self::Effective),
            other => Err(Error::invalid(format!("unknown backend '{other}'"))),
        }
    }
}

/// Physical description of one cavity and the dark-matter field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySetup {
    pub omega: f64,
    /// Kelvin.
    pub temperature: f64,
    pub q_cav: f64,
    pub dm: DmParams,
}

impl CavitySetup {
    pub fn noise(&self, n_cavities: usize) -> NoiseModel {
        NoiseModel::thermal(n_cavities, self.omega, self.q_cav, thermal_occupation(self.omega, self.temperature))
    }

    pub fn coupling(&self) -> Result<f64> {
        self.dm.validate()?;
        Ok(coupling_g(&self.dm, &CavityGeometry::tm010(self.omega)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_cavities: usize,
    pub fock: usize,
    pub noise: NoiseModel,
    /// Dark-matter coupling, rad/s.
    pub coupling: f64,
    pub tau_dm: f64,
    pub tau_tot: f64,
    pub tau_spam: f64,
    pub ed: EdSettings,
    pub backend: BackendChoice,
    pub dt: Option<f64>,
    pub cutoff: Option<usize>,
}

impl ProtocolConfig {
    /// Ideal gates, binary ED when `N` is a power of two and linear
    /// otherwise, one second of total integration and the default SPAM time.
    pub fn new(noise: NoiseModel, fock: usize, coupling: f64, tau_dm: f64) -> Self {
        let n = noise.n_cavities();
        let scheme = if n.is_power_of_two() { EdScheme::Binary } else { EdScheme::Linear };
        Self {
            n_cavities: n,
            fock,
            noise,
            coupling,
            tau_dm,
            tau_tot: 1.0,
            tau_spam: DEFAULT_TAU_SPAM,
            ed: EdSettings::ideal(scheme),
            backend: BackendChoice::Auto,
            dt: None,
            cutoff: None,
        }
    }

    pub fn from_setup(n_cavities: usize, fock: usize, setup: &CavitySetup) -> Result<Self> {
        Ok(Self::new(setup.noise(n_cavities), fock, setup.coupling()?, setup.dm.tau_dm()))
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.n_cavities == 0 || self.noise.n_cavities() != self.n_cavities {
            return Err(Error::invalid("noise model must list one entry per cavity"));
        }
        if !(self.tau_tot > 0.0 && self.tau_dm > 0.0 && self.tau_spam >= 0.0) {
            return Err(Error::invalid("tau_tot and tau_dm must be positive, tau_spam non-negative"));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::invalid("coupling must be finite and non-negative"));
        }
        EdPlan::new(self.ed.scheme, self.n_cavities)?;
        Ok(())
    }

    pub fn tau_ed(&self) -> Result<f64> {
        Ok(EdPlan::new(self.ed.scheme, self.n_cavities)?.duration(self.ed.g_bs))
    }

    /// `tau_int + 2 tau_ed + tau_spam`.
    pub fn tau_cycle(&self, tau_int: f64) -> Result<f64> {
        Ok(tau_int + 2.0 * self.tau_ed()? + self.tau_spam)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff.unwrap_or(self.fock + 4)
    }

    pub fn resolved_backend(&self) -> Result<Backend> {
        let fits = make_space(self.n_cavities, self.cutoff()).is_ok();
        match self.backend {
            BackendChoice::Full => {
                make_space(self.n_cavities, self.cutoff())?;
                Ok(Backend::Full)
            }
            BackendChoice::Effective => Ok(Backend::Effective),
            BackendChoice::Auto if self.n_cavities <= FULL_BACKEND_MAX_CAVITIES && fits => Ok(Backend::Full),
            BackendChoice::Auto => Ok(Backend::Effective),
        }
    }

    pub fn transformed_rates(&self) -> Result<TransformedRates> {
        transformed_rates(self.n_cavities, &self.noise, self.fock)
    }

    pub fn semiclassical(&self) -> Result<SemiclassicalParams> {
        Ok(SemiclassicalParams::from_rates(self.coupling, self.tau_dm, &self.transformed_rates()?))
    }

    pub fn cycle_spec(&self, kind: RunKind, sample_times: Vec<f64>) -> CycleSpec {
        CycleSpec {
            n_cavities: self.n_cavities,
            fock: self.fock,
            cutoff: self.cutoff,
            noise: self.noise.clone(),
            coupling: self.coupling,
            tau_dm: self.tau_dm,
            ed: self.ed,
            dt: self.dt,
            sample_times,
            kind,
            leak_threshold: DEFAULT_LEAK_THRESHOLD,
        }
    }

    /// Long-integration SNR of the lossless protocol with perfect gates and
    /// no overhead, `2 g^2 tau_dm sqrt(tau_tot / gamma_up) N sqrt(m+1)`.
    pub fn ideal_snr(&self) -> Result<f64> {
        let p = self.semiclassical()?;
        if p.gamma_up_eff == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(p.diffusive_rate() * (self.tau_tot / ((self.fock + 1) as f64 * p.gamma_up_eff)).sqrt())
    }
}

/// `R_s tau_tot / sqrt(R_b tau_tot)` with `R = n / tau_cycle`.
///
/// Zero background with a positive signal gives `+inf`.
pub fn snr_from_counts(n_s: f64, n_b: f64, tau_cycle: f64, tau_tot: f64) -> Result<f64> {
    if n_s < 0.0 || n_b < 0.0 || !(tau_cycle > 0.0) || tau_tot < 0.0 {
        return Err(Error::invalid("counts and times must be non-negative, tau_cycle positive"));
    }
    let signal = n_s / tau_cycle * tau_tot;
    let noise = (n_b / tau_cycle * tau_tot).sqrt();
    if noise == 0.0 {
        return Ok(if signal > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(signal / noise)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub backend: Backend,
    pub dt: f64,
    pub max_trace_error: f64,
    pub max_leakage: f64,
    pub max_hermiticity_correction: f64,
    pub window_multiplier: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleResult {
    pub tau_int: f64,
    pub n_s: f64,
    pub n_b: f64,
    pub r_s: f64,
    pub r_b: f64,
    pub snr: f64,
    pub tau_cycle: f64,
    pub diagnostics: Diagnostics,
}

/// Signal and background population series on `samples`, run in parallel
/// on the backend `config` resolves to.
pub fn simulate_populations(
    config: &ProtocolConfig,
    samples: Vec<f64>,
) -> Result<(PopulationSeries, PopulationSeries, Backend)> {
    config.validate()?;
    let backend = config.resolved_backend()?;
    let propagate = match backend {
        Backend::Full => propagate_cycle,
        Backend::Effective => effective_propagate_cycle,
    };
    let signal_spec = config.cycle_spec(RunKind::Signal, samples.clone());
    let background_spec = config.cycle_spec(RunKind::Background, samples);
    let (signal, background) = rayon::join(|| propagate(&signal_spec), || propagate(&background_spec));
    Ok((signal?, background?, backend))
}

pub fn diagnostics(backend: Backend, signal: &PopulationSeries, background: &PopulationSeries) -> Diagnostics {
    let max =
        |f: fn(&PopulationSeries) -> &Vec<f64>| f(signal).iter().chain(f(background)).copied().fold(0.0, f64::max);
    Diagnostics {
        backend,
        dt: signal.dt,
        max_trace_error: max(|s| &s.trace_error),
        max_leakage: max(|s| &s.leakage),
        max_hermiticity_correction: signal.max_hermiticity_correction.max(background.max_hermiticity_correction),
        window_multiplier: signal.window_multiplier,
    }
}

/// One full cycle at integration time `tau_int`.
pub fn run_cycle(config: &ProtocolConfig, tau_int: f64) -> Result<CycleResult> {
    if !(tau_int >= 0.0 && tau_int.is_finite()) {
        return Err(Error::invalid("integration time must be non-negative"));
    }
    let (signal, background, backend) = simulate_populations(config, vec![tau_int])?;
    let tau = signal.t[0];
    let tau_cycle = config.tau_cycle(tau)?;
    let (n_s, n_b) = (signal.population[0].max(0.0), background.population[0].max(0.0));
    Ok(CycleResult {
        tau_int: tau,
        n_s,
        n_b,
        r_s: n_s / tau_cycle,
        r_b: n_b / tau_cycle,
        snr: snr_from_counts(n_s, n_b, tau_cycle, config.tau_tot)?,
        tau_cycle,
        diagnostics: diagnostics(backend, &signal, &background),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub tau_int: f64,
    pub tau_cycle: f64,
    pub n_s: f64,
    pub n_b: f64,
    pub snr: f64,
}

/// Location of the SNR maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Star {
    pub tau_int: f64,
    pub snr: f64,
    /// Grid index of the largest sampled SNR.
    pub index: usize,
    /// False when the maximum sits on the edge of the grid.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrSweep {
    pub points: Vec<SweepPoint>,
    pub star: Star,
    pub diagnostics: Diagnostics,
}

/// `points` integration times evenly spaced over
/// `[lo_multiple, hi_multiple] * tau_dm`.
pub fn tau_grid(tau_dm: f64, lo_multiple: f64, hi_multiple: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo_multiple * tau_dm];
    }
    (0..points).map(|k| tau_dm * (lo_multiple + (hi_multiple - lo_multiple) * k as f64 / (points - 1) as f64)).collect()
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d0 = (x[1] - x[0]) * (y[1] - y[2]);
    let d1 = (x[1] - x[2]) * (y[1] - y[0]);
    let denom = d0 - d1;
    if denom == 0.0 {
        return (x[1], y[1]);
    }
    let xv = x[1] - 0.5 * ((x[1] - x[0]) * d0 - (x[1] - x[2]) * d1) / denom;
    // Lagrange form evaluated at the vertex
    let l = |i: usize, j: usize, k: usize| (xv - x[j]) * (xv - x[k]) / ((x[i] - x[j]) * (x[i] - x[k]));
    (xv, y[0] * l(0, 1, 2) + y[1] * l(1, 0, 2) + y[2] * l(2, 0, 1))
}

pub fn locate_star(tau: &[f64], snr: &[f64]) -> Result<Star> {
    if tau.is_empty() || tau.len() != snr.len() {
        return Err(Error::invalid("star search needs matching, non-empty series"));
    }
    let index = (0..snr.len()).filter(|&i| !snr[i].is_nan()).fold(0, |best, i| {
        if snr[i] > snr[best] || snr[best].is_nan() {
            i
        } else {
            best
        }
    });
    let interior = index > 0 && index + 1 < snr.len() && snr[index].is_finite();
    if !interior {
        return Ok(Star { tau_int: tau[index], snr: snr[index], index, interior });
    }
    let (xv, yv) =
        parabola_vertex([tau[index - 1], tau[index], tau[index + 1]], [snr[index - 1], snr[index], snr[index + 1]]);
    Ok(Star { tau_int: xv, snr: yv.max(snr[index]), index, interior })
}

/// SNR on a grid of integration times. One signal run and one background
/// run cover the whole grid.
pub fn snr_sweep(config: &ProtocolConfig, grid: &[f64]) -> Result<SnrSweep> {
    if grid.is_empty() {
        return Err(Error::invalid("the integration-time grid is empty"));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("integration times must be positive and strictly increasing"));
    }
    let (signal, background, backend) = simulate_populations(config, grid.to_vec())?;
    let points = signal
        .t
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let tau_cycle = config.tau_cycle(tau)?;
            let (n_s, n_b) = (signal.population[k].max(0.0), background.population[k].max(0.0));
            Ok(SweepPoint {
                tau_int: tau,
                tau_cycle,
                n_s,
                n_b,
                snr: snr_from_counts(n_s, n_b, tau_cycle, config.tau_tot)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let taus: Vec<f64> = points.iter().map(|p| p.tau_int).collect();
    let snrs: Vec<f64> = points.iter().map(|p| p.snr).collect();
    let star = locate_star(&taus, &snrs)?;
    Ok(SnrSweep { points, star, diagnostics: diagnostics(backend, &signal, &background) })
}

/// Efficiency `eta`: best simulated SNR over the ideal long-integration SNR.
pub fn efficiency(config: &ProtocolConfig, sweep: &SnrSweep) -> Result<f64> {
    Ok(sweep.star.snr / config.ideal_snr()?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    /// Heating rate of the signal mode inferred from `|m+1>` counts.
    pub primary_rate: f64,
    /// Heating rate of every other transformed mode.
    pub spectator_rates: Vec<f64>,
}

impl CalibrationReport {
    pub fn spectator_mean(&self) -> f64 {
        self.spectator_rates.iter().sum::<f64>() / self.spectator_rates.len() as f64
    }
}

/// Background run of `duration` on the full backend, read out on every
/// cavity after the inverse ED. Needs at least two cavities.
pub fn calibration_rates(config: &ProtocolConfig, duration: f64) -> Result<CalibrationReport> {
    config.validate()?;
    if config.n_cavities < 2 {
        return Err(Error::invalid("spectator modes need at least two cavities"));
    }
    if !(duration > 0.0) {
        return Err(Error::invalid("duration must be positive"));
    }
    let state = propagate_cycle_state(&config.cycle_spec(RunKind::Background, vec![duration]))?;
    let m = config.fock;
    let primary_rate = state.mode_population(0, m + 1) / ((m + 1) as f64 * duration);
    let spectator_rates = (1..config.n_cavities).map(|i| state.mode_population(i, 1) / duration).collect();
    Ok(CalibrationReport { primary_rate, spectator_rates })
}

#[cfg(test)]
mod tests {
    use super::*;

    const OMEGA: f64 = 2.0 * std::f64::consts::PI * 7e9;
    const TAU_DM: f64 = 1e6 / OMEGA;

    fn reference(n: usize, m: usize) -> ProtocolConfig {
        let mut c = ProtocolConfig::new(NoiseModel::thermal(n, OMEGA, 1e8, 1.2093e-3), m, 73.6, TAU_DM);
        c.tau_spam = 0.0;
        c
    }

    #[test]
    fn snr_algebra() {
        let s = snr_from_counts(0.01, 0.01, 1e-3, 2.0).unwrap();
        assert!((s - (0.01f64 * 2.0 / 1e-3).sqrt()).abs() < 1e-12);
        let quad = snr_from_counts(0.01, 0.04, 1e-3, 2.0).unwrap();
        assert!((quad / s - 0.5).abs() < 1e-12);
        let longer = snr_from_counts(0.01, 0.01, 1e-3, 8.0).unwrap();
        assert!((longer / s - 2.0).abs() < 1e-12);
        assert_eq!(snr_from_counts(0.1, 0.0, 1e-3, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(snr_from_counts(0.0, 0.0, 1e-3, 1.0).unwrap(), 0.0);
        assert!(snr_from_counts(-0.1, 0.0, 1e-3, 1.0).is_err());
    }

    #[test]
    fn star_interpolation_recovers_parabola_peak() {
        let tau: Vec<f64> = (0..7).map(|k| 1.0 + 0.7 * k as f64 * (1.0 + 0.1 * k as f64)).collect();
        let snr: Vec<f64> = tau.iter().map(|t| 5.0 - (t - 3.3f64).powi(2)).collect();
        let star = locate_star(&tau, &snr).unwrap();
        assert!(star.interior);
        assert!((star.tau_int - 3.3).abs() < 1e-12);
        assert!((star.snr - 5.0).abs() < 1e-12);
        let rising = locate_star(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(!rising.interior && rising.index == 2);
    }

    #[test]
    fn zero_coupling_gives_zero_snr() {
        let mut c = reference(1, 0);
        c.coupling = 0.0;
        let r = run_cycle(&c, 5.0 * TAU_DM).unwrap();
        assert_eq!(r.n_s, 0.0);
        assert_eq!(r.snr, 0.0);
    }

    #[test]
    fn snr_grows_as_root_of_total_time() {
        let c = reference(1, 0);
        let a = run_cycle(&c, 10.0 * TAU_DM).unwrap();
        let mut longer = c.clone();
        longer.tau_tot *= 2.0;
        let b = run_cycle(&longer, 10.0 * TAU_DM).unwrap();
        assert!((b.snr / a.snr - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn auto_backend_selection() {
        assert_eq!(reference(2, 5).resolved_backend().unwrap(), Backend::Full);
        assert_eq!(reference(8, 5).resolved_backend().unwrap(), Backend::Effective);
        let mut forced = reference(8, 5);
        forced.backend = BackendChoice::Full;
        assert!(matches!(forced.resolved_backend(), Err(Error::DimensionCeilingExceeded { .. })));
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(snr_sweep(&reference(1, 0), &[]).is_err());
    }

    #[test]
    fn lossless_sweep_is_monotone() {
        let mut c = reference(1, 1);
        c.noise = c.noise.heating_only();
        let grid = tau_grid(TAU_DM, 0.2, 20.0, 12);
        let sweep = snr_sweep(&c, &grid).unwrap();
        assert!(sweep.points.windows(2).all(|w| w[1].snr > w[0].snr));
        assert!(!sweep.star.interior);
    }

    #[test]
    fn calibration_sum_rule_with_unequal_heating() {
        let noise = NoiseModel::new(vec![1.0, 3.0], vec![0.0; 2], vec![0.0; 2]).unwrap();
        let mut c = ProtocolConfig::new(noise, 1, 0.0, TAU_DM);
        c.dt = Some(1e-5);
        let report = calibration_rates(&c, 1e-3).unwrap();
        assert!((report.primary_rate / report.spectator_mean() - 1.0).abs() < 0.01);
        assert!((report.primary_rate / 2.0 - 1.0).abs() < 0.01);
    }
}
