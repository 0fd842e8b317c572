//! Beamsplitter windows with elevated loss.
//!
//! During a gate the decay and dephasing rates of the two participating
//! cavities (optionally heating too) are multiplied by a common factor chosen so that a single photon is swapped
//! between them (a pi/2 rotation) with the requested fidelity. Windows are
//! integrated with the same discretized master equation as the integration
//! phase, the beamsplitter entering as small exact unitary increments.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use num_complex::Complex64;

use super::dlme::{check_stability, noise_channels, Stepper};
use super::{EdSettings, ModeRates, NoiseModel, WindowElevation};
use crate::error::{Error, Result};
use crate::fock::{make_space, DensityMatrix, HilbertSpace, LocalOperator};
use crate::gates::{BeamsplitterSpec, EdPlan};

const MULTIPLIER_RTOL: f64 = 1e-6;
const MULTIPLIER_CAP: f64 = 1e15;

/// One layer of parallel beamsplitters run as a single timed window.
#[derive(Debug, Clone)]
pub(crate) struct Window {
    pub(crate) splitters: Vec<BeamsplitterSpec>,
    /// Loss multiplier of each splitter's pair.
    pub(crate) multipliers: Vec<f64>,
    pub(crate) duration: f64,
    pub(crate) elevation: WindowElevation,
}

impl Window {
    /// Per-cavity rates while this window is open.
    pub(crate) fn rates(&self, base: &NoiseModel) -> NoiseModel {
        let mut noise = base.clone();
        for (spec, &mu) in self.splitters.iter().zip(&self.multipliers) {
            for mode in [spec.mode_a, spec.mode_b] {
                if self.elevation == WindowElevation::All {
                    noise.gamma_up[mode] = base.gamma_up[mode] * mu;
                }
                noise.gamma_down[mode] = base.gamma_down[mode] * mu;
                noise.gamma_phi[mode] = base.gamma_phi[mode] * mu;
            }
        }
        noise
    }

    /// Splitters advanced by `fraction` of their full angle.
    pub(crate) fn partial(&self, fraction: f64) -> Vec<BeamsplitterSpec> {
        self.splitters.iter().map(|s| BeamsplitterSpec { theta: s.theta * fraction, ..*s }).collect()
    }
}

/// Windows of the forward ED (`inverse = false`) or of its inverse, in the
/// order they act. `multipliers` is indexed like `plan.sequence`.
pub(crate) fn schedule(plan: &EdPlan, multipliers: &[f64], ed: &EdSettings, inverse: bool) -> Vec<Window> {
    let build = |layer: &Vec<usize>| {
        let mut splitters = Vec::with_capacity(layer.len());
        let mut mus = Vec::with_capacity(layer.len());
        for &k in layer.iter() {
            let spec = plan.sequence[k];
            splitters.push(if inverse { BeamsplitterSpec { theta: -spec.theta, ..spec } } else { spec });
            mus.push(multipliers[k]);
        }
        let duration = splitters.iter().map(|s| s.theta.abs()).fold(0.0, f64::max) / ed.g_bs;
        Window { splitters, multipliers: mus, duration, elevation: ed.elevation }
    };
    if inverse {
        plan.layers.iter().rev().map(build).collect()
    } else {
        plan.layers.iter().map(build).collect()
    }
}

struct WindowOps {
    increments: Vec<LocalOperator>,
    channels: Vec<super::Channel>,
    dt: f64,
}

fn window_ops(space: &HilbertSpace, window: &Window, base: &NoiseModel, substeps: usize) -> Result<WindowOps> {
    let increments =
        window.partial(1.0 / substeps as f64).iter().map(|s| s.local(space.cutoff())).collect::<Result<Vec<_>>>()?;
    let channels = noise_channels(&window.rates(base));
    let dt = window.duration / substeps as f64;
    check_stability(&channels, dt)?;
    Ok(WindowOps { increments, channels, dt })
}

/// Evolve `rho` through `window` in the Schroedinger picture.
pub(crate) fn run_window(
    stepper: &mut Stepper,
    rho: &mut Array2<Complex64>,
    window: &Window,
    base: &NoiseModel,
    substeps: usize,
) -> Result<f64> {
    let ops = window_ops(stepper.kernel.space(), window, base, substeps)?;
    let mut worst: f64 = 0.0;
    for _ in 0..substeps {
        worst = worst.max(stepper.forward(rho, &ops.increments, &ops.channels, ops.dt)?);
    }
    Ok(worst)
}

/// Pull an observable back through `window`.
pub(crate) fn run_window_adjoint(
    stepper: &mut Stepper,
    op: &mut Array2<Complex64>,
    window: &Window,
    base: &NoiseModel,
    substeps: usize,
) -> Result<()> {
    let ops = window_ops(stepper.kernel.space(), window, base, substeps)?;
    for _ in 0..substeps {
        stepper.adjoint(op, &ops.increments, &ops.channels, ops.dt)?;
    }
    Ok(())
}

/// Probability that one photon starting in the first of two cavities ends
/// in the second after a pi/2 swap at rate `g_bs`, with both cavities'
/// elevated rates multiplied by `multiplier`.
pub fn swap_fidelity(
    pair: [ModeRates; 2],
    multiplier: f64,
    elevation: WindowElevation,
    g_bs: f64,
    substeps: usize,
) -> Result<f64> {
    let space = make_space(2, 3)?;
    let base = NoiseModel::new(
        vec![pair[0].up, pair[1].up],
        vec![pair[0].down, pair[1].down],
        vec![pair[0].phi, pair[1].phi],
    )?;
    let window = Window {
        splitters: vec![BeamsplitterSpec::new(0, 1, FRAC_PI_2, FRAC_PI_2)?],
        multipliers: vec![multiplier],
        duration: FRAC_PI_2 / g_bs,
        elevation,
    };
    let mut stepper = Stepper::new(space);
    let mut rho = Array2::zeros((space.dim(), space.dim()));
    let start = space.index_of(&[1, 0])?;
    rho[[start, start]] = Complex64::new(1.0, 0.0);
    run_window(&mut stepper, &mut rho, &window, &base, substeps)?;
    Ok(rho[[space.index_of(&[0, 1])?, space.index_of(&[0, 1])?]].re)
}

/// Loss multiplier for which [`swap_fidelity`] equals `fidelity`, found by
/// bisection to a relative tolerance of 1e-6.
pub fn calibrate_multiplier(pair: [ModeRates; 2], fidelity: f64, ed: &EdSettings) -> Result<f64> {
    if !(fidelity > 0.0 && fidelity < 1.0) {
        return Err(Error::invalid(format!("fidelity {fidelity} must lie strictly between 0 and 1")));
    }
    let unreachable = |reason: String| Error::FidelityUnreachable { requested: fidelity, reason };
    let elevated = |r: &ModeRates| match ed.elevation {
        WindowElevation::All => r.total(),
        WindowElevation::DecayDephasing => r.down + r.phi,
    };
    if pair.iter().all(|r| elevated(r) == 0.0) {
        return Err(unreachable("both cavities lack an elevated rate to raise".into()));
    }
    let f = |mu: f64| swap_fidelity(pair, mu, ed.elevation, ed.g_bs, ed.substeps);
    let at_base = f(1.0)?;
    if at_base < fidelity {
        return Err(unreachable(format!("the unelevated rates already limit the swap to {at_base:.6}")));
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    loop {
        match f(hi) {
            Ok(v) if v < fidelity => break,
            Ok(_) => {}
            // the window step became unstable before the fidelity dropped
            Err(Error::StabilityGuard { .. }) => break,
            Err(e) => return Err(e),
        }
        lo = hi;
        hi *= 2.0;
        if hi > MULTIPLIER_CAP {
            return Err(unreachable("no finite loss multiplier lowers the swap fidelity that far".into()));
        }
    }
    while (hi - lo) / lo > MULTIPLIER_RTOL {
        let mid = 0.5 * (lo + hi);
        match f(mid) {
            Ok(v) if v >= fidelity => lo = mid,
            Ok(_) | Err(Error::StabilityGuard { .. }) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Multiplier for every splitter of `plan`, indexed like `plan.sequence`.
/// Ideal settings give all ones.
pub(crate) fn plan_multipliers(plan: &EdPlan, noise: &NoiseModel, ed: &EdSettings) -> Result<Vec<f64>> {
    if ed.is_ideal() {
        return Ok(vec![1.0; plan.sequence.len()]);
    }
    let mut cache: Vec<([ModeRates; 2], f64)> = Vec::new();
    plan.sequence
        .iter()
        .map(|s| {
            let pair = [noise.rates(s.mode_a), noise.rates(s.mode_b)];
            if let Some((_, mu)) = cache.iter().find(|(p, _)| *p == pair) {
                return Ok(*mu);
            }
            let mu = calibrate_multiplier(pair, ed.fidelity, ed)?;
            cache.push((pair, mu));
            Ok(mu)
        })
        .collect()
}

/// Apply the ED of `plan` to `rho` with gates of the swap fidelity in `ed`.
/// A fidelity of one gives the ideal unitary conjugation.
pub fn lossy_ed_apply(
    rho: &DensityMatrix,
    plan: &EdPlan,
    noise: &NoiseModel,
    ed: &EdSettings,
) -> Result<DensityMatrix> {
    let space = *rho.space();
    if plan.n_cavities != space.n_modes() || noise.n_cavities() != space.n_modes() {
        return Err(Error::invalid("plan, noise model and state disagree on the cavity count"));
    }
    ed.validate()?;
    if ed.is_ideal() {
        let mut out = rho.clone();
        for spec in &plan.sequence {
            spec.local(space.cutoff())?.conjugate_in_place(&mut out)?;
        }
        return Ok(out);
    }
    let multipliers = plan_multipliers(plan, noise, ed)?;
    let mut stepper = Stepper::new(space);
    let mut matrix = rho.matrix().clone();
    for window in schedule(plan, &multipliers, ed, false) {
        run_window(&mut stepper, &mut matrix, &window, noise, ed.substeps)?;
    }
    DensityMatrix::new(space, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number_state;
    use crate::gates::EdScheme;

    const G_BS: f64 = 2.0 * std::f64::consts::PI * 1e6;

    fn settings(substeps: usize, elevation: WindowElevation) -> EdSettings {
        EdSettings { substeps, elevation, ..EdSettings::ideal(EdScheme::Binary) }
    }

    fn pair(down: f64) -> [ModeRates; 2] {
        let r = ModeRates { up: down * 1e-3, down, phi: down / 10.0 };
        [r, r]
    }

    #[test]
    fn lossless_swap_is_complete() {
        let f = swap_fidelity([ModeRates::default(); 2], 1.0, WindowElevation::All, G_BS, 64).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_multiplier_hits_target() {
        let p = pair(440.0);
        for elevation in [WindowElevation::DecayDephasing, WindowElevation::All] {
            for target in [0.99, 0.999] {
                let mu = calibrate_multiplier(p, target, &settings(128, elevation)).unwrap();
                let got = swap_fidelity(p, mu, elevation, G_BS, 128).unwrap();
                assert!((got - target).abs() < 1e-6, "{target}: {got}");
                assert!(mu > 1.0);
            }
        }
    }

    #[test]
    fn unreachable_fidelities() {
        let all = settings(32, WindowElevation::All);
        let err = calibrate_multiplier([ModeRates::default(); 2], 0.99, &all).unwrap_err();
        assert!(matches!(err, Error::FidelityUnreachable { .. }));
        let heating = ModeRates { up: 1.0, ..ModeRates::default() };
        let err = calibrate_multiplier([heating; 2], 0.99, &settings(32, WindowElevation::DecayDephasing)).unwrap_err();
        assert!(matches!(err, Error::FidelityUnreachable { .. }));
        // base loss alone already below the request
        let err = calibrate_multiplier(pair(1e5), 0.9999, &all).unwrap_err();
        assert!(matches!(err, Error::FidelityUnreachable { .. }));
    }

    #[test]
    fn unit_fidelity_is_the_ideal_gate() {
        let space = make_space(2, 4).unwrap();
        let plan = EdPlan::new(EdScheme::Binary, 2).unwrap();
        let rho = DensityMatrix::from_pure(&number_state(&space, &[2, 0]).unwrap());
        let noise = NoiseModel::uniform(2, 0.5, 440.0, 44.0);
        let got = lossy_ed_apply(&rho, &plan, &noise, &settings(256, WindowElevation::All)).unwrap();
        let (u, _) = crate::gates::build_ed(&space, EdScheme::Binary, 2).unwrap();
        let want = u.conjugate(&rho).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-9);
    }

    #[test]
    fn lossy_ed_preserves_trace_and_loses_photons() {
        let space = make_space(2, 4).unwrap();
        let plan = EdPlan::new(EdScheme::Binary, 2).unwrap();
        let rho = DensityMatrix::from_pure(&number_state(&space, &[1, 0]).unwrap());
        let noise = NoiseModel::uniform(2, 0.5, 440.0, 44.0);
        let out =
            lossy_ed_apply(&rho, &plan, &noise, &EdSettings { fidelity: 0.99, ..settings(256, WindowElevation::All) })
                .unwrap();
        assert!((out.trace().re - 1.0).abs() < 1e-10);
        assert!(out.hermiticity_error() < 1e-14);
        let vacuum = out.matrix()[[0, 0]].re;
        // half a swap at 99% costs roughly half a percent
        assert!(vacuum > 1e-3 && vacuum < 1e-2, "{vacuum}");
    }

    #[test]
    fn inverse_schedule_reverses_layers() {
        let plan = EdPlan::new(EdScheme::Binary, 4).unwrap();
        let ed = settings(16, WindowElevation::All);
        let fwd = schedule(&plan, &[1.0; 3], &ed, false);
        let inv = schedule(&plan, &[1.0; 3], &ed, true);
        assert_eq!(fwd.len(), 2);
        assert_eq!(fwd[0].splitters.len(), 1);
        assert_eq!(inv[0].splitters.len(), 2);
        assert!(inv[0].splitters.iter().all(|s| s.theta < 0.0));
    }

    #[test]
    fn heating_is_only_raised_on_request() {
        let plan = EdPlan::new(EdScheme::Binary, 2).unwrap();
        let base = NoiseModel::uniform(2, 0.5, 440.0, 44.0);
        for (elevation, up) in [(WindowElevation::DecayDephasing, 0.5), (WindowElevation::All, 5.0)] {
            let window = &schedule(&plan, &[10.0], &settings(16, elevation), false)[0];
            let rates = window.rates(&base);
            assert_eq!(rates.gamma_up, vec![up; 2]);
            assert_eq!(rates.gamma_down, vec![4400.0; 2]);
            assert_eq!(rates.gamma_phi, vec![440.0; 2]);
        }
    }
}
