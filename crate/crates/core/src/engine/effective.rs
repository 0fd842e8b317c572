//! Single-mode model of the cycle.
//!
//! The `m` prepared photons always occupy one collective mode
//! `b = sum_j u_j a_j`. During the integration phase `u` is the uniform
//! superposition, and during a beamsplitter window it rotates with the
//! single-photon action of the gates. Cavity losses project onto `b` as
//!
//! - heating `sum_j up_j |u_j|^2`,
//! - decay `sum_j (down_j |u_j|^2 + phi_j |u_j|^2 (1 - |u_j|^2))`, where the
//!   second term is dephasing scattering photons out of `b`,
//! - dephasing `sum_j phi_j |u_j|^4`.
//!
//! Photons scattered out of `b` never return to the primary cavity at
//! readout, so only `b` is simulated.

use ndarray::Array2;
use num_complex::Complex64;

use super::dlme::{IntegrationRun, Stepper};
use super::lossy_ed::{plan_multipliers, schedule, Window};
use super::{Backend, Channel, CycleSpec, Jump, NoiseModel, PopulationSeries, RunKind};
use crate::error::Result;
use crate::fock::make_space;
use crate::gates::{BeamsplitterSpec, EdPlan};

/// Single-photon amplitudes after `splitters` act on `u`.
fn rotate(u: &mut [Complex64], splitters: &[BeamsplitterSpec]) {
    for s in splitters {
        let (c, sn) = (s.theta.cos(), s.theta.sin());
        let forward = Complex64::i() * Complex64::from_polar(sn, s.phi);
        let backward = Complex64::i() * Complex64::from_polar(sn, -s.phi);
        let (a, b) = (u[s.mode_a], u[s.mode_b]);
        u[s.mode_a] = a * c + forward * b;
        u[s.mode_b] = backward * a + b * c;
    }
}

fn projected_channels(noise: &NoiseModel, u: &[Complex64]) -> Vec<Channel> {
    let (mut up, mut down, mut phi) = (0.0, 0.0, 0.0);
    for (j, amp) in u.iter().enumerate() {
        let w = amp.norm_sqr();
        let r = noise.rates(j);
        up += r.up * w;
        down += r.down * w + r.phi * w * (1.0 - w);
        phi += r.phi * w * w;
    }
    [Channel::new(0, Jump::Raising, up), Channel::new(0, Jump::Lowering, down), Channel::new(0, Jump::Number, phi)]
        .into_iter()
        .filter(|c| c.rate > 0.0)
        .collect()
}

/// Channels for each substep of `window`, with `u` advanced to the end.
fn window_channels(window: &Window, base: &NoiseModel, u: &mut [Complex64], substeps: usize) -> Vec<Vec<Channel>> {
    let rates = window.rates(base);
    let start = u.to_vec();
    let out = (0..substeps)
        .map(|k| {
            let mut mid = start.clone();
            rotate(&mut mid, &window.partial((k as f64 + 0.5) / substeps as f64));
            projected_channels(&rates, &mid)
        })
        .collect();
    rotate(u, &window.splitters);
    out
}

/// Simulate one cycle on the collective mode only. Valid for any N.
pub fn effective_propagate_cycle(spec: &CycleSpec) -> Result<PopulationSeries> {
    spec.validate()?;
    let n = spec.n_cavities;
    let space = make_space(1, spec.cutoff())?;
    let plan = EdPlan::new(spec.ed.scheme, n)?;
    let run_noise = spec.run_noise();
    let multipliers = plan_multipliers(&plan, &spec.noise, &spec.ed)?;
    let dt = spec.dt();
    let c = space.cutoff();
    let mut stepper = Stepper::new(space);
    let substeps = spec.ed.substeps;
    let no_unitaries = [];
    let mut worst: f64 = 0.0;

    let mut rho = Array2::<Complex64>::zeros((c, c));
    rho[[spec.fock, spec.fock]] = Complex64::new(1.0, 0.0);
    let mut readout = Array2::<Complex64>::zeros((c, c));
    readout[[spec.fock + 1, spec.fock + 1]] = Complex64::new(1.0, 0.0);

    let mut u = vec![Complex64::new(0.0, 0.0); n];
    u[0] = Complex64::new(1.0, 0.0);
    let forward = schedule(&plan, &multipliers, &spec.ed, false);
    let inverse = schedule(&plan, &multipliers, &spec.ed, true);
    if spec.ed.is_ideal() {
        for w in &forward {
            rotate(&mut u, &w.splitters);
        }
    } else {
        for w in &forward {
            let dt_w = w.duration / substeps as f64;
            for channels in window_channels(w, &run_noise, &mut u, substeps) {
                worst = worst.max(stepper.forward(&mut rho, &no_unitaries, &channels, dt_w)?);
            }
        }
        let mut v = u.clone();
        let per_window: Vec<(f64, Vec<Vec<Channel>>)> = inverse
            .iter()
            .map(|w| (w.duration / substeps as f64, window_channels(w, &run_noise, &mut v, substeps)))
            .collect();
        for (dt_w, steps) in per_window.iter().rev() {
            for channels in steps.iter().rev() {
                stepper.adjoint(&mut readout, &no_unitaries, channels, *dt_w)?;
            }
        }
    }

    let drive_scale = u.iter().map(|z| z.conj()).sum::<Complex64>().norm();
    let channels = projected_channels(&run_noise, &u);
    let integration = IntegrationRun {
        channels: &channels,
        drive_modes: &[0],
        drive_scale,
        coupling: if spec.kind == RunKind::Signal { spec.coupling } else { 0.0 },
        tau_dm: spec.tau_dm,
        dt,
        leak_threshold: spec.leak_threshold,
    };
    let steps = spec.sample_steps();
    let record = integration.run(&mut stepper, &mut rho, &readout, &steps)?;

    Ok(PopulationSeries {
        backend: Backend::Effective,
        kind: spec.kind,
        dt,
        t: steps.iter().map(|&k| k as f64 * dt).collect(),
        population: record.population,
        trace_error: record.trace_error,
        leakage: record.leakage,
        max_hermiticity_correction: worst.max(record.max_hermiticity_correction),
        window_multiplier: (!spec.ed.is_ideal()).then(|| multipliers.iter().copied().fold(0.0, f64::max)),
    })
}
