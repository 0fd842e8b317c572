use ndarray::Array2;
use num_complex::Complex64;

use super::dlme::{noise_channels, IntegrationRun, Stepper};
use super::lossy_ed::{plan_multipliers, run_window, run_window_adjoint, schedule};
use super::{Backend, CycleSpec, PopulationSeries, RunKind};
use crate::error::Result;
use crate::fock::{make_space, DensityMatrix};
use crate::gates::{BeamsplitterSpec, EdPlan};

/// Simulate one cycle on the full N-cavity density matrix.
///
/// Fails with [`crate::Error::DimensionCeilingExceeded`] when `cutoff^N` is
/// too large; use [`super::effective_propagate_cycle`] instead.
pub fn propagate_cycle(spec: &CycleSpec) -> Result<PopulationSeries> {
    spec.validate()?;
    let n = spec.n_cavities;
    let space = make_space(n, spec.cutoff())?;
    let plan = EdPlan::new(spec.ed.scheme, n)?;
    let run_noise = spec.run_noise();
    let multipliers = plan_multipliers(&plan, &spec.noise, &spec.ed)?;
    let dt = spec.dt();
    let d = space.dim();
    let mut stepper = Stepper::new(space);
    let mut worst: f64 = 0.0;

    let mut occupation = vec![0; n];
    occupation[0] = spec.fock;
    let start = space.index_of(&occupation)?;
    let mut rho = Array2::<Complex64>::zeros((d, d));
    rho[[start, start]] = Complex64::new(1.0, 0.0);

    // readout projector |m+1><m+1| on the primary cavity, pulled back
    // through the inverse ED
    let mut readout = Array2::<Complex64>::zeros((d, d));
    for i in 0..d {
        if space.level(i, 0) == spec.fock + 1 {
            readout[[i, i]] = Complex64::new(1.0, 0.0);
        }
    }

    if spec.ed.is_ideal() {
        for s in &plan.sequence {
            let local = s.local(space.cutoff())?;
            local.left_multiply(&space, &mut rho)?;
            local.right_multiply_adjoint(&space, &mut rho)?;
        }
        // inverse ED applies U^dagger, so the pulled-back readout is U P U^dagger
        for s in &plan.sequence {
            let local = s.local(space.cutoff())?;
            local.left_multiply(&space, &mut readout)?;
            local.right_multiply_adjoint(&space, &mut readout)?;
        }
    } else {
        for window in schedule(&plan, &multipliers, &spec.ed, false) {
            worst = worst.max(run_window(&mut stepper, &mut rho, &window, &run_noise, spec.ed.substeps)?);
        }
        let inverse = schedule(&plan, &multipliers, &spec.ed, true);
        for window in inverse.iter().rev() {
            run_window_adjoint(&mut stepper, &mut readout, window, &run_noise, spec.ed.substeps)?;
        }
    }

    let channels = noise_channels(&run_noise);
    let drive_modes: Vec<usize> = (0..n).collect();
    let integration = IntegrationRun {
        channels: &channels,
        drive_modes: &drive_modes,
        drive_scale: 1.0,
        coupling: if spec.kind == RunKind::Signal { spec.coupling } else { 0.0 },
        tau_dm: spec.tau_dm,
        dt,
        leak_threshold: spec.leak_threshold,
    };
    let steps = spec.sample_steps();
    let record = integration.run(&mut stepper, &mut rho, &readout, &steps)?;

    Ok(PopulationSeries {
        backend: Backend::Full,
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

/// Final density matrix of a full-tensor cycle after the inverse ED, for
/// an integration time equal to the last entry of `spec.sample_times`.
///
/// Unlike [`propagate_cycle`] this keeps every mode, so populations of the
/// spectator cavities can be read off.
pub fn propagate_cycle_state(spec: &CycleSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    let n = spec.n_cavities;
    let space = make_space(n, spec.cutoff())?;
    let plan = EdPlan::new(spec.ed.scheme, n)?;
    let run_noise = spec.run_noise();
    let multipliers = plan_multipliers(&plan, &spec.noise, &spec.ed)?;
    let d = space.dim();
    let mut stepper = Stepper::new(space);

    let mut occupation = vec![0; n];
    occupation[0] = spec.fock;
    let start = space.index_of(&occupation)?;
    let mut rho = Array2::<Complex64>::zeros((d, d));
    rho[[start, start]] = Complex64::new(1.0, 0.0);

    let apply_ed = |stepper: &mut Stepper, rho: &mut Array2<Complex64>, inverse: bool| -> Result<()> {
        if spec.ed.is_ideal() {
            let specs: Vec<_> = if inverse {
                plan.sequence.iter().rev().map(|s| BeamsplitterSpec { theta: -s.theta, ..*s }).collect()
            } else {
                plan.sequence.clone()
            };
            for s in specs {
                let local = s.local(space.cutoff())?;
                local.left_multiply(&space, rho)?;
                local.right_multiply_adjoint(&space, rho)?;
            }
        } else {
            for window in schedule(&plan, &multipliers, &spec.ed, inverse) {
                run_window(stepper, rho, &window, &run_noise, spec.ed.substeps)?;
            }
        }
        Ok(())
    };

    apply_ed(&mut stepper, &mut rho, false)?;
    let channels = noise_channels(&run_noise);
    let drive_modes: Vec<usize> = (0..n).collect();
    let integration = IntegrationRun {
        channels: &channels,
        drive_modes: &drive_modes,
        drive_scale: 1.0,
        coupling: if spec.kind == RunKind::Signal { spec.coupling } else { 0.0 },
        tau_dm: spec.tau_dm,
        dt: spec.dt(),
        leak_threshold: spec.leak_threshold,
    };
    let last = spec.sample_steps().last().copied().unwrap_or(0);
    let identity = Array2::<Complex64>::eye(d);
    integration.run(&mut stepper, &mut rho, &identity, &[last])?;
    apply_ed(&mut stepper, &mut rho, true)?;
    DensityMatrix::new(space, rho)
}
