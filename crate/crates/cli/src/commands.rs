use fock_haloscope::drive::{mc_population, mean_population_detuned};
use fock_haloscope::engine::Backend;
use fock_haloscope::fock::make_space;
use fock_haloscope::gates::{verification_cutoff, verify_ed, EdGate, EdPlan, EdScheme, VerifyOptions};
use fock_haloscope::protocol::{
    diagnostics, optimal_tau_int, simulate_populations, snr_from_counts, snr_sweep, Diagnostics, SnrSweep,
};
use fock_haloscope::sensitivity::{exclusion_epsilon, fit_exclusion, reach_band, scan_rate, ReachRequest};
use fock_haloscope::table::{json_number, SweepTable};
use fock_haloscope::units::{angular_to_hz, hz_to_angular, millikelvin_to_kelvin};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

pub struct Outputs {
    pub table: Option<SweepTable>,
    pub summary: Value,
    /// False when a verification inside the command failed.
    pub verified: bool,
}

/// Run-level facts stamped into every CSV header, ahead of command-specific
/// keys.
pub struct RunInfo {
    pub backends: Vec<Backend>,
    pub dts: Vec<f64>,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub fn stamp(table: &mut SweepTable, run: &RunInfo) {
    if !run.backends.is_empty() {
        let names: Vec<&str> = run
            .backends
            .iter()
            .map(|b| match b {
                Backend::Full => "full",
                Backend::Effective => "effective",
            })
            .collect();
        table.set_meta("backend", join(&names));
        table.set_meta("dt_s", join(&run.dts.iter().map(|d| format!("{d:e}")).collect::<Vec<_>>()));
    }
}

fn diagnostics_json(d: &Diagnostics) -> Value {
    json!({
        "backend": d.backend,
        "dt_s": d.dt,
        "max_trace_error": d.max_trace_error,
        "max_leakage": d.max_leakage,
        "max_hermiticity_correction": d.max_hermiticity_correction,
        "window_multiplier": d.window_multiplier,
    })
}

fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
}

pub fn validate_gates(config: &RunConfig, cavities: &[usize], scheme: Option<EdScheme>) -> Result<Outputs, CliError> {
    let section = config.gates.clone().unwrap_or_default();
    let counts = if cavities.is_empty() { section.n_cavities.clone() } else { cavities.to_vec() };
    let schemes = scheme.map(|s| vec![s]).unwrap_or_else(|| section.schemes.clone());
    let options = VerifyOptions { alpha: section.alpha, max_fock: section.max_fock, tolerance: section.tolerance };
    let mut reports = Vec::new();
    let mut passed = true;
    for &n in &counts {
        for &scheme in &schemes {
            let plan = EdPlan::new(scheme, n)?;
            let space = make_space(n, verification_cutoff(options.max_fock))?;
            let report = verify_ed(&EdGate::new(space, plan)?, n, &options)?;
            passed &= report.passed;
            reports.push(json!({ "scheme": scheme, "report": report }));
        }
    }
    Ok(Outputs { table: None, summary: json!({ "passed": passed, "checks": reports }), verified: passed })
}

pub fn mc_dm(config: &RunConfig, seed: u64) -> Result<(Outputs, RunInfo), CliError> {
    let mc = config.mc.clone().unwrap_or_default();
    let tau = mc.tau_dm_s;
    let grid: Vec<f64> = mc.t_over_tau_dm.values().iter().map(|x| x * tau).collect();
    let curve = mc_population(mc.coupling_rad_per_s, tau, mc.detuning_rad_per_s, &grid, mc.trajectories, seed)?;
    let mut table = SweepTable::new(&["t_over_tauDM", "n_analytic", "n_mc", "mc_stderr"]);
    let mut worst_z: f64 = 0.0;
    for (k, &t) in grid.iter().enumerate() {
        let analytic = mean_population_detuned(mc.coupling_rad_per_s, tau, mc.detuning_rad_per_s, t);
        let (mean, se) = (curve.mean[k], curve.stderr[k]);
        if se > 0.0 {
            worst_z = worst_z.max((mean - analytic).abs() / se);
        }
        table.push(vec![t / tau, analytic, mean, se])?;
    }
    table.set_meta("trajectories", mc.trajectories);
    let summary = json!({
        "trajectories": mc.trajectories,
        "points": grid.len(),
        "max_abs_z": worst_z,
        "within_3_sigma": worst_z <= 3.0,
    });
    Ok((Outputs { table: Some(table), summary, verified: true }, RunInfo { backends: vec![], dts: vec![] }))
}

pub fn simulate_cycle(config: &RunConfig) -> Result<(Outputs, RunInfo), CliError> {
    let cycle = require(&config.cycle, "cycle")?;
    let protocol = config.protocol(config.cavity.n_cavities, config.cavity.fock)?;
    let tau_dm = protocol.tau_dm;
    let samples: Vec<f64> = cycle.tau_int_over_tau_dm.values().iter().map(|x| x * tau_dm).collect();
    if samples.is_empty() {
        return Err(CliError::Config("the integration-time grid is empty".into()));
    }
    let (signal, background, backend) = simulate_populations(&protocol, samples)?;
    let mut table = SweepTable::new(&[
        "t_s",
        "tau_int_over_tauDM",
        "n_s",
        "n_b",
        "snr",
        "trace_error_signal",
        "trace_error_background",
        "leakage_signal",
        "leakage_background",
    ]);
    let mut last = Value::Null;
    for k in 0..signal.t.len() {
        let t = signal.t[k];
        let tau_cycle = protocol.tau_cycle(t)?;
        let (n_s, n_b) = (signal.population[k].max(0.0), background.population[k].max(0.0));
        let snr = snr_from_counts(n_s, n_b, tau_cycle, protocol.tau_tot)?;
        table.push(vec![
            t,
            t / tau_dm,
            n_s,
            n_b,
            snr,
            signal.trace_error[k],
            background.trace_error[k],
            signal.leakage[k],
            background.leakage[k],
        ])?;
        last = json!({
            "tau_int_s": t,
            "tau_cycle_s": tau_cycle,
            "n_s": n_s,
            "n_b": n_b,
            "r_s_per_s": n_s / tau_cycle,
            "r_b_per_s": n_b / tau_cycle,
            "snr": json_number(snr),
        });
    }
    let diag = diagnostics(backend, &signal, &background);
    table.set_meta("n_cavities", protocol.n_cavities);
    table.set_meta("fock", protocol.fock);
    let summary = json!({
        "n_cavities": protocol.n_cavities,
        "fock": protocol.fock,
        "coupling_rad_per_s": protocol.coupling,
        "tau_dm_s": tau_dm,
        "tau_ed_s": protocol.tau_ed()?,
        "final": last,
        "diagnostics": diagnostics_json(&diag),
    });
    let run = RunInfo { backends: vec![backend], dts: vec![diag.dt] };
    Ok((Outputs { table: Some(table), summary, verified: true }, run))
}

struct Curve {
    n_cavities: usize,
    fock: usize,
    sweep: SnrSweep,
    ideal_snr: f64,
    tau_dm: f64,
    closed_form: f64,
    refined: f64,
}

fn run_curves(config: &RunConfig, arrays: &[(usize, usize)], grid: &[f64]) -> Result<Vec<Curve>, CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("the integration-time grid is empty".into()));
    }
    arrays
        .par_iter()
        .map(|&(n, m)| {
            let protocol = config.protocol(n, m)?;
            let taus: Vec<f64> = grid.iter().map(|x| x * protocol.tau_dm).collect();
            let sweep = snr_sweep(&protocol, &taus)?;
            let optimum = optimal_tau_int(&protocol.semiclassical()?)?;
            Ok(Curve {
                n_cavities: n,
                fock: m,
                sweep,
                ideal_snr: protocol.ideal_snr()?,
                tau_dm: protocol.tau_dm,
                closed_form: optimum.closed_form,
                refined: optimum.refined,
            })
        })
        .collect()
}

fn grid_pairs(n_cavities: &[usize], fock: &[usize]) -> Vec<(usize, usize)> {
    n_cavities.iter().flat_map(|&n| fock.iter().map(move |&m| (n, m))).collect()
}

fn run_info(curves: &[Curve]) -> RunInfo {
    RunInfo {
        backends: curves.iter().map(|c| c.sweep.diagnostics.backend).collect(),
        dts: curves.iter().map(|c| c.sweep.diagnostics.dt).collect(),
    }
}

pub fn snr_sweep_command(config: &RunConfig) -> Result<(Outputs, RunInfo), CliError> {
    let sweep = require(&config.sweep, "sweep")?;
    let curves = run_curves(config, &grid_pairs(&sweep.n_cavities, &sweep.fock), &sweep.tau_int_over_tau_dm.values())?;
    let mut table = SweepTable::new(&["n_cavities", "fock", "tau_int_over_tauDM", "snr", "n_s", "n_b"]);
    let mut stars = Vec::new();
    for c in &curves {
        for p in &c.sweep.points {
            table.push(vec![c.n_cavities as f64, c.fock as f64, p.tau_int / c.tau_dm, p.snr, p.n_s, p.n_b])?;
        }
        let star = c.sweep.star;
        stars.push(json!({
            "n_cavities": c.n_cavities,
            "fock": c.fock,
            "argmax_tau_int_over_tauDM": star.tau_int / c.tau_dm,
            "max_snr": json_number(star.snr),
            "interior": star.interior,
            "closed_form_tau_opt_over_tauDM": json_number(c.closed_form / c.tau_dm),
            "refined_tau_opt_over_tauDM": json_number(c.refined / c.tau_dm),
            "diagnostics": diagnostics_json(&c.sweep.diagnostics),
        }));
    }
    let run = run_info(&curves);
    Ok((Outputs { table: Some(table), summary: json!({ "curves": stars }), verified: true }, run))
}

pub fn scan_rate_command(config: &RunConfig) -> Result<(Outputs, RunInfo), CliError> {
    let scan = require(&config.scan, "scan")?;
    let mut pairs = grid_pairs(&scan.n_cavities, &scan.fock);
    if !pairs.contains(&(1, 0)) {
        pairs.insert(0, (1, 0));
    }
    let omega = config.omega();
    let mut rows = Vec::new();
    let mut run = RunInfo { backends: vec![], dts: vec![] };
    if scan.simulate {
        let curves = run_curves(config, &pairs, &scan.tau_int_over_tau_dm.values())?;
        run = run_info(&curves);
        let reference =
            curves.iter().find(|c| (c.n_cavities, c.fock) == (1, 0)).expect("reference curve").sweep.star.snr;
        for c in &curves {
            let star = c.sweep.star;
            let eta = star.snr / c.ideal_snr;
            rows.push((c.n_cavities, c.fock, star.snr, star.tau_int / c.tau_dm, eta, (star.snr / reference).powi(2)));
        }
    } else {
        for &(n, m) in &pairs {
            rows.push((n, m, f64::NAN, f64::NAN, 1.0, (n * n * (m + 1)) as f64));
        }
    }
    let mut table = SweepTable::new(&[
        "n_cavities",
        "fock",
        "snr_max",
        "tau_opt_over_tauDM",
        "eta",
        "normalized_scan_rate",
        "ideal_normalized_scan_rate",
        "scan_rate_hz_per_s",
        "tau_tot_per_step_s",
    ]);
    let mut entries = Vec::new();
    for (n, m, snr, tau_opt, eta, normalized) in rows {
        let params = config.sensitivity(n, m, eta.min(1.0), scan.zeta_snr);
        let rate = scan_rate(&params, omega, scan.epsilon)?;
        let ideal = (n * n * (m + 1)) as f64;
        table.push(vec![n as f64, m as f64, snr, tau_opt, eta, normalized, ideal, rate.hz_per_s, rate.tau_tot])?;
        entries.push(json!({
            "n_cavities": n,
            "fock": m,
            "eta": json_number(eta),
            "normalized_scan_rate": json_number(normalized),
            "ideal_normalized_scan_rate": ideal,
        }));
    }
    table.set_meta("epsilon", scan.epsilon);
    let summary = json!({ "simulated": scan.simulate, "entries": entries });
    Ok((Outputs { table: Some(table), summary, verified: true }, run))
}

pub fn exclusion_command(config: &RunConfig) -> Result<(Outputs, RunInfo), CliError> {
    let ex = require(&config.exclusion, "exclusion")?;
    if ex.points < 2 || ex.temperatures_mk.is_empty() {
        return Err(CliError::Config("exclusion needs at least two frequencies and one temperature".into()));
    }
    let freqs: Vec<f64> = (0..ex.points)
        .map(|k| ex.freq_start_hz + (ex.freq_stop_hz - ex.freq_start_hz) * k as f64 / (ex.points - 1) as f64)
        .collect();
    let omegas: Vec<f64> = freqs.iter().map(|&f| hz_to_angular(f)).collect();
    let mut table = SweepTable::new(&["freq_hz", "temperature_mk", "epsilon"]);
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut fits = Vec::new();
    for &t_mk in &ex.temperatures_mk {
        let mut params = config.sensitivity(config.cavity.n_cavities, config.cavity.fock, ex.eta, ex.zeta_snr);
        params.temperature = millikelvin_to_kelvin(t_mk);
        let eps = omegas.iter().map(|&w| exclusion_epsilon(&params, w, ex.tau_tot_s)).collect::<Result<Vec<_>, _>>()?;
        for (f, e) in freqs.iter().zip(&eps) {
            table.push(vec![*f, t_mk, *e])?;
        }
        let fit = fit_exclusion(&omegas, &eps, params.temperature)?;
        fits.push(json!({
            "temperature_mk": t_mk,
            "coefficient_si": fit.coefficient,
            "exponent": fit.exponent,
            "exponent_relative_error": (fit.exponent - 0.25).abs() / 0.25,
        }));
        curves.push(eps);
    }
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by(|&a, &b| ex.temperatures_mk[a].total_cmp(&ex.temperatures_mk[b]));
    let ordered = order.windows(2).all(|w| curves[w[0]].iter().zip(&curves[w[1]]).all(|(lo, hi)| lo < hi));
    table.set_meta("tau_tot_s", ex.tau_tot_s);
    let summary = json!({ "fits": fits, "colder_is_strictly_better": ordered });
    Ok((Outputs { table: Some(table), summary, verified: true }, RunInfo { backends: vec![], dts: vec![] }))
}

pub fn reach_command(config: &RunConfig) -> Result<(Outputs, RunInfo), CliError> {
    let reach = require(&config.reach, "reach")?;
    let request = ReachRequest {
        target_epsilon: reach.target_epsilon,
        budget_s: reach.budget_s,
        omega_start: hz_to_angular(reach.freq_start_hz),
        omega_stop: hz_to_angular(reach.freq_stop_hz),
    };
    let mut table = SweepTable::new(&["n_cavities", "fock", "freq_hz", "cumulative_time_s"]);
    let mut bands = Vec::new();
    for a in &reach.arrays {
        let params = config.sensitivity(a.n_cavities, a.fock, reach.eta, reach.zeta_snr);
        let band = reach_band(&params, &request)?;
        for &(f, t) in &band.trace {
            table.push(vec![a.n_cavities as f64, a.fock as f64, f, t])?;
        }
        bands.push(json!({
            "n_cavities": a.n_cavities,
            "fock": a.fock,
            "freq_start_hz": angular_to_hz(band.omega_start),
            "freq_end_hz": angular_to_hz(band.omega_end),
            "width_hz": band.width_hz(),
            "steps": band.steps,
            "time_used_s": band.time_used_s,
            "stopped_at_limit": band.stopped_at_limit,
        }));
    }
    table.set_meta("target_epsilon", reach.target_epsilon);
    table.set_meta("budget_s", reach.budget_s);
    let summary = json!({ "bands": bands });
    Ok((Outputs { table: Some(table), summary, verified: true }, RunInfo { backends: vec![], dts: vec![] }))
}
