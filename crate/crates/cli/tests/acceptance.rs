//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fock_haloscope::drive::{mc_population, mean_population_detuned};
use fock_haloscope::engine::NoiseModel;
use fock_haloscope::fock::make_space;
use fock_haloscope::gates::{verification_cutoff, verify_ed, EdGate, EdPlan, EdScheme, VerifyOptions};
use fock_haloscope::protocol::{
    calibration_rates, efficiency, optimal_tau_int, simulate_populations, snr_sweep, tau_grid, BackendChoice,
    ProtocolConfig,
};
use fock_haloscope::sensitivity::{
    exclusion_epsilon, fit_exclusion, scan_rate, thermal_occupation, SensitivityParams, DEFAULT_ZETA_SNR,
};
use fock_haloscope::units::gev_per_cm3_to_si;

const OMEGA: f64 = 2.0 * PI * 7e9;
const Q_CAV: f64 = 1e8;
const COUPLING: f64 = 73.6;

fn tau_dm() -> f64 {
    1e6 / OMEGA
}

/// Two-cavity reference setup at 7 GHz and 50 mK with no SPAM overhead.
fn reference(n: usize, m: usize) -> ProtocolConfig {
    let n_th = thermal_occupation(OMEGA, 0.050);
    let mut config = ProtocolConfig::new(NoiseModel::thermal(n, OMEGA, Q_CAV, n_th), m, COUPLING, tau_dm());
    config.tau_spam = 0.0;
    config
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Check = fn() -> Outcome;

fn gate_algebra() -> Outcome {
    let options = VerifyOptions { alpha: 0.05, max_fock: 3, tolerance: 1e-9 };
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for n in [1, 2, 4] {
        for scheme in [EdScheme::Linear, EdScheme::Binary] {
            let space = make_space(n, verification_cutoff(options.max_fock))?;
            let gate = EdGate::new(space, EdPlan::new(scheme, n)?)?;
            let r = verify_ed(&gate, n, &options)?;
            let residual = r.conjugation_residual.max(r.displacement_residual).max(r.sum_rule_residual);
            worst = worst.max(residual);
            passed &= residual < 1e-9;
        }
    }
    Ok((passed, format!("worst residual {worst:.2e} (< 1e-9)")))
}

fn drive_oracle() -> Outcome {
    let tau = 1.0;
    let grid: Vec<f64> = (0..50).map(|k| 20.0 * tau * k as f64 / 49.0).collect();
    let mut worst: f64 = 0.0;
    for (g, delta) in [(1.0, 0.0), (1.0, 2.0)] {
        let curve = mc_population(g, tau, delta, &grid, 10_000, 2024)?;
        for (k, &t) in grid.iter().enumerate() {
            let diff = (curve.mean[k] - mean_population_detuned(g, tau, delta, t)).abs();
            let z = if curve.stderr[k] > 0.0 {
                diff / curve.stderr[k]
            } else if diff < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
    }
    Ok((worst <= 3.0, format!("max |z| {worst:.2} over both drives (<= 3)")))
}

fn dlme_convergence() -> Outcome {
    let samples: Vec<f64> = [5.0, 20.0, 40.0].iter().map(|x| x * tau_dm()).collect();
    let mut trace: f64 = 0.0;
    let mut shift: f64 = 0.0;
    for m in 0..=5 {
        let config = reference(2, m);
        let (s, b, _) = simulate_populations(&config, samples.clone())?;
        trace = trace.max(s.trace_error.iter().chain(&b.trace_error).copied().fold(0.0, f64::max));
        let mut fine = config.clone();
        fine.dt = Some(s.dt / 2.0);
        let (s2, b2, _) = simulate_populations(&fine, samples.clone())?;
        for k in 0..samples.len() {
            shift = shift.max(rel(s2.population[k], s.population[k])).max(rel(b2.population[k], b.population[k]));
        }
    }
    let passed = trace < 1e-6 && shift < 0.005;
    Ok((passed, format!("trace drift {trace:.2e} (< 1e-6), dt/2 shift {:.3}% (< 0.5%)", 100.0 * shift)))
}

fn backend_agreement() -> Outcome {
    let samples: Vec<f64> = (1..=40).map(|k| 0.25 * k as f64 * tau_dm()).collect();
    let mut worst: f64 = 0.0;
    for m in 0..=2 {
        let mut full = reference(2, m);
        full.backend = BackendChoice::Full;
        let mut effective = full.clone();
        effective.backend = BackendChoice::Effective;
        let (fs, fb, _) = simulate_populations(&full, samples.clone())?;
        let (es, eb, _) = simulate_populations(&effective, samples.clone())?;
        for k in 0..samples.len() {
            worst = worst.max(rel(es.population[k], fs.population[k])).max(rel(eb.population[k], fb.population[k]));
        }
    }
    Ok((worst < 0.02, format!("max relative gap {:.3}% (< 2%)", 100.0 * worst)))
}

fn scaling_laws() -> Outcome {
    let grid = tau_grid(tau_dm(), 0.2, 20.0, 12);
    let lossless = |n: usize, m: usize| -> Result<f64, Box<dyn std::error::Error>> {
        let mut config = reference(n, m);
        config.noise = config.noise.heating_only();
        Ok(snr_sweep(&config, &grid)?.star.snr)
    };
    let base = lossless(1, 0)?;
    let mut worst: f64 = 0.0;
    for n in [1, 2, 4, 8] {
        for m in 0..=5 {
            let expected = n as f64 * ((m + 1) as f64).sqrt();
            worst = worst.max(rel(lossless(n, m)? / base, expected));
        }
    }
    let params = |n, m| SensitivityParams {
        zeta_snr: DEFAULT_ZETA_SNR,
        eta: 1.0,
        rho: gev_per_cm3_to_si(0.45),
        q_dm: 1e6,
        q_cav: Q_CAV,
        n_cavities: n,
        fock: m,
        temperature: 0.050,
    };
    let ideal = scan_rate(&params(8, 5), OMEGA, 1e-16)?.hz_per_s / scan_rate(&params(1, 0), OMEGA, 1e-16)?.hz_per_s;
    let passed = worst < 0.02 && rel(ideal, 384.0) < 1e-12;
    Ok((passed, format!("worst SNR ratio error {:.3}% (< 2%), ideal scan ratio {ideal:.6} (384)", 100.0 * worst)))
}

fn snr_curves() -> Outcome {
    let grid = tau_grid(tau_dm(), 0.2, 60.0, 120);
    let mut stars = Vec::new();
    let mut interior = true;
    let mut worst: f64 = 0.0;
    for m in 0..=5 {
        let config = reference(2, m);
        let sweep = snr_sweep(&config, &grid)?;
        interior &= sweep.star.interior;
        let closed = optimal_tau_int(&config.semiclassical()?)?.closed_form;
        worst = worst.max(rel(closed, sweep.star.tau_int));
        stars.push(sweep.star.tau_int / tau_dm());
    }
    let decreasing = stars.windows(2).all(|w| w[1] < w[0]);
    let passed = interior && decreasing && worst <= 0.2;
    let listed: Vec<String> = stars.iter().map(|s| format!("{s:.2}")).collect();
    Ok((
        passed,
        format!(
            "interior {interior}, optima/tau_dm [{}] decreasing {decreasing}, closed-form gap {:.1}% (<= 20%)",
            listed.join(", "),
            100.0 * worst
        ),
    ))
}

fn scan_enhancement() -> Outcome {
    let grid = tau_grid(tau_dm(), 0.2, 40.0, 100);
    let eta = |n: usize, m: usize| -> Result<f64, Box<dyn std::error::Error>> {
        let mut config = reference(n, m);
        config.ed.fidelity = 0.99;
        Ok(efficiency(&config, &snr_sweep(&config, &grid)?)?)
    };
    let (single, array) = (eta(1, 0)?, eta(8, 5)?);
    let enhancement = 384.0 * (array / single).powi(2);
    let passed = (200.0..=384.0).contains(&enhancement);
    Ok((passed, format!("(8,5)/(1,0) enhancement {enhancement:.1} in [200, 384], eta {array:.3} vs {single:.3}")))
}

fn calibration() -> Outcome {
    let duration = 2e-3;
    let mut worst: f64 = 0.0;
    for (n, heating) in [(2, vec![0.5, 1.5]), (4, vec![0.5, 1.0, 1.5, 2.0])] {
        let noise = NoiseModel::new(heating, vec![0.0; n], vec![0.0; n])?;
        let mut config = ProtocolConfig::new(noise, 1, 0.0, tau_dm());
        config.dt = Some(1e-5);
        let report = calibration_rates(&config, duration)?;
        worst = worst.max(rel(report.primary_rate, report.spectator_mean()));
    }
    let noise = NoiseModel::uniform(2, 1.0, 0.0, 50.0);
    let mut dephased = ProtocolConfig::new(noise, 1, 0.0, tau_dm());
    dephased.dt = Some(1e-5);
    let report = calibration_rates(&dephased, duration)?;
    let excess = report.spectator_mean() - report.primary_rate;
    let passed = worst < 0.01 && excess > 0.01 * report.primary_rate;
    Ok((
        passed,
        format!(
            "heating-only mismatch {:.3}% (< 1%), dephased spectator excess {excess:.3}/s over {:.3}/s",
            100.0 * worst,
            report.primary_rate
        ),
    ))
}

fn exclusion_shape() -> Outcome {
    let omegas: Vec<f64> = (0..91).map(|k| 2.0 * PI * (3e9 + 1e8 * k as f64)).collect();
    let mut curves = Vec::new();
    let mut worst: f64 = 0.0;
    for t in [0.025, 0.050, 0.075] {
        let params = SensitivityParams {
            zeta_snr: DEFAULT_ZETA_SNR,
            eta: 1.0,
            rho: gev_per_cm3_to_si(0.45),
            q_dm: 1e6,
            q_cav: Q_CAV,
            n_cavities: 4,
            fock: 5,
            temperature: t,
        };
        let eps = omegas.iter().map(|&w| exclusion_epsilon(&params, w, 10.0)).collect::<Result<Vec<_>, _>>()?;
        worst = worst.max(rel(fit_exclusion(&omegas, &eps, t)?.exponent, 0.25));
        curves.push(eps);
    }
    let ordered = curves.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(cold, warm)| cold < warm));
    Ok((worst < 0.05 && ordered, format!("exponent error {:.2e} (< 5%), strict ordering {ordered}", worst)))
}

fn cli_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn determinism() -> Outcome {
    let mut mismatches = Vec::new();
    let commands = ["validate-gates", "mc-dm", "simulate-cycle", "snr-sweep", "scan-rate", "exclusion", "reach"];
    for command in commands {
        let config = cli_dir().join("configs").join(format!("{command}.toml"));
        let mut runs = Vec::new();
        for _ in 0..2 {
            let out = tempfile::tempdir()?;
            let status = Command::new(env!("CARGO_BIN_EXE_fockscan"))
                .args([command, "--config", config.to_str().unwrap(), "--out", out.path().to_str().unwrap()])
                .env_remove("FOCKSCAN_SEED")
                .env_remove("FOCKSCAN_BACKEND")
                .output()?
                .status;
            if !status.success() {
                mismatches.push(format!("{command} exited {status}"));
            }
            let mut files = Vec::new();
            for entry in fs::read_dir(out.path())? {
                let path = entry?.path();
                files.push((path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path)?));
            }
            files.sort();
            runs.push(files);
        }
        if runs[0] != runs[1] {
            mismatches.push(format!("{command} differs between runs"));
        }
        for (name, bytes) in &runs[0] {
            if fs::read(cli_dir().join("golden").join(name)).ok().as_ref() != Some(bytes) {
                mismatches.push(format!("{name} differs from golden"));
            }
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{} subcommands byte-identical across runs and to golden files", commands.len())
    } else {
        mismatches.join("; ")
    };
    Ok((mismatches.is_empty(), detail))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("gate algebra", gate_algebra),
        ("stochastic drive oracle", drive_oracle),
        ("DLME convergence and conservation", dlme_convergence),
        ("backend cross-validation", backend_agreement),
        ("ideal scaling laws", scaling_laws),
        ("SNR curves versus integration time", snr_curves),
        ("scan-rate enhancement at 99% fidelity", scan_enhancement),
        ("calibration sum rule", calibration),
        ("exclusion shape", exclusion_shape),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!passed);
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            k + 1,
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
