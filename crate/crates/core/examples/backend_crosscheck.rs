//! Full tensor-product propagation against the single-mode effective
//! backend for two cavities, and the effective backend alone for arrays
//! too large to hold densely.
//!
//! cargo run --release -p fock-haloscope --example backend_crosscheck

use fock_haloscope::engine::NoiseModel;
use fock_haloscope::protocol::{simulate_populations, BackendChoice, ProtocolConfig};
use fock_haloscope::sensitivity::thermal_occupation;

fn main() -> fock_haloscope::Result<()> {
    let omega = 2.0 * std::f64::consts::PI * 7e9;
    let tau_dm = 1e6 / omega;
    let n_th = thermal_occupation(omega, 0.050);
    let samples: Vec<f64> = [1.0, 2.5, 5.0, 10.0].iter().map(|x| x * tau_dm).collect();

    println!(
        "{:>2} {:>6} {:>11} {:>11} {:>8} {:>11} {:>11} {:>8}",
        "m", "t/tDM", "n_s full", "n_s eff", "gap", "n_b full", "n_b eff", "gap"
    );
    for m in 0..=2 {
        let mut full = ProtocolConfig::new(NoiseModel::thermal(2, omega, 1e8, n_th), m, 73.6, tau_dm);
        full.backend = BackendChoice::Full;
        let mut effective = full.clone();
        effective.backend = BackendChoice::Effective;
        let (fs, fb, _) = simulate_populations(&full, samples.clone())?;
        let (es, eb, _) = simulate_populations(&effective, samples.clone())?;
        for (k, t) in samples.iter().enumerate() {
            let gap = |a: f64, b: f64| 100.0 * (a - b) / b;
            println!(
                "{m:>2} {:>6.1} {:>11.4e} {:>11.4e} {:>7.2}% {:>11.4e} {:>11.4e} {:>7.2}%",
                t / tau_dm,
                fs.population[k],
                es.population[k],
                gap(es.population[k], fs.population[k]),
                fb.population[k],
                eb.population[k],
                gap(eb.population[k], fb.population[k]),
            );
        }
    }

    println!();
    for n in [4, 8, 16] {
        let config = ProtocolConfig::new(NoiseModel::thermal(n, omega, 1e8, n_th), 5, 73.6, tau_dm);
        let (s, b, backend) = simulate_populations(&config, vec![10.0 * tau_dm])?;
        println!("N = {n:>2}, m = 5: {backend:?} backend, n_s {:.4e}, n_b {:.4e}", s.population[0], b.population[0]);
    }
    Ok(())
}
