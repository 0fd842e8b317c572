//! Ensemble-averaged photon number of a cavity driven by a field with
//! random phase jumps, Monte Carlo against the analytic average, on and off
//! resonance.
//!
//! cargo run --release -p fock-haloscope --example dm_drive_monte_carlo

use fock_haloscope::drive::{mc_population, mean_population_detuned};

fn main() -> fock_haloscope::Result<()> {
    let (g, tau) = (1.0, 1.0);
    let grid: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    for delta in [0.0, 2.0] {
        let curve = mc_population(g, tau, delta, &grid, 20_000, 7)?;
        println!("detuning {delta} / tau_dm, {} trajectories", curve.n_traj);
        println!("{:>6} {:>10} {:>10} {:>8} {:>6}", "t", "analytic", "mc", "stderr", "z");
        for (k, &t) in grid.iter().enumerate().step_by(4) {
            let exact = mean_population_detuned(g, tau, delta, t);
            let z = if curve.stderr[k] > 0.0 { (curve.mean[k] - exact) / curve.stderr[k] } else { 0.0 };
            println!("{t:>6.1} {exact:>10.4} {:>10.4} {:>8.4} {z:>6.2}", curve.mean[k], curve.stderr[k]);
        }
        println!();
    }
    Ok(())
}
