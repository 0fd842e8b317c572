//! SNR against integration time for two cavities seeded with |0> .. |5>,
//! with the simulated optimum next to the rate-equation estimate.
//!
//! cargo run --release -p fock-haloscope --example snr_curves

use fock_haloscope::engine::NoiseModel;
use fock_haloscope::protocol::{optimal_tau_int, snr_sweep, tau_grid, ProtocolConfig};
use fock_haloscope::sensitivity::thermal_occupation;

fn main() -> fock_haloscope::Result<()> {
    let omega = 2.0 * std::f64::consts::PI * 7e9;
    let tau_dm = 1e6 / omega;
    let n_th = thermal_occupation(omega, 0.050);
    let grid = tau_grid(tau_dm, 0.2, 60.0, 120);

    println!("{:>2} {:>12} {:>10} {:>12} {:>12}", "m", "tau*/tau_dm", "SNR*", "closed form", "refined");
    for m in 0..=5 {
        let mut config = ProtocolConfig::new(NoiseModel::thermal(2, omega, 1e8, n_th), m, 73.6, tau_dm);
        config.tau_spam = 0.0;
        let sweep = snr_sweep(&config, &grid)?;
        let estimate = optimal_tau_int(&config.semiclassical()?)?;
        println!(
            "{m:>2} {:>12.2} {:>10.3} {:>12.2} {:>12.2}{}",
            sweep.star.tau_int / tau_dm,
            sweep.star.snr,
            estimate.closed_form / tau_dm,
            estimate.refined / tau_dm,
            if sweep.star.interior { "" } else { "  (edge)" },
        );
    }
    Ok(())
}
