//! Scan-rate enhancement over a single cavity for N in {1, 2, 4, 8} and
//! m in {0..5}, with 99% beamsplitters and the measured efficiency.
//!
//! cargo run --release -p fock-haloscope --example scan_rate_enhancement

use fock_haloscope::engine::NoiseModel;
use fock_haloscope::protocol::{efficiency, snr_sweep, tau_grid, ProtocolConfig};
use fock_haloscope::sensitivity::thermal_occupation;

fn main() -> fock_haloscope::Result<()> {
    let omega = 2.0 * std::f64::consts::PI * 7e9;
    let tau_dm = 1e6 / omega;
    let n_th = thermal_occupation(omega, 0.050);
    let grid = tau_grid(tau_dm, 0.2, 40.0, 100);

    let mut baseline = None;
    println!("{:>2} {:>2} {:>9} {:>6} {:>11} {:>7}", "N", "m", "SNR*", "eta", "enhancement", "ideal");
    for n in [1, 2, 4, 8] {
        for m in 0..=5 {
            let mut config = ProtocolConfig::new(NoiseModel::thermal(n, omega, 1e8, n_th), m, 73.6, tau_dm);
            config.tau_spam = 0.0;
            config.ed.fidelity = 0.99;
            let sweep = snr_sweep(&config, &grid)?;
            let base = *baseline.get_or_insert(sweep.star.snr);
            println!(
                "{n:>2} {m:>2} {:>9.4} {:>6.3} {:>11.1} {:>7}",
                sweep.star.snr,
                efficiency(&config, &sweep)?,
                (sweep.star.snr / base).powi(2),
                n * n * (m + 1),
            );
        }
    }
    Ok(())
}
