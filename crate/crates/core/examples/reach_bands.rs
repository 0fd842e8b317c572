//! Frequency band covered at fixed kinetic mixing within a fifteen-hour
//! budget, for a single cavity and two entangled arrays.
//!
//! cargo run --release -p fock-haloscope --example reach_bands

use std::f64::consts::PI;

use fock_haloscope::sensitivity::{reach_band, ReachRequest, SensitivityParams, DEFAULT_ZETA_SNR};
use fock_haloscope::units::gev_per_cm3_to_si;

fn main() -> fock_haloscope::Result<()> {
    let request = ReachRequest {
        target_epsilon: 1e-16,
        budget_s: 15.0 * 3600.0,
        omega_start: 2.0 * PI * 5e9,
        omega_stop: 2.0 * PI * 30e9,
    };
    for (n, m) in [(1, 0), (4, 1), (8, 5)] {
        let params = SensitivityParams {
            zeta_snr: DEFAULT_ZETA_SNR,
            eta: 1.0,
            rho: gev_per_cm3_to_si(0.45),
            q_dm: 1e6,
            q_cav: 1e8,
            n_cavities: n,
            fock: m,
            temperature: 0.050,
        };
        let band = reach_band(&params, &request)?;
        println!(
            "N={n} m={m}: {:.4} -> {:.4} GHz ({:.1} MHz, {} steps, {:.1} h{})",
            band.omega_start / (2.0 * PI * 1e9),
            band.omega_end / (2.0 * PI * 1e9),
            band.width_hz() / 1e6,
            band.steps,
            band.time_used_s / 3600.0,
            if band.stopped_at_limit { ", hit the frequency limit" } else { "" },
        );
    }
    Ok(())
}
