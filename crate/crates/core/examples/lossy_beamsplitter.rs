//! Loss multiplier needed during beamsplitter windows to reach a target
//! single-photon swap fidelity, for both ways of raising the loss.
//!
//! cargo run --release -p fock-haloscope --example lossy_beamsplitter

use fock_haloscope::engine::{calibrate_multiplier, swap_fidelity, EdSettings, NoiseModel, WindowElevation};
use fock_haloscope::gates::EdScheme;
use fock_haloscope::sensitivity::thermal_occupation;

fn main() -> fock_haloscope::Result<()> {
    let omega = 2.0 * std::f64::consts::PI * 7e9;
    let noise = NoiseModel::thermal(2, omega, 1e8, thermal_occupation(omega, 0.050));
    let pair = [noise.rates(0), noise.rates(1)];
    println!("{:>8} {:>16} {:>12} {:>12}", "fidelity", "elevation", "multiplier", "check");
    for fidelity in [0.999, 0.99, 0.95] {
        for elevation in [WindowElevation::DecayDephasing, WindowElevation::All] {
            let mut ed = EdSettings::ideal(EdScheme::Binary);
            ed.fidelity = fidelity;
            ed.elevation = elevation;
            let mu = calibrate_multiplier(pair, fidelity, &ed)?;
            let check = swap_fidelity(pair, mu, elevation, ed.g_bs, ed.substeps)?;
            println!("{fidelity:>8} {:>16} {mu:>12.3} {check:>12.6}", format!("{elevation:?}"));
        }
    }
    println!("bare swap fidelity: {:.8}", swap_fidelity(pair, 1.0, WindowElevation::DecayDephasing, 1e6, 256)?);
    Ok(())
}
