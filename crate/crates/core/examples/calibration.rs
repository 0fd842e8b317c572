//! Heating-rate calibration from a background run: the signal-mode rate
//! equals the average spectator rate when only heating is present, and
//! dephasing pushes population into the spectators.
//!
//! cargo run --release -p fock-haloscope --example calibration

use fock_haloscope::engine::NoiseModel;
use fock_haloscope::protocol::{calibration_rates, ProtocolConfig};

fn main() -> fock_haloscope::Result<()> {
    let tau_dm = 1e6 / (2.0 * std::f64::consts::PI * 7e9);
    let cases = [
        ("N=2 heating only", NoiseModel::new(vec![0.5, 1.5], vec![0.0; 2], vec![0.0; 2])?),
        ("N=4 heating only", NoiseModel::new(vec![0.5, 1.0, 1.5, 2.0], vec![0.0; 4], vec![0.0; 4])?),
        ("N=2 with dephasing", NoiseModel::uniform(2, 1.0, 0.0, 50.0)),
    ];
    for (label, noise) in cases {
        let mut config = ProtocolConfig::new(noise.clone(), 1, 0.0, tau_dm);
        config.dt = Some(1e-5);
        let report = calibration_rates(&config, 2e-3)?;
        let mean_up = noise.gamma_up.iter().sum::<f64>() / noise.n_cavities() as f64;
        let spectators: Vec<String> = report.spectator_rates.iter().map(|r| format!("{r:.3}")).collect();
        println!(
            "{label:<20} primary {:.4} /s, spectators [{}] mean {:.4} /s, mean heating {mean_up:.4} /s",
            report.primary_rate,
            spectators.join(", "),
            report.spectator_mean(),
        );
    }
    Ok(())
}
