//! Writes an SNR sweep as a CSV table with a key=value header and as JSON.
//!
//! cargo run --release -p fock-haloscope --example sweep_table > sweep.csv

use fock_haloscope::engine::NoiseModel;
use fock_haloscope::protocol::{snr_sweep, tau_grid, ProtocolConfig};
use fock_haloscope::sensitivity::thermal_occupation;
use fock_haloscope::table::{format_value, SweepTable};

fn main() -> fock_haloscope::Result<()> {
    let omega = 2.0 * std::f64::consts::PI * 7e9;
    let tau_dm = 1e6 / omega;
    let mut config =
        ProtocolConfig::new(NoiseModel::thermal(1, omega, 1e8, thermal_occupation(omega, 0.050)), 1, 73.6, tau_dm);
    config.tau_spam = 0.0;
    let sweep = snr_sweep(&config, &tau_grid(tau_dm, 1.0, 30.0, 15))?;

    let mut table = SweepTable::new(&["tau_int_over_tauDM", "n_s", "n_b", "snr"])
        .with_meta("n_cavities", config.n_cavities)
        .with_meta("fock", config.fock)
        .with_meta("backend", format!("{:?}", sweep.diagnostics.backend).to_lowercase())
        .with_meta("dt_s", format_value(sweep.diagnostics.dt));
    for p in &sweep.points {
        table.push(vec![p.tau_int / tau_dm, p.n_s, p.n_b, p.snr])?;
    }
    table.write_csv(std::io::stdout().lock())?;
    eprintln!("{}", serde_json::to_string(&table.to_json()).expect("table serializes"));
    Ok(())
}
