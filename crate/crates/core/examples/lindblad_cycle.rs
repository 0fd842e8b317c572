//! One detection cycle for two cavities seeded with |3>: signal and
//! background populations, rates, SNR and the numerical diagnostics, with
//! ideal and 99% beamsplitters.
//!
//! cargo run --release -p fock-haloscope --example lindblad_cycle

use fock_haloscope::engine::NoiseModel;
use fock_haloscope::protocol::{run_cycle, ProtocolConfig};
use fock_haloscope::sensitivity::thermal_occupation;

fn main() -> fock_haloscope::Result<()> {
    let omega = 2.0 * std::f64::consts::PI * 7e9;
    let tau_dm = 1e6 / omega;
    let noise = NoiseModel::thermal(2, omega, 1e8, thermal_occupation(omega, 0.050));
    for fidelity in [1.0, 0.99] {
        let mut config = ProtocolConfig::new(noise.clone(), 3, 73.6, tau_dm);
        config.ed.fidelity = fidelity;
        let r = run_cycle(&config, 8.0 * tau_dm)?;
        let d = &r.diagnostics;
        println!("beamsplitter fidelity {fidelity}");
        println!("  tau_int {:.3e} s, cycle {:.3e} s", r.tau_int, r.tau_cycle);
        println!("  n_s {:.4e}  n_b {:.4e}  R_s {:.4} /s  R_b {:.4} /s", r.n_s, r.n_b, r.r_s, r.r_b);
        println!("  SNR over 1 s: {:.4}", r.snr);
        println!(
            "  backend {:?}, dt {:.3e} s, trace error {:.1e}, leakage {:.1e}, window multiplier {}",
            d.backend,
            d.dt,
            d.max_trace_error,
            d.max_leakage,
            d.window_multiplier.map_or("-".to_string(), |m| format!("{m:.2}")),
        );
    }
    Ok(())
}
