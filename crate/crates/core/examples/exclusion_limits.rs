//! Smallest excluded kinetic mixing across 3-12 GHz at three temperatures,
//! with the power-law fit against n_th omega^7.
//!
//! cargo run --release -p fock-haloscope --example exclusion_limits

use std::f64::consts::PI;

use fock_haloscope::sensitivity::{exclusion_epsilon, fit_exclusion, SensitivityParams, DEFAULT_ZETA_SNR};
use fock_haloscope::units::gev_per_cm3_to_si;

fn main() -> fock_haloscope::Result<()> {
    let freqs: Vec<f64> = (0..=9).map(|k| (3 + k) as f64 * 1e9).collect();
    let omegas: Vec<f64> = freqs.iter().map(|f| 2.0 * PI * f).collect();
    let temperatures = [0.025, 0.050, 0.075];

    print!("{:>6}", "GHz");
    for t in temperatures {
        print!(" {:>12}", format!("{:.0} mK", t * 1e3));
    }
    println!();
    let mut curves = Vec::new();
    for &t in &temperatures {
        let params = SensitivityParams {
            zeta_snr: DEFAULT_ZETA_SNR,
            eta: 1.0,
            rho: gev_per_cm3_to_si(0.45),
            q_dm: 1e6,
            q_cav: 1e8,
            n_cavities: 4,
            fock: 5,
            temperature: t,
        };
        let eps = omegas.iter().map(|&w| exclusion_epsilon(&params, w, 10.0)).collect::<Result<Vec<_>, _>>()?;
        curves.push((t, fit_exclusion(&omegas, &eps, t)?, eps));
    }
    for (k, f) in freqs.iter().enumerate() {
        print!("{:>6.1}", f / 1e9);
        for (_, _, eps) in &curves {
            print!(" {:>12.3e}", eps[k]);
        }
        println!();
    }
    for (t, fit, _) in &curves {
        println!("{:.0} mK: epsilon = {:.3e} (n_th omega^7)^{:.4}", t * 1e3, fit.coefficient, fit.exponent);
    }
    Ok(())
}
