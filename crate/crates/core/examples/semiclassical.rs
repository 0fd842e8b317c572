//! Rate-equation populations and rates next to the master-equation result
//! for one cavity seeded with |2>, plus the approximate SNR curve.
//!
//! cargo run --release -p fock-haloscope --example semiclassical

use fock_haloscope::engine::NoiseModel;
use fock_haloscope::protocol::{
    rate_equation_populations, semiclassical_rates, simulate_populations, snr_approx, ProtocolConfig,
};
use fock_haloscope::sensitivity::thermal_occupation;

fn main() -> fock_haloscope::Result<()> {
    let omega = 2.0 * std::f64::consts::PI * 7e9;
    let tau_dm = 1e6 / omega;
    let mut config =
        ProtocolConfig::new(NoiseModel::thermal(1, omega, 1e8, thermal_occupation(omega, 0.050)), 2, 73.6, tau_dm);
    config.tau_spam = 0.0;
    let p = config.semiclassical()?;
    let grid: Vec<f64> = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0].iter().map(|x| x * tau_dm).collect();

    let (signal, _, _) = simulate_populations(&config, grid.clone())?;
    let rates = rate_equation_populations(&p, &grid, true)?;
    println!(
        "{:>6} {:>11} {:>11} {:>9} {:>9} {:>9} {:>9}",
        "t/tDM", "n_s DLME", "n_s rate", "R_s", "R_s apx", "R_b", "SNR apx"
    );
    for (k, &t) in grid.iter().enumerate() {
        let r = semiclassical_rates(&p, t);
        println!(
            "{:>6.1} {:>11.4e} {:>11.4e} {:>9.3} {:>9.3} {:>9.3} {:>9.4}",
            t / tau_dm,
            signal.population[k],
            rates.n_m_plus_1[k],
            r.r_s,
            r.r_s_approx,
            r.r_b,
            snr_approx(&p, t, config.tau_tot),
        );
    }
    Ok(())
}
