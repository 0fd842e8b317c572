//! Checks the entanglement-distribution unitaries for both beamsplitter
//! layouts and prints the single-photon coefficient matrix for N = 4.
//!
//! cargo run --release -p fock-haloscope --example gate_validation

use fock_haloscope::fock::make_space;
use fock_haloscope::gates::{verification_cutoff, verify_ed, EdGate, EdPlan, EdScheme, VerifyOptions};

fn main() -> fock_haloscope::Result<()> {
    let options = VerifyOptions { alpha: 0.05, max_fock: 3, tolerance: 1e-9 };
    println!(
        "{:>2} {:>7} {:>5} {:>11} {:>11} {:>11} {:>11}",
        "N", "scheme", "depth", "conj", "dual", "displace", "sum rule"
    );
    for n in [1, 2, 4] {
        for scheme in [EdScheme::Linear, EdScheme::Binary] {
            let plan = EdPlan::new(scheme, n)?;
            let depth = plan.depth();
            let gate = EdGate::new(make_space(n, verification_cutoff(options.max_fock))?, plan)?;
            let r = verify_ed(&gate, n, &options)?;
            println!(
                "{n:>2} {:>7} {depth:>5} {:>11.2e} {:>11.2e} {:>11.2e} {:>11.2e}{}",
                format!("{scheme:?}").to_lowercase(),
                r.conjugation_residual,
                r.dual_residual,
                r.displacement_residual,
                r.sum_rule_residual,
                if r.passed { "" } else { "  FAILED" },
            );
            if n == 4 && scheme == EdScheme::Binary {
                println!("   <1_n|U|1_k>:");
                for row in &r.coefficients {
                    let cells: Vec<String> = row.iter().map(|(re, im)| format!("{re:+.3}{im:+.3}i")).collect();
                    println!("     {}", cells.join("  "));
                }
            }
        }
    }

    match EdPlan::new(EdScheme::Binary, 3) {
        Err(e) => println!("N = 3 binary: {e}"),
        Ok(_) => println!("N = 3 binary unexpectedly accepted"),
    }
    Ok(())
}
