//! Bottom spectrum of the linearized operator around the speed-one explicit
//! soliton: one simple negative eigenvalue, a kernel direction aligned with
//! phi', and the essential spectrum starting at c.
//!
//! ```sh
//! cargo run --release --example spectrum_report
//! ```

use kawahara::grid::GridSpec;
use kawahara::linop::LinearizedOperator;
use kawahara::solitons::explicit_gkw_soliton_speed_one;

fn main() -> kawahara::Result<()> {
    let grid = GridSpec::new(40.0, 512)?;
    println!(
        "{:>3} {:>12} {:>12} {:>10} {:>14} {:>10}",
        "p", "lambda_1", "lambda_2", "negatives", "alignment", "floor"
    );
    for p in 1..=5 {
        let profile = explicit_gkw_soliton_speed_one(p as f64, grid)?;
        let op = LinearizedOperator::assemble(&profile)?;
        let rep = op.bottom_spectrum(6)?;
        println!(
            "{p:>3} {:>12.6} {:>12.3e} {:>10} {:>14.9} {:>10.6}",
            rep.eigenvalues[0],
            rep.eigenvalues[1],
            rep.negative_count,
            rep.kernel_alignment,
            rep.essential_floor
        );
    }
    println!("\nlambda_2 is the discretized kernel eigenvalue (exactly zero in the limit);");
    println!("eigen-residuals of every reported pair stay below 1e-7.");
    Ok(())
}
