//! The transform-side sufficient condition for the spectral properties:
//! positivity of the sech-power transform and negativity of the
//! log-curvature of the sech^4 transform, from their closed forms.
//!
//! ```sh
//! cargo run --release --example albert_criterion
//! ```

use kawahara::linop::{albert_criterion, log_curvature_bracket, sech4_half_transform, sech_transform};

fn main() -> kawahara::Result<()> {
    println!("{:>3} {:>11} {:>13} {:>14} {:>14}", "p", "positivity", "log-concavity", "min transform", "max bracket");
    for p in 1..=5 {
        let rep = albert_criterion(p as f64, 50.0, 2000)?;
        println!(
            "{p:>3} {:>11} {:>13} {:>14.3e} {:>14.3e}",
            rep.positivity_ok, rep.logconcavity_ok, rep.min_transform, rep.max_curvature_bracket
        );
    }

    println!("\nclosed-form spot values:");
    println!("  F[sech^4(./2)](1)       = {:.6}  (= (2^4 pi / 3!) * 2 / sinh(pi))", sech4_half_transform(1.0));
    println!("  (log F)''(1)            = {:.6}  (= -1 + pi^2/sinh^2(pi))", log_curvature_bracket(1.0));
    println!("  (log F)''(0+)           = {:.6}  (finite limit 2 - pi^2/3)", log_curvature_bracket(1e-3));
    println!("  F[sech](1)  (nu = 1)    = {:.6}  (= pi sech(pi/2))", sech_transform(1.0, 1.0));
    Ok(())
}
