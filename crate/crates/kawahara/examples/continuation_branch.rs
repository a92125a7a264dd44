//! Newton continuation of the even solitary-wave branch in the speed
//! parameter around c_p, tracking the Newton residual, the constrained
//! coercivity margin, and the H1 distance to the seed.
//!
//! ```sh
//! cargo run --release --example continuation_branch
//! ```

use kawahara::continuation::{
    almost_orthogonality_margin, coercive_window, coercivity_check, default_branch_grid,
    newton_continue,
};
use kawahara::solitons::explicit_gkw_soliton;

fn main() -> kawahara::Result<()> {
    let p = 1.0;
    let grid = default_branch_grid();
    let seed = explicit_gkw_soliton(p, grid)?;
    let c_p = seed.params.c;
    println!("p = 1 branch around c_1 = {c_p:.6} (mu = 1):\n");
    println!("{:>10} {:>12} {:>14} {:>12}", "c", "residual", "margin", "gamma");
    for target in [0.9 * c_p, 1.1 * c_p] {
        let run = newton_continue(&seed, target, 10)?;
        assert!(run.failure.is_none());
        for pt in &run.points {
            let gamma = almost_orthogonality_margin(&pt.profile, &seed)?;
            println!(
                "{:>10.6} {:>12.2e} {:>14.6e} {:>12.4e}",
                pt.params.c, pt.newton_residual, pt.coercivity_margin, gamma
            );
        }
        if let Some((lo, hi)) = coercive_window(&run.points) {
            println!("  margin stays above half its seed value on c in [{lo:.6}, {hi:.6}]\n");
        }
    }

    // the p = 5 explicit soliton loses the constrained coercivity
    let seed5 = explicit_gkw_soliton(5.0, grid)?;
    let margin5 = coercivity_check(&seed5)?;
    println!("p = 5 at c_5 = {:.6}: coercivity margin = {margin5:.4e} (negative)", seed5.params.c);
    Ok(())
}
