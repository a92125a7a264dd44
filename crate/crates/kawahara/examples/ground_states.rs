//! The slow-soliton family from constrained minimization: Petviashvili-type
//! iteration at fixed K_p, Lagrange-multiplier recovery, the mu -> 0 limit
//! toward the gKdV soliton, the exact scaling identity and a multi-start
//! uniqueness probe.
//!
//! ```sh
//! cargo run --release --example ground_states
//! ```

use kawahara::groundstate::{
    default_groundstate_grid, empirical_uniqueness_probe, functionals, minimize,
    scaling_identity_check, MinimizationProblem,
};
use kawahara::grid::GridSpec;
use kawahara::solitons::gkdv_soliton;

fn main() -> kawahara::Result<()> {
    let grid = default_groundstate_grid();
    for p in 1..=3u32 {
        let gkdv = gkdv_soliton(1.0, p as f64, grid)?;
        let beta = MinimizationProblem::new(p, 1e-2, grid)?.beta_target;
        println!("p = {p}: constraint level beta_p = {beta:.8}");
        println!(
            "{:>9} {:>7} {:>14} {:>12} {:>14} {:>12}",
            "mu", "iters", "alpha", "I_mu", "residual", "H1 to gKdV"
        );
        for mu in [1e-1, 1e-2, 1e-3, 1e-4] {
            let problem = MinimizationProblem::new(p, mu, grid)?;
            let res = minimize(&problem, &problem.default_guess()?)?;
            let (_, kp) = functionals(&res.psi, mu, p);
            assert!((kp - beta).abs() < 1e-8 * beta);
            let h1 = res.phi.sub(&gkdv.field).sobolev_norm(1)?;
            println!(
                "{mu:>9.0e} {:>7} {:>14.10} {:>12.8} {:>14.3e} {:>12.6}",
                res.iterations, res.alpha, res.i_value, res.phi_residual_l2, h1
            );
        }
        println!();
    }

    let small = GridSpec::new(40.0, 512)?;
    let dev = scaling_identity_check(1, 1e-2, 2.0 * 9.6, small)?;
    println!("scaling identity S^(2 beta) = 2^(2/3) S^(beta) at p = 1: deviation {dev:.2e}");

    let problem = MinimizationProblem::new(1, 1e-3, small)?;
    let probe = empirical_uniqueness_probe(&problem, 5, 7)?;
    println!(
        "multi-start probe (5 random even positive guesses): spread {:.2e}, {} converged",
        probe.spread, probe.converged
    );
    Ok(())
}
