//! The stability index J_p = <L^{-1} phi, phi> at the speed-one explicit
//! soliton, by the two independent routes: Chebyshev collocation of the
//! half-line BVP with Robin/symmetry conditions, and spectral inversion on
//! the even subspace of a periodic grid.
//!
//! ```sh
//! cargo run --release --example stability_index
//! ```

use kawahara::grid::GridSpec;
use kawahara::index::{default_r_max, index_bvp, index_spectral};

fn main() -> kawahara::Result<()> {
    let reference = [-10.0787, -1.9325, -0.5649, -0.1443, 0.0252];
    let grid = GridSpec::new(40.0, 1024)?;
    println!(
        "{:>3} {:>7} {:>14} {:>14} {:>12} {:>12}",
        "p", "r_max", "J (BVP)", "J (spectral)", "agreement", "reference"
    );
    for p in 1..=5 {
        let pf = p as f64;
        let r_max = default_r_max(pf);
        let bvp = index_bvp(pf, r_max)?;
        let spec = index_spectral(pf, grid)?;
        let agree = (bvp.j_half - spec.j_half).abs() / spec.j_half.abs();
        println!(
            "{p:>3} {:>7.1} {:>14.6} {:>14.6} {:>12.2e} {:>12.4}",
            r_max, bvp.j_half, spec.j_half, agree, reference[p - 1]
        );
    }
    println!("\nhalf-line convention: inner product over [0, r_max];");
    println!("the full-line value is exactly twice it by evenness.");
    println!("negative J_p is the sufficient condition for orbital stability.");
    Ok(())
}
