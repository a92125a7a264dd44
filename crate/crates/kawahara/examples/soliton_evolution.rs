//! Exact traveling-wave propagation under the ETDRK4 pseudo-spectral
//! integrator: conserved-quantity drift, measured speed, and the 4th-order
//! improvement under step halving.
//!
//! ```sh
//! cargo run --release --example soliton_evolution
//! ```

use kawahara::evolution::{stability_experiment, Branch, ExperimentConfig, PerturbationShape};
use kawahara::grid::GridSpec;
use kawahara::solitons::explicit_speed;

fn main() -> kawahara::Result<()> {
    let grid = GridSpec::new(60.0, 512)?;
    let c1 = explicit_speed(1.0);
    println!("explicit p = 1 soliton, c_1 = {c1:.6}, mu = 1, T = 50:");
    println!("{:>8} {:>14} {:>12} {:>12} {:>12}", "dt", "sup H2 dist", "dE/E", "dV/V", "speed");
    for dt in [0.2, 0.1, 0.05, 1e-3] {
        let cfg = ExperimentConfig {
            dt,
            sample_every: 2.0,
            grid: Some(grid),
            perturbation: PerturbationShape::GaussianBump,
        };
        let trace = stability_experiment(1, Branch::Explicit, c1, 0.0, 50.0, &cfg)?;
        println!(
            "{dt:>8} {:>14.3e} {:>12.3e} {:>12.3e} {:>12.8}",
            trace.sup_distance(),
            trace.energy_drift,
            trace.mass_drift,
            trace.measured_speed().unwrap_or(f64::NAN)
        );
    }
    println!("\nthe linear symbol i(k^3 + mu k^5) is propagated exactly; drift at");
    println!("production step sizes sits at the round-off floor, and the dt = 0.2 -> 0.1");
    println!("pair shows the scheme's 4th-order error decay.");
    Ok(())
}
