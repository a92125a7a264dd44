//! Newton continuation of the even solitary-wave branch in the speed
//! parameter, and the constrained coercivity margin of the linearized
//! operator along the branch.
//!
//! Each Newton step solves `T(c, psi) = mu psi'''' - psi'' + c psi -
//! psi^{p+1}/(p+1) = 0` with the Jacobian `L = mu d^4 - d^2 + c - psi^p`
//! restricted to the even subspace, where the odd kernel direction is absent
//! and the restriction is invertible.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::linop::{constrained_min_generalized, LinearizedOperator, Parity, ParityBasis};
use crate::solitons::{nonlinear_power, profile_residual, SolitonProfile};
use crate::WaveParams;

/// One accepted point of a continuation run.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub params: WaveParams,
    pub profile: SolitonProfile,
    pub newton_residual: f64,
    /// Smallest constrained generalized eigenvalue of `L` against the H2
    /// Gram operator (the discrete coercivity constant delta).
    pub coercivity_margin: f64,
    /// H4-type grid-norm distance to the seed profile.
    pub distance_to_seed: f64,
}

/// Why a continuation run stopped early.
#[derive(Debug, Clone, Serialize)]
pub struct BranchFailure {
    pub c_failed: f64,
    pub reason: String,
    pub residual_history: Vec<f64>,
}

/// A continuation run: the accepted points, plus a failure marker when the
/// run stopped before reaching the target speed.
#[derive(Debug)]
pub struct BranchResult {
    pub points: Vec<BranchPoint>,
    pub failure: Option<BranchFailure>,
}

struct NewtonOutcome {
    coords: nalgebra::DVector<f64>,
    residual: f64,
}

fn newton_solve(
    basis: &ParityBasis,
    params: WaveParams,
    start: &nalgebra::DVector<f64>,
    history: &mut Vec<f64>,
) -> std::result::Result<NewtonOutcome, String> {
    let mut coords = start.clone();
    let mut prev = f64::INFINITY;
    let mut growth = 0usize;
    for _ in 0..30 {
        let psi = basis.synthesize(&coords);
        let t = profile_residual(&psi, params).map_err(|e| e.to_string())?;
        let r = t.l2_norm();
        history.push(r);
        if r < 1e-10 {
            return Ok(NewtonOutcome { coords, residual: r });
        }
        if r > prev {
            growth += 1;
            if growth >= 3 {
                return Err(format!("Newton divergence: residual grew to {r:.3e}"));
            }
        } else {
            growth = 0;
        }
        prev = r;
        let potential = psi.map(|v| nonlinear_power(v, params.p));
        let jac = basis.project_operator(
            |k| params.mu * k.powi(4) + k * k + params.c,
            &potential,
        );
        let lu = jac.lu();
        let delta = lu
            .solve(&basis.project(&t))
            .ok_or_else(|| "singular Jacobian (fold reached?)".to_string())?;
        coords -= delta;
    }
    Err("Newton did not reach residual 1e-10 in 30 iterations".to_string())
}

fn make_point(
    basis: &ParityBasis,
    params: WaveParams,
    outcome: &NewtonOutcome,
    seed_field: &Field,
) -> Result<BranchPoint> {
    let field = basis.synthesize(&outcome.coords);
    let profile = SolitonProfile::from_field(params, field)?;
    let coercivity_margin = coercivity_check(&profile)?;
    let distance_to_seed = profile.field.sub(seed_field).hs_norm(4);
    Ok(BranchPoint {
        params,
        profile,
        newton_residual: outcome.residual,
        coercivity_margin,
        distance_to_seed,
    })
}

/// Continue the branch from `seed` to speed `c_target` in `num_steps`
/// uniform parameter steps (with automatic step halving on Newton failure).
/// The returned points include the verified seed. All iterates are confined
/// to the even subspace by construction.
pub fn newton_continue(
    seed: &SolitonProfile,
    c_target: f64,
    num_steps: usize,
) -> Result<BranchResult> {
    let seed_res = seed.residual_l2();
    if seed_res > 1e-9 {
        return Err(Error::ProfileRejected(format!(
            "seed residual {seed_res:.3e} exceeds 1e-9"
        )));
    }
    if !(c_target > 0.0) {
        return Err(Error::InvalidParameter("c_target must be positive".into()));
    }
    let basis = ParityBasis::new(seed.field.grid(), Parity::Even);
    let c_seed = seed.params.c;
    let mut coords = basis.project(&seed.field);

    // verified seed point
    let mut history = Vec::new();
    let seed_outcome = match newton_solve(&basis, seed.params, &coords, &mut history) {
        Ok(o) => o,
        Err(reason) => {
            return Ok(BranchResult {
                points: Vec::new(),
                failure: Some(BranchFailure { c_failed: c_seed, reason, residual_history: history }),
            })
        }
    };
    coords = seed_outcome.coords.clone();
    let mut points = vec![make_point(&basis, seed.params, &seed_outcome, &seed.field)?];

    if (c_target - c_seed).abs() < 1e-15 || num_steps == 0 {
        return Ok(BranchResult { points, failure: None });
    }

    let base_dc = (c_target - c_seed) / num_steps as f64;
    let mut c = c_seed;
    while (c_target - c).abs() > 1e-13 {
        let remaining = c_target - c;
        let mut dc = if base_dc.abs() > remaining.abs() { remaining } else { base_dc };
        let mut halvings = 0;
        loop {
            let c_next = if ((c + dc) - c_target).abs() < 1e-13 { c_target } else { c + dc };
            let params = WaveParams::new(seed.params.p, c_next, seed.params.mu)?;
            let mut history = Vec::new();
            match newton_solve(&basis, params, &coords, &mut history) {
                Ok(outcome) => {
                    coords = outcome.coords.clone();
                    points.push(make_point(&basis, params, &outcome, &seed.field)?);
                    c = c_next;
                    break;
                }
                Err(reason) => {
                    halvings += 1;
                    if halvings > 6 {
                        return Ok(BranchResult {
                            points,
                            failure: Some(BranchFailure {
                                c_failed: c_next,
                                reason,
                                residual_history: history,
                            }),
                        });
                    }
                    dc *= 0.5;
                }
            }
        }
    }
    Ok(BranchResult { points, failure: None })
}

/// Smallest eigenvalue of the generalized problem
/// `<L v, v> = lambda <v, v>_{H2}` restricted to
/// `{v : <v, phi> = <v, phi'> = 0}`. The problem splits by parity: the even
/// block carries the `phi` constraint and the odd block the `phi'`
/// constraint; the margin is the smaller of the two block minima. A positive
/// value is the discrete coercivity constant.
pub fn coercivity_check(profile: &SolitonProfile) -> Result<f64> {
    let op = LinearizedOperator::assemble(profile)?;
    let phi_prime = profile.field.derivative(1)?;
    let mut margin = f64::INFINITY;
    for parity in [Parity::Even, Parity::Odd] {
        let basis = ParityBasis::new(profile.field.grid(), parity);
        let mat = basis.project_operator(|k| op.symbol(k), &op.potential);
        let gram = basis.h2_gram_diag();
        let constraint = match parity {
            Parity::Even => basis.project(&profile.field),
            Parity::Odd => basis.project(&phi_prime),
        };
        let m = constrained_min_generalized(&mat, &gram, &constraint)?;
        margin = margin.min(m);
    }
    Ok(margin)
}

/// The almost-orthogonality quantity `gamma = ||phi_c - phi_seed||_{H1}`.
pub fn almost_orthogonality_margin(
    profile_c: &SolitonProfile,
    profile_seed: &SolitonProfile,
) -> Result<f64> {
    if profile_c.field.grid() != profile_seed.field.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(profile_c.field.sub(&profile_seed.field).hs_norm(1))
}

/// Largest speed window around the seed on which the coercivity margin stays
/// above half its seed value, scanned over the accepted branch points.
pub fn coercive_window(points: &[BranchPoint]) -> Option<(f64, f64)> {
    let seed_margin = points.first()?.coercivity_margin;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for pt in points {
        if pt.coercivity_margin >= 0.5 * seed_margin {
            lo = lo.min(pt.params.c);
            hi = hi.max(pt.params.c);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Default grid for continuation runs in the mu = 1 normalization: the decay
/// rate along the tested branches stays above ~0.28, so L = 100 keeps the
/// boundary values below 1e-12.
pub fn default_branch_grid() -> GridSpec {
    GridSpec::new(100.0, 512).expect("valid default grid")
}
