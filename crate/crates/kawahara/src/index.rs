//! The stability index `J_p = <L^{-1} phi, phi>` at the speed-one explicit
//! soliton, computed two independent ways: a Chebyshev collocation of the
//! half-line boundary-value problem with Robin/symmetry conditions, and a
//! full-line spectral inversion on the even subspace. The sign of `J_p`
//! is the sufficient condition driving the stability results; the sign
//! change near p = 4.84 is located by bisection.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::linop::LinearizedOperator;
use crate::solitons::{explicit_gkw_soliton_speed_one, mu_for_speed_one, nonlinear_power};

/// Which solver produced an [`IndexReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMethod {
    Bvp,
    Spectral,
    Both,
}

/// Stability index in both conventions, with the solution `rho` and solver
/// diagnostics. `j_half` is the inner product over `[0, r_max]` (the
/// convention of the published table); `j_full` integrates over the whole
/// line and equals `2 * j_half` by evenness.
#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub p: f64,
    pub j_half: f64,
    pub j_full: f64,
    pub r_max: f64,
    pub method: IndexMethod,
    /// Relative discrepancy between the BVP and spectral values when both ran.
    pub method_agreement: Option<f64>,
    pub rho: Field,
}

/// Default truncation radius: 30 for p = 1, scaled by the asymptotic decay
/// rate `sqrt(p^2+4p+8)/(p+2)` for other p so that `rate * r_max` stays
/// constant.
pub fn default_r_max(p: f64) -> f64 {
    let rate = |p: f64| (p * p + 4.0 * p + 8.0).sqrt() / (p + 2.0);
    30.0 * rate(1.0) / rate(p)
}

fn explicit_speed_one_closed_form(p: f64, x: f64) -> f64 {
    let q = p * p + 4.0 * p + 8.0;
    let a = ((p + 1.0) * (p + 4.0) * (3.0 * p + 4.0) / (8.0 * (p + 2.0))).powf(1.0 / p);
    let b = p * q.sqrt() / (4.0 * (p + 2.0));
    let c = (b * x).cosh();
    if c.is_infinite() {
        0.0
    } else {
        a * (1.0 / c).powf(4.0 / p)
    }
}

// ---- Chebyshev machinery on [0, r_max] --------------------------------------

/// Chebyshev-Lobatto differentiation matrix and nodes on [-1, 1],
/// `t_i = cos(pi i / n)`.
fn chebyshev(n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let pi = std::f64::consts::PI;
    let t: Vec<f64> = (0..=n).map(|i| (pi * i as f64 / n as f64).cos()).collect();
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = (c(i) / c(j)) * if (i + j) % 2 == 0 { 1.0 } else { -1.0 } / (t[i] - t[j]);
            }
        }
    }
    // negative row sums on the diagonal suppress round-off
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (d, t)
}

/// Clenshaw-Curtis quadrature weights on [-1, 1] for the Lobatto nodes
/// (n even).
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let mut w = vec![0.0; n + 1];
    for (i, wi) in w.iter_mut().enumerate() {
        let theta = pi * i as f64 / n as f64;
        let mut s = 0.0;
        for j in 1..=n / 2 {
            let bj = if 2 * j == n { 1.0 } else { 2.0 };
            s += bj / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
        }
        let ci = if i == 0 || i == n { 1.0 } else { 2.0 };
        *wi = ci / n as f64 * (1.0 - s);
    }
    w
}

/// Barycentric interpolation from Lobatto nodes (second-kind weights
/// `(-1)^i`, halved at the ends).
fn barycentric_eval(t_nodes: &[f64], values: &[f64], t: f64) -> f64 {
    let n = t_nodes.len() - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=n {
        let d = t - t_nodes[i];
        if d.abs() < 1e-14 {
            return values[i];
        }
        let mut w = if i % 2 == 0 { 1.0 } else { -1.0 };
        if i == 0 || i == n {
            w *= 0.5;
        }
        num += w / d * values[i];
        den += w / d;
    }
    num / den
}

/// Solve the half-line problem `mu rho'''' = rho'' - rho + phi^p rho + phi`
/// on `[0, r_max]` as a first-order system `y1..y4` with the symmetry
/// conditions `y2(0) = y4(0) = 0` and Robin conditions
/// `y1 + y2 = 0`, `y3 + y4 = 0` at `r_max`, by Chebyshev collocation.
pub fn index_bvp(p: f64, r_max: f64) -> Result<IndexReport> {
    index_bvp_with(p, r_max, 192)
}

/// [`index_bvp`] with an explicit (even) collocation order.
pub fn index_bvp_with(p: f64, r_max: f64, n_colloc: usize) -> Result<IndexReport> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidParameter("r_max must be positive".into()));
    }
    if n_colloc < 16 || n_colloc % 2 != 0 {
        return Err(Error::InvalidParameter(
            "collocation order must be even and >= 16".into(),
        ));
    }
    let amplitude = explicit_speed_one_closed_form(p, 0.0);
    let tail = explicit_speed_one_closed_form(p, r_max);
    if tail > 1e-8 * amplitude {
        return Err(Error::DomainTooSmall(format!(
            "phi(r_max) = {tail:.3e} exceeds 1e-8 * amplitude; enlarge r_max"
        )));
    }

    let mu = mu_for_speed_one(p);
    let n = n_colloc;
    let (dt, t) = chebyshev(n);
    // x = r_max (1 - t)/2 maps t = 1 -> x = 0 and t = -1 -> x = r_max
    let x: Vec<f64> = t.iter().map(|&ti| r_max * (1.0 - ti) / 2.0).collect();
    let d = dt.map(|v| -2.0 / r_max * v);
    let np = n + 1;
    let dim = 4 * np;
    let phi: Vec<f64> = x.iter().map(|&xi| explicit_speed_one_closed_form(p, xi)).collect();
    let phi_pow: Vec<f64> = phi.iter().map(|&v| nonlinear_power(v, p)).collect();

    let idx = |block: usize, i: usize| block * np + i;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for i in 0..np {
        for j in 0..np {
            let dij = d[(i, j)];
            a[(idx(0, i), idx(0, j))] = dij;
            a[(idx(1, i), idx(1, j))] = dij;
            a[(idx(2, i), idx(2, j))] = dij;
            a[(idx(3, i), idx(3, j))] = dij;
        }
        a[(idx(0, i), idx(1, i))] -= 1.0;
        a[(idx(1, i), idx(2, i))] -= 1.0;
        a[(idx(2, i), idx(3, i))] -= 1.0;
        // y4' = (1/mu)(y3 - y1 + phi^p y1) + (1/mu) phi
        a[(idx(3, i), idx(2, i))] -= 1.0 / mu;
        a[(idx(3, i), idx(0, i))] += (1.0 - phi_pow[i]) / mu;
        rhs[idx(3, i)] = phi[i] / mu;
    }
    // boundary rows: x[0] = 0, x[n] = r_max
    let clear = |a: &mut DMatrix<f64>, rhs: &mut DVector<f64>, row: usize| {
        for j in 0..dim {
            a[(row, j)] = 0.0;
        }
        rhs[row] = 0.0;
    };
    let r0 = idx(1, 0);
    clear(&mut a, &mut rhs, r0);
    a[(r0, idx(1, 0))] = 1.0; // y2(0) = 0
    let r1 = idx(3, 0);
    clear(&mut a, &mut rhs, r1);
    a[(r1, idx(3, 0))] = 1.0; // y4(0) = 0
    let r2 = idx(0, n);
    clear(&mut a, &mut rhs, r2);
    a[(r2, idx(0, n))] = 1.0;
    a[(r2, idx(1, n))] = 1.0; // y1 + y2 = 0 at r_max
    let r3 = idx(2, n);
    clear(&mut a, &mut rhs, r3);
    a[(r3, idx(2, n))] = 1.0;
    a[(r3, idx(3, n))] = 1.0; // y3 + y4 = 0 at r_max

    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolveFailed("BVP collocation matrix is singular".into()))?;
    let rho_nodes: Vec<f64> = (0..np).map(|i| sol[idx(0, i)]).collect();
    let rho_tail = rho_nodes[n].abs();
    if rho_tail > 1e-6 * rho_nodes.iter().fold(0.0f64, |m, v| m.max(v.abs())) {
        return Err(Error::SolveFailed(format!(
            "boundary decay violated: |rho(r_max)| = {rho_tail:.3e}"
        )));
    }

    let w = clenshaw_curtis(n);
    let j_half: f64 = (0..np).map(|i| w[i] * rho_nodes[i] * phi[i]).sum::<f64>() * r_max / 2.0;

    // even extension onto a uniform periodic grid via barycentric interpolation
    let grid = GridSpec::new(r_max, 512)?;
    let rho_field = Field::from_fn(grid, |xx| {
        let t_of_x = 1.0 - 2.0 * xx.abs() / r_max;
        barycentric_eval(&t, &rho_nodes, t_of_x.clamp(-1.0, 1.0))
    });

    Ok(IndexReport {
        p,
        j_half,
        j_full: 2.0 * j_half,
        r_max,
        method: IndexMethod::Bvp,
        method_agreement: None,
        rho: rho_field,
    })
}

// ---- spectral route ----------------------------------------------------------

/// Default full-line grid for the speed-one normalization (decay rate >= 1).
pub fn default_index_grid() -> GridSpec {
    GridSpec::new(40.0, 1024).expect("valid default grid")
}

/// Independent cross-validation route: invert `L` on the even subspace of the
/// periodic grid and integrate over the whole line.
pub fn index_spectral(p: f64, grid: GridSpec) -> Result<IndexReport> {
    let profile = explicit_gkw_soliton_speed_one(p, grid)?;
    let op = LinearizedOperator::assemble(&profile)?;
    let rho = op.solve_constrained(&profile.field)?;
    let j_full = rho.l2_inner(&profile.field)?;
    Ok(IndexReport {
        p,
        j_half: j_full / 2.0,
        j_full,
        r_max: grid.half_length,
        method: IndexMethod::Spectral,
        method_agreement: None,
        rho,
    })
}

/// Spectral index with the grid-convergence gate: values at N and 2N must
/// agree to four significant digits before the N-grid value is reported.
pub fn index_spectral_converged(p: f64, grid: GridSpec) -> Result<IndexReport> {
    let fine = GridSpec::new(grid.half_length, 2 * grid.num_points)?;
    let coarse_report = index_spectral(p, grid)?;
    let fine_report = index_spectral(p, fine)?;
    let rel = (coarse_report.j_full - fine_report.j_full).abs() / fine_report.j_full.abs();
    if rel > 5e-4 {
        return Err(Error::NotConverged(format!(
            "index not grid-converged: N gives {}, 2N gives {} (rel {rel:.3e})",
            coarse_report.j_full, fine_report.j_full
        )));
    }
    Ok(coarse_report)
}

/// Run both solvers and report the half-line-convention (BVP) value together
/// with the mutual relative discrepancy.
pub fn index_both(p: f64, r_max: f64, grid: GridSpec) -> Result<IndexReport> {
    let bvp = index_bvp(p, r_max)?;
    let spectral = index_spectral(p, grid)?;
    let agreement = (bvp.j_half - spectral.j_half).abs() / spectral.j_half.abs();
    Ok(IndexReport {
        method: IndexMethod::Both,
        method_agreement: Some(agreement),
        ..bvp
    })
}

/// Bisection for the sign change of `p -> J(p)`. Requires a sign change on
/// the bracket; the closed forms are evaluated at real p throughout.
pub fn critical_exponent(p_lo: f64, p_hi: f64, tol: f64) -> Result<f64> {
    critical_exponent_on(p_lo, p_hi, tol, GridSpec::new(40.0, 512)?)
}

/// [`critical_exponent`] on an explicit grid.
pub fn critical_exponent_on(p_lo: f64, p_hi: f64, tol: f64, grid: GridSpec) -> Result<f64> {
    if !(p_lo >= 1.0 && p_hi > p_lo) {
        return Err(Error::InvalidParameter("need 1 <= p_lo < p_hi".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let j = |p: f64| -> Result<f64> { Ok(index_spectral(p, grid)?.j_full) };
    let j_lo = j(p_lo)?;
    let j_hi = j(p_hi)?;
    if j_lo.signum() == j_hi.signum() {
        return Err(Error::NoSignChange { lo: p_lo, hi: p_hi, j_lo, j_hi });
    }
    let (mut lo, mut hi) = (p_lo, p_hi);
    let mut f_lo = j_lo;
    for _ in 0..200 {
        if (hi - lo) / 2.0 <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = j(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of the p-scan CSV.
#[derive(Debug, Clone, Serialize)]
pub struct IndexScanRow {
    pub p: f64,
    pub j_half: f64,
    pub j_full: f64,
}

/// Evaluate the spectral index on a uniform p-grid (inclusive endpoints).
pub fn scan(p_lo: f64, p_hi: f64, count: usize, grid: GridSpec) -> Result<Vec<IndexScanRow>> {
    if count < 2 {
        return Err(Error::InvalidParameter("scan needs at least 2 points".into()));
    }
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let p = p_lo + (p_hi - p_lo) * i as f64 / (count - 1) as f64;
        let rep = index_spectral(p, grid)?;
        rows.push(IndexScanRow { p, j_half: rep.j_half, j_full: rep.j_full });
    }
    Ok(rows)
}
