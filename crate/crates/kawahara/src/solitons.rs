//! Closed-form solitary waves, parameter normalizations, and residual
//! evaluation of the profile equation
//!
//! ```text
//! mu * phi'''' - phi'' + c * phi = phi^{p+1} / (p+1).
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// The triple (p, c, mu) identifying a solitary wave and its linearized
/// operator. `p` may be a positive real: the closed forms are analytic in `p`
/// and the critical-exponent search needs non-integer values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub p: f64,
    pub c: f64,
    pub mu: f64,
}

impl WaveParams {
    pub fn new(p: f64, c: f64, mu: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {mu}")));
        }
        Ok(WaveParams { p, c, mu })
    }
}

/// Speed of the explicit soliton when mu = 1:
/// `c_p = 4 (p+2)^2 / (p^2 + 4p + 8)^2`.
/// The same number is the dispersion coefficient `mu_p` that makes the
/// explicit soliton travel with speed 1.
pub fn explicit_speed(p: f64) -> f64 {
    4.0 * (p + 2.0).powi(2) / (p * p + 4.0 * p + 8.0).powi(2)
}

/// Alias for [`explicit_speed`] in the speed-one normalization.
pub fn mu_for_speed_one(p: f64) -> f64 {
    explicit_speed(p)
}

/// `x^q` for the profile nonlinearity. Integer exponents use exact integer
/// powers (valid for sign-changing arguments); non-integer exponents use the
/// sign-preserving continuation `sgn(x) |x|^q`, which agrees with `x^q` on the
/// positive profiles it is applied to and stays finite on round-off tails.
pub(crate) fn nonlinear_power(x: f64, q: f64) -> f64 {
    let qi = q.round();
    if (q - qi).abs() < 1e-12 && qi.abs() <= 64.0 {
        x.powi(qi as i32)
    } else {
        x.signum() * x.abs().powf(q)
    }
}

/// Slowest root of the linear asymptotic equation
/// `mu s^4 - s^2 + c = 0`, i.e. the asymptotic decay rate of profiles.
/// Evaluated in the cancellation-free form `s1^2 = 2c / (1 + sqrt(1 - 4 mu c))`,
/// which tends to `sqrt(c)` as `mu -> 0`.
pub fn slow_decay_root(c: f64, mu: f64) -> f64 {
    if mu <= 0.0 {
        return c.sqrt();
    }
    let disc = 1.0 - 4.0 * mu * c;
    if disc >= 0.0 {
        (2.0 * c / (1.0 + disc.sqrt())).sqrt()
    } else {
        // complex roots: decay rate is the real part
        let r = (c / mu).sqrt(); // |s^2|
        let theta = (-disc).sqrt().atan2(1.0);
        r.sqrt() * (theta / 2.0).cos()
    }
}

/// A sampled solitary-wave profile together with its closed-form metadata.
#[derive(Debug, Clone)]
pub struct SolitonProfile {
    pub params: WaveParams,
    pub amplitude: f64,
    /// Asymptotic exponential decay rate: `|phi(x)| ~ e^{-decay_scale |x|}`.
    pub decay_scale: f64,
    pub field: Field,
}

impl SolitonProfile {
    fn checked(
        params: WaveParams,
        amplitude: f64,
        decay_scale: f64,
        field: Field,
    ) -> Result<Self> {
        let boundary = field.boundary_value().abs();
        if boundary > 1e-10 * amplitude {
            return Err(Error::DomainTooSmall(format!(
                "profile boundary value {boundary:.3e} exceeds 1e-10 * amplitude ({:.3e}); \
                 enlarge half_length",
                1e-10 * amplitude
            )));
        }
        let odd = field.odd_part_norm();
        if odd > 1e-12 {
            return Err(Error::ProfileRejected(format!("profile not even: {odd:.3e}")));
        }
        if (field.value_at_origin() - amplitude).abs() > 1e-12 * amplitude.max(1.0) {
            return Err(Error::ProfileRejected(
                "amplitude does not match profile value at origin".into(),
            ));
        }
        Ok(SolitonProfile { params, amplitude, decay_scale, field })
    }

    /// Assemble a profile from a computed (non-closed-form) field, filling in
    /// amplitude and decay metadata and enforcing the evenness/decay
    /// invariants.
    pub fn from_field(params: WaveParams, field: Field) -> Result<Self> {
        let amplitude = field.value_at_origin();
        if !(amplitude > 0.0) {
            return Err(Error::ProfileRejected(format!(
                "expected positive amplitude at origin, got {amplitude}"
            )));
        }
        let decay = slow_decay_root(params.c, params.mu);
        Self::checked(params, amplitude, decay, field)
    }

    /// L2 norm of the profile-equation residual.
    pub fn residual_l2(&self) -> f64 {
        profile_residual(&self.field, self.params)
            .expect("finite profile")
            .l2_norm()
    }

    /// CLI-facing summary.
    pub fn report(&self) -> ProfileReport {
        ProfileReport {
            p: self.params.p,
            c: self.params.c,
            mu: self.params.mu,
            amplitude: self.amplitude,
            decay_scale: self.decay_scale,
            residual_l2: self.residual_l2(),
        }
    }
}

/// JSON report emitted by the CLI for a profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileReport {
    pub p: f64,
    pub c: f64,
    pub mu: f64,
    pub amplitude: f64,
    pub decay_scale: f64,
    pub residual_l2: f64,
}

/// Explicit gKW soliton in the mu = 1 normalization: speed `c_p`,
/// profile `a sech^{4/p}(b x)` with
/// `a = [(p+1)(p+4)(3p+4) c / (8(p+2))]^{1/p}` and
/// `b = p sqrt((p^2+4p+8) c) / (4(p+2))`.
pub fn explicit_gkw_soliton(p: f64, grid: GridSpec) -> Result<SolitonProfile> {
    let c = explicit_speed(p);
    explicit_gkw_soliton_at(p, c, grid)
}

/// Explicit gKW soliton in the speed-one normalization: c = 1,
/// mu = `mu_for_speed_one(p)`.
pub fn explicit_gkw_soliton_speed_one(p: f64, grid: GridSpec) -> Result<SolitonProfile> {
    explicit_gkw_soliton_at(p, 1.0, grid)
}

/// Explicit soliton with speed `c`; the dispersion coefficient is forced by
/// the constraint `mu = 4 (p+2)^2 / ((p^2+4p+8)^2 c)`.
pub fn explicit_gkw_soliton_at(p: f64, c: f64, grid: GridSpec) -> Result<SolitonProfile> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
    }
    let q = p * p + 4.0 * p + 8.0;
    let mu = 4.0 * (p + 2.0).powi(2) / (q * q * c);
    let a = ((p + 1.0) * (p + 4.0) * (3.0 * p + 4.0) * c / (8.0 * (p + 2.0))).powf(1.0 / p);
    let b = p * (q * c).sqrt() / (4.0 * (p + 2.0));
    let field = Field::from_fn(grid, |x| a * sech_pow(b * x, 4.0 / p));
    let params = WaveParams::new(p, c, mu)?;
    SolitonProfile::checked(params, a, 4.0 * b / p, field)
}

/// gKdV soliton (mu = 0): `[(p+1)(p+2) c / 2]^{1/p} sech^{2/p}(p sqrt(c) x / 2)`.
pub fn gkdv_soliton(c: f64, p: f64, grid: GridSpec) -> Result<SolitonProfile> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
    }
    let a = ((p + 1.0) * (p + 2.0) * c / 2.0).powf(1.0 / p);
    let b = p * c.sqrt() / 2.0;
    let field = Field::from_fn(grid, |x| a * sech_pow(b * x, 2.0 / p));
    let params = WaveParams::new(p, c, 0.0)?;
    SolitonProfile::checked(params, a, c.sqrt(), field)
}

fn sech_pow(y: f64, q: f64) -> f64 {
    // cosh overflows near y ~ 710; the profile is zero there anyway
    let c = y.cosh();
    if c.is_infinite() {
        0.0
    } else {
        (1.0 / c).powf(q)
    }
}

/// Pointwise residual of the profile equation
/// `mu f'''' - f'' + c f - f^{p+1}/(p+1)`.
///
/// The L2 norm of this field is the convergence metric used by every solver
/// in the crate.
pub fn profile_residual(field: &Field, params: WaveParams) -> Result<Field> {
    if !field.is_finite() {
        return Err(Error::NonFinite("profile_residual input"));
    }
    let d2 = field.derivative(2)?;
    let pe = p_exponent(params.p);
    let mut res = field.map(|v| params.c * v - nonlinear_power(v, pe) / (params.p + 1.0));
    res = res.add_scaled(&d2, -1.0);
    if params.mu != 0.0 {
        let d4 = field.derivative(4)?;
        res = res.add_scaled(&d4, params.mu);
    }
    Ok(res)
}

fn p_exponent(p: f64) -> f64 {
    p + 1.0
}

/// Direction of the normalization map between the (c = 1, mu) and
/// (c = mu, mu = 1) conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleDirection {
    /// `(p, c, mu) -> (p, c * mu, 1)` via `psi(x) = mu^{1/p} phi(sqrt(mu) x)`.
    ToMuOne,
    /// `(p, c, mu) -> (p, 1, mu * c)` via `psi(x) = c^{-1/p} phi(x / sqrt(c))`.
    ToCOne,
}

/// Move a profile between normalizations. The spatial scaling maps the
/// uniform grid of half-length L exactly onto the uniform grid of half-length
/// L/B (same point count), so the samples transfer pointwise and the profile
/// equation residual is preserved exactly.
pub fn rescale_normalization(
    profile: &SolitonProfile,
    direction: RescaleDirection,
) -> Result<SolitonProfile> {
    let WaveParams { p, c, mu } = profile.params;
    let (amp_factor, space_factor, new_params) = match direction {
        RescaleDirection::ToMuOne => {
            if mu <= 0.0 {
                return Err(Error::InvalidParameter(
                    "to_mu_one requires mu > 0".into(),
                ));
            }
            if (mu - 1.0).abs() < 1e-14 {
                return Err(Error::InvalidParameter(
                    "profile already has mu = 1".into(),
                ));
            }
            (mu.powf(1.0 / p), mu.sqrt(), WaveParams::new(p, c * mu, 1.0)?)
        }
        RescaleDirection::ToCOne => {
            if (c - 1.0).abs() < 1e-14 {
                return Err(Error::InvalidParameter(
                    "profile already has c = 1".into(),
                ));
            }
            (c.powf(-1.0 / p), 1.0 / c.sqrt(), WaveParams::new(p, 1.0, mu * c)?)
        }
    };
    let old_grid = profile.field.grid();
    let grid = GridSpec::new(old_grid.half_length / space_factor, old_grid.num_points)?;
    let values: Vec<f64> = profile.field.values().iter().map(|&v| amp_factor * v).collect();
    let field = Field::from_values(grid, values)?;
    SolitonProfile::checked(
        new_params,
        amp_factor * profile.amplitude,
        profile.decay_scale * space_factor,
        field,
    )
}

/// Least-squares exponential decay rate of `|f|` fitted on
/// `x in [L/2, 3L/4]` (samples below 1e-300 are skipped).
pub fn fitted_decay_rate(field: &Field) -> f64 {
    let grid = field.grid();
    let l = grid.half_length;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (j, &v) in field.values().iter().enumerate() {
        let x = grid.point(j);
        if x >= 0.5 * l && x <= 0.75 * l && v.abs() > 1e-300 {
            xs.push(x);
            ys.push(v.abs().ln());
        }
    }
    if xs.len() < 2 {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    -(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_p1_constants() {
        let c1 = explicit_speed(1.0);
        assert!((c1 - 36.0 / 169.0).abs() < 1e-15);
        let grid = GridSpec::new(80.0, 1024).unwrap();
        let s = explicit_gkw_soliton(1.0, grid).unwrap();
        assert!((s.params.c - c1).abs() < 1e-15);
        assert!((s.params.mu - 1.0).abs() < 1e-12);
        let amp_expected = 35.0 * c1 / 12.0;
        assert!((s.amplitude - amp_expected).abs() < 1e-12, "amp {}", s.amplitude);
    }

    #[test]
    fn explicit_p1_speed_one_constants() {
        let grid = GridSpec::new(40.0, 1024).unwrap();
        let s = explicit_gkw_soliton_speed_one(1.0, grid).unwrap();
        assert!((s.params.mu - 36.0 / 169.0).abs() < 1e-15);
        assert!((s.amplitude - 35.0 / 12.0).abs() < 1e-12);
        // sech argument coefficient sqrt(13)/12
        let b = 13.0f64.sqrt() / 12.0;
        let x = grid.point(grid.origin_index() + 40);
        let expected = 35.0 / 12.0 * (1.0 / (b * x).cosh()).powi(4);
        let got = s.field.values()[grid.origin_index() + 40];
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn explicit_residual_small_all_p() {
        // half-length per p from the decay rate 2/sqrt(p^2+4p+8)
        for (p, l) in [(1.0, 60.0), (2.0, 65.0), (3.0, 80.0), (4.0, 90.0), (5.0, 105.0)] {
            let grid = GridSpec::new(l, 2048).unwrap();
            let s = explicit_gkw_soliton(p, grid).unwrap();
            let r = s.residual_l2();
            assert!(r < 1e-8, "p = {p}: residual {r:.3e}");
        }
    }

    #[test]
    fn explicit_speed_one_residual_small() {
        for p in [1.0, 2.0, 3.0, 4.0, 5.0] {
            let grid = GridSpec::new(40.0, 2048).unwrap();
            let s = explicit_gkw_soliton_speed_one(p, grid).unwrap();
            let r = s.residual_l2();
            assert!(r < 1e-8, "p = {p}: residual {r:.3e}");
        }
    }

    #[test]
    fn gkdv_p1_c1_profile() {
        let grid = GridSpec::new(60.0, 2048).unwrap();
        let s = gkdv_soliton(1.0, 1.0, grid).unwrap();
        assert!((s.amplitude - 3.0).abs() < 1e-13);
        let x = 1.7;
        let j = (x + 60.0) / grid.spacing();
        let j = j.round() as usize;
        let expect = 3.0 / (grid.point(j) / 2.0).cosh().powi(2);
        assert!((s.field.values()[j] - expect).abs() < 1e-13);
        assert!(s.residual_l2() < 1e-9, "residual {:.3e}", s.residual_l2());
    }

    #[test]
    fn gkdv_is_mu_zero_residual() {
        let grid = GridSpec::new(60.0, 2048).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let s = gkdv_soliton(1.0, p, grid).unwrap();
            let res = profile_residual(&s.field, s.params).unwrap().l2_norm();
            assert!(res < 1e-9, "p = {p}: {res:.3e}");
        }
    }

    #[test]
    fn zero_field_zero_residual() {
        let grid = GridSpec::new(30.0, 256).unwrap();
        let z = Field::zeros(grid);
        let params = WaveParams::new(2.0, 0.7, 0.3).unwrap();
        assert_eq!(profile_residual(&z, params).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn rescale_roundtrip_and_closed_form() {
        let grid = GridSpec::new(40.0, 1024).unwrap();
        let speed_one = explicit_gkw_soliton_speed_one(1.0, grid).unwrap();
        // to_c_one is rejected when c already 1
        assert!(rescale_normalization(&speed_one, RescaleDirection::ToCOne).is_err());
        let mu_one = rescale_normalization(&speed_one, RescaleDirection::ToMuOne).unwrap();
        assert!((mu_one.params.mu - 1.0).abs() < 1e-15);
        assert!((mu_one.params.c - explicit_speed(1.0)).abs() < 1e-15);
        // matches the independent closed-form evaluation on the same grid
        let direct = explicit_gkw_soliton(1.0, mu_one.field.grid()).unwrap();
        let err = mu_one.field.sub(&direct.field).max_abs();
        assert!(err < 1e-10, "pointwise error {err:.3e}");
        // amplitude transforms by mu^{1/p}
        let mu = 36.0 / 169.0;
        assert!((mu_one.amplitude - speed_one.amplitude * mu).abs() < 1e-12);
        // inverse map restores the original samples
        let back = rescale_normalization(&mu_one, RescaleDirection::ToCOne).unwrap();
        assert!(back.field.sub(&speed_one.field).max_abs() < 1e-10);
        assert!((back.field.grid().half_length - 40.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_too_small_domain() {
        let grid = GridSpec::new(10.0, 256).unwrap();
        assert!(matches!(
            explicit_gkw_soliton(1.0, grid),
            Err(Error::DomainTooSmall(_))
        ));
    }

    #[test]
    fn profiles_positive_and_even() {
        let grid = GridSpec::new(80.0, 1024).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let s = explicit_gkw_soliton(p, grid).unwrap();
            assert!(s.field.values().iter().all(|&v| v > 0.0), "p = {p} not positive");
            assert!(s.field.odd_part_norm() < 1e-12);
        }
    }

    #[test]
    fn fitted_decay_matches_slow_root() {
        let grid = GridSpec::new(60.0, 2048).unwrap();
        let s = explicit_gkw_soliton(1.0, grid).unwrap();
        let rate = fitted_decay_rate(&s.field);
        let c = s.params.c;
        assert!(rate >= 0.9 * c.sqrt(), "rate {rate} vs 0.9 sqrt(c) {}", 0.9 * c.sqrt());
        let s1 = slow_decay_root(c, 1.0);
        assert!((rate - s1).abs() < 0.05 * s1, "rate {rate} vs s1 {s1}");
        // for small mu the rate approaches sqrt(c)
        let g = GridSpec::new(40.0, 1024).unwrap();
        let k = gkdv_soliton(1.0, 1.0, g).unwrap();
        let r = fitted_decay_rate(&k.field);
        assert!((r - 1.0).abs() < 0.05, "gkdv rate {r}");
    }

    #[test]
    fn decay_root_limits() {
        assert!((slow_decay_root(1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((slow_decay_root(0.25, 1e-14) - 0.5).abs() < 1e-9);
        // explicit-soliton identity: s1(c_p, 1) = 2 / sqrt(p^2+4p+8)
        for p in [1.0f64, 2.0, 3.0, 4.0, 5.0] {
            let c = explicit_speed(p);
            let s1 = slow_decay_root(c, 1.0);
            let rate = 2.0 / (p * p + 4.0 * p + 8.0).sqrt();
            assert!((s1 - rate).abs() < 1e-13, "p = {p}");
        }
    }

    #[test]
    fn fractional_p_closed_form_still_solves() {
        let grid = GridSpec::new(40.0, 1024).unwrap();
        for p in [1.5, 4.5, 4.84] {
            let s = explicit_gkw_soliton_speed_one(p, grid).unwrap();
            let r = s.residual_l2();
            assert!(r < 1e-9, "p = {p}: residual {r:.3e}");
        }
    }

    #[test]
    fn nonlinear_power_integer_vs_fractional() {
        assert_eq!(nonlinear_power(-2.0, 2.0), 4.0);
        assert_eq!(nonlinear_power(-2.0, 3.0), -8.0);
        let v = nonlinear_power(-1e-17, 2.5);
        assert!(v.is_finite() && v <= 0.0);
    }
}
