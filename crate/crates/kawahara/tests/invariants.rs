//! Property-based invariants of the grid layer and the linearized operator,
//! plus slower cross-module sanity runs that do not fit a unit test.

use proptest::prelude::*;

use kawahara::evolution::{stability_experiment, Branch, ExperimentConfig};
use kawahara::grid::{Field, GridSpec};
use kawahara::linop::LinearizedOperator;
use kawahara::solitons::{explicit_gkw_soliton_speed_one, explicit_speed};

fn small_grid() -> GridSpec {
    GridSpec::new(10.0, 64).unwrap()
}

/// Band-limited random field: a short Fourier sum, exact under translation.
fn band_limited(coeffs: &[(f64, f64)]) -> Field {
    let grid = small_grid();
    let l = grid.half_length;
    Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let k = std::f64::consts::PI * (m as f64 + 1.0) / l;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_roundtrip_is_bit_exact(values in prop::collection::vec(-1e12f64..1e12, 64)) {
        let f = Field::from_values(small_grid(), values).unwrap();
        let back = Field::from_csv(&f.to_csv()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn json_roundtrip_is_bit_exact(values in prop::collection::vec(-1.0f64..1.0, 64)) {
        let f = Field::from_values(small_grid(), values).unwrap();
        let back = Field::from_json(&f.to_json().unwrap()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn translate_is_a_group_action(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        a in -7.0f64..7.0,
        b in -7.0f64..7.0,
    ) {
        let f = band_limited(&coeffs);
        let two_step = f.translate(a).translate(b);
        let one_step = f.translate(a + b);
        let scale = f.max_abs().max(1e-9);
        prop_assert!(two_step.sub(&one_step).max_abs() < 1e-11 * scale);
    }

    #[test]
    fn derivative_commutes_with_translate(
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        z in -5.0f64..5.0,
    ) {
        let f = band_limited(&coeffs);
        let a = f.derivative(1).unwrap().translate(z);
        let b = f.translate(z).derivative(1).unwrap();
        let scale = a.max_abs().max(1e-9);
        prop_assert!(a.sub(&b).max_abs() < 1e-10 * scale);
    }

    #[test]
    fn parity_split_is_orthogonal(values in prop::collection::vec(-1.0f64..1.0, 64)) {
        let f = Field::from_values(small_grid(), values).unwrap();
        let even = f.even_projection();
        let odd = f.sub(&even);
        // idempotent
        prop_assert!(even.even_projection().sub(&even).max_abs() == 0.0);
        // exactly orthogonal on the symmetric grid
        prop_assert!(even.l2_inner(&odd).unwrap().abs() < 1e-12);
        let total = f.l2_inner(&f).unwrap();
        let split = even.l2_inner(&even).unwrap() + odd.l2_inner(&odd).unwrap();
        prop_assert!((total - split).abs() < 1e-10 * total.max(1e-9));
    }

    #[test]
    fn inner_product_is_bilinear_and_symmetric(
        u in prop::collection::vec(-1.0f64..1.0, 64),
        v in prop::collection::vec(-1.0f64..1.0, 64),
        s in -3.0f64..3.0,
    ) {
        let grid = small_grid();
        let u = Field::from_values(grid, u).unwrap();
        let v = Field::from_values(grid, v).unwrap();
        let a = u.l2_inner(&v).unwrap();
        let b = v.l2_inner(&u).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        let su = u.scaled(s);
        prop_assert!((su.l2_inner(&v).unwrap() - s * a).abs() < 1e-12 * (s * a).abs().max(1e-9));
        prop_assert!(u.l2_inner(&u).unwrap() >= 0.0);
    }
}

#[test]
fn operator_self_adjoint_on_random_smooth_pairs() {
    let grid = GridSpec::new(40.0, 512).unwrap();
    let profile = explicit_gkw_soliton_speed_one(2.0, grid).unwrap();
    let op = LinearizedOperator::assemble(&profile).unwrap();
    let mut seed = 1234567u64;
    let mut rand = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 33) as f64 / (1u64 << 31) as f64 - 1.0
    };
    for _ in 0..8 {
        let (a, b, c, d) = (rand(), rand(), rand(), rand());
        let u = Field::from_fn(grid, |x| (a + b * x) * (-x * x / 11.0).exp());
        let v = Field::from_fn(grid, |x| (c + d * x * x / 40.0) * (-x * x / 7.0).exp());
        let lu_v = op.apply(&u).unwrap().l2_inner(&v).unwrap();
        let u_lv = u.l2_inner(&op.apply(&v).unwrap()).unwrap();
        assert!(
            (lu_v - u_lv).abs() < 1e-10 * lu_v.abs().max(1.0),
            "<Lu,v> = {lu_v}, <u,Lv> = {u_lv}"
        );
    }
}

/// Grid operations are pure and safe to run concurrently on shared
/// read-only fields (transform scratch space is per-thread).
#[test]
fn grid_operations_are_thread_safe() {
    let grid = GridSpec::new(40.0, 512).unwrap();
    let profile = explicit_gkw_soliton_speed_one(1.0, grid).unwrap();
    let field = &profile.field;
    let op = &LinearizedOperator::assemble(&profile).unwrap();
    let reference = (
        field.derivative(2).unwrap(),
        field.sobolev_norm(2).unwrap(),
        op.apply(field).unwrap(),
    );
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4)
            .map(|_| {
                scope.spawn(|| {
                    let d = field.derivative(2).unwrap();
                    let n = field.sobolev_norm(2).unwrap();
                    let a = op.apply(field).unwrap();
                    (d, n, a)
                })
            })
            .collect();
        for handle in handles {
            let (d, n, a) = handle.join().unwrap();
            assert_eq!(d, reference.0);
            assert_eq!(n, reference.1);
            assert_eq!(a, reference.2);
        }
    });
}

/// Sup distance is nondecreasing in the perturbation size at a fixed horizon
/// (sanity check of the experiment, not a stability statement).
#[test]
fn perturbation_response_monotone_in_delta() {
    let cfg = ExperimentConfig { dt: 4e-3, sample_every: 1.0, ..Default::default() };
    let c1 = explicit_speed(1.0);
    let mut sups = Vec::new();
    for delta in [1e-4, 1e-3, 1e-2] {
        let trace = stability_experiment(1, Branch::Explicit, c1, delta, 20.0, &cfg).unwrap();
        sups.push(trace.sup_distance());
    }
    assert!(sups[0] <= sups[1] && sups[1] <= sups[2], "sup distances {sups:?}");
}
