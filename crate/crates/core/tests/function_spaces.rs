use std::f64::consts::PI;

use boussinesq_core::function_spaces::{
    bump, compose_scalar, compose_vector, divergence, eval_offgrid, invert_diffeo, jacobian_det,
    make_divfree_from_stream, normalize_hs, periodic_gaussian,
};
use boussinesq_core::validation::random_smooth_field;
use boussinesq_core::{Diffeo, Grid2D, ScalarField, VectorField2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_pi(n: usize) -> Grid2D {
    Grid2D::new(n, 2.0 * PI).unwrap()
}

fn smooth_diffeo(grid: Grid2D, amplitude: f64) -> Diffeo {
    Diffeo::new(VectorField2::from_fn(grid, |x| {
        [
            amplitude * x[1].sin() * (0.5 + 0.5 * x[0].cos()),
            amplitude * 0.7 * (x[0] + 0.3).cos(),
        ]
    }))
    .unwrap()
}

#[test]
fn midpoint_interpolation_of_a_unit_mode() {
    let grid = Grid2D::new(256, 32.0).unwrap();
    let k = 2.0 * PI / 32.0;
    let f = ScalarField::from_fn(grid, |x| (k * x[0]).sin());
    let h = grid.spacing();
    let points: Vec<[f64; 2]> = (0..256)
        .map(|i| [grid.coord(i) + 0.5 * h, grid.coord((7 * i) % 256) + 0.5 * h])
        .collect();
    let got = eval_offgrid(&f, &points);
    let worst = points
        .iter()
        .zip(&got)
        .map(|(p, g)| (g - (k * p[0]).sin()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "midpoint error {worst:e}");
}

#[test]
fn translation_composition_samples_the_shifted_field() {
    let grid = two_pi(64);
    let theta = ScalarField::from_fn(grid, |x| (x[0] - 2.0 * x[1]).sin() + 0.3 * x[1].cos());
    let c = [3.0 * grid.spacing(), -5.0 * grid.spacing()];
    let shifted = compose_scalar(&theta, &Diffeo::translation(grid, c));
    let expected =
        ScalarField::from_fn(grid, |x| (x[0] + c[0] - 2.0 * (x[1] + c[1])).sin() + 0.3 * (x[1] + c[1]).cos());
    assert!(shifted.max_abs_diff(&expected) < 1e-12);
    let v = VectorField2::new(theta.clone(), theta.scaled(2.0)).unwrap();
    let sv = compose_vector(&v, &Diffeo::translation(grid, c));
    assert!(sv.c2().max_abs_diff(&expected.scaled(2.0)) < 1e-12);
}

#[test]
fn composition_round_trip_through_the_inverse() {
    let grid = Grid2D::new(256, 2.0 * PI).unwrap();
    let theta = ScalarField::from_fn(grid, |x| (x[0] + 0.5).sin() * x[1].cos());
    let phi = smooth_diffeo(grid, 0.2);
    let psi = invert_diffeo(&phi, 1e-10).unwrap();
    let back = compose_scalar(&compose_scalar(&theta, &phi), &psi);
    let rel = back.axpy(-1.0, &theta).l2_norm() / theta.l2_norm();
    assert!(rel < 1e-6, "round trip {rel:e}");
}

#[test]
fn composition_is_associative_on_samples() {
    let grid = Grid2D::new(256, 2.0 * PI).unwrap();
    let theta = ScalarField::from_fn(grid, |x| (2.0 * x[0]).cos() + x[1].sin());
    let phi1 = smooth_diffeo(grid, 0.15);
    let phi2 = Diffeo::new(VectorField2::from_fn(grid, |x| [0.1 * x[1].cos(), 0.12 * x[0].sin()]))
        .unwrap();
    let nested = compose_scalar(&compose_scalar(&theta, &phi1), &phi2);
    let direct = compose_scalar(&theta, &phi1.compose(&phi2).unwrap());
    let gap = nested.max_abs_diff(&direct);
    assert!(gap < 1e-6, "associativity gap {gap:e}");
}

#[test]
fn shear_inversion_meets_the_forward_tolerance() {
    let grid = Grid2D::new(128, 2.0 * PI).unwrap();
    let phi = Diffeo::new(VectorField2::from_fn(grid, |x| [0.1 * x[1].sin(), 0.0])).unwrap();
    let psi = invert_diffeo(&phi, 1e-10).unwrap();
    let composed = phi.compose(&psi).unwrap();
    assert!(composed.displacement().max_magnitude() <= 1e-10);
}

#[test]
fn jacobian_determinant_examples() {
    let grid = two_pi(32);
    let id = jacobian_det(&Diffeo::identity(grid));
    assert!(id.values().iter().all(|&d| d == 1.0));
    // x -> x + 0.2 (sin x2, 0) shears without changing area
    let shear = Diffeo::new(VectorField2::from_fn(grid, |x| [0.2 * x[1].sin(), 0.0])).unwrap();
    assert!(jacobian_det(&shear).map(|d| (d - 1.0).abs()).max_abs() < 1e-13);
    let squeeze = Diffeo::new(VectorField2::from_fn(grid, |x| [0.3 * x[0].sin(), 0.0])).unwrap();
    let expected = ScalarField::from_fn(grid, |x| 1.0 + 0.3 * x[0].cos());
    assert!(jacobian_det(&squeeze).max_abs_diff(&expected) < 1e-12);
}

#[test]
fn folded_map_is_rejected() {
    let grid = two_pi(32);
    let fold = VectorField2::from_fn(grid, |x| [-1.5 * x[0].sin(), 0.0]);
    assert!(Diffeo::new(fold).is_err());
}

fn centered_divergence_gap(n: usize) -> f64 {
    let grid = two_pi(n);
    let v = VectorField2::from_fn(grid, |x| [(2.0 * x[0] + x[1]).sin(), (x[0] - 3.0 * x[1]).cos()]);
    let div = divergence(&v);
    let h = grid.spacing();
    let mut worst = 0.0f64;
    for i2 in 0..n {
        for i1 in 0..n {
            let fd = (v.c1().get((i1 + 1) % n, i2) - v.c1().get((i1 + n - 1) % n, i2)
                + v.c2().get(i1, (i2 + 1) % n)
                - v.c2().get(i1, (i2 + n - 1) % n))
                / (2.0 * h);
            worst = worst.max((fd - div.get(i1, i2)).abs());
        }
    }
    worst
}

#[test]
fn divergence_matches_centered_differences() {
    let (coarse, fine) = (centered_divergence_gap(64), centered_divergence_gap(128));
    let h = 2.0 * PI / 64.0;
    // truncation bound (2^3 + 3^3) h^2 / 6 of the centered stencil
    assert!(coarse <= 35.0 * h * h / 6.0, "gap {coarse:e}");
    let order = (coarse / fine).log2();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn stream_examples() {
    let grid = two_pi(32);
    let u = make_divfree_from_stream(&ScalarField::from_fn(grid, |x| x[0].sin()));
    assert!(u.c1().max_abs() < 1e-14);
    assert!(u.c2().max_abs_diff(&ScalarField::from_fn(grid, |x| x[0].cos())) < 1e-13);
    let zero = make_divfree_from_stream(&ScalarField::zeros(grid));
    assert_eq!(zero.max_magnitude(), 0.0);
}

#[test]
fn bump_examples() {
    let grid = Grid2D::new(256, 32.0).unwrap();
    let b = bump([0.0, 0.0], 1.0, grid).unwrap();
    let center = b.get(128, 128);
    assert!((center - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(b.get(128 + 8, 128), 0.0);
    assert!(bump([0.0, 0.0], 1.5 * grid.spacing(), grid).is_err());
}

#[test]
fn normalized_bumps_share_their_norm() {
    let grid = Grid2D::new(256, 32.0).unwrap();
    for r in [1.0, 0.5] {
        let b = normalize_hs(&bump([1.0, -2.0], r, grid).unwrap(), 2.5, 0.05).unwrap();
        assert!((b.sobolev_norm(2.5) - 0.05).abs() < 1e-12 * 0.05);
    }
    // the H^s norm of a dilated bump grows like r^{1-s}
    let n1 = bump([0.0, 0.0], 1.0, grid).unwrap().sobolev_norm(2.5);
    let n2 = bump([0.0, 0.0], 0.5, grid).unwrap().sobolev_norm(2.5);
    let ratio = n2 / n1;
    assert!(ratio > 1.5 && ratio < 2f64.powf(1.5) * 1.05, "ratio {ratio}");
}

fn grid_strategy() -> impl Strategy<Value = Grid2D> {
    (prop::sample::select(vec![16usize, 32, 64]), 4.0f64..40.0)
        .prop_map(|(n, l)| Grid2D::new(n, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn interpolation_reproduces_nodes(grid in grid_strategy(), seed in any::<u64>()) {
        let f = random_smooth_field(grid, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let points: Vec<[f64; 2]> = (0..grid.n()).map(|i| grid.point(i, (3 * i + 1) % grid.n())).collect();
        let got = eval_offgrid(&f, &points);
        for (i, g) in got.iter().enumerate() {
            prop_assert!((g - f.get(i, (3 * i + 1) % grid.n())).abs() <= 1e-13 * f.max_abs().max(1e-300));
        }
    }

    #[test]
    fn constants_interpolate_exactly(grid in grid_strategy(), c in -5.0f64..5.0, x in -100.0f64..100.0, y in -100.0f64..100.0) {
        let got = eval_offgrid(&ScalarField::constant(grid, c), &[[x, y]])[0];
        prop_assert!((got - c).abs() <= 4.0 * f64::EPSILON * c.abs());
    }

    #[test]
    fn bump_support_is_exactly_compact(grid in grid_strategy(), cx in -2.0f64..2.0, cy in -2.0f64..2.0, frac in 0.1f64..0.3) {
        let r = frac * grid.box_length();
        prop_assume!(r >= 2.0 * grid.spacing());
        let b = bump([cx, cy], r, grid).unwrap();
        for i2 in 0..grid.n() {
            for i1 in 0..grid.n() {
                let x = grid.point(i1, i2);
                let d = grid.wrap_delta(x[0] - cx).hypot(grid.wrap_delta(x[1] - cy));
                if d >= r {
                    prop_assert_eq!(b.get(i1, i2), 0.0);
                } else {
                    prop_assert!(b.get(i1, i2) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn normalization_hits_the_target(grid in grid_strategy(), seed in any::<u64>(), target in 1e-3f64..10.0) {
        let f = random_smooth_field(grid, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let g = normalize_hs(&f, 2.5, target).unwrap();
        prop_assert!((g.sobolev_norm(2.5) - target).abs() <= 1e-12 * target);
        let again = normalize_hs(&g, 2.5, target).unwrap();
        prop_assert!(again.max_abs_diff(&g) <= 1e-12 * g.max_abs());
    }

    #[test]
    fn streams_are_divergence_free(grid in grid_strategy(), seed in any::<u64>()) {
        let psi = random_smooth_field(grid, 1.5, &mut ChaCha8Rng::seed_from_u64(seed));
        let u = make_divfree_from_stream(&psi);
        prop_assert!(divergence(&u).max_abs() <= 1e-12 * u.max_magnitude().max(1e-300));
    }

    #[test]
    fn identity_composition_is_exact(grid in grid_strategy(), seed in any::<u64>()) {
        let f = random_smooth_field(grid, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(compose_scalar(&f, &Diffeo::identity(grid)), f);
    }

    #[test]
    fn translation_inverse_is_the_opposite_shift(grid in grid_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let psi = invert_diffeo(&Diffeo::translation(grid, [a, b]), 1e-12).unwrap();
        let d = psi.displacement();
        prop_assert!(d.c1().map(|v| v + a).max_abs() <= 1e-12);
        prop_assert!(d.c2().map(|v| v + b).max_abs() <= 1e-12);
    }
}

#[test]
fn periodic_gaussian_peaks_at_its_center() {
    let grid = Grid2D::new(128, 32.0).unwrap();
    let g = periodic_gaussian(grid, [0.0, 0.0], 2.0, 1.5);
    assert!((g.get(64, 64) - 1.5).abs() < 1e-10);
}
