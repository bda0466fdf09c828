use std::f64::consts::PI;

use hfujita_core::group::*;
use hfujita_core::heat_kernel::*;
use hfujita_core::solver::{RadialGrid, RadialSemigroup, Semigroup};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

fn l_over_sinh(l: f64) -> f64 {
    if l == 0.0 {
        1.0
    } else {
        l / l.sinh()
    }
}

fn l_coth(l: f64) -> f64 {
    if l == 0.0 {
        1.0
    } else {
        l / l.tanh()
    }
}

#[test]
fn origin_value_from_independent_quadrature() {
    let integral = simpson(l_over_sinh, 0.0, 60.0, 60_000);
    assert!((integral - PI * PI / 4.0).abs() < 1e-10);
    let oracle = integral / (16.0 * PI * PI);
    let ev = KernelEvaluator::h1();
    let p = ev.heat_kernel_h(1.0, &HeisenbergPoint::identity(1)).unwrap();
    assert!((p - oracle).abs() < 1e-12, "{p} vs {oracle}");
    assert!((p - 1.0 / 64.0).abs() < 1e-12);
    assert!((ev.heat_kernel_scaled(0.25, &HeisenbergPoint::identity(1)).unwrap() - 0.25).abs() < 1e-10);
}

#[test]
fn unit_horizontal_point_from_independent_quadrature() {
    let f = |l: f64| (-l_coth(l) / 4.0).exp() * l_over_sinh(l);
    let coarse = simpson(f, 0.0, 60.0, 30_000) / (16.0 * PI * PI);
    let fine = simpson(f, 0.0, 60.0, 60_000) / (16.0 * PI * PI);
    assert!((coarse - fine).abs() < 1e-14);
    let ev = KernelEvaluator::h1();
    let x = HeisenbergPoint::h1(1.0, 0.0, 0.0);
    assert!((ev.heat_kernel_h(1.0, &x).unwrap() - fine).abs() < 1e-8 * fine);
    assert!((ev.heat_kernel_scaled(1.0, &x).unwrap() - fine).abs() < 1e-8 * fine);
}

#[test]
fn second_heisenberg_origin() {
    // n = 2: p_1(0) = (4 pi)^{-3} int_0^inf (l / sinh l)^2 dl = (4 pi)^{-3} pi^2 / 6.
    let integral = simpson(|l| l_over_sinh(l).powi(2), 0.0, 40.0, 40_000);
    assert!((integral - PI * PI / 6.0).abs() < 1e-10);
    let ev = KernelEvaluator::new(GroupParams::new(2).unwrap());
    let p = ev.heat_kernel_h(1.0, &HeisenbergPoint::identity(2)).unwrap();
    assert!((p - integral / (4.0 * PI).powi(3)).abs() < 1e-9 * p);
}

#[test]
fn kernel_solves_the_heat_equation() {
    // d_t p = (X^2 + Y^2) p, with X^2 and Y^2 as second differences along
    // right translations by exp(+-hX), exp(+-hY).
    let ev = KernelEvaluator::h1();
    let p = |t: f64, x: &HeisenbergPoint| ev.heat_kernel_scaled(t, x).unwrap();
    let h = 1e-2;
    let dt = 1e-3;
    for &(t, g, v, z) in &[(1.0, 0.3, -0.2, 0.5), (0.7, 1.0, 0.4, -1.2), (2.0, 0.0, 0.0, 2.0)] {
        let x = HeisenbergPoint::h1(g, v, z);
        let shift = |dg: f64, dv: f64| group_law(&x, &HeisenbergPoint::h1(dg, dv, 0.0)).unwrap();
        let center = p(t, &x);
        let xx = (p(t, &shift(h, 0.0)) - 2.0 * center + p(t, &shift(-h, 0.0))) / (h * h);
        let yy = (p(t, &shift(0.0, h)) - 2.0 * center + p(t, &shift(0.0, -h))) / (h * h);
        let time = (p(t + dt, &x) - p(t - dt, &x)) / (2.0 * dt);
        assert!((time - (xx + yy)).abs() < 1e-3 * time.abs().max(center), "t={t}: {time} vs {}", xx + yy);
    }
}

#[test]
fn positivity_on_test_domain() {
    let ev = KernelEvaluator::h1();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let t = 10f64.powf(rng.random_range(-1.0..1.0));
        let (x, _) = sample_ball(&mut rng, 6.0);
        assert!(ev.heat_kernel_scaled(t, &x).unwrap() > 0.0);
    }
}

/// Uniform-ish sample with Koranyi gauge at most `n_max`.
fn sample_ball(rng: &mut ChaCha8Rng, n_max: f64) -> (HeisenbergPoint, f64) {
    loop {
        let x = HeisenbergPoint::h1(
            rng.random_range(-n_max..n_max),
            rng.random_range(-n_max..n_max),
            rng.random_range(-n_max * n_max..n_max * n_max),
        );
        let n = koranyi_gauge(&x);
        if n <= n_max {
            return (x, n);
        }
    }
}

#[test]
fn zeta_reflection_and_radiality() {
    let ev = KernelEvaluator::h1();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let t: f64 = rng.random_range(0.2..5.0);
        let (y, _) = sample_ball(&mut rng, 3.0);
        let x = dilate(&y, t.sqrt()).unwrap();
        let mirror = HeisenbergPoint::h1(x.g[0], x.v[0], -x.zeta);
        assert_eq!(ev.heat_kernel_h(t, &x).unwrap(), ev.heat_kernel_h(t, &mirror).unwrap());
        assert_eq!(ev.heat_kernel_scaled(t, &x).unwrap(), ev.heat_kernel_scaled(t, &mirror).unwrap());
        let a: f64 = rng.random_range(0.0..2.0 * PI);
        let rot = HeisenbergPoint::h1(a.cos() * x.g[0] - a.sin() * x.v[0], a.sin() * x.g[0] + a.cos() * x.v[0], x.zeta);
        let p0 = ev.heat_kernel_scaled(t, &x).unwrap();
        let p1 = ev.heat_kernel_scaled(t, &rot).unwrap();
        assert!((p0 - p1).abs() < 1e-8 * p0);
    }
}

#[test]
fn euclidean_mass_against_erf() {
    // erfc(5) from its asymptotic series; the Riemann sum of a Gaussian is
    // spectrally accurate, so the truncation is the only error.
    let x: f64 = 5.0;
    let erfc = (-x * x).exp() / (x * PI.sqrt()) * (1.0 - 1.0 / (2.0 * x * x) + 3.0 / (4.0 * x.powi(4)));
    let m = kernel_mass_euclidean_1d(1.0, 10.0, 0.01).unwrap();
    assert!((m - (1.0 - erfc)).abs() < 1e-6);
    assert!((heat_kernel_euclidean(3, 2.0, &[2.0, 0.0, 0.0]).unwrap() - (8.0 * PI).powf(-1.5) * (-0.5f64).exp()).abs() < 1e-16);
}

#[test]
fn kernel_mass_small_radius_vanishes() {
    let ev = KernelEvaluator::h1();
    let big = kernel_mass(&ev, 1.0, 1.0, 0.1).unwrap();
    let small = kernel_mass(&ev, 1.0, 0.2, 0.1).unwrap();
    assert!(small < 0.05 * big);
    assert!(kernel_mass(&ev, 1.0, 0.0, 0.1).is_err());
}

#[test]
fn li_sandwich_single_point() {
    let ev = KernelEvaluator::h1();
    let est = li_sandwich_check(&ev, &[HeisenbergPoint::identity(1)]).unwrap();
    assert!((est.a_empirical - 64.0).abs() < 1e-9);
    let rep = kernel_ratio_bound_check(&ev, 2.0, 1.0, &[HeisenbergPoint::identity(1)], est.a_empirical).unwrap();
    assert!((rep.min_ratio - 0.25).abs() < 1e-12);
    assert_eq!(rep.violations, 0);
    let same = kernel_ratio_bound_check(&ev, 1.5, 1.5, &[HeisenbergPoint::h1(1.0, 2.0, 3.0)], 1.0).unwrap();
    assert!((same.min_ratio - 1.0).abs() < 1e-15);
    assert!(kernel_ratio_bound_check(&ev, 1.0, 2.0, &[HeisenbergPoint::identity(1)], 1.0).is_err());
}

#[test]
fn discrete_semigroup_property_improves_with_refinement() {
    // Sample p_s on a radial grid, push it forward by t, compare with
    // p_{s+t} at nodes with N <= 2.
    let ev = KernelEvaluator::h1();
    let (s, t) = (0.5, 0.5);
    let err = |grid: RadialGrid| {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.nr {
            for k in 0..grid.nz {
                data.push(ev.heat_kernel_scaled_radial(s, grid.r(i), grid.zeta(k)).unwrap());
            }
        }
        let out = RadialSemigroup::new(grid).apply(&data, t).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..grid.nr {
            for k in 0..grid.nz {
                if koranyi_from_parts(grid.r(i), grid.zeta(k)) <= 2.0 {
                    let exact = ev.heat_kernel_scaled_radial(s + t, grid.r(i), grid.zeta(k)).unwrap();
                    worst = worst.max((out[grid.index(i, k)] - exact).abs() / exact);
                }
            }
        }
        worst
    };
    let coarse = RadialGrid::new(40, 0.2, 64, 0.5).unwrap();
    let e1 = err(coarse);
    let e2 = err(coarse.refined());
    assert!(e2 < e1 && e2 < 1e-3, "{e1} -> {e2}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contour_and_cosine_forms_agree(t in 0.1..10.0f64, g in -2.0..2.0f64, v in -2.0..2.0f64, z in -4.0..4.0f64) {
        let ev = KernelEvaluator::h1();
        let y = HeisenbergPoint::h1(g, v, z);
        prop_assume!(koranyi_gauge(&y) <= 4.0);
        let x = dilate(&y, t.sqrt()).unwrap();
        let direct = ev.heat_kernel_h(t, &x).unwrap();
        let scaled = ev.heat_kernel_scaled(t, &x).unwrap();
        prop_assert!((direct - scaled).abs() < 1e-6 * direct);
    }
}
