use hfujita_core::group::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point() -> impl Strategy<Value = HeisenbergPoint> {
    (-5.0..5.0f64, -5.0..5.0f64, -20.0..20.0f64).prop_map(|(g, v, z)| HeisenbergPoint::h1(g, v, z))
}

fn dist(a: &HeisenbergPoint, b: &HeisenbergPoint) -> f64 {
    ((a.g[0] - b.g[0]).powi(2) + (a.v[0] - b.v[0]).powi(2) + (a.zeta - b.zeta).powi(2)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn associativity(a in point(), b in point(), c in point()) {
        let lhs = group_law(&group_law(&a, &b).unwrap(), &c).unwrap();
        let rhs = group_law(&a, &group_law(&b, &c).unwrap()).unwrap();
        prop_assert!(dist(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn inverse_is_involution(x in point()) {
        let back = inverse(&inverse(&x));
        prop_assert_eq!(back, x.clone());
        let id = group_law(&x, &inverse(&x)).unwrap();
        prop_assert!(dist(&id, &HeisenbergPoint::identity(1)) < 1e-12);
    }

    #[test]
    fn homogeneity(x in point()) {
        let rho = cc_distance(&x);
        let n = koranyi_gauge(&x);
        for r in [0.5, 2.0, 7.0] {
            let y = dilate(&x, r).unwrap();
            prop_assert!((cc_distance(&y) - r * rho).abs() <= 1e-10 * (1.0 + r * rho));
            prop_assert!((koranyi_gauge(&y) - r * n).abs() <= 1e-10 * (1.0 + r * n));
        }
    }

    #[test]
    fn dilations_compose(x in point()) {
        let y = dilate(&dilate(&x, 2.0).unwrap(), 0.5).unwrap();
        prop_assert!(dist(&x, &y) < 1e-12);
    }
}

/// Left-invariant fields written as coordinate differential operators and
/// evaluated by central differences.
fn x_field(psi: &dyn Fn(f64, f64, f64) -> f64, g: f64, v: f64, z: f64, h: f64) -> f64 {
    let dg = (psi(g + h, v, z) - psi(g - h, v, z)) / (2.0 * h);
    let dz = (psi(g, v, z + h) - psi(g, v, z - h)) / (2.0 * h);
    dg + 2.0 * v * dz
}

fn y_field(psi: &dyn Fn(f64, f64, f64) -> f64, g: f64, v: f64, z: f64, h: f64) -> f64 {
    let dv = (psi(g, v + h, z) - psi(g, v - h, z)) / (2.0 * h);
    let dz = (psi(g, v, z + h) - psi(g, v, z - h)) / (2.0 * h);
    dv - 2.0 * g * dz
}

fn test_fn(g: f64, v: f64, z: f64) -> f64 {
    (-(g * g + v * v + 0.3 * z * z) / 4.0).exp() * (1.0 + g - 0.5 * v + 0.3 * z + g * z)
}

#[test]
fn fields_are_left_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-4;
    for _ in 0..50 {
        let a = HeisenbergPoint::h1(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0));
        let x = HeisenbergPoint::h1(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let translated = |g: f64, v: f64, z: f64| {
            let y = group_law(&a, &HeisenbergPoint::h1(g, v, z)).unwrap();
            test_fn(y.g[0], y.v[0], y.zeta)
        };
        let ax = group_law(&a, &x).unwrap();
        let lhs_x = x_field(&translated, x.g[0], x.v[0], x.zeta, h);
        let rhs_x = x_field(&test_fn, ax.g[0], ax.v[0], ax.zeta, h);
        let lhs_y = y_field(&translated, x.g[0], x.v[0], x.zeta, h);
        let rhs_y = y_field(&test_fn, ax.g[0], ax.v[0], ax.zeta, h);
        assert!((lhs_x - rhs_x).abs() < 1e-6, "{lhs_x} {rhs_x}");
        assert!((lhs_y - rhs_y).abs() < 1e-6, "{lhs_y} {rhs_y}");
    }
}

#[test]
fn commutator_matches_group_commutator() {
    // [X, Y] psi = c d_zeta psi; fit c by finite differences.
    let h = 1e-3;
    let (g, v, z) = (0.3, -0.4, 0.2);
    let xy = |g: f64, v: f64, z: f64| y_field(&test_fn, g, v, z, h);
    let yx = |g: f64, v: f64, z: f64| x_field(&test_fn, g, v, z, h);
    let comm = x_field(&xy, g, v, z, h) - y_field(&yx, g, v, z, h);
    let dz = (test_fn(g, v, z + h) - test_fn(g, v, z - h)) / (2.0 * h);
    let c = comm / dz;
    assert!((c + 4.0).abs() < 1e-4, "c = {c}");

    // exp(X) exp(Y) exp(-X) exp(-Y) = exp([X, Y]) exactly on a step-2 group.
    let a = HeisenbergPoint::h1(1.0, 0.0, 0.0);
    let b = HeisenbergPoint::h1(0.0, 1.0, 0.0);
    let ab = group_law(&a, &b).unwrap();
    let ba = group_law(&b, &a).unwrap();
    let gc = group_law(&ab, &inverse(&ba)).unwrap();
    assert_eq!(gc.g[0], 0.0);
    assert_eq!(gc.v[0], 0.0);
    assert!((gc.zeta - c).abs() < 1e-4);
    assert_eq!((ab.zeta - ba.zeta).abs(), 4.0);
}

/// Lift of the circular arc of radius `R` and angle `phi` leaving the origin
/// along the g axis, by Simpson's rule on `zeta' = 2 (v g' - g v')`.
fn lifted_arc(radius: f64, phi: f64) -> HeisenbergPoint {
    let steps = 4000;
    let gamma = |s: f64| (radius * s.sin(), radius * (1.0 - s.cos()));
    let dgamma = |s: f64| (radius * s.cos(), radius * s.sin());
    let integrand = |s: f64| {
        let (g, v) = gamma(s);
        let (dg, dv) = dgamma(s);
        2.0 * (v * dg - g * dv)
    };
    let h = phi / steps as f64;
    let mut acc = integrand(0.0) + integrand(phi);
    for k in 1..steps {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * integrand(k as f64 * h);
    }
    let (g, v) = gamma(phi);
    HeisenbergPoint::h1(g, v, acc * h / 3.0)
}

#[test]
fn arcs_shorter_than_a_full_turn_realize_the_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let radius = rng.random_range(0.1..3.0);
        let phi = rng.random_range(0.05..(2.0 * std::f64::consts::PI - 0.05));
        let end = lifted_arc(radius, phi);
        let d = cc_distance(&end);
        assert!((d - radius * phi).abs() < 1e-7 * (1.0 + d), "R={radius} phi={phi}: {d} vs {}", radius * phi);
    }
}

#[test]
fn center_distance_from_closed_loop() {
    // A full turn returns to xi = 0 after length 2 pi R with |zeta| = 4 pi R^2.
    let radius = 0.7;
    let end = lifted_arc(radius, 2.0 * std::f64::consts::PI);
    assert!(end.xi_norm() < 1e-12);
    let d = cc_distance(&HeisenbergPoint::h1(0.0, 0.0, end.zeta));
    assert!((d - 2.0 * std::f64::consts::PI * radius).abs() < 1e-8);
    assert!((cc_distance(&HeisenbergPoint::h1(0.0, 0.0, 1.0)) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
}

#[test]
fn gauge_equivalence_constants() {
    // Frozen from a first run: rho / N lies between 1 (horizontal axis) and
    // sqrt(pi) (center).
    const C1: f64 = 1.0;
    const C2: f64 = 1.772_453_850_905_516;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..10_000 {
        let x = HeisenbergPoint::h1(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-10.0..10.0));
        let ratio = cc_distance(&x) / koranyi_gauge(&x);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    assert!(lo >= C1 * (1.0 - 1e-9), "{lo}");
    assert!(hi <= C2 * (1.0 + 1e-9), "{hi}");
    assert!(lo < 1.01 && hi > 1.7, "{lo} {hi}");
}
