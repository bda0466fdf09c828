use hfujita_core::criteria::*;
use hfujita_core::nonlinearity::*;
use hfujita_core::solver::{InitialData, RadialGrid};

fn p_grid() -> Vec<f64> {
    (0..20).map(|i| 1.1 + 0.1 * i as f64).collect()
}

const RS: [f64; 3] = [-0.5, 0.0, 1.0];
const BETAS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

fn spec(p: f64, r: f64, beta: f64, theta: f64) -> CriterionSpec {
    CriterionSpec::new(TimeWeightSpec::power(r).unwrap(), NonlinearitySpec::power(p).unwrap(), beta, theta).unwrap()
}

#[test]
fn partial_integrals_match_closed_form() {
    // theta^p int_1^T t^e dt with e = r + beta (1 - p).
    for &(p, r, beta, theta) in &[(2.0, 0.0, 2.0, 1.0), (1.3, 1.0, 1.5, 0.1), (3.0, -0.5, 1.0, 10.0)] {
        let e: f64 = r + beta * (1.0 - p);
        let s = spec(p, r, beta, theta);
        for t in [1e2f64, 1e4] {
            let exact = theta.powf(p) * (t.powf(e + 1.0) - 1.0) / (e + 1.0);
            let got = s.partial_integral(t).unwrap();
            assert!((got - exact).abs() < 1e-9 * exact.abs(), "{got} vs {exact}");
        }
    }
}

#[test]
fn numeric_and_analytic_agree_off_the_boundary() {
    for &r in &RS {
        for &beta in &BETAS {
            let pc = fujita_exponent(beta, r).unwrap();
            for p in p_grid() {
                let s = spec(p, r, beta, 1.0);
                let a = classify(&s).unwrap();
                let n = classify_numeric(&s).unwrap();
                assert_eq!(a.method, Method::Analytic);
                assert_eq!(n.method, Method::Numeric);
                assert!(n.partial_integrals.len() >= 4);
                if (p - pc).abs() < 0.02 {
                    assert!(n.verdict == a.verdict || n.verdict == Verdict::Undecided);
                } else {
                    assert_eq!(n.verdict, a.verdict, "p={p} r={r} beta={beta}");
                }
            }
        }
    }
}

#[test]
fn power_sum_numeric_agreement() {
    for &(p, q) in &[(2.5, 1.3), (3.0, 2.0), (2.0, 1.4)] {
        for &beta in &BETAS {
            let s = CriterionSpec::new(
                TimeWeightSpec::power_sum(1.0, 0.0).unwrap(),
                NonlinearitySpec::power_sum(p, q).unwrap(),
                beta,
                1.0,
            )
            .unwrap();
            let a = classify(&s).unwrap().verdict;
            let n = classify_numeric(&s).unwrap().verdict;
            assert!(n == a || n == Verdict::Undecided, "p={p} q={q} beta={beta}: {a:?} vs {n:?}");
        }
    }
}

#[test]
fn verdict_is_theta_independent() {
    for &r in &RS {
        for &beta in &BETAS {
            for p in p_grid() {
                let rep = classify(&spec(p, r, beta, 1.0)).unwrap();
                assert!(rep.theta_sensitivity.values().all(|v| *v == rep.verdict));
                let num = classify_numeric(&spec(p, r, beta, 1.0)).unwrap();
                let first = num.theta_sensitivity.values().next().copied().unwrap();
                assert!(num.theta_sensitivity.values().all(|v| *v == first));
            }
        }
    }
}

#[test]
fn increasing_p_never_restores_divergence() {
    for &r in &RS {
        for &beta in &BETAS {
            let mut seen_convergent = false;
            for p in p_grid() {
                let v = classify(&spec(p, r, beta, 1.0)).unwrap().verdict;
                if seen_convergent {
                    assert_eq!(v, Verdict::Convergent);
                }
                seen_convergent |= v == Verdict::Convergent;
            }
        }
    }
}

#[test]
fn fujita_exponent_is_the_threshold() {
    for &r in &RS {
        for &beta in &BETAS {
            let pc = fujita_exponent(beta, r).unwrap();
            for d in [-0.3, -0.01, 0.0, 0.01, 0.3] {
                let p = pc + d;
                if p <= 0.0 {
                    continue;
                }
                let v = classify(&spec(p, r, beta, 1.0)).unwrap().verdict;
                assert_eq!(v == Verdict::Divergent, d <= 0.0, "p={p} pc={pc}");
            }
        }
    }
    let n2 = fujita_exponent(3.0, 0.0).unwrap();
    assert!((n2 - 4.0 / 3.0).abs() < 1e-15);
    assert!(n2 > 1.0 + 1.0 / 4.0);
}

#[test]
fn heisenberg_side_by_side() {
    // p = 1.3 on H^2: divergent with beta = 3 (p_c = 4/3), convergent with beta = 4 (p_c = 5/4).
    let v = heisenberg_verdicts(2, TimeWeightSpec::constant(1.0).unwrap(), NonlinearitySpec::power(1.3).unwrap(), 1.0).unwrap();
    assert_eq!(v.necessary.verdict, Verdict::Divergent);
    assert_eq!(v.sufficient.verdict, Verdict::Convergent);
    // On H^1 both sides coincide at beta = 2.
    let v1 = heisenberg_verdicts(1, TimeWeightSpec::constant(1.0).unwrap(), NonlinearitySpec::power(1.5).unwrap(), 1.0).unwrap();
    assert_eq!(v1.necessary.verdict, v1.sufficient.verdict);
}

#[test]
fn tabulated_nonlinearity_takes_the_numeric_path() {
    let rows: Vec<(f64, f64)> = (0..=200).map(|i| 10f64.powf(-12.0 + 0.1 * i as f64)).map(|v| (v, v * v)).collect();
    let f = NonlinearitySpec::Tabulated(Table::new(rows).unwrap());
    let s = CriterionSpec::new(TimeWeightSpec::constant(1.0).unwrap(), f, 2.0, 1.0).unwrap();
    let rep = classify(&s).unwrap();
    assert_eq!(rep.method, Method::Numeric);
    assert_eq!(rep.verdict, Verdict::Convergent);
    assert!((rep.fitted_tail_exponent.unwrap() + 2.0).abs() < 1e-6);
}

#[test]
fn condition_a_examples_and_preconditions() {
    let w = InitialData::unit_mass_bump(1.0);
    let phi = TimeWeightSpec::constant(1.0).unwrap();
    let grid = RadialGrid::default_coarse();
    let quad = condition_a_integral(&w, &phi, &NonlinearitySpec::power(2.0).unwrap(), grid, 64.0, ConditionAOptions::default()).unwrap();
    assert_eq!(quad.verdict, Verdict::Convergent);
    assert!((quad.sup_decay_slope.unwrap() + 2.0).abs() < 0.1);
    let z = quad.z_estimate.unwrap();
    assert!(z > quad.samples.last().unwrap().cumulative);
    let slow = condition_a_integral(&w, &phi, &NonlinearitySpec::power(1.2).unwrap(), grid, 64.0, ConditionAOptions::default()).unwrap();
    assert_eq!(slow.verdict, Verdict::Divergent);
    assert!((slow.fitted_tail_exponent + 0.4).abs() < 0.05);
    assert!(slow.z_estimate.is_none());
    let zero = InitialData::bump(0.0, 1.0);
    assert!(condition_a_integral(&zero, &phi, &NonlinearitySpec::power(2.0).unwrap(), grid, 4.0, ConditionAOptions::default()).is_err());
    let negative = InitialData::bump(-1.0, 1.0);
    assert!(condition_a_integral(&negative, &phi, &NonlinearitySpec::power(2.0).unwrap(), grid, 4.0, ConditionAOptions::default()).is_err());
}

#[test]
fn contraction_examples() {
    let grid = RadialGrid::default_coarse();
    let rep = sup_norm_contraction_check(&InitialData::bump(1.0, 1.0), grid, &[0.5, 1.0, 2.0, 4.0], 1e-9).unwrap();
    assert!(rep.holds);
    assert!(rep.sups.windows(2).all(|w| w[1].1 <= w[0].1));
    // Short times approach sup w.
    let short = sup_norm_contraction_check(&InitialData::bump(1.0, 1.0), grid, &[1e-4], 1e-9).unwrap();
    assert!((short.sups[0].1 - short.sup_w).abs() < 1e-2 * short.sup_w);
    // A flat top truncated at the box stays below its value.
    let flat = InitialData { profile: hfujita_core::solver::InitialProfile::Bump { height: 0.5, radius: 3.0 }, tail: None };
    assert!(sup_norm_contraction_check(&flat, grid, &[0.1, 1.0], 1e-9).unwrap().holds);
}
