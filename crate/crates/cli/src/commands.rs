use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use hfujita_core::criteria::{
    classify, classify_numeric, condition_a_integral, heisenberg_verdicts, ConditionAOptions, CriterionReport,
    CriterionSpec,
};
use hfujita_core::group::{dilate, koranyi_gauge, GroupParams, HeisenbergPoint};
use hfujita_core::heat_kernel::{
    default_mass_radius, default_mass_step, heat_kernel_euclidean, kernel_mass, kernel_ratio_bound_check,
    li_sandwich_check, KernelEvaluator,
};
use hfujita_core::nonlinearity::{AlphaGridPolicy, NonlinearitySpec, TimeWeightSpec};
use hfujita_core::solver::{
    fujita_sweep, run_simulation, Domain, GridSpec, InitialData, InitialProfile, RadialGrid, SimulationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{parse_list, Params};
use crate::error::CliError;

pub struct Report {
    pub summary: Value,
    pub outputs: Vec<PathBuf>,
}

fn spec_f(p: &Params, default: &str) -> Result<NonlinearitySpec, CliError> {
    Ok(p.raw("f").unwrap_or(default).parse::<NonlinearitySpec>()?)
}

fn spec_phi(p: &Params) -> Result<TimeWeightSpec, CliError> {
    Ok(p.raw("phi").unwrap_or("constant").parse::<TimeWeightSpec>()?)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn opt_text(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn radial_grid(p: &Params) -> Result<RadialGrid, CliError> {
    let d = RadialGrid::default_coarse();
    Ok(RadialGrid::new(p.get("nr", d.nr)?, p.get("hr", d.hr)?, p.get("nz", d.nz)?, p.get("hz", d.hz)?)?)
}

fn initial_data(p: &Params) -> Result<InitialData, CliError> {
    let radius: f64 = p.get("radius", 1.0)?;
    let profile = match p.raw("initial").unwrap_or("bump") {
        "bump" => InitialProfile::Bump { height: p.get("height", 1.0)?, radius },
        "unit_bump" => {
            let InitialProfile::Bump { height, .. } = InitialData::unit_mass_bump(radius).profile else {
                unreachable!("unit_mass_bump builds a bump")
            };
            InitialProfile::Bump { height: p.get("height", 1.0)? * height, radius }
        }
        "flat" => InitialProfile::Flat { value: p.get("height", 1.0)? },
        other => return Err(CliError::Parse(format!("unknown initial profile `{other}` (bump, unit_bump, flat)"))),
    };
    let data = InitialData { profile, tail: p.get_opt("tail")? };
    data.validate()?;
    Ok(data)
}

fn simulation_config(p: &Params, default_horizon: f64) -> Result<SimulationConfig, CliError> {
    let domain = match p.raw("domain").unwrap_or("heisenberg") {
        "heisenberg" => Domain::HeisenbergRadial(radial_grid(p)?),
        "cartesian" => Domain::HeisenbergCartesian(GridSpec::default_h1()),
        "euclidean" => Domain::Euclidean { dim: p.get("dim", 3)?, nr: p.get("nr", 400)?, hr: p.get("hr", 0.05)? },
        "flat" => Domain::Flat,
        other => {
            return Err(CliError::Parse(format!("unknown domain `{other}` (heisenberg, cartesian, euclidean, flat)")))
        }
    };
    let mut cfg = SimulationConfig::new(spec_f(p, "power:p=2")?, spec_phi(p)?, initial_data(p)?, p.get("horizon", default_horizon)?)
        .with_domain(domain);
    cfg.dt0 = p.get("dt0", cfg.dt0)?;
    cfg.dt_min = p.get("dt_min", cfg.dt_min.min(cfg.dt0))?;
    cfg.growth_limit = p.get("growth_limit", cfg.growth_limit)?;
    cfg.blowup_factor = p.get("blowup_factor", cfg.blowup_factor)?;
    cfg.regrid_threshold = match p.raw("regrid_threshold") {
        Some("none") => None,
        Some(_) => p.get_opt("regrid_threshold")?,
        None => cfg.regrid_threshold,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn kernel_eval(p: &Params) -> Result<Report, CliError> {
    let t: f64 = p.get("t", 1.0)?;
    if let Some(dim) = p.get_opt::<usize>("dim")? {
        let x = match p.raw("point") {
            Some(s) => parse_list("point", s)?,
            None => vec![0.0; dim],
        };
        let value = heat_kernel_euclidean(dim, t, &x)?;
        println!("{value:.15e}");
        return Ok(Report { summary: json!({ "dim": dim, "t": t, "point": x, "value": value }), outputs: vec![] });
    }
    let n: usize = p.get("n", 1)?;
    let ev = KernelEvaluator::new(GroupParams::new(n)?).with_tolerances(p.get("rel_tol", 1e-10)?, 1e-300)?;
    let coords = match p.raw("point") {
        Some(s) => parse_list("point", s)?,
        None => vec![0.0; 2 * n + 1],
    };
    let x = HeisenbergPoint::from_flat(&coords)?;
    let value = match p.raw("form").unwrap_or("contour") {
        "contour" => ev.heat_kernel_scaled(t, &x)?,
        "cosine" => ev.heat_kernel_h(t, &x)?,
        other => return Err(CliError::Parse(format!("unknown kernel form `{other}` (contour, cosine)"))),
    };
    println!("{value:.15}");
    Ok(Report {
        summary: json!({ "n": n, "t": t, "point": coords, "form": p.raw("form").unwrap_or("contour"), "value": value }),
        outputs: vec![],
    })
}

/// Haar-uniform points with gauge at most `n_max` (rejection from a box).
fn haar_sample(rng: &mut ChaCha8Rng, count: usize, n_max: f64) -> Vec<HeisenbergPoint> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = HeisenbergPoint::h1(
            rng.random_range(-n_max..n_max),
            rng.random_range(-n_max..n_max),
            rng.random_range(-n_max * n_max..n_max * n_max),
        );
        if koranyi_gauge(&x) <= n_max {
            out.push(x);
        }
    }
    out
}

/// Gauge uniform on `[0, n_max]`, so small scales are sampled as densely as
/// large ones.
fn gauge_stratified_sample(rng: &mut ChaCha8Rng, count: usize, n_max: f64) -> Vec<HeisenbergPoint> {
    (0..count)
        .map(|_| {
            let n: f64 = rng.random_range(0.0..n_max);
            let psi: f64 = rng.random_range(-0.5 * PI..0.5 * PI);
            let theta: f64 = rng.random_range(0.0..2.0 * PI);
            let xi = n * psi.cos().sqrt();
            HeisenbergPoint::h1(xi * theta.cos(), xi * theta.sin(), n * n * psi.sin())
        })
        .collect()
}

pub fn kernel_check(p: &Params, out: &Path) -> Result<Report, CliError> {
    let ev = KernelEvaluator::h1();
    let seed: u64 = p.get("seed", 0)?;
    let samples: usize = p.get("samples", 1000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outputs = Vec::new();
    let mut all_pass = true;

    let mut mass_rows = Vec::new();
    let mut mass = Vec::new();
    if p.get("mass", true)? {
        for t in p.list("t", &[1.0])? {
            let (radius, h) = (default_mass_radius(t), default_mass_step(t));
            let m1 = kernel_mass(&ev, t, radius, h)?;
            let m2 = kernel_mass(&ev, t, radius, 0.5 * h)?;
            let pass = (m1 - 1.0).abs() < 2e-3 && (m2 - 1.0).abs() <= (m1 - 1.0).abs();
            all_pass &= pass;
            println!("mass t={t}: {m1:.8} (step {h}), {m2:.8} (step {})", 0.5 * h);
            mass_rows.push(vec![t.to_string(), h.to_string(), m1.to_string()]);
            mass_rows.push(vec![t.to_string(), (0.5 * h).to_string(), m2.to_string()]);
            mass.push(json!({ "t": t, "radius": radius, "step": h, "mass": m1, "mass_halved": m2, "pass": pass }));
        }
        let path = out.join("kernel_mass.csv");
        write_csv(&path, &["t", "step", "mass"], mass_rows)?;
        outputs.push(path);
    }

    let cosine = KernelEvaluator::h1().with_tolerances(1e-9, 1e-300)?;
    let mut worst = 0.0_f64;
    for y in haar_sample(&mut rng, samples, 4.0) {
        let t: f64 = 10f64.powf(rng.random_range(-1.0..1.0));
        let x = dilate(&y, t.sqrt())?;
        let pt = cosine.heat_kernel_h(t, &x)?;
        worst = worst.max((pt - ev.p1(y.xi_norm(), y.zeta)? / (t * t)).abs() / pt);
    }
    all_pass &= worst < 1e-6;
    println!("scaling: max relative defect {worst:.3e} over {samples} points");

    let small = li_sandwich_check(&ev, &gauge_stratified_sample(&mut rng, samples, 4.0))?;
    let large = li_sandwich_check(&ev, &gauge_stratified_sample(&mut rng, 10 * samples, 4.0))?;
    let change = (large.a_empirical - small.a_empirical).abs() / small.a_empirical;
    all_pass &= change < 0.1;
    println!("Li constant: {:.6} ({samples} points), {:.6} ({} points)", small.a_empirical, large.a_empirical, 10 * samples);

    let sample = haar_sample(&mut rng, samples, 4.0);
    let mut ratios = Vec::new();
    for (t1, t2) in [(2.0, 1.0), (4.0, 1.0), (4.0, 2.0)] {
        let rep = kernel_ratio_bound_check(&ev, t1, t2, &sample, large.a_empirical)?;
        all_pass &= rep.violations == 0;
        println!("ratio ({t1},{t2}): min {:.4e} vs bound {:.4e}, {} violations", rep.min_ratio, rep.bound, rep.violations);
        ratios.push(rep);
    }

    let summary = json!({
        "seed": seed,
        "samples": samples,
        "mass": mass,
        "scaling_max_relative_defect": worst,
        "li": { "small": small, "large": large, "relative_change": change },
        "ratio_bounds": ratios,
        "all_pass": all_pass,
    });
    let path = out.join("kernel_check.json");
    write_json(&path, &summary)?;
    outputs.push(path);
    if !all_pass {
        return Err(CliError::Numerical(format!("kernel checks failed; see {}", out.join("kernel_check.json").display())));
    }
    Ok(Report { summary, outputs })
}

fn report_json(r: &CriterionReport) -> Value {
    serde_json::to_value(r).expect("report serializes")
}

pub fn criteria(p: &Params, out: &Path) -> Result<Report, CliError> {
    let f: NonlinearitySpec = p.require::<String>("f")?.parse()?;
    let phi = spec_phi(p)?;
    let theta: f64 = p.get("theta", 1.0)?;
    let numeric: bool = p.get("numeric", false)?;
    let mut outputs = Vec::new();
    let (report, extra) = match p.get_opt::<usize>("heisenberg_n")? {
        Some(n) => {
            let both = heisenberg_verdicts(n, phi, f, theta)?;
            println!("necessary (beta = {}): {}", n + 1, both.necessary.verdict.as_str());
            println!("sufficient (beta = {}): {}", 2 * n, both.sufficient.verdict.as_str());
            let extra = json!({
                "n": n,
                "necessary": report_json(&both.necessary),
                "sufficient": report_json(&both.sufficient),
            });
            (both.necessary, Some(extra))
        }
        None => {
            let spec = CriterionSpec::new(phi, f, p.get("beta", 2.0)?, theta)?;
            let report = if numeric { classify_numeric(&spec)? } else { classify(&spec)? };
            println!("{}", report.verdict.as_str());
            (report, None)
        }
    };
    let path = out.join("criteria.csv");
    write_csv(&path, &["verdict", "method", "tail_exponent", "T", "I"], report.csv_rows().into_iter().map(Vec::from))?;
    outputs.push(path);
    let summary = extra.unwrap_or_else(|| report_json(&report));
    let path = out.join("criteria.json");
    write_json(&path, &summary)?;
    outputs.push(path);
    Ok(Report { summary, outputs })
}

pub fn condition_a(p: &Params, out: &Path) -> Result<Report, CliError> {
    let radius: f64 = p.get("radius", 1.0)?;
    let w = match p.get_opt::<f64>("height")? {
        Some(h) => InitialData::bump(h, radius),
        None => InitialData::unit_mass_bump(radius),
    };
    let w = InitialData { tail: p.get_opt("tail")?, ..w };
    let mut opts = ConditionAOptions::default();
    opts.dt0 = p.get("dt0", opts.dt0)?;
    opts.regrid_threshold = p.get("regrid_threshold", opts.regrid_threshold)?;
    let trace = condition_a_integral(&w, &spec_phi(p)?, &spec_f(p, "power:p=2")?, radial_grid(p)?, p.get("horizon", 64.0)?, opts)?;
    println!("{}", trace.verdict.as_str());
    if let Some(s) = trace.sup_decay_slope {
        println!("sup decay slope: {s:.4}");
    }
    let path = out.join("condition_a.csv");
    write_csv(
        &path,
        &["tau", "sup", "integrand", "cumulative"],
        trace.samples.iter().map(|s| vec![s.tau.to_string(), s.sup.to_string(), s.integrand.to_string(), s.cumulative.to_string()]),
    )?;
    let summary = serde_json::to_value(&trace)?;
    let json_path = out.join("condition_a.json");
    write_json(&json_path, &summary)?;
    Ok(Report { summary, outputs: vec![path, json_path] })
}

pub fn simulate(p: &Params, out: &Path) -> Result<Report, CliError> {
    let cfg = simulation_config(p, 10.0)?;
    let outcome = run_simulation(&cfg)?;
    let path = out.join("trace.csv");
    write_csv(
        &path,
        &["t", "sup_u", "mass", "dt", "event"],
        outcome.trace.iter().map(|r| vec![r.t.to_string(), r.sup_u.to_string(), r.mass.to_string(), r.dt.to_string(), r.event.to_string()]),
    )?;
    let blow_up = outcome.blow_up();
    match blow_up {
        Some(b) => println!("blow-up at t* = {} ({})", b.t_star, b.reason.as_str()),
        None => println!("global-to-horizon (sup u = {:e} at t = {})", outcome.state.sup(), outcome.state.t),
    }
    let summary = json!({
        "domain": cfg.domain.label(),
        "verdict": outcome.verdict(),
        "t_star": blow_up.map(|b| b.t_star),
        "reason": blow_up.map(|b| b.reason.as_str()),
        "final_t": outcome.state.t,
        "final_sup": outcome.state.sup(),
        "regrids": outcome.regrids,
        "regrid_mass_loss": outcome.regrid_mass_loss,
        "steps": outcome.trace.iter().filter(|r| r.event == "step").count(),
    });
    let json_path = out.join("simulate.json");
    write_json(&json_path, &summary)?;
    Ok(Report { summary, outputs: vec![path, json_path] })
}

pub fn sweep(p: &Params, out: &Path) -> Result<Report, CliError> {
    let base = simulation_config(p, 50.0)?;
    let ps = p.list("p", &[1.2, 1.4, 1.6, 2.0, 3.0])?;
    let amps = p.list("amp", &[0.01, 0.1, 1.0])?;
    let rows = fujita_sweep(&base, &ps, &amps)?;
    let path = out.join("sweep.csv");
    write_csv(
        &path,
        &["p", "amplitude", "verdict", "t_star"],
        rows.iter().map(|r| vec![r.p.to_string(), r.amplitude.to_string(), r.verdict.to_string(), opt_text(r.t_star)]),
    )?;
    for r in &rows {
        println!("p={} amp={}: {}{}", r.p, r.amplitude, r.verdict, r.t_star.map_or(String::new(), |t| format!(" at t* = {t}")));
    }
    let blow_ups = rows.iter().filter(|r| r.t_star.is_some()).count();
    Ok(Report { summary: json!({ "rows": rows.len(), "blow_ups": blow_ups }), outputs: vec![path] })
}

pub fn nonlinearity_check(p: &Params, out: &Path) -> Result<Report, CliError> {
    let f: NonlinearitySpec = p.require::<String>("f")?.parse()?;
    let policy = AlphaGridPolicy::default();
    let maj = f.check_maj_condition()?;
    let min = f.check_min_condition()?;
    let ratio_monotone = f.check_ratio_monotone()?;
    let convex = f.check_convex()?;
    println!("f_M(v)/v -> 0: {}", maj.verdict.as_str());
    println!("int 1/f_m < inf: {}", min.verdict.as_str());
    println!("f(v)/v non-decreasing: {ratio_monotone}");
    println!("convex: {convex}");
    let (lo, hi): (f64, f64) = (p.get("v_min", 0.01)?, p.get("v_max", 100.0)?);
    let points: usize = p.get("points", 41)?;
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(CliError::Config("need 0 < v_min < v_max and points >= 2".into()));
    }
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let v = (lo.ln() + (hi / lo).ln() * i as f64 / (points - 1) as f64).exp();
        rows.push(vec![
            v.to_string(),
            f.eval(v)?.to_string(),
            f.minorant(v, policy)?.to_string(),
            f.majorant(v, policy)?.to_string(),
        ]);
    }
    let path = out.join("extremal.csv");
    write_csv(&path, &["v", "f", "f_m", "f_M"], rows)?;
    let summary = json!({
        "f": f.to_string(),
        "maj_condition": maj,
        "min_condition": min,
        "ratio_monotone": ratio_monotone,
        "convex": convex,
    });
    let json_path = out.join("nonlinearity.json");
    write_json(&json_path, &summary)?;
    Ok(Report { summary, outputs: vec![path, json_path] })
}
