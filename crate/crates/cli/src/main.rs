mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::Params;
use error::CliError;

/// Heat kernels, divergence criteria and blow-up simulations on the
/// Heisenberg group.
///
/// Exit codes: 0 success, 2 usage, 3 configuration, 4 parse, 5 numerical,
/// 6 I/O, 7 precondition. Failures print a one-line JSON record on stderr.
#[derive(Parser)]
#[command(name = "hfujita", version)]
struct Cli {
    /// Flat TOML file whose keys mirror the subcommand flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "hfujita-out")]
    out: PathBuf,
    /// Worker threads for parallel sweeps and kernel tables.
    #[arg(long, global = true, env = "HFUJITA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Declares a flag set where every flag is also a config key.
macro_rules! flag_set {
    ($name:ident { $($(#[$doc:meta])* $field:ident),* $(,)? }) => {
        #[derive(Args, Debug, Default)]
        struct $name {
            $(
                $(#[$doc])*
                #[arg(long)]
                $field: Option<String>,
            )*
        }

        impl $name {
            const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            fn flags(&self) -> Vec<(&'static str, Option<String>)> {
                vec![$((stringify!($field), self.$field.clone())),*]
            }
        }
    };
}

flag_set!(KernelEvalArgs {
    /// Index n of H^n.
    n,
    /// Time t > 0.
    t,
    /// Coordinates g_1..g_n, v_1..v_n, zeta (or x_1..x_d with --dim).
    point,
    /// `contour` (default) or `cosine`.
    form,
    /// Relative quadrature tolerance.
    rel_tol,
    /// Evaluate the Euclidean kernel on R^dim instead.
    dim,
});

flag_set!(KernelCheckArgs {
    /// Times for the mass check, comma-separated.
    t,
    /// Sample size for the scaling, Li and ratio checks.
    samples,
    seed,
    /// Run the (slow) mass check: true or false.
    mass,
});

flag_set!(CriteriaArgs {
    /// Time weight: constant[:c=..], power:r=.., power_sum:r=..,s=..
    phi,
    /// Nonlinearity: power:p=.., power_sum:p=..,q=.., table:path=..
    f,
    beta,
    theta,
    /// Skip the analytic path and fit the tail numerically.
    numeric,
    /// Report beta = n+1 and beta = 2n side by side for H^n.
    heisenberg_n,
});

flag_set!(ConditionAArgs {
    phi,
    f,
    /// Bump radius; the bump has unit mass unless --height is given.
    radius,
    height,
    tail,
    horizon,
    dt0,
    regrid_threshold,
    nr,
    hr,
    nz,
    hz,
});

flag_set!(SimulateArgs {
    phi,
    f,
    /// bump, unit_bump or flat.
    initial,
    height,
    radius,
    tail,
    horizon,
    /// heisenberg (radial), cartesian, euclidean or flat.
    domain,
    dim,
    nr,
    hr,
    nz,
    hz,
    dt0,
    dt_min,
    growth_limit,
    blowup_factor,
    /// Relative edge mass that triggers a grid dilation, or `none`.
    regrid_threshold,
});

flag_set!(SweepArgs {
    /// Exponents, comma-separated.
    p,
    /// Bump heights, comma-separated.
    amp,
    phi,
    f,
    initial,
    height,
    radius,
    tail,
    horizon,
    domain,
    dim,
    nr,
    hr,
    nz,
    hz,
    dt0,
    dt_min,
    growth_limit,
    blowup_factor,
    regrid_threshold,
});

flag_set!(NonlinearityCheckArgs {
    f,
    v_min,
    v_max,
    points,
});

#[derive(Subcommand)]
enum Command {
    /// Evaluate p_t at one point.
    KernelEval(KernelEvalArgs),
    /// Mass, scaling, Li sandwich and ratio-bound checks on H^1.
    KernelCheck(KernelCheckArgs),
    /// Classify a criterion integral.
    Criteria(CriteriaArgs),
    /// Time integral of phi f(S)/S along the free evolution of a bump.
    ConditionA(ConditionAArgs),
    /// Run one simulation and write its trace.
    Simulate(SimulateArgs),
    /// Blow-up verdicts over a grid of exponents and amplitudes.
    Sweep(SweepArgs),
    /// Majorant and minorant diagnostics of a nonlinearity.
    NonlinearityCheck(NonlinearityCheckArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KernelEval(_) => "kernel-eval",
            Command::KernelCheck(_) => "kernel-check",
            Command::Criteria(_) => "criteria",
            Command::ConditionA(_) => "condition-a",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::NonlinearityCheck(_) => "nonlinearity-check",
        }
    }

    fn keys_and_flags(&self) -> (&'static [&'static str], Vec<(&'static str, Option<String>)>) {
        match self {
            Command::KernelEval(a) => (KernelEvalArgs::KEYS, a.flags()),
            Command::KernelCheck(a) => (KernelCheckArgs::KEYS, a.flags()),
            Command::Criteria(a) => (CriteriaArgs::KEYS, a.flags()),
            Command::ConditionA(a) => (ConditionAArgs::KEYS, a.flags()),
            Command::Simulate(a) => (SimulateArgs::KEYS, a.flags()),
            Command::Sweep(a) => (SweepArgs::KEYS, a.flags()),
            Command::NonlinearityCheck(a) => (NonlinearityCheckArgs::KEYS, a.flags()),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let (keys, flags) = cli.command.keys_and_flags();
    let mut params = match &cli.config {
        Some(path) => Params::from_file(path, keys)?,
        None => Params::default(),
    };
    params.overlay(flags);
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;
    let out: &Path = &cli.out;
    let report = match &cli.command {
        Command::KernelEval(_) => commands::kernel_eval(&params)?,
        Command::KernelCheck(_) => commands::kernel_check(&params, out)?,
        Command::Criteria(_) => commands::criteria(&params, out)?,
        Command::ConditionA(_) => commands::condition_a(&params, out)?,
        Command::Simulate(_) => commands::simulate(&params, out)?,
        Command::Sweep(_) => commands::sweep(&params, out)?,
        Command::NonlinearityCheck(_) => commands::nonlinearity_check(&params, out)?,
    };
    let summary = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "parameters": params.as_map(),
        "config_file": cli.config,
        "threads": rayon::current_num_threads(),
        "outputs": report.outputs,
        "result": report.summary,
    });
    std::fs::write(out.join("run_summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.code())
        }
    }
}
