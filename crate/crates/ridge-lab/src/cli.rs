//! Command-line front end: argument parsing, check dispatch, deterministic
//! CSV emission, and exit-code policy.
//!
//! Exit codes: 0 when every bound holds, 1 when any report fails, 2 for
//! config or usage errors.

use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, FileConfig, Overrides};
use crate::error::{Error, Result};
use crate::harness::{
    rate_sweep, theorem1_rate_constant, verify_lemma1, verify_lemma2, verify_lemma3,
    verify_lemma4_identity, verify_lemma5_convexity, verify_lemma6_identity, verify_rate_bias,
    verify_rate_dlambda, verify_theorem1, BoundReport, ExperimentConfig, RatePoint,
    SweepParameter, SweepSpec,
};
use crate::output::{
    render_rate_points, report_csv, sweep_csv, write_atomic, RunManifest,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BOUND_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Floor on `verify` trial counts: below this the standard errors that gate
/// pass/fail are too noisy to certify anything.
pub const MIN_VERIFY_TRIALS: usize = 10;

/// Built-in smoke problem for `demo`: small polynomial-decay design with a
/// unit source target and unit noise.
const DEMO_CONFIG: &str = "\
[problem]
d = 5
spectrum = poly:2
r = 1.0
rho = 1.0
sigma = 1.0

[experiment]
n = 50
trials = 200
seed = 7
";

#[derive(Parser)]
#[command(
    name = "ridge-lab",
    version,
    about = "Certify finite-sample ridge regression risk bounds by seeded Monte Carlo"
)]
struct Cli {
    /// Print the available checks and exit.
    #[arg(long)]
    list_checks: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one verifier, or all of them, against a config.
    Verify {
        /// Which check to run.
        #[arg(value_enum)]
        check: CheckArg,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate closed-form functionals and Monte Carlo risk over λ or n.
    Sweep {
        /// Axis to vary.
        #[arg(long, value_enum)]
        param: ParamArg,
        /// Sweep points: a comma list, or lo:hi:logN for N log-spaced values.
        #[arg(long)]
        values: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// List the implemented checks, one per line.
    ListChecks,
    /// Run every check on a built-in small problem.
    Demo {
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config path.
    #[arg(long)]
    config: PathBuf,
    /// Base seed, outranking the config file and RIDGE_LAB_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count, outranking the config file.
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination, outranking the config's [output] section.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Standard errors of slack granted to stochastic checks.
    #[arg(long = "se-mult")]
    se_mult: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckArg {
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
    Lemma4Identity,
    Lemma5Convexity,
    Lemma6Identity,
    RateDlambda,
    RateBias,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ParamArg {
    Lambda,
    N,
}

/// The implemented checks, in canonical execution order.
pub const CHECK_NAMES: [&str; 9] = [
    "lemma1",
    "lemma2",
    "lemma3",
    "theorem1",
    "lemma4-identity",
    "lemma5-convexity",
    "lemma6-identity",
    "rate-dlambda",
    "rate-bias",
];

const ALL_CHECKS: [CheckArg; 9] = [
    CheckArg::Lemma1,
    CheckArg::Lemma2,
    CheckArg::Lemma3,
    CheckArg::Theorem1,
    CheckArg::Lemma4Identity,
    CheckArg::Lemma5Convexity,
    CheckArg::Lemma6Identity,
    CheckArg::RateDlambda,
    CheckArg::RateBias,
];

impl CheckArg {
    fn name(self) -> &'static str {
        match self {
            CheckArg::Lemma1 => "lemma1",
            CheckArg::Lemma2 => "lemma2",
            CheckArg::Lemma3 => "lemma3",
            CheckArg::Theorem1 => "theorem1",
            CheckArg::Lemma4Identity => "lemma4-identity",
            CheckArg::Lemma5Convexity => "lemma5-convexity",
            CheckArg::Lemma6Identity => "lemma6-identity",
            CheckArg::RateDlambda => "rate-dlambda",
            CheckArg::RateBias => "rate-bias",
            CheckArg::All => "all",
        }
    }
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; they exit clean.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.list_checks {
        print_checks();
        return EXIT_OK;
    }
    let Some(command) = cli.command else {
        let _ = Cli::command().print_help();
        return EXIT_USAGE;
    };
    match execute(command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn print_checks() {
    for name in CHECK_NAMES {
        println!("{name}");
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::ListChecks => {
            print_checks();
            Ok(EXIT_OK)
        }
        Command::Verify { check, common } => {
            configure_pool(common.jobs)?;
            let text = std::fs::read_to_string(&common.config)?;
            let file = parse_config(&text)?;
            let exp = resolve_experiment(&file, &common)?;
            if exp.trials < MIN_VERIFY_TRIALS {
                return Err(Error::InvalidInput(format!(
                    "verify needs at least {MIN_VERIFY_TRIALS} trials, got {}",
                    exp.trials
                )));
            }
            let command_line = format!("verify {}", check.name());
            run_reports(command_line, &text, &exp, check, common.out.or(file.out))
        }
        Command::Sweep { param, values, common } => {
            configure_pool(common.jobs)?;
            let text = std::fs::read_to_string(&common.config)?;
            let file = parse_config(&text)?;
            let exp = resolve_experiment(&file, &common)?;
            let sweep_spec = SweepSpec {
                parameter: match param {
                    ParamArg::Lambda => SweepParameter::Lambda,
                    ParamArg::N => SweepParameter::N,
                },
                values: parse_sweep_values(&values)?,
            };
            let table = rate_sweep(&exp, &sweep_spec)?;
            let command_line =
                format!("sweep --param {} --values {values}", sweep_spec.parameter.as_str());
            let manifest = RunManifest::new(command_line, &text, exp.base_seed);
            print!("{}", manifest.render());
            print!(
                "{}",
                render_rate_points(
                    &format!("sweep over {}", sweep_spec.parameter.as_str()),
                    &table.points
                )
            );
            for (label, slope) in [
                ("d_lambda", table.d_lambda_slope),
                ("bias_functional", table.bias_slope),
                ("population_bias", table.population_bias_slope),
            ] {
                if let Some(s) = slope {
                    println!("slope {label}: {s:.4}");
                }
            }
            if let Some(path) = common.out.or(file.out) {
                write_atomic(&path, &sweep_csv(&table))?;
                println!("wrote {}", path.display());
            }
            Ok(EXIT_OK)
        }
        Command::Demo { jobs } => {
            configure_pool(jobs)?;
            let file = parse_config(DEMO_CONFIG)?;
            let exp = file.resolve(&Overrides::default(), None)?;
            run_reports("demo".into(), DEMO_CONFIG, &exp, CheckArg::All, None)
        }
    }
}

/// Runs one check (or the full suite), prints the manifest and any sweep
/// tables, optionally writes the CSV, and maps failures to exit 1.
fn run_reports(
    command_line: String,
    config_text: &str,
    exp: &ExperimentConfig,
    check: CheckArg,
    out: Option<PathBuf>,
) -> Result<i32> {
    let mut manifest = RunManifest::new(command_line, config_text, exp.base_seed);
    let checks: &[CheckArg] =
        if check == CheckArg::All { &ALL_CHECKS } else { std::slice::from_ref(&check) };
    let mut tables: Vec<(String, Vec<RatePoint>)> = Vec::new();
    for &c in checks {
        let (mut reports, mut extra) = run_check(c, exp)?;
        manifest.reports.append(&mut reports);
        tables.append(&mut extra);
    }
    print!("{}", manifest.render());
    for (label, points) in &tables {
        print!("{}", render_rate_points(label, points));
    }
    // The finite-dimension constant is fitted and reported, never asserted.
    if checks.contains(&CheckArg::Theorem1) {
        if let Some((lambda, c)) = theorem1_rate_constant(&exp.problem, exp.n)? {
            println!("theorem1 rate constant: C = {c:.4} at lambda = {lambda:.4e}");
        }
    }
    let passed = manifest.reports.iter().filter(|r| r.pass).count();
    println!("{passed} of {} bounds hold", manifest.reports.len());
    if let Some(path) = out {
        write_atomic(&path, &report_csv(&manifest.reports))?;
        println!("wrote {}", path.display());
    }
    if passed == manifest.reports.len() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_BOUND_FAILURE)
    }
}

#[allow(clippy::type_complexity)]
fn run_check(
    check: CheckArg,
    exp: &ExperimentConfig,
) -> Result<(Vec<BoundReport>, Vec<(String, Vec<RatePoint>)>)> {
    Ok(match check {
        CheckArg::Lemma1 => (verify_lemma1(exp)?, Vec::new()),
        CheckArg::Lemma2 => (verify_lemma2(exp)?, Vec::new()),
        CheckArg::Lemma3 => (verify_lemma3(exp)?, Vec::new()),
        CheckArg::Theorem1 => (verify_theorem1(exp)?, Vec::new()),
        CheckArg::Lemma4Identity => (verify_lemma4_identity(exp)?, Vec::new()),
        CheckArg::Lemma5Convexity => (verify_lemma5_convexity(exp)?, Vec::new()),
        CheckArg::Lemma6Identity => (verify_lemma6_identity(exp)?, Vec::new()),
        CheckArg::RateDlambda => {
            let rc = verify_rate_dlambda(exp)?;
            (rc.reports, rc.tables)
        }
        CheckArg::RateBias => {
            let rc = verify_rate_bias(exp)?;
            (rc.reports, rc.tables)
        }
        CheckArg::All => unreachable!("the caller expands `all`"),
    })
}

fn resolve_experiment(file: &FileConfig, common: &CommonArgs) -> Result<ExperimentConfig> {
    let overrides = Overrides {
        seed: common.seed,
        trials: common.trials,
        se_multiplier: common.se_mult,
    };
    file.resolve(&overrides, env_seed()?)
}

/// Reads RIDGE_LAB_SEED; unset means None, malformed is an error rather
/// than a silent fallback.
fn env_seed() -> Result<Option<u64>> {
    match std::env::var("RIDGE_LAB_SEED") {
        Ok(s) => s.trim().parse::<u64>().map(Some).map_err(|_| {
            Error::InvalidInput(format!("RIDGE_LAB_SEED must be an unsigned integer, got `{s}`"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err(Error::InvalidInput("RIDGE_LAB_SEED is not valid unicode".into()))
        }
    }
}

fn configure_pool(jobs: Option<usize>) -> Result<()> {
    let Some(jobs) = jobs else { return Ok(()) };
    if jobs == 0 {
        return Err(Error::InvalidInput("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("could not configure {jobs} worker threads: {e}")))
}

/// Sweep points: either `lo:hi:logN` (N log-spaced values, inclusive) or a
/// comma-separated list.
pub fn parse_sweep_values(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let count_str = parts[2].strip_prefix("log").ok_or_else(|| {
            Error::InvalidInput(format!("expected lo:hi:logN, got `{text}`"))
        })?;
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad sweep endpoint `{}`", parts[0])))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad sweep endpoint `{}`", parts[1])))?;
        let count: usize = count_str
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad sweep count `{count_str}`")))?;
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo {
            return Err(Error::InvalidInput(format!(
                "log sweep needs 0 < lo < hi, got {lo}:{hi}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidInput("log sweep needs at least 2 points".into()));
        }
        let (llo, lhi) = (lo.ln(), hi.ln());
        return Ok((0..count)
            .map(|k| (llo + (lhi - llo) * k as f64 / (count - 1) as f64).exp())
            .collect());
    }
    if parts.len() != 1 {
        return Err(Error::InvalidInput(format!("expected lo:hi:logN, got `{text}`")));
    }
    text.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad sweep value `{piece}`")))
        })
        .collect()
}
