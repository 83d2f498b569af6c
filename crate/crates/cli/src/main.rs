#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lclab::Exec;

#[derive(Parser, Debug)]
#[command(
    name = "lclab",
    version,
    about = "Log-concavity certification and Poisson control experiments"
)]
struct Cli {
    /// Override the default tolerance of the subcommand.
    #[arg(long, global = true, value_parser = positive_f64)]
    tolerance: Option<f64>,

    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "LCLAB_THREADS")]
    threads: Option<usize>,

    /// Run every map sequentially.
    #[arg(long, global = true)]
    sequential: bool,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify log-concavity of a measure (with its Taylor coefficients) or of a sequence.
    CheckLogconcave(CheckArgs),
    /// Dump the Taylor coefficients a_t(n) of a measure.
    Taylor(TaylorArgs),
    /// Build the transform nu of a measure for a quadruple.
    BbTransform(BbArgs),
    /// Certify complete monotonicity of a measurement t -> c_q(t).
    CmCertify(CmArgs),
    /// Post inversion sums and the smoothed density g_t.
    PostInvert(PostArgs),
    /// Convexity of t -> ((n-1)! a_t(n-1))^(-1/n).
    RootConvexity(RootArgs),
    /// Monte Carlo check of the Poisson variational formula.
    PoissonVariational(PoissonArgs),
    /// Floor/ceil coupling of two counting processes on common noise.
    CouplingCheck(CouplingArgs),
    /// Discrete Prekopa-Leindler hypothesis and conclusion.
    DiscretePl(DiscretePlArgs),
    /// Emit the uniform[1,2], (0,1,1,2) transform as CSV and check its closed form.
    Figure1(Figure1Args),
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Measure file or name(args), e.g. exponential(1).
    #[arg(
        long,
        conflicts_with = "sequence",
        required_unless_present = "sequence"
    )]
    measure: Option<String>,
    /// Comma-separated sequence values.
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Largest Taylor index.
    #[arg(long = "N", alias = "n-max", default_value_t = 20)]
    n_max: usize,
}

#[derive(Args, Debug)]
struct TaylorArgs {
    #[arg(long)]
    measure: String,
    #[arg(long)]
    t: f64,
    #[arg(long = "N", alias = "n-max", default_value_t = 20)]
    n_max: usize,
    /// CSV output with columns n, ln_a, a.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BbArgs {
    #[arg(long)]
    measure: String,
    /// k,l,m,n
    #[arg(long)]
    quad: String,
    /// Measure JSON for nu.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV with columns x, density.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Laplace identity grid lo:hi:points (geometric).
    #[arg(long, default_value = "0.25:8:17")]
    t_grid: String,
}

#[derive(Args, Debug)]
struct CmArgs {
    #[arg(long)]
    measure: String,
    /// One quadruple k,l,m,n; every quadruple with n <= --n-max otherwise.
    #[arg(long)]
    quad: Option<String>,
    #[arg(long, default_value_t = 6)]
    n_max: usize,
    #[arg(long, default_value_t = 4)]
    j_max: u32,
    #[arg(long, default_value = "0.25:8:33")]
    t_grid: String,
    /// CSV of (t, c_q(t)); needs --quad.
    #[arg(long, requires = "quad")]
    curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PostArgs {
    #[arg(long)]
    measure: String,
    /// Comma-separated t values.
    #[arg(long, default_value = "10,50,100,400")]
    t: String,
    #[arg(long = "R")]
    r: f64,
    /// CSV of (x, g_t(x)) at the largest t.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, default_value_t = 4.0)]
    x_max: f64,
}

#[derive(Args, Debug)]
struct RootArgs {
    #[arg(long)]
    measure: String,
    #[arg(long)]
    n: u32,
    #[arg(long, default_value = "0.25:8:33")]
    t_grid: String,
}

#[derive(Args, Debug)]
struct PoissonArgs {
    /// JSON map from integer to value plus "beyond".
    #[arg(long)]
    payoff: PathBuf,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    trajectories: usize,
    #[arg(long)]
    seed: u64,
    /// optimal, constant:<c> or a sinusoidal policy file.
    #[arg(long, default_value = "optimal")]
    policy: String,
}

#[derive(Args, Debug)]
struct CouplingArgs {
    /// constant:<c> or a sinusoidal policy file.
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    beta: String,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1000)]
    noises: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum PlMode {
    Counting,
    Poisson,
}

#[derive(Args, Debug)]
struct DiscretePlArgs {
    /// JSON with maps f, g and optionally h, k (tight h = k when absent).
    #[arg(long)]
    quad: PathBuf,
    #[arg(long, value_enum, default_value = "counting")]
    mode: PlMode,
    #[arg(long = "T", alias = "horizon", required_if_eq("mode", "poisson"))]
    horizon: Option<f64>,
    /// Comma-separated n values for the shifted-Poisson limit.
    #[arg(long)]
    limit: Option<String>,
}

#[derive(Args, Debug)]
struct Figure1Args {
    /// CSV output with columns s, density; stdout report only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input: exit 2.
    Input(String),
    /// A computation failed: exit 1.
    Run(String),
}

impl From<lclab::Error> for CliError {
    fn from(e: lclab::Error) -> Self {
        use lclab::Error as E;
        match e {
            E::Parse(_) | E::Json(_) | E::InvalidInput(_) | E::InvalidQuadruple { .. } => {
                Self::Input(e.to_string())
            }
            other => Self::Run(other.to_string()),
        }
    }
}

/// What a subcommand hands back for the report.
pub struct Outcome {
    pub tolerances: Value,
    pub result: Value,
    pub first_failure: Option<String>,
}

pub struct Ctx {
    pub exec: Exec,
    pub tolerance: Option<f64>,
}

impl Ctx {
    pub fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckLogconcave(_) => "check-logconcave",
        Command::Taylor(_) => "taylor",
        Command::BbTransform(_) => "bb-transform",
        Command::CmCertify(_) => "cm-certify",
        Command::PostInvert(_) => "post-invert",
        Command::RootConvexity(_) => "root-convexity",
        Command::PoissonVariational(_) => "poisson-variational",
        Command::CouplingCheck(_) => "coupling-check",
        Command::DiscretePl(_) => "discrete-pl",
        Command::Figure1(_) => "figure1",
    }
}

fn dispatch(ctx: &Ctx, command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::CheckLogconcave(a) => commands::check_logconcave(ctx, a),
        Command::Taylor(a) => commands::taylor(ctx, a),
        Command::BbTransform(a) => commands::bb_transform(ctx, a),
        Command::CmCertify(a) => commands::cm_certify(ctx, a),
        Command::PostInvert(a) => commands::post_invert(ctx, a),
        Command::RootConvexity(a) => commands::root_convexity(ctx, a),
        Command::PoissonVariational(a) => commands::poisson_variational(ctx, a),
        Command::CouplingCheck(a) => commands::coupling_check(ctx, a),
        Command::DiscretePl(a) => commands::discrete_pl(ctx, a),
        Command::Figure1(a) => commands::figure1(ctx, a),
    }
}

fn write_report(path: Option<&PathBuf>, report: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = lclab::par::configure_threads(n) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = Ctx {
        exec: if cli.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        },
        tolerance: cli.tolerance,
    };
    let name = command_name(&cli.command);
    let (report, code) = match dispatch(&ctx, &cli.command) {
        Ok(out) => {
            let pass = out.first_failure.is_none();
            if let Some(f) = &out.first_failure {
                eprintln!("assertion failed: {f}");
            }
            let report = json!({
                "schema": 1,
                "command": name,
                "pass": pass,
                "first_failure": out.first_failure,
                "tolerances": out.tolerances,
                "result": out.result,
            });
            (report, if pass { 0 } else { 1 })
        }
        Err(e) => {
            let (msg, code) = match e {
                CliError::Input(m) => (m, 2),
                CliError::Run(m) => (m, 1),
            };
            eprintln!("error: {msg}");
            let report = json!({
                "schema": 1,
                "command": name,
                "pass": false,
                "error": msg,
            });
            (report, code)
        }
    };
    if let Err(e) = write_report(cli.report.as_ref(), &report) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
