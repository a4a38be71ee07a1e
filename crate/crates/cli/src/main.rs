use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Random-series B-spline priors: posterior moments, regression, rates.
#[derive(Debug, Parser)]
#[command(name = "series-prior", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Posterior moments of a density from observations on [0, 1].
    DensityFit(DensityFitArgs),
    /// Replicated density-estimation simulation with grid metrics.
    Simulate(SimulateArgs),
    /// Approximation error of spline fits against the number of basis functions.
    ApproxCheck(ApproxArgs),
    /// Contraction-rate exponents and sieve checks.
    Rates(RatesArgs),
    /// Functional linear regression with a g-prior.
    Funreg(FunregArgs),
    /// Binary regression with identity link and Beta priors.
    Binreg(ConjugateRegArgs),
    /// Poisson regression with identity link and Gamma priors.
    Poisreg(ConjugateRegArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Exact,
    Mc,
}

/// Options shared by commands that fit a random-series prior.
#[derive(Debug, Args)]
struct PriorArgs {
    /// key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spline order.
    #[arg(long)]
    q: Option<usize>,
    /// Smallest J.
    #[arg(long)]
    jmin: Option<usize>,
    /// Largest J.
    #[arg(long)]
    jmax: Option<usize>,
    /// Success probability of the geometric prior on J.
    #[arg(long)]
    p: Option<f64>,
}

/// Term-expansion options.
#[derive(Debug, Args)]
struct ExpansionArgs {
    /// Sampled terms per J in Monte-Carlo mode.
    #[arg(long = "N")]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Largest number of terms enumerated exactly per J.
    #[arg(long)]
    cap: Option<f64>,
    /// Number of evaluation grid points.
    #[arg(long)]
    grid: Option<usize>,
    /// Credible band level; 0 disables bands.
    #[arg(long)]
    band: Option<f64>,
}

#[derive(Debug, Args)]
struct DensityFitArgs {
    /// One observation per line.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    expansion: ExpansionArgs,
    /// Dirichlet parameter (scalar or comma list).
    #[arg(long)]
    alpha: Option<String>,
    /// Min-max rescale data onto [0, 1] instead of rejecting it.
    #[arg(long)]
    rescale: bool,
    /// Summary CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Posterior over J; defaults to `<out>` with a `_j` suffix.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// beta-half, mixture-51 or custom-spline.
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    expansion: ExpansionArgs,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Sin,
    Beta22,
    Exp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Linf,
    L2,
}

#[derive(Debug, Args)]
struct ApproxArgs {
    #[arg(long, default_value_t = 3)]
    q: usize,
    #[arg(long, value_enum, default_value_t = Target::Sin)]
    function: Target,
    /// Comma-separated basis dimensions.
    #[arg(long, default_value = "8,16,32,64,128")]
    dims: String,
    #[arg(long, value_enum, default_value_t = NormArg::Linf)]
    norm: NormArg,
    /// Also fit simplex-constrained weights of the normalized basis.
    #[arg(long)]
    simplex: bool,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[arg(long)]
    family: String,
    /// Smoothness; comma list for tensor-bspline.
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value = "0")]
    t2: String,
    /// Defaults to t2.
    #[arg(long)]
    t1: Option<String>,
    #[arg(long, default_value = "1")]
    t3: String,
    /// 2 or inf.
    #[arg(long, default_value = "inf")]
    metric: String,
    /// Write the sieve table to this CSV.
    #[arg(long)]
    sieve: Option<PathBuf>,
    #[arg(long, default_value_t = 1e4)]
    nmin: f64,
    #[arg(long, default_value_t = 1e8)]
    nmax: f64,
    #[arg(long, default_value_t = 41)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c3: f64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
}

#[derive(Debug, Args)]
struct FunregArgs {
    /// Training curves: grid header, then one curve per row.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Held-out curves in the same format.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Training responses, one per line, when not in the last column.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Held-out responses, one per line, when not in the last column.
    #[arg(long)]
    test_responses: Option<PathBuf>,
    /// Map the curve grid onto [0, 1].
    #[arg(long)]
    rescale_grid: bool,
    #[command(flatten)]
    prior: PriorArgs,
    /// g of the g-prior (default n).
    #[arg(long)]
    g: Option<f64>,
    /// Inverse-gamma shape.
    #[arg(long)]
    a: Option<f64>,
    /// Inverse-gamma scale.
    #[arg(long)]
    b: Option<f64>,
    /// Grid points for the coefficient-function summary.
    #[arg(long)]
    grid: Option<usize>,
    /// Coefficient-function summary CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Predictions CSV for the held-out curves.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConjugateRegArgs {
    /// Two columns `z,x` per line.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    expansion: ExpansionArgs,
    /// First prior parameter (scalar or comma list).
    #[arg(long)]
    a: Option<String>,
    /// Second prior parameter (scalar or comma list).
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
}

fn configure_threads() -> anyhow::Result<()> {
    let threads = match std::env::var("SERIES_PRIOR_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|e| anyhow::anyhow!("SERIES_PRIOR_THREADS={v:?}: {e}"))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::DensityFit(a) => commands::density_fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::ApproxCheck(a) => commands::approx_check(a),
        Command::Rates(a) => commands::rates(a),
        Command::Funreg(a) => commands::funreg(a),
        Command::Binreg(a) => commands::conjugate_regression(a, false),
        Command::Poisreg(a) => commands::conjugate_regression(a, true),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // reader went away, e.g. `| head`
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
