use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::Failure;

/// Threads used when neither `--threads` nor the environment says otherwise.
const THREADS_ENV: &str = "SIGMA_VORTEX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sigma-vortex", version, about = "Non-topological vortex solutions: solve, sweep, verify")]
struct Cli {
    /// TOML configuration (poles, zeros, varrho, r0 and optional run parameters).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for parallel sections (falls back to SIGMA_VORTEX_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for v_β at one β; writes solve.json and field.csv.
    Solve(SolveArgs),
    /// b_β towards one end of the admissible interval; writes sweep CSV and verdict JSON.
    Sweep(SweepArgs),
    /// Run the invariant suites and print a PASS/FAIL table.
    Verify(VerifyArgs),
    /// Γ ∗ F for a source given as CSV.
    Convolve(ConvolveArgs),
    /// Singular data v1, v2, v3, K_β, g_β, u0 on the grid.
    DumpSingular(DumpArgs),
}

#[derive(Debug, Clone, Args)]
struct GridArgs {
    /// Outer radius of the computational domain.
    #[arg(long)]
    rmax: Option<f64>,
    /// Use the radial grid (coincident vortices at the origin only).
    #[arg(long)]
    radial: bool,
    /// Radial node count.
    #[arg(long)]
    nodes: Option<usize>,
    /// Lattice spacing of the 2D grid.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value = "hybrid")]
    method: sigma_vortex::solver::Method,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "upper")]
    endpoint: sigma_vortex::asymptotics::Endpoint,
    /// Decreasing list of ε.
    #[arg(long, value_delimiter = ',', default_values_t = sigma_vortex::asymptotics::DEFAULT_EPSILONS)]
    epsilons: Vec<f64>,
    /// Sweeps always run on the radial grid; accepted for symmetry with `solve`.
    #[arg(long)]
    radial: bool,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Run only these suites (repeatable).
    #[arg(long)]
    suite: Vec<sigma_vortex::verify::Suite>,
    /// Flip the sign of g_β in the mass-identity suite.
    #[arg(long, hide = true)]
    inject_g_sign_error: bool,
}

#[derive(Debug, Args)]
struct ConvolveArgs {
    /// Source CSV with columns x, y, value and optionally side.
    #[arg(long)]
    source: PathBuf,
    /// Target CSV with columns x, y.
    #[arg(long, conflicts_with = "radii")]
    targets: Option<PathBuf>,
    /// Comma-separated target radii, spread in angle.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("{THREADS_ENV}={s:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", cli.out.display())))?;
    let ctx = commands::Context { config: cli.config, out: cli.out, seed: cli.seed, quiet: cli.quiet };
    match cli.command {
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
        Command::Convolve(a) => commands::convolve(&ctx, a),
        Command::DumpSingular(a) => commands::dump_singular(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
