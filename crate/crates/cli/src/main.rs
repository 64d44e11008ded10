use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use planar_orbits::density::TestFunction;
use planar_orbits::experiments::Window;
use planar_orbits::{LatticeKind, MatrixNorm, Vec2};

mod config;
mod error;
mod run;

use config::{parse_function, parse_grid, parse_grid_arg, parse_vec2, Grid, Settings};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "planar-orbits", version, about = "Orbit counting for lattices of SL(2,R) acting on the plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Export the points γu, γ ∈ Γ_T, inside a window.
    Cloud(CloudArgs),
    /// Orbit sums against T·∫ f/(v⋆u) along a grid of radii.
    Converge(ExperimentArgs),
    /// Orbit sums of f(γu/T^α), normalized by T^{1+α}.
    Scaling(ExperimentArgs),
    /// Closest orbit point to a target along a grid of radii.
    Target(TargetArgs),
    /// Continued fraction table of a slope.
    Cf(CfArgs),
    /// Cusp excursion height of the geodesic above a slope.
    Excursion(ExcursionArgs),
    /// Run the invariant suite at small scale.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for `<command>.csv` and `<command>.json`; CSV goes to stdout
    /// when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct LatticeArgs {
    #[arg(long)]
    lattice: Option<LatticeKind>,
    #[arg(long)]
    norm: Option<MatrixNorm>,
    /// Initial vector `x,y`.
    #[arg(long, value_parser = parse_vec2, allow_hyphen_values = true)]
    u: Option<Vec2>,
}

#[derive(Debug, Args)]
struct CloudArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long = "T", alias = "t")]
    t: Option<f64>,
    /// `x0,x1,y0,y1`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<Window>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// `annulus:r0,r1`, `box:x0,x1,y0,y1`, `bump:x,y,r`, `hat:r0,r1` or JSON.
    #[arg(long, value_parser = parse_function, allow_hyphen_values = true)]
    f: Option<TestFunction>,
    /// Comma-separated increasing radii.
    #[arg(long = "T-grid", alias = "t-grid", value_parser = parse_grid_arg)]
    t_grid: Option<Grid>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Absolute tolerance of the density integral.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    admissibility_c: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
}

#[derive(Debug, Args)]
struct TargetArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Target point `x,y`.
    #[arg(long, value_parser = parse_vec2, allow_hyphen_values = true)]
    v: Option<Vec2>,
    #[arg(long = "T-grid", alias = "t-grid", value_parser = parse_grid_arg)]
    t_grid: Option<Grid>,
}

#[derive(Debug, Args)]
struct CfArgs {
    #[command(flatten)]
    common: Common,
    /// `golden`, `sqrt2-1`, `p/q`, `surd:p,d,q`, `quotients:a1,a2,…` or a decimal.
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Debug, Args)]
struct ExcursionArgs {
    #[command(flatten)]
    common: Common,
    /// Slope, as for `cf`; alternatively `--u`.
    #[arg(long)]
    z: Option<String>,
    #[arg(long, value_parser = parse_vec2, allow_hyphen_values = true)]
    u: Option<Vec2>,
    #[arg(long)]
    s1: Option<f64>,
    #[arg(long)]
    s2: Option<f64>,
    /// Grid points per unit time.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    norm: Option<MatrixNorm>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Multiply the bump normalization by this factor (fault injection).
    #[arg(long)]
    corrupt_bump: Option<f64>,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v = parse_grid(s)?;
    match v.as_slice() {
        [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok(Window { x0: *x0, x1: *x1, y0: *y0, y1: *y1 }),
        _ => Err(format!("expected `x0,x1,y0,y1` with x0 < x1 and y0 < y1, got `{s}`")),
    }
}

impl LatticeArgs {
    fn settings(&self) -> Settings {
        Settings { lattice: self.lattice, norm: self.norm, u: self.u, ..Default::default() }
    }
}

/// Splits parsed arguments into the shared options and the flag settings.
fn flag_settings(cmd: &Command) -> (&Common, Settings) {
    match cmd {
        Command::Cloud(a) => (&a.common, Settings { t: a.t, window: a.window, ..a.lattice.settings() }),
        Command::Converge(a) | Command::Scaling(a) => (
            &a.common,
            Settings {
                f: a.f.clone(),
                t_grid: a.t_grid.clone().map(|g| g.0),
                alpha: a.alpha,
                tol: a.tol,
                admissibility_c: a.admissibility_c,
                delta0: a.delta0,
                ..a.lattice.settings()
            },
        ),
        Command::Target(a) => (&a.common, Settings { v: a.v, t_grid: a.t_grid.clone().map(|g| g.0), ..a.lattice.settings() }),
        Command::Cf(a) => (&a.common, Settings { z: a.z.clone(), depth: a.depth, ..Default::default() }),
        Command::Excursion(a) => {
            (&a.common, Settings { z: a.z.clone(), u: a.u, s1: a.s1, s2: a.s2, grid: a.grid, ..Default::default() })
        }
        Command::Selftest(a) => (
            &a.common,
            Settings { norm: a.norm, seed: a.seed, samples: a.samples, corrupt_bump: a.corrupt_bump, ..Default::default() },
        ),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, flags) = flag_settings(&cli.command);
    let file = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let mut settings = file.overlay(flags);
    if common.workers.is_some() {
        settings.workers = common.workers;
    }
    let workers = settings.workers()?;
    settings.workers = Some(workers);
    let job = run::Job::resolve(&cli.command, &settings)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Config(e.to_string()))?;
    let output = pool.install(|| job.run())?;
    output.emit(common.out.as_deref())?;
    output.verdict()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("planar-orbits: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
