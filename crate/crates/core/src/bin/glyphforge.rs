use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use glyphforge::commands;
use glyphforge::config::RunConfig;
use glyphforge::gradcheck::{GradCheckOptions, Suite};
use glyphforge::image::PgmEncoding;

#[derive(Parser)]
#[command(
    name = "glyphforge",
    version,
    about = "Trajectory rasterization and dual-modality loss toolkit"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags override values from `--config`, which override defaults.
#[derive(Args)]
struct Overrides {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    height: Option<usize>,
    #[arg(long, global = true)]
    width: Option<usize>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Line half-width in pixels
    #[arg(long, global = true)]
    w: Option<f64>,
    #[arg(long, global = true, value_name = "BOOL")]
    include_connections: Option<bool>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    lambda1: Option<f64>,
    #[arg(long, global = true)]
    lambda2: Option<f64>,
    #[arg(long, global = true)]
    lambda3: Option<f64>,
    #[arg(long, global = true)]
    lambda4: Option<f64>,
    #[arg(long, global = true)]
    lambda5: Option<f64>,
}

impl Overrides {
    fn resolve(&self) -> glyphforge::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { cfg.$field = v; }
            )*};
        }
        take!(
            height,
            width,
            theta,
            w,
            include_connections,
            threshold,
            tau,
            seed,
            steps,
            lr
        );
        for (i, l) in [
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.lambda4,
            self.lambda5,
        ]
        .into_iter()
        .enumerate()
        {
            if let Some(v) = l {
                cfg.lambda[i] = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    P2,
    P5,
}

#[derive(Clone, Copy, ValueEnum)]
enum Selector {
    All,
    Rasterizer,
    Gmm,
    Nce,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate trajectory files or directories
    Validate { paths: Vec<PathBuf> },
    /// Render a trajectory to a PGM image
    Rasterize {
        traj: PathBuf,
        out: PathBuf,
        #[arg(long, value_enum, default_value = "p5")]
        encoding: Encoding,
    },
    /// Export the unsigned distance field as an ASCII grid
    Udf { traj: PathBuf, out: PathBuf },
    /// Print the loose rasterization loss against a target PGM
    Loss {
        traj: PathBuf,
        target: PathBuf,
        /// Write dL/d(x, y) per point
        #[arg(long)]
        grad: Option<PathBuf>,
    },
    /// Fit a trajectory into a target glyph by gradient descent
    Snap {
        traj: PathBuf,
        target: PathBuf,
        out: PathBuf,
        /// Loss trace CSV
        #[arg(long)]
        trace: PathBuf,
    },
    /// Add pseudo connected-stroke labels to a directory of trajectories
    Annotate {
        traj_dir: PathBuf,
        mean_dir: PathBuf,
        out_dir: PathBuf,
    },
    /// Compute MAE and DTW for the pairs listed in a manifest
    Metrics { manifest: PathBuf },
    /// Evaluate GMM negative log-likelihood of a trajectory
    GmmEval {
        gmm: PathBuf,
        traj: PathBuf,
        #[arg(long)]
        grad: Option<PathBuf>,
    },
    /// Compare analytic gradients with finite differences
    Gradcheck {
        #[arg(long, value_enum, default_value = "all")]
        module: Selector,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        /// Perturb analytic gradients (negative control, must fail)
        #[arg(long)]
        corrupt: bool,
    },
}

fn init_threads() {
    if let Some(n) = std::env::var("GLYPHFORGE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn run(cli: Cli) -> glyphforge::Result<bool> {
    let cfg = cli.overrides.resolve()?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Validate { paths } => commands::validate(&paths, &mut out),
        Command::Rasterize {
            traj,
            out: path,
            encoding,
        } => {
            let enc = match encoding {
                Encoding::P2 => PgmEncoding::Ascii,
                Encoding::P5 => PgmEncoding::Binary,
            };
            commands::rasterize(&traj, &path, &cfg, enc).map(|_| true)
        }
        Command::Udf { traj, out: path } => commands::udf(&traj, &path, &cfg).map(|_| true),
        Command::Loss { traj, target, grad } => {
            commands::loss(&traj, &target, &cfg, grad.as_deref(), &mut out).map(|_| true)
        }
        Command::Snap {
            traj,
            target,
            out: path,
            trace,
        } => commands::snap(&traj, &target, &cfg, &path, &trace).map(|_| true),
        Command::Annotate {
            traj_dir,
            mean_dir,
            out_dir,
        } => commands::annotate(&traj_dir, &mean_dir, &out_dir, &cfg, &mut out),
        Command::Metrics { manifest } => commands::metrics(&manifest, &mut out).map(|_| true),
        Command::GmmEval { gmm, traj, grad } => {
            commands::gmm_eval(&gmm, &traj, grad.as_deref(), &mut out).map(|_| true)
        }
        Command::Gradcheck {
            module,
            instances,
            corrupt,
        } => {
            let suites = match module {
                Selector::All => Suite::ALL.to_vec(),
                Selector::Rasterizer => vec![Suite::Rasterizer],
                Selector::Gmm => vec![Suite::Gmm],
                Selector::Nce => vec![Suite::Nce],
            };
            let opts = GradCheckOptions {
                seed: cfg.seed,
                instances,
                corrupt,
            };
            commands::gradcheck(&suites, &opts, &mut out)
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
