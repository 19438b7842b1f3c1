//! `colombeau`: batch runner for kernel checks and quotient tests.
//!
//! Exit codes: 0 all verdicts as expected, 1 a test failed, 2 invalid input (the message
//! names the offending path), 3 a numerical operation failed (the message names it).

mod commands;
mod demos;
mod failure;
mod report;
mod runner;
mod scenario;

use clap::{Args, Parser, Subcommand, ValueEnum};
use colombeau::asymptotics::default_grid;
use colombeau::Shape;
use failure::{Failure, Outcome};
use report::Artifacts;
use runner::Overrides;
use scenario::{EpsGrid, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "colombeau", version, about = "Smoothing kernels, embeddings and ε-asymptotic quotient tests")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct Global {
    /// Scenario file to run (same as the `run` subcommand).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory for reports and sweeps.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "COLOMBEAU_WORKERS")]
    workers: Option<usize>,
    /// Smallest ε of the log-spaced grid.
    #[arg(long, global = true)]
    eps_min: Option<f64>,
    /// Largest ε of the grid (at most 1).
    #[arg(long, global = true)]
    eps_max: Option<f64>,
    /// Number of ε values.
    #[arg(long, global = true)]
    eps_points: Option<usize>,
    /// Slope tolerance of the asymptotic fits.
    #[arg(long, global = true)]
    slope_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file.
    Run,
    /// Build or verify mollifiers.
    #[command(subcommand)]
    Mollifier(MollifierCmd),
    /// Check an LSK condition on a kernel of the standard battery.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Moderateness and negligibility tests on the standard battery.
    #[command(subcommand)]
    Test(TestCmd),
    /// Association test `R ≈ S` against a test function ψ.
    Assoc {
        /// Subject as a JSON tree, or `@file`.
        #[arg(long)]
        subject: String,
        /// Reference (default: zero), JSON or `@file`.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, default_value_t = 2)]
        q: u32,
        /// ψ as an expression JSON, or `@file`.
        #[arg(long)]
        psi: Option<String>,
    },
    /// Restrict a one-dimensional subject to two overlapping intervals and glue it back.
    Glue {
        #[arg(long)]
        subject: String,
        /// Centre of the overlap.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        cut: f64,
        /// Half-width of the overlap.
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long, default_value_t = 2)]
        q: u32,
    },
    /// Run a named demonstration.
    Demo {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(demos::NAMES))]
        name: String,
    },
}

#[derive(Subcommand, Debug)]
enum MollifierCmd {
    /// Solve the moment system and print the mollifier with its moments.
    Build {
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Even base bump (the default).
        #[arg(long, conflicts_with = "shifted")]
        symmetric: bool,
        /// Off-centre base bump, no symmetry.
        #[arg(long)]
        shifted: bool,
    },
    /// Recompute the moments of a mollifier JSON file.
    Verify {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Lsk1,
    Lsk2,
    Lsk3,
}

#[derive(Subcommand, Debug)]
enum KernelCmd {
    Check {
        #[arg(long, value_enum)]
        which: Which,
        /// model, shifted, glued, pullback or lsk7.
        #[arg(long, default_value = "model")]
        kernel: String,
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Comma-separated multi-index.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        beta: Vec<u32>,
        /// LSK3 test function as an expression JSON, or `@file`.
        #[arg(long)]
        f: Option<String>,
        #[arg(long, default_value_t = 0.3)]
        probe_radius: f64,
        #[arg(long, default_value_t = 5)]
        probe_points: usize,
    },
}

#[derive(Args, Debug)]
struct QuotientOpts {
    /// Subject as a JSON tree, or `@file`.
    #[arg(long)]
    subject: String,
    /// Order of the standard battery.
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long, default_value_t = 0)]
    alpha_max: u32,
    #[arg(long, default_value_t = 0.4)]
    probe_radius: f64,
    #[arg(long, default_value_t = 9)]
    probe_points: usize,
}

#[derive(Subcommand, Debug)]
enum TestCmd {
    Moderate {
        #[command(flatten)]
        opts: QuotientOpts,
        /// Growth order the subject must not exceed.
        #[arg(long)]
        claimed_n: Option<u32>,
    },
    Negligible {
        #[command(flatten)]
        opts: QuotientOpts,
        /// Target orders m, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        m: Vec<f64>,
    },
}

fn overrides(g: &Global) -> Outcome<Overrides> {
    let eps = if g.eps_min.is_some() || g.eps_max.is_some() || g.eps_points.is_some() {
        let d = default_grid();
        let grid = EpsGrid {
            min: g.eps_min.unwrap_or(d[d.len() - 1]),
            max: g.eps_max.unwrap_or(d[0]),
            points: g.eps_points.unwrap_or(d.len()),
        };
        scenario::check_grid(&grid, "--eps-min/--eps-max/--eps-points")?;
        Some(grid)
    } else {
        None
    };
    if let Some(t) = g.slope_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::schema("--slope-tol", format!("must be positive, got {t}")));
        }
    }
    Ok(Overrides { eps, slope_tol: g.slope_tol })
}

fn execute(cli: Cli) -> Outcome<i32> {
    let g = &cli.global;
    if let Some(w) = g.workers {
        if w == 0 {
            return Err(Failure::schema("--workers", "need at least one worker"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::numerical("start worker pool", e))?;
    }
    let ov = overrides(g)?;
    let out = Artifacts::new(g.out.clone());
    match cli.command {
        None | Some(Command::Run) => {
            let Some(path) = &g.scenario else {
                return Err(Failure::schema("--scenario", "no scenario given (see --help)"));
            };
            let s = Scenario::load(path)?;
            let dir = g.out.clone().or_else(|| s.output.dir.as_ref().map(PathBuf::from));
            commands::run_scenario(&s, &ov, &Artifacts::new(dir))
        }
        Some(Command::Mollifier(MollifierCmd::Build { q, n, shifted, .. })) => {
            commands::mollifier_build(q, n, if shifted { Shape::Shifted } else { Shape::Symmetric }, &out)
        }
        Some(Command::Mollifier(MollifierCmd::Verify { file })) => commands::mollifier_verify(&file, &out),
        Some(Command::Kernel(KernelCmd::Check { which, kernel, q, n, alpha, beta, f, probe_radius, probe_points })) => {
            let which = match which {
                Which::Lsk1 => "lsk1",
                Which::Lsk2 => "lsk2",
                Which::Lsk3 => "lsk3",
            };
            let args = commands::KernelCheckArgs {
                which,
                kernel: &kernel,
                q,
                n,
                alpha: &alpha,
                beta: &beta,
                f: f.as_deref(),
                probe_radius,
                probe_points,
            };
            commands::kernel_check(&args, &ov, &out)
        }
        Some(Command::Test(t)) => {
            let (moderate, opts, claimed_n, m) = match t {
                TestCmd::Moderate { opts, claimed_n } => (true, opts, claimed_n, vec![]),
                TestCmd::Negligible { opts, m } => (false, opts, None, m),
            };
            let args = commands::QuotientArgs {
                subject: &opts.subject,
                q: opts.q,
                alpha_max: opts.alpha_max,
                claimed_n,
                m,
                probe_radius: opts.probe_radius,
                probe_points: opts.probe_points,
            };
            commands::test_quotient(moderate, &args, &ov, &out)
        }
        Some(Command::Assoc { subject, reference, q, psi }) => {
            commands::assoc(&subject, reference.as_deref(), q, psi.as_deref(), &ov, &out)
        }
        Some(Command::Glue { subject, cut, overlap, q }) => commands::glue(&subject, cut, overlap, q, &ov, &out),
        Some(Command::Demo { name }) => demos::run(&name, &ov, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
