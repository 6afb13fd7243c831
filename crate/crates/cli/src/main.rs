use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use magkit::{MagError, Result};
use magkit_cli::config::ExperimentConfig;
use magkit_cli::{exit_code, plot, run, suites};

#[derive(Parser)]
#[command(name = "magkit", version, about = "Monge-Ampère gravitation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite and print one line per check.
    Check {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render SVG figures from a finished run directory.
    Plot {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        what: PlotKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Trajectory,
    CloudFilm,
    ErrorCurves,
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MAGKIT_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| MagError::Validation(format!("MAGKIT_THREADS: expected a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| MagError::Validation(format!("MAGKIT_THREADS: {e}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| MagError::Validation(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| MagError::Validation(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn do_plot(dir: &Path, what: PlotKind) -> Result<()> {
    if !dir.is_dir() {
        return Err(MagError::Validation(format!("run directory {} does not exist", dir.display())));
    }
    match what {
        PlotKind::Trajectory => write(&dir.join("trajectory.svg"), &plot::trajectory_svg(&read(&dir.join("trajectory.csv"))?)?),
        PlotKind::CloudFilm => {
            for (i, svg) in plot::cloud_film(&read(&dir.join("cloud.csv"))?)?.iter().enumerate() {
                write(&dir.join(format!("cloud_{i:03}.svg")), svg)?;
            }
            Ok(())
        }
        PlotKind::ErrorCurves => {
            let table = ["eps_sweep.csv", "refinement.csv"]
                .iter()
                .map(|n| dir.join(n))
                .find(|p| p.is_file())
                .ok_or_else(|| MagError::Validation(format!("{} has no eps_sweep.csv or refinement.csv", dir.display())))?;
            write(&dir.join("error_curves.svg"), &plot::error_curves_svg(&read(&table)?)?)
        }
    }
}

fn do_check(suite: &str, seed: u64) -> Result<()> {
    let ids = suites::suite_ids(suite).ok_or_else(|| {
        MagError::Validation(format!("unknown suite {suite:?}; expected one of {}", suites::suite_names().join(", ")))
    })?;
    let opts = suites::SuiteOptions { seed, ..Default::default() };
    let mut failed = Vec::new();
    for id in ids {
        let o = suites::run_one(id, &opts);
        println!("{}", o.line());
        if !o.passed {
            failed.push(o.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(MagError::Invariant(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run::run(&cfg, out.as_deref())?;
            println!("{} files written to {}", summary.files.len() + 1, summary.dir.display());
            Ok(())
        }
        Command::Check { suite, seed } => do_check(&suite, seed),
        Command::Plot { run, what } => do_plot(&run, what),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magkit: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
