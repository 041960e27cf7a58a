use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use schwinger_cli::config::{self, Overrides, Task};
use schwinger_cli::{Execution, Outcome, RunError};

#[derive(Parser)]
#[command(name = "schwinger", version, about = "Exact-diagonalization experiments on the lattice Schwinger spin chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file and/or flags.
    Run(RunArgs),
    /// Compute the sectors missing from a partial run.
    Resume {
        manifest: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        plot: bool,
    },
    /// Recompute a recorded run into a new directory.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        plot: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,
    /// System size; comma-separated values sweep.
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Coupling; comma-separated values sweep.
    #[arg(long = "J", value_delimiter = ',')]
    j: Option<Vec<f64>>,
    #[arg(long)]
    w: Option<f64>,
    /// Background angle in radians.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Number of charge sectors.
    #[arg(long)]
    sectors: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Latest time, in units of 1/w.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    plot: bool,
    /// Worker threads (default: $SCHWINGER_WORKERS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_task(s: &str) -> Result<Task, String> {
    Task::parse(s).ok_or_else(|| {
        format!("unknown task {s:?}; expected rstat, dos, eigentropy, sff, thouless, quench, jumps, dpt_compare or fragmentation")
    })
}

fn run(a: RunArgs) -> Result<Outcome, RunError> {
    let file = a.config.as_deref().map(config::load).transpose()?;
    let ov = Overrides {
        task: a.task,
        n: a.n,
        j: a.j,
        w: a.w,
        theta: a.theta,
        m: a.m,
        sectors: a.sectors,
        seed: a.seed,
        tmax: a.tmax,
        plot: a.plot,
        workers: a.workers,
        out: a.out,
    };
    let (cfg, _) = config::resolve(file, &ov)?;
    schwinger_cli::run(&cfg, &Execution::default())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Resume { manifest, workers, plot } => schwinger_cli::resume(&manifest, &Execution { workers, plot }),
        Command::Replay {
            manifest,
            out,
            workers,
            plot,
        } => schwinger_cli::replay(&manifest, &out, &Execution { workers, plot }),
    };
    match result {
        Ok(o) => {
            if o.failed > 0 {
                eprintln!("{} sector(s) failed; see {}", o.failed, o.out.join("manifest.json").display());
            }
            println!(
                "{}: {} computed, {} reused, {} failed -> {}",
                match o.status {
                    schwinger_cli::output::RunStatus::Complete => "complete",
                    schwinger_cli::output::RunStatus::Partial => "partial",
                    _ => "failed",
                },
                o.computed,
                o.reused,
                o.failed,
                o.out.display()
            );
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
