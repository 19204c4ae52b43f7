use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nsdm::cli::{cmd_bench, cmd_run, cmd_verify, Overrides};
use nsdm::Execution;

/// Proximal-subgradient steepest descent: run solvers, verify hypotheses,
/// benchmark the corpus.
#[derive(Parser)]
#[command(name = "nsdm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on one problem; writes trace CSV and summary JSON.
    Run(Common),
    /// Run the requested certificates; exit 3 if any fails.
    Verify(Common),
    /// Run every listed problem with nsdm (and sdm where smooth).
    Bench {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Run the batch on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config document.
    config: PathBuf,
    /// Override `solver_config.tol_subgrad`.
    #[arg(long)]
    tol: Option<f64>,
    /// Override `solver_config.max_iters`.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Override problem and sampling seeds.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            tol: self.tol,
            max_iters: self.max_iters,
            seed: self.seed,
            ..Overrides::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match &cli.command {
        Command::Run(c) => cmd_run(&c.config, &c.overrides()),
        Command::Verify(c) => cmd_verify(&c.config, &c.overrides()),
        Command::Bench {
            common,
            jobs,
            sequential,
        } => {
            let ov = Overrides {
                jobs: *jobs,
                execution: if *sequential {
                    Execution::Sequential
                } else {
                    Execution::Parallel
                },
                ..common.overrides()
            };
            cmd_bench(&common.config, &ov)
        }
    };
    ExitCode::from(code)
}
