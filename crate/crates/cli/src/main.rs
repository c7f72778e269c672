use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smasim_cli::commands::{self, CliError, Options, Verdict};

#[derive(Parser, Debug)]
#[command(name = "smasim", version, about = "Quasistatic shape-memory-alloy microstructure simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the evolution and write trace, VTK and summary files.
    Run(Common),
    /// Audit a state: admissibility, stability, Gauss identities, null-Lagrangian totals.
    Check(StateArgs),
    /// Compare the first incremental step with exhaustive enumeration.
    Oracle(Common),
    /// Energy breakdown of a single state.
    Energy(StateArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (overrides the scenario's).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for energy assembly; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override a solver setting, e.g. `tol_g=1e-8` or `competitors.n_random=16`.
    #[arg(long = "tol-override", value_name = "KEY=VAL")]
    overrides: Vec<String>,
}

#[derive(Args, Debug)]
struct StateArgs {
    #[command(flatten)]
    common: Common,
    /// State JSON (as written by `run`); defaults to the scenario's initial state.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Time at which loads are evaluated.
    #[arg(long)]
    time: Option<f64>,
}

fn options(c: &Common, state: Option<PathBuf>, time: Option<f64>) -> Options {
    Options {
        scenario: c.scenario.clone(),
        out: c.out.clone(),
        seed: c.seed,
        overrides: c.overrides.clone(),
        state,
        time,
    }
}

fn report<T: serde::Serialize>(result: Result<(Verdict, T), CliError>) -> ExitCode {
    match result {
        Ok((verdict, r)) => {
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            if verdict == Verdict::Fail {
                eprintln!("smasim: certificate check failed");
            }
            ExitCode::from(verdict.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("smasim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SMASIM_LOG", "warn")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run(c) | Command::Oracle(c) => c,
        Command::Check(s) | Command::Energy(s) => &s.common,
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global() {
        eprintln!("smasim: cannot start thread pool: {e}");
        return ExitCode::from(2);
    }
    match &cli.command {
        Command::Run(c) => report(commands::run(&options(c, None, None))),
        Command::Oracle(c) => report(commands::oracle(&options(c, None, None))),
        Command::Check(s) => report(commands::check(&options(&s.common, s.state.clone(), s.time))),
        Command::Energy(s) => report(commands::energy(&options(&s.common, s.state.clone(), s.time))),
    }
}
