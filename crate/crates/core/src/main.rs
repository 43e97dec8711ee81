use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use trajexec::harness::{self, write_metrics, Mode, Scenario};

#[derive(Parser)]
#[command(name = "trajexec", version, about = "Run multi-robot trajectory scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Async,
    Sync,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write the event log and metrics.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "async")]
        mode: ModeArg,
        /// Collision-check discretization step, seconds.
        #[arg(long)]
        time_step: Option<f64>,
        #[arg(long)]
        tick: Option<f64>,
        /// Safety margin, metres.
        #[arg(long)]
        margin: Option<f64>,
        /// Default timeout for tasks that do not set one.
        #[arg(long)]
        backlog_timeout: Option<f64>,
        /// Ticks between monitor passes.
        #[arg(long)]
        monitor_period: Option<u64>,
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, harness::HarnessError> {
    match cli.command {
        Command::Run {
            scenario,
            mode,
            time_step,
            tick,
            margin,
            backlog_timeout,
            monitor_period,
            metrics_out,
            events_out,
        } => {
            let mut sc = Scenario::load(&scenario)?;
            let p = &mut sc.params;
            if let Some(v) = time_step {
                p.time_step = v;
            }
            if let Some(v) = tick {
                p.tick = v;
            }
            if let Some(v) = margin {
                p.margin = v;
            }
            if let Some(v) = backlog_timeout {
                p.backlog_timeout = v;
            }
            if let Some(v) = monitor_period {
                p.monitor_period = v;
            }
            let mode = match mode {
                ModeArg::Async => Mode::Async,
                ModeArg::Sync => Mode::Sync,
            };
            let outcome = harness::run(&sc, mode)?;
            match events_out {
                Some(path) => std::fs::write(path, outcome.event_log())?,
                None => print!("{}", outcome.event_log()),
            }
            match metrics_out {
                Some(path) => write_metrics(&outcome.metrics, path)?,
                None => print!("{}", outcome.metrics.to_csv()?),
            }
            Ok(outcome.exit_code() as u8)
        }
    }
}
