use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use agent_runtime::Scheduling;
use harness_cli::config::{FaultFlag, RunConfig};
use harness_cli::crash::replay_crash;
use harness_cli::fuzz::fuzz;
use harness_cli::load::{load_test, Arrival};
use harness_cli::offline::reevaluate;
use harness_cli::run::{run_scenario, RunOptions, RunResult};
use harness_cli::scenario::parse_scenario;
use safety_monitor::any_violated;

const USAGE_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ims",
    about = "Multi-agent institute management with a runtime monitor"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Disable the guard behind one property, e.g. `p4`.
    #[arg(long)]
    inject: Option<FaultFlag>,
    #[arg(long)]
    seed: Option<u64>,
    /// Step agents on a thread pool.
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write trace, dump, journal and verdicts into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded random scenario.
    Fuzz {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        events: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Open many sessions at once and count grants.
    Load {
        #[arg(long)]
        clients: usize,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        parallel: bool,
        /// Deliver every request in the same round instead of one by one.
        #[arg(long)]
        burst: bool,
    },
    /// Crash after `--at` commands, restart from the journal, compare dumps.
    ReplayCrash {
        file: PathBuf,
        #[arg(long)]
        at: usize,
        /// Also tear the last journal record.
        #[arg(long)]
        torn: bool,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-evaluate the verdicts of a recorded trace.
    Report { trace: PathBuf },
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Usage> {
    fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Usage> {
    match path {
        Some(p) => Ok(RunConfig::parse(&read(p)?)?),
        None => Ok(RunConfig::default()),
    }
}

impl Common {
    fn options(&self) -> Result<RunOptions, Usage> {
        let mut config = load_config(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(RunOptions {
            config,
            fault: self.inject,
            scheduling: scheduling(self.parallel),
            record: false,
            mute: None,
        })
    }
}

fn scheduling(parallel: bool) -> Scheduling {
    if parallel {
        Scheduling::Parallel
    } else {
        Scheduling::Sequential
    }
}

fn write_outputs(dir: &Path, r: &RunResult) -> Result<(), Usage> {
    fs::create_dir_all(dir)?;
    if let Some(trace) = &r.trace {
        fs::write(dir.join("trace.txt"), trace)?;
    }
    fs::write(dir.join("dump.txt"), r.dump.to_string())?;
    fs::write(dir.join("journal.txt"), &r.journal)?;
    fs::write(dir.join("verdicts.txt"), r.verdict_lines())?;
    Ok(())
}

fn print_result(r: &RunResult, reports: bool) {
    if reports {
        for line in r.report_lines() {
            println!("{line}");
        }
    }
    print!("{}", r.verdict_lines());
    println!("# trace_hash = {}", r.trace_hash);
    println!("# max_latency = {}", r.max_latency);
}

fn violation_code(violated: bool) -> u8 {
    if violated {
        2
    } else {
        0
    }
}

fn execute(cmd: Cmd) -> Result<u8, Usage> {
    match cmd {
        Cmd::Run { file, common, out } => {
            let commands = parse_scenario(&read(&file)?)?;
            let mut opts = common.options()?;
            opts.record = out.is_some();
            let report = run_scenario(&commands, opts)?;
            for f in &report.expectation_failures {
                eprintln!("{f}");
            }
            print_result(&report.result, true);
            if let Some(dir) = out {
                write_outputs(&dir, &report.result)?;
            }
            Ok(report.exit_code() as u8)
        }
        Cmd::Fuzz {
            common,
            events,
            out,
        } => {
            if events == 0 {
                return Err(Usage("--events must be at least 1".into()));
            }
            let mut opts = common.options()?;
            opts.record = out.is_some();
            let seed = opts.config.seed;
            let run = fuzz(seed, events, opts)?;
            print_result(&run.result, false);
            if let Some(dir) = out {
                write_outputs(&dir, &run.result)?;
            }
            Ok(violation_code(run.result.violated()))
        }
        Cmd::Load {
            clients,
            cap,
            parallel,
            burst,
        } => {
            if clients == 0 {
                return Err(Usage("--clients must be at least 1".into()));
            }
            let mut config = RunConfig::default();
            if let Some(cap) = cap {
                config.cap = cap;
            }
            config.validate().map_err(Usage)?;
            let arrival = if burst {
                Arrival::Burst
            } else {
                Arrival::ClosedLoop
            };
            let s = load_test(config, clients, scheduling(parallel), arrival)?;
            println!("clients = {}", s.clients);
            println!("granted = {}", s.granted);
            println!("busy = {}", s.busy);
            if s.other > 0 {
                println!("other = {}", s.other);
            }
            Ok(violation_code(s.violated))
        }
        Cmd::ReplayCrash {
            file,
            at,
            torn,
            config,
        } => {
            let commands = parse_scenario(&read(&file)?)?;
            let opts = RunOptions::new(load_config(config.as_deref())?);
            let v = replay_crash(&commands, at, &opts, torn)?;
            println!("crash_at = {}", v.crash_at);
            println!("recovered = {}", v.recovered);
            println!("resumed_at = {}", v.resumed_at);
            if v.equivalent() {
                println!("equivalent");
                Ok(0)
            } else {
                println!("diverged");
                print!("{}", v.actual.diff(&v.expected));
                Ok(2)
            }
        }
        Cmd::Report { trace } => {
            let verdicts = reevaluate(&read(&trace)?)?;
            for v in &verdicts {
                println!("{}", v.to_line());
            }
            Ok(violation_code(any_violated(&verdicts)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
