//! `selftaught` command-line driver.
//!
//! Exit status: 0 success, 2 bad flags, 3 configuration error, 4 I/O
//! error, 5 gradient check above tolerance.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;

use selftaught::config::{echo_config, parse_config};
use selftaught::gradcheck::run_gradcheck;
use selftaught::output::{emit_stats, emit_summary, emit_trace};
use selftaught::{run_experiment_traced, run_replicates, summarize, Error, ExperimentConfig, TraceFilter};

const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_GRADCHECK: u8 = 5;

#[derive(Parser)]
#[command(name = "selftaught", version, about = "Evolving self-taught foraging agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment and write its per-generation stats.
    Run(RunArgs),
    /// Run `n_runs` independent replicates and aggregate them.
    Replicate(ReplicateArgs),
    /// Check the self-teaching update against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Key-value config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `base_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the effective-config echo on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Run id used to derive the random stream.
    #[arg(long, default_value_t = 0)]
    run_id: usize,
    /// Stats CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Agent-step trace destination (JSON lines). No trace without it.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Comma-separated generations to trace; all when omitted.
    #[arg(long, value_delimiter = ',', requires = "trace_out")]
    trace_gens: Option<Vec<usize>>,
}

#[derive(Args)]
struct ReplicateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Stats CSV destination, all runs.
    #[arg(long)]
    out: PathBuf,
    /// Cross-run summary CSV destination.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Config providing layer sizes and learning rate.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| io_failure(path, e))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if !args.quiet {
        eprintln!("# effective config");
        eprint!("{}", echo_config(&cfg));
    }
    Ok(cfg)
}

/// Writes through a temporary file in the destination directory so the
/// destination is either absent or complete.
fn write_atomically<F>(path: &Path, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> selftaught::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| io_failure(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| io_failure(path, e))?;
    }
    tmp.persist(path).map_err(|e| io_failure(path, e.error))?;
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let filter = match (&args.trace_out, args.trace_gens) {
        (None, _) => TraceFilter::Off,
        (Some(_), None) => TraceFilter::All,
        (Some(_), Some(gens)) => TraceFilter::Generations(gens.into_iter().collect::<BTreeSet<_>>()),
    };
    let out = run_experiment_traced(&cfg, args.run_id, &filter)?;
    write_atomically(&args.out, |w| emit_stats(&out.stats, w))?;
    if let Some(path) = &args.trace_out {
        write_atomically(path, |w| emit_trace(&out.trace, w))?;
    }
    Ok(())
}

fn replicate(args: ReplicateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let stats = run_replicates(&cfg)?;
    let summary = summarize(&stats)?;
    write_atomically(&args.out, |w| emit_stats(&stats, w))?;
    if let Some(path) = &args.summary_out {
        write_atomically(path, |w| emit_summary(&summary, w))?;
    }
    Ok(())
}

fn gradcheck(args: GradcheckArgs) -> Result<(), Failure> {
    let cfg = load_config(&ConfigArgs {
        config: args.config,
        seed: None,
        quiet: true,
    })?;
    let report = run_gradcheck(
        cfg.controller.layers,
        cfg.controller.learning_rate,
        args.trials,
        args.eps,
        args.seed,
    );
    println!(
        "trials={} weights={} max_relative_error={:.3e}",
        report.trials, report.weights_checked, report.max_relative_error
    );
    if report.max_relative_error < args.tolerance {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_GRADCHECK,
            message: format!(
                "max relative error {:.3e} exceeds {:.1e}",
                report.max_relative_error, args.tolerance
            ),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Replicate(a) => replicate(a),
        Command::Gradcheck(a) => gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
