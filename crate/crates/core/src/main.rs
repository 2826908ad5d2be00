use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fourwave::config::{parse_config, JobConfig, Method};
use fourwave::job::{run_job, run_oracle, with_threads, RunOptions};
use fourwave::Error;

#[derive(Parser)]
#[command(name = "fourwave", version, about = "Third-order response functions and 2D spectra of exciton systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Closed,
    Qme,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Closed => Method::Closed,
            MethodArg::Qme => Method::Qme,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute response grids and spectra.
    Run {
        /// JSON job configuration
        #[arg(long)]
        config: PathBuf,
        /// Override `method` from the config
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Override `output.directory`
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the disorder seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores)
        #[arg(long, env = "FOURWAVE_THREADS")]
        threads: Option<usize>,
        /// Write the manifest of planned outputs without computing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Evaluate one response value with the Fock-space oracle.
    Oracle {
        /// JSON job configuration
        #[arg(long)]
        config: PathBuf,
        /// Response channel 1-4
        #[arg(long)]
        channel: usize,
        /// Delays `tau,Tp,tau_prime` in fs.
        #[arg(long, value_delimiter = ',', required = true)]
        point: Vec<f64>,
        /// Worker threads (default: all cores)
        #[arg(long, env = "FOURWAVE_THREADS")]
        threads: Option<usize>,
    },
}

fn load(path: &PathBuf) -> Result<JobConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn execute(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Run {
            config,
            method,
            out,
            seed,
            threads,
            dry_run,
        } => {
            let cfg = load(&config)?;
            let opts = RunOptions {
                method: method.map(Method::from),
                out_dir: out,
                seed,
                dry_run,
            };
            let manifest = with_threads(threads, || run_job(&cfg, &opts))?;
            Ok(serde_json::to_string_pretty(&manifest)?)
        }
        Command::Oracle {
            config,
            channel,
            point,
            threads,
        } => {
            let cfg = load(&config)?;
            let point: [f64; 3] = point
                .try_into()
                .map_err(|_| Error::validation("point", "expected three delays tau,Tp,tau_prime"))?;
            let report = with_threads(threads, || run_oracle(&cfg, channel, point))?;
            Ok(serde_json::to_string_pretty(&report)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match execute(Cli::parse()) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let detail = match &e {
                Error::Validation { path, message } => serde_json::json!({"path": path, "message": message}),
                Error::UnknownKeys(keys) => serde_json::json!({"keys": keys}),
                other => serde_json::json!({"message": other.to_string()}),
            };
            let report = serde_json::json!({"error": e.kind(), "detail": detail, "exit_code": e.exit_code()});
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
