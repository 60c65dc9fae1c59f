//! `hpcready`: build-service client, service runner, and the geostat and
//! bench front ends.

mod bench;
mod client;
mod context;
mod exit;
mod geostat;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use crate::client::{Client, ClientConfig};
use crate::exit::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "hpcready", version, about = "Hardware-tailored container images and geostatistics benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Remote {
    /// Service base URL.
    #[arg(long, env = "HPCREADY_URL", default_value = "http://127.0.0.1:8080")]
    url: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Submit a container configuration; prints the job id.
    Build {
        #[arg(long)]
        config: PathBuf,
        /// Poll until the job ends; exit 0 only on FINISHED.
        #[arg(long)]
        wait: bool,
        /// Give up waiting after this many seconds (exit 7).
        #[arg(long, default_value_t = 600.0)]
        timeout: f64,
        /// Seconds between polls.
        #[arg(long, default_value_t = 0.5)]
        poll: f64,
        #[command(flatten)]
        remote: Remote,
    },
    /// Print `<job_id> <STATE> reused=<bool>`.
    Status {
        job_id: String,
        #[command(flatten)]
        remote: Remote,
    },
    /// Save a finished job's image.
    Download {
        job_id: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        remote: Remote,
    },
    /// Run the build service.
    Serve {
        /// Service configuration (JSON).
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a build context locally without building it.
    Context {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding `<workflow>/<step>/spack.yaml` and `<workflow>/packages`.
        #[arg(long)]
        workflows: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Geostatistics operations on CSV data.
    #[command(subcommand)]
    Geostat(geostat::GeostatCommand),
    /// Timing harness.
    #[command(subcommand)]
    Bench(bench::BenchCommand),
}

fn seconds(v: f64, what: &str) -> CliResult<Duration> {
    Duration::try_from_secs_f64(v)
        .map_err(|_| CliError::invalid(format!("{what} must be a non-negative number of seconds")))
}

fn client(remote: &Remote, poll: Duration, timeout: Duration) -> CliResult<Client> {
    Ok(Client::new(ClientConfig::new(&remote.url, poll, timeout)?))
}

fn default_client(remote: &Remote) -> CliResult<Client> {
    client(remote, Duration::from_millis(500), Duration::from_secs(600))
}

fn serve(config: &Path) -> CliResult {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cfg = hpcready_service::ServiceConfig::load(config).map_err(CliError::invalid)?;
    let rt = tokio::runtime::Runtime::new().map_err(CliError::failed)?;
    rt.block_on(hpcready_service::serve(&cfg)).map_err(CliError::failed)
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Build { config, wait, timeout, poll, remote } => {
            let c = client(&remote, seconds(poll, "--poll")?, seconds(timeout, "--timeout")?)?;
            client::cmd_build(&c, &config, wait)
        }
        Command::Status { job_id, remote } => client::cmd_status(&default_client(&remote)?, &job_id),
        Command::Download { job_id, out, remote } => client::cmd_download(&default_client(&remote)?, &job_id, &out),
        Command::Serve { config } => serve(&config),
        Command::Context { config, workflows, out } => context::run(&config, &workflows, &out),
        Command::Geostat(cmd) => geostat::run(cmd),
        Command::Bench(cmd) => bench::run(cmd),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::code::INVALID } else { exit::code::OK });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hpcready: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
