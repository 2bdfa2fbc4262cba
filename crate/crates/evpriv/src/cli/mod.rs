//! The `evpriv` command line.
//!
//! Settings come from flags, then the `--config` TOML file, then defaults.
//! The effective settings of every run are logged. Failures print one line,
//! `error: <category>: <message>`, and exit with the category's code.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use args::*;
use config::{resolve, FileConfig};

use crate::error::Result;

/// Environment variable holding the log filter, e.g. `info` or `debug`.
pub const LOG_ENV: &str = "EVPRIV_LOG";

#[derive(Debug, Parser)]
#[command(name = "evpriv", version, about = "Privacy-preserving localization with event cameras")]
struct Cli {
    /// TOML file with a root `seed` and one table per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed of every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate an event stream from a moving synthetic scene.
    Synth(SynthArgs),
    /// Accumulate an event stream into a voxel grid.
    Voxelize(VoxelizeArgs),
    /// Render an event stream as one of the event-image baselines.
    Represent(RepresentArgs),
    /// Apply sensor-level protection to a voxel grid.
    Protect(ProtectArgs),
    /// Train the original network and its private copy.
    Train(TrainArgs),
    /// Serve the middle part of a split network over TCP.
    Serve(ServeArgs),
    /// Reconstruct an image through a remote middle part.
    Client(ClientArgs),
    /// Run and evaluate the three attacks on trained networks.
    Attack(AttackArgs),
    /// Localize synthetic queries with and without protection.
    Localize(LocalizeArgs),
    /// Compare two images by MAE, PSNR and SSIM.
    Metrics(MetricsArgs),
    /// Summarize a results directory into tables.
    Report(ReportArgs),
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).is_test(false).try_init();
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if e.exit_code() == 0 => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e.to_string().replace('\n', " "));
            let _ = std::io::stderr().flush();
            e.exit_code()
        }
    }
}

fn echo<T: Serialize>(command: &str, seed: u64, settings: &T) {
    let line = serde_json::json!({ "command": command, "seed": seed, "settings": settings });
    log::info!("effective config: {line}");
}

fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    macro_rules! dispatch {
        ($args:expr, $section:ident, $name:literal, $f:path) => {{
            let a = resolve($args, file.$section);
            echo($name, seed, &a);
            $f(seed, &a)
        }};
    }
    match cli.command {
        Command::Synth(a) => dispatch!(a, synth, "synth", commands::synth),
        Command::Voxelize(a) => dispatch!(a, voxelize, "voxelize", commands::voxelize),
        Command::Represent(a) => dispatch!(a, represent, "represent", commands::represent),
        Command::Protect(a) => dispatch!(a, protect, "protect", commands::protect),
        Command::Train(a) => dispatch!(a, train, "train", commands::train),
        Command::Serve(a) => dispatch!(a, serve, "serve", commands::serve),
        Command::Client(a) => dispatch!(a, client, "client", commands::client),
        Command::Attack(a) => dispatch!(a, attack, "attack", commands::attack),
        Command::Localize(a) => dispatch!(a, localize, "localize", commands::localize),
        Command::Metrics(a) => dispatch!(a, metrics, "metrics", commands::metrics),
        Command::Report(a) => dispatch!(a, report, "report", commands::report),
    }
}
