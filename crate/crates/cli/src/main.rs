use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rcpolariton::config::load_config;
use rcpolariton::dispatch::{dispatch, DispatchError, Subcommand};

/// Exciton-polariton resonator simulations: couplings, spectral densities,
/// linear dynamics and photon statistics.
#[derive(Debug, Parser)]
#[command(name = "rcpolariton", version)]
struct Cli {
    /// coupling | spectral | lineardyn | g2ss | g2tau | optimize | sweep-L | regime-map
    subcommand: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid evaluations (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), DispatchError> {
    let tag = |e| DispatchError::new("cli-config", e);
    let cmd: Subcommand = cli.subcommand.parse().map_err(tag)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(tag(rcpolariton::Error::validation("threads", "must be >= 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| tag(rcpolariton::Error::Domain(format!("thread pool: {e}"))))?;
    }
    let cfg = load_config(&cli.config).map_err(tag)?;
    let manifest = dispatch(&cfg, cmd, cli.out.as_deref())?;
    for f in &manifest.outputs {
        println!("{f}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
