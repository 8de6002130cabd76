use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use eflux_cli::{output, run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "eflux", version, about = "Random initial data for scalar conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Trial count, overriding the config.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, default_value = "eflux-out")]
    outdir: PathBuf,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let start = Instant::now();
    let out = run(cli.command, &cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let name = cli.command.name();
    let config = serde_json::to_value(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let manifest = output::manifest(name, &config, cfg.seed, rayon::current_num_threads(), wall, &out);
    let written = output::write_all(&cli.outdir, name, &out, &manifest)?;
    println!("{}", written.csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("EFLUX:usage: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, status) = e.code();
            eprintln!("EFLUX:{code}: {e}");
            ExitCode::from(status as u8)
        }
    }
}
