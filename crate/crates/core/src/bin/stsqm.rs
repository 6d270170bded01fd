use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stsqm::scenario::{parse_config, resolve_output_dir, run_scenario, ScenarioConfig, ScenarioKind, MANIFEST_FILE, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "stsqm", version, about = "Space-conditional quantum scenarios: arrival densities, reference checks and constraint residuals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its tables plus manifest.toml.
    Run {
        config: PathBuf,
        /// Output directory; beats the environment override and `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the randomized utilities (coefficient search, mode sampling).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config, then print it with every default filled.
    Validate { config: PathBuf },
    /// List the scenario kinds with their required keys.
    ListKinds,
}

fn load(path: &Path) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListKinds => {
            for kind in ScenarioKind::ALL {
                println!("{:<18} {}", kind.name(), kind.description());
                println!("{:<18} requires: {}", "", kind.required().join(", "));
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, out, seed } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = resolve_output_dir(out.as_deref(), &cfg);
            match run_scenario(&cfg, &dir) {
                Ok(m) => {
                    for o in &m.outputs {
                        println!("{}  {}", o.sha256, dir.join(&o.file).display());
                    }
                    println!("manifest: {}", dir.join(MANIFEST_FILE).display());
                    for w in &m.run.warnings {
                        eprintln!("warning: {w}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    eprintln!("(output directory {}; override with --out or {OUT_DIR_ENV})", dir.display());
                    ExitCode::FAILURE
                }
            }
        }
    }
}
