//! Runs a scenario file the same way the command-line tool does and prints the manifest.
//!
//! `cargo run --example run_config -- configs/toa-1d.toml /tmp/out`

use std::path::PathBuf;

use stsqm::scenario::{parse_config, run_scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/operator-algebra.toml").into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stsqm-example"));
    let cfg = parse_config(&std::fs::read_to_string(&config)?)?;
    let manifest = run_scenario(&cfg, &out)?;
    print!("{}", manifest.to_toml());
    Ok(())
}
