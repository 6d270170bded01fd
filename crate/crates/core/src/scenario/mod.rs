//! TOML-configured scenarios: schema and validation, table emission, and the runner that
//! writes data files plus a manifest.

pub mod config;
pub mod output;
mod run;

pub use config::{parse_config, PacketSource, ScenarioConfig, ScenarioKind, TableFormat};
pub use output::{emit_table, format_real, reread_normalization, sha256_hex, Column, OutputRecord, Table};
pub use run::{
    construction_name, random_modes, resolve_output_dir, run_scenario, square_residual, RunInfo, RunManifest, StageTiming,
    KIJOWSKI_CORE_MASS, KIJOWSKI_TOLERANCE, MANIFEST_FILE, NORMALIZED_TOLERANCE, OUT_DIR_ENV,
};
