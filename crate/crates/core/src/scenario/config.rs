use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arrival::BackflowFixture;
use crate::error::{Error, Result};
use crate::spectral::{GaussianPacketSpec, PhysicalConstants, UniformGrid1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[serde(rename = "toa-1d")]
    Toa1d,
    #[serde(rename = "toa-2d")]
    Toa2d,
    KijowskiCheck,
    CompareY,
    Backflow,
    WdwResidual,
    StationaryOde,
    OperatorAlgebra,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::Toa1d,
        ScenarioKind::Toa2d,
        ScenarioKind::KijowskiCheck,
        ScenarioKind::CompareY,
        ScenarioKind::Backflow,
        ScenarioKind::WdwResidual,
        ScenarioKind::StationaryOde,
        ScenarioKind::OperatorAlgebra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Toa1d => "toa-1d",
            ScenarioKind::Toa2d => "toa-2d",
            ScenarioKind::KijowskiCheck => "kijowski-check",
            ScenarioKind::CompareY => "compare-y",
            ScenarioKind::Backflow => "backflow",
            ScenarioKind::WdwResidual => "wdw-residual",
            ScenarioKind::StationaryOde => "stationary-ode",
            ScenarioKind::OperatorAlgebra => "operator-algebra",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::Toa1d => "arrival-time density of a 1D packet or mode set at each plane",
            ScenarioKind::Toa2d => "joint (t, y) arrival density of a 2D packet at each plane",
            ScenarioKind::KijowskiCheck => "half-line arrival density against the full-line Riemann-sum reference",
            ScenarioKind::CompareY => "time-conditional and space-conditional y densities side by side",
            ScenarioKind::Backflow => "probability current and arrival density of the two-mode fixture",
            ScenarioKind::WdwResidual => "constraint residuals of a free-particle history state",
            ScenarioKind::StationaryOde => "stationary space-conditional profile through a potential",
            ScenarioKind::OperatorAlgebra => "squares and anticommutators of the P_x constructions on random modes",
        }
    }

    /// Keys that must be present, in the notation of the config file.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Toa1d => &["packet", "grids.t", "planes"],
            ScenarioKind::Toa2d => &["packet", "grids.t", "grids.y", "planes"],
            ScenarioKind::KijowskiCheck => &["packet", "grids.t", "grids.p", "planes"],
            ScenarioKind::CompareY => &["packet", "grids.t", "grids.x", "grids.y", "planes", "times"],
            ScenarioKind::Backflow => &[],
            ScenarioKind::WdwResidual => &["packet", "grids.x", "grids.t"],
            ScenarioKind::StationaryOde => &["grids.x", "stationary"],
            ScenarioKind::OperatorAlgebra => &[],
        }
    }

    /// Grid axes this kind feeds to a discrete transform; their sizes must be powers of two.
    pub fn transformed_axes(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Toa2d => &["y"],
            ScenarioKind::CompareY => &["x", "y"],
            ScenarioKind::Backflow => &["x"],
            ScenarioKind::WdwResidual => &["t", "x", "y"],
            _ => &[],
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_GRID_POINTS: usize = 1024;

fn default_n() -> usize {
    DEFAULT_GRID_POINTS
}

/// `n` points on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GridConfig {
    pub fn grid(&self) -> Result<UniformGrid1D> {
        UniformGrid1D::new(self.n, self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<GridConfig>,
    /// Full-line momentum grid of the reference pipeline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<GridConfig>,
}

impl GridsConfig {
    fn get(&self, axis: &str) -> Option<&GridConfig> {
        match axis {
            "t" => self.t.as_ref(),
            "x" => self.x.as_ref(),
            "y" => self.y.as_ref(),
            "p" => self.p.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsConfig {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

/// A Gaussian (`momentum`, `width`, optional `position`, `time`) or a plane-wave mode list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PacketConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec<f64>>,
    #[serde(default)]
    pub time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PacketSource {
    Gaussian(GaussianPacketSpec),
    Modes(Vec<f64>),
}

impl PacketConfig {
    pub fn source(&self) -> Result<PacketSource> {
        match (&self.momentum, &self.width, &self.modes) {
            (Some(p), Some(w), None) => {
                let mut spec = GaussianPacketSpec::new(p.clone(), w.clone()).at_time(self.time);
                if let Some(x) = &self.position {
                    spec = spec.at_position(x.clone());
                }
                spec.validate().map_err(|e| Error::Config(format!("packet: {e}")))?;
                Ok(PacketSource::Gaussian(spec))
            }
            (None, None, Some(m)) => Ok(PacketSource::Modes(m.clone())),
            _ => Err(Error::Config("packet needs either `momentum` and `width`, or `modes` alone".into())),
        }
    }

    pub fn gaussian(&self) -> Result<GaussianPacketSpec> {
        match self.source()? {
            PacketSource::Gaussian(s) => Ok(s),
            PacketSource::Modes(_) => Err(Error::Config("this scenario needs a Gaussian packet, not a mode list".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    #[serde(default = "default_panel")]
    pub panel_width: f64,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
}

fn default_panel() -> f64 {
    0.025
}

fn default_tail() -> f64 {
    crate::quadrature::DEFAULT_TAIL_TOLERANCE
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panel_width: default_panel(),
            tail_tolerance: default_tail(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Tsv,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Tsv => "tsv",
        }
    }

    pub fn delimiter(self) -> u8 {
        match self {
            TableFormat::Csv => b',',
            TableFormat::Tsv => b'\t',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<TableFormat>,
}

fn default_formats() -> Vec<TableFormat> {
    vec![TableFormat::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackflowConfig {
    #[serde(default = "stored_p1")]
    pub p1: f64,
    #[serde(default = "stored_p2")]
    pub p2: f64,
    #[serde(default = "stored_width")]
    pub width: f64,
    #[serde(default = "stored_coefficient")]
    pub coefficient: f64,
    #[serde(default)]
    pub plane: f64,
    /// Rescan the coefficient instead of using `coefficient`.
    #[serde(default)]
    pub search: bool,
    #[serde(default = "default_search_range")]
    pub search_range: [f64; 2],
    #[serde(default = "default_search_grid")]
    pub search_grid_points: usize,
    #[serde(default = "default_search_random")]
    pub search_random_points: usize,
    /// Momentum panel width of the half-line density.
    #[serde(default = "default_backflow_panel")]
    pub panel_width: f64,
}

fn stored_p1() -> f64 {
    BackflowFixture::STORED.p1
}
fn stored_p2() -> f64 {
    BackflowFixture::STORED.p2
}
fn stored_width() -> f64 {
    BackflowFixture::STORED.width
}
fn stored_coefficient() -> f64 {
    BackflowFixture::STORED.coefficient
}
fn default_search_range() -> [f64; 2] {
    [0.05, 2.0]
}
fn default_search_grid() -> usize {
    40
}
fn default_search_random() -> usize {
    8
}
fn default_backflow_panel() -> f64 {
    0.005
}

impl Default for BackflowConfig {
    fn default() -> Self {
        Self {
            p1: stored_p1(),
            p2: stored_p2(),
            width: stored_width(),
            coefficient: stored_coefficient(),
            plane: 0.0,
            search: false,
            search_range: default_search_range(),
            search_grid_points: default_search_grid(),
            search_random_points: default_search_random(),
            panel_width: default_backflow_panel(),
        }
    }
}

impl BackflowConfig {
    pub fn fixture(&self) -> BackflowFixture {
        BackflowFixture {
            p1: self.p1,
            p2: self.p2,
            width: self.width,
            coefficient: self.coefficient,
            plane: self.plane,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintConfig {
    /// 0 slices in time, 1 slices in x.
    #[serde(default)]
    pub mu: usize,
    /// Lattice `p_x = kΔp`, `k = 1..=count`, with `Δp = 2πħ/L_x`, for μ = 1 fixtures that are
    /// periodic on the slice window. Omitted means a Gauss–Legendre half-line rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialConfig {
    Constant { value: f64 },
    SmoothStep { height: f64, width: f64, #[serde(default)] offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryConfig {
    pub energy: f64,
    pub potential: PotentialConfig,
    #[serde(default = "default_v_min")]
    pub v_min: f64,
}

fn default_v_min() -> f64 {
    crate::operators::DEFAULT_V_MIN
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_energy_max")]
    pub energy_max: f64,
    #[serde(default = "default_momentum_max")]
    pub p_perp_max: f64,
    #[serde(default = "default_potential_max")]
    pub potential_max: f64,
}

fn default_samples() -> usize {
    1000
}
fn default_energy_max() -> f64 {
    50.0
}
fn default_momentum_max() -> f64 {
    5.0
}
fn default_potential_max() -> f64 {
    10.0
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            energy_max: default_energy_max(),
            p_perp_max: default_momentum_max(),
            potential_max: default_potential_max(),
        }
    }
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Seed of the fixture-search and random-sampling utilities; the physics is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet: Option<PacketConfig>,
    #[serde(default)]
    pub grids: GridsConfig,
    #[serde(default)]
    pub planes: Vec<f64>,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backflow: Option<BackflowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationaryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraConfig>,
}

/// Parses, rejects unknown keys, checks the kind's schema and fills defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut unknown = BTreeSet::new();
    let de = toml::Deserializer::new(text);
    let mut config: ScenarioConfig = serde_ignored::deserialize(de, |path| {
        // `?` marks an `Option` layer, which is not part of the key
        let key: Vec<String> = path.to_string().split('.').filter(|s| *s != "?").map(str::to_string).collect();
        unknown.insert(key.join("."));
    })
    .map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    if !unknown.is_empty() {
        let keys: Vec<String> = unknown.into_iter().collect();
        return Err(Error::Config(format!("unknown key(s): {}", keys.join(", "))));
    }
    config.fill_defaults();
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    /// Echo of the resolved config in the same format it was read from.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn constants(&self) -> Result<PhysicalConstants> {
        PhysicalConstants::new(self.constants.hbar, self.constants.mass).map_err(|e| Error::Config(format!("constants: {e}")))
    }

    fn fill_defaults(&mut self) {
        match self.kind {
            ScenarioKind::Backflow => {
                self.backflow.get_or_insert_with(BackflowConfig::default);
                let x = BackflowFixture::x_grid();
                let t = BackflowFixture::t_grid();
                self.grids.x.get_or_insert(GridConfig { n: x.len(), lo: x.lo(), hi: x.hi() });
                self.grids.t.get_or_insert(GridConfig { n: t.len(), lo: t.lo(), hi: t.hi() });
            }
            ScenarioKind::WdwResidual => {
                self.constraint.get_or_insert_with(ConstraintConfig::default);
            }
            ScenarioKind::OperatorAlgebra => {
                self.algebra.get_or_insert_with(AlgebraConfig::default);
            }
            _ => {}
        }
    }

    fn has(&self, key: &str) -> bool {
        match key {
            "packet" => self.packet.is_some(),
            "planes" => !self.planes.is_empty(),
            "times" => !self.times.is_empty(),
            "stationary" => self.stationary.is_some(),
            k => k.strip_prefix("grids.").is_some_and(|a| self.grids.get(a).is_some()),
        }
    }

    pub fn grid(&self, axis: &str) -> Result<UniformGrid1D> {
        self.grids
            .get(axis)
            .ok_or_else(|| Error::Config(format!("kind `{}` needs grids.{axis}", self.kind)))?
            .grid()
            .map_err(|e| Error::Config(format!("grids.{axis}: {e}")))
    }

    pub fn optional_grid(&self, axis: &str) -> Result<Option<UniformGrid1D>> {
        self.grids.get(axis).map(|_| self.grid(axis)).transpose()
    }

    fn validate(&self) -> Result<()> {
        let required = self.kind.required();
        let missing: Vec<&str> = required.iter().copied().filter(|k| !self.has(k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "kind `{}` requires [{}]; missing: {}",
                self.kind,
                required.join(", "),
                missing.join(", ")
            )));
        }
        self.constants()?;
        for axis in ["t", "x", "y", "p"] {
            if let Some(g) = self.optional_grid(axis)? {
                if self.kind.transformed_axes().contains(&axis) && !g.len().is_power_of_two() {
                    return Err(Error::Config(format!(
                        "grids.{axis}.n = {} must be a power of two for kind `{}`",
                        g.len(),
                        self.kind
                    )));
                }
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats must name at least one format".into()));
        }
        if !(self.quadrature.panel_width > 0.0 && self.quadrature.tail_tolerance > 0.0) {
            return Err(Error::Config("quadrature.panel_width and quadrature.tail_tolerance must be positive".into()));
        }
        let dims = match &self.packet {
            Some(p) => Some(match p.source()? {
                PacketSource::Gaussian(s) => s.dims(),
                PacketSource::Modes(m) => {
                    if self.kind != ScenarioKind::Toa1d {
                        return Err(Error::Config(format!("mode lists are only accepted by toa-1d, not `{}`", self.kind)));
                    }
                    if m.is_empty() || m.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                        return Err(Error::Config("packet.modes must be positive momenta".into()));
                    }
                    1
                }
            }),
            None => None,
        };
        let want = match self.kind {
            ScenarioKind::Toa1d | ScenarioKind::KijowskiCheck => Some(1..=1),
            ScenarioKind::Toa2d | ScenarioKind::CompareY => Some(2..=2),
            ScenarioKind::WdwResidual => Some(1..=2),
            _ => None,
        };
        if let (Some(d), Some(range)) = (dims, want) {
            if !range.contains(&d) {
                return Err(Error::Config(format!("kind `{}` needs a packet with {range:?} axes, got {d}", self.kind)));
            }
        }
        if self.kind == ScenarioKind::WdwResidual {
            let c = self.constraint.expect("filled");
            if c.mu > 1 {
                return Err(Error::Config(format!("constraint.mu must be 0 or 1, got {}", c.mu)));
            }
            if dims == Some(2) && self.grids.y.is_none() {
                return Err(Error::Config("a 2D packet needs grids.y".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "toa-1d"
planes = [5.0]
[packet]
momentum = [10.0]
width = [0.5]
[grids.t]
lo = 0.0
hi = 1.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.kind, ScenarioKind::Toa1d);
        assert_eq!((c.constants.hbar, c.constants.mass), (1.0, 1.0));
        assert_eq!(c.grids.t.unwrap().n, 1024);
        assert_eq!(c.output.formats, vec![TableFormat::Csv]);
        // the echo parses back to the same config
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace("[packet]", "hbarr = 2.0\n[packet]\nspread = 1.0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("hbarr") && err.contains("packet.spread"), "{err}");
        let text = format!("{MINIMAL}\n[constants]\nhbarr = 1.0\n");
        assert!(parse_config(&text).unwrap_err().to_string().contains("constants.hbarr"));
    }

    #[test]
    fn kind_schema_is_enforced() {
        let text = r#"
kind = "wdw-residual"
[packet]
momentum = [1.0]
width = [0.5]
[grids.t]
n = 64
lo = 0.0
hi = 1.0
"#;
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("wdw-residual") && err.contains("missing: grids.x"), "{err}");
        assert!(parse_config(&MINIMAL.replace("kind = \"toa-1d\"", "kind = \"toa-3d\"")).is_err());
        let odd = text.replace("[grids.t]", "[grids.x]\nn = 100\nlo = -8.0\nhi = 8.0\n[grids.t]");
        assert!(parse_config(&odd).unwrap_err().to_string().contains("power of two"));
    }

    #[test]
    fn packet_forms() {
        let modes = MINIMAL.replace("momentum = [10.0]\nwidth = [0.5]", "modes = [3.0, 4.0]");
        assert!(matches!(parse_config(&modes).unwrap().packet.unwrap().source().unwrap(), PacketSource::Modes(_)));
        let both = MINIMAL.replace("width = [0.5]", "width = [0.5]\nmodes = [3.0]");
        assert!(parse_config(&both).is_err());
        let flat = MINIMAL.replace("width = [0.5]", "width = [0.0]");
        assert!(parse_config(&flat).is_err());
    }

    #[test]
    fn defaults_for_fixture_kinds() {
        let c = parse_config("kind = \"backflow\"").unwrap();
        assert_eq!(c.grids.x.unwrap().n, 8192);
        assert_eq!(c.backflow.unwrap().fixture(), BackflowFixture::STORED);
        assert_eq!(parse_config("kind = \"operator-algebra\"").unwrap().algebra.unwrap().samples, 1000);
    }
}
