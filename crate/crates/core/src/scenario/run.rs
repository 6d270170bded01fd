use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{PacketSource, PotentialConfig, ScenarioConfig, ScenarioKind};
use super::output::{emit_all, reread_normalization, Column, OutputRecord, Table};
use crate::arrival::{
    arrival_density, arrival_time_density, core_relative_difference, detect_backflow, kijowski_reference, l1_distance, moments,
    sc_conditional_y_at_time, sc_cumulative_y, search_backflow_coefficient, variance, WINDOW_TAIL_LIMIT,
};
use crate::constraint::{build_history_space, build_history_time, constraint_residual, verify_generalized_evolution, SliceAxis, SliceDerivative};
use crate::error::{Error, Result};
use crate::field::Branch;
use crate::operators::{verify_anticommutation, ConstantPotential, ModeCoordinates, Potential, PxConstruction, SmoothStep, StationaryProfile, StationarySeed};
use crate::qm::{tc_conditional_y_at_plane, tc_cumulative_y_density, tc_position_field, TCMomentumAmplitude};
use crate::quadrature::HalfLineAxis;
use crate::sts::{sc_field, SCMomentumAmplitude};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "STSQM_OUT_DIR";

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Relative tolerance of the dual-pipeline arrival-density comparison.
pub const KIJOWSKI_TOLERANCE: f64 = 1e-6;

/// Mass fraction of the reference density over which the dual pipelines are compared.
pub const KIJOWSKI_CORE_MASS: f64 = 1.0 - 1e-6;

/// Re-read tolerance for densities normalized on their grid.
pub const NORMALIZED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub version: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Metadata of one run; the data files are described by `outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: RunInfo,
    pub config: ScenarioConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, f64>,
    pub outputs: Vec<OutputRecord>,
    pub timings: Vec<StageTiming>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn output(&self, file: &str) -> Option<&OutputRecord> {
        self.outputs.iter().find(|o| o.file == file)
    }
}

/// `--out`, then `$STSQM_OUT_DIR`, then `output.dir`, then `./stsqm-out`.
pub fn resolve_output_dir(cli: Option<&Path>, config: &ScenarioConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.output.dir.as_ref().map_or_else(|| PathBuf::from("stsqm-out"), PathBuf::from)
}

struct Run<'a> {
    config: &'a ScenarioConfig,
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run<'_> {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.manifest.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    fn tolerance(&mut self, key: &str, value: f64) {
        self.manifest.tolerances.insert(key.to_string(), value);
    }

    fn diag(&mut self, key: impl Into<String>, value: f64) {
        self.manifest.diagnostics.insert(key.into(), value);
    }

    fn warn(&mut self, warnings: &[String]) {
        self.manifest.run.warnings.extend(warnings.iter().cloned());
    }

    /// Writes `table` in every format; `density` names columns that must re-read to unit
    /// mass with cell `spacing` within `tol`.
    fn write(&mut self, table: &Table, stem: &str, density: Option<(&[String], f64, f64)>) -> Result<()> {
        let formats = self.config.output.formats.clone();
        let dir = self.dir.clone();
        let written = self.timed(&format!("write {stem}"), || {
            let mut out = Vec::new();
            for (path, format, mut rec) in emit_all(table, &dir, stem, &formats)? {
                if let Some((cols, spacing, tol)) = density {
                    let err = reread_normalization(&path, format, cols, spacing)?;
                    if err > tol {
                        return Err(Error::domain(format!(
                            "{} re-reads to mass 1 ± {err:e}, outside the recorded tolerance {tol:e}",
                            rec.file
                        )));
                    }
                    rec.normalization_error = Some(err);
                }
                out.push(rec);
            }
            Ok(out)
        })?;
        self.manifest.outputs.extend(written);
        Ok(())
    }
}

/// Runs `config`, writing data files and `manifest.toml` into `dir`.
pub fn run_scenario(config: &ScenarioConfig, dir: &Path) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).in_stage("prepare output"))?;
    let mut run = Run {
        config,
        dir: dir.to_path_buf(),
        manifest: RunManifest {
            run: RunInfo {
                kind: config.kind,
                seed: config.seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                warnings: Vec::new(),
            },
            config: config.clone(),
            tolerances: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
        },
    };
    match config.kind {
        ScenarioKind::Toa1d => toa_1d(&mut run)?,
        ScenarioKind::Toa2d => toa_2d(&mut run)?,
        ScenarioKind::KijowskiCheck => kijowski_check(&mut run)?,
        ScenarioKind::CompareY => compare_y(&mut run)?,
        ScenarioKind::Backflow => backflow(&mut run)?,
        ScenarioKind::WdwResidual => wdw_residual(&mut run)?,
        ScenarioKind::StationaryOde => stationary_ode(&mut run)?,
        ScenarioKind::OperatorAlgebra => operator_algebra(&mut run)?,
    }
    let manifest = run.manifest;
    fs::write(dir.join(MANIFEST_FILE), manifest.to_toml()).map_err(|e| Error::from(e).in_stage("write manifest"))?;
    Ok(manifest)
}

fn at(label: &str, axis: &str, v: f64) -> String {
    format!("{label}@{axis}={v}")
}

fn with_unit(labels: &[String], unit: &str) -> Vec<String> {
    labels.iter().map(|l| format!("{l} [{unit}]")).collect()
}

fn toa_1d(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let t = cfg.grid("t")?;
    let source = cfg.packet.as_ref().expect("validated").source()?;
    let q = cfg.quadrature;
    let amp = run.timed("amplitude", || match &source {
        PacketSource::Gaussian(spec) => SCMomentumAmplitude::gaussian(spec, vec![], c, q.panel_width, q.tail_tolerance),
        PacketSource::Modes(m) => SCMomentumAmplitude::from_branch_fn(HalfLineAxis::modes(m.clone())?, vec![], c, |b, _| {
            Complex64::new(if b == Branch::Plus { 1.0 } else { 0.0 }, 0.0)
        }),
    })?;
    run.diag("quadrature_tail_mass", amp.px_axis().tail_mass());
    let dists = run.timed("density", || cfg.planes.iter().map(|&x| arrival_time_density(&amp, x, &t)).collect::<Result<Vec<_>>>())?;

    let mut density = Table::new().with(Column::real("t", "time", &t.points()));
    let labels: Vec<String> = cfg.planes.iter().map(|&x| at("density", "x", x)).collect();
    let mut rows = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for ((x, d), label) in cfg.planes.iter().zip(&dists).zip(&labels) {
        density = density.with(Column::real(label, "1/time", &d.samples.iter().copied().collect::<Vec<_>>()));
        let mean = moments(d, 1)?;
        let classical = match &source {
            PacketSource::Gaussian(s) => s.center_time + c.mass * (x - s.center_position.first().copied().unwrap_or(0.0)) / s.center_momentum[0],
            PacketSource::Modes(_) => f64::NAN,
        };
        rows.0.push(*x);
        rows.1.push(mean);
        rows.2.push(variance(d)?);
        rows.3.push(d.total());
        rows.4.push(classical);
        run.diag(format!("captured_mass@x={x}"), d.total());
        if classical.is_finite() {
            run.diag(format!("semiclassical_relative_deviation@x={x}"), (mean - classical).abs() / classical.abs());
        }
    }
    let proper = dists.iter().all(|d| d.proper);
    run.tolerance("window_tail_limit", WINDOW_TAIL_LIMIT);
    let check = proper.then(|| with_unit(&labels, "1/time"));
    run.write(&density, "density", check.as_deref().map(|c| (c, t.spacing(), WINDOW_TAIL_LIMIT)))?;
    let summary = Table::new()
        .with(Column::real("plane", "length", &rows.0))
        .with(Column::real("mean_t", "time", &rows.1))
        .with(Column::real("variance_t", "time^2", &rows.2))
        .with(Column::real("captured_mass", "1", &rows.3))
        .with(Column::real("semiclassical_t", "time", &rows.4));
    run.write(&summary, "summary", None)
}

fn toa_2d(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let (t, y) = (cfg.grid("t")?, cfg.grid("y")?);
    let spec = cfg.packet.as_ref().expect("validated").gaussian()?;
    let q = cfg.quadrature;
    let amp = run.timed("amplitude", || SCMomentumAmplitude::gaussian(&spec, vec![y.conjugate(c.hbar)], c, q.panel_width, q.tail_tolerance))?;
    let fields = run.timed("field", || cfg.planes.iter().map(|&x| sc_field(&amp, x, &t, &[y])).collect::<Result<Vec<_>>>())?;
    let dists = run.timed("density", || fields.iter().map(arrival_density).collect::<Result<Vec<_>>>())?;
    let mut by_t = Table::new().with(Column::real("t", "time", &t.points()));
    let mut by_y = Table::new().with(Column::real("y", "length", &y.points()));
    let (mut lt, mut ly) = (Vec::new(), Vec::new());
    for (k, ((x, f), d)) in cfg.planes.iter().zip(&fields).zip(&dists).enumerate() {
        let a = at("density", "x", *x);
        by_t = by_t.with(Column::real(&a, "1/time", &d.marginal(0)?));
        by_y = by_y.with(Column::real(&a, "1/length", &d.marginal(1)?));
        lt.push(format!("{a} [1/time]"));
        ly.push(format!("{a} [1/length]"));
        if let Some(frac) = f.diagnostics.captured_fraction {
            run.diag(format!("captured_fraction@x={x}"), frac);
        }
        run.diag(format!("edge_ratio@x={x}"), f.diagnostics.edge_ratio);
        run.warn(&f.diagnostics.warnings);
        let long = Table::from_distribution_long(d, "density")?;
        let col = vec![long.columns[2].header()];
        run.write(&long, &format!("density_ty_{k}"), Some((&col, t.spacing() * y.spacing(), NORMALIZED_TOLERANCE)))?;
    }
    run.tolerance("normalized_density", NORMALIZED_TOLERANCE);
    run.write(&by_t, "density_t", Some((&lt, t.spacing(), NORMALIZED_TOLERANCE)))?;
    run.write(&by_y, "density_y", Some((&ly, y.spacing(), NORMALIZED_TOLERANCE)))
}

fn kijowski_check(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let (t, p) = (cfg.grid("t")?, cfg.grid("p")?);
    let spec = cfg.packet.as_ref().expect("validated").gaussian()?;
    let q = cfg.quadrature;
    let sc = run.timed("half-line amplitude", || SCMomentumAmplitude::gaussian(&spec, vec![], c, q.panel_width, q.tail_tolerance))?;
    let tc = run.timed("full-line amplitude", || TCMomentumAmplitude::gaussian(&spec, vec![p], c))?;
    let sts = run.timed("half-line density", || cfg.planes.iter().map(|&x| arrival_time_density(&sc, x, &t)).collect::<Result<Vec<_>>>())?;
    let reference = run.timed("reference density", || cfg.planes.iter().map(|&x| kijowski_reference(&tc, x, &t)).collect::<Result<Vec<_>>>())?;
    let agreement = run.timed("compare", || {
        sts.iter().zip(&reference).map(|(a, b)| core_relative_difference(a, b, KIJOWSKI_CORE_MASS)).collect::<Result<Vec<_>>>()
    })?;
    run.tolerance("max_relative_difference", KIJOWSKI_TOLERANCE);
    run.tolerance("core_mass", KIJOWSKI_CORE_MASS);
    run.tolerance("window_tail_limit", WINDOW_TAIL_LIMIT);
    let mut table = Table::new().with(Column::real("t", "time", &t.points()));
    let mut labels = Vec::new();
    let mut rows = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (((x, a), b), g) in cfg.planes.iter().zip(&sts).zip(&reference).zip(&agreement) {
        let (la, lb) = (at("sts", "x", *x), at("kijowski", "x", *x));
        table = table
            .with(Column::real(&la, "1/time", &a.samples.iter().copied().collect::<Vec<_>>()))
            .with(Column::real(&lb, "1/time", &b.samples.iter().copied().collect::<Vec<_>>()));
        labels.push(format!("{la} [1/time]"));
        labels.push(format!("{lb} [1/time]"));
        rows.0.push(*x);
        rows.1.push(g.max_relative);
        rows.2.push(t.point(g.lo));
        rows.3.push(t.point(g.hi));
        rows.4.push(g.core_mass);
        run.diag(format!("max_relative_difference@x={x}"), g.max_relative);
        run.diag(format!("captured_mass@x={x}"), a.total());
    }
    run.write(&table, "kijowski", Some((&labels, t.spacing(), WINDOW_TAIL_LIMIT)))?;
    let summary = Table::new()
        .with(Column::real("plane", "length", &rows.0))
        .with(Column::real("max_relative_difference", "1", &rows.1))
        .with(Column::real("core_lo", "time", &rows.2))
        .with(Column::real("core_hi", "time", &rows.3))
        .with(Column::real("core_mass", "1", &rows.4));
    run.write(&summary, "summary", None)
}

fn compare_y(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let (t, x, y) = (cfg.grid("t")?, cfg.grid("x")?, cfg.grid("y")?);
    let spec = cfg.packet.as_ref().expect("validated").gaussian()?;
    let q = cfg.quadrature;
    let tc = run.timed("full-line amplitude", || TCMomentumAmplitude::gaussian_for(&spec, &[x, y], c))?;
    let sc = run.timed("half-line amplitude", || SCMomentumAmplitude::gaussian(&spec, vec![y.conjugate(c.hbar)], c, q.panel_width, q.tail_tolerance))?;
    let tc_fields = run.timed("tc field", || cfg.times.iter().map(|&s| tc_position_field(&tc, s, &[x, y])).collect::<Result<Vec<_>>>())?;
    let sc_fields = run.timed("sc field", || cfg.planes.iter().map(|&l| sc_field(&sc, l, &t, &[y])).collect::<Result<Vec<_>>>())?;
    for f in &sc_fields {
        run.warn(&f.diagnostics.warnings);
    }
    // conditionals are read at the nearest grid row or column
    let mut snapped = Vec::new();
    for (axis, grid, values) in [("t", t, &cfg.times), ("x", x, &cfg.planes)] {
        for &v in values.iter() {
            let on = grid.nearest_index(v).map(|k| grid.point(k));
            if let Some(p) = on.filter(|p| (p - v).abs() > 1e-9 * grid.spacing()) {
                snapped.push(format!("{axis} = {v} is read at the nearest grid point {p}"));
            }
        }
    }
    run.warn(&snapped);
    let mut table = Table::new().with(Column::real("y", "length", &y.points()));
    let mut labels = Vec::new();
    let mut push = |table: Table, label: String, d: &crate::arrival::ArrivalDistribution| {
        let n: Vec<f64> = d.normalized().iter().copied().collect();
        labels.push(format!("{label} [1/length]"));
        table.with(Column::real(&label, "1/length", &n))
    };
    let sc_cum = run.timed("sc cumulative", || sc_fields.iter().map(sc_cumulative_y).collect::<Result<Vec<_>>>())?;
    let tc_cum = run.timed("tc cumulative", || tc_fields.iter().map(tc_cumulative_y_density).collect::<Result<Vec<_>>>())?;
    for (l, d) in cfg.planes.iter().zip(&sc_cum) {
        table = push(table, at("sc_cumulative", "x", *l), d);
    }
    for (s, d) in cfg.times.iter().zip(&tc_cum) {
        table = push(table, at("tc_cumulative", "t", *s), d);
    }
    let mut rows = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (l, (scf, scc)) in cfg.planes.iter().zip(sc_fields.iter().zip(&sc_cum)) {
        for (s, (tcf, tcc)) in cfg.times.iter().zip(tc_fields.iter().zip(&tc_cum)) {
            let (a, b) = run.timed("conditional", || Ok((tc_conditional_y_at_plane(tcf, *l)?, sc_conditional_y_at_time(scf, *s)?)))?;
            table = push(table, format!("tc_conditional@x={l}@t={s}"), &a);
            table = push(table, format!("sc_conditional@x={l}@t={s}"), &b);
            rows.0.push(*l);
            rows.1.push(*s);
            rows.2.push(l1_distance(&a, &b)?);
            rows.3.push(l1_distance(tcc, scc)?);
        }
    }
    run.tolerance("normalized_density", NORMALIZED_TOLERANCE);
    run.write(&table, "compare_y", Some((&labels, y.spacing(), NORMALIZED_TOLERANCE)))?;
    let summary = Table::new()
        .with(Column::real("plane", "length", &rows.0))
        .with(Column::real("time", "time", &rows.1))
        .with(Column::real("l1_conditional", "1", &rows.2))
        .with(Column::real("l1_cumulative", "1", &rows.3));
    run.write(&summary, "summary", None)
}

fn backflow(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let (x, t) = (cfg.grid("x")?, cfg.grid("t")?);
    let bc = cfg.backflow.clone().expect("filled");
    let mut fixture = bc.fixture();
    if bc.search {
        let seed = cfg.seed;
        let s = run.timed("search", || {
            search_backflow_coefficient(
                fixture,
                (bc.search_range[0], bc.search_range[1]),
                bc.search_grid_points,
                bc.search_random_points,
                seed,
                &x,
                &t,
                c,
            )
        })?;
        fixture = s.fixture;
        let (cs, rs): (Vec<f64>, Vec<f64>) = s.candidates.iter().copied().unzip();
        let table = Table::new().with(Column::real("coefficient", "1", &cs)).with(Column::real("relative_min_flux", "1/length", &rs));
        run.write(&table, "search", None)?;
        run.diag("searched_coefficient", fixture.coefficient);
    }
    let flux = run.timed("current", || fixture.flux(&x, &t, c))?;
    let intervals = detect_backflow(&flux);
    let tc = run.timed("full-line amplitude", || fixture.amplitude(&x, c))?;
    let kij = run.timed("reference density", || kijowski_reference(&tc, fixture.plane, &t))?;
    let q = cfg.quadrature;
    let sc = run.timed("half-line amplitude", || {
        SCMomentumAmplitude::truncated_from_full_line(vec![], c, bc.panel_width, q.tail_tolerance, |p| fixture.psi(p[0], &c))
    })?;
    let field = run.timed("sc field", || sc_field(&sc, fixture.plane, &t, &[]))?;
    let sts = run.timed("half-line density", || arrival_density(&field))?;
    let kn: Vec<f64> = kij.normalized().iter().copied().collect();
    let sn: Vec<f64> = sts.samples.iter().copied().collect();
    let table = Table::from_flux(&flux)
        .with(Column::real("kijowski_window", "1/time", &kn))
        .with(Column::real("sts_window", "1/time", &sn));
    let labels = vec!["kijowski_window [1/time]".to_string(), "sts_window [1/time]".to_string()];
    run.tolerance("normalized_density", NORMALIZED_TOLERANCE);
    run.tolerance("density_floor", -1e-14);
    run.diag("coefficient", fixture.coefficient);
    run.diag("min_current", flux.min());
    run.diag("negative_intervals", intervals.len() as f64);
    run.diag("min_kijowski_density", kij.min());
    run.diag("min_sts_density", sts.min());
    run.diag("kijowski_window_mass", kij.total());
    run.write(&table, "flux", Some((&labels, t.spacing(), NORMALIZED_TOLERANCE)))?;
    let iv = Table::new()
        .with(Column::real("t_start", "time", &intervals.iter().map(|i| i.t_start).collect::<Vec<_>>()))
        .with(Column::real("t_end", "time", &intervals.iter().map(|i| i.t_end).collect::<Vec<_>>()))
        .with(Column::real("min_flux", "1/time", &intervals.iter().map(|i| i.min_flux).collect::<Vec<_>>()));
    run.write(&iv, "intervals", None)
}

fn wdw_residual(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let (x, t) = (cfg.grid("x")?, cfg.grid("t")?);
    let y = cfg.optional_grid("y")?;
    let spec = cfg.packet.as_ref().expect("validated").gaussian()?;
    let cc = cfg.constraint.expect("filled");
    let q = cfg.quadrature;
    let transverse: Vec<_> = if spec.dims() == 2 { y.into_iter().collect() } else { Vec::new() };
    let history = if cc.mu == 0 {
        let spatial: Vec<_> = std::iter::once(x).chain(transverse.iter().copied()).collect();
        let amp = run.timed("amplitude", || TCMomentumAmplitude::gaussian_for(&spec, &spatial, c))?;
        run.timed("history", || build_history_time(&amp, &SliceAxis::from(t), &spatial))?
    } else {
        let tp: Vec<_> = transverse.iter().map(|g| g.conjugate(c.hbar)).collect();
        let amp = run.timed("amplitude", || match cc.lattice_count {
            Some(count) => {
                let dp = 2.0 * std::f64::consts::PI * c.hbar / x.length();
                if let Some(g) = tp.iter().find(|g| (g.spacing() - dp).abs() > 1e-12 * dp) {
                    return Err(Error::Config(format!("lattice Δp = {dp} differs from the transverse spacing {}", g.spacing())));
                }
                let a = SCMomentumAmplitude::from_full_line(HalfLineAxis::lattice(dp, count)?, tp.clone(), c, |p| spec.value(p, &c))?;
                let n = a.norm_squared().expect("lattice is normalizable");
                Ok(a.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
            }
            None => SCMomentumAmplitude::gaussian(&spec, tp.clone(), c, q.panel_width, q.tail_tolerance),
        })?;
        run.timed("history", || build_history_space(&amp, &SliceAxis::from(x), &t, &transverse))?
    };
    let mut rows = (Vec::new(), Vec::new(), Vec::new());
    let mut norms = Vec::new();
    for d in [SliceDerivative::Spectral, SliceDerivative::Centered] {
        let name = match d {
            SliceDerivative::Spectral => "spectral",
            SliceDerivative::Centered => "centered",
        };
        let (r, v) = run.timed(&format!("residual {name}"), || Ok((constraint_residual(&history, d)?, verify_generalized_evolution(&history, d)?)))?;
        rows.0.push(name.to_string());
        rows.1.push(r.residual_l2);
        rows.2.push(v);
        run.diag(format!("constraint_residual_{name}"), r.residual_l2);
        norms = r.slice_norms;
    }
    let corrupted = history.corrupted(history.len() / 2, Complex64::new(-1.0, 0.0))?;
    let bad = run.timed("residual corrupted", || constraint_residual(&corrupted, SliceDerivative::Spectral))?;
    rows.0.push("spectral-corrupted".into());
    rows.1.push(bad.residual_l2);
    rows.2.push(f64::NAN);
    run.diag("constraint_residual_corrupted", bad.residual_l2);
    let deviation = norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    run.diag("max_slice_norm_deviation", deviation);
    run.tolerance("constraint_residual_spectral", 1e-6);
    run.tolerance("slice_norm", if cc.mu == 0 { 1e-10 } else { 1e-8 });
    let (axis_label, unit) = if cc.mu == 0 { ("t", "time") } else { ("x", "length") };
    let slice_table = Table::new().with(Column::real(axis_label, unit, &history.slice_axis.points())).with(Column::real("norm", "1", &norms));
    run.write(&slice_table, "slice_norms", None)?;
    let table = Table::new()
        .with(Column::text("derivative", rows.0))
        .with(Column::real("constraint_residual", "1", &rows.1))
        .with(Column::real("generalized_evolution_residual", "1", &rows.2));
    run.write(&table, "residual", None)
}

fn stationary_ode(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let x = cfg.grid("x")?;
    let sc = cfg.stationary.expect("validated");
    let potential: Box<dyn Potential> = match sc.potential {
        PotentialConfig::Constant { value } => Box::new(ConstantPotential(value)),
        PotentialConfig::SmoothStep { height, width, offset } => Box::new(SmoothStep { height, width, offset }),
    };
    let v0 = potential.value(x.lo());
    let plus = StationarySeed::plane_wave(x.lo(), sc.energy, v0, 1.0, &c);
    let minus = StationarySeed::plane_wave(x.lo(), sc.energy, v0, -1.0, &c);
    let profile = run.timed("integrate", || StationaryProfile::solve(plus, minus, sc.energy, potential.as_ref(), &x, &c, sc.v_min))?;
    let parts = |v: &[Complex64]| -> (Vec<f64>, Vec<f64>) { (v.iter().map(|z| z.re).collect(), v.iter().map(|z| z.im).collect()) };
    let (pr, pi) = parts(&profile.phi_plus);
    let (mr, mi) = parts(&profile.phi_minus);
    let pts = x.points();
    let v: Vec<f64> = pts.iter().map(|&p| potential.value(p)).collect();
    run.tolerance("v_min", sc.v_min);
    run.diag("max_modulus_plus", profile.phi_plus.iter().map(|z| z.norm()).fold(0.0, f64::max));
    run.diag("max_modulus_minus", profile.phi_minus.iter().map(|z| z.norm()).fold(0.0, f64::max));
    let table = Table::new()
        .with(Column::real("x", "length", &pts))
        .with(Column::real("re_phi_plus", "1", &pr))
        .with(Column::real("im_phi_plus", "1", &pi))
        .with(Column::real("re_phi_minus", "1", &mr))
        .with(Column::real("im_phi_minus", "1", &mi))
        .with(Column::real("potential", "energy", &v));
    run.write(&table, "profile", None)
}

/// Largest `|M² − kI|` entry over the modes, relative to `max(1, 2m|ε| + 2m|V| + |p⊥|²)`.
pub fn square_residual(construction: PxConstruction, modes: &[ModeCoordinates], constants: &crate::PhysicalConstants) -> f64 {
    modes
        .iter()
        .map(|m| {
            let k = m.dispersion(constants);
            let scale = (2.0 * constants.mass * (m.energy.abs() + m.potential_value.abs()) + m.p_perp_squared()).max(1.0);
            let id = crate::operators::TwoByTwoComplex::IDENTITY.scale(Complex64::new(k, 0.0));
            (construction.matrix(m, constants).square() - id).max_abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Uniform random modes: `ε ∈ [0, ε_max)`, two `p⊥` components in `[−p_max, p_max)`, `V ∈ [−V_max, V_max)`.
pub fn random_modes(seed: u64, count: usize, energy_max: f64, p_perp_max: f64, potential_max: f64) -> Vec<ModeCoordinates> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let e = rng.gen_range(0.0..energy_max);
            let p = vec![rng.gen_range(-p_perp_max..p_perp_max), rng.gen_range(-p_perp_max..p_perp_max)];
            let v = rng.gen_range(-potential_max..potential_max);
            ModeCoordinates::new(e, p, v)
        })
        .collect()
}

pub fn construction_name(c: PxConstruction) -> &'static str {
    match c {
        PxConstruction::SigmaZ => "sigma-z",
        PxConstruction::DiracSplit => "dirac-split",
        PxConstruction::DiracSplitKineticTransverse => "dirac-split-kinetic-transverse",
        PxConstruction::DiracSplitSwapped => "dirac-split-swapped",
    }
}

fn operator_algebra(run: &mut Run) -> Result<()> {
    let cfg = run.config;
    let c = cfg.constants()?;
    let a = cfg.algebra.expect("filled");
    if a.samples == 0 || !(a.energy_max > 0.0 && a.p_perp_max > 0.0 && a.potential_max > 0.0) {
        return Err(Error::Config("algebra.samples and the sampling ranges must be positive".into()).in_stage("sample"));
    }
    let modes = run.timed("sample", || Ok(random_modes(cfg.seed, a.samples, a.energy_max, a.p_perp_max, a.potential_max)))?;
    let mut cols = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for con in PxConstruction::ALL {
        let sq = square_residual(con, &modes, &c);
        let ac = con.alpha_beta().map(|(al, be)| verify_anticommutation(&al, &be));
        cols.0.push(construction_name(con).to_string());
        cols.1.push(sq);
        cols.2.push(ac.map_or(f64::NAN, |r| r.alpha_squared));
        cols.3.push(ac.map_or(f64::NAN, |r| r.beta_squared));
        cols.4.push(ac.map_or(f64::NAN, |r| r.anticommutator));
        run.diag(format!("square_residual_{}", construction_name(con)), sq);
    }
    run.tolerance("square_residual", 1e-12);
    run.diag("modes", modes.len() as f64);
    let table = Table::new()
        .with(Column::text("construction", cols.0))
        .with(Column::real("max_square_residual", "1", &cols.1))
        .with(Column::real("alpha_squared", "1", &cols.2))
        .with(Column::real("beta_squared", "1", &cols.3))
        .with(Column::real("anticommutator", "1", &cols.4));
    run.write(&table, "algebra", None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_config;

    const MODES: &str = r#"
kind = "toa-1d"
planes = [0.0, 1.0]
[packet]
modes = [3.0, 4.0]
[grids.t]
n = 64
lo = 0.0
hi = 12.566370614359172
"#;

    #[test]
    fn run_writes_tables_and_one_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(MODES).unwrap();
        let m = run_scenario(&cfg, dir.path()).unwrap();
        let files: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
        assert_eq!(files, ["density.csv", "summary.csv"]);
        // improper mode densities carry no normalization check
        assert!(m.outputs.iter().all(|o| o.normalization_error.is_none()));
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        let back: RunManifest = toml::from_str(&text).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.outputs, m.outputs);
        let bytes = fs::read(dir.path().join("density.csv")).unwrap();
        assert_eq!(m.output("density.csv").unwrap().sha256, crate::scenario::sha256_hex(&bytes));
        assert!(m.timings.iter().any(|s| s.stage == "density"));
    }

    #[test]
    fn tsv_outputs_are_checked_too() {
        let text = r#"
kind = "toa-1d"
planes = [5.0]
[packet]
momentum = [10.0]
width = [0.5]
[grids.t]
n = 512
lo = -1.0
hi = 2.0
[output]
formats = ["csv", "tsv"]
"#;
        let dir = tempfile::tempdir().unwrap();
        let m = run_scenario(&parse_config(text).unwrap(), dir.path()).unwrap();
        let density: Vec<_> = m.outputs.iter().filter(|o| o.file.starts_with("density")).collect();
        assert_eq!(density.len(), 2);
        assert!(density.iter().all(|o| o.normalization_error.is_some_and(|e| e < WINDOW_TAIL_LIMIT)));
        assert!(m.diagnostics["semiclassical_relative_deviation@x=5"] < 0.01);
    }

    #[test]
    fn module_errors_name_the_stage() {
        let text = r#"
kind = "stationary-ode"
[grids.x]
n = 201
lo = -10.0
hi = 10.0
[stationary]
energy = 2.0
potential = { kind = "smooth-step", height = 1.0, width = 0.5 }
"#;
        let dir = tempfile::tempdir().unwrap();
        let err = run_scenario(&parse_config(text).unwrap(), dir.path()).unwrap_err();
        assert!(matches!(&err, Error::Stage { stage, .. } if stage == "integrate"), "{err}");
        assert!(!dir.path().join(MANIFEST_FILE).exists());

        let narrow = MODES.replace("kind = \"toa-1d\"", "kind = \"kijowski-check\"").replace("modes = [3.0, 4.0]", "momentum = [10.0]\nwidth = [0.5]")
            + "[grids.p]\nn = 256\nlo = -20.0\nhi = 20.0\n";
        let err = run_scenario(&parse_config(&narrow).unwrap(), dir.path()).unwrap_err();
        assert!(err.to_string().contains("half-line density"), "{err}");
    }

    #[test]
    fn output_directory_precedence() {
        let mut cfg = parse_config(MODES).unwrap();
        std::env::remove_var(OUT_DIR_ENV);
        assert_eq!(resolve_output_dir(None, &cfg), PathBuf::from("stsqm-out"));
        cfg.output.dir = Some("from-config".into());
        assert_eq!(resolve_output_dir(None, &cfg), PathBuf::from("from-config"));
        std::env::set_var(OUT_DIR_ENV, "from-env");
        assert_eq!(resolve_output_dir(None, &cfg), PathBuf::from("from-env"));
        assert_eq!(resolve_output_dir(Some(Path::new("from-cli")), &cfg), PathBuf::from("from-cli"));
        std::env::remove_var(OUT_DIR_ENV);
    }

    #[test]
    fn random_modes_follow_the_seed() {
        let a = random_modes(3, 10, 1.0, 1.0, 1.0);
        assert_eq!(a, random_modes(3, 10, 1.0, 1.0, 1.0));
        assert_ne!(a, random_modes(4, 10, 1.0, 1.0, 1.0));
        assert!(a.iter().all(|m| (0.0..1.0).contains(&m.energy) && m.p_perp.len() == 2));
    }
}
