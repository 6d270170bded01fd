use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::TableFormat;
use crate::arrival::{ArrivalDistribution, FluxSeries};
use crate::error::{Error, Result};

/// Floats are written with 17 significant digits, which round-trips every `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// One named column; numeric columns carry a unit in the header as `label [unit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub label: String,
    pub unit: Option<String>,
    pub values: Vec<String>,
}

impl Column {
    pub fn real(label: &str, unit: &str, values: &[f64]) -> Self {
        Self {
            label: label.to_string(),
            unit: Some(unit.to_string()),
            values: values.iter().map(|v| format_real(*v)).collect(),
        }
    }

    pub fn text(label: &str, values: Vec<String>) -> Self {
        Self {
            label: label.to_string(),
            unit: None,
            values,
        }
    }

    pub fn header(&self) -> String {
        match &self.unit {
            Some(u) if !u.is_empty() => format!("{} [{u}]", self.label),
            _ => self.label.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, column: Column) -> Self {
        self.columns.push(column);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    fn check(&self) -> Result<()> {
        let n = self.rows();
        if let Some(c) = self.columns.iter().find(|c| c.values.len() != n) {
            return Err(Error::domain(format!("column `{}` has {} rows, expected {n}", c.label, c.values.len())));
        }
        Ok(())
    }

    /// A one-axis distribution as `axis, density` columns.
    pub fn from_distribution(dist: &ArrivalDistribution, density_label: &str) -> Result<Self> {
        if dist.dims() != 1 {
            return Err(Error::domain("tables hold one-axis distributions; flatten with `from_distribution_long`"));
        }
        let axis = &dist.axes[0];
        let values: Vec<f64> = dist.samples.iter().copied().collect();
        Ok(Table::new()
            .with(Column::real(&axis.label, &axis.unit, &axis.grid.points()))
            .with(Column::real(density_label, &format!("1/{}", axis.unit), &values)))
    }

    /// A two-axis distribution in long form, one row per cell in row-major order.
    pub fn from_distribution_long(dist: &ArrivalDistribution, density_label: &str) -> Result<Self> {
        if dist.dims() != 2 {
            return Err(Error::domain("long tables need a two-axis distribution"));
        }
        let (a, b) = (&dist.axes[0], &dist.axes[1]);
        let (pa, pb) = (a.grid.points(), b.grid.points());
        let mut ca = Vec::with_capacity(dist.samples.len());
        let mut cb = Vec::with_capacity(dist.samples.len());
        let mut v = Vec::with_capacity(dist.samples.len());
        for (idx, s) in dist.samples.indexed_iter() {
            ca.push(pa[idx[0]]);
            cb.push(pb[idx[1]]);
            v.push(*s);
        }
        Ok(Table::new()
            .with(Column::real(&a.label, &a.unit, &ca))
            .with(Column::real(&b.label, &b.unit, &cb))
            .with(Column::real(density_label, &format!("1/({}·{})", a.unit, b.unit), &v)))
    }

    pub fn from_flux(flux: &FluxSeries) -> Self {
        Table::new()
            .with(Column::real("t", "time", &flux.t))
            .with(Column::real("current", "1/time", &flux.j))
    }
}

/// A written file with its checksum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
    /// `|Σ ρ·Δ − 1|` of the re-read density columns, when the file holds normalized densities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization_error: Option<f64>,
}

/// Writes `table` to `path` with the format's delimiter.
pub fn emit_table(table: &Table, path: &Path, format: TableFormat) -> Result<OutputRecord> {
    table.check()?;
    let mut w = csv::WriterBuilder::new().delimiter(format.delimiter()).from_writer(Vec::new());
    w.write_record(table.columns.iter().map(|c| c.header()))?;
    for r in 0..table.rows() {
        w.write_record(table.columns.iter().map(|c| c.values[r].as_str()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fs::write(path, &bytes)?;
    Ok(OutputRecord {
        file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_hex(&bytes),
        rows: table.rows(),
        normalization_error: None,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Re-reads `path` and returns `max_c |Σ_k ρ_c[k]·spacing − 1|` over the named columns.
pub fn reread_normalization(path: &Path, format: TableFormat, columns: &[String], spacing: f64) -> Result<f64> {
    let mut r = csv::ReaderBuilder::new().delimiter(format.delimiter()).from_path(path)?;
    let headers = r.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::domain(format!("column `{c}` missing from {}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut sums = vec![0.0; idx.len()];
    for rec in r.records() {
        let rec = rec?;
        for (s, &i) in sums.iter_mut().zip(&idx) {
            let v: f64 = rec[i]
                .parse()
                .map_err(|e| Error::domain(format!("bad number `{}` in {}: {e}", &rec[i], path.display())))?;
            *s += v;
        }
    }
    Ok(sums.iter().map(|s| (s * spacing - 1.0).abs()).fold(0.0, f64::max))
}

/// Writes `table` once per requested format under `dir/stem.<ext>`.
pub fn emit_all(table: &Table, dir: &Path, stem: &str, formats: &[TableFormat]) -> Result<Vec<(PathBuf, TableFormat, OutputRecord)>> {
    formats
        .iter()
        .map(|f| {
            let path = dir.join(format!("{stem}.{}", f.extension()));
            emit_table(table, &path, *f).map(|rec| (path, *f, rec))
        })
        .collect()
}
