use std::collections::BTreeMap;

use ndarray::{ArrayD, Axis as NdAxis};

use crate::error::{Error, Result};
use crate::field::check_shape;
use crate::spectral::UniformGrid1D;

/// A labelled sampling axis of a distribution, e.g. `t [time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionAxis {
    pub label: String,
    pub unit: String,
    pub grid: UniformGrid1D,
}

impl DistributionAxis {
    pub fn new(label: &str, unit: &str, grid: UniformGrid1D) -> Self {
        Self {
            label: label.to_string(),
            unit: unit.to_string(),
            grid,
        }
    }

    pub fn time(grid: UniformGrid1D) -> Self {
        Self::new("t", "time", grid)
    }

    pub fn length(label: &str, grid: UniformGrid1D) -> Self {
        Self::new(label, "length", grid)
    }
}

/// Nonnegative density samples over arrival variables.
///
/// `samples` hold the density as defined by the producing operation (already divided by the
/// state norm where the definition calls for it). `normalization_constant` is the discrete
/// integral `Σ samples · cell`, i.e. the mass captured by the window, so
/// `samples / normalization_constant` integrates to one on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalDistribution {
    pub axes: Vec<DistributionAxis>,
    pub samples: ArrayD<f64>,
    pub normalization_constant: f64,
    /// False for densities of non-normalizable states, which are reported unnormalized.
    pub proper: bool,
    pub metadata: BTreeMap<String, String>,
}

impl ArrivalDistribution {
    pub fn new(axes: Vec<DistributionAxis>, samples: ArrayD<f64>) -> Result<Self> {
        let grids: Vec<UniformGrid1D> = axes.iter().map(|a| a.grid).collect();
        check_shape(&grids, samples.shape())?;
        if let Some(v) = samples.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::domain(format!("density samples must be finite and nonnegative, found {v}")));
        }
        let cell: f64 = grids.iter().map(|g| g.spacing()).product();
        let normalization_constant = samples.sum() * cell;
        if !(normalization_constant > 0.0) {
            return Err(Error::ZeroNorm("density vanishes on the sampled window".into()));
        }
        Ok(Self {
            axes,
            samples,
            normalization_constant,
            proper: true,
            metadata: BTreeMap::new(),
        })
    }

    pub fn improper(mut self) -> Self {
        self.proper = false;
        self.metadata.insert("normalizable".into(), "false".into());
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.grid.spacing()).product()
    }

    /// `Σ samples · cell`; for proper densities this is the captured mass.
    pub fn total(&self) -> f64 {
        self.normalization_constant
    }

    /// Samples rescaled to integrate to one on the grid.
    pub fn normalized(&self) -> ArrayD<f64> {
        &self.samples / self.normalization_constant
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }

    /// Marginal over every axis except `axis`, on the grid of `axis`.
    pub fn marginal(&self, axis: usize) -> Result<Vec<f64>> {
        if axis >= self.dims() {
            return Err(Error::IndexOutOfRange { index: axis, len: self.dims() });
        }
        let mut m = self.samples.clone();
        for a in (0..self.dims()).rev() {
            if a != axis {
                let w = self.axes[a].grid.spacing();
                m = m.sum_axis(NdAxis(a)) * w;
            }
        }
        Ok(m.iter().copied().collect())
    }

    /// `Σ v^order · ρ · Δv` along `axis`, using the normalized marginal.
    pub fn moment_along(&self, axis: usize, order: u32) -> Result<f64> {
        let marginal = self.marginal(axis)?;
        let g = self.axes[axis].grid;
        let s: f64 = marginal
            .iter()
            .enumerate()
            .map(|(k, r)| g.point(k).powi(order as i32) * r)
            .sum::<f64>()
            * g.spacing();
        Ok(s / self.normalization_constant)
    }
}

/// Mean (`order = 1`) or second raw moment (`order = 2`) of a one-dimensional distribution.
pub fn moments(dist: &ArrivalDistribution, order: u32) -> Result<f64> {
    if dist.dims() != 1 {
        return Err(Error::domain(format!("moments need a one-axis distribution, got {} axes", dist.dims())));
    }
    if !(1..=2).contains(&order) {
        return Err(Error::domain(format!("moment order must be 1 or 2, got {order}")));
    }
    dist.moment_along(0, order)
}

/// Variance from the first two moments.
pub fn variance(dist: &ArrivalDistribution) -> Result<f64> {
    let m1 = moments(dist, 1)?;
    Ok(moments(dist, 2)? - m1 * m1)
}

/// Signed samples over time, such as a probability current (negative values are physical).
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSeries {
    pub t: Vec<f64>,
    pub j: Vec<f64>,
    pub plane: f64,
}

impl FluxSeries {
    pub fn new(t: Vec<f64>, j: Vec<f64>, plane: f64) -> Result<Self> {
        if t.len() != j.len() {
            return Err(Error::domain(format!("flux series has {} times but {} values", t.len(), j.len())));
        }
        Ok(Self { t, j, plane })
    }

    pub fn negated(&self) -> Self {
        Self {
            t: self.t.clone(),
            j: self.j.iter().map(|v| -v).collect(),
            plane: self.plane,
        }
    }

    pub fn min(&self) -> f64 {
        self.j.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A maximal run of consecutive negative samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackflowInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub min_flux: f64,
}

/// Contiguous intervals where the flux is strictly negative; empty for nonnegative series.
pub fn detect_backflow(flux: &FluxSeries) -> Vec<BackflowInterval> {
    let mut out = Vec::new();
    let mut current: Option<BackflowInterval> = None;
    for (&t, &j) in flux.t.iter().zip(&flux.j) {
        if j < 0.0 {
            let iv = current.get_or_insert(BackflowInterval {
                t_start: t,
                t_end: t,
                min_flux: j,
            });
            iv.t_end = t;
            iv.min_flux = iv.min_flux.min(j);
        } else if let Some(iv) = current.take() {
            out.push(iv);
        }
    }
    out.extend(current);
    out
}
