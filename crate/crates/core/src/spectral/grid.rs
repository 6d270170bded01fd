use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Action and mass units. Both default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let c = Self { hbar, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::domain(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::domain(format!("mass must be positive, got {}", self.mass)));
        }
        Ok(())
    }

    /// `(2πħ)^(-1/2)`, the normalization of one continuum plane wave.
    pub fn plane_wave_norm(&self) -> f64 {
        (2.0 * std::f64::consts::PI * self.hbar).sqrt().recip()
    }
}

/// Periodic uniform grid with points `lo + k * spacing`, `k = 0..n`.
///
/// The upper bound `hi` is excluded; it is identified with `lo` by periodicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid1D {
    n: usize,
    lo: f64,
    hi: f64,
    spacing: f64,
}

pub fn make_grid(n: usize, lo: f64, hi: f64) -> Result<UniformGrid1D> {
    UniformGrid1D::new(n, lo, hi)
}

impl UniformGrid1D {
    pub fn new(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("grid needs at least 2 points, got {n}")));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::domain(format!("grid bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self {
            n,
            lo,
            hi,
            spacing: (hi - lo) / n as f64,
        })
    }

    /// Grid of `n` points with the given spacing, starting at `lo`.
    pub fn with_spacing(n: usize, lo: f64, spacing: f64) -> Result<Self> {
        Self::new(n, lo, lo + spacing * n as f64)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn point(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    /// Index of the grid point closest to `x`, or `None` when `x` lies outside `[lo, hi)`.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo - 0.5 * self.spacing && x < self.hi - 0.5 * self.spacing) {
            return None;
        }
        let k = ((x - self.lo) / self.spacing).round();
        Some((k.max(0.0) as usize).min(self.n - 1))
    }

    /// Spacing of the conjugate (energy or momentum) grid, `2πħ / (n * spacing)`.
    pub fn conjugate_spacing(&self, hbar: f64) -> f64 {
        2.0 * std::f64::consts::PI * hbar / self.length()
    }

    /// Index offset of the conjugate zero mode: conjugate point `j` sits at `(j - offset) * dκ`.
    pub(crate) fn conjugate_offset(&self) -> usize {
        self.n / 2
    }

    /// The conjugate grid, ascending and containing zero at index `n / 2`.
    pub fn conjugate(&self, hbar: f64) -> UniformGrid1D {
        let dk = self.conjugate_spacing(hbar);
        let lo = -(self.conjugate_offset() as f64) * dk;
        Self {
            n: self.n,
            lo,
            hi: lo + dk * self.n as f64,
            spacing: dk,
        }
    }

    /// True when `other` has the same size and matching points to a relative tolerance.
    pub fn matches(&self, other: &UniformGrid1D, rel_tol: f64) -> bool {
        let scale = self.length().max(self.lo.abs()).max(self.hi.abs());
        self.n == other.n
            && (self.lo - other.lo).abs() <= rel_tol * scale
            && (self.spacing - other.spacing).abs() <= rel_tol * self.spacing
    }
}

pub(crate) fn check_conjugate(coordinate: &UniformGrid1D, conjugate: &UniformGrid1D, hbar: f64) -> Result<()> {
    if coordinate.conjugate(hbar).matches(conjugate, 1e-10) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "grid with {} points on [{}, {}) is not conjugate to the momentum grid with {} points at spacing {}",
            coordinate.len(),
            coordinate.lo(),
            coordinate.hi(),
            conjugate.len(),
            conjugate.spacing()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn small_grids() {
        let g = make_grid(4, 0.0, 4.0).unwrap();
        assert_eq!(g.points(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.spacing(), 1.0);

        let g = make_grid(2, -1.0, 1.0).unwrap();
        assert_eq!(g.points(), vec![-1.0, 0.0]);
        assert_eq!(g.spacing(), 1.0);
    }

    #[test]
    fn conjugate_spacing_by_hand() {
        // spacing = 100/1024; conjugate spacing = 2π / (1024 * 100/1024) = 2π/100
        let g = make_grid(1024, -50.0, 50.0).unwrap();
        assert!((g.spacing() - 100.0 / 1024.0).abs() < 1e-15);
        assert!((g.conjugate_spacing(1.0) - 2.0 * PI / 100.0).abs() < 1e-15);
        assert!((g.conjugate_spacing(2.5) - 2.5 * 2.0 * PI / 100.0).abs() < 1e-15);
        let c = g.conjugate(1.0);
        assert_eq!(c.point(512), 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(make_grid(1, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(make_grid(8, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(make_grid(8, 2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn nearest_index_bounds() {
        let g = make_grid(10, 0.0, 10.0).unwrap();
        assert_eq!(g.nearest_index(3.4), Some(3));
        assert_eq!(g.nearest_index(3.6), Some(4));
        assert_eq!(g.nearest_index(-0.4), Some(0));
        assert_eq!(g.nearest_index(-1.0), None);
        assert_eq!(g.nearest_index(9.4), Some(9));
        assert_eq!(g.nearest_index(9.6), None);
    }

    #[test]
    fn constants_validation() {
        assert!(PhysicalConstants::new(0.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0).is_err());
        let c = PhysicalConstants::default();
        assert_eq!((c.hbar, c.mass), (1.0, 1.0));
    }
}
