//! Half-line sampling rules for the longitudinal momentum `p_x ≥ 0`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::spectral::PhysicalConstants;

pub const PANEL_ORDER: usize = 8;

/// Tail norm allowed beyond the truncation point of a half-line rule. Densities feel a
/// discarded tail of mass τ at order √τ, hence the small default.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq)]
pub enum HalfLineRule {
    /// Composite Gauss–Legendre on `[0, p_max]` with `panels` equal panels.
    GaussLegendre { order: usize, panels: usize, p_max: f64 },
    /// Uniform lattice `p_k = k·spacing`, `k = 1..=count`. States on a lattice are periodic in
    /// time with the revival period `4πmħ/spacing²`, and their norm is taken over one period.
    Lattice { spacing: f64, count: usize },
    /// Isolated modes with unit weight (non-normalizable plane waves).
    Modes,
}

/// Nodes and weights along `p_x ∈ [0, ∞)`.
///
/// `weights` are used when synthesizing fields, `norm_weights` when computing
/// `Σ_k ν_k |φ̃(p_k)|²`. They coincide for Gauss–Legendre rules.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineAxis {
    rule: HalfLineRule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    norm_weights: Option<Vec<f64>>,
    tail_mass: f64,
}

fn reference_rule(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order > 0"));
    let mut pairs = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

impl HalfLineAxis {
    pub fn gauss_legendre(p_max: f64, panels: usize) -> Result<Self> {
        Self::gauss_legendre_with_order(p_max, panels, PANEL_ORDER)
    }

    pub fn gauss_legendre_with_order(p_max: f64, panels: usize, order: usize) -> Result<Self> {
        if !(p_max > 0.0 && p_max.is_finite()) || panels == 0 || order == 0 {
            return Err(Error::domain(format!(
                "Gauss–Legendre half-line rule needs p_max > 0 and at least one panel, got p_max = {p_max}, panels = {panels}"
            )));
        }
        let reference = reference_rule(order);
        let h = p_max / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for panel in 0..panels {
            let a = panel as f64 * h;
            for &(x, w) in &reference {
                nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        Ok(Self {
            rule: HalfLineRule::GaussLegendre { order, panels, p_max },
            norm_weights: Some(weights.clone()),
            nodes,
            weights,
            tail_mass: 0.0,
        })
    }

    /// Gauss–Legendre rule truncated where the tail of `density` (the `|φ̃|²` marginal over
    /// `p_x ≥ 0`) drops below `tail_tolerance` of its total, with panels of about `panel_width`.
    pub fn truncated<F>(density: F, panel_width: f64, tail_tolerance: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        if !(panel_width > 0.0) || !(tail_tolerance > 0.0) {
            return Err(Error::domain("panel width and tail tolerance must be positive"));
        }
        let reference = reference_rule(PANEL_ORDER);
        let panel_mass = |a: f64| -> f64 {
            reference
                .iter()
                .map(|&(x, w)| 0.5 * panel_width * w * density(a + 0.5 * panel_width * (x + 1.0)))
                .sum()
        };
        const MAX_PANELS: usize = 2_000_000;
        let mut masses: Vec<f64> = Vec::new();
        let mut total = 0.0;
        let mut peak: f64 = 0.0;
        loop {
            let m = panel_mass(masses.len() as f64 * panel_width);
            if !m.is_finite() || m < 0.0 {
                return Err(Error::domain("momentum density must be finite and nonnegative"));
            }
            masses.push(m);
            total += m;
            peak = peak.max(m);
            // stop once well past the bulk: the last 64 panels together hold a negligible share
            if masses.len() >= 64 && peak > 0.0 {
                let recent: f64 = masses[masses.len() - 64..].iter().sum();
                if recent <= 1e-6 * tail_tolerance * total {
                    break;
                }
            }
            if masses.len() >= MAX_PANELS {
                return Err(Error::domain("momentum density does not decay on the half line"));
            }
        }
        if total == 0.0 {
            return Err(Error::ZeroNorm("momentum density vanishes on p_x ≥ 0".into()));
        }
        let mut tail = 0.0;
        let mut panels = masses.len();
        while panels > 1 && tail + masses[panels - 1] < tail_tolerance * total {
            tail += masses[panels - 1];
            panels -= 1;
        }
        let mut axis = Self::gauss_legendre(panels as f64 * panel_width, panels)?;
        axis.tail_mass = tail / total;
        Ok(axis)
    }

    pub fn lattice(spacing: f64, count: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) || count == 0 {
            return Err(Error::domain(format!("lattice needs spacing > 0 and count ≥ 1, got {spacing}, {count}")));
        }
        let nodes: Vec<f64> = (1..=count).map(|k| k as f64 * spacing).collect();
        // ∫₀^T dt over one revival period T = 4πmħ/Δp² turns Δp²(p/m)T/(2πħ) into 2p.
        let norm_weights = nodes.iter().map(|p| 2.0 * p).collect();
        Ok(Self {
            rule: HalfLineRule::Lattice { spacing, count },
            weights: vec![spacing; count],
            norm_weights: Some(norm_weights),
            nodes,
            tail_mass: 0.0,
        })
    }

    /// Isolated plane-wave modes at the given momenta.
    pub fn modes(momenta: Vec<f64>) -> Result<Self> {
        if momenta.is_empty() || momenta.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::domain("modes must be finite and nonnegative"));
        }
        Ok(Self {
            rule: HalfLineRule::Modes,
            weights: vec![1.0; momenta.len()],
            nodes: momenta,
            norm_weights: None,
            tail_mass: 0.0,
        })
    }

    pub fn rule(&self) -> &HalfLineRule {
        &self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `None` for non-normalizable mode sets.
    pub fn norm_weights(&self) -> Option<&[f64]> {
        self.norm_weights.as_deref()
    }

    pub fn is_normalizable(&self) -> bool {
        self.norm_weights.is_some()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Revival period of a lattice rule, `4πmħ/Δp²`.
    pub fn revival_period(&self, constants: &PhysicalConstants) -> Option<f64> {
        match self.rule {
            HalfLineRule::Lattice { spacing, .. } => {
                Some(4.0 * std::f64::consts::PI * constants.mass * constants.hbar / (spacing * spacing))
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.rule {
            HalfLineRule::GaussLegendre { order, panels, p_max } => {
                format!("gauss-legendre order {order}, {panels} panels on [0, {p_max}], tail {:.3e}", self.tail_mass)
            }
            HalfLineRule::Lattice { spacing, count } => format!("lattice spacing {spacing}, {count} modes"),
            HalfLineRule::Modes => format!("{} isolated modes", self.nodes.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_rule_integrates_polynomials() {
        let axis = HalfLineAxis::gauss_legendre(3.0, 5).unwrap();
        let integral: f64 = axis.nodes().iter().zip(axis.weights()).map(|(p, w)| w * p.powi(7)).sum();
        assert!((integral - 3f64.powi(8) / 8.0).abs() < 1e-10);
        assert!(axis.nodes().iter().all(|p| *p > 0.0 && *p < 3.0));
    }

    #[test]
    fn truncation_meets_tail_tolerance() {
        // normal density centred at 10 with σ = 0.5; tail beyond p is ½ erfc((p-10)/(σ√2))
        let density = |p: f64| (-(p - 10.0f64).powi(2) / 0.5).exp();
        let axis = HalfLineAxis::truncated(density, 0.1, 1e-10).unwrap();
        let HalfLineRule::GaussLegendre { p_max, .. } = *axis.rule() else { panic!() };
        // 1e-10 tail of a normal is reached near 6.36σ
        assert!(p_max > 10.0 + 6.0 * 0.5 && p_max < 10.0 + 7.0 * 0.5, "p_max = {p_max}");
        assert!(axis.tail_mass() < 1e-10);
    }

    #[test]
    fn lattice_and_modes() {
        let lat = HalfLineAxis::lattice(0.5, 4).unwrap();
        assert_eq!(lat.nodes(), &[0.5, 1.0, 1.5, 2.0]);
        assert_eq!(lat.norm_weights().unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        let c = PhysicalConstants::default();
        assert!((lat.revival_period(&c).unwrap() - 16.0 * std::f64::consts::PI).abs() < 1e-12);
        let modes = HalfLineAxis::modes(vec![2.0]).unwrap();
        assert!(!modes.is_normalizable());
        assert!(HalfLineAxis::modes(vec![-1.0]).is_err());
    }
}
