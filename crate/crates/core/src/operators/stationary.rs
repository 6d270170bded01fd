use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Branch;
use crate::spectral::{principal_sqrt, PhysicalConstants, UniformGrid1D};

/// Default lower bound on `|V|` in the stationary equation, which divides by `V`.
pub const DEFAULT_V_MIN: f64 = 1e-6;

/// A real potential profile `V(x)` with its derivative.
pub trait Potential: Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPotential(pub f64);

impl Potential for ConstantPotential {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }
    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }
}

/// `V(x) = V₀/(1 + e^{−x/a})`, or `V₀/(1 + e^{−x/a}) + offset` when shifted away from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep {
    pub height: f64,
    pub width: f64,
    pub offset: f64,
}

impl Potential for SmoothStep {
    fn value(&self, x: f64) -> f64 {
        self.offset + self.height / (1.0 + (-x / self.width).exp())
    }
    fn derivative(&self, x: f64) -> f64 {
        let e = (-x / self.width).exp();
        self.height * e / (self.width * (1.0 + e) * (1.0 + e))
    }
}

/// Potential from a pair of closures `(V, V')`.
pub struct FnPotential<F, G> {
    pub value: F,
    pub derivative: G,
}

impl<F, G> Potential for FnPotential<F, G>
where
    F: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }
}

/// Value and first derivative at the left end of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarySeed {
    pub value: Complex64,
    pub derivative: Complex64,
}

impl StationarySeed {
    pub fn new(value: Complex64, derivative: Complex64) -> Self {
        Self { value, derivative }
    }

    /// Seed of the plane wave `e^{i s k x/ħ}` at `x`, with `k = √(2m(ε − V))`.
    pub fn plane_wave(x: f64, energy: f64, potential: f64, direction: f64, constants: &PhysicalConstants) -> Self {
        let k = principal_sqrt(2.0 * constants.mass * (energy - potential)) / constants.hbar * direction;
        let value = (Complex64::i() * k * x).exp();
        Self::new(value, Complex64::i() * k * value)
    }

    pub fn scaled(self, c: Complex64) -> Self {
        Self::new(c * self.value, c * self.derivative)
    }

    pub fn conj(self) -> Self {
        Self::new(self.value.conj(), self.derivative.conj())
    }
}

/// One branch of `φ̄(ε|x)` on a spatial grid, with its first derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryBranch {
    pub branch: Branch,
    pub values: Vec<Complex64>,
    pub derivatives: Vec<Complex64>,
}

/// Both branches of a stationary solution at energy `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryProfile {
    pub x_grid: UniformGrid1D,
    pub energy: f64,
    pub phi_plus: Vec<Complex64>,
    pub phi_minus: Vec<Complex64>,
    pub constants: PhysicalConstants,
}

impl StationaryProfile {
    pub fn solve(
        plus: StationarySeed,
        minus: StationarySeed,
        energy: f64,
        potential: &dyn Potential,
        x_grid: &UniformGrid1D,
        constants: &PhysicalConstants,
        v_min: f64,
    ) -> Result<Self> {
        let p = integrate_stationary_sc(plus, energy, potential, x_grid, Branch::Plus, constants, v_min)?;
        let m = integrate_stationary_sc(minus, energy, potential, x_grid, Branch::Minus, constants, v_min)?;
        Ok(Self {
            x_grid: *x_grid,
            energy,
            phi_plus: p.values,
            phi_minus: m.values,
            constants: *constants,
        })
    }
}

/// Right-hand side of `φ'' = (V'/2V)φ' + (2m/ħ²)(V ∓ iħ√(ε/2m)·V'/2V − ε)φ`.
struct Rhs<'a> {
    potential: &'a dyn Potential,
    energy: f64,
    /// `∓ iħ√(ε/2m)`
    drift: Complex64,
    two_m_over_hbar2: f64,
    v_min: f64,
}

impl Rhs<'_> {
    fn eval(&self, x: f64, y: [Complex64; 2]) -> Result<[Complex64; 2]> {
        let v = self.potential.value(x);
        if !(v.abs() >= self.v_min) {
            return Err(Error::SingularCoefficient {
                x,
                value: v.abs(),
                v_min: self.v_min,
            });
        }
        let ratio = self.potential.derivative(x) / (2.0 * v);
        let coefficient = self.two_m_over_hbar2 * (v + self.drift * ratio - self.energy);
        Ok([y[1], ratio * y[1] + coefficient * y[0]])
    }
}

/// Classical RK4 integration of the stationary space-conditional equation for one branch,
/// marching from `x_grid.lo()` across every grid point.
pub fn integrate_stationary_sc(
    seed: StationarySeed,
    energy: f64,
    potential: &dyn Potential,
    x_grid: &UniformGrid1D,
    branch: Branch,
    constants: &PhysicalConstants,
    v_min: f64,
) -> Result<StationaryBranch> {
    if !(v_min > 0.0) {
        return Err(Error::domain(format!("v_min must be positive, got {v_min}")));
    }
    let hbar = constants.hbar;
    let rhs = Rhs {
        potential,
        energy,
        drift: -branch.sign() * Complex64::i() * hbar * principal_sqrt(energy / (2.0 * constants.mass)),
        two_m_over_hbar2: 2.0 * constants.mass / (hbar * hbar),
        v_min,
    };
    let h = x_grid.spacing();
    let n = x_grid.len();
    let mut values = Vec::with_capacity(n);
    let mut derivatives = Vec::with_capacity(n);
    let mut y = [seed.value, seed.derivative];
    let axpy = |y: [Complex64; 2], s: f64, k: [Complex64; 2]| [y[0] + s * k[0], y[1] + s * k[1]];
    for j in 0..n {
        let x = x_grid.point(j);
        rhs.eval(x, y)?;
        values.push(y[0]);
        derivatives.push(y[1]);
        if j + 1 == n {
            break;
        }
        let k1 = rhs.eval(x, y)?;
        let k2 = rhs.eval(x + 0.5 * h, axpy(y, 0.5 * h, k1))?;
        let k3 = rhs.eval(x + 0.5 * h, axpy(y, 0.5 * h, k2))?;
        let k4 = rhs.eval(x + h, axpy(y, h, k3))?;
        for c in 0..2 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    Ok(StationaryBranch {
        branch,
        values,
        derivatives,
    })
}
