//! Metric wrappers: conformal factors, bumps, and diffeomorphism pullbacks.

use serde::{Deserialize, Serialize};

use crate::taylor::{coordinates, Taylor};

/// Smooth compactly supported bump `exp(1 - 1/(1 - ρ²))`, equal to 1 at the
/// center. `ρ² = Σ ((x_i - c_i)/w_i)²`; coordinates with infinite width are
/// ignored, so the bump may be supported on a slab.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 4],
    pub widths: [f64; 4],
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: [f64; 4], widths: [f64; 4], amplitude: f64) -> Self {
        Self {
            center,
            widths,
            amplitude,
        }
    }

    fn rho2(&self, x: &[Taylor; 4], order: usize) -> Taylor {
        let mut rho2 = Taylor::zero(order);
        for i in 0..4 {
            if self.widths[i].is_finite() {
                let d = (&x[i] - self.center[i]).scale(1.0 / self.widths[i]);
                rho2 += d.square();
            }
        }
        rho2
    }

    /// Unit-height profile `ψ` (without the amplitude).
    pub fn profile(&self, p: [f64; 4], order: usize) -> Taylor {
        let x = coordinates(p, order);
        let rho2 = self.rho2(&x, order);
        if rho2.value() >= 1.0 {
            return Taylor::zero(order);
        }
        let one = Taylor::constant(1.0, order);
        (&one - &(&one - &rho2).recip()).exp()
    }

    /// Whether `p` lies in the open support.
    pub fn contains(&self, p: [f64; 4]) -> bool {
        self.rho2(&coordinates(p, 0), 0).value() < 1.0
    }
}

/// Vector field `ξ^i(x) = (a_i + Σ_j b_ij (x_j - c_j)) ψ(x)`, polynomial times bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeField {
    pub bump: Bump,
    pub constant: [f64; 4],
    pub linear: [[f64; 4]; 4],
}

impl GaugeField {
    pub fn components(&self, p: [f64; 4], order: usize) -> [Taylor; 4] {
        let psi = self.bump.profile(p, order);
        if psi.is_zero() {
            return std::array::from_fn(|_| Taylor::zero(order));
        }
        let x = coordinates(p, order);
        std::array::from_fn(|i| {
            let mut poly = Taylor::constant(self.constant[i], order);
            for j in 0..4 {
                if self.linear[i][j] != 0.0 {
                    poly += (&x[j] - self.bump.center[j]).scale(self.linear[i][j]);
                }
            }
            &poly * &psi
        })
    }
}

/// Positive scalar fields used as conformal factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `1 + amplitude * ψ(x)`.
    Bump {
        bump: Bump,
    },
}

impl ScalarField {
    pub fn expand(&self, p: [f64; 4], order: usize) -> Taylor {
        match self {
            ScalarField::Constant { value } => Taylor::constant(*value, order),
            ScalarField::Bump { bump } => {
                let mut t = bump.profile(p, order).scale(bump.amplitude);
                t += Taylor::constant(1.0, order);
                t
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Wrapper {
    /// `g -> Ω² g`.
    Conformal { omega: ScalarField },
    /// `g -> (1 + s A ψ)² g`.
    ConformalBump { bump: Bump, s: f64 },
    /// `g -> g + s A ψ H` with a fixed symmetric shape matrix `H`. Unlike the
    /// conformal wrappers this changes the Weyl tensor.
    MetricBump { bump: Bump, shape: [[f64; 4]; 4], s: f64 },
    /// Pullback by the flow `x -> x + s ξ(x)`.
    Pullback { field: GaugeField, s: f64 },
    /// `g -> λ₃^{2/3} g`, the conformal factor `Ω = λ₃^{1/3}` computed from the
    /// wrapped metric's own self-dual Weyl spectrum.
    KahlerRescale,
}

impl Wrapper {
    /// Extra jet orders of the inner metric needed to produce an order-k jet.
    pub fn order_overhead(&self) -> usize {
        match self {
            Wrapper::KahlerRescale => 2,
            _ => 0,
        }
    }
}

/// Default anisotropic shape used for generic (non-Einstein, non-conformally
/// flat) test metrics.
pub const ASYMMETRIC_SHAPE: [[f64; 4]; 4] = [
    [1.0, 0.3, 0.0, 0.2],
    [0.3, -0.6, 0.25, 0.0],
    [0.0, 0.25, 0.4, -0.35],
    [0.2, 0.0, -0.35, -0.8],
];
