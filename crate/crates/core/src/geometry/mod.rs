//! Charts, the metric catalog, metric jets and metric wrappers.

mod catalog;
mod curve;
mod sampling;
mod wrappers;

pub use catalog::Catalog;
pub use curve::{curve_jet, CurveSpec, Family};
pub use sampling::{random_points, Axis, Grid};
pub use wrappers::{Bump, GaugeField, ScalarField, Wrapper, ASYMMETRIC_SHAPE};

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::taylor::{Taylor, MAX_ORDER};
use crate::tensor::{Field, Values};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Plus => 1.0,
            Orientation::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Plus => Orientation::Minus,
            Orientation::Minus => Orientation::Plus,
        }
    }
}

/// A point given by its coordinates in the catalog chart of a metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: [f64; 4],
}

impl ChartPoint {
    pub fn new(coords: [f64; 4]) -> Self {
        Self { coords }
    }

    pub fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut c = self.coords;
        c[axis] += h;
        Self { coords: c }
    }
}

impl From<[f64; 4]> for ChartPoint {
    fn from(coords: [f64; 4]) -> Self {
        Self { coords }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub catalog: Catalog,
    pub orientation: Orientation,
    #[serde(default)]
    pub wrappers: Vec<Wrapper>,
}

impl MetricSpec {
    pub fn new(catalog: Catalog) -> Self {
        Self {
            catalog,
            orientation: Orientation::Plus,
            wrappers: Vec::new(),
        }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn wrap(mut self, w: Wrapper) -> Self {
        self.wrappers.push(w);
        self
    }

    /// Flat space plus an anisotropic bump `s A ψ H` with `H` =
    /// [`ASYMMETRIC_SHAPE`], supported in the ball of radius 1.5: a generic
    /// metric, neither Einstein nor conformally flat.
    pub fn bump_over_flat(amplitude: f64) -> Self {
        Self::new(Catalog::Flat).wrap(Wrapper::MetricBump {
            bump: Bump::new([0.0; 4], [1.5; 4], amplitude),
            shape: ASYMMETRIC_SHAPE,
            s: 1.0,
        })
    }

    /// `(1 + A ψ)² g` for a bump centred at `center` with isotropic `width`.
    pub fn conformal_bump(self, center: [f64; 4], width: f64, amplitude: f64) -> Self {
        self.wrap(Wrapper::ConformalBump {
            bump: Bump::new(center, [width; 4], amplitude),
            s: 1.0,
        })
    }

    pub fn kahler_rescaled(&self) -> Self {
        self.clone().wrap(Wrapper::KahlerRescale)
    }

    pub fn validate(&self) -> Result<()> {
        self.catalog.validate()?;
        for w in &self.wrappers {
            if let Wrapper::Conformal {
                omega: ScalarField::Constant { value },
            } = w
            {
                if *value <= 0.0 {
                    return Err(GeomError::NonPositiveConformalFactor {
                        value: *value,
                        coords: [f64::NAN; 4],
                    });
                }
            }
        }
        Ok(())
    }

    /// Total jet order of the catalog metric needed for an order-k result.
    pub fn base_order_for(&self, order: usize) -> usize {
        order + self.wrappers.iter().map(Wrapper::order_overhead).sum::<usize>()
    }

    /// Highest jet order this spec can produce.
    pub fn max_order(&self) -> usize {
        let overhead: usize = self.wrappers.iter().map(Wrapper::order_overhead).sum();
        let pullback = self.wrappers.iter().any(|w| matches!(w, Wrapper::Pullback { .. }));
        MAX_ORDER.saturating_sub(overhead + usize::from(pullback))
    }

    pub fn check_point(&self, p: &ChartPoint) -> Result<()> {
        self.catalog.check_point(p.coords)
    }
}

/// Metric components and their coordinate partials up to `order` at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub point: ChartPoint,
    pub order: usize,
    pub orientation: Orientation,
    /// `g_ab` as Taylor expansions around the point.
    pub g: Field,
}

impl MetricJet {
    pub fn value(&self) -> Values {
        self.g.values()
    }

    /// `∂^alpha g_ab` at the point.
    pub fn partial(&self, a: usize, b: usize, alpha: [u8; 4]) -> f64 {
        self.g[[a, b]].derivative(alpha)
    }

    pub fn truncate(&self, order: usize) -> MetricJet {
        MetricJet {
            point: self.point,
            order: order.min(self.order),
            orientation: self.orientation,
            g: self.g.truncate(order),
        }
    }
}

fn sym_field(g: [[Taylor; 4]; 4]) -> Field {
    Field::from_fn(2, |i| g[i[0]][i[1]].clone())
}

/// Cholesky test of positive-definiteness on the base-point values.
pub fn is_positive_definite(g: &Values) -> bool {
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = g[[i, j]];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Evaluate the metric jet of `spec` at `p` to the given order.
pub fn evaluate_jet(spec: &MetricSpec, p: &ChartPoint, order: usize) -> Result<MetricJet> {
    if order > spec.max_order() {
        return Err(GeomError::UnsupportedOrder {
            requested: order,
            max: spec.max_order(),
        });
    }
    let g = eval_layers(spec, spec.wrappers.len(), p.coords, order)?;
    let jet = MetricJet {
        point: *p,
        order,
        orientation: spec.orientation,
        g,
    };
    if !is_positive_definite(&jet.value()) {
        return Err(GeomError::DegenerateMetric(format!(
            "metric not positive-definite at {:?}",
            p.coords
        )));
    }
    Ok(jet)
}

fn eval_layers(spec: &MetricSpec, layers: usize, p: [f64; 4], order: usize) -> Result<Field> {
    if layers == 0 {
        spec.catalog.check_point(p)?;
        return Ok(sym_field(spec.catalog.components(p, order)));
    }
    let inner = |q: [f64; 4], k: usize| eval_layers(spec, layers - 1, q, k);
    match spec.wrappers[layers - 1] {
        Wrapper::Conformal { omega } => {
            let w = omega.expand(p, order);
            if w.value() <= 0.0 {
                return Err(GeomError::NonPositiveConformalFactor {
                    value: w.value(),
                    coords: p,
                });
            }
            Ok(inner(p, order)?.mul_scalar(&w.square()))
        }
        Wrapper::ConformalBump { bump, s } => {
            let base = inner(p, order)?;
            if s == 0.0 {
                return Ok(base);
            }
            let mut w = bump.profile(p, order).scale(s * bump.amplitude);
            w += Taylor::constant(1.0, order);
            if w.value() <= 0.0 {
                return Err(GeomError::NonPositiveConformalFactor {
                    value: w.value(),
                    coords: p,
                });
            }
            Ok(base.mul_scalar(&w.square()))
        }
        Wrapper::MetricBump { bump, shape, s } => {
            let base = inner(p, order)?;
            if s == 0.0 {
                return Ok(base);
            }
            let psi = bump.profile(p, order).scale(s * bump.amplitude);
            Ok(Field::from_fn(2, |i| {
                &base[[i[0], i[1]]] + &psi.scale(shape[i[0]][i[1]])
            }))
        }
        Wrapper::Pullback { field, s } => {
            let xi = field.components(p, order + 1);
            if s == 0.0 || xi.iter().all(Taylor::is_zero) {
                return inner(p, order);
            }
            let phi: [Taylor; 4] = std::array::from_fn(|i| {
                let mut t = Taylor::variable(i, p[i], order + 1);
                t.axpy(s, &xi[i]);
                t
            });
            let q: [f64; 4] = std::array::from_fn(|i| phi[i].value());
            let base = inner(q, order)?;
            let disp: [Taylor; 4] = std::array::from_fn(|i| {
                let mut d = phi[i].truncate(order);
                d.axpy(-q[i], &Taylor::constant(1.0, order));
                d
            });
            let composed = base.map(|t| t.compose(&disp));
            // jacobian[c][a] = ∂_a φ^c
            let jac: [[Taylor; 4]; 4] = std::array::from_fn(|c| std::array::from_fn(|a| phi[c].partial(a)));
            Ok(Field::from_fn(2, |i| {
                let (a, b) = (i[0], i[1]);
                let mut acc = Taylor::zero(order);
                for c in 0..4 {
                    let left = &jac[c][a];
                    for d in 0..4 {
                        acc += &(left * &composed[[c, d]]) * &jac[d][b];
                    }
                }
                acc
            }))
        }
        Wrapper::KahlerRescale => {
            let base = inner(p, order + 2)?;
            let jet = MetricJet {
                point: ChartPoint::new(p),
                order: order + 2,
                orientation: spec.orientation,
                g: base,
            };
            let lambda3 = crate::selfdual::lambda3_field(&jet)?;
            let omega2 = lambda3.powf(2.0 / 3.0);
            Ok(jet.g.truncate(order).mul_scalar(&omega2))
        }
    }
}

/// Wrap `spec` with the conformal factor `omega`.
pub fn conformal_wrap(spec: &MetricSpec, omega: ScalarField) -> Result<MetricSpec> {
    if let ScalarField::Constant { value } = omega {
        if value <= 0.0 {
            return Err(GeomError::NonPositiveConformalFactor {
                value,
                coords: [f64::NAN; 4],
            });
        }
    }
    if let ScalarField::Bump { bump } = omega {
        if bump.amplitude <= -1.0 {
            return Err(GeomError::NonPositiveConformalFactor {
                value: 1.0 + bump.amplitude,
                coords: bump.center,
            });
        }
    }
    Ok(spec.clone().wrap(Wrapper::Conformal { omega }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_jet_is_identity_with_zero_partials() {
        let spec = MetricSpec::new(Catalog::Flat);
        let jet = evaluate_jet(&spec, &ChartPoint::new([0.3, -1.0, 2.0, 0.1]), 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let t = &jet.g[[a, b]];
                assert_eq!(t.value(), if a == b { 1.0 } else { 0.0 });
                assert!(t.coeffs()[1..].iter().all(|&c| c == 0.0));
            }
        }
    }

    #[test]
    fn schwarzschild_closed_form() {
        // m = 1, r = 4, theta = 1.2: f = 1/2
        let spec = MetricSpec::new(Catalog::EuclideanSchwarzschild { m: 1.0 });
        let jet = evaluate_jet(&spec, &ChartPoint::new([0.0, 4.0, 1.2, 0.3]), 2).unwrap();
        let g = jet.value();
        assert_relative_eq!(g[[0, 0]], 0.5, epsilon = 1e-15);
        assert_relative_eq!(g[[1, 1]], 2.0, epsilon = 1e-15);
        assert_relative_eq!(g[[2, 2]], 16.0, epsilon = 1e-15);
        assert_relative_eq!(g[[3, 3]], 16.0 * 1.2f64.sin().powi(2), epsilon = 1e-13);
        // ∂_r g_ττ = 2m/r² ; ∂_r² g_rr = d²/dr² (r/(r-2)) = 4/(r-2)^3
        assert_relative_eq!(jet.partial(0, 0, [0, 1, 0, 0]), 0.125, epsilon = 1e-15);
        assert_relative_eq!(jet.partial(1, 1, [0, 2, 0, 0]), 0.5, epsilon = 1e-13);
    }

    #[test]
    fn constant_conformal_over_flat() {
        let spec = conformal_wrap(&MetricSpec::new(Catalog::Flat), ScalarField::Constant { value: 1.7 }).unwrap();
        let jet = evaluate_jet(&spec, &ChartPoint::new([0.0; 4]), 3).unwrap();
        assert_relative_eq!(jet.value()[[2, 2]], 1.7 * 1.7, epsilon = 1e-15);
        assert!(jet.g.iter().all(|t| t.coeffs()[1..].iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn unit_conformal_factor_is_identity() {
        let base = MetricSpec::new(Catalog::EguchiHanson { a: 1.0 });
        let spec = conformal_wrap(&base, ScalarField::Constant { value: 1.0 }).unwrap();
        let p = ChartPoint::new(base.catalog.default_point());
        let a = evaluate_jet(&base, &p, 4).unwrap();
        let b = evaluate_jet(&spec, &p, 4).unwrap();
        assert_eq!(a.g, b.g);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = MetricSpec::new(Catalog::EuclideanSchwarzschild { m: 1.0 });
        let err = evaluate_jet(&spec, &ChartPoint::new([0.0, 1.5, 1.0, 0.0]), 2).unwrap_err();
        assert_eq!(err.kind(), "PointOutsideChart");
        let err = evaluate_jet(&spec, &ChartPoint::new([0.0, 5.0, 1.0, 0.0]), 7).unwrap_err();
        assert_eq!(err.kind(), "UnsupportedOrder");
        let err = conformal_wrap(&spec, ScalarField::Constant { value: -1.0 }).unwrap_err();
        assert_eq!(err.kind(), "NonPositiveConformalFactor");
        assert!(Catalog::from_name("sphere4", &[("a".into(), -2.0)]).is_err());
    }

    #[test]
    fn positivity_check() {
        let g = Values::from_fn(2, |i| if i[0] == i[1] { 1.0 } else { 0.0 });
        assert!(is_positive_definite(&g));
        let mut bad = g.clone();
        bad[[0, 1]] = 2.0;
        bad[[1, 0]] = 2.0;
        assert!(!is_positive_definite(&bad));
    }
}
