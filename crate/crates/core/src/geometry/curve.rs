//! One-parameter metric families through a base metric.

use serde::{Deserialize, Serialize};

use super::{evaluate_jet, Bump, Catalog, ChartPoint, GaugeField, MetricJet, MetricSpec, Wrapper};
use crate::error::{GeomError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Family {
    /// Shift of the catalog scale parameter: `m(s) = m₀ + s dm`.
    Mass { dm: f64 },
    /// Pullback by `x -> x + s ξ(x)`.
    GaugeFlow { field: GaugeField },
    /// `(1 + s A ψ)² g`.
    ConformalBump { bump: Bump },
}

impl Family {
    /// Mass shift with `dm` equal to the catalog scale parameter.
    pub fn mass(cat: &Catalog) -> Option<Family> {
        cat.scale_parameter().map(|dm| Family::Mass { dm })
    }

    /// Localized gauge flow around the catalog default point.
    pub fn gauge_example(cat: &Catalog) -> Family {
        Family::GaugeFlow {
            field: GaugeField {
                bump: Bump::new(cat.default_point(), local_widths(cat, 0.4, 0.6), 1.0),
                constant: [0.2, 0.5, 0.1, 0.3],
                linear: [[0.0; 4], [0.0, 0.3, 0.1, 0.0], [0.0; 4], [0.0, 0.0, 0.2, 0.0]],
            },
        }
    }

    /// Localized conformal bump around the catalog default point.
    pub fn conformal_bump_example(cat: &Catalog) -> Family {
        Family::ConformalBump {
            bump: Bump::new(cat.default_point(), local_widths(cat, 0.5, 0.8), 0.5),
        }
    }
}

/// Widths `radial·r` along the radial coordinate, `angular` along the next
/// coordinate, unbounded elsewhere; everything `angular` without a radius.
fn local_widths(cat: &Catalog, radial: f64, angular: f64) -> [f64; 4] {
    let p = cat.default_point();
    match cat.radial_coordinate() {
        Some(i) => {
            let mut w = [f64::INFINITY; 4];
            w[i] = radial * p[i];
            w[(i + 1) % 4] = angular;
            w
        }
        None => [angular; 4],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub base: MetricSpec,
    pub family: Family,
    /// Parameter step for s-derivatives.
    pub h_s: f64,
}

impl CurveSpec {
    pub fn new(base: MetricSpec, family: Family) -> Self {
        Self {
            base,
            family,
            h_s: 1e-3,
        }
    }

    /// The metric at parameter `s`.
    pub fn member(&self, s: f64) -> Result<MetricSpec> {
        if s == 0.0 {
            return Ok(self.base.clone());
        }
        match self.family {
            Family::Mass { dm } => {
                let m0 = self.base.catalog.scale_parameter().ok_or_else(|| {
                    GeomError::InvalidParameter(format!(
                        "mass family needs a scale parameter, {} has none",
                        self.base.catalog.name()
                    ))
                })?;
                let m = m0 + s * dm;
                if m <= 0.0 {
                    return Err(GeomError::StencilOutsideValidity(format!(
                        "scale parameter {m} not positive at s = {s}"
                    )));
                }
                let mut spec = self.base.clone();
                spec.catalog = self.base.catalog.with_scale_parameter(m)?;
                Ok(spec)
            }
            Family::GaugeFlow { field } => Ok(self.base.clone().wrap(Wrapper::Pullback { field, s })),
            Family::ConformalBump { bump } => {
                if 1.0 + s * bump.amplitude <= 0.0 {
                    return Err(GeomError::StencilOutsideValidity(format!(
                        "conformal factor vanishes at s = {s}"
                    )));
                }
                Ok(self.base.clone().wrap(Wrapper::ConformalBump { bump, s }))
            }
        }
    }

    /// Conformally rescaled member `λ₃(s)^{2/3} g(s)`.
    pub fn hatted_member(&self, s: f64) -> Result<MetricSpec> {
        Ok(self.member(s)?.kahler_rescaled())
    }
}

pub fn curve_jet(curve: &CurveSpec, s: f64, p: &ChartPoint, order: usize) -> Result<MetricJet> {
    evaluate_jet(&curve.member(s)?, p, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Catalog;

    fn schwarzschild() -> MetricSpec {
        MetricSpec::new(Catalog::EuclideanSchwarzschild { m: 1.0 })
    }

    fn gauge() -> GaugeField {
        GaugeField {
            bump: Bump::new([0.0, 6.0, 1.2, 0.0], [f64::INFINITY, 2.0, 0.6, f64::INFINITY], 1.0),
            constant: [0.2, 0.5, 0.1, 0.3],
            linear: [[0.0; 4], [0.0, 0.3, 0.1, 0.0], [0.0; 4], [0.0, 0.0, 0.2, 0.0]],
        }
    }

    #[test]
    fn every_family_is_anchored_at_base() {
        let p = ChartPoint::new([0.3, 5.5, 1.1, 0.4]);
        let base = evaluate_jet(&schwarzschild(), &p, 4).unwrap();
        for family in [
            Family::Mass { dm: 0.1 },
            Family::GaugeFlow { field: gauge() },
            Family::ConformalBump {
                bump: Bump::new([0.0, 5.0, 1.2, 0.5], [f64::INFINITY, 2.0, 0.8, 2.0], 0.5),
            },
        ] {
            let curve = CurveSpec::new(schwarzschild(), family);
            assert_eq!(curve_jet(&curve, 0.0, &p, 4).unwrap().g, base.g);
        }
    }

    #[test]
    fn mass_family_is_reparameterized_catalog() {
        let p = ChartPoint::new([0.3, 5.5, 1.1, 0.4]);
        let curve = CurveSpec::new(schwarzschild(), Family::Mass { dm: 0.1 });
        let direct = evaluate_jet(&MetricSpec::new(Catalog::EuclideanSchwarzschild { m: 1.1 }), &p, 3).unwrap();
        assert_eq!(curve_jet(&curve, 1.0, &p, 3).unwrap().g, direct.g);
    }

    #[test]
    fn pullback_outside_support_is_exact() {
        let p = ChartPoint::new([0.3, 12.0, 1.1, 0.4]);
        let curve = CurveSpec::new(schwarzschild(), Family::GaugeFlow { field: gauge() });
        let base = evaluate_jet(&schwarzschild(), &p, 3).unwrap();
        assert_eq!(curve_jet(&curve, 0.05, &p, 3).unwrap().g, base.g);
    }
}
