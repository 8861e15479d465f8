//! Closed-form catalog metrics, each in one preferred chart.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Orientation;
use crate::error::{GeomError, Result};
use crate::taylor::{coordinates, Taylor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum Catalog {
    /// Euclidean space, Cartesian chart.
    Flat,
    /// `(1-2m/r) dτ² + dr²/(1-2m/r) + r² dΩ²`, chart `(τ, r, θ, φ)`.
    EuclideanSchwarzschild { m: f64 },
    /// Self-dual Taub-NUT in Gibbons-Hawking form, chart `(r, θ, φ, ψ)`.
    TaubNut { n: f64 },
    /// Eguchi-Hanson, chart `(r, θ, φ, ψ)`.
    EguchiHanson { a: f64 },
    /// Round 4-sphere of radius `a` in stereographic coordinates.
    Sphere4 { a: f64 },
    /// Product of round 2-spheres of radii `a`, `b`, stereographic on each factor.
    ProductS2xS2 { a: f64, b: f64 },
}

impl Catalog {
    pub fn name(&self) -> &'static str {
        match self {
            Catalog::Flat => "Flat",
            Catalog::EuclideanSchwarzschild { .. } => "EuclideanSchwarzschild",
            Catalog::TaubNut { .. } => "TaubNUT",
            Catalog::EguchiHanson { .. } => "EguchiHanson",
            Catalog::Sphere4 { .. } => "Sphere4",
            Catalog::ProductS2xS2 { .. } => "ProductS2xS2",
        }
    }

    pub fn all_examples() -> Vec<Catalog> {
        vec![
            Catalog::Flat,
            Catalog::EuclideanSchwarzschild { m: 1.0 },
            Catalog::TaubNut { n: 1.0 },
            Catalog::EguchiHanson { a: 1.0 },
            Catalog::Sphere4 { a: 1.0 },
            Catalog::ProductS2xS2 { a: 1.0, b: 1.0 },
        ]
    }

    pub fn coordinate_names(&self) -> [&'static str; 4] {
        match self {
            Catalog::Flat | Catalog::Sphere4 { .. } | Catalog::ProductS2xS2 { .. } => ["x0", "x1", "x2", "x3"],
            Catalog::EuclideanSchwarzschild { .. } => ["tau", "r", "theta", "phi"],
            Catalog::TaubNut { .. } | Catalog::EguchiHanson { .. } => ["r", "theta", "phi", "psi"],
        }
    }

    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Catalog::Flat => vec![],
            Catalog::EuclideanSchwarzschild { m } => vec![("m", m)],
            Catalog::TaubNut { n } => vec![("n", n)],
            Catalog::EguchiHanson { a } => vec![("a", a)],
            Catalog::Sphere4 { a } => vec![("a", a)],
            Catalog::ProductS2xS2 { a, b } => vec![("a", a), ("b", b)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.parameters() {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeomError::InvalidParameter(format!(
                    "{}: parameter {name} = {v} must be strictly positive",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// Orientation in which the metric is half-flat (`W+ = 0`), if any.
    pub fn half_flat_orientation(&self) -> Option<Orientation> {
        match self {
            Catalog::TaubNut { .. } => Some(Orientation::Plus),
            Catalog::EguchiHanson { .. } => Some(Orientation::Minus),
            _ => None,
        }
    }

    /// Index of the radial coordinate for charts that have one.
    pub fn radial_coordinate(&self) -> Option<usize> {
        match self {
            Catalog::EuclideanSchwarzschild { .. } => Some(1),
            Catalog::TaubNut { .. } | Catalog::EguchiHanson { .. } => Some(0),
            _ => None,
        }
    }

    /// The three coordinates spanning a level set of the radius, with their
    /// ranges (two sphere angles and the circle fiber).
    pub fn level_set_coordinates(&self) -> Option<[(usize, f64, f64); 3]> {
        match *self {
            Catalog::EuclideanSchwarzschild { m } => Some([(0, 0.0, 8.0 * PI * m), (2, 0.0, PI), (3, 0.0, 2.0 * PI)]),
            Catalog::TaubNut { .. } => Some([(1, 0.0, PI), (2, 0.0, 2.0 * PI), (3, 0.0, 4.0 * PI)]),
            Catalog::EguchiHanson { .. } => Some([(1, 0.0, PI), (2, 0.0, 2.0 * PI), (3, 0.0, 2.0 * PI)]),
            _ => None,
        }
    }

    pub fn check_point(&self, p: [f64; 4]) -> Result<()> {
        let fail = |reason: String| GeomError::PointOutsideChart {
            chart: self.name(),
            coords: p,
            reason,
        };
        if p.iter().any(|x| !x.is_finite()) {
            return Err(fail("non-finite coordinate".into()));
        }
        let polar = |theta: f64| -> Result<()> {
            if theta <= 0.0 || theta >= PI {
                Err(fail(format!("theta = {theta} outside (0, pi)")))
            } else {
                Ok(())
            }
        };
        match *self {
            Catalog::Flat | Catalog::Sphere4 { .. } | Catalog::ProductS2xS2 { .. } => Ok(()),
            Catalog::EuclideanSchwarzschild { m } => {
                if p[1] <= 2.0 * m {
                    return Err(fail(format!("r = {} not > 2m = {}", p[1], 2.0 * m)));
                }
                polar(p[2])
            }
            Catalog::TaubNut { .. } => {
                if p[0] <= 0.0 {
                    return Err(fail(format!("r = {} not > 0", p[0])));
                }
                polar(p[1])
            }
            Catalog::EguchiHanson { a } => {
                if p[0] <= a {
                    return Err(fail(format!("r = {} not > a = {a}", p[0])));
                }
                polar(p[1])
            }
        }
    }

    /// Per-coordinate length scale used to size finite-difference steps.
    pub fn coordinate_scale(&self, p: [f64; 4]) -> [f64; 4] {
        match self.radial_coordinate() {
            Some(i) => {
                let mut s = [1.0; 4];
                s[i] = p[i].abs().max(1.0);
                s
            }
            None => [1.0; 4],
        }
    }

    /// Box used for random sampling inside the chart domain.
    pub fn sample_box(&self) -> [(f64, f64); 4] {
        let angles = |r: (f64, f64), fiber: f64| [r, (0.3, PI - 0.3), (0.0, 2.0 * PI), (0.0, fiber)];
        match *self {
            Catalog::Flat => [(-1.0, 1.0); 4],
            Catalog::EuclideanSchwarzschild { m } => [
                (0.0, 8.0 * PI * m),
                (3.0 * m, 20.0 * m),
                (0.3, PI - 0.3),
                (0.0, 2.0 * PI),
            ],
            Catalog::TaubNut { n } => angles((0.5 * n, 10.0 * n), 4.0 * PI),
            Catalog::EguchiHanson { a } => angles((1.2 * a, 5.0 * a), 2.0 * PI),
            Catalog::Sphere4 { a } => [(-2.0 * a, 2.0 * a); 4],
            Catalog::ProductS2xS2 { a, b } => [
                (-1.5 * a, 1.5 * a),
                (-1.5 * a, 1.5 * a),
                (-1.5 * b, 1.5 * b),
                (-1.5 * b, 1.5 * b),
            ],
        }
    }

    pub fn default_point(&self) -> [f64; 4] {
        match *self {
            Catalog::Flat | Catalog::Sphere4 { .. } | Catalog::ProductS2xS2 { .. } => [0.1, 0.2, -0.1, 0.3],
            Catalog::EuclideanSchwarzschild { m } => [0.5, 5.0 * m, 1.1, 0.7],
            Catalog::TaubNut { n } => [3.0 * n, 1.1, 0.7, 0.4],
            Catalog::EguchiHanson { a } => [2.0 * a, 1.1, 0.7, 0.4],
        }
    }

    /// Metric components as Taylor expansions around `p`.
    pub fn components(&self, p: [f64; 4], order: usize) -> [[Taylor; 4]; 4] {
        let x = coordinates(p, order);
        let c = |v: f64| Taylor::constant(v, order);
        let zero = || Taylor::zero(order);
        let mut g: [[Taylor; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| zero()));
        match *self {
            Catalog::Flat => {
                for (a, row) in g.iter_mut().enumerate() {
                    row[a] = c(1.0);
                }
            }
            Catalog::EuclideanSchwarzschild { m } => {
                let r = &x[1];
                let f = c(1.0) - &(&c(2.0 * m) / r);
                let r2 = r.square();
                g[1][1] = f.recip();
                g[0][0] = f;
                g[3][3] = &r2 * &x[2].sin().square();
                g[2][2] = r2;
            }
            Catalog::TaubNut { n } => {
                let r = &x[0];
                let v = c(1.0) + &(&c(2.0 * n) / r);
                let vinv = v.recip();
                let r2 = r.square();
                let (s, co) = (x[1].sin(), x[1].cos());
                let k = 4.0 * n * n;
                g[0][0] = v.clone();
                g[1][1] = &v * &r2;
                g[2][2] = &(&(&v * &r2) * &s.square()) + &(k * &(&co.square() * &vinv));
                g[3][3] = k * &vinv;
                g[2][3] = k * &(&co * &vinv);
                g[3][2] = g[2][3].clone();
            }
            Catalog::EguchiHanson { a } => {
                let r = &x[0];
                let r2 = r.square();
                let h = c(1.0) - &(&c(a.powi(4)) / &r2.square());
                let (s, co) = (x[1].sin(), x[1].cos());
                let q = r2.scale(0.25);
                g[0][0] = h.recip();
                g[1][1] = q.clone();
                g[2][2] = &q * &(&s.square() + &(&h * &co.square()));
                g[3][3] = &q * &h;
                g[2][3] = &(&q * &h) * &co;
                g[3][2] = g[2][3].clone();
            }
            Catalog::Sphere4 { a } => {
                let rho2 = x.iter().fold(c(a * a), |acc, xi| &acc + &xi.square());
                let w = &c(4.0 * a.powi(4)) / &rho2.square();
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = w.clone();
                }
            }
            Catalog::ProductS2xS2 { a, b } => {
                let w1 = &c(4.0 * a.powi(4)) / &(&(&c(a * a) + &x[0].square()) + &x[1].square()).square();
                let w2 = &c(4.0 * b.powi(4)) / &(&(&c(b * b) + &x[2].square()) + &x[3].square()).square();
                g[0][0] = w1.clone();
                g[1][1] = w1;
                g[2][2] = w2.clone();
                g[3][3] = w2;
            }
        }
        g
    }

    /// Scale the characteristic parameter (used by mass-type curves).
    pub fn with_scale_parameter(&self, value: f64) -> Result<Catalog> {
        let out = match *self {
            Catalog::EuclideanSchwarzschild { .. } => Catalog::EuclideanSchwarzschild { m: value },
            Catalog::TaubNut { .. } => Catalog::TaubNut { n: value },
            Catalog::EguchiHanson { .. } => Catalog::EguchiHanson { a: value },
            Catalog::Sphere4 { .. } => Catalog::Sphere4 { a: value },
            _ => {
                return Err(GeomError::InvalidParameter(format!(
                    "{} has no single scale parameter",
                    self.name()
                )))
            }
        };
        out.validate()?;
        Ok(out)
    }

    pub fn scale_parameter(&self) -> Option<f64> {
        match *self {
            Catalog::EuclideanSchwarzschild { m } => Some(m),
            Catalog::TaubNut { n } => Some(n),
            Catalog::EguchiHanson { a } | Catalog::Sphere4 { a } => Some(a),
            _ => None,
        }
    }

    /// Build from a catalog name and named parameters.
    pub fn from_name(name: &str, params: &[(String, f64)]) -> Result<Catalog> {
        let get = |key: &str, default: f64| {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .unwrap_or(default)
        };
        let key: String = name
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .map(|c| c.to_ascii_lowercase())
            .collect();
        let cat = match key.as_str() {
            "flat" => Catalog::Flat,
            "euclideanschwarzschild" | "schwarzschild" => Catalog::EuclideanSchwarzschild { m: get("m", 1.0) },
            "taubnut" => Catalog::TaubNut { n: get("n", 1.0) },
            "eguchihanson" => Catalog::EguchiHanson { a: get("a", 1.0) },
            "sphere4" => Catalog::Sphere4 { a: get("a", 1.0) },
            "products2xs2" | "s2xs2" => Catalog::ProductS2xS2 {
                a: get("a", 1.0),
                b: get("b", 1.0),
            },
            other => return Err(GeomError::InvalidParameter(format!("unknown catalog metric '{other}'"))),
        };
        cat.validate()?;
        Ok(cat)
    }
}
