//! Levi-Civita connection and curvature of a metric jet.
//!
//! Sign convention: `(∇_a ∇_b - ∇_b ∇_a) v_c = R_{abc}^d v_d`, Ricci
//! `R_{ac} = R_{abc}^b`. All tensors are stored with lower indices and the
//! covariant-derivative index first.

use crate::error::{GeomError, Result};
use crate::geometry::{MetricJet, Orientation};
use crate::taylor::Taylor;
use crate::tensor::{for_each_index, levi_civita, Field, Values};

/// Inverse of a symmetric positive-definite 4x4 Taylor matrix (Gauss-Jordan,
/// no pivoting needed for SPD input).
pub fn inverse(g: &Field) -> Field {
    let order = g.order();
    let mut a: Vec<Vec<Taylor>> = (0..4).map(|i| (0..4).map(|j| g[[i, j]].clone()).collect()).collect();
    let mut inv: Vec<Vec<Taylor>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| Taylor::constant(if i == j { 1.0 } else { 0.0 }, order))
                .collect()
        })
        .collect();
    for col in 0..4 {
        let piv = a[col][col].recip();
        for j in 0..4 {
            a[col][j] = &a[col][j] * &piv;
            inv[col][j] = &inv[col][j] * &piv;
        }
        for row in 0..4 {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..4 {
                let t = &f * &a[col][j];
                a[row][j] -= t;
                let t = &f * &inv[col][j];
                inv[row][j] -= t;
            }
        }
    }
    Field::from_fn(2, |i| {
        // symmetrize against rounding
        (&inv[i[0]][i[1]] + &inv[i[1]][i[0]]).scale(0.5)
    })
}

/// Determinant of a symmetric positive-definite 4x4 Taylor matrix.
pub fn determinant(g: &Field) -> Taylor {
    let mut a: Vec<Vec<Taylor>> = (0..4).map(|i| (0..4).map(|j| g[[i, j]].clone()).collect()).collect();
    let mut det = Taylor::constant(1.0, g.order());
    for col in 0..4 {
        det = &det * &a[col][col];
        let piv = a[col][col].recip();
        for row in col + 1..4 {
            let f = &a[row][col] * &piv;
            for j in col..4 {
                let t = &f * &a[col][j];
                a[row][j] -= t;
            }
        }
    }
    det
}

/// Metric, inverse metric and Christoffel symbols as Taylor fields.
#[derive(Clone, Debug)]
pub struct Connection {
    pub g: Field,
    pub ginv: Field,
    /// `christoffel[[c, a, b]] = Γ^c_{ab}`.
    pub christoffel: Field,
    pub orientation: Orientation,
}

impl Connection {
    pub fn new(jet: &MetricJet) -> Result<Self> {
        if jet.order < 1 {
            return Err(GeomError::InsufficientJetOrder {
                have: jet.order,
                need: 1,
            });
        }
        let g = jet.g.clone();
        let ginv = inverse(&g);
        let dg = g.partial(); // [e][a][b] = ∂_e g_ab
        let first = Field::from_fn(3, |i| {
            let (c, a, b) = (i[0], i[1], i[2]);
            (&(&dg[[a, b, c]] + &dg[[b, a, c]]) - &dg[[c, a, b]]).scale(0.5)
        });
        let christoffel = Field::from_fn(3, |i| {
            let (c, a, b) = (i[0], i[1], i[2]);
            let mut s = Taylor::zero(jet.order - 1);
            for d in 0..4 {
                s += &ginv[[c, d]] * &first[[d, a, b]];
            }
            s
        });
        Ok(Self {
            g,
            ginv,
            christoffel,
            orientation: jet.orientation,
        })
    }

    pub fn order(&self) -> usize {
        self.g.order()
    }

    /// `(∇T)_{e a1..an} = ∂_e T_{a1..an} - Σ_i Γ^f_{e a_i} T_{a1..f..an}`.
    pub fn covariant_derivative(&self, t: &Field) -> Field {
        let d = t.partial();
        let rank = t.rank();
        let order = d.order().min(self.christoffel.order());
        Field::from_fn(rank + 1, |idx| {
            let e = idx[0];
            let rest = &idx[1..];
            let mut s = d.get(idx).truncate(order);
            let mut j = rest.to_vec();
            for slot in 0..rank {
                for f in 0..4 {
                    j[slot] = f;
                    let gam = &self.christoffel[[f, e, rest[slot]]];
                    s -= gam * t.get(&j);
                }
                j[slot] = rest[slot];
            }
            s
        })
    }

    /// `ε_{abcd} = o √det g [abcd]`.
    pub fn volume_form(&self) -> Field {
        let root = determinant(&self.g).sqrt().scale(self.orientation.sign());
        Field::from_fn(4, |idx| root.scale(levi_civita(idx)))
    }

    pub fn sqrt_det(&self) -> Taylor {
        determinant(&self.g).sqrt()
    }

    pub fn values(&self) -> (Values, Values) {
        (self.g.values(), self.ginv.values())
    }
}

pub fn covariant_derivative(field: &Field, jet: &MetricJet) -> Result<Field> {
    if field.order() < 1 {
        return Err(GeomError::InsufficientJetOrder {
            have: field.order(),
            need: 1,
        });
    }
    Ok(Connection::new(jet)?.covariant_derivative(field))
}

/// Curvature tensors as Taylor fields (order = jet order - 2).
#[derive(Clone, Debug)]
pub struct CurvaturePack {
    pub connection: Connection,
    pub riemann: Field,
    pub ricci: Field,
    pub scalar: Taylor,
    pub weyl: Field,
    pub trace_free_ricci: Field,
    /// `∇_e W_{abcd}`, present when the jet order is at least 3.
    pub nabla_weyl: Option<Field>,
    /// `∇_a E_{bc}`, present when the jet order is at least 3.
    pub nabla_e: Option<Field>,
}

impl CurvaturePack {
    pub fn order(&self) -> usize {
        self.riemann.order()
    }

    /// `|Rm|_g` at the point.
    pub fn riemann_norm(&self) -> f64 {
        self.riemann.values().norm(&self.connection.ginv.values())
    }

    pub fn require_nabla(&self) -> Result<(&Field, &Field)> {
        match (&self.nabla_weyl, &self.nabla_e) {
            (Some(w), Some(e)) => Ok((w, e)),
            _ => Err(GeomError::InsufficientJetOrder {
                have: self.order() + 2,
                need: 3,
            }),
        }
    }
}

pub fn curvature_pack(jet: &MetricJet) -> Result<CurvaturePack> {
    if jet.order < 2 {
        return Err(GeomError::InsufficientJetOrder {
            have: jet.order,
            need: 2,
        });
    }
    let connection = Connection::new(jet)?;
    let gam = &connection.christoffel;
    let dgam = gam.partial(); // [e][c][a][b] = ∂_e Γ^c_ab
    let order = jet.order - 2;
    // R_{abc}^d
    let mixed = Field::from_fn(4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        let mut s = &dgam[[b, d, a, c]] - &dgam[[a, d, b, c]];
        for e in 0..4 {
            s += &gam[[e, a, c]] * &gam[[d, b, e]];
            s -= &gam[[e, b, c]] * &gam[[d, a, e]];
        }
        s
    });
    let g = connection.g.truncate(order);
    let ginv = connection.ginv.truncate(order);
    let riemann = Field::from_fn(4, |i| {
        let mut s = Taylor::zero(order);
        for e in 0..4 {
            s += &mixed[[i[0], i[1], i[2], e]] * &g[[e, i[3]]];
        }
        s
    });
    let ricci = Field::from_fn(2, |i| {
        let mut s = Taylor::zero(order);
        for b in 0..4 {
            s += &mixed[[i[0], b, i[1], b]];
        }
        (&s + &{
            let mut t = Taylor::zero(order);
            for b in 0..4 {
                t += &mixed[[i[1], b, i[0], b]];
            }
            t
        })
            .scale(0.5)
    });
    let mut scalar = Taylor::zero(order);
    for_each_index(2, |i| scalar += &ginv[[i[0], i[1]]] * &ricci[[i[0], i[1]]]);
    let weyl = Field::from_fn(4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        let ric_part = &(&(&(&g[[a, c]] * &ricci[[d, b]]) - &(&g[[a, d]] * &ricci[[c, b]]))
            - &(&g[[b, c]] * &ricci[[d, a]]))
            + &(&g[[b, d]] * &ricci[[c, a]]);
        let scal_part = &(&(&g[[a, c]] * &g[[d, b]]) - &(&g[[a, d]] * &g[[c, b]])) * &scalar;
        &(&riemann[[a, b, c, d]] - &ric_part.scale(0.5)) + &scal_part.scale(1.0 / 6.0)
    });
    let trace_free_ricci = Field::from_fn(2, |i| &ricci[[i[0], i[1]]] - &(&g[[i[0], i[1]]] * &scalar).scale(0.25));
    let (nabla_weyl, nabla_e) = if jet.order >= 3 {
        (
            Some(connection.covariant_derivative(&weyl)),
            Some(connection.covariant_derivative(&trace_free_ricci)),
        )
    } else {
        (None, None)
    };
    Ok(CurvaturePack {
        connection,
        riemann,
        ricci,
        scalar,
        weyl,
        trace_free_ricci,
        nabla_weyl,
        nabla_e,
    })
}

/// Raise the second index of a 2-tensor: `T_a^b = T_{ac} g^{cb}`.
pub fn raise_second(t: &Values, ginv: &Values) -> Values {
    Values::from_fn(2, |i| (0..4).map(|c| t[[i[0], c]] * ginv[[c, i[1]]]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{evaluate_jet, Catalog, ChartPoint, MetricSpec};

    fn pack(cat: Catalog, p: [f64; 4], order: usize) -> CurvaturePack {
        let jet = evaluate_jet(&MetricSpec::new(cat), &ChartPoint::new(p), order).unwrap();
        curvature_pack(&jet).unwrap()
    }

    #[test]
    fn flat_has_no_curvature() {
        let pk = pack(Catalog::Flat, [0.1, 0.2, 0.3, 0.4], 3);
        assert!(pk.riemann.values().max_abs() == 0.0);
        assert!(pk.nabla_weyl.unwrap().values().max_abs() == 0.0);
    }

    #[test]
    fn sphere_scalar_curvature() {
        let pk = pack(Catalog::Sphere4 { a: 1.0 }, [0.3, -0.2, 0.5, 0.1], 2);
        assert!((pk.scalar.value() - 12.0).abs() < 1e-12);
        assert!(pk.weyl.values().max_abs() < 1e-12);
        let pk = pack(Catalog::Sphere4 { a: 2.0 }, [0.3, -0.2, 0.5, 0.1], 2);
        assert!((pk.scalar.value() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn schwarzschild_is_ricci_flat() {
        let pk = pack(Catalog::EuclideanSchwarzschild { m: 1.0 }, [0.0, 5.0, 1.0, 0.2], 2);
        let scale = pk.riemann_norm();
        assert!(scale > 1e-3);
        assert!(pk.trace_free_ricci.values().max_abs() < 1e-10 * scale);
        assert!(pk.scalar.value().abs() < 1e-10 * scale);
        // Kretschmann invariant 48 m² / r⁶
        assert!((scale * scale - 48.0 / 5f64.powi(6)).abs() < 1e-12);
    }

    #[test]
    fn insufficient_order() {
        let jet = evaluate_jet(&MetricSpec::new(Catalog::Flat), &ChartPoint::new([0.0; 4]), 1).unwrap();
        assert_eq!(curvature_pack(&jet).unwrap_err().kind(), "InsufficientJetOrder");
    }

    #[test]
    fn inverse_and_determinant() {
        let jet = evaluate_jet(
            &MetricSpec::new(Catalog::TaubNut { n: 1.0 }),
            &ChartPoint::new([2.0, 1.0, 0.5, 0.3]),
            3,
        )
        .unwrap();
        let ginv = inverse(&jet.g);
        for_each_index(2, |i| {
            let mut s = Taylor::zero(3);
            for k in 0..4 {
                s += &jet.g[[i[0], k]] * &ginv[[k, i[1]]];
            }
            let target = if i[0] == i[1] { 1.0 } else { 0.0 };
            assert!((s.value() - target).abs() < 1e-12);
            assert!(s.coeffs()[1..].iter().all(|c| c.abs() < 1e-11));
        });
        // det of the TN metric: V² r⁴ sin²θ · 4n² (the ψ block has det 4n² r² sin²θ)
        let (r, th) = (2.0f64, 1.0f64);
        let v = 1.0 + 2.0 / r;
        let det = determinant(&jet.g).value();
        assert!((det - v * v * r.powi(4) * th.sin().powi(2) * 4.0).abs() < 1e-10 * det);
    }
}
