//! Exterior calculus on (tensor-valued) forms stored as Taylor fields.
//!
//! A tensor-valued `k`-form keeps its form indices in the leading `k` slots;
//! trailing slots are carried along and differentiated covariantly.

use crate::curvature::Connection;
use crate::taylor::Taylor;
use crate::tensor::{levi_civita, Field, Values};

/// `(dT)_{a0..ak ...} = Σ_i (-1)^i ∇_{a_i} T_{a0..âi..ak ...}`, i.e.
/// `(k+1) ∇_{[a0} T_{a1..ak] ...}` for a `k`-form in the leading slots.
pub fn exterior_d(conn: &Connection, t: &Field, k: usize) -> Field {
    let nab = conn.covariant_derivative(t);
    Field::from_fn(t.rank() + 1, |idx| {
        let mut acc = Taylor::zero(nab.order());
        let mut j = Vec::with_capacity(idx.len());
        for i in 0..=k {
            j.clear();
            j.push(idx[i]);
            j.extend(idx[..=k].iter().enumerate().filter(|&(n, _)| n != i).map(|(_, &x)| x));
            j.extend_from_slice(&idx[k + 1..]);
            let term = nab.get(&j);
            if i % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    })
}

/// `(d* T)_{...} = -g^{bc} ∇_b T_{c ...}`.
pub fn codifferential(conn: &Connection, t: &Field) -> Field {
    let nab = conn.covariant_derivative(t);
    contract_leading(&nab, &conn.ginv).scale(-1.0)
}

/// `□T = g^{ab} ∇_a ∇_b T`.
pub fn rough_laplacian(conn: &Connection, t: &Field) -> Field {
    let nn = conn.covariant_derivative(&conn.covariant_derivative(t));
    contract_leading(&nn, &conn.ginv)
}

/// Laplace-de Rham operator `dd* + d*d` on a tensor-valued `k`-form.
pub fn hodge_laplacian(conn: &Connection, t: &Field, k: usize) -> Field {
    let a = if k > 0 {
        exterior_d(conn, &codifferential(conn, t), k - 1)
    } else {
        Field::zeros(t.rank(), t.order().saturating_sub(2))
    };
    let b = codifferential(conn, &exterior_d(conn, t, k));
    a.add(&b)
}

/// `g^{ab} T_{ab...}`.
pub fn contract_leading(t: &Field, ginv: &Field) -> Field {
    Field::from_fn(t.rank() - 2, |rest| {
        let mut acc = Taylor::zero(t.order().min(ginv.order()));
        let mut j = vec![0; rest.len() + 2];
        j[2..].copy_from_slice(rest);
        for a in 0..4 {
            for b in 0..4 {
                j[0] = a;
                j[1] = b;
                acc += &ginv[[a, b]] * t.get(&j);
            }
        }
        acc
    })
}

/// `(⋆T)_{ab ...} = ½ ε_{ab}{}^{cd} T_{cd ...}` on the leading two slots.
pub fn star_leading(t: &Field, conn: &Connection) -> Field {
    let eps = conn.volume_form();
    let ginv = &conn.ginv;
    // ε_{ab}^{cd}
    let mixed = Field::from_fn(4, |i| {
        let mut acc = Taylor::zero(eps.order());
        for e in 0..4 {
            for f in 0..4 {
                if levi_civita(&[i[0], i[1], e, f]) != 0.0 {
                    acc += &(&eps[[i[0], i[1], e, f]] * &ginv[[e, i[2]]]) * &ginv[[f, i[3]]];
                }
            }
        }
        acc
    });
    Field::from_fn(t.rank(), |idx| {
        let mut acc = Taylor::zero(t.order().min(mixed.order()));
        let mut j = idx.to_vec();
        for c in 0..4 {
            for d in 0..4 {
                if c != d && idx[0] != idx[1] {
                    j[0] = c;
                    j[1] = d;
                    acc += &mixed[[idx[0], idx[1], c, d]] * t.get(&j);
                }
            }
        }
        acc.scale(0.5)
    })
}

/// Self-dual part `½(T + ⋆T)` in the leading two slots.
pub fn self_dual_part(t: &Field, conn: &Connection) -> Field {
    t.add(&star_leading(t, conn)).scale(0.5)
}

/// `(⋆α)_{bcd} = α^a ε_{abcd}` for a 1-form given with upper index.
pub fn star_vector(v_up: &[f64; 4], eps: &Values) -> Values {
    Values::from_fn(3, |i| (0..4).map(|a| v_up[a] * eps[[a, i[0], i[1], i[2]]]).sum())
}

/// `(⋆β)_a = (1/6) β^{bcd} ε_{bcda}` for a 3-form (same convention as
/// [`star_vector`]).
pub fn star_three_form(beta: &Values, eps: &Values, ginv: &Values) -> [f64; 4] {
    let up = crate::tensor::raise_all(beta, ginv);
    std::array::from_fn(|a| {
        let mut s = 0.0;
        crate::tensor::for_each_index(3, |i| s += eps[[i[0], i[1], i[2], a]] * up[[i[0], i[1], i[2]]]);
        s / 6.0
    })
}

/// `(F∧u)_{abc} = F_{ab} u_c + F_{bc} u_a + F_{ca} u_b`.
pub fn wedge_two_one(f: &Values, u: &[f64; 4]) -> Values {
    Values::from_fn(3, |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        f[[a, b]] * u[c] + f[[b, c]] * u[a] + f[[c, a]] * u[b]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{evaluate_jet, Catalog, ChartPoint, MetricSpec};
    use crate::taylor::coordinates;

    fn conn(cat: Catalog, p: [f64; 4], order: usize) -> Connection {
        Connection::new(&evaluate_jet(&MetricSpec::new(cat), &ChartPoint::new(p), order).unwrap()).unwrap()
    }

    #[test]
    fn d_squared_vanishes() {
        let p = [1.5, 0.9, 0.3, 0.2];
        let c = conn(Catalog::TaubNut { n: 1.0 }, p, 4);
        let x = coordinates(p, 4);
        let u = Field::from_fn(1, |i| (&x[(i[0] + 1) % 4] * &x[i[0]]).sin());
        let ddu = exterior_d(&c, &exterior_d(&c, &u, 1), 2);
        assert!(ddu.values().max_abs() < 1e-12);
    }

    #[test]
    fn star_squares_to_one_on_two_forms() {
        let p = [0.2, 4.0, 1.1, 0.3];
        let c = conn(Catalog::EuclideanSchwarzschild { m: 1.0 }, p, 1);
        let f = Field::from_fn(2, |i| {
            Taylor::constant(levi_civita(&[i[0], i[1], 2, 3]) + 0.3 * (i[0] as f64 - i[1] as f64), 1)
        });
        let ss = star_leading(&star_leading(&f, &c), &c);
        assert!(ss.sub(&f).values().max_abs() < 1e-12);
    }

    #[test]
    fn codifferential_of_gradient_is_minus_laplacian() {
        let p = [0.3, -0.4, 0.5, 0.1];
        let c = conn(Catalog::Sphere4 { a: 1.0 }, p, 3);
        let x = coordinates(p, 3);
        let phi = Field::from_fn(0, |_| (&x[0] * &x[1]).exp());
        let du = exterior_d(&c, &phi, 0);
        let lhs = codifferential(&c, &du);
        let rhs = rough_laplacian(&c, &phi);
        assert!((lhs.values().as_slice()[0] + rhs.values().as_slice()[0]).abs() < 1e-12);
    }
}
