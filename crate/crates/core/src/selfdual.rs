//! Self-dual 2-forms, the self-dual Weyl endomorphism and its spectrum.
//!
//! With an oriented orthonormal coframe `θ^p` the self-dual basis is
//! `f^k = (θ^0∧θ^k + θ^l∧θ^m)/√2` for cyclic `(k, l, m)`, normalised so that
//! `f_{ab} f^{ab} = 2`. The eigenvalues `λ_i` of `W⁺` are those of the
//! endomorphism `F_{ab} -> ½ W_{ab}^{cd} F_{cd}`, so that
//! `W⁺_{abcd} = Σ λ_i F^i_{ab} F^i_{cd}` for unit eigenforms.

use crate::curvature::{curvature_pack, CurvaturePack};
use crate::error::{GeomError, Result};
use crate::geometry::{MetricJet, Orientation};
use crate::taylor::Taylor;
use crate::tensor::{Field, Values};

/// `λ₃` below this multiple of `|Rm|_g` counts as zero.
pub const ZERO_LAMBDA3_REL: f64 = 1e-9;
/// Relative gap `2λ₃ - 2λ₂` below which the top eigenvalue is not simple.
pub const SIMPLE_GAP_REL: f64 = 1e-7;
/// Coordinates smaller than this are skipped by the eigenvector sign rule.
pub const SIGN_CUTOFF: f64 = 1e-8;

const CYCLIC: [(usize, usize, usize); 3] = [(1, 2, 3), (2, 3, 1), (3, 1, 2)];

/// Orthonormal frame `e_p^a` and coframe `θ^p_a` as Taylor fields.
#[derive(Clone, Debug)]
pub struct Tetrad {
    /// `frame[[p, a]] = e_p^a`.
    pub frame: Field,
    /// `coframe[[p, a]] = θ^p_a`.
    pub coframe: Field,
}

/// Gram-Schmidt on the coordinate frame; the last leg is flipped for
/// negative orientation so that `ε(e_0, e_1, e_2, e_3) = +1`.
pub fn tetrad(g: &Field, orientation: Orientation) -> Tetrad {
    let order = g.order();
    let ip = |u: &[Taylor; 4], v: &[Taylor; 4]| {
        let mut s = Taylor::zero(order);
        for a in 0..4 {
            for b in 0..4 {
                if !u[a].is_zero() && !v[b].is_zero() {
                    s += &(&u[a] * &g[[a, b]]) * &v[b];
                }
            }
        }
        s
    };
    let mut frame: Vec<[Taylor; 4]> = Vec::with_capacity(4);
    for p in 0..4 {
        let mut u: [Taylor; 4] = std::array::from_fn(|a| Taylor::constant(if a == p { 1.0 } else { 0.0 }, order));
        for q in 0..p {
            let c = ip(&u, &frame[q]);
            for a in 0..4 {
                let t = &c * &frame[q][a];
                u[a] -= t;
            }
        }
        let inv = ip(&u, &u).sqrt().recip();
        for x in u.iter_mut() {
            *x = &*x * &inv;
        }
        frame.push(u);
    }
    if orientation == Orientation::Minus {
        for x in frame[3].iter_mut() {
            *x = -&*x;
        }
    }
    let frame = Field::from_fn(2, |i| frame[i[0]][i[1]].clone());
    let coframe = Field::from_fn(2, |i| {
        let mut s = Taylor::zero(order);
        for b in 0..4 {
            s += &g[[i[1], b]] * &frame[[i[0], b]];
        }
        s
    });
    Tetrad { frame, coframe }
}

fn wedge_pair(legs: &Field, p: usize, q: usize, a: usize, b: usize) -> Taylor {
    &(&legs[[p, a]] * &legs[[q, b]]) - &(&legs[[q, a]] * &legs[[p, b]])
}

/// `(θ^0∧θ^k ± θ^l∧θ^m)/√2` built from `legs` (coframe gives forms, frame
/// gives bivectors). `sign = +1` is self-dual, `-1` anti-self-dual.
fn basis_from(legs: &Field, sign: f64) -> [Field; 3] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    std::array::from_fn(|n| {
        let (k, l, m) = CYCLIC[n];
        Field::from_fn(2, |i| {
            let (a, b) = (i[0], i[1]);
            let mut t = wedge_pair(legs, 0, k, a, b);
            t.axpy(sign, &wedge_pair(legs, l, m, a, b));
            t.scale(r)
        })
    })
}

/// Self-dual basis `f^k_{ab}` (lower indices).
pub fn sd_basis(t: &Tetrad) -> [Field; 3] {
    basis_from(&t.coframe, 1.0)
}

/// Anti-self-dual basis (lower indices).
pub fn asd_basis(t: &Tetrad) -> [Field; 3] {
    basis_from(&t.coframe, -1.0)
}

fn bivectors(t: &Tetrad, sign: f64) -> [Field; 3] {
    basis_from(&t.frame, sign)
}

/// `(⋆F)_{ab} = ½ ε_{abcd} F^{cd}`.
pub fn hodge_star(f: &Values, eps: &Values, ginv: &Values) -> Values {
    let up = crate::tensor::raise_all(f, ginv);
    Values::from_fn(2, |i| {
        let mut s = 0.0;
        for c in 0..4 {
            for d in 0..4 {
                s += eps[[i[0], i[1], c, d]] * up[[c, d]];
            }
        }
        0.5 * s
    })
}

/// `M_{ij} = ½ S^i W S^j` for bivectors `S` (upper indices) and a 4-tensor.
fn contract(w: &Field, s: &[Field; 3]) -> [[Taylor; 3]; 3] {
    let order = w.order().min(s[0].order());
    let half: Vec<Field> = s
        .iter()
        .map(|si| {
            Field::from_fn(2, |cd| {
                let mut acc = Taylor::zero(order);
                for a in 0..4 {
                    for b in 0..4 {
                        let x = &si[[a, b]];
                        if !x.is_zero() {
                            acc += x * &w[[a, b, cd[0], cd[1]]];
                        }
                    }
                }
                acc
            })
        })
        .collect();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = Taylor::zero(order);
            for c in 0..4 {
                for d in 0..4 {
                    acc += &half[i][[c, d]] * &s[j][[c, d]];
                }
            }
            acc.scale(0.5)
        })
    })
}

/// Symmetric 3x3 eigenproblem by cyclic Jacobi rotations. Eigenvalues are
/// ascending; `vectors[i]` is the unit eigenvector for `values[i]`.
pub fn sym_eigen3(m: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = m;
    for i in 0..3 {
        for j in 0..i {
            let s = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = s;
            a[j][i] = s;
        }
    }
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    for _ in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.map(|i| a[i][i]);
    let vectors = order.map(|i| [v[0][i], v[1][i], v[2][i]]);
    (values, vectors.map(fix_sign))
}

/// First coordinate of magnitude above the cutoff is made non-negative.
pub fn fix_sign(v: [f64; 3]) -> [f64; 3] {
    let lead = v.iter().find(|x| x.abs() >= SIGN_CUTOFF).copied().unwrap_or(0.0);
    if lead < 0.0 {
        v.map(|x| -x)
    } else {
        v
    }
}

/// Spectral data of `W⁺` (or `W⁻`) at a point.
#[derive(Clone, Debug)]
pub struct SdWeylSystem {
    /// Ascending eigenvalues `λ₁ ≤ λ₂ ≤ λ₃`.
    pub lambda: [f64; 3],
    /// Eigenvectors in the basis `f^k`.
    pub vectors: [[f64; 3]; 3],
    /// Basis forms `f^k_{ab}`.
    pub basis: [Values; 3],
    /// Basis bivectors `f^{k ab}`.
    pub bivectors: [Values; 3],
    /// Unit eigenforms `F^i_{ab}` with `|F^i|² = 2`.
    pub forms: [Values; 3],
    /// `W^±_{abcd}`.
    pub weyl_part: Values,
    pub weyl_part_norm: f64,
    pub riemann_norm: f64,
    /// `2λ₃ - 2λ₂`.
    pub gap: f64,
    pub simple_top: bool,
}

impl SdWeylSystem {
    /// `½ f^i T f^j` for a 4-tensor given by its components.
    pub fn project(&self, t: impl Fn(usize, usize, usize, usize) -> f64) -> [[f64; 3]; 3] {
        let half: Vec<[[f64; 4]; 4]> = self
            .bivectors
            .iter()
            .map(|s| {
                std::array::from_fn(|c| {
                    std::array::from_fn(|d| {
                        let mut acc = 0.0;
                        for a in 0..4 {
                            for b in 0..4 {
                                acc += s[[a, b]] * t(a, b, c, d);
                            }
                        }
                        acc
                    })
                })
            })
            .collect();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut acc = 0.0;
                for c in 0..4 {
                    for d in 0..4 {
                        acc += half[i][c][d] * self.bivectors[j][[c, d]];
                    }
                }
                0.5 * acc
            })
        })
    }

    pub fn lambda3(&self) -> f64 {
        self.lambda[2]
    }

    /// Errors unless `λ₃` is positive and simple.
    pub fn require_simple_positive(&self) -> Result<()> {
        if self.lambda[2] <= ZERO_LAMBDA3_REL * self.riemann_norm {
            return Err(GeomError::ZeroLambda3 {
                lambda3: self.lambda[2],
                scale: self.riemann_norm,
            });
        }
        if !self.simple_top {
            return Err(GeomError::DegenerateEigenvalue {
                gap: self.gap,
                threshold: gap_threshold(self.weyl_part_norm),
            });
        }
        Ok(())
    }
}

fn gap_threshold(weyl_norm: f64) -> f64 {
    SIMPLE_GAP_REL * weyl_norm.max(1.0)
}

fn combine(coef: &[f64; 3], basis: &[Values; 3]) -> Values {
    Values::from_fn(2, |i| (0..3).map(|k| coef[k] * basis[k][[i[0], i[1]]]).sum())
}

fn system(pack: &CurvaturePack, sign: f64) -> SdWeylSystem {
    let g0 = pack.connection.g.truncate(0);
    let t = tetrad(&g0, pack.connection.orientation);
    let basis = basis_from(&t.coframe, sign).map(|f| f.values());
    let biv_fields = bivectors(&t, sign);
    let m = contract(&pack.weyl.truncate(0), &biv_fields).map(|row| row.map(|x| x.value()));
    let bivectors = biv_fields.map(|f| f.values());
    let (mu, vectors) = sym_eigen3(m);
    let lambda = mu.map(|x| 0.5 * x);
    let forms = vectors.map(|v| combine(&v, &basis));
    let weyl_part = Values::from_fn(4, |i| {
        let mut s = 0.0;
        for p in 0..3 {
            for q in 0..3 {
                s += 0.5 * m[p][q] * basis[p][[i[0], i[1]]] * basis[q][[i[2], i[3]]];
            }
        }
        s
    });
    let ginv = pack.connection.ginv.values();
    let weyl_part_norm = weyl_part.norm(&ginv);
    let gap = 2.0 * (lambda[2] - lambda[1]);
    SdWeylSystem {
        lambda,
        vectors,
        basis,
        bivectors,
        forms,
        weyl_part,
        weyl_part_norm,
        riemann_norm: pack.riemann_norm(),
        gap,
        simple_top: gap > gap_threshold(weyl_part_norm),
    }
}

/// Spectral system of `W⁺` for the jet's orientation.
pub fn weyl_plus_system(pack: &CurvaturePack) -> SdWeylSystem {
    system(pack, 1.0)
}

/// Spectral system of `W⁻` (anti-self-dual forms).
pub fn weyl_minus_system(pack: &CurvaturePack) -> SdWeylSystem {
    system(pack, -1.0)
}

/// Eigen-data of `W⁺` for one simple eigenvalue, as Taylor expansions.
#[derive(Clone, Debug)]
pub struct EigenJet {
    pub index: usize,
    /// `λ_i`.
    pub lambda: Taylor,
    /// Unit eigenform `F^i_{ab}`.
    pub form: Field,
    /// `W⁺_{abcd}`.
    pub weyl_plus: Field,
    pub pack: CurvaturePack,
}

fn det3(a: &[[Taylor; 3]; 3]) -> Taylor {
    let m = |i: usize, j: usize, k: usize, l: usize| &(&a[i][k] * &a[j][l]) - &(&a[i][l] * &a[j][k]);
    let mut s = &a[0][0] * &m(1, 2, 1, 2);
    s -= &a[0][1] * &m(1, 2, 0, 2);
    s += &a[0][2] * &m(1, 2, 0, 1);
    s
}

fn shifted(m: &[[Taylor; 3]; 3], mu: &Taylor) -> [[Taylor; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { &m[i][j] - mu } else { m[i][j].clone() }))
}

/// Exact jet of the top eigen-data (`λ₃ > 0`, simple).
pub fn top_eigen_jet(jet: &MetricJet) -> Result<EigenJet> {
    let pack = curvature_pack(jet)?;
    weyl_plus_system(&pack).require_simple_positive()?;
    eigen_jet_from(pack, 2)
}

/// Exact jet of the eigen-data for eigenvalue `index` (ascending order), via
/// a Newton lift of the characteristic polynomial and the adjugate
/// eigenvector. The result has order `jet.order - 2`.
pub fn eigen_jet(jet: &MetricJet, index: usize) -> Result<EigenJet> {
    eigen_jet_from(curvature_pack(jet)?, index)
}

fn eigen_jet_from(pack: CurvaturePack, index: usize) -> Result<EigenJet> {
    let sys = weyl_plus_system(&pack);
    let threshold = gap_threshold(sys.weyl_part_norm);
    let gap = (0..3)
        .filter(|&j| j != index)
        .map(|j| 2.0 * (sys.lambda[index] - sys.lambda[j]).abs())
        .fold(f64::INFINITY, f64::min);
    if gap <= threshold {
        return Err(GeomError::DegenerateEigenvalue { gap, threshold });
    }
    let order = pack.order();
    let orientation = pack.connection.orientation;
    let t = tetrad(&pack.connection.g.truncate(order), orientation);
    let basis = sd_basis(&t);
    let m = contract(&pack.weyl, &bivectors(&t, 1.0));

    let mut mu = Taylor::constant(2.0 * sys.lambda[index], order);
    for _ in 0..order + 2 {
        let a = shifted(&m, &mu);
        let p = det3(&a);
        // p'(μ) = -(sum of principal 2x2 minors of M - μ)
        let minor = |i: usize, j: usize| &(&a[i][i] * &a[j][j]) - &(&a[i][j] * &a[j][i]);
        let dp = -(&(&minor(0, 1) + &minor(0, 2)) + &minor(1, 2));
        let step = &p / &dp;
        mu -= step;
    }

    // Adjugate column of M - μ with the largest base value spans the kernel.
    let a = shifted(&m, &mu);
    let cof = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
        let c: Vec<usize> = (0..3).filter(|&x| x != j).collect();
        let d = &(&a[r[0]][c[0]] * &a[r[1]][c[1]]) - &(&a[r[0]][c[1]] * &a[r[1]][c[0]]);
        if (i + j) % 2 == 0 {
            d
        } else {
            -d
        }
    };
    let adj: [[Taylor; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| cof(j, i)));
    let col = (0..3)
        .max_by(|&x, &y| {
            let n = |c: usize| (0..3).map(|r| adj[r][c].value().powi(2)).sum::<f64>();
            n(x).total_cmp(&n(y))
        })
        .unwrap();
    let mut v: [Taylor; 3] = std::array::from_fn(|r| adj[r][col].clone());
    let mut nn = Taylor::zero(order);
    for x in &v {
        nn += x.square();
    }
    let inv = nn.sqrt().recip();
    let sign = {
        let vals = fix_sign(v.clone().map(|x| x.value()));
        if vals[0] * v[0].value() + vals[1] * v[1].value() + vals[2] * v[2].value() < 0.0 {
            -1.0
        } else {
            1.0
        }
    };
    for x in v.iter_mut() {
        *x = (&*x * &inv).scale(sign);
    }
    let form = Field::from_fn(2, |i| {
        let mut s = Taylor::zero(order);
        for k in 0..3 {
            s += &v[k] * &basis[k][[i[0], i[1]]];
        }
        s
    });
    let weyl_plus = Field::from_fn(4, |i| {
        let mut s = Taylor::zero(order);
        for p in 0..3 {
            for q in 0..3 {
                let bb = &basis[p][[i[0], i[1]]] * &basis[q][[i[2], i[3]]];
                s += (&m[p][q] * &bb).scale(0.5);
            }
        }
        s
    });
    Ok(EigenJet {
        index,
        lambda: mu.scale(0.5),
        form,
        weyl_plus,
        pack,
    })
}

/// Jet of `λ₃`, order `jet.order - 2`.
pub fn lambda3_field(jet: &MetricJet) -> Result<Taylor> {
    Ok(top_eigen_jet(jet)?.lambda)
}

/// Residuals of the trace relations `Σλ = 0` and `Σλ² = ¼|W⁺|²`.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct EigenTraceReport {
    pub lambda: [f64; 3],
    pub trace_rel: f64,
    pub square_rel: f64,
}

/// Checks the trace relations against `|W⁺|²` computed independently as
/// `|½(W + ⋆W)|²`.
pub fn eigen_trace_check(pack: &CurvaturePack) -> EigenTraceReport {
    let sys = weyl_plus_system(pack);
    let w = pack.weyl.truncate(0);
    let conn = &pack.connection;
    let wp = w.add(&crate::forms::star_leading(&w, conn)).scale(0.5).values();
    let ginv = conn.ginv.values();
    let wp2 = wp.inner(&wp, &ginv);
    let l = sys.lambda;
    let lmax = l.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sum2: f64 = l.iter().map(|x| x * x).sum();
    // |λ_i| ≤ |Rm| bounds the scale when W⁺ vanishes identically
    let rm = pack.riemann_norm();
    let rel = |r: f64, s: f64| if r == 0.0 { 0.0 } else { r / s.max(f64::MIN_POSITIVE) };
    EigenTraceReport {
        lambda: l,
        trace_rel: rel((l[0] + l[1] + l[2]).abs(), lmax.max(rm)),
        square_rel: rel((sum2 - 0.25 * wp2).abs(), sum2.max(0.25 * wp2).max(rm * rm)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{evaluate_jet, Catalog, ChartPoint, MetricSpec};
    use crate::tensor::for_each_index;

    fn pack_of(spec: MetricSpec, p: [f64; 4], order: usize) -> CurvaturePack {
        curvature_pack(&evaluate_jet(&spec, &ChartPoint::new(p), order).unwrap()).unwrap()
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let (vals, vecs) = sym_eigen3([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, -1.0]]);
        assert!((vals[0] + 1.0).abs() < 1e-15);
        assert!((vals[1] - 1.0).abs() < 1e-15);
        assert!((vals[2] - 3.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((vecs[2][0] - r).abs() < 1e-15 && (vecs[2][1] - r).abs() < 1e-15);
    }

    #[test]
    fn basis_is_self_dual_and_orthonormal() {
        for o in [Orientation::Plus, Orientation::Minus] {
            let spec = MetricSpec::new(Catalog::TaubNut { n: 1.0 }).with_orientation(o);
            let pk = pack_of(spec, [2.0, 1.0, 0.4, 0.3], 2);
            let ginv = pk.connection.ginv.values();
            let eps = pk.connection.volume_form().values();
            let sys = weyl_plus_system(&pk);
            let asd = weyl_minus_system(&pk);
            for i in 0..3 {
                let star = hodge_star(&sys.basis[i], &eps, &ginv);
                assert!(star.sub(&sys.basis[i]).max_abs() < 1e-12);
                let star = hodge_star(&asd.basis[i], &eps, &ginv);
                assert!(star.add(&asd.basis[i]).max_abs() < 1e-12);
                for j in 0..3 {
                    let ip = sys.basis[i].inner(&sys.basis[j], &ginv);
                    assert!((ip - if i == j { 2.0 } else { 0.0 }).abs() < 1e-12);
                    assert!(sys.basis[i].inner(&asd.basis[j], &ginv).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn schwarzschild_spectrum() {
        let (m, r) = (1.0, 5.0);
        let pk = pack_of(
            MetricSpec::new(Catalog::EuclideanSchwarzschild { m }),
            [0.4, r, 1.0, 0.2],
            2,
        );
        let sys = weyl_plus_system(&pk);
        let l = m / (r * r * r);
        assert!((sys.lambda[2] - 2.0 * l).abs() < 1e-13);
        assert!((sys.lambda[0] + l).abs() < 1e-13 && (sys.lambda[1] + l).abs() < 1e-13);
        assert!(sys.simple_top);
        sys.require_simple_positive().unwrap();
    }

    #[test]
    fn weyl_splits_into_parts() {
        let spec = MetricSpec::new(Catalog::EguchiHanson { a: 1.0 });
        let pk = pack_of(spec, [1.6, 0.9, 0.2, 0.7], 2);
        let w = pk.weyl.values();
        let sum = weyl_plus_system(&pk).weyl_part.add(&weyl_minus_system(&pk).weyl_part);
        assert!(sum.sub(&w).max_abs() < 1e-12 * w.max_abs());
    }

    #[test]
    fn eigenforms_satisfy_trace_identities() {
        let spec = MetricSpec::new(Catalog::TaubNut { n: 0.7 });
        let pk = pack_of(spec, [2.5, 1.2, 0.1, 0.3], 2);
        let sys = weyl_plus_system(&pk);
        let ginv = pk.connection.ginv.values();
        let up: Vec<Values> = sys.forms.iter().map(|f| crate::tensor::raise_all(f, &ginv)).collect();
        for i in 0..3 {
            let mut s = 0.0;
            for_each_index(4, |x| {
                s += up[i][[x[0], x[1]]] * sys.weyl_part[[x[0], x[1], x[2], x[3]]] * up[i][[x[2], x[3]]]
            });
            assert!((s - 4.0 * sys.lambda[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda3_jet_matches_closed_form() {
        let m = 1.0;
        let r0 = 4.0;
        let jet = evaluate_jet(
            &MetricSpec::new(Catalog::EuclideanSchwarzschild { m }),
            &ChartPoint::new([0.1, r0, 1.0, 0.3]),
            5,
        )
        .unwrap();
        let l3 = lambda3_field(&jet).unwrap();
        assert_eq!(l3.order(), 3);
        // λ₃ = 2m r⁻³: ∂_r^k = 2m (-3)(-4)...(-(2+k)) r^{-3-k}
        let mut expect = 2.0 * m / r0.powi(3);
        for k in 0..=3u8 {
            let got = l3.derivative([0, k, 0, 0]);
            assert!((got - expect).abs() < 1e-10 * expect.abs(), "k={k} {got} {expect}");
            expect *= -(3.0 + k as f64) / r0;
        }
        assert!(l3.derivative([0, 0, 1, 0]).abs() < 1e-12);
    }

    #[test]
    fn flat_has_zero_lambda3() {
        let jet = evaluate_jet(&MetricSpec::new(Catalog::Flat), &ChartPoint::new([0.0; 4]), 2).unwrap();
        assert_eq!(lambda3_field(&jet).unwrap_err().kind(), "ZeroLambda3");
    }
}
