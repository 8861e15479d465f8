//! Parameter derivatives along metric curves and the perturbative claims
//! built on them.
//!
//! Every field is evaluated analytically on the member `g(s)`; `δ` and `δ²`
//! are five-point central differences in `s`. Hatted quantities refer to
//! `ĝ(s) = λ₃(s)^{2/3} g(s)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_pack, Connection};
use crate::error::{GeomError, Result};
use crate::fd;
use crate::geometry::{evaluate_jet, ChartPoint, CurveSpec, MetricJet, MetricSpec};
use crate::identity::{covector_norm2, point_fields, verify_point, FdOptions};
use crate::kahler::{complex_structure, kahler_structure};
use crate::tensor::{Field, Values};

/// `|δE|` tolerance relative to the background curvature scale.
pub const HYPOTHESIS_TOL: f64 = 1e-6;
/// Default tolerance for `|d(δF̂)|` and the `δ²Â` summands.
pub const ORDER1_TOL: f64 = 1e-5;
/// `‖∇̂^{(s)}J(s)‖` below this counts as identically parallel.
pub const PARALLEL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Metric,
    E,
    FHat,
    Omega,
    AHat,
    BHat,
    NablaFHat,
    J,
}

impl Quantity {
    pub const ALL: [Quantity; 8] = [
        Quantity::Metric,
        Quantity::E,
        Quantity::FHat,
        Quantity::Omega,
        Quantity::AHat,
        Quantity::BHat,
        Quantity::NablaFHat,
        Quantity::J,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Metric => "metric",
            Quantity::E => "e",
            Quantity::FHat => "f-hat",
            Quantity::Omega => "omega",
            Quantity::AHat => "a-hat",
            Quantity::BHat => "b-hat",
            Quantity::NablaFHat => "nabla-f-hat",
            Quantity::J => "j",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == s)
    }
}

fn member_jet(curve: &CurveSpec, s: f64, p: &ChartPoint, order: usize) -> Result<MetricJet> {
    evaluate_jet(&curve.member(s)?, p, order).map_err(|e| match e {
        GeomError::PointOutsideChart { .. } => GeomError::StencilOutsideValidity(e.to_string()),
        other => other,
    })
}

/// Components of the quantity at `s`, plus the `F̂` values used for sign alignment.
fn sample(curve: &CurveSpec, q: Quantity, s: f64, p: &ChartPoint) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let flat = |v: &Values| v.as_slice().to_vec();
    Ok(match q {
        Quantity::Metric => (flat(&member_jet(curve, s, p, 0)?.value()), None),
        Quantity::E => {
            let pack = curvature_pack(&member_jet(curve, s, p, 2)?)?;
            (flat(&pack.trace_free_ricci.values()), None)
        }
        Quantity::Omega => {
            let ks = kahler_structure(&member_jet(curve, s, p, 2)?)?;
            (vec![ks.omega2.value().sqrt()], None)
        }
        Quantity::FHat => {
            let f = flat(&kahler_structure(&member_jet(curve, s, p, 2)?)?.form.values());
            (f.clone(), Some(f))
        }
        Quantity::J => {
            let ks = kahler_structure(&member_jet(curve, s, p, 2)?)?;
            let f = ks.form.values();
            let ginv = crate::curvature::inverse(&ks.metric.g).values();
            (flat(&complex_structure(&f, &ginv)), Some(flat(&f)))
        }
        Quantity::AHat | Quantity::NablaFHat => {
            let pf = point_fields(&curve.member(s)?.kahler_rescaled(), p)?;
            let key = Some(flat(&pf.sys.forms[2]));
            match q {
                Quantity::AHat => (vec![pf.a.total], None),
                _ => (flat(&pf.sg.nabla_f), key),
            }
        }
        Quantity::BHat => {
            let r = verify_point(&curve.member(s)?.kahler_rescaled(), p, &FdOptions::default())?;
            (vec![r.b], None)
        }
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `T(0)`, `δT`, `δ²T` of a quantity along a curve at one point.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaFields {
    pub quantity: Quantity,
    pub point: [f64; 4],
    pub base: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta2: Vec<f64>,
    /// Parameter steps of the stencils: `h_s` and `2h_s`.
    pub stencil: [f64; 2],
    /// `max |δT(h) - δT(2h)|`, a truncation estimate for `δT`.
    pub delta_truncation: f64,
    /// `max |δ²T(h) - δ²T(2h)|`.
    pub delta2_truncation: f64,
    /// Order of the three-point `δ` estimates at `h, 2h, 4h`.
    pub richardson_order: Option<f64>,
}

/// Five-point `δ` and `δ²` with sign alignment of eigenform-dependent
/// quantities against `s = 0`.
pub fn delta_fields(curve: &CurveSpec, q: Quantity, p: &ChartPoint) -> Result<DeltaFields> {
    let h = curve.h_s;
    let offsets = [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0];
    let raw: Vec<(Vec<f64>, Option<Vec<f64>>)> = offsets
        .iter()
        .map(|k| sample(curve, q, k * h, p))
        .collect::<Result<_>>()?;
    let key0 = raw[3].1.clone();
    let vals: Vec<Vec<f64>> = raw
        .into_iter()
        .map(|(v, key)| match (&key0, key) {
            (Some(k0), Some(k)) if dot(k0, &k) < 0.0 => v.iter().map(|x| -x).collect(),
            (_, _) => v,
        })
        .collect();
    let [m4, m2, m1, z, p1, p2, p4] = [0, 1, 2, 3, 4, 5, 6].map(|i| vals[i].as_slice());
    let delta = fd::five_point_first([m2, m1, p1, p2], h);
    let delta2 = fd::five_point_second([m2, m1, z, p1, p2], h);
    let delta_2h = fd::five_point_first([m4, m2, p2, p4], 2.0 * h);
    let delta2_2h = fd::five_point_second([m4, m2, z, p2, p4], 2.0 * h);
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let c1 = fd::central(p1, m1, h);
    let c2 = fd::central(p2, m2, 2.0 * h);
    let c4 = fd::central(p4, m4, 4.0 * h);
    // largest component drives the order estimate
    let i = (0..c1.len())
        .max_by(|&a, &b| c1[a].abs().total_cmp(&c1[b].abs()))
        .unwrap_or(0);
    let richardson_order = c1.get(i).and_then(|_| fd::richardson_order(c4[i], c2[i], c1[i]));
    Ok(DeltaFields {
        quantity: q,
        point: p.coords,
        base: z.to_vec(),
        delta_truncation: diff(&delta, &delta_2h),
        delta2_truncation: diff(&delta2, &delta2_2h),
        delta,
        delta2,
        stencil: [h, 2.0 * h],
        richardson_order,
    })
}

/// Hypothesis gate: `max |δE|_g` over the points, relative to the largest
/// background `|Rm|_g`. Fails with `HypothesisViolated` above [`HYPOTHESIS_TOL`].
pub fn einstein_gate(curve: &CurveSpec, points: &[ChartPoint]) -> Result<f64> {
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| {
            let d = delta_fields(curve, Quantity::E, p)?;
            let pack = curvature_pack(&evaluate_jet(&curve.base, p, 2)?)?;
            let ginv = pack.connection.ginv.values();
            let de = Values::from_fn(2, |i| d.delta[i[0] * 4 + i[1]]);
            let e0 = pack.trace_free_ricci.values().norm(&ginv);
            Ok((de.norm(&ginv), pack.riemann_norm().max(e0)))
        })
        .collect::<Result<_>>()?;
    let scale = rows.iter().fold(0.0f64, |m, r| m.max(r.1)).max(f64::MIN_POSITIVE);
    let de = rows.iter().fold(0.0f64, |m, r| m.max(r.0)) / scale;
    if de > HYPOTHESIS_TOL {
        return Err(GeomError::HypothesisViolated {
            delta_e: de,
            tol: HYPOTHESIS_TOL,
        });
    }
    Ok(de)
}

/// `Ĉ_{ab}{}^c` between two metrics, stored as `c[[a, b, c]]`.
#[derive(Clone, Debug, Serialize)]
pub struct DifferenceTensor {
    pub point: [f64; 4],
    pub c: Values,
    /// `max |Ĉ_ab^c - Ĉ_ba^c|`.
    pub symmetry_defect: f64,
    /// `max |∇^{(s)}u - ∇u + Ĉ·u|` over the coordinate covectors, i.e. the
    /// mismatch with the difference of Christoffel symbols.
    pub consistency: f64,
}

/// `Ĉ_{ab}{}^c = ½ g₁^{cd}(∇_a g₁_{bd} + ∇_b g₁_{ad} - ∇_d g₁_{ab})` with `∇`
/// the connection of `g₀`.
pub fn difference_tensor_between(g0: &MetricJet, g1: &MetricJet) -> Result<DifferenceTensor> {
    let c0 = Connection::new(g0)?;
    let c1 = Connection::new(g1)?;
    let ng = c0.covariant_derivative(&g1.g).values(); // [e][a][b]
    let g1inv = c1.ginv.values();
    let c = Values::from_fn(3, |i| {
        let (a, b, cc) = (i[0], i[1], i[2]);
        0.5 * (0..4)
            .map(|d| g1inv[[cc, d]] * (ng[[a, b, d]] + ng[[b, a, d]] - ng[[d, a, b]]))
            .sum::<f64>()
    });
    let gam0 = c0.christoffel.values();
    let gam1 = c1.christoffel.values();
    let mut symmetry_defect = 0.0f64;
    let mut consistency = 0.0f64;
    crate::tensor::for_each_index(3, |i| {
        let (a, b, cc) = (i[0], i[1], i[2]);
        symmetry_defect = symmetry_defect.max((c[[a, b, cc]] - c[[b, a, cc]]).abs());
        // with u = dx^cc: (∇^{(1)}u)_ab - (∇u)_ab + Ĉ_ab^cc = -Γ₁^cc_ab + Γ₀^cc_ab + Ĉ_ab^cc
        consistency = consistency.max((gam0[[cc, a, b]] - gam1[[cc, a, b]] + c[[a, b, cc]]).abs());
    });
    Ok(DifferenceTensor {
        point: g0.point.coords,
        c,
        symmetry_defect,
        consistency,
    })
}

/// `Ĉ(s)` between `ĝ(0)` and `ĝ(s)` along the curve.
pub fn difference_tensor(curve: &CurveSpec, s: f64, p: &ChartPoint) -> Result<DifferenceTensor> {
    let g0 = kahler_structure(&member_jet(curve, 0.0, p, 3)?)?.metric;
    let g1 = kahler_structure(&member_jet(curve, s, p, 3)?)?.metric;
    difference_tensor_between(&g0, &g1)
}

/// Same, for an arbitrary pair of metric specs.
pub fn difference_tensor_specs(g0: &MetricSpec, g1: &MetricSpec, p: &ChartPoint) -> Result<DifferenceTensor> {
    difference_tensor_between(&evaluate_jet(g0, p, 1)?, &evaluate_jet(g1, p, 1)?)
}

/// `δF̂` as an order-1 Taylor field by the five-point `s`-stencil.
fn delta_hatted_form(curve: &CurveSpec, p: &ChartPoint) -> Result<Field> {
    let h = curve.h_s;
    let f0 = crate::asymptotics::hatted_form(curve, 0.0, p, None)?;
    let r = f0.values();
    let f: Vec<Field> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| crate::asymptotics::hatted_form(curve, k * h, p, Some(&r)))
        .collect::<Result<_>>()?;
    Ok(f[0].sub(&f[3]).add(&f[2].sub(&f[1]).scale(8.0)).scale(1.0 / (12.0 * h)))
}

#[derive(Clone, Debug, Serialize)]
pub struct Order1Report {
    /// Relative `|δE|` that passed the hypothesis gate.
    pub delta_e: f64,
    /// `|d(δF̂)|_g` per point.
    pub norms: Vec<f64>,
    pub max_norm: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `d(δF̂) = 0` at every point, after the Einstein-deformation gate.
pub fn check_order1_closed(curve: &CurveSpec, points: &[ChartPoint], tol: f64) -> Result<Order1Report> {
    let delta_e = einstein_gate(curve, points)?;
    let norms: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let df = delta_hatted_form(curve, p)?;
            let d = df.partial().values(); // [a][b][c] = ∂_a δF̂_bc
            let dd = Values::from_fn(3, |i| {
                let (a, b, c) = (i[0], i[1], i[2]);
                d[[a, b, c]] + d[[b, c, a]] + d[[c, a, b]]
            });
            let ginv = crate::curvature::inverse(&evaluate_jet(&curve.base, p, 0)?.g).values();
            Ok(dd.norm(&ginv))
        })
        .collect::<Result<_>>()?;
    let max_norm = max_abs(&norms);
    Ok(Order1Report {
        delta_e,
        norms,
        max_norm,
        tol,
        pass: max_norm <= tol,
    })
}

/// Constituents of `Â(s)` whose squares make up `δ²Â`.
#[derive(Clone, Copy, Debug)]
struct AParts {
    a: f64,
    gradient: f64,
    current: f64,
    split: f64,
    gamma: f64,
    lambda3: f64,
}

fn a_parts(curve: &CurveSpec, s: f64, p: &ChartPoint) -> Result<AParts> {
    let pf = point_fields(&curve.member(s)?.kahler_rescaled(), p)?;
    let [l1, l2, l3] = pf.sys.lambda;
    Ok(AParts {
        a: pf.a.total,
        gradient: pf.a.gradient,
        current: pf.a.current,
        split: (l1 - l2).powi(2),
        gamma: covector_norm2(&pf.sg.gamma31, &pf.ginv) + covector_norm2(&pf.sg.gamma32, &pf.ginv),
        lambda3: l3,
    })
}

/// `δ²Â` against its sum of squares at one point and one step.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AExpansionLevel {
    pub h_s: f64,
    pub a0: f64,
    pub delta_a: f64,
    pub delta2_a: f64,
    /// `|δ∇̂F̂|²/12`, `|δĵ|²`, `(δλ̂₁-δλ̂₂)²/(3λ̂₃)`, `(|δΓ̂³₁|²+|δΓ̂³₂|²)/3`.
    pub summands: [f64; 4],
    /// `|δ²Â - 2Σ summands|`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AExpansionRow {
    pub point: [f64; 4],
    pub levels: [AExpansionLevel; 2],
    pub observed_order: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AExpansionReport {
    pub rows: Vec<AExpansionRow>,
    pub max_summand: f64,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Matching residuals below this are rounding noise and need no order.
pub const A_NOISE: f64 = 1e-8;

fn a_level(parts: &[AParts; 5], h: f64) -> AExpansionLevel {
    let pick = |f: fn(&AParts) -> f64| parts.each_ref().map(f);
    let first = |v: [f64; 5]| fd::five_point_first([&v[0..1], &v[1..2], &v[3..4], &v[4..5]], h)[0];
    let second = |v: [f64; 5]| fd::five_point_second([&v[0..1], &v[1..2], &v[2..3], &v[3..4], &v[4..5]], h)[0];
    let a = pick(|x| x.a);
    // each Q vanishes at the Kähler background, so δ²(Q)/2 = |δQ|²
    let l3 = parts[2].lambda3;
    let summands = [
        0.5 * second(pick(|x| x.gradient)),
        0.5 * second(pick(|x| x.current)),
        0.5 * second(pick(|x| x.split)) / (3.0 * l3),
        0.5 * second(pick(|x| x.gamma)) / 3.0,
    ];
    let delta2_a = second(a);
    AExpansionLevel {
        h_s: h,
        a0: a[2],
        delta_a: first(a),
        delta2_a,
        summands,
        residual: (delta2_a - 2.0 * summands.iter().sum::<f64>()).abs(),
    }
}

/// Rows without the hypothesis gate; the curve need not be an Einstein
/// deformation, only Kähler after rescaling at `s = 0`.
pub fn a_expansion_rows(curve: &CurveSpec, points: &[ChartPoint], tol: f64) -> Result<Vec<AExpansionRow>> {
    let h = curve.h_s;
    points
        .par_iter()
        .map(|p| {
            let ks = [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0];
            let parts: Vec<AParts> = ks.iter().map(|k| a_parts(curve, k * h, p)).collect::<Result<_>>()?;
            let fine = a_level(&[parts[1], parts[2], parts[3], parts[4], parts[5]], h);
            let coarse = a_level(&[parts[0], parts[1], parts[3], parts[5], parts[6]], 2.0 * h);
            let observed_order = fd::observed_order(coarse.residual, fine.residual);
            let pass = fine.residual <= tol
                && fine.a0.abs() <= tol
                && fine.delta_a.abs() <= tol
                && (fine.residual <= A_NOISE || observed_order.is_some_and(|o| o >= crate::identity::MIN_ORDER));
            Ok(AExpansionRow {
                point: p.coords,
                levels: [fine, coarse],
                observed_order,
                pass,
            })
        })
        .collect()
}

/// `Â = δÂ = 0` and `δ²Â = 2Σ` summands, after the Einstein-deformation gate.
pub fn check_a_expansion(curve: &CurveSpec, points: &[ChartPoint], tol: f64) -> Result<AExpansionReport> {
    einstein_gate(curve, points)?;
    let rows = a_expansion_rows(curve, points, tol)?;
    let max_summand = rows
        .iter()
        .flat_map(|r| r.levels[0].summands)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let max_residual = rows.iter().fold(0.0f64, |m, r| m.max(r.levels[0].residual));
    Ok(AExpansionReport {
        pass: rows.iter().all(|r| r.pass) && max_summand <= tol,
        rows,
        max_summand,
        max_residual,
        tol,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParallelReport {
    pub s: [f64; 3],
    /// `max over points of ‖∇̂^{(s)}J(s)‖_ĝ(s)` at each `s`.
    pub norms: [f64; 3],
    /// Log-log slope over `s`, when every norm is above tolerance.
    pub exponent: Option<f64>,
    pub identically_parallel: bool,
    pub pass: bool,
}

/// `‖∇̂^{(s)}J(s)‖ = √2 ‖∇̂^{(s)}F̂(s)‖` in the metric `ĝ(s)`.
pub fn parallel_defect(curve: &CurveSpec, s: f64, p: &ChartPoint) -> Result<f64> {
    let ks = kahler_structure(&member_jet(curve, s, p, 3)?)?;
    let conn = Connection::new(&ks.metric)?;
    let nf = conn.covariant_derivative(&ks.form).values();
    Ok(std::f64::consts::SQRT_2 * nf.norm(&conn.ginv.values()))
}

/// `∇̂^{(s)}J(s) = O(s²)` at `s ∈ {4h, 2h, h}`, after the gate.
pub fn check_second_order_parallel(curve: &CurveSpec, points: &[ChartPoint]) -> Result<ParallelReport> {
    einstein_gate(curve, points)?;
    let h = curve.h_s;
    let s = [4.0 * h, 2.0 * h, h];
    let per_point: Vec<[f64; 3]> = points
        .par_iter()
        .map(|p| {
            Ok([
                parallel_defect(curve, s[0], p)?,
                parallel_defect(curve, s[1], p)?,
                parallel_defect(curve, s[2], p)?,
            ])
        })
        .collect::<Result<_>>()?;
    let norms: [f64; 3] = std::array::from_fn(|k| per_point.iter().fold(0.0f64, |m, r| m.max(r[k])));
    let identically_parallel = norms.iter().all(|&n| n <= PARALLEL_TOL);
    let exponent = (!identically_parallel && norms.iter().all(|&n| n > 0.0)).then(|| fd::loglog_fit(&s, &norms).slope);
    Ok(ParallelReport {
        s,
        norms,
        exponent,
        identically_parallel,
        pass: identically_parallel || exponent.is_some_and(|e| e >= 2.0 - 0.3),
    })
}
