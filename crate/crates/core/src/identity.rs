//! The divergence identity `∇_a V^a = A + B`, Weitzenböck identities and the
//! conformal relation for `λ₃⁻¹ W⁺`.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{curvature_pack, Connection, CurvaturePack};
use crate::error::{GeomError, Result};
use crate::fd;
use crate::forms::{
    codifferential, exterior_d, hodge_laplacian, rough_laplacian, self_dual_part, star_three_form, star_vector,
    wedge_two_one,
};
use crate::geometry::{evaluate_jet, ChartPoint, MetricSpec};
use crate::selfdual::{top_eigen_jet, weyl_plus_system, SdWeylSystem};
use crate::taylor::Taylor;
use crate::tensor::{for_each_index, raise_all, Field, Values};

/// First derivatives of the top eigen-data, from first-order perturbation of
/// the eigenproblem along `∇W⁺`.
#[derive(Clone, Debug)]
pub struct SpectralGradient {
    /// `∇_a λ₃`.
    pub dlambda3: [f64; 4],
    /// `Γ_a{}^3{}_1`.
    pub gamma31: [f64; 4],
    /// `Γ_a{}^3{}_2`.
    pub gamma32: [f64; 4],
    /// `∇_a F_{bc}` for the top eigenform.
    pub nabla_f: Values,
    /// `N_a = ½ f^i (∇_a W) f^j` in the self-dual basis.
    pub n: [[[f64; 3]; 3]; 4],
}

fn quad(u: &[f64; 3], m: &[[f64; 3]; 3], v: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += u[i] * m[i][j] * v[j];
        }
    }
    s
}

impl SpectralGradient {
    /// `Γ_a{}^i{}_j` for distinct simple eigenvalues `i != j`.
    pub fn gamma(&self, sys: &SdWeylSystem, i: usize, j: usize) -> [f64; 4] {
        let denom = 2.0 * (sys.lambda[i] - sys.lambda[j]);
        std::array::from_fn(|a| quad(&sys.vectors[j], &self.n[a], &sys.vectors[i]) / denom)
    }
}

pub fn spectral_gradient(sys: &SdWeylSystem, pack: &CurvaturePack) -> Result<SpectralGradient> {
    if !sys.simple_top {
        return Err(GeomError::DegenerateEigenvalue {
            gap: sys.gap,
            threshold: crate::selfdual::SIMPLE_GAP_REL * sys.weyl_part_norm.max(1.0),
        });
    }
    let (nw, _) = pack.require_nabla()?;
    let nw = nw.values();
    let n: [[[f64; 3]; 3]; 4] = std::array::from_fn(|a| sys.project(|b, c, d, e| nw[[a, b, c, d, e]]));
    let v3 = &sys.vectors[2];
    let dlambda3 = std::array::from_fn(|a| 0.5 * quad(v3, &n[a], v3));
    let g = |j: usize| -> [f64; 4] {
        let denom = 2.0 * (sys.lambda[2] - sys.lambda[j]);
        std::array::from_fn(|a| quad(&sys.vectors[j], &n[a], v3) / denom)
    };
    let (gamma31, gamma32) = (g(0), g(1));
    let nabla_f = Values::from_fn(3, |i| {
        gamma31[i[0]] * sys.forms[0][[i[1], i[2]]] + gamma32[i[0]] * sys.forms[1][[i[1], i[2]]]
    });
    Ok(SpectralGradient {
        dlambda3,
        gamma31,
        gamma32,
        nabla_f,
        n,
    })
}

/// `|u|²_g` for a covector.
pub fn covector_norm2(u: &[f64; 4], ginv: &Values) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            s += ginv[[a, b]] * u[a] * u[b];
        }
    }
    s
}

/// `j_a = g^{bc} ∇_b F_{ca}` and `V^a = F^{ab} j_b`.
pub fn current_and_v(nabla_f: &Values, form: &Values, ginv: &Values) -> ([f64; 4], [f64; 4]) {
    let j: [f64; 4] = std::array::from_fn(|a| {
        let mut s = 0.0;
        for b in 0..4 {
            for c in 0..4 {
                s += ginv[[b, c]] * nabla_f[[b, c, a]];
            }
        }
        s
    });
    let up = raise_all(form, ginv);
    let v = std::array::from_fn(|a| (0..4).map(|b| up[[a, b]] * j[b]).sum());
    (j, v)
}

/// The constituents of `A`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ATerm {
    pub current: f64,
    pub gradient: f64,
    pub spectral: f64,
    pub total: f64,
}

pub fn term_a(sg: &SpectralGradient, sys: &SdWeylSystem, j: &[f64; 4], ginv: &Values) -> Result<ATerm> {
    sys.require_simple_positive()?;
    let [l1, l2, l3] = sys.lambda;
    let current = covector_norm2(j, ginv);
    let gradient = sg.nabla_f.inner(&sg.nabla_f, ginv) / 12.0;
    let spectral = ((l1 - l2).powi(2)
        - 2.0 * (l1 * covector_norm2(&sg.gamma31, ginv) + l2 * covector_norm2(&sg.gamma32, ginv)))
        / (3.0 * l3);
    Ok(ATerm {
        current,
        gradient,
        spectral,
        total: current + gradient + spectral,
    })
}

/// Analytic pointwise data entering the identity.
#[derive(Clone, Debug)]
pub struct PointFields {
    pub sys: SdWeylSystem,
    pub sg: SpectralGradient,
    pub g: Values,
    pub ginv: Values,
    pub sqrt_det: f64,
    /// `Γ^c_{ab}`.
    pub christoffel: Values,
    pub j: [f64; 4],
    pub v: [f64; 4],
    pub a: ATerm,
    /// `Y_{bcd} = (d*(λ₃⁻¹W⁺))_{bcd}`.
    pub dstar_z: Values,
}

/// `Y_{bcd} = -g^{ae} ∇_a (λ₃⁻¹ W⁺)_{ebcd}`, with `∇W⁺ = P⁺ ∇W P⁺`.
fn dstar_z(sys: &SdWeylSystem, sg: &SpectralGradient, ginv: &Values) -> Values {
    let l3 = sys.lambda[2];
    let basis = &sys.basis;
    // ∇_a W⁺_{ebcd} = ½ Σ N_a^{ij} f^i_{eb} f^j_{cd}
    let nabla_wp = |a: usize, e: usize, b: usize, c: usize, d: usize| {
        let mut s = 0.0;
        for i in 0..3 {
            let fi = basis[i][[e, b]];
            if fi == 0.0 {
                continue;
            }
            for j in 0..3 {
                s += sg.n[a][i][j] * fi * basis[j][[c, d]];
            }
        }
        0.5 * s
    };
    Values::from_fn(3, |i| {
        let (b, c, d) = (i[0], i[1], i[2]);
        let mut s = 0.0;
        for a in 0..4 {
            for e in 0..4 {
                let gi = ginv[[a, e]];
                if gi == 0.0 {
                    continue;
                }
                let dz = nabla_wp(a, e, b, c, d) / l3 - sg.dlambda3[a] / (l3 * l3) * sys.weyl_part[[e, b, c, d]];
                s += gi * dz;
            }
        }
        -s
    })
}

/// Flip the signs of individual eigenforms (for gauge-evenness checks).
pub fn flip_eigenforms(sys: &mut SdWeylSystem, signs: [f64; 3]) {
    for i in 0..3 {
        if signs[i] < 0.0 {
            sys.vectors[i] = sys.vectors[i].map(|x| -x);
            sys.forms[i] = sys.forms[i].scale(-1.0);
        }
    }
}

pub fn point_fields(spec: &MetricSpec, p: &ChartPoint) -> Result<PointFields> {
    point_fields_signed(spec, p, [1.0; 3])
}

pub fn point_fields_signed(spec: &MetricSpec, p: &ChartPoint, signs: [f64; 3]) -> Result<PointFields> {
    let jet = evaluate_jet(spec, p, 3)?;
    let pack = curvature_pack(&jet)?;
    let mut sys = weyl_plus_system(&pack);
    sys.require_simple_positive()?;
    flip_eigenforms(&mut sys, signs);
    let sg = spectral_gradient(&sys, &pack)?;
    let g = pack.connection.g.values();
    let ginv = pack.connection.ginv.values();
    let (j, v) = current_and_v(&sg.nabla_f, &sys.forms[2], &ginv);
    let a = term_a(&sg, &sys, &j, &ginv)?;
    let dz = dstar_z(&sys, &sg, &ginv);
    Ok(PointFields {
        sqrt_det: pack.connection.sqrt_det().value(),
        christoffel: pack.connection.christoffel.values(),
        sys,
        sg,
        g,
        ginv,
        j,
        v,
        a,
        dstar_z: dz,
    })
}

/// Finite-difference controls for outer derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct FdOptions {
    /// Initial step relative to the local coordinate scale.
    pub rel_step: f64,
    /// Smallest relative step tried by halving.
    pub floor: f64,
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_levels: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            rel_step: fd::DEFAULT_REL_STEP,
            floor: fd::STEP_FLOOR,
            tol: 1e-6,
            max_levels: 8,
        }
    }
}

/// Minimum accepted Richardson order for central stencils.
pub const MIN_ORDER: f64 = 1.7;
/// Relative residuals below this are at the rounding floor; no order is
/// required of them.
pub const NOISE_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepLevel {
    pub rel_step: f64,
    pub div_v: f64,
    pub b: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub point: [f64; 4],
    /// Richardson-extrapolated from the last two levels.
    pub div_v: f64,
    pub a: f64,
    pub b: f64,
    pub a_parts: ATerm,
    /// `|∇_a V^a - A - B|` with the extrapolated values.
    pub residual: f64,
    /// `max(|A|, |B|, 1e-12)`.
    pub scale: f64,
    pub rel_residual: f64,
    /// Finest relative step evaluated.
    pub fd_step: f64,
    /// From the raw residuals at the two finest steps.
    pub observed_order: Option<f64>,
    pub below_floor: bool,
    pub gap: f64,
    pub levels: Vec<StepLevel>,
    pub pass: bool,
}

struct ShiftSample {
    rho_v: [f64; 4],
    y: Values,
}

fn stencil_error(e: GeomError) -> GeomError {
    match e {
        GeomError::PointOutsideChart { .. } => GeomError::StencilOutsideChart(e.to_string()),
        other => other,
    }
}

fn shift_sample(spec: &MetricSpec, p: &ChartPoint) -> Result<ShiftSample> {
    let f = point_fields(spec, p).map_err(stencil_error)?;
    Ok(ShiftSample {
        rho_v: f.v.map(|x| x * f.sqrt_det),
        y: f.dstar_z,
    })
}

/// Steps per coordinate for a relative step.
pub fn axis_steps(spec: &MetricSpec, p: &ChartPoint, rel: f64) -> [f64; 4] {
    spec.catalog.coordinate_scale(p.coords).map(|s| s * rel)
}

/// `(∇_a V^a, B)` by central differences with per-axis steps `h`.
pub fn stencil_estimates(spec: &MetricSpec, p: &ChartPoint, center: &PointFields, h: [f64; 4]) -> Result<(f64, f64)> {
    let samples: Vec<(ShiftSample, ShiftSample)> = (0..4)
        .map(|a| {
            Ok((
                shift_sample(spec, &p.shifted(a, h[a]))?,
                shift_sample(spec, &p.shifted(a, -h[a]))?,
            ))
        })
        .collect::<Result<_>>()?;
    let div_v = (0..4)
        .map(|a| (samples[a].0.rho_v[a] - samples[a].1.rho_v[a]) / (2.0 * h[a]))
        .sum::<f64>()
        / center.sqrt_det;
    let dy: Vec<Values> = (0..4)
        .map(|a| samples[a].0.y.sub(&samples[a].1.y).scale(1.0 / (2.0 * h[a])))
        .collect();
    let y = &center.dstar_z;
    let gam = &center.christoffel;
    let ddz = Values::from_fn(4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        let mut s = dy[a][[b, c, d]] - dy[b][[a, c, d]];
        for e in 0..4 {
            s += -gam[[e, a, c]] * y[[b, e, d]] - gam[[e, a, d]] * y[[b, c, e]]
                + gam[[e, b, c]] * y[[a, e, d]]
                + gam[[e, b, d]] * y[[a, c, e]];
        }
        s
    });
    let up = raise_all(&center.sys.forms[2], &center.ginv);
    let mut b = 0.0;
    for_each_index(4, |i| {
        b += up[[i[0], i[1]]] * up[[i[2], i[3]]] * ddz[[i[0], i[1], i[2], i[3]]]
    });
    Ok((div_v, -b / 6.0))
}

/// Richardson extrapolation of a second-order estimate from steps `h`, `h/2`.
fn extrapolate(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Certify `∇_a V^a = A + B` at one point with automatic step halving.
///
/// Each level halves the step. The observed order comes from the raw
/// residuals of the last two levels; the reported `∇_a V^a` and `B` are
/// their Richardson extrapolation.
pub fn verify_point(spec: &MetricSpec, p: &ChartPoint, opts: &FdOptions) -> Result<IdentityReport> {
    let center = point_fields(spec, p)?;
    let a = center.a.total;
    let mut levels: Vec<StepLevel> = Vec::new();
    let mut rel = opts.rel_step;
    let mut order = None;
    let mut best;
    loop {
        let (div_v, b) = stencil_estimates(spec, p, &center, axis_steps(spec, p, rel))?;
        let residual = (div_v - a - b).abs();
        levels.push(StepLevel {
            rel_step: rel,
            div_v,
            b,
            residual,
        });
        let n = levels.len();
        best = (div_v, b);
        if n >= 2 {
            let prev = levels[n - 2];
            order = fd::observed_order(prev.residual, residual);
            best = (extrapolate(prev.div_v, div_v), extrapolate(prev.b, b));
        }
        let scale = a.abs().max(best.1.abs()).max(1e-12);
        let r = (best.0 - a - best.1).abs() / scale;
        let converged = n >= 2 && r <= opts.tol && (r <= NOISE_REL || order.is_some_and(|o| o >= MIN_ORDER));
        if converged || rel / 2.0 < opts.floor || n >= opts.max_levels {
            break;
        }
        rel /= 2.0;
    }
    let last = *levels.last().expect("at least one level");
    let (div_v, b) = best;
    let residual = (div_v - a - b).abs();
    let scale = a.abs().max(b.abs()).max(1e-12);
    let rel_residual = residual / scale;
    let below_floor = rel_residual <= NOISE_REL;
    Ok(IdentityReport {
        point: p.coords,
        div_v,
        a,
        b,
        a_parts: center.a,
        residual,
        scale,
        rel_residual,
        fd_step: last.rel_step,
        observed_order: order,
        below_floor,
        gap: center.sys.gap,
        levels,
        pass: rel_residual <= opts.tol && (below_floor || order.is_some_and(|o| o >= MIN_ORDER)),
    })
}

/// Parallel sweep; results are in input order.
pub fn verify_main_identity(spec: &MetricSpec, points: &[ChartPoint], opts: &FdOptions) -> Vec<Result<IdentityReport>> {
    points.par_iter().map(|p| verify_point(spec, p, opts)).collect()
}

/// The three sides of the identity computed entirely in Taylor arithmetic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JetIdentity {
    pub div_v: f64,
    pub a: f64,
    pub b: f64,
}

/// Exact-jet evaluation of `∇_a V^a`, `A` and `B` (no finite differences).
pub fn main_identity_jet(spec: &MetricSpec, p: &ChartPoint) -> Result<JetIdentity> {
    let jet = evaluate_jet(spec, p, 4)?;
    let ej = top_eigen_jet(&jet)?;
    let conn = &ej.pack.connection;
    let f = &ej.form;
    let nabla_f = conn.covariant_derivative(f);
    let j = crate::forms::contract_leading(&nabla_f, &conn.ginv);
    let ginv = &conn.ginv;
    let rho = conn.sqrt_det();
    let mut div = Taylor::zero(0);
    for a in 0..4 {
        let mut va = Taylor::zero(1);
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    va += &(&(&ginv[[a, c]] * &ginv[[b, d]]) * &f[[c, d]]) * &j[[b]];
                }
            }
        }
        div += (&rho * &va).partial(a);
    }
    let div_v = div.value() / rho.value();

    let sys = weyl_plus_system(&ej.pack);
    let gv = ginv.values();
    let nf = nabla_f.values();
    let gamma = |k: usize| -> [f64; 4] {
        let up = raise_all(&sys.forms[k], &gv);
        std::array::from_fn(|a| {
            let mut s = 0.0;
            for b in 0..4 {
                for c in 0..4 {
                    s += up[[b, c]] * nf[[a, b, c]];
                }
            }
            0.5 * s
        })
    };
    let [l1, l2, l3] = sys.lambda;
    let jv: [f64; 4] = std::array::from_fn(|a| j[[a]].value());
    let a_term = covector_norm2(&jv, &gv)
        + nf.inner(&nf, &gv) / 12.0
        + ((l1 - l2).powi(2) - 2.0 * (l1 * covector_norm2(&gamma(0), &gv) + l2 * covector_norm2(&gamma(1), &gv)))
            / (3.0 * l3);

    let z = ej.weyl_plus.mul_scalar(&ej.lambda.recip());
    let ddz = exterior_d(conn, &codifferential(conn, &z), 1).values();
    let up = raise_all(&f.values(), &gv);
    let mut b = 0.0;
    for_each_index(4, |i| {
        b += up[[i[0], i[1]]] * up[[i[2], i[3]]] * ddz[[i[0], i[1], i[2], i[3]]]
    });
    Ok(JetIdentity {
        div_v,
        a: a_term,
        b: -b / 6.0,
    })
}

/// Sum of `amp · sin(k·x + φ)` terms per independent component of a
/// 2-form (`rank = 2`) or a `Λ²⊗Λ²*`-valued field (`rank = 4`).
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct TrigField {
    pub rank: usize,
    /// `(component, amplitude, wavevector, phase)` with antisymmetric pairs
    /// given in increasing order.
    pub terms: Vec<(Vec<usize>, f64, [f64; 4], f64)>,
}

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl TrigField {
    /// Random field; wavevectors are scaled by `1/scale` per coordinate.
    pub fn random<R: rand::Rng>(rank: usize, rng: &mut R, scale: [f64; 4]) -> Self {
        assert!(rank == 2 || rank == 4);
        let mut terms = Vec::new();
        let mut push = |comp: Vec<usize>, rng: &mut R| {
            let amp = rng.gen_range(-1.0..1.0);
            let k = std::array::from_fn(|i| rng.gen_range(-1.0..1.0) / scale[i]);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            terms.push((comp, amp, k, phase));
        };
        for &(a, b) in &PAIRS {
            if rank == 2 {
                push(vec![a, b], rng);
            } else {
                for &(c, d) in &PAIRS {
                    push(vec![a, b, c, d], rng);
                }
            }
        }
        Self { rank, terms }
    }

    pub fn field(&self, p: [f64; 4], order: usize) -> Field {
        let x = crate::taylor::coordinates(p, order);
        let mut out = Field::zeros(self.rank, order);
        for (comp, amp, k, phase) in &self.terms {
            let mut arg = Taylor::constant(*phase, order);
            for i in 0..4 {
                arg.axpy(k[i], &x[i]);
            }
            let v = arg.sin().scale(*amp);
            let mut idx = comp.clone();
            let pairs = comp.len() / 2;
            for flips in 0..(1usize << pairs) {
                let mut sign = 1.0;
                for q in 0..pairs {
                    let (lo, hi) = (comp[2 * q], comp[2 * q + 1]);
                    if flips >> q & 1 == 1 {
                        idx[2 * q] = hi;
                        idx[2 * q + 1] = lo;
                        sign = -sign;
                    } else {
                        idx[2 * q] = lo;
                        idx[2 * q + 1] = hi;
                    }
                }
                *out.get_mut(&idx) += v.scale(sign);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeitzenbockReport {
    pub identity: String,
    pub lhs_norm: f64,
    pub residual: f64,
    pub rel_residual: f64,
}

fn report(identity: &str, lhs: &Values, rhs: &Values, extra: &[&Values], ginv: &Values) -> WeitzenbockReport {
    let residual = lhs.sub(rhs).norm(ginv);
    let scale = extra
        .iter()
        .map(|t| t.norm(ginv))
        .fold(lhs.norm(ginv).max(rhs.norm(ginv)), f64::max)
        .max(1e-300);
    WeitzenbockReport {
        identity: identity.to_string(),
        lhs_norm: lhs.norm(ginv),
        residual,
        rel_residual: residual / scale,
    }
}

/// `△F = -□F - R_{ab}{}^{cd} F_{cd} - 2 R_{[a}{}^c F_{b]c}`.
pub fn ldr_two_form(conn: &Connection, pack: &CurvaturePack, f: &Field) -> WeitzenbockReport {
    let ginv = conn.ginv.values();
    let lhs = hodge_laplacian(conn, f, 2).values();
    let boxf = rough_laplacian(conn, f).values();
    let riem = pack.riemann.values();
    let ric_up = crate::curvature::raise_second(&pack.ricci.values(), &ginv);
    let fv = f.values();
    let fup = raise_all(&fv, &ginv);
    let rhs = Values::from_fn(2, |i| {
        let (a, b) = (i[0], i[1]);
        let mut s = -boxf[[a, b]];
        for c in 0..4 {
            for d in 0..4 {
                s -= riem[[a, b, c, d]] * fup[[c, d]];
            }
            s -= ric_up[[a, c]] * fv[[b, c]] - ric_up[[b, c]] * fv[[a, c]];
        }
        s
    });
    report("LdRF", &lhs, &rhs, &[&boxf], &ginv)
}

/// `△Z = -□Z + 2R_{[a}{}^e Z_{|e|b]cd} - R_{ab}{}^{ef} Z_{efcd}
///       + 4 R_{[a}{}^e{}_{|f|[c} Z_{|e|b]}{}^f{}_{d]}`.
pub fn ldr_form_valued(conn: &Connection, pack: &CurvaturePack, z: &Field) -> WeitzenbockReport {
    let ginv = conn.ginv.values();
    let lhs = hodge_laplacian(conn, z, 2).values();
    let boxz = rough_laplacian(conn, z).values();
    let riem = pack.riemann.values();
    let ric_up = crate::curvature::raise_second(&pack.ricci.values(), &ginv);
    let zv = z.values();
    // R_{ab}^{ef}
    let riem_up = Values::from_fn(4, |i| {
        let mut s = 0.0;
        for e in 0..4 {
            for f in 0..4 {
                s += riem[[i[0], i[1], e, f]] * ginv[[e, i[2]]] * ginv[[f, i[3]]];
            }
        }
        s
    });
    // R_a^e_{fc} and Z_{eb}^f_d
    let r_mixed = Values::from_fn(4, |i| {
        (0..4).map(|e| ginv[[i[1], e]] * riem[[i[0], e, i[2], i[3]]]).sum()
    });
    let z_mixed = Values::from_fn(4, |i| (0..4).map(|f| ginv[[i[2], f]] * zv[[i[0], i[1], f, i[3]]]).sum());
    let x = Values::from_fn(4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        let mut s = 0.0;
        for e in 0..4 {
            for f in 0..4 {
                s += r_mixed[[a, e, f, c]] * z_mixed[[e, b, f, d]];
            }
        }
        s
    });
    let rhs = Values::from_fn(4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        let mut s = -boxz[[a, b, c, d]];
        for e in 0..4 {
            s += ric_up[[a, e]] * zv[[e, b, c, d]] - ric_up[[b, e]] * zv[[e, a, c, d]];
            for f in 0..4 {
                s -= riem_up[[a, b, e, f]] * zv[[e, f, c, d]];
            }
        }
        s + x[[a, b, c, d]] - x[[b, a, c, d]] - x[[a, b, d, c]] + x[[b, a, d, c]]
    });
    report("LdRZ", &lhs, &rhs, &[&boxz], &ginv)
}

/// `△F⁺ = 2 (dd*F⁺)⁺` for `F⁺ = ½(β + ⋆β)`.
pub fn sd_laplacian_two_form(conn: &Connection, beta: &Field) -> WeitzenbockReport {
    sd_laplacian(conn, beta, "LdRFp")
}

/// `△Z⁺ = 2 (dd*Z⁺)⁺` for `Z⁺ = ½(Z + ⋆Z)`.
pub fn sd_laplacian_form_valued(conn: &Connection, z: &Field) -> WeitzenbockReport {
    sd_laplacian(conn, z, "LdRZp")
}

fn sd_laplacian(conn: &Connection, t: &Field, name: &str) -> WeitzenbockReport {
    let ginv = conn.ginv.values();
    let tp = self_dual_part(t, conn);
    let lhs = hodge_laplacian(conn, &tp, 2).values();
    let ddstar = exterior_d(conn, &codifferential(conn, &tp), 1);
    let rhs = self_dual_part(&ddstar, conn).scale(2.0).values();
    report(name, &lhs, &rhs, &[&ddstar.values()], &ginv)
}

/// All four Weitzenböck-type identities at one point for given test fields.
pub fn weitzenbock_suite(
    spec: &MetricSpec,
    p: &ChartPoint,
    beta: &TrigField,
    z: &TrigField,
) -> Result<Vec<WeitzenbockReport>> {
    let jet = evaluate_jet(spec, p, 3)?;
    let pack = curvature_pack(&jet)?;
    let conn = &pack.connection;
    let fb = beta.field(p.coords, 3);
    let fz = z.field(p.coords, 3);
    Ok(vec![
        ldr_two_form(conn, &pack, &fb),
        sd_laplacian_two_form(conn, &fb),
        ldr_form_valued(conn, &pack, &fz),
        sd_laplacian_form_valued(conn, &fz),
    ])
}

/// `ĝ^{ef} ∇̂_f(λ̂₃⁻¹ Ŵ⁺_{ebcd})` against `λ̂₃⁻¹ g^{ef} ∇_f W⁺_{ebcd}`.
#[derive(Clone, Debug, Serialize)]
pub struct ConformalReport {
    pub point: [f64; 4],
    pub lhs_norm: f64,
    pub residual: f64,
    pub rel_residual: f64,
}

pub fn conformal_divergence_check(spec: &MetricSpec, p: &ChartPoint) -> Result<ConformalReport> {
    let hat = spec.kahler_rescaled();
    let ej_hat = top_eigen_jet(&evaluate_jet(&hat, p, 3)?)?;
    let conn_hat = &ej_hat.pack.connection;
    let z_hat = ej_hat.weyl_plus.mul_scalar(&ej_hat.lambda.recip());
    let lhs = crate::forms::contract_leading(&conn_hat.covariant_derivative(&z_hat), &conn_hat.ginv).values();

    let ej = top_eigen_jet(&evaluate_jet(spec, p, 3)?)?;
    let conn = &ej.pack.connection;
    let lambda_hat = ej_hat.lambda.value();
    let rhs = crate::forms::contract_leading(&conn.covariant_derivative(&ej.weyl_plus), &conn.ginv)
        .values()
        .scale(1.0 / lambda_hat);
    let ginv = conn.ginv.values();
    let residual = lhs.sub(&rhs).norm(&ginv);
    let lhs_norm = lhs.norm(&ginv);
    // Both sides vanish on Einstein metrics; measure against λ̂₃⁻¹|∇W⁺|.
    let nabla_scale = conn.covariant_derivative(&ej.weyl_plus).values().norm(&ginv) / lambda_hat;
    Ok(ConformalReport {
        point: p.coords,
        lhs_norm,
        residual,
        rel_residual: residual / lhs_norm.max(rhs.norm(&ginv)).max(nabla_scale).max(1e-300),
    })
}

/// `⋆V` against `F∧⋆dF` pointwise, and `d(F∧⋆dF)` against `(∇_a V^a) ε`.
#[derive(Clone, Debug, Serialize)]
pub struct DualCurrentReport {
    pub pointwise_residual: f64,
    pub divergence: f64,
    pub exterior: f64,
    pub rel_residual: f64,
}

fn dual_current_form(spec: &MetricSpec, p: &ChartPoint) -> Result<(Values, Values, Values)> {
    let ej = top_eigen_jet(&evaluate_jet(spec, p, 3)?)?;
    let conn = &ej.pack.connection;
    let eps = conn.volume_form().values();
    let ginv = conn.ginv.values();
    let f = ej.form.values();
    let df = exterior_d(conn, &ej.form, 2).values();
    let alpha = wedge_two_one(&f, &star_three_form(&df, &eps, &ginv));
    let nabla_f = conn.covariant_derivative(&ej.form).values();
    let (_, v) = current_and_v(&nabla_f, &f, &ginv);
    Ok((alpha, star_vector(&v, &eps), eps))
}

pub fn dual_current_check(spec: &MetricSpec, p: &ChartPoint, rel_step: f64) -> Result<DualCurrentReport> {
    let (alpha, star_v, eps) = dual_current_form(spec, p)?;
    let pointwise_residual = alpha.sub(&star_v).max_abs() / star_v.max_abs().max(1e-300);
    let h = axis_steps(spec, p, rel_step);
    let mut d0123 = 0.0;
    // (dα)_{0123} = Σ_a (-1)^a ∂_a α_{(0123 without a)}
    for a in 0..4 {
        let rest: Vec<usize> = (0..4).filter(|&x| x != a).collect();
        let plus = dual_current_form(spec, &p.shifted(a, h[a])).map_err(stencil_error)?.0;
        let minus = dual_current_form(spec, &p.shifted(a, -h[a])).map_err(stencil_error)?.0;
        let der = (plus.get(&rest) - minus.get(&rest)) / (2.0 * h[a]);
        d0123 += if a % 2 == 0 { der } else { -der };
    }
    let divergence = main_identity_jet(spec, p)?.div_v;
    let exterior = d0123 / eps[[0, 1, 2, 3]];
    Ok(DualCurrentReport {
        pointwise_residual,
        divergence,
        exterior,
        rel_residual: (exterior - divergence).abs() / divergence.abs().max(1e-300),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Catalog;
    use crate::selfdual::eigen_jet;
    use approx::assert_relative_eq;

    fn schwarzschild() -> MetricSpec {
        MetricSpec::new(Catalog::EuclideanSchwarzschild { m: 1.0 })
    }

    fn bump() -> MetricSpec {
        MetricSpec::bump_over_flat(0.3)
    }

    fn bump_point() -> ChartPoint {
        ChartPoint::new([0.2, -0.3, 0.25, 0.1])
    }

    #[test]
    fn jet_oracle_on_schwarzschild() {
        // closed form at m = 1, r = 5: ∇V = 1/25, A = 9/125, B = -4/125
        let j = main_identity_jet(&schwarzschild(), &ChartPoint::new([0.5, 5.0, 1.1, 0.7])).unwrap();
        assert_relative_eq!(j.div_v, 0.04, max_relative = 1e-10);
        assert_relative_eq!(j.a, 0.072, max_relative = 1e-10);
        assert_relative_eq!(j.b, -0.032, max_relative = 1e-10);
    }

    #[test]
    fn finite_differences_match_jet_oracle_on_generic_metric() {
        let p = bump_point();
        let jet = main_identity_jet(&bump(), &p).unwrap();
        let rep = verify_point(&bump(), &p, &FdOptions::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        let scale = jet.a.abs().max(jet.b.abs());
        assert!((rep.div_v - jet.div_v).abs() < 1e-6 * scale);
        assert!((rep.b - jet.b).abs() < 1e-6 * scale);
        assert_relative_eq!(rep.a, jet.a, max_relative = 1e-10);
        assert!((jet.div_v - jet.a - jet.b).abs() < 1e-9 * scale);
    }

    #[test]
    fn spectral_gradient_matches_exact_eigen_jets() {
        let p = bump_point();
        let jet = evaluate_jet(&bump(), &p, 3).unwrap();
        let pack = curvature_pack(&jet).unwrap();
        let sys = weyl_plus_system(&pack);
        let sg = spectral_gradient(&sys, &pack).unwrap();
        let ej = eigen_jet(&jet, 2).unwrap();
        for a in 0..4 {
            let mut alpha = [0u8; 4];
            alpha[a] = 1;
            assert_relative_eq!(sg.dlambda3[a], ej.lambda.derivative(alpha), epsilon = 1e-10);
        }
        let nf = pack.connection.covariant_derivative(&ej.form).values();
        let sign = if ej.form.values().inner(&sys.forms[2], &pack.connection.ginv.values()) > 0.0 {
            1.0
        } else {
            -1.0
        };
        assert!(nf.scale(sign).sub(&sg.nabla_f).max_abs() < 1e-10 * nf.max_abs().max(1.0));
    }

    #[test]
    fn connection_forms_are_antisymmetric() {
        let p = bump_point();
        let jet = evaluate_jet(&bump(), &p, 3).unwrap();
        let pack = curvature_pack(&jet).unwrap();
        let ginv = pack.connection.ginv.values();
        let f1 = eigen_jet(&jet, 0).unwrap().form;
        let f3 = eigen_jet(&jet, 2).unwrap().form;
        let n1 = pack.connection.covariant_derivative(&f1).values();
        let n3 = pack.connection.covariant_derivative(&f3).values();
        let (v1, v3) = (f1.values(), f3.values());
        let up1 = raise_all(&v1, &ginv);
        let up3 = raise_all(&v3, &ginv);
        for a in 0..4 {
            let mut g31 = 0.0;
            let mut g13 = 0.0;
            for_each_index(2, |i| {
                g31 += 0.5 * n3[[a, i[0], i[1]]] * up1[[i[0], i[1]]];
                g13 += 0.5 * n1[[a, i[0], i[1]]] * up3[[i[0], i[1]]];
            });
            assert!(
                (g31 + g13).abs() < 1e-10 * (g31.abs() + 1.0),
                "Γ31 = {g31}, Γ13 = {g13}"
            );
        }
    }

    #[test]
    fn identity_is_even_in_eigenform_signs() {
        let p = bump_point();
        let base = point_fields(&bump(), &p).unwrap();
        for signs in [[-1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0], [-1.0, -1.0, -1.0]] {
            let f = point_fields_signed(&bump(), &p, signs).unwrap();
            assert_relative_eq!(f.a.total, base.a.total, max_relative = 1e-12);
            for a in 0..4 {
                assert_relative_eq!(f.v[a], base.v[a], epsilon = 1e-12 * base.a.total.abs());
            }
            assert!(f.dstar_z.sub(&base.dstar_z).max_abs() < 1e-12 * base.dstar_z.max_abs());
        }
    }

    #[test]
    fn kahler_rescaled_schwarzschild_has_vanishing_a() {
        let p = ChartPoint::new([0.5, 6.0, 1.0, 0.4]);
        let f = point_fields(&schwarzschild().kahler_rescaled(), &p).unwrap();
        let plain = point_fields(&schwarzschild(), &p).unwrap();
        assert!(f.a.total.abs() < 1e-12 * plain.a.total.abs());
        assert!(f.sg.nabla_f.max_abs() < 1e-10 * plain.sg.nabla_f.max_abs());
    }

    #[test]
    fn flat_space_is_a_precondition_failure() {
        let err = verify_point(
            &MetricSpec::new(Catalog::Flat),
            &ChartPoint::new([0.0; 4]),
            &FdOptions::default(),
        );
        assert!(matches!(err, Err(GeomError::ZeroLambda3 { .. })));
    }

    #[test]
    fn weitzenbock_identities_on_sphere() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let spec = MetricSpec::new(Catalog::Sphere4 { a: 1.3 });
        let beta = TrigField::random(2, &mut rng, [1.0; 4]);
        let z = TrigField::random(4, &mut rng, [1.0; 4]);
        let reps = weitzenbock_suite(&spec, &ChartPoint::new([0.3, -0.2, 0.5, 0.1]), &beta, &z).unwrap();
        assert_eq!(reps.len(), 4);
        for r in reps {
            assert!(r.rel_residual < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn conformal_relation_on_generic_metric() {
        let r = conformal_divergence_check(&bump(), &bump_point()).unwrap();
        assert!(r.rel_residual < 1e-10, "{r:?}");
        assert!(r.lhs_norm > 0.0);
    }

    #[test]
    fn dual_current_is_closed_up_to_divergence() {
        let r = dual_current_check(&schwarzschild(), &ChartPoint::new([0.5, 5.0, 1.1, 0.7]), 1e-3).unwrap();
        assert!(r.pointwise_residual < 1e-12, "{r:?}");
        assert!(r.rel_residual < 1e-5, "{r:?}");
    }
}
