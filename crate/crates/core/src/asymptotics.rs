//! Conformal norm identities, radial decay fits and boundary 3-form estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_pack, Connection};
use crate::error::{GeomError, Result};
use crate::fd;
use crate::geometry::{evaluate_jet, ChartPoint, CurveSpec, MetricSpec};
use crate::kahler::kahler_structure;
use crate::selfdual::weyl_plus_system;
use crate::tensor::{Field, Values};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSelector {
    Omega,
    FHat,
    EpsHat,
    GHatInv,
    LambdaHatInv,
    PHat,
}

impl FieldSelector {
    pub const ALL: [FieldSelector; 6] = [
        FieldSelector::Omega,
        FieldSelector::FHat,
        FieldSelector::EpsHat,
        FieldSelector::GHatInv,
        FieldSelector::LambdaHatInv,
        FieldSelector::PHat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldSelector::Omega => "omega",
            FieldSelector::FHat => "f-hat",
            FieldSelector::EpsHat => "eps-hat",
            FieldSelector::GHatInv => "g-hat-inv",
            FieldSelector::LambdaHatInv => "lambda-hat-inv",
            FieldSelector::PHat => "p-hat",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Exponent implied by `Ω ~ 1/r`.
    pub fn expected_exponent(self) -> f64 {
        match self {
            FieldSelector::Omega => -1.0,
            FieldSelector::FHat => -2.0,
            FieldSelector::EpsHat => -4.0,
            FieldSelector::GHatInv => 2.0,
            FieldSelector::LambdaHatInv => 1.0,
            FieldSelector::PHat => -4.0,
        }
    }
}

/// `g`-norms of the rescaled structures at a point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HattedNorms {
    pub point: [f64; 4],
    /// `λ₃^{1/3}` from the unrescaled metric.
    pub omega: f64,
    /// `λ̂₃` from the rescaled metric's own spectrum.
    pub lambda_hat: f64,
    pub f_hat: f64,
    pub eps_hat: f64,
    pub g_hat_inv: f64,
    /// `|P̂_{abcd}|_g` with indices lowered by `ĝ`.
    pub p_hat: f64,
}

impl HattedNorms {
    pub fn select(&self, f: FieldSelector) -> f64 {
        match f {
            FieldSelector::Omega => self.omega,
            FieldSelector::FHat => self.f_hat,
            FieldSelector::EpsHat => self.eps_hat,
            FieldSelector::GHatInv => self.g_hat_inv,
            FieldSelector::LambdaHatInv => 1.0 / self.lambda_hat,
            FieldSelector::PHat => self.p_hat,
        }
    }
}

fn require_positive(sys: &crate::selfdual::SdWeylSystem) -> Result<()> {
    if sys.lambda[2] <= crate::selfdual::ZERO_LAMBDA3_REL * sys.riemann_norm {
        return Err(GeomError::ZeroLambda3 {
            lambda3: sys.lambda[2],
            scale: sys.riemann_norm,
        });
    }
    Ok(())
}

pub fn hatted_norms(spec: &MetricSpec, p: &ChartPoint) -> Result<HattedNorms> {
    let pack = curvature_pack(&evaluate_jet(spec, p, 2)?)?;
    let sys = weyl_plus_system(&pack);
    require_positive(&sys)?;
    let omega = sys.lambda[2].cbrt();
    let ginv = pack.connection.ginv.values();

    let hat_pack = curvature_pack(&evaluate_jet(&spec.kahler_rescaled(), p, 2)?)?;
    let hat_sys = weyl_plus_system(&hat_pack);
    hat_sys.require_simple_positive()?;
    let gh = hat_pack.connection.g.values();
    let ghinv = hat_pack.connection.ginv.values();
    let eps = hat_pack.connection.volume_form().values();
    let f = &hat_sys.forms[2];
    let p_hat = Values::from_fn(4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        f[[a, b]] * f[[c, d]] - (gh[[a, c]] * gh[[b, d]] - gh[[a, d]] * gh[[b, c]] + eps[[a, b, c, d]]) / 6.0
    });
    // |ĝ^{-1}|_g = (g_ac g_bd ĝ^ab ĝ^cd)^{1/2}
    let g = pack.connection.g.values();
    Ok(HattedNorms {
        point: p.coords,
        omega,
        lambda_hat: hat_sys.lambda[2],
        f_hat: f.norm(&ginv),
        eps_hat: eps.norm(&ginv),
        g_hat_inv: ghinv.norm(&g),
        p_hat: p_hat.norm(&ginv),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub point: [f64; 4],
    pub omega: f64,
    /// Relative residuals of `|F̂|_g = √2Ω²`, `|ε̂|_g = √24Ω⁴`,
    /// `|ĝ⁻¹|_g = 2Ω⁻²` and `λ̂₃ = Ω`.
    pub residuals: [f64; 4],
    pub max_rel: f64,
}

pub fn norm_identities_check(spec: &MetricSpec, p: &ChartPoint) -> Result<NormReport> {
    let n = hatted_norms(spec, p)?;
    let o = n.omega;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    let residuals = [
        rel(n.f_hat, 2f64.sqrt() * o * o),
        rel(n.eps_hat, 24f64.sqrt() * o.powi(4)),
        rel(n.g_hat_inv, 2.0 / (o * o)),
        rel(n.lambda_hat, o),
    ];
    Ok(NormReport {
        point: p.coords,
        omega: o,
        residuals,
        max_rel: residuals.into_iter().fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub field: FieldSelector,
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_residual: f64,
    /// Fit restricted to the upper half of the radii.
    pub upper_half_exponent: f64,
    pub expected_exponent: f64,
}

/// Points along the radial coordinate through `base`.
pub fn radial_points(spec: &MetricSpec, base: &ChartPoint, radii: &[f64]) -> Result<Vec<ChartPoint>> {
    let i = spec
        .catalog
        .radial_coordinate()
        .ok_or_else(|| GeomError::InvalidParameter(format!("{} has no radial coordinate", spec.catalog.name())))?;
    Ok(radii
        .iter()
        .map(|&r| {
            let mut c = base.coords;
            c[i] = r;
            ChartPoint::new(c)
        })
        .collect())
}

pub fn decay_fit(spec: &MetricSpec, field: FieldSelector, radii: &[f64], base: &ChartPoint) -> Result<DecayReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GeomError::InvalidParameter(
            "radii must be strictly increasing with at least two entries".into(),
        ));
    }
    let pts = radial_points(spec, base, radii)?;
    let norms: Vec<f64> = pts
        .par_iter()
        .map(|p| Ok(hatted_norms(spec, p)?.select(field)))
        .collect::<Result<_>>()?;
    let fit = fd::loglog_fit(radii, &norms);
    let h = radii.len() / 2;
    let upper = fd::loglog_fit(&radii[h..], &norms[h..]);
    Ok(DecayReport {
        field,
        radii: radii.to_vec(),
        norms,
        fitted_exponent: fit.slope,
        fit_residual: fit.residual,
        upper_half_exponent: upper.slope,
        expected_exponent: field.expected_exponent(),
    })
}

/// `F̂(s) = λ₃(s)^{2/3} F(s)` as a Taylor field of order 1, sign-aligned to `reference`.
pub(crate) fn hatted_form(curve: &CurveSpec, s: f64, p: &ChartPoint, reference: Option<&Values>) -> Result<Field> {
    let jet = evaluate_jet(&curve.member(s)?, p, 3).map_err(|e| match e {
        GeomError::PointOutsideChart { .. } => GeomError::StencilOutsideValidity(e.to_string()),
        other => other,
    })?;
    let f = kahler_structure(&jet)?.form;
    if let Some(r) = reference {
        let dot: f64 = f.values().as_slice().iter().zip(r.as_slice()).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            return Ok(f.scale(-1.0));
        }
    }
    Ok(f)
}

/// `δ²F̂` by the five-point `s`-stencil, as an order-1 Taylor field.
pub fn delta2_hatted_form(curve: &CurveSpec, p: &ChartPoint) -> Result<(Field, Field)> {
    let h = curve.h_s;
    let f0 = hatted_form(curve, 0.0, p, None)?;
    let r = f0.values();
    let fs: Vec<Field> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| hatted_form(curve, k * h, p, Some(&r)))
        .collect::<Result<_>>()?;
    let d2 = Field::from_fn(2, |i| {
        let at = |f: &Field| f[[i[0], i[1]]].clone();
        let mut t = (&at(&fs[1]) + &at(&fs[2])).scale(16.0);
        t -= &at(&fs[0]) + &at(&fs[3]);
        t -= at(&f0).scale(30.0);
        t.scale(1.0 / (12.0 * h * h))
    });
    Ok((f0, d2))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundarySample {
    pub r: f64,
    /// Max over the surface of `|α|_g` for the restricted 3-form.
    pub integrand_norm: f64,
    /// Quadrature of the restricted 3-form over `Σ_r`.
    pub surface_estimate: f64,
    /// Max over the surface of `|F̂|_g |ε̂|_g |ĝ⁻¹|³_g |∇δ²F̂|_g`.
    pub bound_norm: f64,
    /// Quadrature of `bound/√6` against the induced volume of `Σ_r`.
    pub bound_surface: f64,
    pub quadrature_points: usize,
}

struct PointBoundary {
    alpha_norm: f64,
    alpha_density: f64,
    bound: f64,
    area_density: f64,
}

fn boundary_point(curve: &CurveSpec, p: &ChartPoint, level: [usize; 3]) -> Result<PointBoundary> {
    let jet = evaluate_jet(&curve.base, p, 1)?;
    let conn = Connection::new(&jet)?;
    let g = conn.g.values();
    let ginv = conn.ginv.values();
    let (f0, d2) = delta2_hatted_form(curve, p)?;
    let pack = curvature_pack(&evaluate_jet(&curve.base, p, 2)?)?;
    let lambda = weyl_plus_system(&pack).lambda[2];
    let omega2 = lambda.powf(2.0 / 3.0);
    let fh = f0.values();
    // ε̂ = Ω⁴ ε, ĝ^{-1} = Ω⁻² g^{-1}
    let eps_hat = conn.volume_form().values().scale(omega2 * omega2);
    let ghinv = ginv.scale(1.0 / omega2);
    let partial = d2.partial().values(); // [d][e][f]
                                         // X_{c} = ε̂_{cklm} ĝ^{kd} ĝ^{le} ĝ^{mf} ∂_d (δ²F̂)_{ef}, per (c) after contraction
    let up = Values::from_fn(3, |i| {
        let mut s = 0.0;
        for d in 0..4 {
            for e in 0..4 {
                for f in 0..4 {
                    s += ghinv[[i[0], d]] * ghinv[[i[1], e]] * ghinv[[i[2], f]] * partial[[d, e, f]];
                }
            }
        }
        s
    });
    let x: [f64; 4] = std::array::from_fn(|c| {
        let mut s = 0.0;
        crate::tensor::for_each_index(3, |i| s += eps_hat[[c, i[0], i[1], i[2]]] * up[[i[0], i[1], i[2]]]);
        s
    });
    // α_{abc} = -(3/2) F̂_{[ab} X_{c]} = -½ (F̂_ab X_c + F̂_bc X_a + F̂_ca X_b)
    let alpha = crate::forms::wedge_two_one(&fh, &x).scale(-0.5);
    let [i, j, k] = level;
    let sub = |a: usize, b: usize| g[[a, b]];
    let h = [
        [sub(i, i), sub(i, j), sub(i, k)],
        [sub(j, i), sub(j, j), sub(j, k)],
        [sub(k, i), sub(k, j), sub(k, k)],
    ];
    let det_h = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
        + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
    let area_density = det_h.sqrt();
    let alpha_density = alpha[[i, j, k]];
    let nabla = conn.covariant_derivative(&d2).values();
    let bound = fh.norm(&ginv) * eps_hat.norm(&ginv) * ghinv.norm(&g).powi(3) * nabla.norm(&ginv);
    Ok(PointBoundary {
        alpha_norm: 6f64.sqrt() * alpha_density.abs() / area_density,
        alpha_density,
        bound,
        area_density,
    })
}

/// Midpoint-rule estimates of the `δ²` boundary 3-form on `Σ_r`.
pub fn boundary_integral_estimate(
    curve: &CurveSpec,
    radii: &[f64],
    resolution: [usize; 3],
) -> Result<Vec<BoundarySample>> {
    let cat = &curve.base.catalog;
    let radial = cat
        .radial_coordinate()
        .ok_or_else(|| GeomError::InvalidParameter(format!("{} has no radial coordinate", cat.name())))?;
    let level = cat
        .level_set_coordinates()
        .ok_or_else(|| GeomError::InvalidParameter(format!("{} has no level sets", cat.name())))?;
    let idx = level.map(|(i, _, _)| i);
    let cell: [f64; 3] = std::array::from_fn(|q| (level[q].2 - level[q].1) / resolution[q] as f64);
    let mut nodes = Vec::with_capacity(resolution.iter().product());
    for a in 0..resolution[0] {
        for b in 0..resolution[1] {
            for c in 0..resolution[2] {
                let ijk = [a, b, c];
                nodes.push(std::array::from_fn::<f64, 3, _>(|q| {
                    level[q].1 + (ijk[q] as f64 + 0.5) * cell[q]
                }));
            }
        }
    }
    let weight = cell[0] * cell[1] * cell[2];
    radii
        .iter()
        .map(|&r| {
            let samples: Vec<PointBoundary> = nodes
                .par_iter()
                .map(|node| {
                    let mut c = [0.0; 4];
                    c[radial] = r;
                    for q in 0..3 {
                        c[idx[q]] = node[q];
                    }
                    boundary_point(curve, &ChartPoint::new(c), idx)
                })
                .collect::<Result<_>>()?;
            Ok(BoundarySample {
                r,
                integrand_norm: samples.iter().map(|s| s.alpha_norm).fold(0.0, f64::max),
                surface_estimate: samples.iter().map(|s| s.alpha_density).sum::<f64>() * weight,
                bound_norm: samples.iter().map(|s| s.bound).fold(0.0, f64::max),
                bound_surface: samples
                    .iter()
                    .map(|s| s.bound / 6f64.sqrt() * s.area_density)
                    .sum::<f64>()
                    * weight,
                quadrature_points: samples.len(),
            })
        })
        .collect()
}

/// Log-log exponents of the bound norm and bound surface integral.
pub fn boundary_exponents(samples: &[BoundarySample]) -> (f64, f64) {
    let r: Vec<f64> = samples.iter().map(|s| s.r).collect();
    let n: Vec<f64> = samples.iter().map(|s| s.bound_norm).collect();
    let a: Vec<f64> = samples.iter().map(|s| s.bound_surface).collect();
    (fd::loglog_fit(&r, &n).slope, fd::loglog_fit(&r, &a).slope)
}
