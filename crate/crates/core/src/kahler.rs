//! Conformal rescaling by `Ω = λ₃^{1/3}` and Kähler detection.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::curvature_pack;
use crate::error::{GeomError, Result};
use crate::geometry::{evaluate_jet, ChartPoint, MetricJet, MetricSpec};
use crate::identity::spectral_gradient;
use crate::selfdual::{top_eigen_jet, weyl_plus_system};
use crate::taylor::Taylor;
use crate::tensor::{Field, Values};

/// Default relative tolerance on `|∇F| / (|W⁺|^{1/2} |F|)`.
pub const DEFAULT_TOL: f64 = 1e-6;

/// `ĝ = λ₃^{2/3} g`. Fails with `ZeroLambda3` if `λ₃` vanishes at the
/// catalog's default point.
pub fn kahler_rescale(spec: &MetricSpec) -> Result<MetricSpec> {
    spec.validate()?;
    let p = ChartPoint::new(spec.catalog.default_point());
    let pack = curvature_pack(&evaluate_jet(spec, &p, 2)?)?;
    let sys = weyl_plus_system(&pack);
    if sys.lambda[2] <= crate::selfdual::ZERO_LAMBDA3_REL * sys.riemann_norm {
        return Err(GeomError::ZeroLambda3 {
            lambda3: sys.lambda[2],
            scale: sys.riemann_norm,
        });
    }
    Ok(spec.kahler_rescaled())
}

/// Rescaled structure `(F̂, ĝ) = (λ₃^{2/3} F, λ₃^{2/3} g)` as jets two orders
/// below the input. `F̂` is the top eigenform of `ĝ`'s own `W⁺`, normalised to
/// `|F̂|²_ĝ = 2`, because the eigenforms of `W⁺` are conformally invariant.
#[derive(Clone, Debug)]
pub struct KahlerStructure {
    pub form: Field,
    pub metric: MetricJet,
    pub omega2: Taylor,
}

pub fn kahler_structure(jet: &MetricJet) -> Result<KahlerStructure> {
    let ej = top_eigen_jet(jet)?;
    let omega2 = ej.lambda.powf(2.0 / 3.0);
    let order = omega2.order();
    let g = jet.g.truncate(order).mul_scalar(&omega2);
    Ok(KahlerStructure {
        form: ej.form.truncate(order).mul_scalar(&omega2),
        metric: MetricJet {
            point: jet.point,
            order,
            orientation: jet.orientation,
            g,
        },
        omega2,
    })
}

/// `J^a{}_b = √2 F̂_{bc} ĝ^{ca}` of the rescaled metric, as `J[[a, b]]`.
pub fn almost_complex_j(spec: &MetricSpec, p: &ChartPoint) -> Result<Values> {
    let hat = spec.kahler_rescaled();
    let pack = curvature_pack(&evaluate_jet(&hat, p, 2)?)?;
    let sys = weyl_plus_system(&pack);
    sys.require_simple_positive()?;
    Ok(complex_structure(&sys.forms[2], &pack.connection.ginv.values()))
}

/// `J^a{}_b = √2 F_{bc} g^{ca}`.
pub fn complex_structure(f: &Values, ginv: &Values) -> Values {
    let r2 = std::f64::consts::SQRT_2;
    Values::from_fn(2, |i| (0..4).map(|c| r2 * f[[i[1], c]] * ginv[[c, i[0]]]).sum())
}

/// `max |J² + 1|` and `max |g(J·,J·) - g|` relative to `max |g|`.
pub fn j_defects(j: &Values, g: &Values) -> (f64, f64) {
    let mut sq = 0.0f64;
    let mut compat = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let jj: f64 = (0..4).map(|c| j[[a, c]] * j[[c, b]]).sum();
            sq = sq.max((jj + if a == b { 1.0 } else { 0.0 }).abs());
            let mut gjj = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    gjj += g[[c, d]] * j[[c, a]] * j[[d, b]];
                }
            }
            compat = compat.max((gjj - g[[a, b]]).abs());
        }
    }
    (sq, compat / g.max_abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Kahler,
    ConformallyKahler,
    Degenerate,
    Generic,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EigenPattern {
    /// `max |λ̂_i + λ̂₃/2| / λ̂₃` over samples, `i = 1, 2`.
    pub max_deviation: f64,
    pub collapsed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KahlerVerdict {
    pub verdict: Verdict,
    /// Worst `|∇F|_g` (relative) on the unrescaled metric.
    pub max_nabla_f: f64,
    /// Worst `|∇̂F̂|_ĝ` (relative) after rescaling.
    pub max_nabla_f_hat: f64,
    /// Worst `|dF̂|_ĝ` (relative) after rescaling.
    pub max_df: f64,
    pub eigen_pattern: EigenPattern,
    pub worst_point: [f64; 4],
    pub samples: usize,
}

/// Relative parallelism defect of the top eigenform at a point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParallelSample {
    pub nabla_f: f64,
    pub df: f64,
    pub lambda: [f64; 3],
    pub simple: bool,
}

/// `|∇F|/(|W⁺|^{1/2}|F|)` and `|dF|/(|W⁺|^{1/2}|F|)` from the spectral gradient.
pub fn parallel_sample(spec: &MetricSpec, p: &ChartPoint) -> Result<ParallelSample> {
    let pack = curvature_pack(&evaluate_jet(spec, p, 3)?)?;
    let sys = weyl_plus_system(&pack);
    if sys.lambda[2] <= crate::selfdual::ZERO_LAMBDA3_REL * sys.riemann_norm {
        return Err(GeomError::ZeroLambda3 {
            lambda3: sys.lambda[2],
            scale: sys.riemann_norm,
        });
    }
    if !sys.simple_top {
        return Ok(ParallelSample {
            nabla_f: f64::NAN,
            df: f64::NAN,
            lambda: sys.lambda,
            simple: false,
        });
    }
    let sg = spectral_gradient(&sys, &pack)?;
    let ginv = pack.connection.ginv.values();
    let nf = &sg.nabla_f;
    let df = Values::from_fn(3, |i| {
        let (a, b, c) = (i[0], i[1], i[2]);
        nf[[a, b, c]] + nf[[b, c, a]] + nf[[c, a, b]]
    });
    let scale = sys.weyl_part_norm.sqrt() * std::f64::consts::SQRT_2;
    Ok(ParallelSample {
        nabla_f: nf.norm(&ginv) / scale,
        df: df.norm(&ginv) / scale,
        lambda: sys.lambda,
        simple: true,
    })
}

pub fn check_parallel(spec: &MetricSpec, points: &[ChartPoint], tol: f64) -> Result<KahlerVerdict> {
    let hat = spec.kahler_rescaled();
    let rows: Vec<(ParallelSample, ParallelSample)> = points
        .par_iter()
        .map(|p| Ok((parallel_sample(spec, p)?, parallel_sample(&hat, p)?)))
        .collect::<Result<_>>()?;
    let mut max_nabla_f = 0.0f64;
    let mut max_nabla_f_hat = 0.0f64;
    let mut max_df = 0.0f64;
    let mut max_dev = 0.0f64;
    let mut worst = (f64::NEG_INFINITY, points.first().map(|p| p.coords).unwrap_or([0.0; 4]));
    let mut degenerate = false;
    for (p, (plain, hatted)) in points.iter().zip(&rows) {
        if !plain.simple || !hatted.simple {
            degenerate = true;
            continue;
        }
        max_nabla_f = max_nabla_f.max(plain.nabla_f);
        max_nabla_f_hat = max_nabla_f_hat.max(hatted.nabla_f);
        max_df = max_df.max(hatted.df);
        let [l1, l2, l3] = hatted.lambda;
        max_dev = max_dev.max((l1 + l3 / 2.0).abs().max((l2 + l3 / 2.0).abs()) / l3);
        let badness = plain.nabla_f.min(hatted.nabla_f);
        if badness > worst.0 {
            worst = (badness, p.coords);
        }
    }
    let verdict = if degenerate {
        Verdict::Degenerate
    } else if max_nabla_f <= tol {
        Verdict::Kahler
    } else if max_nabla_f_hat <= tol {
        Verdict::ConformallyKahler
    } else {
        Verdict::Generic
    };
    Ok(KahlerVerdict {
        verdict,
        max_nabla_f,
        max_nabla_f_hat,
        max_df,
        eigen_pattern: EigenPattern {
            max_deviation: max_dev,
            collapsed: max_dev <= 1e-6,
        },
        worst_point: worst.1,
        samples: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Catalog, Orientation};
    use approx::assert_relative_eq;

    fn schwarzschild() -> MetricSpec {
        MetricSpec::new(Catalog::EuclideanSchwarzschild { m: 1.0 })
    }

    fn schw_points() -> Vec<ChartPoint> {
        [3.0, 5.0, 9.0]
            .iter()
            .map(|&r| ChartPoint::new([0.4, r, 1.2, 0.3]))
            .collect()
    }

    #[test]
    fn structure_matches_rescaled_metric_jet() {
        let p = ChartPoint::new([0.4, 5.0, 1.2, 0.3]);
        let ks = kahler_structure(&evaluate_jet(&schwarzschild(), &p, 4).unwrap()).unwrap();
        let hat = evaluate_jet(&schwarzschild().kahler_rescaled(), &p, 2).unwrap();
        assert_eq!(ks.metric.order, 2);
        for a in 0..4 {
            for b in 0..4 {
                for alpha in [[0, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 2, 0, 0], [0, 1, 1, 0]] {
                    assert_relative_eq!(
                        ks.metric.partial(a, b, alpha),
                        hat.partial(a, b, alpha),
                        epsilon = 1e-10
                    );
                }
            }
        }
        let ghat_inv = crate::curvature::curvature_pack(&hat).unwrap().connection.ginv.values();
        assert_relative_eq!(
            ks.form.values().norm(&ghat_inv),
            std::f64::consts::SQRT_2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn complex_structure_is_orthogonal_almost_complex() {
        let j = almost_complex_j(&schwarzschild(), &ChartPoint::new([0.4, 4.0, 1.2, 0.3])).unwrap();
        let hat = evaluate_jet(
            &schwarzschild().kahler_rescaled(),
            &ChartPoint::new([0.4, 4.0, 1.2, 0.3]),
            0,
        )
        .unwrap();
        let (sq, orth) = j_defects(&j, &hat.value());
        assert!(sq < 1e-12 && orth < 1e-12, "{sq} {orth}");
    }

    #[test]
    fn schwarzschild_is_conformally_kahler() {
        let v = check_parallel(&schwarzschild(), &schw_points(), DEFAULT_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::ConformallyKahler);
        assert!(v.max_nabla_f > 1e-3);
        assert!(v.eigen_pattern.collapsed);
    }

    #[test]
    fn product_of_spheres_is_kahler() {
        let spec = MetricSpec::new(Catalog::ProductS2xS2 { a: 1.0, b: 1.0 });
        let pts = vec![
            ChartPoint::new([0.2, -0.1, 0.3, 0.5]),
            ChartPoint::new([-0.4, 0.6, 0.1, -0.2]),
        ];
        assert_eq!(
            check_parallel(&spec, &pts, DEFAULT_TOL).unwrap().verdict,
            Verdict::Kahler
        );
    }

    #[test]
    fn generic_bump_is_not_conformally_kahler() {
        let pts = vec![ChartPoint::new([0.2, -0.3, 0.25, 0.1])];
        let v = check_parallel(&MetricSpec::bump_over_flat(0.3), &pts, DEFAULT_TOL).unwrap();
        assert_eq!(v.verdict, Verdict::Generic);
    }

    #[test]
    fn half_flat_orientation_cannot_be_rescaled() {
        let spec = MetricSpec::new(Catalog::TaubNut { n: 1.0 }).with_orientation(Orientation::Plus);
        assert!(matches!(kahler_rescale(&spec), Err(GeomError::ZeroLambda3 { .. })));
        assert!(matches!(
            kahler_rescale(&MetricSpec::new(Catalog::Flat)),
            Err(GeomError::ZeroLambda3 { .. })
        ));
    }
}
