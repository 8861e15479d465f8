use proptest::prelude::*;

use sdweyl::asymptotics::norm_identities_check;
use sdweyl::curvature::curvature_pack;
use sdweyl::geometry::{evaluate_jet, Catalog, ChartPoint, Grid, MetricSpec};
use sdweyl::identity::{conformal_divergence_check, main_identity_jet};
use sdweyl::kahler::parallel_sample;
use sdweyl::selfdual::eigen_trace_check;
use sdweyl::taylor::{coordinates, Taylor};

fn schwarzschild_point() -> impl Strategy<Value = (f64, ChartPoint)> {
    (0.5f64..2.0, 3.0f64..12.0, 0.0f64..6.0, 0.4f64..2.7, 0.0f64..6.2)
        .prop_map(|(m, x, tau, th, ph)| (m, ChartPoint::new([tau, x * m, th, ph])))
}

fn bump_point() -> impl Strategy<Value = (f64, ChartPoint)> {
    (0.1f64..0.4, prop::array::uniform4(-0.6f64..0.6)).prop_map(|(a, c)| (a, ChartPoint::new(c)))
}

fn scalar() -> impl Strategy<Value = Taylor> {
    (prop::array::uniform4(-1.0f64..1.0), 0.5f64..2.0).prop_map(|(p, c)| {
        let x = coordinates(p, 4);
        // c + 2 + 0.3 sin(x0) x1 + 0.2 x2² - 0.1 x3, bounded away from zero
        let mut t = Taylor::constant(c + 2.0, 4);
        t += &(&x[0].sin() * &x[1]).scale(0.3);
        t += &x[2].square().scale(0.2);
        t -= &x[3].scale(0.1);
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn taylor_reciprocal_and_log_invert((f, g) in (scalar(), scalar())) {
        let q = &(&f * &g) * &g.recip();
        let e = f.ln().exp();
        for (a, b) in f.coeffs().iter().zip(q.coeffs()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in f.coeffs().iter().zip(e.coeffs()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn divergence_identity_holds_exactly_on_schwarzschild((m, p) in schwarzschild_point()) {
        let spec = MetricSpec::new(Catalog::EuclideanSchwarzschild { m });
        let j = main_identity_jet(&spec, &p).unwrap();
        let scale = j.a.abs().max(j.b.abs());
        prop_assert!((j.div_v - j.a - j.b).abs() <= 1e-9 * scale);
    }

    #[test]
    fn divergence_identity_holds_exactly_on_generic_metric((a, p) in bump_point()) {
        let j = main_identity_jet(&MetricSpec::bump_over_flat(a), &p).unwrap();
        let scale = j.a.abs().max(j.b.abs());
        prop_assert!((j.div_v - j.a - j.b).abs() <= 1e-8 * scale, "{:?}", (j.div_v, j.a, j.b));
    }

    #[test]
    fn eigenvalue_traces_match_weyl_norm((m, p) in schwarzschild_point(), which in 0usize..3) {
        let spec = match which {
            0 => MetricSpec::new(Catalog::EuclideanSchwarzschild { m }),
            1 => MetricSpec::new(Catalog::Sphere4 { a: m }),
            _ => MetricSpec::new(Catalog::ProductS2xS2 { a: m, b: 1.0 }),
        };
        let p = if which == 0 { p } else { ChartPoint::new([0.1 * p.coords[2], -0.2, 0.05 * p.coords[1], 0.3]) };
        let rep = eigen_trace_check(&curvature_pack(&evaluate_jet(&spec, &p, 2).unwrap()).unwrap());
        prop_assert!(rep.trace_rel < 1e-12 && rep.square_rel < 1e-12, "{rep:?}");
    }

    #[test]
    fn eigenvalue_traces_on_generic_metric((a, p) in bump_point()) {
        let pack = curvature_pack(&evaluate_jet(&MetricSpec::bump_over_flat(a), &p, 2).unwrap()).unwrap();
        let rep = eigen_trace_check(&pack);
        prop_assert!(rep.trace_rel < 1e-12 && rep.square_rel < 1e-12, "{rep:?}");
    }

    #[test]
    fn rescaled_norms_follow_omega((m, p) in schwarzschild_point()) {
        let spec = MetricSpec::new(Catalog::EuclideanSchwarzschild { m });
        prop_assert!(norm_identities_check(&spec, &p).unwrap().max_rel < 1e-11);
    }

    #[test]
    fn rescaled_schwarzschild_form_is_parallel((m, p) in schwarzschild_point()) {
        let spec = MetricSpec::new(Catalog::EuclideanSchwarzschild { m });
        let plain = parallel_sample(&spec, &p).unwrap();
        let hat = parallel_sample(&spec.kahler_rescaled(), &p).unwrap();
        prop_assert!(plain.nabla_f > 1e-3);
        prop_assert!(hat.nabla_f < 1e-10 && hat.df < 1e-10);
    }

    #[test]
    fn conformal_relation_holds_on_generic_metric((a, p) in bump_point()) {
        let r = conformal_divergence_check(&MetricSpec::bump_over_flat(a), &p).unwrap();
        prop_assert!(r.rel_residual < 1e-9, "{r:?}");
    }

    #[test]
    fn grid_points_match_length(counts in prop::array::uniform4(1usize..4)) {
        let cat = Catalog::EuclideanSchwarzschild { m: 1.0 };
        let g = Grid::from_box(&cat, counts);
        let pts = g.points();
        prop_assert_eq!(pts.len(), g.len());
        prop_assert!(pts.iter().all(|p| cat.check_point(p.coords).is_ok()));
    }
}
