//! Acceptance run: one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sdweyl::asymptotics::{
    boundary_exponents, boundary_integral_estimate, decay_fit, norm_identities_check, FieldSelector,
};
use sdweyl::curvature::curvature_pack;
use sdweyl::geometry::{
    evaluate_jet, random_points, Catalog, ChartPoint, CurveSpec, Family, Grid, MetricSpec, Orientation,
};
use sdweyl::identity::{conformal_divergence_check, verify_main_identity, weitzenbock_suite, FdOptions, TrigField};
use sdweyl::kahler::{check_parallel, kahler_rescale, Verdict, DEFAULT_TOL};
use sdweyl::perturbation::{
    check_a_expansion, check_order1_closed, check_second_order_parallel, einstein_gate, HYPOTHESIS_TOL, ORDER1_TOL,
};
use sdweyl::selfdual::{eigen_trace_check, weyl_plus_system};
use sdweyl::GeomError;

type Verdicts = (bool, String);

fn schwarzschild() -> MetricSpec {
    MetricSpec::new(Catalog::EuclideanSchwarzschild { m: 1.0 })
}

fn bump() -> MetricSpec {
    MetricSpec::bump_over_flat(0.3)
}

fn bump_points(n: usize, seed: u64) -> Vec<ChartPoint> {
    random_points(&Catalog::Flat, n, seed)
        .into_iter()
        .map(|p| ChartPoint::new(p.coords.map(|x| 0.6 * x)))
        .collect()
}

fn main_identity() -> Verdicts {
    let grid = Grid::parse(
        &Catalog::EuclideanSchwarzschild { m: 1.0 },
        "tau=0.5:3:2,r=3:20:5,theta=0.4:2.7:5,phi=0.3:5:2",
    )
    .unwrap();
    let pts = grid.points();
    let t = Instant::now();
    let reps = verify_main_identity(&schwarzschild(), &pts, &FdOptions::default());
    let secs = t.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    let mut min_order = f64::INFINITY;
    let mut ok = reps.len() >= 100;
    for r in &reps {
        match r {
            Ok(r) => {
                worst = worst.max(r.rel_residual);
                if let Some(o) = r.observed_order {
                    min_order = min_order.min(o);
                }
                ok &= r.pass;
            }
            Err(_) => ok = false,
        }
    }
    ok &= secs <= 60.0;
    (
        ok,
        format!(
            "{} points, worst rel {worst:.2e}, min order {min_order:.2}, {secs:.1} s",
            reps.len()
        ),
    )
}

fn generic_stress() -> Verdicts {
    let pts = bump_points(150, 7);
    let reps = verify_main_identity(&bump(), &pts, &FdOptions::default());
    let mut certified = 0;
    let mut skipped = 0;
    let mut worst = 0.0f64;
    let mut ok = true;
    for r in reps {
        match r {
            Ok(r) => {
                certified += 1;
                worst = worst.max(r.rel_residual);
                ok &= r.pass;
            }
            Err(GeomError::DegenerateEigenvalue { .. }) => skipped += 1,
            Err(_) => ok = false,
        }
    }
    ok &= certified >= 50;
    (
        ok,
        format!("{certified} certified, {skipped} below gap threshold, worst rel {worst:.2e}"),
    )
}

fn weitzenbock() -> Verdicts {
    let metrics = [
        (schwarzschild(), Catalog::EuclideanSchwarzschild { m: 1.0 }),
        (
            MetricSpec::new(Catalog::Sphere4 { a: 1.0 }),
            Catalog::Sphere4 { a: 1.0 },
        ),
        (bump(), Catalog::Flat),
    ];
    let mut worst = 0.0f64;
    let mut ok = true;
    let mut count = 0;
    for (k, (spec, cat)) in metrics.iter().enumerate() {
        let pts = if matches!(cat, Catalog::Flat) {
            bump_points(100, 3)
        } else {
            random_points(cat, 100, 3)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for p in &pts {
            let scale = cat.coordinate_scale(p.coords);
            let beta = TrigField::random(2, &mut rng, scale);
            let z = TrigField::random(4, &mut rng, scale);
            match weitzenbock_suite(spec, p, &beta, &z) {
                Ok(reps) => {
                    count += 1;
                    for r in reps {
                        worst = worst.max(r.rel_residual);
                    }
                }
                Err(_) => ok = false,
            }
        }
    }
    ok &= worst <= 1e-8;
    (ok, format!("{count} points x 4 identities, worst rel {worst:.2e}"))
}

fn eigenstructure() -> Verdicts {
    let mut worst = 0.0f64;
    let mut ok = true;
    for cat in Catalog::all_examples() {
        for p in random_points(&cat, 1000, 11) {
            match evaluate_jet(&MetricSpec::new(cat), &p, 2).and_then(|j| curvature_pack(&j)) {
                Ok(pack) => {
                    let r = eigen_trace_check(&pack);
                    worst = worst.max(r.trace_rel).max(r.square_rel);
                }
                Err(_) => ok = false,
            }
        }
    }
    let spec = MetricSpec::new(Catalog::ProductS2xS2 { a: 1.0, b: 1.0 });
    let mut pattern = 0.0f64;
    for p in random_points(&spec.catalog, 100, 5) {
        let pack = curvature_pack(&evaluate_jet(&spec, &p, 2).unwrap()).unwrap();
        let [l1, l2, l3] = weyl_plus_system(&pack).lambda;
        pattern = pattern.max((l1 + l3 / 2.0).abs().max((l2 + l3 / 2.0).abs()) / l3.abs());
    }
    ok &= worst <= 1e-9 && pattern <= 1e-8;
    (
        ok,
        format!("worst trace/square rel {worst:.2e}, S2xS2 pattern deviation {pattern:.2e}"),
    )
}

fn conformal_relation() -> Verdicts {
    let mut worst = 0.0f64;
    let mut ok = true;
    let runs = [
        (schwarzschild(), random_points(&schwarzschild().catalog, 50, 2)),
        (bump(), bump_points(50, 2)),
    ];
    for (spec, pts) in runs {
        for p in pts {
            match conformal_divergence_check(&spec, &p) {
                Ok(r) => worst = worst.max(r.rel_residual),
                Err(GeomError::DegenerateEigenvalue { .. }) => {}
                Err(_) => ok = false,
            }
        }
    }
    ok &= worst <= 1e-8;
    (ok, format!("worst rel {worst:.2e}"))
}

fn kahler_detection() -> Verdicts {
    let schw = check_parallel(
        &schwarzschild(),
        &random_points(&schwarzschild().catalog, 40, 4),
        DEFAULT_TOL,
    );
    let s2 = MetricSpec::new(Catalog::ProductS2xS2 { a: 1.0, b: 1.0 });
    let prod = check_parallel(&s2, &random_points(&s2.catalog, 40, 4), DEFAULT_TOL);
    let generic = check_parallel(&bump(), &bump_points(10, 4), DEFAULT_TOL);
    let flat = kahler_rescale(&MetricSpec::new(Catalog::Flat));
    let eh = Catalog::EguchiHanson { a: 1.0 };
    let p = ChartPoint::new(eh.default_point());
    let lam = |o: Orientation| {
        let spec = MetricSpec::new(eh).with_orientation(o);
        let pack = curvature_pack(&evaluate_jet(&spec, &p, 2).unwrap()).unwrap();
        let sys = weyl_plus_system(&pack);
        (sys.lambda, sys.riemann_norm, sys.simple_top)
    };
    let (l_minus, rm, _) = lam(Orientation::Minus);
    let (l_plus, _, simple) = lam(Orientation::Plus);
    let eh_ok = l_minus[2].abs() <= 1e-12 * rm && l_plus[2] > 1e-3 * rm && simple;
    let schw_ok = schw
        .as_ref()
        .is_ok_and(|v| v.verdict == Verdict::ConformallyKahler && v.max_nabla_f_hat <= 1e-6);
    let prod_ok = prod.as_ref().is_ok_and(|v| v.verdict == Verdict::Kahler);
    let gen_ok = generic.as_ref().is_ok_and(|v| v.verdict == Verdict::Generic);
    let flat_ok = matches!(flat, Err(GeomError::ZeroLambda3 { .. }));
    let show = |r: &Result<sdweyl::kahler::KahlerVerdict, GeomError>| match r {
        Ok(v) => format!("{:?}", v.verdict),
        Err(e) => e.kind().to_string(),
    };
    (
        schw_ok && prod_ok && gen_ok && flat_ok && eh_ok,
        format!(
            "Schwarzschild {} (max |∇̂F̂| {:.1e}), S2xS2 {}, bump {}, Flat {}, Eguchi-Hanson λ₃ {:.1e} / {:.3}",
            show(&schw),
            schw.as_ref().map(|v| v.max_nabla_f_hat).unwrap_or(f64::NAN),
            show(&prod),
            show(&generic),
            if flat_ok { "ZeroLambda3" } else { "unexpected" },
            l_minus[2],
            l_plus[2],
        ),
    )
}

fn norm_identities() -> Verdicts {
    let mut worst = 0.0f64;
    let mut ok = true;
    for p in random_points(&schwarzschild().catalog, 200, 6) {
        match norm_identities_check(&schwarzschild(), &p) {
            Ok(r) => worst = worst.max(r.max_rel),
            Err(_) => ok = false,
        }
    }
    ok &= worst <= 1e-10;
    (ok, format!("200 points, worst rel {worst:.2e}"))
}

fn alf_decay() -> Verdicts {
    let radii: Vec<f64> = (0..8).map(|k| 10.0 * 10f64.powf(k as f64 / 7.0)).collect();
    let base = ChartPoint::new(schwarzschild().catalog.default_point());
    let mut ok = true;
    let mut parts = vec![];
    for (f, tol) in [
        (FieldSelector::Omega, 0.1),
        (FieldSelector::FHat, 0.1),
        (FieldSelector::EpsHat, 0.15),
        (FieldSelector::GHatInv, 0.1),
    ] {
        match decay_fit(&schwarzschild(), f, &radii, &base) {
            Ok(r) => {
                ok &= (r.fitted_exponent - f.expected_exponent()).abs() <= tol;
                parts.push(format!("{} {:+.3}", f.name(), r.fitted_exponent));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{} {}", f.name(), e.kind()));
            }
        }
    }
    (ok, parts.join(", "))
}

fn perturbation_claims() -> Verdicts {
    let cat = Catalog::EuclideanSchwarzschild { m: 1.0 };
    // the gauge field is localized around the default point, so sample inside its support
    let d = cat.default_point();
    let pts: Vec<ChartPoint> = [
        [0.0, 0.0, 0.0, 0.0],
        [0.3, 0.1, 0.2, -0.4],
        [-0.2, -0.15, -0.25, 0.6],
        [0.5, 0.2, -0.1, 1.0],
    ]
    .iter()
    .map(|o| ChartPoint::new([d[0] + o[0], d[1] * (1.0 + o[1]), d[2] + o[2], d[3] + o[3]]))
    .collect();
    let mut ok = true;
    let mut parts = vec![];
    for (name, family) in [
        ("mass", Family::mass(&cat).unwrap()),
        ("gauge", Family::gauge_example(&cat)),
    ] {
        let curve = CurveSpec::new(schwarzschild(), family);
        let gate = einstein_gate(&curve, &pts);
        let order1 = check_order1_closed(&curve, &pts, ORDER1_TOL);
        let a = check_a_expansion(&curve, &pts, 1e-6);
        let par = check_second_order_parallel(&curve, &pts);
        let pass = gate.as_ref().is_ok_and(|d| *d <= HYPOTHESIS_TOL)
            && order1.as_ref().is_ok_and(|r| r.pass)
            && a.as_ref().is_ok_and(|r| r.pass)
            && par.as_ref().is_ok_and(|r| r.pass);
        ok &= pass;
        parts.push(format!(
            "{name}: δE {:.1e}, |d δF̂| {:.1e}, δ²Â residual {:.1e}, |∇̂J| {:.1e}",
            gate.unwrap_or(f64::NAN),
            order1.map(|r| r.max_norm).unwrap_or(f64::NAN),
            a.map(|r| r.max_residual).unwrap_or(f64::NAN),
            par.map(|r| r.norms[2]).unwrap_or(f64::NAN),
        ));
    }
    (ok, parts.join("; "))
}

fn boundary_decay() -> Verdicts {
    let cat = Catalog::EuclideanSchwarzschild { m: 1.0 };
    let curve = CurveSpec::new(schwarzschild(), Family::mass(&cat).unwrap());
    let radii: Vec<f64> = (0..6).map(|k| 10.0 * 6f64.powf(k as f64 / 5.0)).collect();
    // the integrand is invariant along τ and φ, so a coarse midpoint grid suffices
    match boundary_integral_estimate(&curve, &radii, [2, 6, 2]) {
        Ok(samples) => {
            let (n, a) = boundary_exponents(&samples);
            (
                (n + 3.0).abs() <= 0.3 && (a + 1.0).abs() <= 0.3,
                format!("integrand {n:+.3}, surface {a:+.3}"),
            )
        }
        Err(e) => (false, e.kind().to_string()),
    }
}

fn determinism() -> Verdicts {
    let runs: [&[&str]; 9] = [
        &["verify-identity", "--metric", "bump", "--points", "3"],
        &["weitzenbock", "--metric", "schwarzschild", "--points", "3"],
        &["conformal-check", "--metric", "schwarzschild", "--points", "3"],
        &["detect-kahler", "--metric", "schwarzschild", "--points", "3"],
        &["norms", "--metric", "schwarzschild", "--points", "3", "--format", "csv"],
        &[
            "decay-fit",
            "--metric",
            "schwarzschild",
            "--field",
            "omega",
            "--radii",
            "10:100:4",
        ],
        &[
            "boundary",
            "--metric",
            "schwarzschild",
            "--family",
            "mass",
            "--radii",
            "10:60:3",
            "--resolution",
            "2",
        ],
        &[
            "perturb",
            "--metric",
            "schwarzschild",
            "--family",
            "gauge",
            "--points",
            "2",
        ],
        &["list-catalog"],
    ];
    let run = |args: &[&str], threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_sdweyl"))
            .args(args)
            .env("INSTANTON_THREADS", threads)
            .output()
            .map(|o| (o.status.code(), o.stdout))
            .ok()
    };
    let mut bad = vec![];
    for args in runs {
        let a = run(args, "1");
        let b = run(args, "2");
        if a.is_none() || a != b {
            bad.push(args[0]);
        }
    }
    (
        bad.is_empty(),
        if bad.is_empty() {
            "9 subcommands byte-identical across runs".into()
        } else {
            format!("differs: {bad:?}")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdicts); 11] = [
        ("main identity on Schwarzschild", main_identity),
        ("main identity on a generic metric", generic_stress),
        ("Weitzenböck identities", weitzenbock),
        ("eigenvalue trace relations", eigenstructure),
        ("conformal relation", conformal_relation),
        ("Kähler detection", kahler_detection),
        ("exact norm identities", norm_identities),
        ("ALF decay exponents", alf_decay),
        ("perturbation claims", perturbation_claims),
        ("boundary decay", boundary_decay),
        ("determinism", determinism),
    ];
    let mut failed = vec![];
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f();
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
        if !ok {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
