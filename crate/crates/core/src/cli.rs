//! Command-line front end: configuration, subcommand dispatch and report
//! serialization.
//!
//! Every subcommand writes `{config_echo, results, summary}` as JSON, or the
//! flattened `results` table as CSV. Exit status is 0 when all checks pass,
//! 1 on a tolerance failure and 2 on a precondition or configuration failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::asymptotics::{self, FieldSelector};
use crate::error::GeomError;
use crate::fd;
use crate::geometry::{random_points, Catalog, ChartPoint, CurveSpec, Family, Grid, MetricSpec, Orientation};
use crate::identity::{self, FdOptions, TrigField};
use crate::kahler;
use crate::perturbation::{self, Quantity};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "INSTANTON_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    ConfigParse(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Domain(#[from] GeomError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigParse(_) => "ConfigParseError",
            CliError::Io { .. } => "IoError",
            CliError::Domain(e) => e.kind(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cmd {
    VerifyIdentity,
    Weitzenbock,
    ConformalCheck,
    DetectKahler,
    Norms,
    DecayFit,
    Boundary,
    Perturb,
    ListCatalog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Mass,
    Gauge,
    ConformalBump,
}

#[derive(Debug, Parser)]
#[command(
    name = "sdweyl",
    version,
    about = "Certify curvature identities on four-dimensional metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Main divergence identity at every sample point.
    VerifyIdentity,
    /// Weitzenböck identities with random analytic test fields.
    Weitzenbock,
    /// Divergence of the rescaled W⁺ against the conformal relation.
    ConformalCheck,
    /// Kähler / conformally Kähler verdict over the samples.
    DetectKahler,
    /// Exact norm identities of the rescaled structures.
    Norms,
    /// Radial decay exponents of the rescaled structures.
    DecayFit,
    /// Decay of the second-order boundary 3-form.
    Boundary,
    /// Perturbative claims along a metric curve.
    Perturb,
    /// Catalog metrics with parameters and half-flat orientation.
    ListCatalog,
}

impl Command {
    fn cmd(&self) -> Cmd {
        match self {
            Command::VerifyIdentity => Cmd::VerifyIdentity,
            Command::Weitzenbock => Cmd::Weitzenbock,
            Command::ConformalCheck => Cmd::ConformalCheck,
            Command::DetectKahler => Cmd::DetectKahler,
            Command::Norms => Cmd::Norms,
            Command::DecayFit => Cmd::DecayFit,
            Command::Boundary => Cmd::Boundary,
            Command::Perturb => Cmd::Perturb,
            Command::ListCatalog => Cmd::ListCatalog,
        }
    }
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Options shared by every subcommand; each may also come from `--config`.
#[derive(Debug, Default, Clone, clap::Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// Catalog metric name, or `bump` for the anisotropic bump over flat space.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// Metric parameter, repeatable.
    #[arg(long = "param", global = true, value_parser = parse_kv)]
    #[serde(default, deserialize_with = "de_params")]
    pub params: Vec<(String, f64)>,
    /// Orientation; defaults to the one where W⁺ does not vanish identically.
    #[arg(long, global = true)]
    pub orientation: Option<OrientationArg>,
    /// Sample grid `name=lo:hi:count,...`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Number of seeded random sample points (instead of a grid).
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Initial relative finite-difference step.
    #[arg(long = "fd-step", global = true)]
    pub fd_step: Option<f64>,
    #[arg(long, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML file with the same keys; flags take precedence.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Curve family for `boundary` and `perturb`.
    #[arg(long, global = true)]
    pub family: Option<FamilyArg>,
    /// Decay field for `decay-fit` (all fields when absent).
    #[arg(long, global = true)]
    pub field: Option<String>,
    /// Radii `lo:hi:count`, log-spaced.
    #[arg(long, global = true)]
    pub radii: Option<String>,
    /// Quadrature nodes per level-set coordinate for `boundary`.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Report `δ`/`δ²` of one quantity instead of the perturbative checks.
    #[arg(long, global = true)]
    pub quantity: Option<String>,
    /// Curve parameter step.
    #[arg(long = "h-s", global = true)]
    pub h_s: Option<f64>,
}

fn de_params<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<(String, f64)>, D::Error> {
    let m = BTreeMap::<String, f64>::deserialize(d)?;
    Ok(m.into_iter().collect())
}

impl Options {
    /// `self` over `base`, field by field.
    fn over(self, base: Options) -> Options {
        let mut params = base.params;
        for (k, v) in self.params {
            params.retain(|(bk, _)| *bk != k);
            params.push((k, v));
        }
        Options {
            metric: self.metric.or(base.metric),
            params,
            orientation: self.orientation.or(base.orientation),
            grid: self.grid.or(base.grid),
            points: self.points.or(base.points),
            seed: self.seed.or(base.seed),
            tol: self.tol.or(base.tol),
            fd_step: self.fd_step.or(base.fd_step),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
            threads: self.threads.or(base.threads),
            config: self.config,
            family: self.family.or(base.family),
            field: self.field.or(base.field),
            radii: self.radii.or(base.radii),
            resolution: self.resolution.or(base.resolution),
            quantity: self.quantity.or(base.quantity),
            h_s: self.h_s.or(base.h_s),
        }
    }
}

/// Fully resolved run configuration; echoed verbatim in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub subcommand: Cmd,
    pub metric: String,
    pub params: BTreeMap<String, f64>,
    pub orientation: OrientationArg,
    pub grid: Option<String>,
    pub points: Option<usize>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub fd_step: f64,
    pub format: Format,
    pub family: Option<FamilyArg>,
    pub field: Option<String>,
    pub radii: Option<String>,
    pub resolution: Option<usize>,
    pub quantity: Option<String>,
    pub h_s: Option<f64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

fn read_config_file(path: &Path) -> Result<Options, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| CliError::ConfigParse(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(cmd: Cmd, flags: Options) -> Result<Self, CliError> {
        let opts = match &flags.config {
            Some(path) => {
                let file = read_config_file(path)?;
                flags.over(file)
            }
            None => flags,
        };
        if let Some(t) = opts.tol {
            if !(t > 0.0) {
                return Err(CliError::ConfigParse(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(h) = opts.fd_step {
            if !(h > 0.0) {
                return Err(CliError::ConfigParse(format!("fd-step must be positive, got {h}")));
            }
        }
        if opts.points == Some(0) || opts.resolution == Some(0) {
            return Err(CliError::ConfigParse("sample counts must be positive".into()));
        }
        let metric = opts.metric.unwrap_or_else(|| "schwarzschild".into());
        let params: BTreeMap<String, f64> = opts.params.into_iter().collect();
        let mut cfg = RunConfig {
            subcommand: cmd,
            metric,
            params,
            orientation: OrientationArg::Plus,
            grid: opts.grid,
            points: opts.points,
            seed: opts.seed.unwrap_or(1),
            tol: opts.tol,
            fd_step: opts.fd_step.unwrap_or(fd::DEFAULT_REL_STEP),
            format: opts.format.unwrap_or_default(),
            family: opts.family,
            field: opts.field,
            radii: opts.radii,
            resolution: opts.resolution,
            quantity: opts.quantity,
            h_s: opts.h_s,
            out: opts.out,
            threads: opts.threads,
        };
        cfg.orientation = match opts.orientation {
            Some(o) => o,
            None if cmd == Cmd::ListCatalog => OrientationArg::Plus,
            None => match cfg.catalog()?.half_flat_orientation() {
                Some(Orientation::Plus) => OrientationArg::Minus,
                _ => OrientationArg::Plus,
            },
        };
        Ok(cfg)
    }

    fn is_bump(&self) -> bool {
        self.metric.eq_ignore_ascii_case("bump")
    }

    pub fn catalog(&self) -> Result<Catalog, GeomError> {
        if self.is_bump() {
            return Ok(Catalog::Flat);
        }
        let params: Vec<(String, f64)> = self.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        Catalog::from_name(&self.metric, &params)
    }

    pub fn metric_spec(&self) -> Result<MetricSpec, GeomError> {
        let spec = if self.is_bump() {
            MetricSpec::bump_over_flat(self.params.get("amplitude").copied().unwrap_or(0.3))
        } else {
            MetricSpec::new(self.catalog()?)
        };
        let o = match self.orientation {
            OrientationArg::Plus => Orientation::Plus,
            OrientationArg::Minus => Orientation::Minus,
        };
        let spec = spec.with_orientation(o);
        spec.validate()?;
        Ok(spec)
    }

    /// Sample points in a fixed order.
    pub fn sample_points(&self) -> Result<Vec<ChartPoint>, GeomError> {
        let cat = self.catalog()?;
        if let Some(g) = &self.grid {
            let grid = Grid::parse(&cat, g)?;
            if grid.is_empty() {
                return Err(GeomError::InvalidParameter("empty grid".into()));
            }
            return Ok(grid.points());
        }
        if self.is_bump() {
            let grid = Grid::parse(&cat, "x0=-0.6:0.6:2,x1=-0.6:0.6:3,x2=-0.6:0.6:3,x3=-0.6:0.6:2")?;
            return Ok(match self.points {
                Some(n) => random_points(&cat, n, self.seed)
                    .into_iter()
                    .map(|p| ChartPoint::new(p.coords.map(|x| 0.6 * x)))
                    .collect(),
                None => grid.points(),
            });
        }
        Ok(match self.points {
            Some(n) => random_points(&cat, n, self.seed),
            None => Grid::from_box(&cat, [2, 3, 3, 2]).points(),
        })
    }

    pub fn radii(&self, default: &str) -> Result<Vec<f64>, GeomError> {
        let s = self.radii.as_deref().unwrap_or(default);
        let bad = || GeomError::InvalidParameter(format!("bad radii '{s}', expected lo:hi:count"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(bad());
        }
        Ok(fd::log_spaced(lo, hi, n))
    }

    pub fn curve(&self) -> Result<CurveSpec, GeomError> {
        let base = self.metric_spec()?;
        let cat = base.catalog.clone();
        let family = match self.family.unwrap_or(FamilyArg::Mass) {
            FamilyArg::Mass => Family::mass(&cat)
                .ok_or_else(|| GeomError::InvalidParameter(format!("{} has no scale parameter", cat.name())))?,
            FamilyArg::Gauge => Family::gauge_example(&cat),
            FamilyArg::ConformalBump => Family::conformal_bump_example(&cat),
        };
        let mut curve = CurveSpec::new(base, family);
        if let Some(h) = self.h_s {
            curve.h_s = h;
        }
        Ok(curve)
    }
}

/// Results of one subcommand before serialization.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Vec<Value>,
    pub max_residual: Option<f64>,
    /// All checks within tolerance.
    pub pass: bool,
    /// Some check could not run (precondition or domain failure).
    pub precondition_failure: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            ..Default::default()
        }
    }

    fn residual(&mut self, r: f64) {
        self.max_residual = Some(self.max_residual.map_or(r, |m: f64| m.max(r)));
    }

    fn failure(&mut self, point: Option<&ChartPoint>, e: &GeomError) {
        self.precondition_failure = true;
        self.pass = false;
        self.results.push(failure_record(point, e));
    }

    fn ok<T: Serialize>(&mut self, value: &T, residual: f64, pass: bool) {
        self.residual(residual);
        self.pass &= pass;
        self.results.push(to_value(value));
    }

    /// Exit status: 0 pass, 1 tolerance failure, 2 precondition failure.
    pub fn exit_code(&self) -> i32 {
        if self.precondition_failure {
            2
        } else if self.pass {
            0
        } else {
            1
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

fn failure_record(point: Option<&ChartPoint>, e: &GeomError) -> Value {
    json!({
        "failure": {
            "kind": e.kind(),
            "message": e.to_string(),
            "point": point.map(|p| p.coords),
        }
    })
}

/// Point-wise subcommands share this shape.
fn per_point<T: Serialize>(
    points: &[ChartPoint],
    results: Vec<Result<T, GeomError>>,
    judge: impl Fn(&T) -> (f64, bool),
) -> Outcome {
    let mut out = Outcome::new();
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(rep) => {
                let (res, pass) = judge(&rep);
                out.ok(&rep, res, pass);
            }
            Err(e) => out.failure(Some(p), &e),
        }
    }
    out
}

fn par_map<T: Send>(
    points: &[ChartPoint],
    f: impl Fn(usize, &ChartPoint) -> Result<T, GeomError> + Sync + Send,
) -> Vec<Result<T, GeomError>> {
    use rayon::prelude::*;
    points.par_iter().enumerate().map(|(i, p)| f(i, p)).collect()
}

fn run_verify_identity(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let spec = cfg.metric_spec()?;
    let points = cfg.sample_points()?;
    let opts = FdOptions {
        rel_step: cfg.fd_step,
        tol: cfg.tol.unwrap_or(FdOptions::default().tol),
        ..FdOptions::default()
    };
    let results = identity::verify_main_identity(&spec, &points, &opts);
    Ok(per_point(&points, results, |r| (r.rel_residual, r.pass)))
}

#[derive(Serialize)]
struct WeitzenbockRow {
    point: [f64; 4],
    reports: Vec<identity::WeitzenbockReport>,
}

fn run_weitzenbock(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let spec = cfg.metric_spec()?;
    let points = cfg.sample_points()?;
    let tol = cfg.tol.unwrap_or(1e-8);
    let results = par_map(&points, |i, p| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
        let scale = spec.catalog.coordinate_scale(p.coords);
        let beta = TrigField::random(2, &mut rng, scale);
        let z = TrigField::random(4, &mut rng, scale);
        Ok(WeitzenbockRow {
            point: p.coords,
            reports: identity::weitzenbock_suite(&spec, p, &beta, &z)?,
        })
    });
    Ok(per_point(&points, results, |row| {
        let worst = row.reports.iter().fold(0.0f64, |m, r| m.max(r.rel_residual));
        (worst, worst <= tol)
    }))
}

fn run_conformal(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let spec = cfg.metric_spec()?;
    let points = cfg.sample_points()?;
    let tol = cfg.tol.unwrap_or(1e-8);
    let results = par_map(&points, |_, p| identity::conformal_divergence_check(&spec, p));
    Ok(per_point(&points, results, |r| (r.rel_residual, r.rel_residual <= tol)))
}

fn run_detect_kahler(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let spec = cfg.metric_spec()?;
    let points = cfg.sample_points()?;
    let tol = cfg.tol.unwrap_or(kahler::DEFAULT_TOL);
    let mut out = Outcome::new();
    match kahler::check_parallel(&spec, &points, tol) {
        Ok(v) => out.ok(&v, v.max_nabla_f.min(v.max_nabla_f_hat), true),
        Err(e) => out.failure(None, &e),
    }
    Ok(out)
}

fn run_norms(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let spec = cfg.metric_spec()?;
    let points = cfg.sample_points()?;
    let tol = cfg.tol.unwrap_or(1e-10);
    let results = par_map(&points, |_, p| asymptotics::norm_identities_check(&spec, p));
    Ok(per_point(&points, results, |r| (r.max_rel, r.max_rel <= tol)))
}

fn run_decay_fit(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let spec = cfg.metric_spec()?;
    let radii = cfg.radii("10:100:8")?;
    let base = ChartPoint::new(spec.catalog.default_point());
    let fields = match &cfg.field {
        Some(name) => vec![FieldSelector::from_name(name)
            .ok_or_else(|| GeomError::InvalidParameter(format!("unknown field '{name}'")))?],
        None => FieldSelector::ALL.to_vec(),
    };
    let mut out = Outcome::new();
    for f in fields {
        let tol = cfg.tol.unwrap_or(if f == FieldSelector::EpsHat { 0.15 } else { 0.1 });
        match asymptotics::decay_fit(&spec, f, &radii, &base) {
            Ok(r) => {
                let dev = (r.fitted_exponent - r.expected_exponent).abs();
                out.ok(&r, dev, dev <= tol);
            }
            Err(e) => out.failure(None, &e),
        }
    }
    Ok(out)
}

fn run_boundary(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let curve = cfg.curve()?;
    let radii = cfg.radii("10:60:6")?;
    let n = cfg.resolution.unwrap_or(16);
    let tol = cfg.tol.unwrap_or(0.3);
    let mut out = Outcome::new();
    match asymptotics::boundary_integral_estimate(&curve, &radii, [n; 3]) {
        Ok(samples) => {
            let (norm_exp, surface_exp) = asymptotics::boundary_exponents(&samples);
            let dev = (norm_exp + 3.0).abs().max((surface_exp + 1.0).abs());
            out.ok(
                &json!({
                    "samples": samples,
                    "integrand_exponent": norm_exp,
                    "surface_exponent": surface_exp,
                }),
                dev,
                dev <= tol,
            );
        }
        Err(e) => out.failure(None, &e),
    }
    Ok(out)
}

fn run_perturb(cfg: &RunConfig) -> Result<Outcome, GeomError> {
    let curve = cfg.curve()?;
    let points = cfg.sample_points()?;
    let tol = cfg.tol.unwrap_or(perturbation::ORDER1_TOL);
    if let Some(name) = &cfg.quantity {
        let q = Quantity::from_name(name)
            .ok_or_else(|| GeomError::InvalidParameter(format!("unknown quantity '{name}'")))?;
        let results = par_map(&points, |_, p| perturbation::delta_fields(&curve, q, p));
        return Ok(per_point(&points, results, |d| (d.delta_truncation, true)));
    }
    let mut out = Outcome::new();
    match perturbation::check_order1_closed(&curve, &points, tol) {
        Ok(r) => out.ok(&json!({ "check": "order1-closed", "report": r }), r.max_norm, r.pass),
        Err(e) => {
            out.failure(None, &e);
            return Ok(out);
        }
    }
    match perturbation::check_a_expansion(&curve, &points, tol) {
        Ok(r) => out.ok(&json!({ "check": "a-expansion", "report": r }), r.max_residual, r.pass),
        Err(e) => out.failure(None, &e),
    }
    match perturbation::check_second_order_parallel(&curve, &points) {
        Ok(r) => {
            let worst = r.norms.iter().fold(0.0f64, |m, x| m.max(*x));
            out.ok(&json!({ "check": "second-order-parallel", "report": r }), worst, r.pass);
        }
        Err(e) => out.failure(None, &e),
    }
    Ok(out)
}

fn run_list_catalog() -> Outcome {
    let mut out = Outcome::new();
    for cat in Catalog::all_examples() {
        let params: BTreeMap<&str, f64> = cat.parameters().into_iter().collect();
        out.results.push(json!({
            "name": cat.name(),
            "parameters": params,
            "coordinates": cat.coordinate_names(),
            "half_flat_orientation": cat.half_flat_orientation().map(|o| format!("{o:?}").to_lowercase()),
            "sample_box": cat.sample_box(),
        }));
    }
    out.max_residual = Some(0.0);
    out
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let r = match cfg.subcommand {
        Cmd::VerifyIdentity => run_verify_identity(cfg),
        Cmd::Weitzenbock => run_weitzenbock(cfg),
        Cmd::ConformalCheck => run_conformal(cfg),
        Cmd::DetectKahler => run_detect_kahler(cfg),
        Cmd::Norms => run_norms(cfg),
        Cmd::DecayFit => run_decay_fit(cfg),
        Cmd::Boundary => run_boundary(cfg),
        Cmd::Perturb => run_perturb(cfg),
        Cmd::ListCatalog => Ok(run_list_catalog()),
    };
    r.unwrap_or_else(|e| {
        let mut out = Outcome::new();
        out.failure(None, &e);
        out
    })
}

/// The JSON report `{config_echo, results, summary}`.
pub fn report_json(cfg: Option<&RunConfig>, out: &Outcome) -> Value {
    json!({
        "config_echo": cfg.map(to_value),
        "results": out.results,
        "summary": {
            "max_residual": out.max_residual,
            "pass": out.pass,
            "exit_code": out.exit_code(),
        },
    })
}

fn flatten(prefix: &str, v: &Value, row: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, row)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(&key(&i.to_string()), x, row)),
        Value::Null => row.push((prefix.to_string(), String::new())),
        Value::String(s) => row.push((prefix.to_string(), s.clone())),
        other => row.push((prefix.to_string(), other.to_string())),
    }
}

/// Results as a CSV table; columns are the union of flattened keys in
/// first-seen order.
pub fn results_csv(results: &[Value]) -> String {
    let rows: Vec<Vec<(String, String)>> = results
        .iter()
        .map(|r| {
            let mut row = Vec::new();
            flatten("", r, &mut row);
            row
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &rows {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory csv");
    for row in &rows {
        let map: BTreeMap<&str, &str> = row.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        w.write_record(header.iter().map(|h| map.get(h.as_str()).copied().unwrap_or("")))
            .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

pub fn render(cfg: Option<&RunConfig>, format: Format, out: &Outcome) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report_json(cfg, out)).expect("json");
            s.push('\n');
            s
        }
        Format::Csv => results_csv(&out.results),
    }
}

fn thread_count(cfg: &RunConfig) -> Option<usize> {
    cfg.threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
}

/// Parse, run and write; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let format = cli.options.format.unwrap_or_default();
    let cfg = match RunConfig::resolve(cli.command.cmd(), cli.options) {
        Ok(c) => c,
        Err(e) => {
            let mut out = Outcome::new();
            out.precondition_failure = true;
            out.pass = false;
            out.results
                .push(json!({ "failure": { "kind": e.kind(), "message": e.to_string(), "point": null } }));
            print!("{}", render(None, format, &out));
            return 2;
        }
    };
    let outcome = match thread_count(&cfg) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cfg)),
            Err(_) => run(&cfg),
        },
        None => run(&cfg),
    };
    let text = render(Some(&cfg), cfg.format, &outcome);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!(
                    "{}",
                    CliError::Io {
                        path: path.display().to_string(),
                        message: e.to_string()
                    }
                );
                return 2;
            }
        }
        None => print!("{text}"),
    }
    outcome.exit_code()
}
