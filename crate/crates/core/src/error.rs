use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point {coords:?} lies outside the {chart} chart: {reason}")]
    PointOutsideChart {
        chart: &'static str,
        coords: [f64; 4],
        reason: String,
    },
    #[error("jet order {requested} not supported (maximum {max})")]
    UnsupportedOrder { requested: usize, max: usize },
    #[error("jet order {have} insufficient, operation needs {need}")]
    InsufficientJetOrder { have: usize, need: usize },
    #[error("conformal factor is not positive ({value}) at {coords:?}")]
    NonPositiveConformalFactor { value: f64, coords: [f64; 4] },
    #[error("metric is degenerate or not positive-definite: {0}")]
    DegenerateMetric(String),
    #[error("top eigenvalue of W+ is not simple: gap {gap:.3e} below threshold {threshold:.3e}")]
    DegenerateEigenvalue { gap: f64, threshold: f64 },
    #[error("largest eigenvalue of W+ vanishes ({lambda3:.3e}, curvature scale {scale:.3e})")]
    ZeroLambda3 { lambda3: f64, scale: f64 },
    #[error("finite-difference stencil leaves the chart: {0}")]
    StencilOutsideChart(String),
    #[error("curve parameter stencil invalid: {0}")]
    StencilOutsideValidity(String),
    #[error("curve is not an infinitesimal Einstein deformation: |dE| = {delta_e:.3e} > {tol:.3e}")]
    HypothesisViolated { delta_e: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl GeomError {
    /// Stable machine-readable tag used in report failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            GeomError::PointOutsideChart { .. } => "PointOutsideChart",
            GeomError::UnsupportedOrder { .. } => "UnsupportedOrder",
            GeomError::InsufficientJetOrder { .. } => "InsufficientJetOrder",
            GeomError::NonPositiveConformalFactor { .. } => "NonPositiveConformalFactor",
            GeomError::DegenerateMetric(_) => "DegenerateMetric",
            GeomError::DegenerateEigenvalue { .. } => "DegenerateEigenvalue",
            GeomError::ZeroLambda3 { .. } => "ZeroLambda3",
            GeomError::StencilOutsideChart(_) => "StencilOutsideChart",
            GeomError::StencilOutsideValidity(_) => "StencilOutsideValidity",
            GeomError::HypothesisViolated { .. } => "HypothesisViolated",
            GeomError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
