use thiserror::Error;

use crate::planar::ConvergenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("layout mismatch: {0}")]
    Layout(String),
    #[error("non-finite value in {field} at node {node}")]
    NonFinite { field: &'static str, node: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty region")]
    EmptyRegion,
    #[error("region exits the grid domain")]
    RegionOutsideDomain,
    #[error("grid too small for the 5-point stencil")]
    GridTooSmall,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("shooting bracket failure")]
    ShootingBracket,
    #[error("step-size underflow at r = {0}")]
    StepUnderflow(f64),
    #[error("profile coverage insufficient: need r >= {needed}, profile reaches {available}")]
    Coverage { needed: f64, available: f64 },
    #[error("profile overshoot: 1 - f or 1 - a is nonpositive in the fit window")]
    Overshoot,
    #[error("stagnation: augmented energy did not decrease for {steps} consecutive accepted steps")]
    Stagnation { steps: usize, report: Box<ConvergenceReport> },
    #[error("not converged after {} iterations", report.iterations)]
    NotConverged { report: Box<ConvergenceReport> },
    #[error("Poisson solve diverged: {0}")]
    PoissonDivergence(String),
    #[error("tube exceeds focal radius")]
    FocalRadius,
    #[error("not graphical: {0}")]
    NotGraphical(String),
    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),
    #[error("finite-difference step {0} outside [1e-7, 1e-2]")]
    StepOutOfRange(f64),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("eigen solve failed: {0}")]
    Eigen(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Layout(_) => "layout",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::EmptyRegion => "empty_region",
            Error::RegionOutsideDomain => "region_outside_domain",
            Error::GridTooSmall => "grid_too_small",
            Error::Dimension(_) => "dimension",
            Error::ShootingBracket => "shooting_bracket",
            Error::StepUnderflow(_) => "step_underflow",
            Error::Coverage { .. } => "coverage",
            Error::Overshoot => "overshoot",
            Error::Stagnation { .. } => "stagnation",
            Error::NotConverged { .. } => "not_converged",
            Error::PoissonDivergence(_) => "poisson_divergence",
            Error::FocalRadius => "focal_radius",
            Error::NotGraphical(_) => "not_graphical",
            Error::InsufficientCoverage(_) => "insufficient_coverage",
            Error::StepOutOfRange(_) => "step_out_of_range",
            Error::LinearSolve(_) => "linear_solve",
            Error::Eigen(_) => "eigen",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error reports a violated precondition on the inputs
    /// rather than a failure of a numerical method.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::Layout(_)
                | Error::NonFinite { .. }
                | Error::InvalidParameter(_)
                | Error::EmptyRegion
                | Error::RegionOutsideDomain
                | Error::GridTooSmall
                | Error::Dimension(_)
                | Error::Coverage { .. }
                | Error::FocalRadius
                | Error::InsufficientCoverage(_)
                | Error::StepOutOfRange(_)
                | Error::Format(_)
        )
    }
}
