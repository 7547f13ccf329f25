//! Fermi coordinates about graphs `z = h(y)` over the tangential box, the
//! cutoff vortex, and the concentrating ansatz on the cylinder
//! `B^n x R^2`.
//!
//! The normal frame is taken constant, so the normal connection vanishes.

mod ansatz;
mod chart;
mod cutoff;

pub use ansatz::{
    ansatz_residual, build_ansatz, project_orthogonality, sample_zero_modes, AnsatzResidualReport, NodeProjection,
    OrthogonalityReport,
};
pub use chart::{geometric_coefficients, metric_expansion, ChartDescriptor, FermiChart, GeometricCoefficients, TangentialGrid};
pub use cutoff::{build_cutoff_vortex, cutoff_function, log_log_slope, BlendSample, CutoffResidual, CutoffVortex};
