//! Numerical laboratory for the self-dual abelian Yang–Mills–Higgs
//! (Ginzburg–Landau) model: the degree-one vortex, the planar equations in
//! Coulomb gauge, the linearized operator and its zero modes, concentrating
//! ansatz fields around graphs of codimension two, and the geometric
//! diagnostics (excess, density, nodal sets) used to study them.

pub mod error;
pub mod experiment;
pub mod fermi;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod linearized;
pub mod planar;
pub mod radial;
pub mod sparse;

pub use error::{Error, Result};
pub use fields::{FieldConfiguration, Perturbation};
pub use grid::{Grid, Grid2, GridN, Region};
pub use radial::RadialProfile;
