//! Higgs field / connection pairs on rectangular grids and the gauged
//! calculus acting on them.

mod calculus;
mod energy;
mod residual;
pub mod snapshot;

pub use calculus::{
    bogomolny_residual, coulomb_residual, covariant_gradient, curvature, gauge_transform, supercurrent, TwoForm,
};
pub use energy::{energy, energy_density, EnergySplit};
pub use residual::{euler_lagrange_residual, lattice_energy, lattice_gradient, LatticeGradient};
pub(crate) use calculus::codifferential;
pub(crate) use residual::{lattice_energy_and_gradient, residual_from_gradient};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Grid};

pub type C64 = Complex64;

/// A Higgs field `u` and a real connection 1-form `A` sharing one grid.
///
/// `u` is stored as interleaved (re, im) pairs per node; `a[c][node]` holds
/// component `c` of the 1-form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfiguration {
    pub grid: Grid,
    pub epsilon: f64,
    pub u: Vec<C64>,
    pub a: Vec<Vec<f64>>,
}

impl FieldConfiguration {
    pub fn new(grid: Grid, epsilon: f64, u: Vec<C64>, a: Vec<Vec<f64>>) -> Result<Self> {
        let cfg = Self { grid, epsilon, u, a };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `u = 1`, `A = 0`.
    pub fn vacuum(grid: Grid, epsilon: f64) -> Result<Self> {
        let n = grid.len();
        let d = grid.dim();
        Self::new(grid, epsilon, vec![C64::new(1.0, 0.0); n], vec![vec![0.0; n]; d])
    }

    /// Samples `(u, A)` from a function of the node position.
    pub fn from_fn(grid: Grid, epsilon: f64, mut f: impl FnMut(&[f64]) -> (C64, Vec<f64>)) -> Result<Self> {
        let n = grid.len();
        let d = grid.dim();
        let mut u = Vec::with_capacity(n);
        let mut a = vec![Vec::with_capacity(n); d];
        for i in 0..n {
            let (ui, ai) = f(&grid.position(i));
            if ai.len() != d {
                return Err(Error::Layout(format!("1-form sample has {} components, grid has {d}", ai.len())));
            }
            u.push(ui);
            for (c, v) in ai.into_iter().enumerate() {
                a[c].push(v);
            }
        }
        Self::new(grid, epsilon, u, a)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon {} must be positive", self.epsilon)));
        }
        let n = self.grid.len();
        if self.u.len() != n {
            return Err(Error::Layout(format!("u has {} nodes, grid has {n}", self.u.len())));
        }
        if self.a.len() != self.grid.dim() {
            return Err(Error::Layout(format!("A has {} components, grid dimension {}", self.a.len(), self.grid.dim())));
        }
        if let Some(c) = self.a.iter().position(|ac| ac.len() != n) {
            return Err(Error::Layout(format!("A component {c} has {} nodes, grid has {n}", self.a[c].len())));
        }
        if let Some(node) = self.u.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { field: "u", node });
        }
        for ac in &self.a {
            if let Some(node) = ac.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { field: "A", node });
            }
        }
        Ok(())
    }

    /// `self + t * p`.
    pub fn perturbed(&self, p: &Perturbation, t: f64) -> Self {
        let mut out = self.clone();
        for (u, phi) in out.u.iter_mut().zip(&p.phi) {
            *u += phi * t;
        }
        for (ac, oc) in out.a.iter_mut().zip(&p.omega) {
            for (a, o) in ac.iter_mut().zip(oc) {
                *a += o * t;
            }
        }
        out
    }

    /// `self - other` as a perturbation.
    pub fn difference(&self, other: &Self) -> Result<Perturbation> {
        if self.grid != other.grid {
            return Err(Error::Layout("configurations live on different grids".into()));
        }
        Ok(Perturbation {
            phi: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            omega: self
                .a
                .iter()
                .zip(&other.a)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
                .collect(),
        })
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.u.iter().map(|z| z.norm()).collect()
    }
}

/// A tangent vector `(phi, omega)` at a configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub phi: Vec<C64>,
    pub omega: Vec<Vec<f64>>,
}

impl Perturbation {
    pub fn zeros(dim: usize, len: usize) -> Self {
        Self { phi: vec![C64::new(0.0, 0.0); len], omega: vec![vec![0.0; len]; dim] }
    }

    pub fn zeros_like(grid: &Grid) -> Self {
        Self::zeros(grid.dim(), grid.len())
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn check_layout(&self, grid: &Grid) -> Result<()> {
        if self.phi.len() != grid.len() || self.omega.len() != grid.dim() || self.omega.iter().any(|o| o.len() != grid.len())
        {
            return Err(Error::Layout("perturbation does not match the grid layout".into()));
        }
        Ok(())
    }

    /// `self += t * other`.
    pub fn axpy(&mut self, t: f64, other: &Self) {
        for (a, b) in self.phi.iter_mut().zip(&other.phi) {
            *a += b * t;
        }
        for (ac, bc) in self.omega.iter_mut().zip(&other.omega) {
            for (a, b) in ac.iter_mut().zip(bc) {
                *a += b * t;
            }
        }
    }

    pub fn scale(&mut self, t: f64) {
        for a in &mut self.phi {
            *a *= t;
        }
        for ac in &mut self.omega {
            for a in ac {
                *a *= t;
            }
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut p = self.clone();
        p.scale(t);
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut p = self.clone();
        p.axpy(-1.0, other);
        p
    }

    /// Zeroes every node for which `keep` is false.
    pub fn mask(&mut self, keep: impl Fn(usize) -> bool) {
        for i in 0..self.phi.len() {
            if !keep(i) {
                self.phi[i] = C64::new(0.0, 0.0);
                for o in &mut self.omega {
                    o[i] = 0.0;
                }
            }
        }
    }

    /// Pointwise `<phi_1, phi_2> + eps^2 omega_1 . omega_2`.
    pub fn pointwise_dot(&self, other: &Self, epsilon: f64) -> Vec<f64> {
        let e2 = epsilon * epsilon;
        (0..self.phi.len())
            .map(|i| {
                let mut s = (self.phi[i] * other.phi[i].conj()).re;
                for (a, b) in self.omega.iter().zip(&other.omega) {
                    s += e2 * a[i] * b[i];
                }
                s
            })
            .collect()
    }

    /// The epsilon-weighted L2 inner product with nodal weights `w`.
    pub fn dot_eps(&self, other: &Self, epsilon: f64, w: &[f64]) -> f64 {
        let pd = self.pointwise_dot(other, epsilon);
        let prod: Vec<f64> = pd.iter().zip(w).map(|(p, w)| p * w).collect();
        pairwise_sum(&prod)
    }

    pub fn norm_eps(&self, epsilon: f64, w: &[f64]) -> f64 {
        self.dot_eps(self, epsilon, w).max(0.0).sqrt()
    }

    /// Largest pointwise modulus over both parts.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_where(|_| true)
    }

    pub fn sup_norm_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let mut m: f64 = 0.0;
        for i in (0..self.phi.len()).filter(|&i| keep(i)) {
            m = m.max(self.phi[i].norm());
            for o in &self.omega {
                m = m.max(o[i].abs());
            }
        }
        m
    }

    /// Sup norms of the scalar part and of the 1-form part separately.
    pub fn split_sup_where(&self, keep: impl Fn(usize) -> bool) -> (f64, f64) {
        let mut ms: f64 = 0.0;
        let mut mf: f64 = 0.0;
        for i in (0..self.phi.len()).filter(|&i| keep(i)) {
            ms = ms.max(self.phi[i].norm());
            for o in &self.omega {
                mf = mf.max(o[i].abs());
            }
        }
        (ms, mf)
    }
}
