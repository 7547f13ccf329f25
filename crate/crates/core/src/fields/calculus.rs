use rayon::prelude::*;

use super::{FieldConfiguration, C64};
use crate::error::{Error, Result};
use crate::grid::Grid;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Per-direction components `d_a u - i A_a u`.
pub fn covariant_gradient(config: &FieldConfiguration) -> Result<Vec<Vec<C64>>> {
    config.validate()?;
    let g = &config.grid;
    Ok((0..g.dim())
        .map(|a| {
            (0..g.len())
                .into_par_iter()
                .map(|i| g.diff(&config.u, i, a) - I * config.a[a][i] * config.u[i])
                .collect()
        })
        .collect())
}

/// Antisymmetric 2-form stored by ordered pairs `a < b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoForm {
    dim: usize,
    components: Vec<Vec<f64>>,
}

impl TwoForm {
    fn slot(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.dim);
        a * (2 * self.dim - a - 1) / 2 + (b - a - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `F_ab` at a node, antisymmetric in `(a, b)`.
    #[inline]
    pub fn get(&self, a: usize, b: usize, node: usize) -> f64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.components[self.slot(a, b)][node],
            Greater => -self.components[self.slot(b, a)][node],
            Equal => 0.0,
        }
    }

    pub fn component(&self, a: usize, b: usize) -> &[f64] {
        &self.components[self.slot(a, b)]
    }

    /// The single component `F_12` of a 2D curvature.
    pub fn f12(&self) -> &[f64] {
        &self.components[0]
    }

    /// `sum_{a<b} F_ab^2` per node.
    pub fn norm_sqr(&self) -> Vec<f64> {
        let n = self.components.first().map_or(0, Vec::len);
        (0..n).map(|i| self.components.iter().map(|c| c[i] * c[i]).sum()).collect()
    }
}

/// `F_ab = d_a A_b - d_b A_a` by the grid's first-derivative stencils.
pub fn curvature(config: &FieldConfiguration) -> Result<TwoForm> {
    config.validate()?;
    let g = &config.grid;
    let d = g.dim();
    let components = g
        .pairs()
        .into_iter()
        .map(|(a, b)| {
            (0..g.len())
                .into_par_iter()
                .map(|i| g.diff(&config.a[b], i, a) - g.diff(&config.a[a], i, b))
                .collect()
        })
        .collect();
    Ok(TwoForm { dim: d, components })
}

/// `(eps F_12 - (1 - |u|^2) / (2 eps), dbar_A u)` with
/// `dbar_A u = ((d_1 u - i A_1 u) + i (d_2 u - i A_2 u)) / 2`.
pub fn bogomolny_residual(config: &FieldConfiguration) -> Result<(Vec<f64>, Vec<C64>)> {
    if config.dim() != 2 {
        return Err(Error::Dimension(format!(
            "self-duality residual is defined in 2D, configuration has dimension {}",
            config.dim()
        )));
    }
    let f = curvature(config)?;
    let du = covariant_gradient(config)?;
    let eps = config.epsilon;
    let first = f
        .f12()
        .iter()
        .zip(&config.u)
        .map(|(f12, u)| eps * f12 - (1.0 - u.norm_sqr()) / (2.0 * eps))
        .collect();
    let second = du[0].iter().zip(&du[1]).map(|(d1, d2)| 0.5 * (d1 + I * d2)).collect();
    Ok((first, second))
}

/// `G_gamma (u, A) = (u e^{i gamma}, A + d gamma)`.
pub fn gauge_transform(config: &FieldConfiguration, gamma: &[f64]) -> Result<FieldConfiguration> {
    let g = &config.grid;
    if gamma.len() != g.len() {
        return Err(Error::Layout(format!("gamma has {} nodes, grid has {}", gamma.len(), g.len())));
    }
    let u = config.u.iter().zip(gamma).map(|(u, t)| u * C64::from_polar(1.0, *t)).collect();
    let a = (0..g.dim())
        .map(|c| (0..g.len()).map(|i| config.a[c][i] + g.diff(gamma, i, c)).collect())
        .collect();
    FieldConfiguration::new(g.clone(), config.epsilon, u, a)
}

/// `d*A = -sum_a d_a A_a`.
pub fn coulomb_residual(config: &FieldConfiguration) -> Vec<f64> {
    codifferential(&config.grid, &config.a)
}

pub(crate) fn codifferential(g: &Grid, a: &[Vec<f64>]) -> Vec<f64> {
    (0..g.len())
        .into_par_iter()
        .map(|i| -(0..g.dim()).map(|c| g.diff(&a[c], i, c)).sum::<f64>())
        .collect()
}

/// The supercurrent `<nabla^A u, i u>` per direction.
pub fn supercurrent(config: &FieldConfiguration) -> Result<Vec<Vec<f64>>> {
    let du = covariant_gradient(config)?;
    Ok(du
        .iter()
        .map(|dc| dc.iter().zip(&config.u).map(|(d, u)| (d * u.conj()).im).collect())
        .collect())
}
