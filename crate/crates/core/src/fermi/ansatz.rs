//! The concentrating ansatz `u(y, z) = u_0((z - h(y)) / eps)` on the
//! cylinder and projections of fields onto its approximate zero modes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::{FermiChart, TangentialGrid};
use super::cutoff::CutoffVortex;
use crate::error::{Error, Result};
use crate::fields::{codifferential, euler_lagrange_residual, FieldConfiguration, Perturbation, C64};
use crate::grid::GridN;

/// Builds `u = u_0((z - h(y)) / eps)` and `A = A_0((z - h(y)) / eps)` with
/// normal components only.
pub fn build_ansatz(chart: &FermiChart, cutoff: &CutoffVortex, grid: &GridN) -> Result<FieldConfiguration> {
    chart.check_matches(grid)?;
    let eps = cutoff.epsilon;
    let needed = chart.max_displacement() + 8.0 * eps * eps.ln().abs();
    if grid.normal.half_width < needed {
        return Err(Error::InsufficientCoverage(format!(
            "normal half width {} is below max|h| + 8 eps|log eps| = {needed}",
            grid.normal.half_width
        )));
    }
    let full = grid.grid();
    let n = grid.tangential_dim;
    let nc = grid.normal.axis().count;
    let plane = nc * nc;
    let len = full.len();
    let mut u = vec![C64::new(0.0, 0.0); len];
    let mut a = vec![vec![0.0; len]; n + 2];
    let slices: Vec<(Vec<C64>, [Vec<f64>; 2])> = (0..chart.grid.len())
        .into_par_iter()
        .map(|t| {
            let h = chart.h[t];
            let ax = grid.normal.axis();
            let mut su = Vec::with_capacity(plane);
            let mut sa = [Vec::with_capacity(plane), Vec::with_capacity(plane)];
            for i in 0..nc {
                for j in 0..nc {
                    let z = [ax.coord(i) - h[0], ax.coord(j) - h[1]];
                    let (uv, av) = cutoff.vortex_at(z)?;
                    su.push(uv);
                    sa[0].push(av[0]);
                    sa[1].push(av[1]);
                }
            }
            Ok((su, sa))
        })
        .collect::<Result<_>>()?;
    for (t, (su, sa)) in slices.into_iter().enumerate() {
        let off = t * plane;
        u[off..off + plane].copy_from_slice(&su);
        a[n][off..off + plane].copy_from_slice(&sa[0]);
        a[n + 1][off..off + plane].copy_from_slice(&sa[1]);
    }
    FieldConfiguration::new(full, eps, u, a)
}

/// Projection data at one tangential node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeProjection {
    pub node: usize,
    pub y: Vec<f64>,
    /// `c_beta = -eps^{-2} <S, v_beta>_eps` over the normal disc.
    pub coefficient: [f64; 2],
    /// `|v_beta|_eps^2` over the same disc.
    pub mode_norm_sqr: [f64; 2],
    /// `c_beta / |v_beta|^2`.
    pub normalized: [f64; 2],
    /// `-(H^beta + Delta h^beta)` with `H` the mean curvature of the flat base.
    pub prediction: [f64; 2],
    /// Mean curvature of the graph of `h` itself.
    pub graph_mean_curvature: [f64; 2],
    /// `|-eps^{-2} S - sum_beta prediction_beta v_beta|_eps` in the normal plane.
    pub remainder_norm: f64,
    /// `|sum_beta normalized_beta v_beta|_eps`.
    pub projected_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzResidualReport {
    pub epsilon: f64,
    /// Sup of the residual over tangentially interior nodes.
    pub residual_sup: f64,
    pub nodes: Vec<NodeProjection>,
    /// Relative L2 error of `normalized` against `prediction` over the
    /// listed nodes, per component (NaN when the prediction vanishes).
    pub relative_l2_error: [f64; 2],
    /// Aggregate `|remainder| / |projected part|` over the listed nodes.
    pub remainder_ratio: f64,
}

impl AnsatzResidualReport {
    /// CSV of `c_beta(y)` with normalizations and predictions.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.nodes.first().map_or(1, |p| p.y.len());
        let mut head: Vec<String> = (1..=n).map(|j| format!("y{j}")).collect();
        head.extend(
            ["c1", "c2", "norm1", "norm2", "normalized1", "normalized2", "prediction1", "prediction2"].map(String::from),
        );
        writeln!(out, "{}", head.join(","))?;
        for p in &self.nodes {
            let vals: Vec<String> = p
                .y
                .iter()
                .chain(&p.coefficient)
                .chain(&p.mode_norm_sqr)
                .chain(&p.normalized)
                .chain(&p.prediction)
                .map(|v| format!("{v:.12e}"))
                .collect();
            writeln!(out, "{}", vals.join(","))?;
        }
        Ok(())
    }
}

/// Normal-plane node indices of slice `t` inside the disc of radius `outer`
/// about `h(y_t)`, with their trapezoidal weights and displacements.
fn disc(grid: &GridN, t: usize, center: [f64; 2], outer: f64) -> Vec<(usize, f64, [f64; 2])> {
    let ax = grid.normal.axis();
    let nc = ax.count;
    let mut out = Vec::new();
    for i in 0..nc {
        for j in 0..nc {
            let z = [ax.coord(i) - center[0], ax.coord(j) - center[1]];
            if z[0].hypot(z[1]) <= outer {
                out.push((t * nc * nc + i * nc + j, ax.weight(i) * ax.weight(j), z));
            }
        }
    }
    out
}

fn plane_dot(phi: C64, om: [f64; 2], vu: C64, va: [f64; 2], eps: f64) -> f64 {
    (phi * vu.conj()).re + eps * eps * (om[0] * va[0] + om[1] * va[1])
}

/// Evaluates the residual of the ansatz and projects it onto the
/// approximate zero modes slice by slice.
pub fn ansatz_residual(ansatz: &FieldConfiguration, chart: &FermiChart, cutoff: &CutoffVortex, grid: &GridN) -> Result<(Perturbation, AnsatzResidualReport)> {
    chart.check_matches(grid)?;
    if ansatz.grid != grid.grid() {
        return Err(Error::Layout("ansatz does not live on the cylinder grid".into()));
    }
    let s = euler_lagrange_residual(ansatz)?;
    let n = grid.tangential_dim;
    let eps = cutoff.epsilon;
    let outer = cutoff.scaled_outer();
    let tg = TangentialGrid::of(grid);
    let nc = grid.normal.axis().count;
    let plane = nc * nc;
    let normal_interior = |k: usize| {
        let (i, j) = ((k % plane) / nc, k % nc);
        i > 0 && j > 0 && i + 1 < nc && j + 1 < nc
    };
    let residual_sup = s.sup_norm_where(|k| tg.is_interior(k / plane) && normal_interior(k));

    let nodes: Vec<NodeProjection> = (0..tg.len())
        .into_par_iter()
        .filter(|&t| tg.is_interior(t))
        .map(|t| {
            let center = chart.h[t];
            let pts = disc(grid, t, center, outer);
            let mut c = [0.0; 2];
            let mut norms = [0.0; 2];
            let mut modes = Vec::with_capacity(pts.len());
            for &(k, w, z) in &pts {
                let v = cutoff.zero_modes_at(z)?;
                let sa = [s.omega[n][k], s.omega[n + 1][k]];
                for b in 0..2 {
                    c[b] -= w * plane_dot(s.phi[k], sa, v[b].0, v[b].1, eps) / (eps * eps);
                    norms[b] += w * plane_dot(v[b].0, v[b].1, v[b].0, v[b].1, eps);
                }
                modes.push(v);
            }
            let normalized = [c[0] / norms[0], c[1] / norms[1]];
            let lap = chart.laplacian(t);
            let prediction = [-lap[0], -lap[1]];
            let mut rem = 0.0;
            let mut proj = 0.0;
            for (&(k, w, _), v) in pts.iter().zip(&modes) {
                let mut ru = -s.phi[k] / (eps * eps);
                let mut ra = [-s.omega[n][k] / (eps * eps), -s.omega[n + 1][k] / (eps * eps)];
                let mut pu = C64::new(0.0, 0.0);
                let mut pa = [0.0; 2];
                for b in 0..2 {
                    ru -= v[b].0 * prediction[b];
                    ra[0] -= v[b].1[0] * prediction[b];
                    ra[1] -= v[b].1[1] * prediction[b];
                    pu += v[b].0 * normalized[b];
                    pa[0] += v[b].1[0] * normalized[b];
                    pa[1] += v[b].1[1] * normalized[b];
                }
                rem += w * plane_dot(ru, ra, ru, ra, eps);
                proj += w * plane_dot(pu, pa, pu, pa, eps);
            }
            Ok(NodeProjection {
                node: t,
                y: tg.position(t),
                coefficient: c,
                mode_norm_sqr: norms,
                normalized,
                prediction,
                graph_mean_curvature: chart.mean_curvature[t],
                remainder_norm: rem.sqrt(),
                projected_norm: proj.sqrt(),
            })
        })
        .collect::<Result<_>>()?;

    let mut relative_l2_error = [0.0; 2];
    for (b, e) in relative_l2_error.iter_mut().enumerate() {
        let num: f64 = nodes.iter().map(|p| (p.normalized[b] - p.prediction[b]).powi(2)).sum();
        let den: f64 = nodes.iter().map(|p| p.prediction[b].powi(2)).sum();
        *e = if den > 0.0 { (num / den).sqrt() } else { f64::NAN };
    }
    let rem: f64 = nodes.iter().map(|p| p.remainder_norm * p.remainder_norm).sum();
    let proj: f64 = nodes.iter().map(|p| p.projected_norm * p.projected_norm).sum();
    let remainder_ratio = if proj > 0.0 { (rem / proj).sqrt() } else { f64::INFINITY };
    Ok((s, AnsatzResidualReport { epsilon: eps, residual_sup, nodes, relative_l2_error, remainder_ratio }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    /// `(y, [<P, v_1>, <P, v_2>])` per tangential node.
    pub coefficients: Vec<(Vec<f64>, [f64; 2])>,
    /// `<phi, i u_0> + eps^2 d*omega` at every node of the cylinder grid.
    pub gauge_residual: Vec<f64>,
}

/// Translational projections of a perturbation and its pointwise gauge
/// orthogonality defect relative to the ansatz over `chart`.
pub fn project_orthogonality(p: &Perturbation, chart: &FermiChart, cutoff: &CutoffVortex, grid: &GridN) -> Result<OrthogonalityReport> {
    chart.check_matches(grid)?;
    let full = grid.grid();
    p.check_layout(&full)?;
    let n = grid.tangential_dim;
    let eps = cutoff.epsilon;
    let tg = TangentialGrid::of(grid);
    let outer = cutoff.scaled_outer();
    let coefficients: Vec<(Vec<f64>, [f64; 2])> = (0..tg.len())
        .into_par_iter()
        .map(|t| {
            let mut c = [0.0; 2];
            for (k, w, z) in disc(grid, t, chart.h[t], outer) {
                let v = cutoff.zero_modes_at(z)?;
                let pa = [p.omega[n][k], p.omega[n + 1][k]];
                for b in 0..2 {
                    c[b] += w * plane_dot(p.phi[k], pa, v[b].0, v[b].1, eps);
                }
            }
            Ok((tg.position(t), c))
        })
        .collect::<Result<_>>()?;

    let div = codifferential(&full, &p.omega);
    let nc = grid.normal.axis().count;
    let plane = nc * nc;
    let ax = grid.normal.axis();
    let gauge_residual = (0..full.len())
        .into_par_iter()
        .map(|k| {
            let t = k / plane;
            let (i, j) = ((k % plane) / nc, k % nc);
            let h = chart.h[t];
            let (u, _) = cutoff.vortex_at([ax.coord(i) - h[0], ax.coord(j) - h[1]])?;
            let iu = C64::new(0.0, 1.0) * u;
            Ok((p.phi[k] * iu.conj()).re + eps * eps * div[k])
        })
        .collect::<Result<_>>()?;
    Ok(OrthogonalityReport { coefficients, gauge_residual })
}

/// Samples `mu_1 v_1 + mu_2 v_2` of the ansatz over `chart` on the cylinder.
pub fn sample_zero_modes(chart: &FermiChart, cutoff: &CutoffVortex, grid: &GridN, mu: [f64; 2]) -> Result<Perturbation> {
    chart.check_matches(grid)?;
    let full = grid.grid();
    let n = grid.tangential_dim;
    let nc = grid.normal.axis().count;
    let plane = nc * nc;
    let ax = grid.normal.axis();
    let mut p = Perturbation::zeros_like(&full);
    for k in 0..full.len() {
        let t = k / plane;
        let (i, j) = ((k % plane) / nc, k % nc);
        let h = chart.h[t];
        let v = cutoff.zero_modes_at([ax.coord(i) - h[0], ax.coord(j) - h[1]])?;
        for b in 0..2 {
            p.phi[k] += v[b].0 * mu[b];
            p.omega[n][k] += v[b].1[0] * mu[b];
            p.omega[n + 1][k] += v[b].1[1] * mu[b];
        }
    }
    Ok(p)
}
