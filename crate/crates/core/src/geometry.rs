//! Excess, density, nodal sets, graph fits and level tubes.
//!
//! Configurations on `B^n x R^2` use the layout of [`crate::grid::GridN`]:
//! the last two axes are normal and every fixed tangential node carries a
//! normal slice.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermi::{FermiChart, TangentialGrid};
use crate::fields::{EnergySplit, FieldConfiguration, C64};
use crate::grid::{pairwise_sum, Grid};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const FRAME_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessReport {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Orthonormal tangential frame of the reference plane, one row per vector.
    pub plane: Vec<Vec<f64>>,
    pub excess: f64,
    pub density_ratio: f64,
    pub energy: EnergySplit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub radius: f64,
    pub energy: EnergySplit,
    /// `E(B_r) / (r^n 2 pi omega_n)`.
    pub ratio: f64,
    /// `E(B_r) / |B_r^n|`.
    pub per_volume: f64,
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Gram-Schmidt on the input rows; errors on dependent or malformed input.
pub fn orthonormalize(frame: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(frame.len());
    for v in frame {
        if v.len() != dim {
            return Err(Error::Dimension(format!("frame vector has {} entries, ambient dimension is {dim}", v.len())));
        }
        let mut w = DVector::from_column_slice(v);
        let scale = w.norm();
        for e in &out {
            w -= e * e.dot(&w);
        }
        if !(w.norm() > 1e-8 * scale.max(1e-300)) {
            return Err(Error::InvalidParameter("plane frame is linearly dependent".into()));
        }
        out.push(w.normalize());
    }
    let k = out.len();
    let gram = DMatrix::from_fn(k, k, |i, j| out[i].dot(&out[j]));
    if (gram - DMatrix::identity(k, k)).abs().max() > FRAME_TOL {
        return Err(Error::InvalidParameter("plane frame could not be orthonormalized".into()));
    }
    Ok(out.into_iter().map(|v| v.as_slice().to_vec()).collect())
}

/// Completes an orthonormal set to a basis of `R^dim`.
fn complete_frame(frame: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut all: Vec<DVector<f64>> = frame.iter().map(|v| DVector::from_column_slice(v)).collect();
    // Try the axes from the last one, so that a coordinate plane is
    // completed by the remaining axes in order.
    let mut extra = Vec::new();
    for a in (0..dim).rev() {
        if all.len() == dim {
            break;
        }
        let mut w = DVector::zeros(dim);
        w[a] = 1.0;
        for e in &all {
            w -= e * e.dot(&w);
        }
        if w.norm() > 1e-6 {
            let w = w.normalize();
            all.push(w.clone());
            extra.push(w);
        }
    }
    extra.reverse();
    frame.iter().cloned().chain(extra.into_iter().map(|v| v.as_slice().to_vec())).collect()
}

/// Per-node energy densities and excess integrand inside a ball.
/// `frame` is a complete orthonormal frame whose first `n` vectors span
/// the reference plane, or empty when only the energy is wanted.
fn ball_integrals(config: &FieldConfiguration, center: &[f64], r: f64, frame: &[Vec<f64>], n: usize) -> Result<(EnergySplit, f64)> {
    config.validate()?;
    let g = &config.grid;
    if center.len() != g.dim() {
        return Err(Error::Dimension(format!("center has {} coordinates, grid has {}", center.len(), g.dim())));
    }
    if !(r > 0.0) {
        return Err(Error::EmptyRegion);
    }
    if !g.contains_ball(center, r) {
        return Err(Error::RegionOutsideDomain);
    }
    let d = g.dim();
    let eps2 = config.epsilon * config.epsilon;
    let r2 = r * r;
    let terms: Vec<[f64; 4]> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            if g.dist2(i, center) > r2 {
                return [0.0; 4];
            }
            let w = g.weight(i);
            let du: Vec<C64> = (0..d).map(|a| g.diff(&config.u, i, a) - I * config.a[a][i] * config.u[i]).collect();
            let mut f = vec![0.0; d * d];
            for a in 0..d {
                for b in a + 1..d {
                    let v = g.diff(&config.a[b], i, a) - g.diff(&config.a[a], i, b);
                    f[a * d + b] = v;
                    f[b * d + a] = -v;
                }
            }
            let kin: f64 = du.iter().map(|z| z.norm_sqr()).sum();
            let curv: f64 = f.iter().map(|v| v * v).sum::<f64>() * 0.5 * eps2;
            let pot = (1.0 - config.u[i].norm_sqr()).powi(2) / (4.0 * eps2);
            let mut exc = 0.0;
            if !frame.is_empty() {
                for e in &frame[..n] {
                    let z: C64 = (0..d).map(|a| du[a] * e[a]).sum();
                    exc += z.norm_sqr();
                }
                for j in 0..d {
                    for k in j + 1..d {
                        if j >= n && k >= n {
                            continue;
                        }
                        let mut om = 0.0;
                        for a in 0..d {
                            for b in 0..d {
                                om += frame[j][a] * frame[k][b] * f[a * d + b];
                            }
                        }
                        exc += eps2 * om * om;
                    }
                }
            }
            [w * kin, w * curv, w * pot, w * exc]
        })
        .collect();
    let col = |c: usize| pairwise_sum(&terms.iter().map(|t| t[c]).collect::<Vec<_>>());
    let (kinetic, curvature, potential, exc) = (col(0), col(1), col(2), col(3));
    Ok((EnergySplit { total: kinetic + curvature + potential, kinetic, curvature, potential }, exc))
}

/// Excess `(r^{-n} / 2 pi) int_{B_r} [sum_k |nabla^A_{e_k} u|^2 + eps^2 sum_{(j,k) != (n+1,n+2)} omega(e_j, e_k)^2]`
/// of `config` relative to the plane spanned by `plane` (n vectors in `R^{n+2}`).
pub fn excess(config: &FieldConfiguration, center: &[f64], r: f64, plane: &[Vec<f64>]) -> Result<ExcessReport> {
    let d = config.dim();
    if plane.len() + 2 != d {
        return Err(Error::Dimension(format!("plane has {} vectors, expected {}", plane.len(), d - 2)));
    }
    let tangential = orthonormalize(plane, d)?;
    let frame = complete_frame(&tangential, d);
    let (energy, integral) = ball_integrals(config, center, r, &frame, d - 2)?;
    let n = d - 2;
    let rn = r.powi(n as i32);
    Ok(ExcessReport {
        center: center.to_vec(),
        radius: r,
        plane: tangential,
        excess: integral / (rn * 2.0 * std::f64::consts::PI),
        density_ratio: energy.total / (rn * 2.0 * std::f64::consts::PI * unit_ball_volume(n)),
        energy,
    })
}

/// Energy in `B_r(center)` normalized by `r^n 2 pi omega_n` and by `|B_r^n|`.
pub fn density_ratio(config: &FieldConfiguration, center: &[f64], r: f64) -> Result<DensityReport> {
    let (energy, _) = ball_integrals(config, center, r, &[], 0)?;
    let n = config.dim() - 2;
    let vol = unit_ball_volume(n) * r.powi(n as i32);
    Ok(DensityReport {
        radius: r,
        energy,
        ratio: energy.total / (vol * 2.0 * std::f64::consts::PI),
        per_volume: energy.total / vol,
    })
}

/// A zero of `u` in the normal slice over tangential node `slice`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalPoint {
    pub slice: usize,
    pub y: Vec<f64>,
    pub z: [f64; 2],
}

struct Slices {
    tangential: usize,
    nc: [usize; 2],
    plane: usize,
}

fn slices(g: &Grid) -> Slices {
    let d = g.dim();
    let nc = [g.axis(d - 2).count, g.axis(d - 1).count];
    let plane = nc[0] * nc[1];
    Slices { tangential: g.len() / plane, nc, plane }
}

fn tangential_position(g: &Grid, slice: usize, plane: usize) -> Vec<f64> {
    let idx = slice * plane;
    (0..g.dim() - 2).map(|a| g.coord(idx, a)).collect()
}

/// Roots in `[0, 1]` of `a + b s + c s^2`.
fn unit_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return vec![];
    }
    let (a, b, c) = (a / scale, b / scale, c / scale);
    let mut out = Vec::new();
    if c.abs() < 1e-12 {
        if b.abs() > 1e-14 {
            out.push(-a / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return vec![];
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q != 0.0 {
            out.push(a / q);
        }
        out.push(q / c);
    }
    out.into_iter().filter(|s| (-1e-10..=1.0 + 1e-10).contains(s)).map(|s| s.clamp(0.0, 1.0)).collect()
}

/// Common zero of the bilinear interpolants of `Re u` and `Im u` on a cell
/// with corner values `[u00, u10, u01, u11]` (first index along the first
/// normal axis), in cell coordinates.
fn bilinear_zero(c: [C64; 4]) -> Option<[f64; 2]> {
    // p(s, t) = p0 + p1 s + p2 t + p3 s t
    let coef = |v: [f64; 4]| [v[0], v[1] - v[0], v[2] - v[0], v[3] - v[1] - v[2] + v[0]];
    let re = coef([c[0].re, c[1].re, c[2].re, c[3].re]);
    let im = coef([c[0].im, c[1].im, c[2].im, c[3].im]);
    // Eliminate t: t = -(re0 + re1 s) / (re2 + re3 s); substitute into im.
    // (im0 + im1 s)(re2 + re3 s) - (im2 + im3 s)(re0 + re1 s) = 0.
    let a = im[0] * re[2] - im[2] * re[0];
    let b = im[0] * re[3] + im[1] * re[2] - im[2] * re[1] - im[3] * re[0];
    let cc = im[1] * re[3] - im[3] * re[1];
    for s in unit_roots(a, b, cc) {
        let den_re = re[2] + re[3] * s;
        let den_im = im[2] + im[3] * s;
        let t = if den_re.abs() >= den_im.abs() {
            -(re[0] + re[1] * s) / den_re
        } else {
            -(im[0] + im[1] * s) / den_im
        };
        if t.is_finite() && (-1e-10..=1.0 + 1e-10).contains(&t) {
            return Some([s, t.clamp(0.0, 1.0)]);
        }
    }
    None
}

fn changes_sign(v: [f64; 4]) -> bool {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0
}

/// Zeros of `u` per normal slice, from cells where both `Re u` and `Im u`
/// change sign and the bilinear zero curves meet inside the cell.
pub fn extract_nodal_set(config: &FieldConfiguration) -> Result<Vec<NodalPoint>> {
    config.validate()?;
    let g = &config.grid;
    let d = g.dim();
    let s = slices(g);
    let (ax0, ax1) = (*g.axis(d - 2), *g.axis(d - 1));
    let per_slice: Vec<Vec<NodalPoint>> = (0..s.tangential)
        .into_par_iter()
        .map(|t| {
            let base = t * s.plane;
            let y = tangential_position(g, t, s.plane);
            let mut pts: Vec<NodalPoint> = Vec::new();
            for i in 0..s.nc[0] - 1 {
                for j in 0..s.nc[1] - 1 {
                    let k = base + i * s.nc[1] + j;
                    let c = [config.u[k], config.u[k + s.nc[1]], config.u[k + 1], config.u[k + s.nc[1] + 1]];
                    if !changes_sign(c.map(|z| z.re)) || !changes_sign(c.map(|z| z.im)) {
                        continue;
                    }
                    if let Some([a, b]) = bilinear_zero(c) {
                        let z = [ax0.coord(i) + a * ax0.spacing, ax1.coord(j) + b * ax1.spacing];
                        // Zeros on shared cell edges are found twice.
                        let dup = pts.iter().any(|p| {
                            (p.z[0] - z[0]).abs() < 1e-9 * ax0.spacing && (p.z[1] - z[1]).abs() < 1e-9 * ax1.spacing
                        });
                        if !dup {
                            pts.push(NodalPoint { slice: t, y: y.clone(), z });
                        }
                    }
                }
            }
            pts
        })
        .collect();
    Ok(per_slice.into_iter().flatten().collect())
}

/// Nodal set fitted as a graph over the tangential grid, with discrete norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalGraph {
    pub points: Vec<NodalPoint>,
    pub y: Vec<Vec<f64>>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// Largest distance from an extracted point to the fitted value of its slice.
    pub fit_residual: f64,
    /// Largest slope between neighbouring nodes.
    pub lipschitz: f64,
    /// Sup of second differences over interior nodes.
    pub second_difference_sup: f64,
    pub holder_exponent: f64,
    /// Holder seminorm of the second differences.
    pub holder_seminorm: f64,
    /// Mean curvature of the fitted graph, `[node][beta]`; zero on faces.
    pub mean_curvature: Vec<[f64; 2]>,
}

impl NodalGraph {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.y.first().map_or(1, Vec::len);
        let mut head: Vec<String> = (1..=n).map(|j| format!("y{j}")).collect();
        head.extend(["f1", "f2", "h1", "h2"].map(String::from));
        writeln!(out, "{}", head.join(","))?;
        for (k, y) in self.y.iter().enumerate() {
            let vals: Vec<String> = y
                .iter()
                .chain([&self.f1[k], &self.f2[k], &self.mean_curvature[k][0], &self.mean_curvature[k][1]])
                .map(|v| format!("{v:.12e}"))
                .collect();
            writeln!(out, "{}", vals.join(","))?;
        }
        Ok(())
    }
}

/// CSV of points with columns `y1..yn,z1,z2`.
pub fn write_points_csv<W: Write>(points: &[NodalPoint], n: usize, mut out: W) -> Result<()> {
    let mut head: Vec<String> = (1..=n).map(|j| format!("y{j}")).collect();
    head.extend(["z1", "z2"].map(String::from));
    writeln!(out, "{}", head.join(","))?;
    for p in points {
        let vals: Vec<String> = p.y.iter().chain(&p.z).map(|v| format!("{v:.12e}")).collect();
        writeln!(out, "{}", vals.join(","))?;
    }
    Ok(())
}

/// Bins nodal points by slice, averages them, and evaluates discrete
/// Lipschitz, `C^2` and `C^{2,alpha}` norms and the mean curvature.
///
/// A slice whose points spread over more than `spread` is rejected as not
/// graphical; a slice without points is a coverage error.
pub fn fit_graph(points: &[NodalPoint], grid: &TangentialGrid, spread: f64, alpha: f64) -> Result<NodalGraph> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("Holder exponent {alpha} must lie in [0, 1)")));
    }
    let len = grid.len();
    let mut bins: Vec<Vec<[f64; 2]>> = vec![Vec::new(); len];
    for p in points {
        if p.slice >= len {
            return Err(Error::Layout(format!("point slice {} outside the tangential grid", p.slice)));
        }
        bins[p.slice].push(p.z);
    }
    let mut f1 = vec![0.0; len];
    let mut f2 = vec![0.0; len];
    let mut fit_residual: f64 = 0.0;
    for (k, b) in bins.iter().enumerate() {
        if b.is_empty() {
            return Err(Error::InsufficientCoverage(format!("no nodal point over tangential node {k}")));
        }
        let m = [b.iter().map(|z| z[0]).sum::<f64>() / b.len() as f64, b.iter().map(|z| z[1]).sum::<f64>() / b.len() as f64];
        let far = b.iter().map(|z| (z[0] - m[0]).hypot(z[1] - m[1])).fold(0.0, f64::max);
        if far > spread {
            return Err(Error::NotGraphical(format!("{} points over tangential node {k} spread by {far}", b.len())));
        }
        fit_residual = fit_residual.max(far);
        f1[k] = m[0];
        f2[k] = m[1];
    }
    let n = grid.dim;
    let h = grid.axis.spacing;
    let mut lipschitz: f64 = 0.0;
    for k in 0..len {
        for j in 0..n {
            if grid.coord_index(k, j) + 1 < grid.axis.count {
                let m = k + grid.stride(j);
                lipschitz = lipschitz.max((f1[m] - f1[k]).hypot(f2[m] - f2[k]) / h);
            }
        }
    }
    let interior: Vec<usize> = (0..len).filter(|&k| grid.is_interior(k)).collect();
    let second: Vec<Vec<f64>> = interior
        .iter()
        .map(|&k| {
            let mut v = Vec::with_capacity(2 * n * n);
            for f in [&f1, &f2] {
                for j in 0..n {
                    for l in j..n {
                        v.push(grid.second(f, k, j, l));
                    }
                }
            }
            v
        })
        .collect();
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let second_difference_sup = second.iter().map(|v| sup(v)).fold(0.0, f64::max);
    let mut holder_seminorm: f64 = 0.0;
    for (p, &kp) in interior.iter().enumerate() {
        let yp = grid.position(kp);
        for (q, &kq) in interior.iter().enumerate().skip(p + 1) {
            let yq = grid.position(kq);
            let dist = yp.iter().zip(&yq).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let diff: Vec<f64> = second[p].iter().zip(&second[q]).map(|(a, b)| a - b).collect();
            holder_seminorm = holder_seminorm.max(sup(&diff) / dist.powf(alpha));
        }
    }
    let chart = FermiChart::from_samples(*grid, 1.0, f1.iter().zip(&f2).map(|(a, b)| [*a, *b]).collect())?;
    let mean_curvature = (0..len)
        .map(|k| if grid.is_interior(k) { chart.mean_curvature[k] } else { [0.0, 0.0] })
        .collect();
    Ok(NodalGraph {
        points: points.to_vec(),
        y: (0..len).map(|k| grid.position(k)).collect(),
        f1,
        f2,
        fit_residual,
        lipschitz,
        second_difference_sup,
        holder_exponent: alpha,
        holder_seminorm,
        mean_curvature,
    })
}

/// The curve `{|u| = t}` in one normal slice with its best-fit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSlice {
    pub slice: usize,
    pub y: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    /// The sublevel set `{|u| < t}` reaches the slice boundary.
    pub clipped: bool,
}

/// Algebraic least-squares circle `x^2 + y^2 + D x + E y + F = 0`.
pub fn fit_circle(points: &[[f64; 2]]) -> Option<([f64; 2], f64)> {
    if points.len() < 3 {
        return None;
    }
    let m = DMatrix::from_fn(points.len(), 3, |i, j| match j {
        0 => points[i][0],
        1 => points[i][1],
        _ => 1.0,
    });
    let rhs = DVector::from_fn(points.len(), |i, _| -(points[i][0].powi(2) + points[i][1].powi(2)));
    let sol = m.svd(true, true).solve(&rhs, 1e-14).ok()?;
    let c = [-0.5 * sol[0], -0.5 * sol[1]];
    let r2 = c[0] * c[0] + c[1] * c[1] - sol[2];
    (r2 > 0.0).then(|| (c, r2.sqrt()))
}

/// Marching-squares extraction of `{|u| = t}` per normal slice.
pub fn modulus_level_tube(config: &FieldConfiguration, t: f64) -> Result<Vec<LevelSlice>> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("level {t} must lie in (0, 1)")));
    }
    config.validate()?;
    let g = &config.grid;
    let d = g.dim();
    let s = slices(g);
    let (ax0, ax1) = (*g.axis(d - 2), *g.axis(d - 1));
    let m: Vec<f64> = config.u.iter().map(|u| u.norm() - t).collect();
    Ok((0..s.tangential)
        .into_par_iter()
        .map(|sl| {
            let base = sl * s.plane;
            let at = |i: usize, j: usize| m[base + i * s.nc[1] + j];
            let mut points = Vec::new();
            let mut push = |p: [f64; 2]| {
                if !points.iter().any(|q: &[f64; 2]| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12) {
                    points.push(p);
                }
            };
            // Crossings on grid edges; each edge is visited once.
            for i in 0..s.nc[0] {
                for j in 0..s.nc[1] {
                    let v = at(i, j);
                    if i + 1 < s.nc[0] {
                        let w = at(i + 1, j);
                        if (v < 0.0) != (w < 0.0) {
                            let a = v / (v - w);
                            push([ax0.coord(i) + a * ax0.spacing, ax1.coord(j)]);
                        }
                    }
                    if j + 1 < s.nc[1] {
                        let w = at(i, j + 1);
                        if (v < 0.0) != (w < 0.0) {
                            let a = v / (v - w);
                            push([ax0.coord(i), ax1.coord(j) + a * ax1.spacing]);
                        }
                    }
                }
            }
            let clipped = (0..s.nc[0]).any(|i| at(i, 0) < 0.0 || at(i, s.nc[1] - 1) < 0.0)
                || (0..s.nc[1]).any(|j| at(0, j) < 0.0 || at(s.nc[0] - 1, j) < 0.0);
            let fit = fit_circle(&points);
            LevelSlice {
                slice: sl,
                y: tangential_position(g, sl, s.plane),
                points,
                center: fit.map(|f| f.0),
                radius: fit.map(|f| f.1),
                clipped,
            }
        })
        .collect())
}

/// CSV of level-set points with columns `slice,z1,z2`.
pub fn write_level_csv<W: Write>(slices: &[LevelSlice], mut out: W) -> Result<()> {
    writeln!(out, "slice,z1,z2")?;
    for s in slices {
        for p in &s.points {
            writeln!(out, "{},{:.12e},{:.12e}", s.slice, p[0], p[1])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bilinear_zero_of_a_linear_field() {
        // u = (s - 0.3) + i (t - 0.6) sampled on the unit cell.
        let u = |s: f64, t: f64| C64::new(s - 0.3, t - 0.6);
        let z = bilinear_zero([u(0.0, 0.0), u(1.0, 0.0), u(0.0, 1.0), u(1.0, 1.0)]).unwrap();
        assert!((z[0] - 0.3).abs() < 1e-14 && (z[1] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn circle_fit_recovers_a_circle() {
        let pts: Vec<[f64; 2]> =
            (0..12).map(|k| (k as f64 * 0.5).sin_cos()).map(|(s, c)| [1.0 + 2.0 * c, -0.5 + 2.0 * s]).collect();
        let (c, r) = fit_circle(&pts).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] + 0.5).abs() < 1e-12 && (r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn frames_are_orthonormalized_and_completed() {
        let f = orthonormalize(&[vec![2.0, 0.0, 0.0]], 3).unwrap();
        assert_eq!(f, vec![vec![1.0, 0.0, 0.0]]);
        let full = complete_frame(&f, 3);
        assert_eq!(full[1], vec![0.0, 1.0, 0.0]);
        assert_eq!(full[2], vec![0.0, 0.0, 1.0]);
        assert!(orthonormalize(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]], 3).is_err());
    }
}
