//! Graph charts `y -> (y, h(y))` over a tangential box and the metric of
//! their Fermi tubes.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridN};

/// Tensor grid on the tangential box `[-w, w]^n`, last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentialGrid {
    pub dim: usize,
    pub axis: Axis,
}

impl TangentialGrid {
    pub fn new(dim: usize, axis: Axis) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("tangential dimension must be at least 1".into()));
        }
        if axis.count < 3 {
            return Err(Error::InvalidGrid("tangential axis needs at least 3 nodes".into()));
        }
        Ok(Self { dim, axis })
    }

    pub fn of(grid: &GridN) -> Self {
        Self { dim: grid.tangential_dim, axis: grid.tangential_axis() }
    }

    pub fn len(&self) -> usize {
        self.axis.count.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, j: usize) -> usize {
        self.axis.count.pow((self.dim - 1 - j) as u32)
    }

    pub fn coord_index(&self, node: usize, j: usize) -> usize {
        (node / self.stride(j)) % self.axis.count
    }

    pub fn position(&self, node: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.axis.coord(self.coord_index(node, j))).collect()
    }

    /// Node nearest to a point.
    pub fn nearest(&self, y: &[f64]) -> Result<usize> {
        if y.len() != self.dim {
            return Err(Error::Dimension(format!("point has {} coordinates, chart has {}", y.len(), self.dim)));
        }
        let mut node = 0;
        for (j, &c) in y.iter().enumerate() {
            let k = ((c - self.axis.min) / self.axis.spacing).round();
            if !(k >= 0.0 && (k as usize) < self.axis.count) {
                return Err(Error::InvalidParameter(format!("point coordinate {c} lies outside the chart")));
            }
            node += k as usize * self.stride(j);
        }
        Ok(node)
    }

    /// Nodes with both neighbours along every tangential axis.
    pub fn is_interior(&self, node: usize) -> bool {
        (0..self.dim).all(|j| {
            let i = self.coord_index(node, j);
            i > 0 && i + 1 < self.axis.count
        })
    }

    /// Trapezoidal weight.
    pub fn weight(&self, node: usize) -> f64 {
        (0..self.dim).map(|j| self.axis.weight(self.coord_index(node, j))).product()
    }

    /// Second-order first-derivative stencil along axis `j`.
    pub fn diff_stencil(&self, node: usize, j: usize) -> [(usize, f64); 3] {
        let i = self.coord_index(node, j);
        let n = self.axis.count;
        let s = self.stride(j);
        let inv = 0.5 / self.axis.spacing;
        if i == 0 {
            [(node, -3.0 * inv), (node + s, 4.0 * inv), (node + 2 * s, -inv)]
        } else if i + 1 == n {
            [(node, 3.0 * inv), (node - s, -4.0 * inv), (node - 2 * s, inv)]
        } else {
            [(node + s, inv), (node - s, -inv), (node, 0.0)]
        }
    }

    pub fn diff(&self, v: &[f64], node: usize, j: usize) -> f64 {
        self.diff_stencil(node, j).iter().map(|&(k, c)| c * v[k]).sum()
    }

    /// Second derivative `d_j d_k`: three-point for `j == k`, centred
    /// differences of centred differences otherwise; one-sided at faces.
    pub fn second(&self, v: &[f64], node: usize, j: usize, k: usize) -> f64 {
        if j == k {
            let i = self.coord_index(node, j);
            let s = self.stride(j);
            let h2 = self.axis.spacing * self.axis.spacing;
            let n = self.axis.count;
            if i > 0 && i + 1 < n {
                return (v[node + s] - 2.0 * v[node] + v[node - s]) / h2;
            }
            if n < 4 {
                let c = if i == 0 { node + s } else { node - s };
                return (v[c + s] - 2.0 * v[c] + v[c - s]) / h2;
            }
            // Second-order one-sided formula at a face.
            let t = if i == 0 { s as isize } else { -(s as isize) };
            let at = |m: isize| v[(node as isize + m * t) as usize];
            (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2
        } else {
            self.diff_stencil(node, j).iter().map(|&(m, c)| c * self.diff(v, m, k)).sum()
        }
    }
}

/// Graph `z = h(y)` of a codimension-two submanifold over the tangential
/// box, with derivatives, second fundamental form and mean curvature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermiChart {
    pub grid: TangentialGrid,
    /// `h^beta` per node.
    pub h: Vec<[f64; 2]>,
    /// `h_j^beta`, indexed `[node][j]`.
    pub first: Vec<Vec<[f64; 2]>>,
    /// `h_jk^beta`, indexed `[node][j * n + k]`.
    pub second: Vec<Vec<[f64; 2]>>,
    /// `Pi_ij^rho` in the orthonormalized normal frame, indexed `[node][i * n + j]`.
    pub second_fundamental_form: Vec<Vec<[f64; 2]>>,
    /// `H^rho = G^ij Pi_ij^rho`.
    pub mean_curvature: Vec<[f64; 2]>,
    /// Tube radius.
    pub tau: f64,
}

/// Sidecar of a chart CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDescriptor {
    pub tangential_dim: usize,
    pub half_width: f64,
    pub spacing: f64,
    pub tau: f64,
}

/// Induced metric `G_ij = delta_ij + h_i . h_j`.
fn induced_metric(n: usize, dh: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d + dh[i][0] * dh[j][0] + dh[i][1] * dh[j][1]
    })
}

/// Orthonormal normal frame from the projections of the two normal axes.
fn normal_frame(n: usize, dh: &[[f64; 2]], ginv: &DMatrix<f64>) -> [DVector<f64>; 2] {
    let tangent = |i: usize| {
        let mut t = DVector::zeros(n + 2);
        t[i] = 1.0;
        t[n] = dh[i][0];
        t[n + 1] = dh[i][1];
        t
    };
    let project = |v: DVector<f64>| {
        let dots: Vec<f64> = (0..n).map(|i| tangent(i).dot(&v)).collect();
        let mut out = v.clone();
        for i in 0..n {
            let c: f64 = (0..n).map(|j| ginv[(i, j)] * dots[j]).sum();
            out -= tangent(i) * c;
        }
        out
    };
    let mut e1 = DVector::zeros(n + 2);
    e1[n] = 1.0;
    let mut e2 = DVector::zeros(n + 2);
    e2[n + 1] = 1.0;
    let n1 = project(e1).normalize();
    let mut n2 = project(e2);
    n2 -= &n1 * n1.dot(&n2);
    [n1, n2.normalize()]
}

impl FermiChart {
    /// Samples `h` on the tangential grid; derivatives by finite differences.
    pub fn from_fn(grid: TangentialGrid, tau: f64, h: impl Fn(&[f64]) -> [f64; 2]) -> Result<Self> {
        let samples = (0..grid.len()).map(|k| h(&grid.position(k))).collect();
        Self::from_samples(grid, tau, samples)
    }

    pub fn from_samples(grid: TangentialGrid, tau: f64, h: Vec<[f64; 2]>) -> Result<Self> {
        if h.len() != grid.len() {
            return Err(Error::Layout(format!("{} chart samples for {} tangential nodes", h.len(), grid.len())));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tube radius {tau} must be positive")));
        }
        if let Some(k) = h.iter().position(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::NonFinite { field: "h", node: k });
        }
        let n = grid.dim;
        let comp: [Vec<f64>; 2] = [h.iter().map(|v| v[0]).collect(), h.iter().map(|v| v[1]).collect()];
        let mut first = Vec::with_capacity(grid.len());
        let mut second = Vec::with_capacity(grid.len());
        let mut pi = Vec::with_capacity(grid.len());
        let mut mean = Vec::with_capacity(grid.len());
        for node in 0..grid.len() {
            let dh: Vec<[f64; 2]> = (0..n).map(|j| [grid.diff(&comp[0], node, j), grid.diff(&comp[1], node, j)]).collect();
            let ddh: Vec<[f64; 2]> = (0..n * n)
                .map(|jk| {
                    let (j, k) = (jk / n, jk % n);
                    [grid.second(&comp[0], node, j, k), grid.second(&comp[1], node, j, k)]
                })
                .collect();
            let g = induced_metric(n, &dh);
            let ginv = g.clone().try_inverse().expect("induced metric is positive definite");
            let frame = normal_frame(n, &dh, &ginv);
            let p: Vec<[f64; 2]> = ddh
                .iter()
                .map(|d| {
                    let f = |r: usize| d[0] * frame[r][n] + d[1] * frame[r][n + 1];
                    [f(0), f(1)]
                })
                .collect();
            let mut hm = [0.0; 2];
            for i in 0..n {
                for j in 0..n {
                    for (r, m) in hm.iter_mut().enumerate() {
                        *m += ginv[(i, j)] * p[i * n + j][r];
                    }
                }
            }
            first.push(dh);
            second.push(ddh);
            pi.push(p);
            mean.push(hm);
        }
        Ok(Self { grid, h, first, second, second_fundamental_form: pi, mean_curvature: mean, tau })
    }

    pub fn flat(grid: TangentialGrid, tau: f64) -> Result<Self> {
        Self::from_fn(grid, tau, |_| [0.0, 0.0])
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// `sup |h|` over the chart.
    pub fn max_displacement(&self) -> f64 {
        self.h.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// Flat Laplacian `sum_j h_jj^beta` at a node.
    pub fn laplacian(&self, node: usize) -> [f64; 2] {
        let n = self.dim();
        let mut out = [0.0; 2];
        for j in 0..n {
            out[0] += self.second[node][j * n + j][0];
            out[1] += self.second[node][j * n + j][1];
        }
        out
    }

    pub(crate) fn induced_metric(&self, node: usize) -> DMatrix<f64> {
        induced_metric(self.dim(), &self.first[node])
    }

    /// Whether the chart lives on the tangential grid of a cylinder grid.
    pub fn check_matches(&self, grid: &GridN) -> Result<()> {
        let t = TangentialGrid::of(grid);
        let same = t.dim == self.grid.dim
            && t.axis.count == self.grid.axis.count
            && (t.axis.min - self.grid.axis.min).abs() <= 1e-12 * t.axis.min.abs().max(1.0)
            && (t.axis.spacing - self.grid.axis.spacing).abs() <= 1e-12 * t.axis.spacing;
        if same {
            Ok(())
        } else {
            Err(Error::Layout("chart and cylinder grid have different tangential grids".into()))
        }
    }

    pub fn descriptor(&self) -> ChartDescriptor {
        ChartDescriptor {
            tangential_dim: self.grid.dim,
            half_width: -self.grid.axis.min,
            spacing: self.grid.axis.spacing,
            tau: self.tau,
        }
    }

    /// CSV with columns `y1..yn,h1,h2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.dim();
        let head: Vec<String> = (1..=n).map(|j| format!("y{j}")).chain(["h1".into(), "h2".into()]).collect();
        writeln!(out, "{}", head.join(","))?;
        for node in 0..self.grid.len() {
            let y = self.grid.position(node);
            let cols: Vec<String> =
                y.iter().chain(self.h[node].iter()).map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, desc: ChartDescriptor) -> Result<Self> {
        let axis = Axis::symmetric(desc.half_width, desc.spacing)?;
        let grid = TangentialGrid::new(desc.tangential_dim, axis)?;
        let n = grid.dim;
        let mut h = vec![[f64::NAN; 2]; grid.len()];
        let mut seen = vec![false; grid.len()];
        for (line_no, line) in input.lines().enumerate().skip(1) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("chart line {}: {e}", line_no + 1)))?;
            if vals.len() != n + 2 {
                return Err(Error::Format(format!("chart line {} has {} columns, expected {}", line_no + 1, vals.len(), n + 2)));
            }
            let node = grid.nearest(&vals[..n])?;
            let pos = grid.position(node);
            if pos.iter().zip(&vals[..n]).any(|(p, v)| (p - v).abs() > 1e-6 * axis.spacing) {
                return Err(Error::Format(format!("chart line {} is not on the tangential grid", line_no + 1)));
            }
            h[node] = [vals[n], vals[n + 1]];
            seen[node] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Format(format!("chart CSV is missing tangential node {k}")));
        }
        Self::from_samples(grid, desc.tau, h)
    }

    /// Writes `stem.csv` and `stem.json`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.csv")))?))?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.descriptor())?)?;
        Ok(())
    }

    /// Reads a chart from a CSV and its JSON descriptor.
    pub fn load(csv: impl AsRef<Path>, descriptor: impl AsRef<Path>) -> Result<Self> {
        let desc: ChartDescriptor = serde_json::from_str(&std::fs::read_to_string(descriptor)?)?;
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(csv)?), desc)
    }
}

fn check_z(chart: &FermiChart, z: [f64; 2]) -> Result<()> {
    let r = z[0].hypot(z[1]);
    if !(r <= chart.tau) {
        return Err(Error::InvalidParameter(format!("|z| = {r} exceeds the tube radius {}", chart.tau)));
    }
    Ok(())
}

/// `g_ij = G_ij - 2 z^a Pi_ij^a + z^a z^b Pi_ik^a G^kl Pi_lj^b`, without range checks.
pub(crate) fn metric_unchecked(chart: &FermiChart, node: usize, z: [f64; 2]) -> DMatrix<f64> {
    let n = chart.dim();
    let g0 = chart.induced_metric(node);
    let ginv = g0.clone().try_inverse().expect("induced metric is positive definite");
    let p = &chart.second_fundamental_form[node];
    let zp = DMatrix::from_fn(n, n, |i, j| z[0] * p[i * n + j][0] + z[1] * p[i * n + j][1]);
    &g0 - &zp * 2.0 + &zp * &ginv * &zp
}

/// Fermi-tube metric at tangential node `node` and normal offset `z`,
/// truncated after the quadratic term.
pub fn metric_expansion(chart: &FermiChart, node: usize, z: [f64; 2]) -> Result<DMatrix<f64>> {
    if node >= chart.grid.len() {
        return Err(Error::InvalidParameter(format!("tangential node {node} out of range")));
    }
    check_z(chart, z)?;
    Ok(metric_unchecked(chart, node, z))
}

/// Coefficients of the Laplacian on the level sets `M_z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricCoefficients {
    /// `a^ij`, indexed `i * n + j`.
    pub a: Vec<f64>,
    /// `b_s^ik`, indexed `(s * n + i) * n + k`.
    pub b: Vec<f64>,
    /// `c^k`.
    pub c: Vec<f64>,
    /// `d_j^{beta k}`, indexed `(j * 2 + beta) * n + k`.
    pub d: Vec<f64>,
    /// `H_z^beta`.
    pub mean_curvature: [f64; 2],
}

struct Local {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    sqrt_det: f64,
}

/// The truncated metric factors as `(G - z Pi) G^{-1} (G - z Pi)`; the
/// normal map stays regular while `G - z Pi` is positive definite.
fn check_focal(chart: &FermiChart, node: usize, z: [f64; 2]) -> Result<()> {
    let n = chart.dim();
    let p = &chart.second_fundamental_form[node];
    let m = chart.induced_metric(node)
        - DMatrix::from_fn(n, n, |i, j| z[0] * p[i * n + j][0] + z[1] * p[i * n + j][1]);
    m.cholesky().map(|_| ()).ok_or(Error::FocalRadius)
}

fn local(chart: &FermiChart, node: usize, z: [f64; 2]) -> Result<Local> {
    check_focal(chart, node, z)?;
    let g = metric_unchecked(chart, node, z);
    let chol = g.clone().cholesky().ok_or(Error::FocalRadius)?;
    let sqrt_det = chol.l().diagonal().product();
    let ginv = chol.inverse();
    Ok(Local { g, ginv, sqrt_det })
}

/// Normal step for `d/dz^beta`.
const NORMAL_STEP: f64 = 1e-4;

/// Evaluates `a^ij`, `b_s^ik`, `c^k`, `d_j^{beta k}` and `H_z^beta` from the
/// expanded metric: tangential derivatives by differences over the chart
/// grid, normal derivatives by centred differences in `z`.
pub fn geometric_coefficients(chart: &FermiChart, node: usize, z: [f64; 2]) -> Result<GeometricCoefficients> {
    if node >= chart.grid.len() {
        return Err(Error::InvalidParameter(format!("tangential node {node} out of range")));
    }
    check_z(chart, z)?;
    let n = chart.dim();
    let here = local(chart, node, z)?;
    let inv_sqrt = 1.0 / here.sqrt_det;

    // Tangential divergences sum_j d_j(...) need the metric at stencil nodes.
    let mut c = vec![0.0; n];
    let mut b = vec![0.0; n * n * n];
    // div_q[i][k][t] = sum_j d_j(g^ij g^kt sqrt g)
    let mut div_q = vec![0.0; n * n * n];
    for j in 0..n {
        for (m, w) in chart.grid.diff_stencil(node, j) {
            if w == 0.0 {
                continue;
            }
            let l = local(chart, m, z)?;
            for k in 0..n {
                c[k] += w * l.sqrt_det * l.ginv[(j, k)];
                for i in 0..n {
                    for t in 0..n {
                        div_q[(i * n + k) * n + t] += w * l.ginv[(i, j)] * l.ginv[(k, t)] * l.sqrt_det;
                    }
                }
            }
        }
    }
    for v in c.iter_mut() {
        *v *= inv_sqrt;
    }
    for s in 0..n {
        for i in 0..n {
            for k in 0..n {
                let sum: f64 = (0..n).map(|t| here.g[(s, t)] * div_q[(i * n + k) * n + t]).sum();
                b[(s * n + i) * n + k] = inv_sqrt * sum;
            }
        }
    }

    let mut d = vec![0.0; n * 2 * n];
    let mut mean = [0.0; 2];
    for beta in 0..2 {
        let mut zp = z;
        let mut zm = z;
        zp[beta] += NORMAL_STEP;
        zm[beta] -= NORMAL_STEP;
        let lp = local(chart, node, zp)?;
        let lm = local(chart, node, zm)?;
        let dz = 2.0 * NORMAL_STEP;
        mean[beta] = -inv_sqrt * (lp.sqrt_det - lm.sqrt_det) / dz;
        for j in 0..n {
            for k in 0..n {
                let sum: f64 = (0..n)
                    .map(|i| {
                        let dq = (lp.ginv[(i, k)] * lp.sqrt_det - lm.ginv[(i, k)] * lm.sqrt_det) / dz;
                        here.g[(i, j)] * dq
                    })
                    .sum();
                d[(j * 2 + beta) * n + k] = inv_sqrt * sum;
            }
        }
    }
    let a = (0..n * n).map(|ij| here.ginv[(ij / n, ij % n)]).collect();
    Ok(GeometricCoefficients { a, b, c, d, mean_curvature: mean })
}
