//! The operator `L = S' + Theta Theta*` at a base configuration, the gauge
//! operators `Theta`, `Theta*`, the translational zero modes of the vortex,
//! and a shift-invert eigenvalue probe on the gauge-orthogonal subspace.
//!
//! Perturbations are packed over interior nodes as
//! `[Re phi | Im phi | omega_1 | ... | omega_d]`; boundary values are zero.

use std::sync::OnceLock;

use faer::sparse::SparseColMat;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{covariant_gradient, euler_lagrange_residual, FieldConfiguration, Perturbation, C64};
use crate::grid::Grid;
use crate::radial::RadialProfile;
use crate::sparse::{apply, SparseBuilder, SquareSolver};

const NONE: usize = usize::MAX;

pub struct LinearizedSystem {
    pub base: FieldConfiguration,
    interior: Vec<usize>,
    l: SparseColMat<usize, f64>,
    theta: SparseColMat<usize, f64>,
    theta_star: SparseColMat<usize, f64>,
    gauge: SparseColMat<usize, f64>,
    /// `|u|^2 - eps^2 Lap` with the compact five-point Laplacian.
    gauge_compact: SparseColMat<usize, f64>,
    l_solver: OnceLock<std::result::Result<SquareSolver, String>>,
    gauge_solver: OnceLock<std::result::Result<SquareSolver, String>>,
    compact_solver: OnceLock<std::result::Result<SquareSolver, String>>,
}

impl std::fmt::Debug for LinearizedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearizedSystem").field("unknowns", &self.unknowns()).finish()
    }
}

/// Assembles `L`, `Theta` and `Theta*` at `base` with homogeneous
/// Dirichlet conditions.
pub fn assemble(base: &FieldConfiguration) -> Result<LinearizedSystem> {
    base.validate()?;
    let g = &base.grid;
    if g.axes().iter().any(|a| a.count < 3) {
        return Err(Error::GridTooSmall);
    }
    let d = g.dim();
    let e2 = base.epsilon * base.epsilon;
    let interior: Vec<usize> = (0..g.len()).filter(|&i| g.is_interior(i)).collect();
    let mut slot = vec![NONE; g.len()];
    for (k, &i) in interior.iter().enumerate() {
        slot[i] = k;
    }
    let m = interior.len();
    let col = |block: usize, node: usize| -> Option<usize> { (slot[node] != NONE).then(|| block * m + slot[node]) };
    let du = covariant_gradient(base)?;
    let u = &base.u;

    let mut l = SparseBuilder::with_shape((2 + d) * m, (2 + d) * m);
    let row = |block: usize, k: usize| block * m + k;
    for (k, &i) in interior.iter().enumerate() {
        let u2 = u[i].norm_sqr();
        // -eps^2 Lap^A phi, links as in the lattice action.
        let mut diag = 0.0;
        for c in 0..d {
            let h = g.spacing(c);
            let s = g.stride(c);
            let cf = e2 / (h * h);
            diag += 2.0 * cf;
            let fwd = i + s;
            let bwd = i - s;
            let up = C64::from_polar(1.0, 0.5 * h * (base.a[c][i] + base.a[c][fwd])).conj();
            let dn = C64::from_polar(1.0, 0.5 * h * (base.a[c][bwd] + base.a[c][i]));
            for (node, link) in [(fwd, up), (bwd, dn)] {
                if let (Some(xr), Some(xi)) = (col(0, node), col(1, node)) {
                    let kap = -link * cf;
                    l.push(row(0, k), xr, kap.re);
                    l.push(row(0, k), xi, -kap.im);
                    l.push(row(1, k), xr, kap.im);
                    l.push(row(1, k), xi, kap.re);
                }
                if slot[node] != NONE {
                    for b in 0..d {
                        l.push(row(2 + b, k), (2 + b) * m + slot[node], -cf);
                    }
                }
            }
        }
        let pot = diag - 0.5 * (1.0 - 3.0 * u2);
        l.push(row(0, k), row(0, k), pot);
        l.push(row(1, k), row(1, k), pot);
        for c in 0..d {
            l.push(row(2 + c, k), row(2 + c, k), diag + u2);
            let gc = du[c][i];
            // 2 i eps^2 grad^A u . omega
            l.push(row(0, k), row(2 + c, k), -2.0 * e2 * gc.im);
            l.push(row(1, k), row(2 + c, k), 2.0 * e2 * gc.re);
            // -2 <grad^A u, i phi>
            l.push(row(2 + c, k), row(0, k), -2.0 * gc.im);
            l.push(row(2 + c, k), row(1, k), 2.0 * gc.re);
        }
    }

    let mut theta = SparseBuilder::with_shape((2 + d) * m, m);
    let mut theta_star = SparseBuilder::with_shape(m, (2 + d) * m);
    let mut gauge = SparseBuilder::with_shape(m, m);
    for (k, &i) in interior.iter().enumerate() {
        theta.push(row(0, k), k, -u[i].im);
        theta.push(row(1, k), k, u[i].re);
        theta_star.push(k, row(0, k), -u[i].im);
        theta_star.push(k, row(1, k), u[i].re);
        for c in 0..d {
            for (node, s) in g.diff_stencil(i, c) {
                if let Some(j) = col(0, node) {
                    theta.push(row(2 + c, k), j, s);
                }
                if let Some(j) = col(2 + c, node) {
                    theta_star.push(k, j, -e2 * s);
                }
            }
        }
    }
    // Theta* Theta = |u|^2 - eps^2 sum_c D_c D_c on interior scalars.
    for (k, &i) in interior.iter().enumerate() {
        gauge.push(k, k, u[i].norm_sqr());
        for c in 0..d {
            for (node, s) in g.diff_stencil(i, c) {
                if slot[node] == NONE {
                    continue;
                }
                for (j, t) in g.diff_stencil(node, c) {
                    if slot[j] != NONE {
                        gauge.push(k, slot[j], -e2 * s * t);
                    }
                }
            }
        }
    }
    let mut gauge_compact = SparseBuilder::with_shape(m, m);
    for (k, &i) in interior.iter().enumerate() {
        let mut diag = u[i].norm_sqr();
        for c in 0..d {
            let cf = e2 / (g.spacing(c) * g.spacing(c));
            diag += 2.0 * cf;
            for node in [i + g.stride(c), i - g.stride(c)] {
                if slot[node] != NONE {
                    gauge_compact.push(k, slot[node], -cf);
                }
            }
        }
        gauge_compact.push(k, k, diag);
    }

    Ok(LinearizedSystem {
        base: base.clone(),
        interior,
        l: l.build()?,
        theta: theta.build()?,
        theta_star: theta_star.build()?,
        gauge: gauge.build()?,
        gauge_compact: gauge_compact.build()?,
        l_solver: OnceLock::new(),
        gauge_solver: OnceLock::new(),
        compact_solver: OnceLock::new(),
    })
}

impl LinearizedSystem {
    pub fn grid(&self) -> &Grid {
        &self.base.grid
    }

    /// Length of a packed perturbation.
    pub fn unknowns(&self) -> usize {
        (2 + self.base.dim()) * self.interior.len()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Interior values of a perturbation; boundary values are dropped.
    pub fn pack(&self, p: &Perturbation) -> Result<Vec<f64>> {
        p.check_layout(self.grid())?;
        let m = self.interior.len();
        let mut x = vec![0.0; self.unknowns()];
        for (k, &i) in self.interior.iter().enumerate() {
            x[k] = p.phi[i].re;
            x[m + k] = p.phi[i].im;
            for c in 0..self.base.dim() {
                x[(2 + c) * m + k] = p.omega[c][i];
            }
        }
        Ok(x)
    }

    pub fn unpack(&self, x: &[f64]) -> Perturbation {
        let g = self.grid();
        let m = self.interior.len();
        let mut p = Perturbation::zeros(g.dim(), g.len());
        for (k, &i) in self.interior.iter().enumerate() {
            p.phi[i] = C64::new(x[k], x[m + k]);
            for c in 0..g.dim() {
                p.omega[c][i] = x[(2 + c) * m + k];
            }
        }
        p
    }

    fn pack_scalar(&self, gamma: &[f64]) -> Result<Vec<f64>> {
        if gamma.len() != self.grid().len() {
            return Err(Error::Layout(format!("gamma has {} nodes, grid has {}", gamma.len(), self.grid().len())));
        }
        Ok(self.interior.iter().map(|&i| gamma[i]).collect())
    }

    fn unpack_scalar(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid().len()];
        for (k, &i) in self.interior.iter().enumerate() {
            out[i] = y[k];
        }
        out
    }

    /// Diagonal of the discrete eps-inner product on packed vectors.
    pub fn metric(&self) -> Vec<f64> {
        let m = self.interior.len();
        let w = self.grid().cell_volume();
        let e2 = self.base.epsilon * self.base.epsilon;
        (0..self.unknowns()).map(|j| if j < 2 * m { w } else { e2 * w }).collect()
    }

    pub fn apply_l_packed(&self, x: &[f64]) -> Vec<f64> {
        apply(&self.l, x)
    }

    pub fn apply_l(&self, p: &Perturbation) -> Result<Perturbation> {
        Ok(self.unpack(&self.apply_l_packed(&self.pack(p)?)))
    }

    /// `Theta[gamma] = (i u gamma, d gamma)`; `gamma` is taken as zero on
    /// the boundary.
    pub fn apply_theta(&self, gamma: &[f64]) -> Result<Perturbation> {
        Ok(self.unpack(&apply(&self.theta, &self.pack_scalar(gamma)?)))
    }

    /// `Theta* P = Re(i u conj(phi)) + eps^2 d* omega` at interior nodes.
    pub fn apply_theta_star(&self, p: &Perturbation) -> Result<Vec<f64>> {
        Ok(self.unpack_scalar(&apply(&self.theta_star, &self.pack(p)?)))
    }

    /// `(L - Theta Theta*) P`.
    pub fn apply_decomposed(&self, p: &Perturbation) -> Result<Perturbation> {
        let x = self.pack(p)?;
        let lx = apply(&self.l, &x);
        let tt = apply(&self.theta, &apply(&self.theta_star, &x));
        Ok(self.unpack(&lx.iter().zip(&tt).map(|(a, b)| a - b).collect::<Vec<_>>()))
    }

    fn l_solver(&self) -> Result<&SquareSolver> {
        self.l_solver
            .get_or_init(|| SquareSolver::new(&self.l).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Eigen(e.clone()))
    }

    fn gauge_solver(&self) -> Result<&SquareSolver> {
        self.gauge_solver
            .get_or_init(|| SquareSolver::new(&self.gauge).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::LinearSolve(e.clone()))
    }

    /// Packed projection onto `ker Theta*`, orthogonal in the eps-metric.
    pub fn gauge_project_packed(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = apply(&self.theta_star, x);
        let gamma = self.gauge_solver()?.solve(&r);
        let t = apply(&self.theta, &gamma);
        Ok(x.iter().zip(&t).map(|(a, b)| a - b).collect())
    }

    pub fn gauge_project(&self, p: &Perturbation) -> Result<Perturbation> {
        Ok(self.unpack(&self.gauge_project_packed(&self.pack(p)?)?))
    }

    /// `P - Theta[chi gamma]` with `(|u|^2 - eps^2 Lap) gamma = Theta* P` for
    /// the compact Laplacian and `chi` a smooth cutoff vanishing within
    /// `margin` of the faces. Where `chi = 1` this leaves `Theta* P = O(h^2)`;
    /// smooth inputs stay smooth, unlike under the exact projection, whose
    /// normal operator nearly annihilates checkerboard modes where `|u|` is
    /// small.
    pub fn gauge_fix_smooth(&self, p: &Perturbation, margin: f64) -> Result<Perturbation> {
        let solver = self
            .compact_solver
            .get_or_init(|| SquareSolver::new(&self.gauge_compact).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::LinearSolve(e.clone()))?;
        let x = self.pack(p)?;
        let chi = face_cutoff(self.grid(), margin)?;
        let gamma: Vec<f64> = solver
            .solve(&apply(&self.theta_star, &x))
            .into_iter()
            .zip(&self.interior)
            .map(|(v, &i)| v * chi[i])
            .collect();
        let t = apply(&self.theta, &gamma);
        Ok(self.unpack(&x.iter().zip(&t).map(|(a, b)| a - b).collect::<Vec<_>>()))
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        let w = self.metric();
        x.iter().zip(y).zip(&w).map(|((a, b), c)| a * b * c).sum()
    }
}

/// Samples `v_1 = (f', (a'/r) dz^2)`, `v_2 = (i f', -(a'/r) dz^1)` for the
/// unit-scale vortex centred at the origin.
pub fn translational_zero_modes(profile: &RadialProfile, grid: &Grid) -> Result<[Perturbation; 2]> {
    translational_zero_modes_scaled(profile, grid, [0.0, 0.0], 1.0)
}

/// Zero modes of the vortex `U_0((x - center) / eps)`: the scalar part
/// carries `1/eps`, the 1-form part `1/eps^2`.
pub fn translational_zero_modes_scaled(
    profile: &RadialProfile,
    grid: &Grid,
    center: [f64; 2],
    epsilon: f64,
) -> Result<[Perturbation; 2]> {
    if grid.dim() != 2 {
        return Err(Error::Dimension("zero modes are sampled on 2D grids".into()));
    }
    let mut v1 = Perturbation::zeros_like(grid);
    let mut v2 = Perturbation::zeros_like(grid);
    for i in 0..grid.len() {
        let x = grid.position(i);
        let s = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt() / epsilon;
        let p = profile.eval(s)?;
        // a'/r = (1 - f^2)/2 holds on the solution and is regular at 0.
        let b = 0.5 * (1.0 - p.f * p.f) / (epsilon * epsilon);
        let fp = p.f_prime / epsilon;
        v1.phi[i] = C64::new(fp, 0.0);
        v1.omega[1][i] = b;
        v2.phi[i] = C64::new(0.0, fp);
        v2.omega[0][i] = -b;
    }
    Ok([v1, v2])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `sup |S' P|` from centred differencing of the residual.
    pub s_prime: f64,
    /// `sup |(L - Theta Theta*) P|`.
    pub decomposed: f64,
    /// `sup |S' P - (L - Theta Theta*) P| / sup |P|`.
    pub discrepancy: f64,
    /// `sup |Theta* P|`.
    pub theta_star: f64,
    pub delta: f64,
}

/// Compares `S'P`, computed as `(S(W + delta P) - S(W - delta P)) / (2 delta)`,
/// with `(L - Theta Theta*) P` on interior nodes.
pub fn decomposition_check(system: &LinearizedSystem, p: &Perturbation, delta: f64) -> Result<DecompositionReport> {
    if !(1e-7..=1e-2).contains(&delta) {
        return Err(Error::StepOutOfRange(delta));
    }
    let g = system.grid();
    let mut p = p.clone();
    p.check_layout(g)?;
    p.mask(|i| g.is_interior(i));
    let plus = euler_lagrange_residual(&system.base.perturbed(&p, delta))?;
    let minus = euler_lagrange_residual(&system.base.perturbed(&p, -delta))?;
    let mut sp = plus.sub(&minus);
    sp.scale(0.5 / delta);
    let dec = system.apply_decomposed(&p)?;
    let interior = |i: usize| g.is_interior(i);
    let scale = p.sup_norm().max(f64::MIN_POSITIVE);
    let ts = system.apply_theta_star(&p)?;
    Ok(DecompositionReport {
        s_prime: sp.sup_norm_where(interior),
        decomposed: dec.sup_norm_where(interior),
        discrepancy: sp.sub(&dec).sup_norm_where(interior) / scale,
        theta_star: ts.iter().map(|v| v.abs()).fold(0.0, f64::max),
        delta,
    })
}

/// A smooth random perturbation with unit sup norm: a sum of Gaussian bumps
/// with random complex / vector amplitudes, centred at least three widths
/// inside a smooth cutoff that vanishes within `margin` of the faces.
pub fn random_perturbation(grid: &Grid, seed: u64, bumps: usize, width: f64, margin: f64) -> Result<Perturbation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = grid.dim();
    let inset = margin + 3.0 * width;
    let lo: Vec<f64> = grid.axes().iter().map(|a| a.min + inset).collect();
    let hi: Vec<f64> = grid.axes().iter().map(|a| a.max() - inset).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Err(Error::InvalidParameter(format!("margin {margin} and width {width} leave no room for bumps")));
    }
    let centers: Vec<(Vec<f64>, C64, Vec<f64>)> = (0..bumps)
        .map(|_| {
            let c = (0..d).map(|k| rng.random_range(lo[k]..hi[k])).collect();
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let w = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            (c, z, w)
        })
        .collect();
    let chi = face_cutoff(grid, margin)?;
    let mut p = Perturbation::zeros_like(grid);
    for i in 0..grid.len() {
        let x = grid.position(i);
        let cut = chi[i];
        if cut == 0.0 {
            continue;
        }
        for (c, z, w) in &centers {
            let r2: f64 = (0..d).map(|k| (x[k] - c[k]).powi(2)).sum();
            let e = cut * (-r2 / (width * width)).exp();
            p.phi[i] += z * e;
            for k in 0..d {
                p.omega[k][i] += w[k] * e;
            }
        }
    }
    let s = p.sup_norm();
    if s > 0.0 {
        p.scale(1.0 / s);
    }
    Ok(p)
}

/// Smooth cutoff: 0 on the faces, 1 at distance `>= margin` from all faces.
pub fn face_cutoff(grid: &Grid, margin: f64) -> Result<Vec<f64>> {
    if !(margin > 0.0) || grid.axes().iter().any(|a| 2.0 * margin >= a.max() - a.min) {
        return Err(Error::InvalidParameter(format!("margin {margin} leaves no interior")));
    }
    Ok((0..grid.len())
        .map(|i| {
            (0..grid.dim())
                .map(|k| {
                    let x = grid.coord(i, k);
                    let ax = grid.axis(k);
                    smooth_step(((x - ax.min) / margin).min((ax.max() - x) / margin))
                })
                .product()
        })
        .collect())
}

/// `C^inf` step: 0 for `t <= 0`, 1 for `t >= 1`.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RitzPair {
    pub value: f64,
    /// `||P L P x - value x||_eps` for the unit Ritz vector.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub base: String,
    pub unknowns: usize,
    pub deflated_modes: usize,
    pub ritz: Vec<RitzPair>,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
}

/// Smallest `count` eigenvalues of `L` restricted to `ker Theta*` and the
/// eps-orthogonal complement of `deflate`, by inverse subspace iteration.
/// Stops when successive Ritz values agree to `tol` (relative) or all
/// residuals fall below `tol` times the value.
pub fn eigen_probe(
    system: &LinearizedSystem,
    deflate: &[Perturbation],
    count: usize,
    tol: f64,
    max_iterations: usize,
) -> Result<EigenReport> {
    if count == 0 || !(tol > 0.0) {
        return Err(Error::InvalidParameter("count must be positive and tol > 0".into()));
    }
    let n = system.unknowns();
    let block = (count + 3).min(n);
    let w = system.metric();
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).zip(&w).map(|((a, b), c)| a * b * c).sum() };

    // Deflation basis: gauge-projected, eps-orthonormal.
    let mut kernel: Vec<Vec<f64>> = Vec::new();
    for p in deflate {
        let mut v = system.gauge_project_packed(&system.pack(p)?)?;
        for q in &kernel {
            let c = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let nv = dot(&v, &v).sqrt();
        if nv > 0.0 {
            v.iter_mut().for_each(|a| *a /= nv);
            kernel.push(v);
        }
    }
    let project = |x: Vec<f64>| -> Result<Vec<f64>> {
        let mut v = system.gauge_project_packed(&x)?;
        for q in &kernel {
            let c = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        Ok(v)
    };
    let orthonormalize = |xs: &mut Vec<Vec<f64>>| {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(xs.len());
        for mut v in xs.drain(..) {
            for _ in 0..2 {
                for q in &out {
                    let c = dot(&v, q);
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                }
            }
            let nv = dot(&v, &v).sqrt();
            if nv > 1e-300 {
                v.iter_mut().for_each(|a| *a /= nv);
                out.push(v);
            }
        }
        *xs = out;
    };

    let solver = system.l_solver()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| project((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect::<Result<_>>()?;
    orthonormalize(&mut x);

    let mut ritz: Vec<RitzPair> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let mut y: Vec<Vec<f64>> = x.iter().map(|v| project(solver.solve(v))).collect::<Result<_>>()?;
        orthonormalize(&mut y);
        let ly: Vec<Vec<f64>> = y.iter().map(|v| project(system.apply_l_packed(v))).collect::<Result<_>>()?;
        let k = y.len();
        let h = DMatrix::from_fn(k, k, |a, b| 0.5 * (dot(&y[a], &ly[b]) + dot(&y[b], &ly[a])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let combine = |vs: &[Vec<f64>], j: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (a, v) in vs.iter().enumerate() {
                let c = eig.eigenvectors[(a, j)];
                out.iter_mut().zip(v).for_each(|(o, b)| *o += c * b);
            }
            out
        };
        x = order.iter().map(|&j| combine(&y, j)).collect();
        let lx: Vec<Vec<f64>> = order.iter().map(|&j| combine(&ly, j)).collect();
        let previous = std::mem::take(&mut ritz);
        ritz = order
            .iter()
            .take(count)
            .enumerate()
            .map(|(a, &j)| {
                let lam = eig.eigenvalues[j];
                let r: Vec<f64> = lx[a].iter().zip(&x[a]).map(|(p, q)| p - lam * q).collect();
                RitzPair { value: lam, residual: dot(&r, &r).sqrt() }
            })
            .collect();
        let settled = previous.len() == ritz.len()
            && ritz.iter().zip(&previous).all(|(a, b)| (a.value - b.value).abs() <= tol * a.value.abs().max(1e-8));
        if settled || ritz.iter().all(|p| p.residual <= tol * p.value.abs().max(1e-8)) {
            converged = true;
            break;
        }
    }
    Ok(EigenReport {
        base: format!("{} nodes, eps = {}", system.grid().len(), system.base.epsilon),
        unknowns: n,
        deflated_modes: kernel.len(),
        ritz,
        iterations,
        converged,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;

    #[test]
    fn vacuum_operator_is_shifted_laplacian() {
        let g = Grid2::new(2.0, 0.1).unwrap().grid();
        let base = FieldConfiguration::vacuum(g.clone(), 1.0).unwrap();
        let sys = assemble(&base).unwrap();
        let p = random_perturbation(&g, 3, 4, 0.5, 0.4).unwrap();
        let lp = sys.apply_l(&p).unwrap();
        for i in (0..g.len()).filter(|&i| g.is_interior(i)) {
            let lap = g.second_diff(&p.phi, i, 0) + g.second_diff(&p.phi, i, 1);
            assert!((lp.phi[i] - (-lap + p.phi[i])).norm() < 1e-10);
            let lap = g.second_diff(&p.omega[1], i, 0) + g.second_diff(&p.omega[1], i, 1);
            assert!((lp.omega[1][i] - (-lap + p.omega[1][i])).abs() < 1e-10);
        }
    }

    #[test]
    fn smooth_step_is_monotone() {
        let v: Vec<f64> = (0..=20).map(|k| smooth_step(k as f64 / 20.0)).collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(v[0], 0.0);
        assert_eq!(v[20], 1.0);
    }
}
