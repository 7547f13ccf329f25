//! Planar critical points of the energy by descent on
//! `E + lambda * int (d*A)^2` with Dirichlet boundary data, and the
//! projection onto Coulomb gauge.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    codifferential, energy, gauge_transform, lattice_energy_and_gradient, residual_from_gradient, FieldConfiguration,
    EnergySplit, LatticeGradient, C64,
};
use crate::grid::{Grid, Region};
use crate::radial::{solve_bogomolny, vortex_at, RadialProfile};
use crate::sparse::{least_squares, SparseBuilder};

/// Consecutive non-decreasing accepted steps that count as stagnation.
pub const STAGNATION_WINDOW: usize = 50;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    /// Every step has this length in the descent metric.
    Fixed { step: f64 },
    /// Barzilai–Borwein trial steps with Armijo backtracking.
    Backtracking,
}

/// Where the Dirichlet data come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Degree-one vortex centred at the origin.
    VortexTrace,
    /// `u = 1`, `A = 0`.
    Vacuum,
    /// Whatever the initial configuration holds.
    Provided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSettings {
    pub max_iterations: usize,
    pub step_rule: StepRule,
    /// Bound on the sup norms of the Euler–Lagrange and Coulomb residuals.
    pub tolerance: f64,
    pub gauge_fix_weight: f64,
    pub boundary: BoundaryMode,
    /// Apply [`project_coulomb`] to the converged state.
    pub project_at_end: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            step_rule: StepRule::Backtracking,
            tolerance: 1e-6,
            gauge_fix_weight: 1.0,
            boundary: BoundaryMode::Provided,
            project_at_end: false,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.gauge_fix_weight >= 0.0 && self.gauge_fix_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!("gauge_fix_weight {} must be >= 0", self.gauge_fix_weight)));
        }
        if let StepRule::Fixed { step } = self.step_rule {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidParameter(format!("fixed step {step} must be positive")));
            }
        }
        Ok(())
    }
}

/// Residual sup norms over interior nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub euler_lagrange: f64,
    pub euler_lagrange_u: f64,
    pub euler_lagrange_a: f64,
    pub coulomb: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Accepted descent steps.
    pub iterations: usize,
    pub evaluations: usize,
    pub residuals: ResidualSummary,
    /// Residuals before the final gauge projection, when one was applied.
    pub pre_projection: Option<ResidualSummary>,
    pub augmented_energy: f64,
    pub lattice_energy: f64,
    pub energy: EnergySplit,
    pub gauge_fix_weight: f64,
    pub wall_time_s: f64,
}

struct State {
    cfg: FieldConfiguration,
    objective: f64,
    lattice: f64,
    lattice_grad: LatticeGradient,
    /// Gradient of the augmented objective.
    grad: LatticeGradient,
    dstar: Vec<f64>,
}

fn evaluate(cfg: FieldConfiguration, lambda: f64) -> State {
    let g = &cfg.grid;
    let (lattice, lattice_grad) = lattice_energy_and_gradient(&cfg);
    let dstar = codifferential(g, &cfg.a);
    let mut grad = lattice_grad.clone();
    let mut penalty = 0.0;
    if lambda > 0.0 {
        for i in 0..g.len() {
            let w = g.weight(i);
            penalty += lambda * w * dstar[i] * dstar[i];
            let coef = 2.0 * lambda * w * dstar[i];
            for c in 0..g.dim() {
                for (k, s) in g.diff_stencil(i, c) {
                    grad.da[c][k] -= coef * s;
                }
            }
        }
    }
    State { cfg, objective: lattice + penalty, lattice, lattice_grad, grad, dstar }
}

fn summary(state: &State) -> ResidualSummary {
    let g = &state.cfg.grid;
    let s = residual_from_gradient(&state.cfg, &state.lattice_grad);
    let (u, a) = s.split_sup_where(|i| g.is_interior(i));
    let coulomb = (0..g.len()).filter(|&i| g.is_interior(i)).map(|i| state.dstar[i].abs()).fold(0.0, f64::max);
    ResidualSummary { euler_lagrange: u.max(a), euler_lagrange_u: u, euler_lagrange_a: a, coulomb }
}

fn converged(r: &ResidualSummary, tol: f64) -> bool {
    r.euler_lagrange <= tol && r.coulomb <= tol
}

/// Descent direction in the eps-weighted metric, zero on the boundary.
fn direction(state: &State) -> LatticeGradient {
    let g = &state.cfg.grid;
    let w = g.cell_volume();
    let e2 = state.cfg.epsilon * state.cfg.epsilon;
    let mut d = LatticeGradient { du: vec![C64::new(0.0, 0.0); g.len()], da: vec![vec![0.0; g.len()]; g.dim()] };
    for i in (0..g.len()).filter(|&i| g.is_interior(i)) {
        d.du[i] = -state.grad.du[i] * (e2 / (2.0 * w));
        for c in 0..g.dim() {
            d.da[c][i] = -state.grad.da[c][i] / (2.0 * w);
        }
    }
    d
}

fn euclid_dot(a: &LatticeGradient, b: &LatticeGradient) -> f64 {
    let u: f64 = a.du.iter().zip(&b.du).map(|(x, y)| x.re * y.re + x.im * y.im).sum();
    let v: f64 = a.da.iter().zip(&b.da).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum();
    u + v
}

/// `<s, M s>` for the metric with `direction = -M^{-1} grad`.
fn metric_norm2(s: &LatticeGradient, grid: &Grid, epsilon: f64) -> f64 {
    let w = grid.cell_volume();
    let u: f64 = s.du.iter().map(|z| z.norm_sqr()).sum::<f64>() * 2.0 * w / (epsilon * epsilon);
    let a: f64 = s.da.iter().flatten().map(|v| v * v).sum::<f64>() * 2.0 * w;
    u + a
}

fn step_to(cfg: &FieldConfiguration, d: &LatticeGradient, t: f64) -> FieldConfiguration {
    let mut out = cfg.clone();
    for (u, du) in out.u.iter_mut().zip(&d.du) {
        *u += du * t;
    }
    for (ac, dc) in out.a.iter_mut().zip(&d.da) {
        for (v, dv) in ac.iter_mut().zip(dc) {
            *v += t * dv;
        }
    }
    out
}

fn impose_boundary(cfg: &mut FieldConfiguration, mode: BoundaryMode) -> Result<()> {
    let g = cfg.grid.clone();
    let boundary: Vec<usize> = (0..g.len()).filter(|&i| !g.is_interior(i)).collect();
    match mode {
        BoundaryMode::Provided => {}
        BoundaryMode::Vacuum => {
            for &i in &boundary {
                cfg.u[i] = C64::new(1.0, 0.0);
                for c in 0..g.dim() {
                    cfg.a[c][i] = 0.0;
                }
            }
        }
        BoundaryMode::VortexTrace => {
            if g.dim() != 2 {
                return Err(Error::Dimension("vortex trace needs a 2D grid".into()));
            }
            let profile = profile_covering(&g, cfg.epsilon)?;
            for &i in &boundary {
                let x = g.position(i);
                let (u, a) = vortex_at(&profile, [x[0], x[1]], cfg.epsilon)?;
                cfg.u[i] = u;
                cfg.a[0][i] = a[0];
                cfg.a[1][i] = a[1];
            }
        }
    }
    Ok(())
}

/// A radial profile reaching every node of a grid centred at the origin.
pub fn profile_covering(grid: &Grid, epsilon: f64) -> Result<RadialProfile> {
    let reach = grid.axes().iter().map(|a| a.min.abs().max(a.max().abs()).powi(2)).sum::<f64>().sqrt();
    solve_bogomolny((reach / epsilon + 1.0).max(20.0), 1e-8)
}

/// Vortex trace on the boundary and the degree-one vacuum
/// `(x/|x|, d theta)` inside (zero at the origin node).
pub fn vortex_trace_initial(grid: &Grid, epsilon: f64) -> Result<FieldConfiguration> {
    if grid.dim() != 2 {
        return Err(Error::Dimension("vortex trace needs a 2D grid".into()));
    }
    let mut cfg = FieldConfiguration::from_fn(grid.clone(), epsilon, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            return (C64::new(0.0, 0.0), vec![0.0, 0.0]);
        }
        let r = r2.sqrt();
        (C64::new(x[0] / r, x[1] / r), vec![-x[1] / r2, x[0] / r2])
    })?;
    impose_boundary(&mut cfg, BoundaryMode::VortexTrace)?;
    Ok(cfg)
}

/// Descends the augmented energy from `init` with the boundary held fixed.
pub fn solve_planar(
    epsilon: f64,
    grid: &Grid,
    init: FieldConfiguration,
    settings: &SolveSettings,
) -> Result<(FieldConfiguration, ConvergenceReport)> {
    settings.validate()?;
    init.validate()?;
    if init.grid != *grid || init.epsilon != epsilon {
        return Err(Error::Layout("initial configuration does not live on the given grid and epsilon".into()));
    }
    if grid.axes().iter().any(|a| a.count < 3) {
        return Err(Error::GridTooSmall);
    }
    let start = Instant::now();
    let lambda = settings.gauge_fix_weight;
    let mut cfg = init;
    impose_boundary(&mut cfg, settings.boundary)?;

    let mut state = evaluate(cfg, lambda);
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut flat_steps = 0;
    let h = grid.axes().iter().map(|a| a.spacing).fold(f64::INFINITY, f64::min);
    let t_default = 0.2 * h * h / (epsilon * epsilon).max(h * h);
    let mut t_next = t_default;
    let mut res = summary(&state);

    let report = |state: &State, res: ResidualSummary, iterations, evaluations, ok: bool| -> Result<ConvergenceReport> {
        Ok(ConvergenceReport {
            converged: ok,
            iterations,
            evaluations,
            residuals: res,
            pre_projection: None,
            augmented_energy: state.objective,
            lattice_energy: state.lattice,
            energy: energy(&state.cfg, &Region::All)?,
            gauge_fix_weight: lambda,
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    };

    while !converged(&res, settings.tolerance) {
        if iterations >= settings.max_iterations {
            let r = report(&state, res, iterations, evaluations, false)?;
            return Err(Error::NotConverged { report: Box::new(r) });
        }
        let d = direction(&state);
        let slope = euclid_dot(&state.grad, &d);
        let (mut t, backtrack) = match settings.step_rule {
            StepRule::Fixed { step } => (step, false),
            StepRule::Backtracking => (t_next, true),
        };
        let mut trial = evaluate(step_to(&state.cfg, &d, t), lambda);
        evaluations += 1;
        if backtrack {
            let mut halvings = 0;
            while !(trial.objective <= state.objective + ARMIJO * t * slope) && halvings < MAX_HALVINGS {
                t *= 0.5;
                halvings += 1;
                trial = evaluate(step_to(&state.cfg, &d, t), lambda);
                evaluations += 1;
            }
        }
        let decreased = trial.objective < state.objective;
        if backtrack && !decreased {
            // Rounding floor: keep the iterate, restart the step sequence.
            flat_steps += 1;
            t_next = t_default;
        } else {
            let mut s = d;
            for v in s.du.iter_mut() {
                *v *= t;
            }
            for v in s.da.iter_mut().flatten() {
                *v *= t;
            }
            let y = LatticeGradient {
                du: trial.grad.du.iter().zip(&state.grad.du).map(|(a, b)| a - b).collect(),
                da: trial.grad.da.iter().zip(&state.grad.da).map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect()).collect(),
            };
            let sy = euclid_dot(&s, &y);
            let sms = metric_norm2(&s, grid, epsilon);
            t_next = if sy > 0.0 && sms > 0.0 { (sms / sy).min(1e3 * t_default.max(t)) } else { 2.0 * t };
            flat_steps = if decreased { 0 } else { flat_steps + 1 };
            state = trial;
            iterations += 1;
            res = summary(&state);
        }
        if flat_steps >= STAGNATION_WINDOW {
            let r = report(&state, res, iterations, evaluations, false)?;
            return Err(Error::Stagnation { steps: flat_steps, report: Box::new(r) });
        }
    }

    let mut out = report(&state, res, iterations, evaluations, true)?;
    let mut cfg = state.cfg;
    if settings.project_at_end {
        cfg = project_coulomb(&cfg)?;
        let projected = evaluate(cfg, lambda);
        out.pre_projection = Some(out.residuals);
        out.residuals = summary(&projected);
        out.augmented_energy = projected.objective;
        out.lattice_energy = projected.lattice;
        out.energy = energy(&projected.cfg, &Region::All)?;
        cfg = projected.cfg;
    }
    out.wall_time_s = start.elapsed().as_secs_f64();
    Ok((cfg, out))
}

/// The gauge function `gamma` with `d*(A - d gamma) = 0` at interior nodes
/// and `(A - d gamma)(nu) = 0` on the boundary, in the least-squares sense,
/// normalized to vanish at the central node.
pub fn coulomb_gauge_function(config: &FieldConfiguration) -> Result<Vec<f64>> {
    config.validate()?;
    let g = &config.grid;
    if g.axes().iter().any(|a| a.count < 3) {
        return Err(Error::GridTooSmall);
    }
    let n = g.len();
    let h = g.max_spacing();
    let mut m = SparseBuilder::new(n);
    let mut rhs = Vec::new();
    let mut row = std::collections::BTreeMap::new();
    for i in 0..n {
        if g.is_interior(i) {
            // sum_c D_c D_c gamma = sum_c D_c A_c
            row.clear();
            let mut b = 0.0;
            for c in 0..g.dim() {
                for (k, s) in g.diff_stencil(i, c) {
                    b += s * config.a[c][k];
                    for (j, t) in g.diff_stencil(k, c) {
                        *row.entry(j).or_insert(0.0) += s * t;
                    }
                }
            }
            m.push_row(row.iter().map(|(&j, &v)| (j, v)));
            rhs.push(b);
        }
        for c in 0..g.dim() {
            let ic = g.coord_index(i, c);
            if ic == 0 || ic + 1 == g.axis(c).count {
                m.push_row(g.diff_stencil(i, c).map(|(j, t)| (j, t / h)));
                rhs.push(config.a[c][i] / h);
            }
        }
    }
    let center = g.index(&g.axes().iter().map(|a| a.count / 2).collect::<Vec<_>>());
    m.push_row([(center, 1.0 / (h * h))]);
    rhs.push(0.0);
    least_squares(&m.build()?, &rhs)
}

/// `G_{-gamma}(config)` with `gamma` from [`coulomb_gauge_function`].
pub fn project_coulomb(config: &FieldConfiguration) -> Result<FieldConfiguration> {
    let gamma = coulomb_gauge_function(config)?;
    let neg: Vec<f64> = gamma.iter().map(|v| -v).collect();
    gauge_transform(config, &neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;

    #[test]
    fn settings_reject_unknown_keys_and_bad_values() {
        let s: std::result::Result<SolveSettings, _> = serde_json::from_str(r#"{"tolerance": 1e-3, "bogus": 1}"#);
        assert!(s.is_err());
        let s: SolveSettings = serde_json::from_str(r#"{"step_rule": {"kind": "fixed", "step": 0.01}}"#).unwrap();
        assert_eq!(s.step_rule, StepRule::Fixed { step: 0.01 });
        let bad = SolveSettings { gauge_fix_weight: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn vacuum_is_a_fixed_point() {
        let g = Grid2::new(2.0, 0.25).unwrap().grid();
        let cfg = FieldConfiguration::vacuum(g.clone(), 0.5).unwrap();
        let (out, rep) = solve_planar(0.5, &g, cfg.clone(), &SolveSettings::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(out, cfg);
    }

    #[test]
    fn coulomb_projection_leaves_coulomb_data_alone() {
        let g = Grid2::new(2.0, 0.2).unwrap().grid();
        let cfg = FieldConfiguration::from_fn(g, 1.0, |x| (C64::new(1.0, x[0]), vec![0.0, 0.0])).unwrap();
        let gamma = coulomb_gauge_function(&cfg).unwrap();
        assert!(gamma.iter().all(|v| v.abs() < 1e-10));
    }
}
