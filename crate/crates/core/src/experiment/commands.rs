use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use super::params::*;
use super::{ExperimentError, ExperimentResult, FieldError, RunContext};
use crate::fermi::{ansatz_residual, build_ansatz as make_ansatz, build_cutoff_vortex, log_log_slope, FermiChart, TangentialGrid};
use crate::fields::{
    bogomolny_residual, covariant_gradient, coulomb_residual, curvature, energy, gauge_transform, snapshot,
    FieldConfiguration, Perturbation,
};
use crate::geometry::{
    density_ratio, excess, extract_nodal_set, fit_graph, modulus_level_tube, write_level_csv, write_points_csv,
};
use crate::grid::{Axis, Grid, Grid2, GridN, Region};
use crate::linearized::{assemble, decomposition_check, eigen_probe, random_perturbation, translational_zero_modes};
use crate::planar::{profile_covering, solve_planar as run_planar, vortex_trace_initial};
use crate::radial::{decay_fit, sample_vortex, second_order_residual, solve_bogomolny, RadialProfile};

fn invalid(field: &str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Validation(vec![FieldError::new(format!("params.{field}"), message)])
}

fn load_snapshot(path: &Path) -> ExperimentResult<FieldConfiguration> {
    snapshot::load(path).map_err(|e| invalid("snapshot", format!("{}: {e}", path.display())))
}

fn write_snapshot(ctx: &mut RunContext, name: &str, cfg: &FieldConfiguration) -> ExperimentResult<()> {
    ctx.write_with(name, |w| snapshot::write_snapshot(cfg, w))
}

/// Loads the given profile or solves one reaching at least `reach`.
fn profile_for(source: &Option<ProfileSource>, reach: f64) -> ExperimentResult<RadialProfile> {
    match source {
        Some(s) => {
            let p = RadialProfile::load(&s.dir, &s.stem)
                .map_err(|e| invalid("profile", format!("{}/{}: {e}", s.dir.display(), s.stem)))?;
            if p.r_max() < reach {
                return Err(invalid("profile", format!("profile reaches r = {}, need {reach}", p.r_max())));
            }
            Ok(p)
        }
        None => Ok(solve_bogomolny(reach.max(20.0), 1e-8)?),
    }
}

fn sup_where(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| m.max(v.abs()))
}

/// Report value with its wall-clock field removed so outputs are reproducible.
fn deterministic<T: Serialize>(v: &T) -> Value {
    let mut v = serde_json::to_value(v).unwrap_or(Value::Null);
    super::strip_wall_time(&mut v);
    v
}

#[derive(Serialize)]
struct SampleReport {
    half_width: f64,
    spacing: f64,
    epsilon: f64,
    energy: f64,
    energy_over_2pi: f64,
    flux_over_2pi: f64,
}

#[derive(Serialize)]
struct RadialReport {
    alpha: f64,
    r_max: f64,
    tol: f64,
    nodes: usize,
    /// `(sup |a'/r - (1 - f^2)/2|, sup |f' - (1 - a) f / r|)`.
    first_order_residual: [f64; 2],
    /// `(sup |R_f|, sup |R_a|)` of the second-order system.
    second_order_residual: [f64; 2],
    boundary_defect: [f64; 2],
    decay_window: [f64; 2],
    decay_rates: [f64; 2],
    sample: Option<SampleReport>,
}

pub(super) fn solve_radial(p: &SolveRadialParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let prof = ctx.stage("solve", || solve_bogomolny(p.r_max, p.tol))?;
    ctx.write_with("profile.csv", |w| prof.write_csv(w))?;
    ctx.write_json("profile.json", &prof.meta)?;
    let (ra, rf) = prof.first_order_residual();
    let (sf, sa) = second_order_residual(&prof);
    let (kf, ka) = decay_fit(&prof, p.decay_window[0], p.decay_window[1])?;
    let (bf, ba) = prof.boundary_defect();
    let sample = match &p.sample {
        None => None,
        Some(s) => {
            let g = Grid2::new(s.half_width, s.spacing)?.grid();
            let cfg = sample_vortex(&prof, &g, s.center, s.epsilon)?;
            let e = energy(&cfg, &Region::All)?;
            let f = curvature(&cfg)?;
            let flux: f64 = (0..g.len()).map(|i| g.weight(i) * f.f12()[i]).sum();
            write_snapshot(ctx, "vortex.vxs", &cfg)?;
            Some(SampleReport {
                half_width: s.half_width,
                spacing: g.spacing(0),
                epsilon: s.epsilon,
                energy: e.total,
                energy_over_2pi: e.total / (2.0 * PI),
                flux_over_2pi: flux / (2.0 * PI),
            })
        }
    };
    ctx.say(format!("alpha = {:.15}", prof.shoot_slope));
    ctx.say(format!("second-order residual: sup |R_f| = {sf:.3e}, sup |R_a| = {sa:.3e}"));
    let report = RadialReport {
        alpha: prof.shoot_slope,
        r_max: prof.r_max(),
        tol: p.tol,
        nodes: prof.r.len(),
        first_order_residual: [ra, rf],
        second_order_residual: [sf, sa],
        boundary_defect: [bf, ba],
        decay_window: p.decay_window,
        decay_rates: [kf, ka],
        sample,
    };
    ctx.write_json("radial_report.json", &report)
}

#[derive(Serialize)]
struct OracleComparison {
    bulk_radius: f64,
    /// `(h / eps)^2`.
    scaled_spacing_sq: f64,
    modulus_sup_error: f64,
    curvature_sup_error: f64,
    energy_density_sup_error: f64,
}

pub(super) fn solve_planar(p: &SolvePlanarParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let eps = p.epsilon;
    let g = Grid2::new(p.half_width, p.spacing)?.grid();
    let profile = ctx.stage("profile", || profile_covering(&g, eps))?;
    let init = match &p.init {
        PlanarInit::VortexTrace => vortex_trace_initial(&g, eps)?,
        PlanarInit::PerturbedVortex { amplitude, bumps, width, margin } => {
            let base = sample_vortex(&profile, &g, [0.0, 0.0], eps)?;
            let pert = random_perturbation(&g, ctx.seed(), *bumps, *width, *margin)?;
            base.perturbed(&pert, *amplitude)
        }
        PlanarInit::Snapshot { path } => {
            let cfg = snapshot::load(path).map_err(|e| invalid("init.path", format!("{}: {e}", path.display())))?;
            if cfg.grid != g || cfg.epsilon != eps {
                return Err(invalid("init.path", "snapshot grid or epsilon differs from the requested one"));
            }
            cfg
        }
    };
    let (cfg, report) = ctx.stage("descent", || run_planar(eps, &g, init, &p.settings))?;
    write_snapshot(ctx, "planar.vxs", &cfg)?;

    let oracle = sample_vortex(&profile, &g, [0.0, 0.0], eps)?;
    let bulk = p.bulk_radius.unwrap_or(0.75 * p.half_width);
    let inside: Vec<usize> = (0..g.len()).filter(|&i| g.dist2(i, &[0.0, 0.0]) <= bulk * bulk).collect();
    let (m, mo) = (cfg.modulus(), oracle.modulus());
    let (f, fo) = (curvature(&cfg)?, curvature(&oracle)?);
    let (d, dor) = (crate::fields::energy_density(&cfg)?, crate::fields::energy_density(&oracle)?);
    let density = |d: &[Vec<f64>; 3], i: usize| d[0][i] + d[1][i] + d[2][i];
    let h = g.max_spacing();
    let comparison = OracleComparison {
        bulk_radius: bulk,
        scaled_spacing_sq: (h / eps).powi(2),
        modulus_sup_error: sup_where(inside.iter().map(|&i| m[i] - mo[i])),
        curvature_sup_error: sup_where(inside.iter().map(|&i| eps * eps * (f.f12()[i] - fo.f12()[i]))),
        energy_density_sup_error: sup_where(inside.iter().map(|&i| eps * eps * (density(&d, i) - density(&dor, i)))),
    };
    ctx.say(format!(
        "converged in {} steps; sup |u| error {:.3e} on the bulk disc",
        report.iterations, comparison.modulus_sup_error
    ));
    ctx.write_json(
        "planar_report.json",
        &serde_json::json!({ "convergence": deterministic(&report), "oracle": comparison }),
    )
}

fn chart_from(source: &ChartSource) -> ExperimentResult<FermiChart> {
    match source {
        ChartSource::Sine { amplitude, tangential_dim, half_width, spacing, tau } => {
            let axis = Axis::symmetric(*half_width, *spacing)?;
            let tg = TangentialGrid::new(*tangential_dim, axis)?;
            let amp = *amplitude;
            Ok(FermiChart::from_fn(tg, *tau, |y| [amp * y[0].sin(), 0.0])?)
        }
        ChartSource::File { csv, descriptor } => FermiChart::load(csv, descriptor)
            .map_err(|e| invalid("chart", format!("{} / {}: {e}", csv.display(), descriptor.display()))),
    }
}

fn cutoff_reach(eps: f64) -> f64 {
    6.0 * eps.ln().abs() + 4.0
}

pub(super) fn build_ansatz(p: &BuildAnsatzParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let eps = p.epsilon;
    let chart = chart_from(&p.chart)?;
    let profile = ctx.stage("profile", || profile_for(&p.profile, cutoff_reach(eps)))?;
    let cutoff = build_cutoff_vortex(eps, &profile)?;
    let hz = p.normal_spacing;
    let hw = p
        .normal_half_width
        .unwrap_or(chart.max_displacement() + 8.0 * eps * eps.ln().abs() + 2.0 * hz);
    let axis = chart.grid.axis;
    let gn = GridN::new(chart.dim(), -axis.min, axis.spacing, Grid2::new(hw, hz)?)?;
    let ans = ctx.stage("ansatz", || make_ansatz(&chart, &cutoff, &gn))?;
    ctx.write_with("chart.csv", |w| chart.write_csv(w))?;
    ctx.write_json("chart.json", &chart.descriptor())?;
    write_snapshot(ctx, "ansatz.vxs", &ans)?;
    let residual = if p.residual {
        let (_, rep) = ctx.stage("residual", || ansatz_residual(&ans, &chart, &cutoff, &gn))?;
        ctx.write_with("ansatz_residual.csv", |w| rep.write_csv(w))?;
        ctx.say(format!(
            "projection relative L2 error {:.4} (component 1), remainder ratio {:.3}",
            rep.relative_l2_error[0], rep.remainder_ratio
        ));
        Some(serde_json::json!({
            "residual_sup": rep.residual_sup,
            "relative_l2_error": rep.relative_l2_error,
            "remainder_ratio": rep.remainder_ratio,
        }))
    } else {
        None
    };
    let g = gn.grid();
    ctx.write_json(
        "ansatz_report.json",
        &serde_json::json!({
            "epsilon": eps,
            "grid": gn,
            "nodes": g.len(),
            "max_displacement": chart.max_displacement(),
            "cutoff": {
                "inner": cutoff.inner,
                "outer": cutoff.outer,
                "sup_v": cutoff.residual.sup_v,
                "sup_b": cutoff.residual.sup_b,
            },
            "residual": residual,
        }),
    )
}

#[derive(Serialize)]
struct StudyRow {
    epsilon: f64,
    sup_v: f64,
    sup_b: f64,
    sup: f64,
    sup_inner: f64,
    sup_outer: f64,
}

pub(super) fn ansatz_study(p: &AnsatzStudyParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let smallest = p.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
    let profile = ctx.stage("profile", || profile_for(&p.profile, cutoff_reach(smallest)))?;
    let rows: Vec<StudyRow> = ctx.stage("cutoff", || {
        p.epsilons
            .iter()
            .map(|&eps| {
                let c = build_cutoff_vortex(eps, &profile)?;
                let r = &c.residual;
                Ok(StudyRow {
                    epsilon: eps,
                    sup_v: r.sup_v,
                    sup_b: r.sup_b,
                    sup: r.sup(),
                    sup_inner: r.sup_inner,
                    sup_outer: r.sup_outer,
                })
            })
            .collect::<crate::Result<_>>()
    })?;
    let column = |f: fn(&StudyRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let slope_v = log_log_slope(&p.epsilons, &column(|r| r.sup_v))?;
    let slope_b = log_log_slope(&p.epsilons, &column(|r| r.sup_b))?;
    let slope = log_log_slope(&p.epsilons, &column(|r| r.sup))?;
    ctx.write_with("cutoff_study.csv", |w| {
        writeln!(w, "epsilon,sup_v,sup_b,sup,sup_inner,sup_outer")?;
        for r in &rows {
            writeln!(w, "{},{},{},{},{},{}", r.epsilon, r.sup_v, r.sup_b, r.sup, r.sup_inner, r.sup_outer)?;
        }
        Ok(())
    })?;
    ctx.say(format!("log-log slope of the cutoff residual: {slope:.3}"));
    ctx.write_json(
        "cutoff_study.json",
        &serde_json::json!({ "rows": rows, "slope_v": slope_v, "slope_b": slope_b, "slope": slope }),
    )
}

pub(super) fn excess_cmd(p: &ExcessParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let cfg = load_snapshot(&p.snapshot)?;
    let rep = excess(&cfg, &p.center, p.radius, &p.plane)?;
    ctx.say(format!("excess = {:.6e}", rep.excess));
    ctx.write_json("excess.json", &rep)
}

pub(super) fn density(p: &DensityParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let cfg = load_snapshot(&p.snapshot)?;
    let reports = p
        .radii
        .iter()
        .map(|&r| density_ratio(&cfg, &p.center, r))
        .collect::<crate::Result<Vec<_>>>()?;
    ctx.write_with("density.csv", |w| {
        writeln!(w, "radius,energy,ratio,per_volume")?;
        for d in &reports {
            writeln!(w, "{},{},{},{}", d.radius, d.energy.total, d.ratio, d.per_volume)?;
        }
        Ok(())
    })?;
    ctx.write_json("density.json", &reports)
}

pub(super) fn nodal(p: &NodalParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let cfg = load_snapshot(&p.snapshot)?;
    let n = cfg.dim() - 2;
    let points = extract_nodal_set(&cfg)?;
    ctx.write_with("nodal_points.csv", |w| write_points_csv(&points, n, w))?;
    ctx.say(format!("{} nodal points", points.len()));
    if n == 0 || p.points_only {
        return Ok(());
    }
    let axes = cfg.grid.axes();
    if axes[..n].iter().any(|a| *a != axes[0]) {
        return Err(invalid("snapshot", "tangential axes differ; the graph fit needs a cylinder grid"));
    }
    let tg = TangentialGrid::new(n, axes[0])?;
    let spread = p.spread.unwrap_or(4.0 * axes[n].spacing);
    let graph = fit_graph(&points, &tg, spread, p.alpha)?;
    ctx.write_with("nodal_graph.csv", |w| graph.write_csv(w))?;
    ctx.say(format!("Lipschitz norm {:.6}", graph.lipschitz));
    let max_h = graph.mean_curvature.iter().map(|h| h[0].hypot(h[1])).fold(0.0, f64::max);
    ctx.write_json(
        "nodal_graph.json",
        &serde_json::json!({
            "points": graph.points.len(),
            "slices": graph.y.len(),
            "fit_residual": graph.fit_residual,
            "lipschitz": graph.lipschitz,
            "second_difference_sup": graph.second_difference_sup,
            "holder_exponent": graph.holder_exponent,
            "holder_seminorm": graph.holder_seminorm,
            "mean_curvature_sup": max_h,
            "spread": spread,
        }),
    )
}

pub(super) fn levelset(p: &LevelsetParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let cfg = load_snapshot(&p.snapshot)?;
    let slices = modulus_level_tube(&cfg, p.level)?;
    ctx.write_with("levelset.csv", |w| write_level_csv(&slices, w))?;
    let summary: Vec<Value> = slices
        .iter()
        .map(|s| {
            serde_json::json!({
                "slice": s.slice,
                "y": s.y,
                "points": s.points.len(),
                "center": s.center,
                "radius": s.radius,
                "clipped": s.clipped,
            })
        })
        .collect();
    let clipped = slices.iter().filter(|s| s.clipped).count();
    ctx.say(format!("{} slices, {clipped} clipped", slices.len()));
    ctx.write_json("levelset.json", &serde_json::json!({ "level": p.level, "slices": summary }))
}

fn smooth_gauge(g: &Grid, eps: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let half: Vec<f64> = g.axes().iter().map(|a| a.max()).collect();
    (0..g.len())
        .map(|i| {
            let x = g.position(i);
            let r2: f64 = x.iter().zip(&half).map(|(v, w)| (v / w).powi(2)).sum();
            let wave: f64 = x.iter().zip(&phase).map(|(v, p)| (0.5 * v / eps + p).sin()).product();
            0.5 * wave * (-2.0 * r2).exp()
        })
        .collect()
}

#[derive(Serialize)]
struct ModeRatio {
    mode: String,
    ratio: f64,
}

pub(super) fn linops(p: &LinopsParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let g = Grid2::new(p.half_width, p.spacing)?.grid();
    let h = g.max_spacing();
    let reach = std::f64::consts::SQRT_2 * p.half_width + 1.0;
    let profile = ctx.stage("profile", || profile_for(&p.profile, reach))?;
    let base = sample_vortex(&profile, &g, [0.0, 0.0], 1.0)?;
    let sys = ctx.stage("assemble", || assemble(&base))?;
    let inner = |i: usize| g.is_inside_margin(i, 2);
    let modes = translational_zero_modes(&profile, &g)?;
    let mut ratios: Vec<ModeRatio> = modes
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let lv = sys.apply_l(v)?;
            Ok(ModeRatio { mode: format!("translation_{}", j + 1), ratio: lv.sup_norm_where(inner) / v.sup_norm() })
        })
        .collect::<crate::Result<_>>()?;
    let gauge = sys.apply_theta(&smooth_gauge(&g, 1.0, ctx.seed()))?;
    ratios.push(ModeRatio {
        mode: "gauge".into(),
        ratio: sys.apply_l(&gauge)?.sup_norm_where(inner) / gauge.sup_norm(),
    });
    let seed = ctx.seed();
    let reports = ctx.stage("decomposition", || {
        (0..p.perturbations as u64)
            .map(|k| {
                let pert = random_perturbation(&g, seed.wrapping_add(k), p.bumps, p.width, p.margin)?;
                decomposition_check(&sys, &pert, p.delta)
            })
            .collect::<crate::Result<Vec<_>>>()
    })?;
    let worst = reports.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let threshold = 5.0 * (h * h).max(p.delta * p.delta);
    let eigen = match &p.eigen {
        Some(e) => Some(ctx.stage("eigen", || eigen_probe(&sys, &modes, e.count, e.tol, e.max_iterations))?),
        None => None,
    };
    ctx.say(format!("max decomposition discrepancy {worst:.3e} (threshold {threshold:.3e})"));
    ctx.write_json(
        "linops.json",
        &serde_json::json!({
            "spacing": h,
            "unknowns": sys.unknowns(),
            "zero_modes": ratios,
            "decomposition": {
                "delta": p.delta,
                "reports": reports,
                "max_discrepancy": worst,
                "threshold": threshold,
                "passed": worst <= threshold,
            },
            "eigen": eigen,
        }),
    )
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    passed: bool,
}

/// Translational zero modes read off a configuration:
/// `v_j = (nabla^A_j u, sum_b F_jb dz^b)`.
fn covariant_shift_modes(cfg: &FieldConfiguration) -> crate::Result<Vec<Perturbation>> {
    let du = covariant_gradient(cfg)?;
    let f = curvature(cfg)?;
    let d = cfg.dim();
    Ok((0..d)
        .map(|j| {
            let omega = (0..d).map(|b| (0..cfg.len()).map(|i| f.get(j, b, i)).collect()).collect();
            Perturbation { phi: du[j].clone(), omega }
        })
        .collect())
}

pub(super) fn verify_identities(p: &VerifyParams, ctx: &mut RunContext) -> ExperimentResult<()> {
    let cfg = load_snapshot(&p.snapshot)?;
    if cfg.dim() != 2 {
        return Err(invalid("snapshot", format!("needs a 2D vortex snapshot, got dimension {}", cfg.dim())));
    }
    let g = cfg.grid.clone();
    let eps = cfg.epsilon;
    let threshold = p.constant * (g.max_spacing() / eps).powi(2);
    let inner = |i: usize| g.is_inside_margin(i, p.margin_cells);
    let nodes: Vec<usize> = (0..g.len()).filter(|&i| inner(i)).collect();
    if nodes.is_empty() {
        return Err(invalid("margin_cells", "no nodes remain inside the margin"));
    }
    let mut values: Vec<(&'static str, f64)> = vec![];

    let region = Region::Interior { margin: p.margin_cells };
    let e0 = energy(&cfg, &region)?.total;
    let moved = gauge_transform(&cfg, &smooth_gauge(&g, eps, ctx.seed()))?;
    let e1 = energy(&moved, &region)?.total;
    values.push(("gauge_invariance", (e1 - e0).abs() / e0.abs().max(f64::MIN_POSITIVE)));

    let f = curvature(&cfg)?;
    let m = cfg.modulus();
    values.push((
        "self_duality",
        sup_where(nodes.iter().map(|&i| {
            let f12 = f.f12()[i];
            eps * eps * (eps * eps * f12 * f12 - (1.0 - m[i] * m[i]).powi(2) / (4.0 * eps * eps))
        })),
    ));
    let (b1, b2) = bogomolny_residual(&cfg)?;
    values.push(("bogomolny_curvature", sup_where(nodes.iter().map(|&i| eps * b1[i]))));
    values.push(("bogomolny_holomorphic", sup_where(nodes.iter().map(|&i| eps * b2[i].norm()))));
    let dstar = coulomb_residual(&cfg);
    values.push(("coulomb", sup_where(nodes.iter().map(|&i| eps * eps * dstar[i]))));

    let sys = ctx.stage("assemble", || assemble(&cfg))?;
    let names = ["zero_mode_1", "zero_mode_2"];
    for (name, v) in names.iter().zip(covariant_shift_modes(&cfg)?) {
        let lv = sys.apply_l(&v)?;
        values.push((name, lv.sup_norm_where(inner) / v.sup_norm_where(inner).max(f64::MIN_POSITIVE)));
    }

    let checks: Vec<Check> = values
        .into_iter()
        .map(|(name, value)| Check { name, value, threshold, passed: value <= threshold })
        .collect();
    let all = checks.iter().all(|c| c.passed);
    for c in &checks {
        ctx.say(format!("{:<22} {:.3e} <= {:.3e}  {}", c.name, c.value, c.threshold, if c.passed { "pass" } else { "FAIL" }));
    }
    ctx.write_json(
        "identities.json",
        &serde_json::json!({
            "epsilon": eps,
            "spacing": g.max_spacing(),
            "checks": checks,
            "all_passed": all,
        }),
    )
}
