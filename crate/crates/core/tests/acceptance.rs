//! Acceptance suite: one test per acceptance check, each printing its
//! measured values against the pinned bound.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use vortexlab::fermi::{ansatz_residual, build_ansatz, build_cutoff_vortex, log_log_slope, FermiChart, TangentialGrid};
use vortexlab::fields::{curvature, energy, energy_density, FieldConfiguration};
use vortexlab::geometry::{density_ratio, excess, extract_nodal_set, fit_graph};
use vortexlab::grid::{Grid, Grid2, GridN, Region};
use vortexlab::linearized::{
    assemble, decomposition_check, eigen_probe, random_perturbation, translational_zero_modes,
};
use vortexlab::planar::{solve_planar, SolveSettings};
use vortexlab::radial::{decay_fit, sample_vortex, solve_bogomolny, vortex_at, RadialProfile};

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_bogomolny(40.0, 1e-8).unwrap())
}

fn report(name: &str, passed: bool, detail: String) {
    println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn vortex(half: f64, h: f64) -> (Grid, FieldConfiguration) {
    let g = Grid2::new(half, h).unwrap().grid();
    let cfg = sample_vortex(profile(), &g, [0.0, 0.0], 1.0).unwrap();
    (g, cfg)
}

#[test]
fn vortex_energy_is_quantized() {
    let (_, cfg) = vortex(20.0, 0.1);
    let e = energy(&cfg, &Region::ball(&[0.0, 0.0], 20.0)).unwrap().total;
    let rel = (e / (2.0 * PI) - 1.0).abs();
    let ok = rel <= 5e-3;
    report("energy on B_20 equals 2 pi", ok, format!("E = {e:.6}, relative error {rel:.2e} <= 5e-3"));
    assert!(ok);
}

#[test]
fn self_dual_identity_holds_to_second_order() {
    let mut errs = vec![];
    let mut ok = true;
    for h in [0.2, 0.1] {
        let (g, cfg) = vortex(8.0, h);
        let f = curvature(&cfg).unwrap();
        let m = cfg.modulus();
        let err = (0..g.len())
            .filter(|&i| g.is_interior(i))
            .map(|i| (f.f12()[i].powi(2) - (1.0 - m[i] * m[i]).powi(2) / 4.0).abs())
            .fold(0.0, f64::max);
        ok &= err <= 5.0 * h * h;
        errs.push(err);
    }
    let order = (errs[0] / errs[1]).log2();
    ok &= order >= 1.8;
    report("self-duality identity", ok, format!("sup errors {} at h = 0.2, 0.1 (bounds 5h^2), order {order:.2} >= 1.8", sci(&errs)));
    assert!(ok);
}

#[test]
fn profile_decays_exponentially() {
    let p = solve_bogomolny(20.0, 1e-8).unwrap();
    let (kf, ka) = decay_fit(&p, 8.0, 16.0).unwrap();
    let (ra, rf) = p.first_order_residual();
    let ok = kf >= 0.8 && ka >= 0.8 && ra <= 1e-8 && rf <= 1e-8;
    report(
        "exponential decay",
        ok,
        format!("rates 1-f {kf:.3}, 1-a {ka:.3} (>= 0.8); first-order residuals {ra:.2e}, {rf:.2e} (<= 1e-8)"),
    );
    assert!(ok);
}

#[test]
fn zero_modes_are_annihilated() {
    let c = 1.0;
    let mut trans = vec![];
    let mut gauge = vec![];
    let hs = [0.2, 0.1];
    for h in hs {
        let (g, base) = vortex(6.0, h);
        let sys = assemble(&base).unwrap();
        let inner = |i: usize| g.is_inside_margin(i, 2);
        let modes = translational_zero_modes(profile(), &g).unwrap();
        trans.push(
            modes
                .iter()
                .map(|v| sys.apply_l(v).unwrap().sup_norm_where(inner) / v.sup_norm())
                .fold(0.0, f64::max),
        );
        let gamma: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.position(i);
                (0.5 * x[0]).sin() * (-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp()
            })
            .collect();
        let p = sys.apply_theta(&gamma).unwrap();
        gauge.push(sys.apply_l(&p).unwrap().sup_norm_where(inner) / p.sup_norm());
    }
    let order = |v: &[f64]| (v[0] / v[1]).log2();
    let within = |v: &[f64]| v.iter().zip(hs).all(|(r, h)| *r <= c * h * h);
    let t_ok = within(&trans) && order(&trans) >= 1.8;
    let g_ok = within(&gauge) && order(&gauge) >= 1.8;
    report(
        "translational zero modes",
        t_ok,
        format!("|L v|/|v| = {} at h = 0.2, 0.1 (bound h^2), order {:.2}", sci(&trans), order(&trans)),
    );
    report(
        "gauge zero modes",
        g_ok,
        format!("|L Theta g|/|Theta g| = {} at h = 0.2, 0.1 (bound h^2), order {:.2}", sci(&gauge), order(&gauge)),
    );
    assert!(t_ok && g_ok);
}

#[test]
fn decomposition_matches_for_random_perturbations() {
    let h = 0.2;
    let delta = 1e-4;
    let (g, base) = vortex(8.0, h);
    let sys = assemble(&base).unwrap();
    let bound = 5.0 * (h * h).max(delta * delta);
    let worst = (0..20)
        .map(|seed| {
            let p = random_perturbation(&g, seed, 6, 1.0, 1.5).unwrap();
            decomposition_check(&sys, &p, delta).unwrap().discrepancy
        })
        .fold(0.0, f64::max);
    let ok = worst <= bound;
    report("decomposition", ok, format!("worst relative discrepancy over 20 perturbations {worst:.3e} <= {bound:.3e}"));
    assert!(ok);
}

#[test]
fn cutoff_residual_rate() {
    let eps = [0.1, 0.05, 0.025];
    let sup: Vec<f64> = eps.iter().map(|&e| build_cutoff_vortex(e, profile()).unwrap().residual.sup()).collect();
    let slope = log_log_slope(&eps, &sup).unwrap();
    let ok = slope >= 2.7;
    report("cutoff residual rate", ok, format!("sup norms {}, slope {slope:.3} >= 2.7", sci(&sup)));
    assert!(ok);
}

fn sine_cylinder(eps: f64, delta: f64, hz: f64, ny: usize) -> (GridN, FermiChart) {
    let hw = delta + 8.0 * eps * eps.ln().abs() + 0.05;
    let gn = GridN::new(1, FRAC_PI_2, PI / (ny - 1) as f64, Grid2::new(hw, hz).unwrap()).unwrap();
    let chart = FermiChart::from_fn(TangentialGrid::of(&gn), 1.0, |y| [delta * y[0].sin(), 0.0]).unwrap();
    (gn, chart)
}

#[test]
fn ansatz_projection_follows_the_jacobi_term() {
    let eps = 0.05;
    let c = build_cutoff_vortex(eps, profile()).unwrap();
    let mut errs = vec![];
    for delta in [0.1, 0.05] {
        let (gn, chart) = sine_cylinder(eps, delta, 0.01, 21);
        let ans = build_ansatz(&chart, &c, &gn).unwrap();
        let (_, rep) = ansatz_residual(&ans, &chart, &c, &gn).unwrap();
        errs.push(rep.relative_l2_error[0]);
    }
    let ok = errs[0] <= 0.2 && errs[1] < errs[0];
    report(
        "ansatz projection law",
        ok,
        format!("relative L2 error {:.4} at delta = 0.1 (<= 0.2), {:.4} at delta = 0.05", errs[0], errs[1]),
    );
    assert!(ok);
}

#[test]
fn excess_and_density_of_the_pullback() {
    let gn = GridN::new(1, 20.0, 0.25, Grid2::new(20.0, 0.25).unwrap()).unwrap();
    let cfg = FieldConfiguration::from_fn(gn.grid(), 1.0, |x| {
        let (u, a) = vortex_at(profile(), [x[1], x[2]], 1.0).unwrap();
        (u, vec![0.0, a[0], a[1]])
    })
    .unwrap();
    let e = excess(&cfg, &[0.0; 3], 20.0, &[vec![1.0, 0.0, 0.0]]).unwrap().excess;
    let d = density_ratio(&cfg, &[0.0; 3], 20.0).unwrap();
    let ok = e.abs() <= 1e-12 && (d.per_volume - 2.0 * PI).abs() <= 0.1;
    report(
        "excess and density",
        ok,
        format!("E_1 = {e:.2e}; energy / |B_20| = {:.4} within 0.1 of 2 pi", d.per_volume),
    );
    assert!(ok);
}

#[test]
fn nodal_graph_recovers_the_sine() {
    let (eps, delta, hz) = (0.05, 0.1, 0.01);
    let c = build_cutoff_vortex(eps, profile()).unwrap();
    let (gn, chart) = sine_cylinder(eps, delta, hz, 21);
    let ans = build_ansatz(&chart, &c, &gn).unwrap();
    let tg = TangentialGrid::of(&gn);
    let graph = fit_graph(&extract_nodal_set(&ans).unwrap(), &tg, 4.0 * hz, 0.5).unwrap();
    let mut sup_err: f64 = 0.0;
    let mut h_err: f64 = 0.0;
    let mut h_scale: f64 = 0.0;
    for k in 0..tg.len() {
        let y = graph.y[k][0];
        sup_err = sup_err.max((graph.f1[k] - delta * y.sin()).abs().max(graph.f2[k].abs()));
        if tg.is_interior(k) {
            let lap = -delta * y.sin();
            h_err = h_err.max((graph.mean_curvature[k][0] - lap).abs());
            h_scale = h_scale.max(lap.abs());
        }
    }
    let lip = graph.lipschitz / delta - 1.0;
    let h_rel = h_err / h_scale;
    let bound = eps * eps + hz * hz;
    let ok = sup_err <= bound && lip.abs() <= 0.1 && h_rel <= 0.1;
    report(
        "nodal regularity pipeline",
        ok,
        format!(
            "sup error {sup_err:.2e} <= {bound:.2e}; Lipschitz {:.4} vs delta (rel {lip:.3}); mean curvature rel error {h_rel:.3}",
            graph.lipschitz
        ),
    );
    assert!(ok);
}

#[test]
fn planar_solver_matches_the_radial_oracle() {
    let g = Grid2::with_nodes(12.0, 256).unwrap().grid();
    let h = g.spacing(0);
    let oracle = sample_vortex(profile(), &g, [0.0, 0.0], 1.0).unwrap();
    let init = oracle.perturbed(&random_perturbation(&g, 1, 6, 1.0, 1.5).unwrap(), 0.1);
    let settings = SolveSettings { tolerance: 1e-3, max_iterations: 100_000, ..Default::default() };
    let (cfg, rep) = solve_planar(1.0, &g, init, &settings).unwrap();
    let bulk: Vec<usize> = (0..g.len()).filter(|&i| g.dist2(i, &[0.0, 0.0]) <= 81.0).collect();
    let (m, mo) = (cfg.modulus(), oracle.modulus());
    let (f, fo) = (curvature(&cfg).unwrap(), curvature(&oracle).unwrap());
    let (d, dor) = (energy_density(&cfg).unwrap(), energy_density(&oracle).unwrap());
    let sup = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, |a: f64, b: f64| a.max(b.abs()));
    let em = sup(&mut bulk.iter().map(|&i| m[i] - mo[i]));
    let ef = sup(&mut bulk.iter().map(|&i| f.f12()[i] - fo.f12()[i]));
    let ed = sup(&mut bulk.iter().map(|&i| (d[0][i] + d[1][i] + d[2][i]) - (dor[0][i] + dor[1][i] + dor[2][i])));
    let bound = 10.0 * h * h;
    let ok = rep.converged && em <= bound && ef <= bound && ed <= bound;
    report(
        "planar solver equivalence",
        ok,
        format!(
            "{} steps; bulk sup errors |u| {em:.2e}, F {ef:.2e}, energy density {ed:.2e} <= {bound:.3e}",
            rep.iterations
        ),
    );
    assert!(ok);
}

#[test]
fn linearized_operator_is_stable() {
    let mut ok = true;
    let mut lines = vec![];
    for h in [0.2, 0.1] {
        let (g, base) = vortex(8.0, h);
        let sys = assemble(&base).unwrap();
        let modes = translational_zero_modes(profile(), &g).unwrap();
        let rep = eigen_probe(&sys, &modes, 5, 1e-6, 200).unwrap();
        let lowest = rep.ritz.first().map_or(f64::NAN, |p| p.value);
        ok &= rep.ritz.len() == 5 && rep.ritz.iter().all(|p| p.value >= -h * h);
        let values: Vec<f64> = rep.ritz.iter().map(|p| p.value).collect();
        lines.push(format!("h = {h}: {values:.4?} (lowest {lowest:.4} >= {:.2})", -h * h));
    }
    report("stability proxy", ok, lines.join("; "));
    assert!(ok);
}
