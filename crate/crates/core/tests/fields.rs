use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use vortexlab::fields::*;
use vortexlab::grid::{Grid, Grid2, Region};
use vortexlab::radial::{sample_vortex, solve_bogomolny, RadialProfile};

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_bogomolny(20.0, 1e-8).unwrap())
}

fn vortex(half: f64, h: f64) -> (Grid, FieldConfiguration) {
    let g = Grid2::new(half, h).unwrap().grid();
    let cfg = sample_vortex(profile(), &g, [0.0, 0.0], 1.0).unwrap();
    (g, cfg)
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn smooth_gamma(g: &Grid) -> Vec<f64> {
    (0..g.len())
        .map(|i| {
            let x = g.position(i);
            0.8 * (0.6 * x[0]).sin() * (0.4 * x[1]).cos()
        })
        .collect()
}

#[test]
fn uniform_magnetic_field_has_exact_curvature() {
    let b = 0.7;
    let g = Grid2::new(3.0, 0.25).unwrap().grid();
    let cfg = FieldConfiguration::from_fn(g, 1.0, |x| (C64::new(1.0, 0.0), vec![-0.5 * b * x[1], 0.5 * b * x[0]])).unwrap();
    let f = curvature(&cfg).unwrap();
    assert!(f.f12().iter().all(|v| (v - b).abs() < 1e-12));
    assert!(coulomb_residual(&cfg).iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn plane_wave_is_covariantly_constant_to_second_order() {
    // u = e^{i k.x}, A = k: the continuum covariant gradient vanishes and the
    // centred difference leaves k (sin(k h) / (k h) - 1) u.
    let k = [0.9, -0.5];
    let mut errs = vec![];
    for h in [0.2, 0.1] {
        let g = Grid2::new(3.0, h).unwrap().grid();
        let cfg = FieldConfiguration::from_fn(g.clone(), 1.0, |x| (C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]), k.to_vec())).unwrap();
        let du = covariant_gradient(&cfg).unwrap();
        let inner: Vec<usize> = (0..g.len()).filter(|&i| g.is_inside_margin(i, 1)).collect();
        let err = inner.iter().map(|&i| du[0][i].norm().max(du[1][i].norm())).fold(0.0, f64::max);
        let predicted = (k[0] * ((k[0] * h).sin() / (k[0] * h) - 1.0)).abs();
        assert!((err - predicted).abs() < 1e-10, "{err} vs {predicted}");
        errs.push(err);
    }
    assert!(order(errs[0], errs[1]) > 1.95);
}

#[test]
fn sampled_vortex_energy_is_two_pi() {
    let (_, cfg) = vortex(8.0, 0.1);
    let e = energy(&cfg, &Region::All).unwrap();
    assert!((e.total / (2.0 * PI) - 1.0).abs() < 5e-3, "{e:?}");
    assert!((e.kinetic + e.curvature + e.potential - e.total).abs() < 1e-12);
    let l = lattice_energy(&cfg);
    assert!((l / e.total - 1.0).abs() < 5e-3, "{l} vs {}", e.total);
}

#[test]
fn energy_is_gauge_invariant_to_second_order() {
    let mut diffs = vec![];
    for h in [0.2, 0.1] {
        let (g, cfg) = vortex(6.0, h);
        let moved = gauge_transform(&cfg, &smooth_gamma(&g)).unwrap();
        let region = Region::Interior { margin: 2 };
        let e0 = energy(&cfg, &region).unwrap().total;
        let e1 = energy(&moved, &region).unwrap().total;
        diffs.push((e1 - e0).abs() / e0);
    }
    assert!(diffs[1] < 1e-2 && order(diffs[0], diffs[1]) > 1.8, "{diffs:?}");
}

#[test]
fn constant_gauge_leaves_everything_but_the_phase() {
    let (g, cfg) = vortex(3.0, 0.25);
    let moved = gauge_transform(&cfg, &vec![1.3; g.len()]).unwrap();
    assert_eq!(moved.a, cfg.a);
    assert!(moved.modulus().iter().zip(cfg.modulus()).all(|(a, b)| (a - b).abs() < 1e-15));
    let e0 = energy_density(&cfg).unwrap();
    let e1 = energy_density(&moved).unwrap();
    for c in 0..3 {
        assert!(e0[c].iter().zip(&e1[c]).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn vortex_solves_the_field_equations_to_second_order() {
    let mut res = vec![];
    for h in [0.2, 0.1] {
        let (g, cfg) = vortex(6.0, h);
        let s = euler_lagrange_residual(&cfg).unwrap();
        res.push(s.sup_norm_where(|i| g.is_inside_margin(i, 1)));
    }
    assert!(order(res[0], res[1]) > 1.8, "{res:?}");
}

#[test]
fn vortex_is_holomorphic_to_second_order() {
    let mut res = vec![];
    for h in [0.2, 0.1] {
        let (g, cfg) = vortex(6.0, h);
        let (_, dbar) = bogomolny_residual(&cfg).unwrap();
        res.push((0..g.len()).filter(|&i| g.is_inside_margin(i, 1)).map(|i| dbar[i].norm()).fold(0.0, f64::max));
    }
    assert!(res[1] < 5.0 * 0.1 * 0.1 && order(res[0], res[1]) > 1.8, "{res:?}");
}

#[test]
fn perturbation_arithmetic() {
    let (g, cfg) = vortex(2.0, 0.25);
    let other = sample_vortex(profile(), &g, [0.2, 0.1], 1.0).unwrap();
    let p = other.difference(&cfg).unwrap();
    let back = cfg.perturbed(&p, 1.0);
    assert!(back.difference(&other).unwrap().sup_norm() < 1e-15);
    let half = cfg.perturbed(&p, 0.5).difference(&cfg).unwrap();
    assert!(half.sub(&p.scaled(0.5)).sup_norm() < 1e-15);
    let w: Vec<f64> = (0..g.len()).map(|_| g.cell_volume()).collect();
    let q = p.scaled(-2.0);
    assert!((p.dot_eps(&q, 0.5, &w) + 2.0 * p.norm_eps(0.5, &w).powi(2)).abs() < 1e-12);
    let mut r = p.clone();
    r.axpy(1.0, &q);
    assert!(r.sub(&p.scaled(-1.0)).sup_norm() < 1e-15);
}

#[test]
fn snapshot_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = vortex(3.0, 0.25);
    let path = dir.path().join("v.vxs");
    snapshot::save(&cfg, &path).unwrap();
    assert_eq!(snapshot::load(&path).unwrap(), cfg);
    let mut csv = Vec::new();
    snapshot::write_csv(&cfg, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x0,x1,re_u,im_u,A0,A1");
    assert_eq!(lines.len(), cfg.len() + 1);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 8);
    assert!(snapshot::read_snapshot(&bytes[..]).is_err());
}

#[test]
fn malformed_configurations_are_rejected() {
    let g = Grid2::new(1.0, 0.5).unwrap().grid();
    let n = g.len();
    let mut u = vec![C64::new(1.0, 0.0); n];
    assert!(FieldConfiguration::new(g.clone(), 1.0, u.clone(), vec![vec![0.0; n]]).is_err());
    u[2] = C64::new(f64::NAN, 0.0);
    assert!(matches!(
        FieldConfiguration::new(g.clone(), 1.0, u, vec![vec![0.0; n]; 2]),
        Err(vortexlab::Error::NonFinite { field: "u", node: 2 })
    ));
    assert!(gauge_transform(&FieldConfiguration::vacuum(g, 1.0).unwrap(), &[0.0]).is_err());
}
