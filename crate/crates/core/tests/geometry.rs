use std::sync::OnceLock;

use vortexlab::fermi::{build_ansatz, build_cutoff_vortex, FermiChart, TangentialGrid};
use vortexlab::fields::{gauge_transform, FieldConfiguration};
use vortexlab::geometry::*;
use vortexlab::grid::{Axis, Grid, Grid2, GridN};
use vortexlab::radial::{sample_vortex, solve_bogomolny, vortex_at, RadialProfile};

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_bogomolny(30.0, 1e-8).unwrap())
}

/// Vortex line along the tangential axis at unit scale times `eps`.
fn pullback(grid: Grid, eps: f64) -> FieldConfiguration {
    FieldConfiguration::from_fn(grid, eps, |x| {
        let (u, a) = vortex_at(profile(), [x[1], x[2]], eps).unwrap();
        (u, vec![0.0, a[0], a[1]])
    })
    .unwrap()
}

fn cube(half: f64, h: f64) -> Grid {
    GridN::new(1, half, h, Grid2::new(half, h).unwrap()).unwrap().grid()
}

fn tilt(phi: f64) -> Vec<Vec<f64>> {
    vec![vec![phi.cos(), phi.sin(), 0.0]]
}

#[test]
fn vacuum_has_no_density_and_no_zeros() {
    let cfg = FieldConfiguration::vacuum(cube(2.0, 0.25), 0.5).unwrap();
    let d = density_ratio(&cfg, &[0.0; 3], 1.5).unwrap();
    assert_eq!(d.energy.total, 0.0);
    assert_eq!(d.ratio, 0.0);
    assert!(extract_nodal_set(&cfg).unwrap().is_empty());
}

#[test]
fn ball_must_fit_in_the_domain() {
    let cfg = FieldConfiguration::vacuum(cube(2.0, 0.25), 0.5).unwrap();
    assert!(matches!(density_ratio(&cfg, &[0.0, 1.0, 0.0], 1.5), Err(vortexlab::Error::RegionOutsideDomain)));
    assert!(excess(&cfg, &[0.0; 3], 1.0, &[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).is_err());
}

#[test]
fn pullback_excess_vanishes_on_the_line_and_grows_with_tilt() {
    let cfg = pullback(cube(8.0, 0.25), 1.0);
    let e0 = excess(&cfg, &[0.0; 3], 6.0, &tilt(0.0)).unwrap();
    assert_eq!(e0.excess, 0.0);
    let mut last = 0.0;
    for k in 1..=4 {
        let e = excess(&cfg, &[0.0; 3], 6.0, &tilt(k as f64 * std::f64::consts::FRAC_PI_4 / 4.0)).unwrap();
        assert!(e.excess > last, "{} <= {last}", e.excess);
        last = e.excess;
    }
    // A frame that is only approximately normalized is accepted.
    let e = excess(&cfg, &[0.0; 3], 6.0, &[vec![2.0, 0.0, 0.0]]).unwrap();
    assert_eq!(e.excess, 0.0);
}

#[test]
fn excess_is_rotation_equivariant() {
    // Swapping the tangential axis with the first normal axis is a lattice
    // symmetry; the plane is rotated with the configuration.
    let g = cube(6.0, 0.3);
    let cfg = pullback(g.clone(), 1.0);
    let rotated = FieldConfiguration::from_fn(g, 1.0, |x| {
        let (u, a) = vortex_at(profile(), [x[0], x[2]], 1.0).unwrap();
        (u, vec![a[0], 0.0, a[1]])
    })
    .unwrap();
    let phi = 0.4;
    let e = excess(&cfg, &[0.0; 3], 5.0, &tilt(phi)).unwrap();
    let er = excess(&rotated, &[0.0; 3], 5.0, &[vec![phi.sin(), phi.cos(), 0.0]]).unwrap();
    assert!((e.excess - er.excess).abs() < 1e-12 * e.excess.max(1.0), "{} vs {}", e.excess, er.excess);
}

#[test]
fn density_obeys_the_scaling_identity() {
    let unit = pullback(cube(10.0, 0.5), 1.0);
    let eps = 0.05;
    let small = pullback(cube(10.0 * eps, 0.5 * eps), eps);
    let a = density_ratio(&unit, &[0.0; 3], 10.0).unwrap();
    let b = density_ratio(&small, &[0.0; 3], 10.0 * eps).unwrap();
    assert!((a.per_volume - b.per_volume).abs() < 1e-6 * a.per_volume, "{} vs {}", a.per_volume, b.per_volume);
    assert!((a.ratio * std::f64::consts::PI * 2.0 * 2.0 - a.per_volume * 2.0).abs() < 1e-12 * a.per_volume);
}

#[test]
fn diagnostics_are_gauge_invariant() {
    let g = cube(4.0, 0.1);
    let cfg = pullback(g.clone(), 1.0);
    let gamma: Vec<f64> = (0..g.len())
        .map(|i| {
            let x = g.position(i);
            0.4 * (0.5 * x[0]).sin() * (0.3 * x[1]).cos() + 0.2 * x[2] * (-0.1 * x[1] * x[1]).exp()
        })
        .collect();
    let moved = gauge_transform(&cfg, &gamma).unwrap();
    let a = excess(&cfg, &[0.0; 3], 3.0, &tilt(0.3)).unwrap();
    let b = excess(&moved, &[0.0; 3], 3.0, &tilt(0.3)).unwrap();
    assert!((a.excess - b.excess).abs() < 0.02 * a.excess, "{} vs {}", a.excess, b.excess);
    let (da, db) = (density_ratio(&cfg, &[0.0; 3], 3.0).unwrap(), density_ratio(&moved, &[0.0; 3], 3.0).unwrap());
    assert!((da.ratio - db.ratio).abs() < 0.01 * da.ratio);
    let (pa, pb) = (extract_nodal_set(&cfg).unwrap(), extract_nodal_set(&moved).unwrap());
    assert_eq!(pa.len(), pb.len());
    for (p, q) in pa.iter().zip(&pb) {
        assert!((p.z[0] - q.z[0]).hypot(p.z[1] - q.z[1]) < 0.01);
    }
    let (la, lb) = (modulus_level_tube(&cfg, 0.5).unwrap(), modulus_level_tube(&moved, 0.5).unwrap());
    for (p, q) in la.iter().zip(&lb) {
        assert_eq!(p.points.len(), q.points.len());
        for (x, y) in p.points.iter().zip(&q.points) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn single_vortex_zero_and_level_circle() {
    let p = [0.37, -0.21];
    let mut errs = vec![];
    for h in [0.1, 0.05] {
        let g = Grid2::new(4.0, h).unwrap().grid();
        let cfg = sample_vortex(profile(), &g, p, 1.0).unwrap();
        let pts = extract_nodal_set(&cfg).unwrap();
        assert_eq!(pts.len(), 1);
        errs.push((pts[0].z[0] - p[0]).hypot(pts[0].z[1] - p[1]));
        let lv = modulus_level_tube(&cfg, 0.5).unwrap();
        assert_eq!(lv.len(), 1);
        let c = lv[0].center.unwrap();
        let r = lv[0].radius.unwrap();
        assert!((r - profile().f_inverse(0.5).unwrap()).abs() < 2.0 * h * h, "radius {r}");
        assert!((c[0] - pts[0].z[0]).hypot(c[1] - pts[0].z[1]) < h * h);
        assert!(!lv[0].clipped);
    }
    assert!(errs[1] < errs[0] / 3.0 || errs[1] < 1e-6, "{errs:?}");
}

#[test]
fn level_near_one_is_flagged() {
    let g = Grid2::new(2.0, 0.1).unwrap().grid();
    let cfg = sample_vortex(profile(), &g, [0.0, 0.0], 1.0).unwrap();
    let lv = modulus_level_tube(&cfg, 0.999).unwrap();
    assert!(lv[0].clipped);
    assert!(modulus_level_tube(&cfg, 1.0).is_err());
}

fn sine_ansatz(eps: f64, delta: f64, hz: f64) -> (GridN, FieldConfiguration) {
    let c = build_cutoff_vortex(eps, profile()).unwrap();
    let hw = delta + 8.0 * eps * eps.ln().abs() + 0.05;
    let half = std::f64::consts::FRAC_PI_2;
    let gn = GridN::new(1, half, half / 10.0, Grid2::new(hw, hz).unwrap()).unwrap();
    let chart = FermiChart::from_fn(TangentialGrid::of(&gn), 1.0, |y| [delta * y[0].sin(), 0.0]).unwrap();
    let ans = build_ansatz(&chart, &c, &gn).unwrap();
    (gn, ans)
}

#[test]
fn nodal_graph_of_a_sine_ansatz() {
    let (eps, delta, hz) = (0.1, 0.1, 0.02);
    let (gn, ans) = sine_ansatz(eps, delta, hz);
    let pts = extract_nodal_set(&ans).unwrap();
    let tg = TangentialGrid::of(&gn);
    let graph = fit_graph(&pts, &tg, 4.0 * hz, 0.5).unwrap();
    for k in 0..tg.len() {
        let y = graph.y[k][0];
        assert!((graph.f1[k] - delta * y.sin()).abs() < eps * eps + hz * hz, "{k}");
        assert!(graph.f2[k].abs() < 1e-12);
        if tg.is_interior(k) {
            assert!((graph.mean_curvature[k][0] + delta * y.sin()).abs() < 0.1 * delta);
        }
    }
    assert!((graph.lipschitz / delta - 1.0).abs() < 0.1);
    let mut buf = Vec::new();
    graph.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), tg.len() + 1);
}

#[test]
fn flat_nodal_graph_has_vanishing_norms() {
    let (gn, ans) = sine_ansatz(0.1, 0.0, 0.02);
    let graph = fit_graph(&extract_nodal_set(&ans).unwrap(), &TangentialGrid::of(&gn), 0.08, 0.5).unwrap();
    assert!(graph.f1.iter().chain(&graph.f2).all(|v| v.abs() < 1e-12));
    assert!(graph.lipschitz < 1e-10 && graph.second_difference_sup < 1e-8 && graph.holder_seminorm < 1e-8);
}

#[test]
fn ansatz_excess_is_quadratic_in_the_amplitude() {
    let mut e = vec![];
    for delta in [0.1, 0.05] {
        let (_, ans) = sine_ansatz(0.1, delta, 0.02);
        e.push(excess(&ans, &[0.0; 3], 1.0, &tilt(0.0)).unwrap().excess);
    }
    let ratio = e[0] / e[1];
    assert!((ratio - 4.0).abs() < 0.2, "{e:?}");
}

#[test]
fn multi_sheeted_data_is_not_graphical() {
    let tg = TangentialGrid::new(1, Axis::symmetric(1.0, 0.5).unwrap()).unwrap();
    let mut pts = vec![];
    for k in 0..tg.len() {
        pts.push(NodalPoint { slice: k, y: tg.position(k), z: [0.0, 0.0] });
    }
    pts.push(NodalPoint { slice: 2, y: tg.position(2), z: [1.0, 0.0] });
    assert!(matches!(fit_graph(&pts, &tg, 0.1, 0.5), Err(vortexlab::Error::NotGraphical(_))));
    pts.retain(|p| p.slice != 1);
    assert!(matches!(fit_graph(&pts, &tg, 10.0, 0.5), Err(vortexlab::Error::InsufficientCoverage(_))));
}
