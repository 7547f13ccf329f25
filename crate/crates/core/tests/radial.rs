use std::f64::consts::PI;
use std::sync::OnceLock;

use vortexlab::grid::Grid2;
use vortexlab::radial::*;

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_bogomolny(20.0, 1e-8).unwrap())
}

#[test]
fn profile_is_monotone_between_its_limits() {
    let p = profile();
    assert_eq!(p.r[0], 0.0);
    assert_eq!((p.f[0], p.a[0]), (0.0, 0.0));
    assert!(p.f.windows(2).all(|w| w[0] < w[1]));
    assert!(p.a.windows(2).all(|w| w[0] < w[1]));
    let (df, da) = p.boundary_defect();
    assert!(df.abs() < 1e-7 && da.abs() < 1e-7, "{df} {da}");
}

#[test]
fn small_radius_behaviour_matches_the_series() {
    // f = alpha r + O(r^3), a = r^2 / 4 + O(r^4).
    let p = profile();
    let alpha = p.shoot_slope;
    for r in [0.02, 0.05] {
        let s = p.eval(r).unwrap();
        assert!((s.f / r - alpha).abs() < 0.1 * r, "{r}: {}", s.f / r);
        assert!((s.a / (r * r) - 0.25).abs() < 0.1 * r, "{r}: {}", s.a / (r * r));
    }
}

#[test]
fn energy_by_radial_quadrature_is_two_pi() {
    // 2 pi int (f'^2 + f^2 (1-a)^2 / r^2 + (a'/r)^2 + (1-f^2)^2 / 4) r dr,
    // with the r -> 0 limits alpha^2 and 1/4 for the two singular-looking terms.
    let p = profile();
    let alpha = p.shoot_slope;
    let density: Vec<f64> = (0..p.r.len())
        .map(|k| {
            let (r, f, a) = (p.r[k], p.f[k], p.a[k]);
            let (kin, mag) = if r == 0.0 {
                (alpha * alpha, 0.25)
            } else {
                (f * f * (1.0 - a) * (1.0 - a) / (r * r), (p.a_prime[k] / r).powi(2))
            };
            (p.f_prime[k].powi(2) + kin + mag + (1.0 - f * f).powi(2) / 4.0) * r
        })
        .collect();
    let dr = p.spacing();
    let n = density.len();
    let integral = dr * (density[1..n - 1].iter().sum::<f64>() + 0.5 * (density[0] + density[n - 1]));
    assert!((integral - 1.0).abs() < 1e-4, "{integral}");
}

#[test]
fn tail_follows_the_bessel_asymptotics() {
    // K0(x) ~ sqrt(pi / 2x) e^{-x} (1 - 1/(8x) + 9/(128 x^2)).
    let k0 = |x: f64| (PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 - 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x));
    let p = profile();
    let ratio = |r: f64| (1.0 - p.eval(r).unwrap().f) / k0(r);
    let (c10, c14) = (ratio(10.0), ratio(14.0));
    assert!(c10 > 0.0 && (c10 / c14 - 1.0).abs() < 1e-3, "{c10} {c14}");
}

#[test]
fn first_order_system_holds() {
    let (ra, rf) = profile().first_order_residual();
    assert!(ra <= 1e-8 && rf <= 1e-8, "{ra} {rf}");
    let (ra, rf) = second_order_residual(profile());
    assert!(ra < 1e-4 && rf < 1e-4, "{ra} {rf}");
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = profile();
    p.save(dir.path(), "vortex").unwrap();
    let q = RadialProfile::load(dir.path(), "vortex").unwrap();
    assert_eq!(q.r, p.r);
    assert_eq!(q.f, p.f);
    assert_eq!(q.a, p.a);
    assert_eq!(q.meta, p.meta);
    assert_eq!(q.eval(3.3).unwrap(), p.eval(3.3).unwrap());
    assert!(RadialProfile::load(dir.path(), "missing").is_err());
}

#[test]
fn sampled_vortex_winds_once() {
    let g = Grid2::new(5.0, 0.25).unwrap().grid();
    let cfg = sample_vortex(profile(), &g, [0.3, -0.2], 1.0).unwrap();
    // Walk the boundary of the grid counterclockwise and sum phase jumps.
    let n = g.axis(0).count;
    let mut ring = vec![];
    ring.extend((0..n).map(|i| [i, 0]));
    ring.extend((1..n).map(|j| [n - 1, j]));
    ring.extend((0..n - 1).rev().map(|i| [i, n - 1]));
    ring.extend((1..n - 1).rev().map(|j| [0, j]));
    ring.push([0, 0]);
    let winding: f64 = ring
        .windows(2)
        .map(|w| (cfg.u[g.index(&w[1])] / cfg.u[g.index(&w[0])]).arg())
        .sum();
    assert!((winding / (2.0 * PI) - 1.0).abs() < 1e-12, "{winding}");
}

#[test]
fn sampling_is_radial_and_azimuthal() {
    let g = Grid2::new(4.0, 0.2).unwrap().grid();
    let c = [0.5, 0.25];
    let cfg = sample_vortex(profile(), &g, c, 1.0).unwrap();
    for i in 0..g.len() {
        let x = g.position(i);
        let z = [x[0] - c[0], x[1] - c[1]];
        let rho = z[0].hypot(z[1]);
        if rho == 0.0 {
            continue;
        }
        let s = profile().eval(rho).unwrap();
        assert!((cfg.u[i].norm() - s.f).abs() < 1e-12);
        assert!((cfg.a[0][i] * z[0] + cfg.a[1][i] * z[1]).abs() < 1e-12);
        assert!((cfg.a[0][i].hypot(cfg.a[1][i]) - s.a / rho).abs() < 1e-12);
    }
}

#[test]
fn epsilon_rescales_the_vortex() {
    // u_eps(x) = u_1(x / eps), A_eps(x) = A_1(x / eps) / eps.
    let eps = 0.4;
    for z in [[0.3, 0.1], [-1.2, 0.7], [2.0, -2.5]] {
        let (u, a) = vortex_at(profile(), z, eps).unwrap();
        let (u1, a1) = vortex_at(profile(), [z[0] / eps, z[1] / eps], 1.0).unwrap();
        assert!((u - u1).norm() < 1e-12);
        assert!((a[0] - a1[0] / eps).abs() < 1e-12 && (a[1] - a1[1] / eps).abs() < 1e-12);
    }
}

#[test]
fn sampling_beyond_the_profile_is_rejected() {
    let g = Grid2::new(16.0, 0.5).unwrap().grid();
    assert!(matches!(sample_vortex(profile(), &g, [0.0, 0.0], 1.0), Err(vortexlab::Error::Coverage { .. })));
    let g = Grid2::new(2.0, 0.5).unwrap().grid();
    assert!(sample_vortex(profile(), &g, [0.0, 0.0], 0.0).is_err());
}

#[test]
fn decay_rate_fit_on_the_profile() {
    let (kf, ka) = decay_fit(profile(), 8.0, 16.0).unwrap();
    assert!(kf > 0.8 && ka > 0.8, "{kf} {ka}");
    assert!(decay_fit(profile(), 16.0, 8.0).is_err());
}
