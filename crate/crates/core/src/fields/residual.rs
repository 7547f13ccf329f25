//! Discrete action and the Euler–Lagrange residual it generates.
//!
//! The kinetic term is a sum over lattice links of
//! `|u(x+e_a) - e^{i theta} u(x)|^2 / h_a^2` with link angle
//! `theta = h_a (A_a(x) + A_a(x+e_a)) / 2`; the curvature term is a sum over
//! plaquettes of the cell-centred curl. The residual is the exact gradient
//! of this action, rescaled so that it approximates
//! `S_eps(u, A) = (-eps^2 Lap^A u - (1-|u|^2) u / 2, eps^2 d*dA - <nabla^A u, i u>)`
//! to second order. Using an exact gradient means discrete critical points
//! are exactly the zeros of the residual.

use super::{FieldConfiguration, Perturbation, C64};
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Grid};

/// Euclidean gradient of [`lattice_energy`]: for `u` the complex number
/// `dE/dRe u + i dE/dIm u`.
#[derive(Clone, Debug)]
pub struct LatticeGradient {
    pub du: Vec<C64>,
    pub da: Vec<Vec<f64>>,
}

fn check_stencil(grid: &Grid) -> Result<()> {
    if grid.axes().iter().any(|a| a.count < 3) {
        return Err(Error::GridTooSmall);
    }
    Ok(())
}

/// Discrete action: links and plaquettes weighted by the cell volume,
/// the potential by trapezoidal node weights.
pub fn lattice_energy(config: &FieldConfiguration) -> f64 {
    lattice_terms(config, false).0
}

/// Gradient of [`lattice_energy`] at every node.
pub fn lattice_gradient(config: &FieldConfiguration) -> LatticeGradient {
    lattice_terms(config, true).1.expect("gradient requested")
}

/// Action and gradient in one sweep.
pub(crate) fn lattice_energy_and_gradient(config: &FieldConfiguration) -> (f64, LatticeGradient) {
    let (e, g) = lattice_terms(config, true);
    (e, g.expect("gradient requested"))
}

fn lattice_terms(config: &FieldConfiguration, with_grad: bool) -> (f64, Option<LatticeGradient>) {
    let g = &config.grid;
    let n = g.len();
    let d = g.dim();
    let w = g.cell_volume();
    let e2 = config.epsilon * config.epsilon;
    let u = &config.u;
    let a = &config.a;

    let mut grad = with_grad.then(|| LatticeGradient { du: vec![C64::new(0.0, 0.0); n], da: vec![vec![0.0; n]; d] });
    let mut link_terms = Vec::with_capacity(n * d);

    for ax in 0..d {
        let h = g.spacing(ax);
        let s = g.stride(ax);
        let c = w / (h * h);
        for x in 0..n {
            if g.coord_index(x, ax) + 1 == g.axis(ax).count {
                continue;
            }
            let y = x + s;
            let theta = 0.5 * h * (a[ax][x] + a[ax][y]);
            let link = C64::from_polar(1.0, theta);
            let z = u[y] - link * u[x];
            link_terms.push(c * z.norm_sqr());
            if let Some(gr) = grad.as_mut() {
                gr.du[x] -= link.conj() * z * (2.0 * c);
                gr.du[y] += z * (2.0 * c);
                let dtheta = 2.0 * c * (link * u[x] * u[y].conj()).im;
                gr.da[ax][x] += 0.5 * h * dtheta;
                gr.da[ax][y] += 0.5 * h * dtheta;
            }
        }
    }

    let mut plaquette_terms = Vec::new();
    for (p, q) in g.pairs() {
        let (hp, hq) = (g.spacing(p), g.spacing(q));
        let (sp, sq) = (g.stride(p), g.stride(q));
        for n00 in 0..n {
            if g.coord_index(n00, p) + 1 == g.axis(p).count || g.coord_index(n00, q) + 1 == g.axis(q).count {
                continue;
            }
            let n10 = n00 + sp;
            let n01 = n00 + sq;
            let n11 = n00 + sp + sq;
            let f = (a[q][n10] + a[q][n11] - a[q][n00] - a[q][n01]) / (2.0 * hp)
                - (a[p][n01] + a[p][n11] - a[p][n00] - a[p][n10]) / (2.0 * hq);
            plaquette_terms.push(e2 * w * f * f);
            if let Some(gr) = grad.as_mut() {
                let gq = 2.0 * e2 * w * f / (2.0 * hp);
                let gp = 2.0 * e2 * w * f / (2.0 * hq);
                gr.da[q][n10] += gq;
                gr.da[q][n11] += gq;
                gr.da[q][n00] -= gq;
                gr.da[q][n01] -= gq;
                gr.da[p][n01] -= gp;
                gr.da[p][n11] -= gp;
                gr.da[p][n00] += gp;
                gr.da[p][n10] += gp;
            }
        }
    }

    let mut potential_terms = Vec::with_capacity(n);
    for x in 0..n {
        let wx = g.weight(x);
        let m = 1.0 - u[x].norm_sqr();
        potential_terms.push(wx * m * m / (4.0 * e2));
        if let Some(gr) = grad.as_mut() {
            gr.du[x] -= u[x] * (wx * m / e2);
        }
    }

    let e = pairwise_sum(&link_terms) + pairwise_sum(&plaquette_terms) + pairwise_sum(&potential_terms);
    (e, grad)
}

/// `S_eps(u, A)` on interior nodes; boundary rows are zero (Dirichlet).
pub fn euler_lagrange_residual(config: &FieldConfiguration) -> Result<Perturbation> {
    config.validate()?;
    check_stencil(&config.grid)?;
    Ok(residual_from_gradient(config, &lattice_gradient(config)))
}

pub(crate) fn residual_from_gradient(config: &FieldConfiguration, grad: &LatticeGradient) -> Perturbation {
    let g = &config.grid;
    let w = g.cell_volume();
    let e2 = config.epsilon * config.epsilon;
    let mut r = Perturbation::zeros(g.dim(), g.len());
    for i in (0..g.len()).filter(|&i| g.is_interior(i)) {
        r.phi[i] = grad.du[i] * (e2 / (2.0 * w));
        for c in 0..g.dim() {
            r.omega[c][i] = grad.da[c][i] / (2.0 * w);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;

    fn smooth(eps: f64) -> FieldConfiguration {
        let g = Grid2::new(1.5, 0.1).unwrap().grid();
        FieldConfiguration::from_fn(g, eps, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let env = (-r2).exp();
            (C64::new(0.5 + x[0] * env, x[1] * x[1] * env), vec![0.3 * x[1] * env, -0.2 * x[0] * x[0] * env])
        })
        .unwrap()
    }

    #[test]
    fn vacuum_residual_is_exactly_zero() {
        let g = Grid2::new(1.0, 0.1).unwrap().grid();
        let r = euler_lagrange_residual(&FieldConfiguration::vacuum(g, 0.3).unwrap()).unwrap();
        assert_eq!(r.sup_norm(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences_of_the_action() {
        let cfg = smooth(0.8);
        let grad = lattice_gradient(&cfg);
        let node = cfg.grid.index(&[13, 17]);
        let t = 1e-6;
        let mut plus = cfg.clone();
        let mut minus = cfg.clone();
        plus.u[node].im += t;
        minus.u[node].im -= t;
        let fd = (lattice_energy(&plus) - lattice_energy(&minus)) / (2.0 * t);
        assert!((fd - grad.du[node].im).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", grad.du[node].im);
        let mut plus = cfg.clone();
        let mut minus = cfg.clone();
        plus.a[1][node] += t;
        minus.a[1][node] -= t;
        let fd = (lattice_energy(&plus) - lattice_energy(&minus)) / (2.0 * t);
        assert!((fd - grad.da[1][node]).abs() < 1e-6 * (1.0 + fd.abs()));
    }
}
