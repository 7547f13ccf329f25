//! The vortex blended into the pure gauge `Psi = (x/|x|, d theta)` between
//! `3|log eps|` and `6|log eps|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::C64;
use crate::radial::RadialProfile;

/// Radial profile of the blended pair `u = f e^{i theta}`, `A = a d theta`
/// at unit scale, with derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlendSample {
    pub zeta: f64,
    pub f: f64,
    pub a: f64,
    pub f_prime: f64,
    pub a_prime: f64,
    /// `f / r`, regular at the origin.
    pub f_over_r: f64,
    /// `a / r^2`, regular at the origin.
    pub a_over_r2: f64,
    /// `a' / r`, regular at the origin.
    pub a_prime_over_r: f64,
}

/// Residual of the unit-scale equations for the blended pair on radial
/// nodes: `v` is `|S_u|`, `b` is `|S_A|` (both rotation invariant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffResidual {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub b: Vec<f64>,
    pub sup_v: f64,
    pub sup_b: f64,
    /// Largest residual over `r < inner`.
    pub sup_inner: f64,
    /// Largest residual over `r > outer`.
    pub sup_outer: f64,
}

impl CutoffResidual {
    pub fn sup(&self) -> f64 {
        self.sup_v.max(self.sup_b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutoffVortex {
    pub profile: RadialProfile,
    pub epsilon: f64,
    pub inner: f64,
    pub outer: f64,
    pub residual: CutoffResidual,
}

/// `zeta` and its first two derivatives: 1 below `inner`, 0 above `outer`,
/// quintic smoothstep in between.
pub fn cutoff_function(r: f64, inner: f64, outer: f64) -> [f64; 3] {
    if r <= inner {
        return [1.0, 0.0, 0.0];
    }
    if r >= outer {
        return [0.0, 0.0, 0.0];
    }
    let w = outer - inner;
    let s = (r - inner) / w;
    let step = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let d1 = 30.0 * s * s * (1.0 - s) * (1.0 - s) / w;
    let d2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (w * w);
    [1.0 - step, -d1, -d2]
}

/// Builds the blended pair and evaluates its residual.
pub fn build_cutoff_vortex(epsilon: f64, profile: &RadialProfile) -> Result<CutoffVortex> {
    if !(epsilon > 0.0 && epsilon <= 0.2) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must lie in (0, 0.2]")));
    }
    let log = epsilon.ln().abs();
    let inner = 3.0 * log;
    let outer = 6.0 * log;
    let needed = outer + 2.0;
    if profile.r_max() < needed {
        return Err(Error::Coverage { needed, available: profile.r_max() });
    }
    let mut c = CutoffVortex {
        profile: profile.clone(),
        epsilon,
        inner,
        outer,
        residual: CutoffResidual { r: vec![], v: vec![], b: vec![], sup_v: 0.0, sup_b: 0.0, sup_inner: 0.0, sup_outer: 0.0 },
    };
    c.residual = c.evaluate_residual();
    Ok(c)
}

impl CutoffVortex {
    /// Blended profile at unit-scale radius `r`.
    pub fn sample(&self, r: f64) -> Result<BlendSample> {
        let [zeta, dzeta, _] = cutoff_function(r, self.inner, self.outer);
        if zeta == 0.0 {
            let inv = if r > 0.0 { 1.0 / r } else { f64::INFINITY };
            return Ok(BlendSample {
                zeta,
                f: 1.0,
                a: 1.0,
                f_prime: 0.0,
                a_prime: 0.0,
                f_over_r: inv,
                a_over_r2: inv * inv,
                a_prime_over_r: 0.0,
            });
        }
        let p = self.profile.eval(r)?;
        let fr = self.profile.f_over_r(r)?;
        let ar2 = self.profile.a_over_r2(r)?;
        let (f_over_r, a_over_r2, ap_over_r) = if zeta == 1.0 {
            (fr, ar2, 0.5 * (1.0 - p.f * p.f))
        } else {
            (
                zeta * fr + (1.0 - zeta) / r,
                zeta * ar2 + (1.0 - zeta) / (r * r),
                (dzeta * (p.a - 1.0) + zeta * p.a_prime) / r,
            )
        };
        Ok(BlendSample {
            zeta,
            f: 1.0 + zeta * (p.f - 1.0),
            a: 1.0 + zeta * (p.a - 1.0),
            f_prime: dzeta * (p.f - 1.0) + zeta * p.f_prime,
            a_prime: dzeta * (p.a - 1.0) + zeta * p.a_prime,
            f_over_r,
            a_over_r2,
            a_prime_over_r: ap_over_r,
        })
    }

    /// The blended pair scaled to `U((x - c) / eps)` at displacement `z`:
    /// `u` and the two normal components of `A`.
    pub fn vortex_at(&self, z: [f64; 2]) -> Result<(C64, [f64; 2])> {
        let eps = self.epsilon;
        let rho = z[0].hypot(z[1]) / eps;
        let s = self.sample(rho)?;
        let u = C64::new(z[0], z[1]) * (s.f_over_r / eps);
        let k = s.a_over_r2 / (eps * eps);
        Ok((u, [-z[1] * k, z[0] * k]))
    }

    /// Approximate zero modes `v_1 = (f', (a'/r) dz^2)`, `v_2 = (i f', -(a'/r) dz^1)`
    /// built from the blended profile at displacement `z`, with the scalar
    /// part carrying `1/eps` and the 1-form part `1/eps^2`.
    pub fn zero_modes_at(&self, z: [f64; 2]) -> Result<[(C64, [f64; 2]); 2]> {
        let eps = self.epsilon;
        let rho = z[0].hypot(z[1]) / eps;
        let s = self.sample(rho)?;
        let fp = s.f_prime / eps;
        let b = s.a_prime_over_r / (eps * eps);
        Ok([(C64::new(fp, 0.0), [0.0, b]), (C64::new(0.0, fp), [-b, 0.0])])
    }

    /// Radius beyond which the pair is pure gauge, in the scaled variable.
    pub fn scaled_outer(&self) -> f64 {
        self.outer * self.epsilon
    }

    fn evaluate_residual(&self) -> CutoffResidual {
        let p = &self.profile;
        let last = p.r.iter().rposition(|&r| r <= self.outer + 1.0).unwrap_or(p.r.len() - 1);
        let mut out = CutoffResidual { r: vec![], v: vec![], b: vec![], sup_v: 0.0, sup_b: 0.0, sup_inner: 0.0, sup_outer: 0.0 };
        for k in 0..=last {
            let r = p.r[k];
            if r < 0.5 {
                continue;
            }
            let (f, a, fp, ap) = (p.f[k], p.a[k], p.f_prime[k], p.a_prime[k]);
            // Second derivatives from differentiating the first-order system.
            let fpp = fp * (1.0 - a) / r - f * ap / r - f * (1.0 - a) / (r * r);
            let app = 0.5 * (1.0 - f * f) - r * f * fp;
            let [z, dz, ddz] = cutoff_function(r, self.inner, self.outer);
            let ft = 1.0 + z * (f - 1.0);
            let at = 1.0 + z * (a - 1.0);
            let ftp = dz * (f - 1.0) + z * fp;
            let atp = dz * (a - 1.0) + z * ap;
            let ftpp = ddz * (f - 1.0) + 2.0 * dz * fp + z * fpp;
            let atpp = ddz * (a - 1.0) + 2.0 * dz * ap + z * app;
            let rf = -(ftpp + ftp / r - (1.0 - at) * (1.0 - at) * ft / (r * r)) - 0.5 * (1.0 - ft * ft) * ft;
            let ra = -(atpp - atp / r) - ft * ft * (1.0 - at);
            let v = rf.abs();
            let b = (ra / r).abs();
            out.r.push(r);
            out.v.push(v);
            out.b.push(b);
            out.sup_v = out.sup_v.max(v);
            out.sup_b = out.sup_b.max(b);
            if r < self.inner {
                out.sup_inner = out.sup_inner.max(v.max(b));
            }
            if r > self.outer {
                out.sup_outer = out.sup_outer.max(v.max(b));
            }
        }
        out
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("slope fit needs at least two matched points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}
