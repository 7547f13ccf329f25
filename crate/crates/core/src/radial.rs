//! The degree-one radially symmetric vortex `u = f(r) e^{i theta}`,
//! `A = a(r) d theta`, from the first-order system
//!
//! ```text
//! a'/r = (1 - f^2) / 2,     f' = (1 - a) f / r,     f(0) = a(0) = 0.
//! ```
//!
//! The slope `alpha = f'(0)` is found by bisection between trajectories in
//! which `f` crosses 1 (slope too large) and trajectories in which `f`
//! turns over (slope too small). Shooting cannot follow the decaying
//! solution for long because the companion mode grows like `e^r`, so once
//! the two bracketing trajectories separate the profile is continued with
//! the decaying solution of the linearization about `f = a = 1`:
//! `1 - f = c K0(r)`, `1 - a = c r K1(r)`.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldConfiguration, C64};
use crate::grid::Grid;

/// Output spacing of the radial grid.
pub const RADIAL_SPACING: f64 = 0.01;
/// Radius at which the series start is evaluated.
pub const SERIES_START: f64 = 1e-4;
const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-14;
/// Bracketing trajectories are trusted while they agree to this level.
const SPLIT_THRESHOLD: f64 = 1e-11;

/// Degree-one vortex profile on a uniform radial grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub a: Vec<f64>,
    pub f_prime: Vec<f64>,
    pub a_prime: Vec<f64>,
    /// `alpha` with `f(r) ~ alpha r` near the origin.
    pub shoot_slope: f64,
    pub meta: ProfileMeta,
    #[serde(skip)]
    slopes: Option<Slopes>,
}

/// Sidecar data stored next to a profile CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileMeta {
    pub alpha: f64,
    pub tol: f64,
    pub r_max: f64,
    /// Radius from which the linearized tail is used.
    pub tail_start: f64,
    /// Coefficient `c` of the tail `1 - f = c K0(r)`.
    pub tail_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct Slopes {
    f: Vec<f64>,
    a: Vec<f64>,
}

/// Values and first derivatives of the profile at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileSample {
    pub f: f64,
    pub a: f64,
    pub f_prime: f64,
    pub a_prime: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fate {
    /// `f` reached 1.
    Overshoot,
    /// `f` turned over below 1.
    Undershoot,
    /// Integrated to the end without leaving the enclosure.
    Survived,
}

fn rhs(r: f64, y: [f64; 2]) -> [f64; 2] {
    let [f, a] = y;
    [(1.0 - a) * f / r, 0.5 * r * (1.0 - f * f)]
}

fn series(alpha: f64, r: f64) -> [f64; 2] {
    [alpha * r * (1.0 - r * r / 8.0), r * r / 4.0 - alpha * alpha * r.powi(4) / 8.0]
}

/// Dormand–Prince 5(4) from `r` to `r1` (either direction) with step control.
fn dopri(r: f64, r1: f64, y: [f64; 2], h: &mut f64) -> Result<[f64; 2]> {
    dopri_forward(r, r1, y, h, ATOL, rhs)
}

/// Deviations `(1 - f, 1 - a)` integrated inwards from `r` to `r1 < r`,
/// with pure relative error control so exponentially small tails keep
/// their precision.
fn dopri_deviation_inwards(r: f64, r1: f64, y: [f64; 2], h: &mut f64) -> Result<[f64; 2]> {
    dopri_forward(-r, -r1, y, h, 1e-300, |t, y| {
        let rho = -t;
        let [phi, psi] = y;
        // d/dt = -d/dr of the deviation system.
        [psi * (1.0 - phi) / rho, 0.5 * rho * phi * (2.0 - phi)]
    })
}

fn dopri_forward(
    mut r: f64,
    r1: f64,
    mut y: [f64; 2],
    h: &mut f64,
    atol: f64,
    rhs: impl Fn(f64, [f64; 2]) -> [f64; 2],
) -> Result<[f64; 2]> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

    while r < r1 {
        let last = r + *h >= r1 - 1e-12 * r1.abs().max(1.0);
        let step = if last { r1 - r } else { *h };
        if step < 1e-14 * r.abs().max(1.0) {
            return Err(Error::StepUnderflow(r.abs()));
        }
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                ys[0] += step * A[s][j] * kj[0];
                ys[1] += step * A[s][j] * kj[1];
            }
            k[s] = rhs(r + C[s] * step, ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += step * d5;
            let scale = atol + RTOL * y[c].abs().max(y5[c].abs());
            err = err.max((step * (d5 - d4)).abs() / scale);
        }
        if err <= 1.0 {
            r = if last { r1 } else { r + step };
            y = y5;
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if step == *h || grow < 1.0 {
                *h = step * grow;
            }
        } else {
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            *h = step * shrink;
        }
    }
    Ok(y)
}

struct Trajectory {
    f: Vec<f64>,
    a: Vec<f64>,
    fate: Fate,
}

/// Integrates on the output nodes `r` until the trajectory leaves the
/// enclosure `0 < f < 1`, `a < 1`.
fn shoot(alpha: f64, r: &[f64]) -> Result<Trajectory> {
    let mut f = vec![0.0];
    let mut a = vec![0.0];
    let mut y = series(alpha, SERIES_START);
    let mut at = SERIES_START;
    let mut h = 1e-3;
    for &rk in &r[1..] {
        y = dopri(at, rk, y, &mut h)?;
        at = rk;
        if y[0] >= 1.0 {
            return Ok(Trajectory { f, a, fate: Fate::Overshoot });
        }
        if y[1] >= 1.0 || y[0] <= 0.0 {
            return Ok(Trajectory { f, a, fate: Fate::Undershoot });
        }
        f.push(y[0]);
        a.push(y[1]);
    }
    Ok(Trajectory { f, a, fate: Fate::Survived })
}

/// Modified Bessel functions `K0(x)`, `K1(x)` for `x > 0` from
/// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` by the trapezoidal
/// rule, which converges geometrically for this integrand.
pub fn bessel_k01(x: f64) -> (f64, f64) {
    assert!(x > 0.0);
    let step = 0.02_f64;
    let mut k0 = 0.5 * (-x).exp();
    let mut k1 = k0;
    for k in 1.. {
        let ch = (k as f64 * step).cosh();
        let e = (-x * ch).exp();
        k0 += e;
        k1 += e * ch;
        if x * ch > 745.0 {
            break;
        }
    }
    (k0 * step, k1 * step)
}

/// Solves the first-order vortex system on `[0, r_max]`.
///
/// `tol` bounds the accepted deviation from the boundary values at
/// `r_max`; the integration itself runs at a fixed tolerance far below it.
pub fn solve_bogomolny(r_max: f64, tol: f64) -> Result<RadialProfile> {
    if !(r_max >= 10.0 && r_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("r_max = {r_max} must be at least 10")));
    }
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must lie in (0, 1e-6]")));
    }
    let intervals = (r_max / RADIAL_SPACING).round() as usize;
    let dr = r_max / intervals as f64;
    let r: Vec<f64> = (0..=intervals).map(|k| k as f64 * dr).collect();

    let (mut lo, mut hi) = (1e-3, 10.0);
    if shoot(lo, &r)?.fate != Fate::Undershoot || shoot(hi, &r)?.fate != Fate::Overshoot {
        return Err(Error::ShootingBracket);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, &r)?.fate {
            Fate::Overshoot => hi = mid,
            Fate::Undershoot => lo = mid,
            Fate::Survived => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let alpha = 0.5 * (lo + hi);
    let t_lo = shoot(lo, &r)?;
    let t_hi = shoot(hi, &r)?;
    let common = t_lo.f.len().min(t_hi.f.len());
    let mut split = 1;
    while split < common && (t_lo.f[split] - t_hi.f[split]).abs() + (t_lo.a[split] - t_hi.a[split]).abs() <= SPLIT_THRESHOLD
    {
        split += 1;
    }
    // Back off so the junction sits where both trajectories are still trusted.
    let junction = split.saturating_sub(1).max(1).min(intervals);

    let mut f: Vec<f64> = (0..=junction).map(|k| 0.5 * (t_lo.f[k] + t_hi.f[k])).collect();
    let mut a: Vec<f64> = (0..=junction).map(|k| 0.5 * (t_lo.a[k] + t_hi.a[k])).collect();
    let rj = r[junction];
    let (k0, k1) = bessel_k01(rj);
    let phi = 1.0 - f[junction];
    let psi = 1.0 - a[junction];
    let c0 = (phi * k0 + psi * rj * k1) / (k0 * k0 + rj * rj * k1 * k1);
    // The decaying branch is stable when integrated inwards: start from the
    // linear tail at r_max and tune its amplitude to meet the shooting data.
    let c = secant(c0, |c| Ok(backward(&r, junction, c)?.last().expect("non-empty")[0] - f[junction]))?;
    let tail = backward(&r, junction, c)?;
    for y in tail.iter().rev().skip(1) {
        f.push(y[0]);
        a.push(y[1]);
    }
    let meta = ProfileMeta { alpha, tol, r_max: r[intervals], tail_start: rj, tail_coefficient: c };
    RadialProfile::assemble(r, f, a, alpha, meta)
}

/// States on `r[junction..]`, listed from `r_max` inwards.
fn backward(r: &[f64], junction: usize, c: f64) -> Result<Vec<[f64; 2]>> {
    let last = r.len() - 1;
    let (k0, k1) = bessel_k01(r[last]);
    let mut y = [c * k0, c * r[last] * k1];
    let mut out = vec![[1.0 - y[0], 1.0 - y[1]]];
    let mut h = 1e-2;
    for k in (junction..last).rev() {
        y = dopri_deviation_inwards(r[k + 1], r[k], y, &mut h)?;
        out.push([1.0 - y[0], 1.0 - y[1]]);
    }
    Ok(out)
}

fn secant(x0: f64, g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (mut x0, mut x1) = (x0, x0 * (1.0 + 1e-4));
    let (mut g0, mut g1) = (g(x0)?, g(x1)?);
    for _ in 0..50 {
        if g1 == g0 || g1 == 0.0 {
            break;
        }
        let x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = g(x1)?;
        if (x1 - x0).abs() <= 1e-15 * x1.abs() {
            break;
        }
    }
    Ok(x1)
}

impl RadialProfile {
    /// Builds a profile from values; derivative samples come from the
    /// first-order system (`f'(0) = alpha`, `a'(0) = 0`).
    fn assemble(r: Vec<f64>, f: Vec<f64>, a: Vec<f64>, alpha: f64, meta: ProfileMeta) -> Result<Self> {
        let f_prime = r
            .iter()
            .zip(f.iter().zip(&a))
            .map(|(&rk, (&fk, &ak))| if rk == 0.0 { alpha } else { (1.0 - ak) * fk / rk })
            .collect();
        let a_prime = r.iter().zip(&f).map(|(&rk, &fk)| 0.5 * rk * (1.0 - fk * fk)).collect();
        Self::from_samples(r, f, a, f_prime, a_prime, alpha, meta)
    }

    /// A profile from raw samples on a uniform grid starting at `r = 0`.
    pub fn from_samples(
        r: Vec<f64>,
        f: Vec<f64>,
        a: Vec<f64>,
        f_prime: Vec<f64>,
        a_prime: Vec<f64>,
        alpha: f64,
        meta: ProfileMeta,
    ) -> Result<Self> {
        let n = r.len();
        if n < 4 || [f.len(), a.len(), f_prime.len(), a_prime.len()].iter().any(|&l| l != n) {
            return Err(Error::Layout("profile columns must have equal length >= 4".into()));
        }
        if r[0] != 0.0 {
            return Err(Error::InvalidParameter("radial grid must start at r = 0".into()));
        }
        let dr = r[1] - r[0];
        if !(dr > 0.0) || r.windows(2).any(|w| ((w[1] - w[0]) - dr).abs() > 1e-9 * dr.max(1.0)) {
            return Err(Error::InvalidParameter("radial grid must be uniform and increasing".into()));
        }
        let mut p = Self { r, f, a, f_prime, a_prime, shoot_slope: alpha, meta, slopes: None };
        p.slopes = Some(Slopes { f: limited_slopes(&p.f, &p.f_prime, dr), a: limited_slopes(&p.a, &p.a_prime, dr) });
        Ok(p)
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("non-empty")
    }

    pub fn spacing(&self) -> f64 {
        self.r[1] - self.r[0]
    }

    fn slopes(&self) -> &Slopes {
        self.slopes.as_ref().expect("slopes are built at construction")
    }

    /// Monotone cubic Hermite interpolation of `(f, a)` with the first
    /// derivatives taken from the first-order system.
    pub fn eval(&self, radius: f64) -> Result<ProfileSample> {
        let rho = radius.abs();
        if rho > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::Coverage { needed: rho, available: self.r_max() });
        }
        let f = self.hermite(&self.f, &self.slopes().f, rho);
        let a = self.hermite(&self.a, &self.slopes().a, rho);
        let f_over_r = self.f_over_r(rho)?;
        Ok(ProfileSample { f, a, f_prime: (1.0 - a) * f_over_r, a_prime: 0.5 * rho * (1.0 - f * f) })
    }

    /// `f(r) / r`, continuous at the origin.
    pub fn f_over_r(&self, rho: f64) -> Result<f64> {
        if rho < 1e-3 {
            return Ok(self.shoot_slope * (1.0 - rho * rho / 8.0));
        }
        if rho > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::Coverage { needed: rho, available: self.r_max() });
        }
        Ok(self.hermite(&self.f, &self.slopes().f, rho) / rho)
    }

    /// `a(r) / r^2`, continuous at the origin.
    pub fn a_over_r2(&self, rho: f64) -> Result<f64> {
        if rho < 1e-3 {
            let al = self.shoot_slope;
            return Ok(0.25 - al * al * rho * rho / 8.0);
        }
        if rho > self.r_max() * (1.0 + 1e-12) {
            return Err(Error::Coverage { needed: rho, available: self.r_max() });
        }
        Ok(self.hermite(&self.a, &self.slopes().a, rho) / (rho * rho))
    }

    fn hermite(&self, y: &[f64], m: &[f64], rho: f64) -> f64 {
        let dr = self.spacing();
        let last = self.r.len() - 1;
        let k = ((rho / dr).floor() as usize).min(last - 1);
        let t = (rho - self.r[k]) / dr;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y[k] + h10 * dr * m[k] + h01 * y[k + 1] + h11 * dr * m[k + 1]
    }

    /// Inverse of the monotone `f`: the radius where `f = level`.
    pub fn f_inverse(&self, level: f64) -> Option<f64> {
        let k = self.f.windows(2).position(|w| w[0] <= level && level <= w[1])?;
        let (mut lo, mut hi) = (self.r[k], self.r[k + 1]);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(&self.f, &self.slopes().f, mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Residuals of the first-order system with derivatives estimated by
    /// fourth-order differences of the stored values (independent of the
    /// stored derivative samples). Returns `(sup |a'/r - (1-f^2)/2|, sup |f' - (1-a) f / r|)`
    /// over `r > 0`.
    pub fn first_order_residual(&self) -> (f64, f64) {
        let dr = self.spacing();
        let n = self.r.len();
        // f is odd and a is even in r, which gives centered stencils at the origin.
        let d = |y: &[f64], parity: f64, k: usize| -> f64 {
            let at = |j: isize| if j < 0 { parity * y[(-j) as usize] } else { y[j as usize] };
            let k = k as isize;
            if k + 2 < n as isize {
                (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * dr)
            } else {
                (25.0 * at(k) - 48.0 * at(k - 1) + 36.0 * at(k - 2) - 16.0 * at(k - 3) + 3.0 * at(k - 4)) / (12.0 * dr)
            }
        };
        let mut ra: f64 = 0.0;
        let mut rf: f64 = 0.0;
        for k in 1..n {
            let r = self.r[k];
            let (f, a) = (self.f[k], self.a[k]);
            ra = ra.max((d(&self.a, 1.0, k) / r - 0.5 * (1.0 - f * f)).abs());
            rf = rf.max((d(&self.f, -1.0, k) - (1.0 - a) * f / r).abs());
        }
        (ra, rf)
    }

    /// Boundary defects `(1 - f(r_max), 1 - a(r_max))`.
    pub fn boundary_defect(&self) -> (f64, f64) {
        let k = self.r.len() - 1;
        (1.0 - self.f[k], 1.0 - self.a[k])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,f,a,f_prime,a_prime")?;
        for k in 0..self.r.len() {
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.r[k], self.f[k], self.a[k], self.f_prime[k], self.a_prime[k]
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, meta: ProfileMeta) -> Result<Self> {
        let mut cols: [Vec<f64>; 5] = Default::default();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != "r,f,a,f_prime,a_prime" {
                    return Err(Error::Format(format!("unexpected profile header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 5 {
                return Err(Error::Format(format!("line {}: expected 5 columns", lineno + 1)));
            }
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
        }
        let [r, f, a, fp, ap] = cols;
        Self::from_samples(r, f, a, fp, ap, meta.alpha, meta)
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.csv")))?))?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, stem: &str) -> Result<Self> {
        let dir = dir.as_ref();
        let meta: ProfileMeta = serde_json::from_slice(&std::fs::read(dir.join(format!("{stem}.json")))?)?;
        let f = std::fs::File::open(dir.join(format!("{stem}.csv")))?;
        Self::read_csv(std::io::BufReader::new(f), meta)
    }
}

/// Fritsch–Carlson limited slopes: unchanged for smooth monotone data.
fn limited_slopes(y: &[f64], m: &[f64], dr: f64) -> Vec<f64> {
    let mut out = m.to_vec();
    for k in 0..y.len() - 1 {
        let delta = (y[k + 1] - y[k]) / dr;
        if delta == 0.0 {
            out[k] = 0.0;
            out[k + 1] = 0.0;
            continue;
        }
        let al = out[k] / delta;
        let be = out[k + 1] / delta;
        if al < 0.0 {
            out[k] = 0.0;
        }
        if be < 0.0 {
            out[k + 1] = 0.0;
        }
        let s = al * al + be * be;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            out[k] = tau * al * delta;
            out[k + 1] = tau * be * delta;
        }
    }
    out
}

/// Second-order ODE residuals `(sup |R_f|, sup |R_a|)` over interior nodes,
/// with second derivatives from centered differences of the stored
/// derivative samples.
pub fn second_order_residual(profile: &RadialProfile) -> (f64, f64) {
    let dr = profile.spacing();
    let n = profile.r.len();
    let mut rf: f64 = 0.0;
    let mut ra: f64 = 0.0;
    for k in 1..n - 1 {
        let r = profile.r[k];
        let (f, a, fp, ap) = (profile.f[k], profile.a[k], profile.f_prime[k], profile.a_prime[k]);
        let fpp = (profile.f_prime[k + 1] - profile.f_prime[k - 1]) / (2.0 * dr);
        let app = (profile.a_prime[k + 1] - profile.a_prime[k - 1]) / (2.0 * dr);
        let res_f = -fpp - fp / r + (1.0 - a).powi(2) * f / (r * r) - 0.5 * f * (1.0 - f * f);
        let res_a = -app + ap / r - f * f * (1.0 - a);
        rf = rf.max(res_f.abs());
        ra = ra.max(res_a.abs());
    }
    (rf, ra)
}

/// Least-squares decay rate `-slope` of `log(values)` against `r`.
pub fn fit_decay_rate(r: &[f64], values: &[f64]) -> Result<f64> {
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Overshoot);
    }
    let n = r.len() as f64;
    let mx = r.iter().sum::<f64>() / n;
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = r.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = r.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}

/// Fitted exponential rates of `1 - f` and `1 - a` on `[r_lo, r_hi]`.
pub fn decay_fit(profile: &RadialProfile, r_lo: f64, r_hi: f64) -> Result<(f64, f64)> {
    if r_lo < 5.0 || r_hi > profile.r_max() + 1e-12 || r_hi <= r_lo {
        return Err(Error::InvalidParameter(format!(
            "fit window [{r_lo}, {r_hi}] must satisfy 5 <= r_lo < r_hi <= r_max"
        )));
    }
    let idx: Vec<usize> = (0..profile.r.len()).filter(|&k| profile.r[k] >= r_lo && profile.r[k] <= r_hi).collect();
    if idx.len() < 10 {
        return Err(Error::InvalidParameter("fit window holds fewer than 10 nodes".into()));
    }
    let r: Vec<f64> = idx.iter().map(|&k| profile.r[k]).collect();
    let one_minus_f: Vec<f64> = idx.iter().map(|&k| 1.0 - profile.f[k]).collect();
    let one_minus_a: Vec<f64> = idx.iter().map(|&k| 1.0 - profile.a[k]).collect();
    Ok((fit_decay_rate(&r, &one_minus_f)?, fit_decay_rate(&r, &one_minus_a)?))
}

/// Samples `u = f(rho/eps) e^{i theta}`, `A = a(rho/eps) / rho^2 (-z_2, z_1)`
/// about `center` on a two-dimensional grid.
pub fn sample_vortex(profile: &RadialProfile, grid: &Grid, center: [f64; 2], epsilon: f64) -> Result<FieldConfiguration> {
    if grid.dim() != 2 {
        return Err(Error::Dimension(format!("vortex sampling needs a 2D grid, got dimension {}", grid.dim())));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    let reach = grid
        .axes()
        .iter()
        .zip(center)
        .map(|(ax, c)| (ax.min - c).abs().max((ax.max() - c).abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    if reach / epsilon > profile.r_max() * (1.0 + 1e-12) {
        return Err(Error::Coverage { needed: reach / epsilon, available: profile.r_max() });
    }
    FieldConfiguration::from_fn(grid.clone(), epsilon, |x| {
        let (u, a) = vortex_at(profile, [x[0] - center[0], x[1] - center[1]], epsilon).expect("coverage checked");
        (u, a.to_vec())
    })
}

/// The scaled vortex at displacement `z` from its center.
pub fn vortex_at(profile: &RadialProfile, z: [f64; 2], epsilon: f64) -> Result<(C64, [f64; 2])> {
    let rho = (z[0] * z[0] + z[1] * z[1]).sqrt();
    let s = rho / epsilon;
    let fr = profile.f_over_r(s)?;
    let ar2 = profile.a_over_r2(s)?;
    let u = C64::new(z[0], z[1]) * (fr / epsilon);
    let k = ar2 / (epsilon * epsilon);
    Ok((u, [-z[1] * k, z[0] * k]))
}
