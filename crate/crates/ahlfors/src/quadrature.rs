//! Band integrals with inverse square-root endpoint weights, adaptive
//! Gauss–Legendre for regular pieces, and complex path integrals.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::geometry::BandSystem;
use crate::{Error, Result};

/// Largest Gauss–Chebyshev level tried by [`integrate_band`].
pub const MAX_BAND_NODES: usize = 1 << 16;
/// Panel disagreement that triggers bisection.
pub const PANEL_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 40;

/// Value together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// `int_a^b f(x) dx / sqrt((x-a)(b-x))` by Gauss–Chebyshev with node doubling.
///
/// `f` is the regular factor; the weight is applied through
/// `x = mid + half cos(theta)`.
pub fn integrate_band<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    let est = integrate_band_est(&f, a, b, 1e-12)?;
    Ok(est.value)
}

pub fn integrate_band_est<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel: f64,
) -> Result<Estimate<f64>> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let level = |n: usize| -> (f64, f64) {
        let h = std::f64::consts::PI / n as f64;
        let mut s = 0.0;
        let mut sa = 0.0;
        for k in 0..n {
            let th = (k as f64 + 0.5) * h;
            let v = f(mid + half * th.cos());
            s += v;
            sa += v.abs();
        }
        (s * h, sa * h)
    };
    let mut n = 16;
    let (mut prev, _) = level(n);
    let mut err = f64::INFINITY;
    while n < MAX_BAND_NODES {
        n *= 2;
        let (cur, scale) = level(n);
        err = (cur - prev).abs();
        if !cur.is_finite() {
            break;
        }
        if err <= rel * scale.max(1e-300) {
            return Ok(Estimate { value: cur, error: err });
        }
        prev = cur;
    }
    Err(Error::Accuracy {
        msg: format!("band integral on [{a}, {b}] did not converge (last change {err:e})"),
        estimate: prev,
    })
}

fn legendre_15() -> &'static ([f64; 15], [f64; 15]) {
    static NODES: OnceLock<([f64; 15], [f64; 15])> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre::<15>())
}

/// Nodes and weights of the `N`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut x = [0.0; N];
    let mut w = [0.0; N];
    let n = N as f64;
    for i in 0..N {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=N {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn panel<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let (x, w) = legendre_15();
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..15 {
        s += w[i] * f(m + h * x[i]);
    }
    s * h
}

fn adapt<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    global: f64,
    depth: u32,
    err: &mut f64,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let l = panel(f, a, m);
    let r = panel(f, m, b);
    let d = (l + r - whole).norm();
    let floor = (64.0 * f64::EPSILON * (l.norm() + r.norm())).max(1e-16 * global);
    if d <= tol.max(floor) || depth >= MAX_DEPTH || m <= a || m >= b {
        *err += d;
        return l + r;
    }
    adapt(f, a, m, l, 0.5 * tol, global, depth + 1, err)
        + adapt(f, m, b, r, 0.5 * tol, global, depth + 1, err)
}

/// Adaptive 15-point Gauss–Legendre for a complex-valued integrand on `[a, b]`.
pub fn gauss_legendre_adaptive_c<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64) -> Estimate<Complex64> {
    if a == b {
        return Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
        };
    }
    let whole = panel(&f, a, b);
    let tol = PANEL_TOL * whole.norm().max(1.0);
    let mut err = 0.0;
    let value = adapt(&f, a, b, whole, tol, whole.norm(), 0, &mut err);
    Estimate { value, error: err }
}

/// Adaptive 15-point Gauss–Legendre for a real integrand on `[a, b]`.
pub fn integrate_regular<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    gauss_legendre_adaptive_c(|x| Complex64::new(f(x), 0.0), a, b).value.re
}

/// Straight-segment integral from `e` to `p` of an integrand with at worst an
/// inverse square-root singularity at `e`, via `z = e + (p - e) s^2`.
pub fn integrate_from_branch<F: Fn(Complex64) -> Complex64>(
    f: F,
    e: Complex64,
    p: Complex64,
) -> Complex64 {
    let d = p - e;
    gauss_legendre_adaptive_c(|s| f(e + d * (s * s)) * (2.0 * s) * d, 0.0, 1.0).value
}

/// Same as [`integrate_from_branch`] for an integrand written as
/// `f(z) / sqrt(z - e)` with `f` regular at `e`; the singular factor is
/// applied exactly, so no cancellation occurs in `z - e`.
pub fn integrate_from_branch_split<F: Fn(Complex64) -> Complex64>(
    f: F,
    e: Complex64,
    p: Complex64,
) -> Complex64 {
    let d = p - e;
    let sd = crate::abelian::sqrt_up(d);
    gauss_legendre_adaptive_c(|s| f(e + d * (s * s)) * 2.0 * sd, 0.0, 1.0).value
}

/// Straight-segment integral of a regular integrand from `p` to `q`.
pub fn integrate_segment<F: Fn(Complex64) -> Complex64>(
    f: F,
    p: Complex64,
    q: Complex64,
) -> Complex64 {
    let d = q - p;
    gauss_legendre_adaptive_c(|s| f(p + d * s) * d, 0.0, 1.0).value
}

/// Polyline path in the closed upper half-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub nodes: Vec<Complex64>,
    /// Integrand has an integrable square-root singularity at the first node.
    pub singular_start: bool,
    /// Integrand has an integrable square-root singularity at the last node.
    pub singular_end: bool,
}

impl Path {
    pub fn new(nodes: Vec<Complex64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Geometry("path needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Geometry("repeated path node".into()));
        }
        Ok(Path {
            nodes,
            singular_start: false,
            singular_end: false,
        })
    }

    /// Vertical lift to height `h`, horizontal traverse, vertical descent
    /// (the descent stops at `end` if it lies above the real axis).
    pub fn lift(start: Complex64, end: Complex64, h: f64) -> Result<Self> {
        let mut nodes = vec![start];
        let up = Complex64::new(start.re, start.im.max(h));
        if up != start {
            nodes.push(up);
        }
        let over = Complex64::new(end.re, up.im);
        if over != *nodes.last().unwrap() {
            nodes.push(over);
        }
        if end != *nodes.last().unwrap() {
            nodes.push(end);
        }
        if nodes.len() < 2 {
            nodes.push(end);
        }
        Path::new(nodes)
    }

    pub fn with_singular_start(mut self) -> Self {
        self.singular_start = true;
        self
    }

    pub fn with_singular_end(mut self) -> Self {
        self.singular_end = true;
        self
    }

    /// Check that no segment meets `E` except at the two path ends.
    pub fn check_avoids(&self, e: &BandSystem) -> Result<()> {
        let n = self.nodes.len();
        for (i, w) in self.nodes.windows(2).enumerate() {
            let (p, q) = (w[0], w[1]);
            if p.im < 0.0 || q.im < 0.0 {
                return Err(Error::Geometry("path leaves the closed upper half-plane".into()));
            }
            if p.im == 0.0 && q.im == 0.0 {
                let (lo, hi) = (p.re.min(q.re), p.re.max(q.re));
                for (l, r) in e.bands() {
                    if lo < r && hi > l {
                        return Err(Error::Geometry(format!(
                            "segment [{lo}, {hi}] runs along the band [{l}, {r}]"
                        )));
                    }
                }
            }
            let interior_hits = |z: Complex64, is_end: bool| z.im == 0.0 && !is_end && e.contains(z.re);
            if interior_hits(p, i == 0) || interior_hits(q, i + 2 == n) {
                return Err(Error::Geometry("path passes through E".into()));
            }
        }
        Ok(())
    }
}

/// Integrate `f` along `path`. Singular first/last segments use the
/// square-root substitution at the corresponding endpoint.
pub fn integrate_path<F: Fn(Complex64) -> Complex64>(f: F, path: &Path) -> Result<Complex64> {
    let n = path.nodes.len();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, w) in path.nodes.windows(2).enumerate() {
        let (p, q) = (w[0], w[1]);
        let first = i == 0 && path.singular_start;
        let last = i + 2 == n && path.singular_end;
        let v = match (first, last) {
            (false, false) => integrate_segment(&f, p, q),
            (true, false) => integrate_from_branch(&f, p, q),
            (false, true) => -integrate_from_branch(&f, q, p),
            (true, true) => {
                let m = 0.5 * (p + q);
                integrate_from_branch(&f, p, m) - integrate_from_branch(&f, q, m)
            }
        };
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Accuracy {
                msg: format!("non-finite integral on segment {i}"),
                estimate: f64::NAN,
            });
        }
        total += v;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn chebyshev_moments() {
        assert!((integrate_band(|_| 1.0, -1.0, 1.0).unwrap() - PI).abs() < 1e-14);
        assert!((integrate_band(|x| x * x, -1.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn regular_rule() {
        let v = integrate_regular(|x| 1.0 / (x * x + 1.0), 0.0, 1.0);
        assert!((v - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_weights_sum() {
        let (_, w) = gauss_legendre::<15>();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
