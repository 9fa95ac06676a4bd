//! Brute-force extremal derivative values by semi-infinite linear programming.

pub mod lp;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::extremal_poly::PolyEval;
use crate::geometry::{Instance, Kind};
use crate::{Error, Result};

use lp::{lp_solve, LpSpec};

/// Constraint set for the oracle: real bands or unit-circle arcs.
pub type Support = Instance;

/// Exchange stops once the modulus constraints hold on `E` to this slack.
pub const EXCHANGE_TOL: f64 = 1e-7;
pub const MAX_ROUNDS: usize = 50;

fn cheb_nodes(l: f64, r: f64, m: usize) -> impl Iterator<Item = f64> {
    (0..=m).map(move |k| 0.5 * (l + r) - 0.5 * (r - l) * (PI * k as f64 / m as f64).cos())
}

pub(crate) fn golden_max<F: Fn(f64) -> f64 + ?Sized>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

impl Instance {
    /// Parameter intervals: `x` for bands, angle for arcs.
    pub fn pieces(&self) -> Result<Vec<(f64, f64)>> {
        match self {
            Instance::Bands(e) => {
                if e.kind() == Kind::S {
                    return Err(Error::Domain("unbounded sets have no polynomial oracle".into()));
                }
                Ok(e.bands())
            }
            Instance::Arcs(a) => Ok(a.arcs()),
        }
    }

    pub fn point(&self, t: f64) -> Complex64 {
        match self {
            Instance::Bands(_) => Complex64::new(t, 0.0),
            Instance::Arcs(_) => Complex64::from_polar(1.0, t),
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, Instance::Bands(_))
    }

    /// Distance-based membership test.
    pub fn contains_point(&self, z: Complex64, tol: f64) -> bool {
        match self {
            Instance::Bands(e) => z.im.abs() <= tol && e.contains(z.re),
            Instance::Arcs(a) => {
                if (z.norm() - 1.0).abs() > tol {
                    return false;
                }
                let th = z.arg();
                a.arcs().iter().any(|&(l, r)| {
                    (-1..=1).any(|k| {
                        let t = th + k as f64 * TAU;
                        t >= l - tol && t <= r + tol
                    })
                })
            }
        }
    }

    /// Chebyshev-distributed points including the piece ends.
    pub fn grid(&self, per_piece: usize) -> Vec<Complex64> {
        let full = matches!(self, Instance::Arcs(a) if a.gaps().is_empty());
        let mut out = Vec::new();
        for (l, r) in self.pieces().unwrap_or_default() {
            if full {
                out.extend((0..per_piece).map(|k| self.point(l + (r - l) * k as f64 / per_piece as f64)));
            } else {
                out.extend(cheb_nodes(l, r, per_piece.max(1)).map(|t| self.point(t)));
            }
        }
        out
    }

    /// Local maxima of `f` on the support (piece ends count), refined by golden section.
    pub fn local_maxima(&self, f: &dyn Fn(Complex64) -> f64, per_piece: usize) -> Vec<(Complex64, f64)> {
        let m = per_piece.max(2);
        let mut out = Vec::new();
        for (l, r) in self.pieces().unwrap_or_default() {
            let ts: Vec<f64> = cheb_nodes(l, r, m).collect();
            let vals: Vec<f64> = ts.iter().map(|&t| f(self.point(t))).collect();
            for k in 0..=m {
                let left = if k > 0 { vals[k - 1] } else { f64::NEG_INFINITY };
                let right = if k < m { vals[k + 1] } else { f64::NEG_INFINITY };
                if vals[k] < left || vals[k] < right {
                    continue;
                }
                if k == 0 || k == m {
                    out.push((self.point(ts[k]), vals[k]));
                } else {
                    let g = |t: f64| f(self.point(t));
                    let (t, v) = golden_max(&g, ts[k - 1], ts[k + 1]);
                    if v >= vals[k] {
                        out.push((self.point(t), v));
                    } else {
                        out.push((self.point(ts[k]), vals[k]));
                    }
                }
            }
        }
        out
    }

    /// First `count` basis functions at `z`: Chebyshev on the hull for bands,
    /// powers of `z` for arcs.
    pub fn basis_values(&self, count: usize, z: Complex64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(count);
        match self {
            Instance::Bands(e) => {
                let (mid, half) = e.hull().unwrap_or((0.0, 1.0));
                let u = (z - mid) / half;
                let (mut a, mut b) = (Complex64::new(1.0, 0.0), u);
                for k in 0..count {
                    if k == 0 {
                        out.push(a);
                    } else {
                        out.push(b);
                        let c = 2.0 * u * b - a;
                        a = b;
                        b = c;
                    }
                }
            }
            Instance::Arcs(_) => {
                let mut p = Complex64::new(1.0, 0.0);
                for _ in 0..count {
                    out.push(p);
                    p *= z;
                }
            }
        }
        out
    }
}

/// Polynomial basis orthonormalized on a sample set by the Arnoldi process.
#[derive(Debug, Clone, PartialEq)]
pub struct ArnoldiBasis {
    /// `h[k]` holds the recurrence coefficients producing `q_{k+1}`.
    h: Vec<Vec<Complex64>>,
}

impl ArnoldiBasis {
    /// Basis of degree `< count` on `pts`.
    pub fn new(pts: &[Complex64], count: usize) -> Result<Self> {
        let m = pts.len();
        if m < count {
            return Err(Error::Validation(format!("{m} sample points for {count} basis functions")));
        }
        let mf = m as f64;
        let mut q: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0); m]];
        let mut h = Vec::new();
        for k in 0..count.saturating_sub(1) {
            let mut v: Vec<Complex64> = pts.iter().zip(&q[k]).map(|(x, y)| x * y).collect();
            let mut hk = vec![Complex64::new(0.0, 0.0); k + 2];
            for _ in 0..2 {
                for j in 0..=k {
                    let c: Complex64 = q[j].iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<Complex64>() / mf;
                    hk[j] += c;
                    for (vi, qi) in v.iter_mut().zip(&q[j]) {
                        *vi -= c * qi;
                    }
                }
            }
            let nrm = (v.iter().map(|c| c.norm_sqr()).sum::<f64>() / mf).sqrt();
            if !(nrm > 1e-13) {
                return Err(Error::Conditioning(1.0 / nrm));
            }
            hk[k + 1] = Complex64::new(nrm, 0.0);
            q.push(v.into_iter().map(|c| c / nrm).collect());
            h.push(hk);
        }
        Ok(ArnoldiBasis { h })
    }

    pub fn len(&self) -> usize {
        self.h.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self, z: Complex64) -> Vec<Complex64> {
        let mut q = Vec::with_capacity(self.len());
        q.push(Complex64::new(1.0, 0.0));
        for (k, hk) in self.h.iter().enumerate() {
            let mut v = z * q[k];
            for j in 0..=k {
                v -= hk[j] * q[j];
            }
            q.push(v / hk[k + 1]);
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Facets of the outer polygon replacing `|P| <= 1` (complex case);
    /// `0` cuts at the exact argument of each violation instead.
    pub facets: usize,
    /// Initial points per piece as a multiple of `n` (at least 64).
    pub grid_factor: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            facets: 64,
            grid_factor: 30,
        }
    }
}

/// Extremal polynomial `P = (z - z0) S` with `S` expanded in an Arnoldi basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalResult {
    pub n: usize,
    pub z0: Complex64,
    /// Certified bracket for `A_n(z0; E)`.
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    /// `max_E |P|` of the LP solution.
    pub sup_e: f64,
    pub contact: Vec<Complex64>,
    /// Total simplex iterations.
    pub iterations: usize,
    pub rounds: usize,
    basis: ArnoldiBasis,
    coeffs: Vec<Complex64>,
}

impl ExtremalResult {
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `|P'(z0)|` of the LP solution.
    pub fn derivative_at_pole(&self) -> f64 {
        self.s(self.z0).norm()
    }

    fn s(&self, z: Complex64) -> Complex64 {
        self.basis.values(z).iter().zip(&self.coeffs).map(|(q, c)| q * c).sum()
    }
}

impl PolyEval for ExtremalResult {
    fn eval(&self, z: Complex64) -> Complex64 {
        (z - self.z0) * self.s(z)
    }

    fn degree(&self) -> usize {
        self.n
    }
}

fn nv_count(real: bool, n: usize) -> usize {
    if real {
        n
    } else {
        2 * n
    }
}

struct Cut {
    /// Basis values times `(x - z0)`.
    row: Vec<Complex64>,
    /// Cut angles.
    facets: Vec<f64>,
}

/// `A_n(z0; E) = sup { |P'(z0)| : deg P <= n, |P| <= 1 on E, P(z0) = 0 }`.
pub fn extremal_deriv(support: &Support, n: usize, z0: Complex64, opts: OracleOptions) -> Result<ExtremalResult> {
    if n == 0 {
        return Err(Error::Validation("degree must be at least 1".into()));
    }
    support.pieces()?;
    if support.contains_point(z0, 1e-12) {
        return Err(Error::Domain(format!("z0 = {z0} lies on E")));
    }
    let real = support.is_real() && z0.im == 0.0;
    let adaptive = !real && opts.facets == 0;
    let k_facets = if real {
        2
    } else if adaptive {
        4
    } else {
        (opts.facets.max(8) / 4) * 4
    };
    let theta = |k: usize| TAU * k as f64 / k_facets as f64;
    let per = (opts.grid_factor * n).max(64);
    let pts = support.grid(per);
    let basis = ArnoldiBasis::new(&pts, n)?;

    // Real variables: re parts of S's coefficients, then im parts unless real.
    let at_pole = basis.values(z0);
    let mut objective: Vec<f64> = at_pole.iter().map(|q| q.re).collect();
    if !real {
        objective.extend(at_pole.iter().map(|q| -q.im));
    }
    let oscale = objective.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let objective: Vec<f64> = objective.iter().map(|v| v / oscale).collect();

    let make_cut = |x: Complex64| -> Cut {
        let row: Vec<Complex64> = basis.values(x).into_iter().map(|q| (x - z0) * q).collect();
        Cut {
            row,
            facets: Vec::new(),
        }
    };
    let lp_row = |c: &Cut, k: f64| -> Vec<f64> {
        let rot = Complex64::from_polar(1.0, -k);
        let mut r: Vec<f64> = c.row.iter().map(|w| (rot * w).re).collect();
        if !real {
            r.extend(c.row.iter().map(|w| -(rot * w).im));
        }
        r
    };
    let initial: Vec<f64> = if real {
        vec![0.0, PI]
    } else {
        (0..4).map(|j| theta(j * k_facets / 4)).collect()
    };
    let mut cuts: Vec<Cut> = pts
        .par_iter()
        .map(|&x| {
            let mut c = make_cut(x);
            c.facets = initial.clone();
            c
        })
        .collect();

    // Polygon gauge: the largest facet functional.
    let gauge = |p: Complex64| -> f64 {
        if adaptive {
            p.norm()
        } else if real {
            p.re.abs()
        } else {
            let step = TAU / k_facets as f64;
            let a = p.arg().rem_euclid(TAU);
            let off = a - step * (a / step).round();
            p.norm() * off.cos()
        }
    };
    let nearest = |p: Complex64| -> f64 {
        if real {
            if p.re >= 0.0 {
                0.0
            } else {
                PI
            }
        } else if adaptive {
            p.arg()
        } else {
            let step = TAU / k_facets as f64;
            theta(((p.arg().rem_euclid(TAU) / step).round() as usize) % k_facets)
        }
    };
    let has = |f: &[f64], k: f64| !adaptive && f.iter().any(|&a| a == k);

    // Coefficient box, far outside what |P| <= 1 on the grid allows.
    let dist = pts.iter().map(|x| (x - z0).norm()).fold(f64::INFINITY, f64::min);
    let bound = 1e3 * (1.0 + 1.0 / dist) * (nv_count(real, n) as f64).sqrt();
    let mut iterations = 0;
    let mut last_upper = f64::NAN;
    for round in 1..=MAX_ROUNDS {
        let mut spec = LpSpec::new(objective.clone());
        for k in 0..objective.len() {
            let mut e = vec![0.0; objective.len()];
            // Scaled so every row has right-hand side 1.
            e[k] = 1.0 / bound;
            spec.add_le(e.clone(), 1.0);
            e[k] = -1.0 / bound;
            spec.add_le(e, 1.0);
        }
        for c in &cuts {
            for &k in &c.facets {
                spec.add_le(lp_row(c, k), 1.0);
            }
        }
        let sol = lp_solve(&spec)?;
        iterations += sol.iterations;
        if sol.x.iter().any(|v| v.abs() > 0.5 * bound) {
            return Err(Error::Conditioning(bound));
        }
        let xs = sol.x.clone();
        let coeffs: Vec<Complex64> = if real {
            xs.iter().map(|&a| Complex64::new(a, 0.0)).collect()
        } else {
            (0..n).map(|j| Complex64::new(xs[j], xs[n + j])).collect()
        };
        let upper = sol.optimum * oscale;
        last_upper = upper;
        let s_eval = |x: Complex64| -> Complex64 {
            basis.values(x).iter().zip(&coeffs).map(|(q, c)| q * c).sum()
        };
        let p_eval = |x: Complex64| (x - z0) * s_eval(x);

        let mut added = 0;
        for c in cuts.iter_mut() {
            let p: Complex64 = c.row.iter().zip(&coeffs).map(|(w, a)| w * a).sum();
            if gauge(p) > 1.0 + 1e-12 {
                let k = nearest(p);
                if !has(&c.facets, k) {
                    c.facets.push(k);
                    added += 1;
                }
            }
        }
        let g = |x: Complex64| gauge(p_eval(x));
        let peaks = support.local_maxima(&g, 4 * per);
        let worst = peaks.iter().map(|p| p.1).fold(0.0, f64::max);
        let mut fresh: Vec<Cut> = peaks
            .iter()
            .filter(|p| p.1 > 1.0 + 0.1 * EXCHANGE_TOL)
            .map(|&(x, _)| {
                let mut c = make_cut(x);
                let k = nearest(p_eval(x));
                c.facets = initial.clone();
                if !has(&c.facets, k) {
                    c.facets.push(k);
                }
                c
            })
            .collect();
        added += fresh.len();
        cuts.append(&mut fresh);

        if worst <= 1.0 + EXCHANGE_TOL || added == 0 {
            let modulus = |x: Complex64| p_eval(x).norm();
            let maxima = support.local_maxima(&modulus, 4 * per);
            let sup_e = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
            let lower = upper / sup_e.max(1.0);
            let contact = maxima
                .iter()
                .filter(|m| m.1 >= 1.0 - EXCHANGE_TOL)
                .map(|m| m.0)
                .collect();
            return Ok(ExtremalResult {
                n,
                z0,
                lower,
                upper,
                value: 0.5 * (lower + upper),
                sup_e,
                contact,
                iterations,
                rounds: round,
                basis,
                coeffs,
            });
        }
    }
    Err(Error::Accuracy {
        msg: format!("constraint exchange did not settle in {MAX_ROUNDS} rounds"),
        estimate: last_upper,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub scaled: f64,
    pub predicted: f64,
    pub ratio: f64,
}

/// Oracle values over `n_list`, scaled by `scale(n)` and compared with
/// `predicted(n)`. Rows come back in the order of `n_list`.
pub fn convergence_sweep(
    support: &Support,
    z0: Complex64,
    n_list: &[usize],
    opts: OracleOptions,
    scale: &(dyn Fn(usize) -> f64 + Sync),
    predicted: &(dyn Fn(usize) -> Result<f64> + Sync),
) -> Result<Vec<SweepRow>> {
    n_list
        .par_iter()
        .map(|&n| {
            let r = extremal_deriv(support, n, z0, opts)?;
            let s = scale(n);
            let p = predicted(n)?;
            let scaled = r.value * s;
            Ok(SweepRow {
                n,
                lower: r.lower,
                upper: r.upper,
                value: r.value,
                scaled,
                predicted: p,
                ratio: scaled / p,
            })
        })
        .collect()
}
