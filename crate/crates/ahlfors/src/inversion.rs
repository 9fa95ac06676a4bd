//! Real inversion on the gap torus and the generalized inversion problem
//! for a complex evaluation point.
//!
//! Gap points are handled in the cosine chart `t = sin^2(pi s / 2)`, which
//! absorbs the square-root behaviour of the harmonic measures at the gap
//! ends. `s` is read mod 1 on the torus, matching the identification of the
//! two ends of a gap.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::abelian::{basis_differentials, circle_dist, CharacterVector, DifferentialBasis};
use crate::geometry::{BandSystem, GapPoint, Kind, Position};
use crate::quadrature::integrate_regular;
use crate::{Error, Result};

/// Residual target for both inversion problems.
pub const INVERSION_TOL: f64 = 1e-10;
/// Number of samples of the outer-gap coordinate in [`gaji_solve`].
pub const OUTER_SAMPLES: usize = 64;

fn wrap_half(x: f64) -> f64 {
    x - x.round()
}

fn t_of_s(s: f64) -> f64 {
    let h = (0.5 * PI * s).sin();
    h * h
}

fn s_of_t(t: f64) -> f64 {
    2.0 / PI * t.clamp(0.0, 1.0).sqrt().asin()
}

fn wrap_s(s: f64) -> f64 {
    let w = s - s.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Harmonic measures of the point of gap `gap` with chart parameter `s`.
///
/// Offsets from the nearer gap end are formed from `s` directly, so points
/// within rounding distance of a branch point keep full accuracy. Far points
/// of the outer J gap are integrated from infinity.
fn measures_s(basis: &DifferentialBasis, gap: usize, s: f64, at_inf: &[f64]) -> Result<Vec<f64>> {
    let e = basis.system();
    let sn = (0.5 * PI * s).sin().powi(2);
    let cs = (0.5 * PI * s).cos().powi(2);
    if gap > 0 {
        let g = e.gap(gap);
        let h = g.b - g.a;
        return Ok(if s <= 0.5 {
            basis.measures_at_offset(2 * gap - 1, h * sn)
        } else {
            basis.measures_at_offset(2 * gap, -h * cs)
        });
    }
    match e.kind() {
        Kind::S => Ok(basis.measures_at_offset(0, -sn / cs)),
        Kind::J => {
            let (mid, half) = e.hull().unwrap();
            let d = (PI * s).cos();
            if d.abs() >= 0.25 {
                let last = 2 * basis.g() + 1;
                return Ok(if d > 0.0 {
                    basis.measures_at_offset(last, 2.0 * half * sn / d)
                } else {
                    basis.measures_at_offset(0, 2.0 * half * cs / d)
                });
            }
            let rad = basis.radical();
            let sign = basis.sign();
            Ok((1..=basis.g())
                .map(|k| {
                    let f = |w: f64| -> f64 {
                        if w == 0.0 {
                            return 0.0;
                        }
                        let z = Complex64::new(mid + half / w, 0.0);
                        (basis.q_eval(k, z) / rad.eval(z)).re * (-half / (w * w))
                    };
                    at_inf[k - 1] + sign * 2.0 * integrate_regular(f, 0.0, d)
                })
                .collect())
        }
    }
}

fn infinity_measures(basis: &DifferentialBasis) -> Result<Vec<f64>> {
    if basis.system().kind() != Kind::J {
        return Ok(vec![0.0; basis.g()]);
    }
    (1..=basis.g())
        .map(|k| basis.harmonic_measure_at_infinity(k))
        .collect()
}

/// Newton solver for `sum_j omega(x_j, E_k) = beta_k (mod 1)` with `x_j` in
/// the finite gaps.
struct TorusSolver<'a> {
    basis: &'a DifferentialBasis,
}

impl<'a> TorusSolver<'a> {
    fn point(&self, j: usize, s: f64) -> GapPoint {
        GapPoint::new(j + 1, t_of_s(wrap_s(s)))
    }

    fn character(&self, s: &[f64]) -> Result<Vec<f64>> {
        let g = self.basis.g();
        let mut acc = vec![0.0; g];
        for (j, &sj) in s.iter().enumerate() {
            let m = measures_s(self.basis, j + 1, wrap_s(sj), &[])?;
            for k in 0..g {
                acc[k] += m[k];
            }
        }
        Ok(acc)
    }

    fn residual(&self, s: &[f64], target: &[f64]) -> Result<(Vec<f64>, f64)> {
        let c = self.character(s)?;
        let f: Vec<f64> = c.iter().zip(target).map(|(a, b)| wrap_half(a - b)).collect();
        let n = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((f, n))
    }

    /// `d omega_k / d s_j` from the regular factor of `R` on the gap.
    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let g = self.basis.g();
        let rad = self.basis.radical();
        let sign = self.basis.sign();
        let mut jac = DMatrix::zeros(g, g);
        for j in 0..g {
            let (phase, rho) = rad.segment_factor(rad.gap_segment(j + 1));
            let x = self.point(j, s[j]).position(self.basis.system());
            let x = match x {
                Position::Finite(v) => v,
                Position::Infinity => unreachable!("finite gap"),
            };
            let r = phase.re * rho(x);
            for k in 1..=g {
                let q = self.basis.q_eval(k, Complex64::new(x, 0.0)).re;
                jac[(k - 1, j)] = sign * 2.0 * PI * q / r;
            }
        }
        jac
    }

    fn newton(&self, target: &[f64], mut s: Vec<f64>, tol: f64) -> Result<(Vec<f64>, f64)> {
        let (mut f, mut res) = self.residual(&s, target)?;
        for _ in 0..40 {
            if res < tol {
                break;
            }
            let jac = self.jacobian(&s);
            let rhs = DVector::from_iterator(f.len(), f.iter().map(|v| -v));
            let step = match jac.lu().solve(&rhs) {
                Some(d) => d,
                None => break,
            };
            let big = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut lam = if big > 0.25 { 0.25 / big } else { 1.0 };
            let mut accepted = false;
            while lam > 1.0 / 1024.0 {
                let trial: Vec<f64> = s
                    .iter()
                    .zip(step.iter())
                    .map(|(a, d)| wrap_s(a + lam * d))
                    .collect();
                let (tf, tr) = self.residual(&trial, target)?;
                if tr < res {
                    s = trial;
                    f = tf;
                    res = tr;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok((s, res))
    }

    /// Continuation from the character of `start` to `beta`.
    fn solve_from(&self, beta: &[f64], start: &[f64]) -> Result<(Vec<f64>, f64)> {
        let b0 = self.character(start)?;
        let d: Vec<f64> = beta.iter().zip(&b0).map(|(b, a)| wrap_half(b - a)).collect();
        let mut best = (start.to_vec(), f64::INFINITY);
        for &n in &[1usize, 8, 32] {
            let mut cur = start.to_vec();
            let mut res = f64::INFINITY;
            let mut ok = true;
            for i in 1..=n {
                let lam = i as f64 / n as f64;
                let target: Vec<f64> = b0.iter().zip(&d).map(|(a, dd)| a + lam * dd).collect();
                let tol = if i == n { 1e-14 } else { 1e-9 };
                let (c, r) = self.newton(&target, cur, tol)?;
                cur = c;
                res = r;
                if i < n && r > 1e-6 {
                    ok = false;
                    break;
                }
            }
            if res < best.1 {
                best = (cur.clone(), res);
            }
            if ok && res < 1e-12 {
                return Ok((cur, res));
            }
        }
        Ok(best)
    }

    fn solve(&self, beta: &[f64], warm: Option<&[f64]>) -> Result<Vec<f64>> {
        let g = self.basis.g();
        let mid = vec![0.5; g];
        let first = warm.unwrap_or(&mid);
        let (s, res) = self.solve_from(beta, first)?;
        if res < INVERSION_TOL {
            return Ok(s);
        }
        // Multistart over a coarse grid of the torus.
        let per: usize = if g <= 2 { 8 } else { 4 };
        let total = per.pow(g as u32);
        let mut best = (s, res);
        for idx in 0..total {
            let mut start = Vec::with_capacity(g);
            let mut r = idx;
            for _ in 0..g {
                start.push((r % per) as f64 / per as f64 + 0.5 / per as f64);
                r /= per;
            }
            let (c, res) = self.solve_from(beta, &start)?;
            if res < INVERSION_TOL {
                return Ok(c);
            }
            if res < best.1 {
                best = (c, res);
            }
        }
        Err(Error::Solver {
            msg: "real inversion stagnated after continuation and multistart".into(),
            residual: best.1,
        })
    }
}

/// Points `x_1, ..., x_g` (one per finite gap) with
/// `sum_j omega(x_j, E_k) = beta_k (mod 1)`.
pub fn real_inversion(basis: &DifferentialBasis, beta: &CharacterVector) -> Result<Vec<GapPoint>> {
    real_inversion_warm(basis, beta, None)
}

/// [`real_inversion`] started from a nearby solution.
pub fn real_inversion_warm(
    basis: &DifferentialBasis,
    beta: &CharacterVector,
    warm: Option<&[GapPoint]>,
) -> Result<Vec<GapPoint>> {
    let g = basis.g();
    if beta.g() != g {
        return Err(Error::Validation(format!(
            "character has {} entries, genus is {g}",
            beta.g()
        )));
    }
    let solver = TorusSolver { basis };
    let warm_s: Option<Vec<f64>> = warm.map(|w| w.iter().map(|p| s_of_t(p.t)).collect());
    let s = solver.solve(beta.values(), warm_s.as_deref())?;
    Ok(s.iter()
        .enumerate()
        .map(|(j, &sj)| solver.point(j, sj))
        .collect())
}

/// Poisson masses seen from `z0 = u + iv` on the gaps.
struct Poisson<'a> {
    e: &'a BandSystem,
    u: f64,
    v: f64,
}

impl<'a> Poisson<'a> {
    fn p(&self, x: f64) -> f64 {
        ((x - self.u) / self.v).atan() / PI
    }

    /// Outer J gap: `P` lifted continuously along `a0 -> inf -> b0` in `t`.
    fn p_outer(&self, t: f64) -> f64 {
        let (mid, half) = self.e.hull().unwrap();
        let d = 1.0 - 2.0 * t;
        let n = (mid - self.u) * d + half;
        0.5 - (self.v * d).atan2(n) / PI
    }

    /// `2 m[a_j, x_j] - m[a_j, b_j]`, where `m` is the harmonic measure of
    /// the upper half-plane at `z0`.
    fn term(&self, p: &GapPoint) -> f64 {
        if p.gap == 0 {
            match self.e.kind() {
                Kind::J => {
                    let lo = self.p_outer(0.0);
                    2.0 * (self.p_outer(p.t) - lo) - (self.p_outer(1.0) - lo)
                }
                Kind::S => {
                    let left = match p.position(self.e) {
                        Position::Finite(x) => self.p(x) + 0.5,
                        Position::Infinity => 0.0,
                    };
                    2.0 * left - (self.p(0.0) + 0.5)
                }
            }
        } else {
            let g = self.e.gap(p.gap);
            let x = g.a + p.t * (g.b - g.a);
            let pa = self.p(g.a);
            2.0 * (self.p(x) - pa) - (self.p(g.b) - pa)
        }
    }

    fn balance(&self, xs: &[GapPoint]) -> f64 {
        xs.iter().map(|p| self.term(p)).sum()
    }
}

/// One solution of the generalized inversion problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionSolution {
    /// `x_0` (outer gap) followed by `x_1, ..., x_g`.
    pub x: Vec<GapPoint>,
    pub positions: Vec<Position>,
    /// Largest circle distance between `sum_j omega(x_j, E_k)` and `beta_k`.
    pub cs1_residual: f64,
    /// Poisson-mass balance `sum_j (m[a_j,x_j] - m[x_j,b_j])`.
    pub cs2_residual: f64,
    pub rho: f64,
    pub rho_t2: f64,
    /// `|Im rho| / |rho|` before taking the real part.
    pub realness_defect: f64,
}

impl InversionSolution {
    pub fn rho2(&self) -> f64 {
        self.rho * self.rho
    }

    pub fn valid(&self) -> bool {
        self.rho2() < self.rho_t2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GajiResult {
    pub solutions: Vec<InversionSolution>,
    pub multivalued: bool,
    /// Sign changes of the balance caused by a finite point crossing the
    /// identified gap ends (not solutions).
    pub jumps: usize,
}

/// `U_X(z)` with the outer factor normalized so that it stays bounded as
/// `x_0` passes through infinity.
fn u_x(e: &BandSystem, pos: &[Position], z: Complex64) -> Result<Complex64> {
    let mut p = Complex64::new(1.0, 0.0);
    for (j, x) in pos.iter().enumerate() {
        match (j, x) {
            (0, Position::Infinity) => p *= -1.0,
            (0, Position::Finite(x0)) if e.kind() == Kind::J => {
                let (mid, _) = e.hull().unwrap();
                p *= (z - x0) / (x0 - mid);
            }
            (_, Position::Finite(v)) => p *= z - v,
            (_, Position::Infinity) => {
                return Err(Error::Domain("finite gap point at infinity".into()))
            }
        }
    }
    Ok(p)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
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
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `rho~^2(X) = -sup_E U_X^2 / T = inf_E U_X^2 / |T|` (with `T = R^2 < 0` on
/// `E`), by a per-band grid followed by golden-section refinement.
pub fn rho_tilde2(e: &BandSystem, pos: &[Position]) -> Result<f64> {
    let rad = crate::abelian::Radical::new(e);
    let ratio = |x: f64| -> f64 {
        let z = Complex64::new(x, 0.0);
        match u_x(e, pos, z) {
            Ok(u) => u.norm_sqr() / rad.square(z).re.abs(),
            Err(_) => f64::INFINITY,
        }
    };
    let bands = e.bands();
    let mut best = f64::INFINITY;
    for (l, r) in bands {
        // Chart on the band: cosine for finite bands, x = l + w/(1-w) for
        // the unbounded S band.
        let chart = |w: f64| -> f64 {
            if r.is_finite() {
                0.5 * (l + r) - 0.5 * (r - l) * (PI * w).cos()
            } else {
                l + w / (1.0 - w)
            }
        };
        let f = |w: f64| ratio(chart(w));
        let n = 96;
        let mut arg = 0;
        let mut val = f64::INFINITY;
        for i in 0..n {
            let w = (i as f64 + 0.5) / n as f64;
            let v = f(w);
            if v < val {
                val = v;
                arg = i;
            }
        }
        let lo = arg as f64 / n as f64;
        let hi = (arg as f64 + 1.0) / n as f64;
        let lo = (lo - 0.5 / n as f64).max(1e-12);
        let hi = (hi + 0.5 / n as f64).min(1.0 - 1e-12);
        let (_, v) = golden_min(&f, lo, hi);
        best = best.min(v.min(val));
    }
    Ok(best)
}

/// `rho = i U_X(z0) / R(z0)` and its realness defect.
pub fn rho_from(e: &BandSystem, pos: &[Position], z0: Complex64) -> Result<(f64, f64)> {
    let rad = crate::abelian::Radical::new(e);
    let c = Complex64::new(0.0, 1.0) * u_x(e, pos, z0)? / rad.eval(z0);
    let n = c.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degeneracy("rho is zero or non-finite".into()));
    }
    Ok((c.re, c.im.abs() / n))
}

/// The outer-gap curve: for each outer point, the finite points follow from
/// the real inversion and the balance is a scalar function.
struct OuterCurve<'a> {
    e: &'a BandSystem,
    basis: Option<DifferentialBasis>,
    at_inf: Vec<f64>,
    beta: Vec<f64>,
    poisson: Poisson<'a>,
}

struct CurvePoint {
    s0: f64,
    /// Chart parameters of `x_1, ..., x_g`.
    rest: Vec<f64>,
    xs: Vec<GapPoint>,
    balance: f64,
}

impl<'a> OuterCurve<'a> {
    fn new(e: &'a BandSystem, beta: &CharacterVector, z0: Complex64) -> Result<Self> {
        let g = e.g();
        if beta.g() != g {
            return Err(Error::Validation(format!(
                "character has {} entries, genus is {g}",
                beta.g()
            )));
        }
        let basis = if g > 0 { Some(basis_differentials(e)?) } else { None };
        let at_inf = match &basis {
            Some(b) => infinity_measures(b)?,
            None => Vec::new(),
        };
        Ok(OuterCurve {
            e,
            basis,
            at_inf,
            beta: beta.values().to_vec(),
            poisson: Poisson {
                e,
                u: z0.re,
                v: z0.im,
            },
        })
    }

    fn eval(&self, s0: f64, warm: Option<&[f64]>) -> Result<CurvePoint> {
        let mut xs = vec![GapPoint::new(0, t_of_s(s0))];
        let mut rest = Vec::new();
        if let Some(b) = &self.basis {
            let w0 = measures_s(b, 0, s0, &self.at_inf)?;
            let shifted: Vec<f64> = self.beta.iter().zip(&w0).map(|(a, w)| a - w).collect();
            let solver = TorusSolver { basis: b };
            rest = solver.solve(&shifted, warm)?;
            xs.extend(rest.iter().enumerate().map(|(j, &sj)| solver.point(j, sj)));
        }
        let balance = self.poisson.balance(&xs);
        Ok(CurvePoint {
            s0,
            rest,
            xs,
            balance,
        })
    }

    fn cs1(&self, p: &CurvePoint) -> Result<f64> {
        let Some(b) = &self.basis else {
            return Ok(0.0);
        };
        let mut acc = measures_s(b, 0, p.s0, &self.at_inf)?;
        for (j, &sj) in p.rest.iter().enumerate() {
            for (a, v) in acc.iter_mut().zip(measures_s(b, j + 1, sj, &[])?) {
                *a += v;
            }
        }
        Ok(acc
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| circle_dist(*a, *b))
            .fold(0.0, f64::max))
    }

    fn sample(&self, n: usize) -> Result<Vec<CurvePoint>> {
        let mut out: Vec<CurvePoint> = Vec::with_capacity(n);
        for i in 0..n {
            let s0 = (i as f64 + 0.5) / n as f64;
            let warm = out.last().map(|p| p.rest.clone());
            out.push(self.eval(s0, warm.as_deref())?);
        }
        Ok(out)
    }

    /// Illinois false position on a bracketing pair of curve points.
    fn refine(&self, lo: &CurvePoint, hi: &CurvePoint) -> Result<CurvePoint> {
        let (mut a, mut fa) = (lo.s0, lo.balance);
        let (mut b, mut fb) = (hi.s0, hi.balance);
        let mut warm = lo.rest.clone();
        let mut best = self.eval(a, Some(&warm))?;
        let mut side = 0i32;
        for _ in 0..200 {
            let c = if fb != fa { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
            let c = if c > a.min(b) && c < a.max(b) { c } else { 0.5 * (a + b) };
            let p = self.eval(c, Some(&warm))?;
            let fc = p.balance;
            warm = p.rest.clone();
            let done = fc == 0.0 || (b - a).abs() < 1e-15;
            if fc.abs() < best.balance.abs() || best.s0 == lo.s0 {
                best = p;
            }
            if done {
                break;
            }
            if fc.signum() == fb.signum() {
                b = c;
                fb = fc;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = c;
                fa = fc;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
            if best.balance.abs() < 1e-15 {
                break;
            }
        }
        Ok(best)
    }
}

fn finish(curve: &OuterCurve, p: CurvePoint, z0: Complex64) -> Result<InversionSolution> {
    let positions: Vec<Position> = p.xs.iter().map(|x| x.position(curve.e)).collect();
    let (rho, realness_defect) = rho_from(curve.e, &positions, z0)?;
    let rho_t2 = rho_tilde2(curve.e, &positions)?;
    Ok(InversionSolution {
        cs1_residual: curve.cs1(&p)?,
        cs2_residual: p.balance.abs(),
        x: p.xs,
        positions,
        rho,
        rho_t2,
        realness_defect,
    })
}

/// All solutions of the generalized inversion problem at `z0`, found as the
/// zeros of the mass balance along the outer-gap curve.
pub fn gaji_solve(e: &BandSystem, beta: &CharacterVector, z0: Complex64) -> Result<GajiResult> {
    if !(z0.im > 0.0) || !z0.re.is_finite() || !z0.im.is_finite() {
        return Err(Error::Domain("z0 must lie strictly above the real axis".into()));
    }
    let curve = OuterCurve::new(e, beta, z0)?;
    let mut n = OUTER_SAMPLES;
    loop {
        let r = solve_on_curve(&curve, n, z0)?;
        if r.is_ok() || n >= 16 * OUTER_SAMPLES {
            return r;
        }
        n *= 4;
    }
}

fn solve_on_curve(curve: &OuterCurve, n: usize, z0: Complex64) -> Result<Result<GajiResult>> {
    let samples = curve.sample(n)?;
    let mut solutions = Vec::new();
    let mut jumps = 0;
    for w in samples.windows(2) {
        let (l, r) = (&w[0], &w[1]);
        if l.balance == 0.0 {
            let p = CurvePoint {
                s0: l.s0,
                rest: l.rest.clone(),
                xs: l.xs.clone(),
                balance: 0.0,
            };
            solutions.push(finish(curve, p, z0)?);
            continue;
        }
        if l.balance.signum() == r.balance.signum() {
            continue;
        }
        let p = curve.refine(l, r)?;
        if p.balance.abs() < INVERSION_TOL {
            solutions.push(finish(curve, p, z0)?);
        } else {
            jumps += 1;
        }
    }
    if solutions.is_empty() {
        let best = samples
            .iter()
            .map(|p| p.balance.abs())
            .fold(f64::INFINITY, f64::min);
        return Ok(Err(Error::Solver {
            msg: "no zero of the mass balance along the outer gap".into(),
            residual: best,
        }));
    }
    Ok(Ok(GajiResult {
        multivalued: solutions.len() > 1,
        solutions,
        jumps,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianCheck {
    /// Smallest singular value of the finite-difference Jacobian of the
    /// character and balance equations in the cosine chart.
    pub sigma_min: f64,
    /// `|m_X(z0) - conj(m_X(z0))|` with columns scaled to unit size.
    pub analytic_det: f64,
    pub coalescing: bool,
}

/// Numerical and analytic nondegeneracy of the generalized inversion at `X`.
pub fn jacobian_check(e: &BandSystem, xs: &[GapPoint], z0: Complex64) -> Result<JacobianCheck> {
    let g = e.g();
    if xs.len() != g + 1 {
        return Err(Error::Validation(format!("expected {} points, got {}", g + 1, xs.len())));
    }
    if z0.im <= 0.0 {
        return Err(Error::Domain("z0 must lie in the upper half-plane".into()));
    }
    let basis = if g > 0 { Some(basis_differentials(e)?) } else { None };
    let at_inf = match &basis {
        Some(b) => infinity_measures(b)?,
        None => Vec::new(),
    };
    let poisson = Poisson { e, u: z0.re, v: z0.im };
    let column = |j: usize, s: f64| -> Result<Vec<f64>> {
        let p = GapPoint::new(xs[j].gap, t_of_s(s));
        let mut v = match &basis {
            Some(b) => measures_s(b, xs[j].gap, s, &at_inf)?,
            None => Vec::new(),
        };
        v.push(poisson.term(&p));
        Ok(v)
    };
    let h = 1e-6;
    let mut jac = DMatrix::zeros(g + 1, g + 1);
    for j in 0..=g {
        let s = s_of_t(xs[j].t);
        let (sl, sr) = if s - h < 0.0 {
            (s, s + h)
        } else if s + h > 1.0 {
            (s - h, s)
        } else {
            (s - h, s + h)
        };
        let fl = column(j, sl)?;
        let fr = column(j, sr)?;
        for k in 0..g {
            jac[(k, j)] = wrap_half(fr[k] - fl[k]) / (sr - sl);
        }
        jac[(g, j)] = (fr[g] - fl[g]) / (sr - sl);
    }
    let sigma_min = jac.svd(false, false).singular_values.min();

    // Analytic form: rows u^m (m < g) and R(x_j)/(z0 - x_j), u scaled.
    let rad = crate::abelian::Radical::new(e);
    let bp = e.branch_points();
    let center = 0.5 * (bp[0] + bp[bp.len() - 1]);
    let scale = e.scale();
    let mut m = DMatrix::<Complex64>::zeros(g + 1, g + 1);
    let mut xs_finite = Vec::new();
    for (j, p) in xs.iter().enumerate() {
        let col: Vec<Complex64> = match p.position(e) {
            Position::Infinity => {
                let mut c = vec![Complex64::new(0.0, 0.0); g + 1];
                c[g] = Complex64::new(-1.0, 0.0);
                c
            }
            Position::Finite(x) => {
                xs_finite.push(x);
                let u = (x - center) / scale;
                let mut c: Vec<Complex64> = (0..g).map(|k| Complex64::new(u.powi(k as i32), 0.0)).collect();
                let r = rad.eval(Complex64::new(x, 0.0)).re / scale.powi(g as i32 + 1);
                c.push(Complex64::new(r, 0.0) / ((z0 - x) / scale));
                let mx = c.iter().fold(0.0f64, |a, v| a.max(v.norm()));
                c.iter().map(|v| v / mx).collect()
            }
        };
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    let det = m.determinant();
    let analytic_det = (det - det.conj()).norm();
    xs_finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let coalescing = xs_finite
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() < 1e-8 * scale)
        || xs.iter().any(|p| p.at_endpoint(1e-12));
    Ok(JacobianCheck {
        sigma_min,
        analytic_det,
        coalescing,
    })
}

/// One row of an elliptic bifurcation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationRow {
    pub beta: f64,
    pub branch: usize,
    pub branches: usize,
    pub positions: Vec<Position>,
    pub rho2: f64,
    pub rho_t2: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationScan {
    pub rows: Vec<BifurcationRow>,
    /// Scan values where no branch was found.
    pub gaps: Vec<f64>,
}

impl BifurcationScan {
    /// Scan values with at least two branches.
    pub fn multivalued_betas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.branches >= 2 && r.branch == 0)
            .map(|r| r.beta)
            .collect();
        out.dedup();
        out
    }

    /// Rows where the threshold is crossed.
    pub fn crossings(&self) -> Vec<&BifurcationRow> {
        self.rows.iter().filter(|r| !r.valid).collect()
    }
}

/// Scan `beta_1` over `n` equally spaced values of `[lo, hi]` for a genus-one
/// system, reporting every branch with its threshold comparison.
pub fn bifurcation_scan(
    e: &BandSystem,
    lo: f64,
    hi: f64,
    n: usize,
    z0: Complex64,
) -> Result<BifurcationScan> {
    if e.g() != 1 {
        return Err(Error::Validation("bifurcation scan needs g = 1".into()));
    }
    if n == 0 {
        return Err(Error::Validation("empty scan".into()));
    }
    let betas: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let results: Vec<(f64, Result<GajiResult>)> = betas
        .par_iter()
        .map(|&b| (b, gaji_solve(e, &CharacterVector::new(vec![b]), z0)))
        .collect();
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for (b, r) in results {
        match r {
            Ok(res) => {
                let k = res.solutions.len();
                for (i, s) in res.solutions.iter().enumerate() {
                    rows.push(BifurcationRow {
                        beta: b,
                        branch: i,
                        branches: k,
                        positions: s.positions.clone(),
                        rho2: s.rho2(),
                        rho_t2: s.rho_t2,
                        valid: s.valid(),
                    });
                }
            }
            Err(Error::Solver { .. }) => gaps.push(b),
            Err(err) => return Err(err),
        }
    }
    Ok(BifurcationScan { rows, gaps })
}
