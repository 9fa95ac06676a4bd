//! Closed-form kernels: the function `Omega` of an S system and its half-period
//! variants, Ahlfors functions, m-functions of a divisor, the genus-zero
//! density `Upsilon`, and the asymptotic predictors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::abelian::{basis_differentials, character_of_point, CharacterVector};
use crate::geometry::{BandSystem, GapPoint, Kind, Position};
use crate::inversion::{gaji_solve, real_inversion};
use crate::potential::{Comb, PoleGreen};
use crate::{Error, Result};

/// Sign vector selecting one of the `2^g` variants of `Omega`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(pub Vec<i8>);

impl SignVector {
    pub fn ones(g: usize) -> Self {
        SignVector(vec![1; g])
    }

    /// The `idx`-th vector in binary order (bit set means `-1`).
    pub fn from_index(g: usize, idx: usize) -> Self {
        SignVector((0..g).map(|k| if idx >> k & 1 == 1 { -1 } else { 1 }).collect())
    }
}

fn s_kind(e: &BandSystem) -> Result<()> {
    if e.kind() != Kind::S {
        return Err(Error::Validation("this operation needs an S system".into()));
    }
    Ok(())
}

/// `Omega(z) = (1/sqrt(-z)) prod sqrt((z-a_j)/(z-b_j))`, positive on the
/// negative half-axis, in the upper half-plane.
fn omega_upper(e: &BandSystem, z: Complex64, eps: &[i8]) -> Complex64 {
    let mut w = 1.0 / (-z).sqrt();
    for (k, &(a, b)) in e.finite_gaps().iter().enumerate() {
        let f = (z - a).sqrt() / (z - b).sqrt();
        w *= if eps.get(k).copied().unwrap_or(1) < 0 {
            1.0 / f
        } else {
            f
        };
    }
    w
}

/// `Omega_eps(z)` off `E`; `eps = None` is the canonical all-ones variant.
pub fn omega(e: &BandSystem, z: Complex64, eps: Option<&SignVector>) -> Result<Complex64> {
    s_kind(e)?;
    if z.im == 0.0 && (e.contains(z.re) || e.finite_gaps().iter().any(|&(a, b)| z.re == a || z.re == b)) {
        return Err(Error::Domain(format!("{} is on E; use one-sided limits", z.re)));
    }
    let ones = SignVector::ones(e.g());
    let eps = eps.unwrap_or(&ones);
    if eps.0.len() != e.g() {
        return Err(Error::Validation("sign vector length differs from g".into()));
    }
    Ok(if z.im < 0.0 {
        omega_upper(e, z.conj(), &eps.0).conj()
    } else if z.im == 0.0 {
        // Real points off E: the gaps and the negative half-axis, where
        // the boundary values from both sides agree.
        omega_upper(e, Complex64::new(z.re, 1e-300), &eps.0)
    } else {
        omega_upper(e, z, &eps.0)
    })
}

/// One-sided boundary value `Omega(x + i0)` (or `x - i0` for `upper = false`).
pub fn omega_boundary(e: &BandSystem, x: f64, upper: bool) -> Result<Complex64> {
    s_kind(e)?;
    let w = omega_upper(e, Complex64::new(x, 1e-300), &SignVector::ones(e.g()).0);
    Ok(if upper { w } else { w.conj() })
}

/// Half-period scan: `Im Omega_eps(z0)/|Omega_eps(z0)|` for all sign vectors.
#[derive(Debug, Clone)]
pub struct HalfPeriodScan {
    pub argmin: SignVector,
    pub table: Vec<(SignVector, f64)>,
}

pub fn half_period_scan(e: &BandSystem, z0: Complex64) -> Result<HalfPeriodScan> {
    s_kind(e)?;
    if z0.im <= 0.0 {
        return Err(Error::Domain("z0 must lie in the upper half-plane".into()));
    }
    let g = e.g();
    if g > 12 {
        return Err(Error::Validation("half-period scan limited to g <= 12".into()));
    }
    let mut table = Vec::with_capacity(1 << g);
    for idx in 0..(1usize << g) {
        let s = SignVector::from_index(g, idx);
        let w = omega(e, z0, Some(&s))?;
        table.push((s, w.im / w.norm()));
    }
    let argmin = table
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0
        .clone();
    Ok(HalfPeriodScan { argmin, table })
}

/// Ahlfors function of an S system with zero at `z0`.
#[derive(Debug, Clone)]
pub struct AhlforsFunction {
    e: BandSystem,
    z0: Complex64,
    om0: Complex64,
}

impl AhlforsFunction {
    pub fn new(e: &BandSystem, z0: Complex64) -> Result<Self> {
        s_kind(e)?;
        if z0.im <= 0.0 {
            return Err(Error::Domain("z0 must lie in the upper half-plane".into()));
        }
        Ok(AhlforsFunction {
            e: e.clone(),
            z0,
            om0: omega(e, z0, None)?,
        })
    }

    fn build(&self, z: Complex64, om: Complex64) -> Complex64 {
        let zb = self.z0.conj();
        (z - self.z0) / (z - zb) * (om - self.om0.conj()) / (om + self.om0)
    }

    /// `w(z) = ((z-z0)/(z-conj z0)) (Omega(z) - Omega(conj z0))/(Omega(z) + Omega(z0))`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z == self.z0.conj() {
            return Err(Error::Domain("evaluation at conj(z0)".into()));
        }
        Ok(self.build(z, omega(&self.e, z, None)?))
    }

    /// Boundary value on `E` from above or below.
    pub fn eval_boundary(&self, x: f64, upper: bool) -> Result<Complex64> {
        let om = omega_boundary(&self.e, x, upper)?;
        Ok(self.build(Complex64::new(x, 0.0), om))
    }

    /// `Im Omega(z0) / (2 Im z0 |Omega(z0)|)`.
    pub fn derivative_density(&self) -> f64 {
        self.om0.im / (2.0 * self.z0.im * self.om0.norm())
    }

    /// `|w'(z0)|` by the trapezoid rule for the Cauchy integral on a circle
    /// of radius `Im z0 / 4` with 64 nodes.
    pub fn derivative_numeric(&self) -> Result<f64> {
        let r = 0.25 * self.z0.im;
        let n = 64;
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let th = std::f64::consts::TAU * k as f64 / n as f64;
            let u = Complex64::from_polar(1.0, th);
            s += self.eval(self.z0 + r * u)? / u;
        }
        Ok((s / (n as f64 * r)).norm())
    }
}

/// `K_Omega(z, z0) = (-1/Omega(z) + 1/Omega(conj z0)) / (2 (z - conj z0))`.
pub fn kernel_omega(e: &BandSystem, z: Complex64, z0: Complex64) -> Result<Complex64> {
    let zb = z0.conj();
    Ok((-1.0 / omega(e, z, None)? + 1.0 / omega(e, zb, None)?) / (2.0 * (z - zb)))
}

/// A divisor: one point per finite gap with a sheet sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Divisor {
    pub points: Vec<(f64, i8)>,
}

/// m-functions `m_+- = (-sqrt(-T) +- V_D)/U_D` of a divisor on an S system,
/// with `sqrt(-T) := prod(z - a_j)/Omega(z)`.
#[derive(Debug, Clone)]
pub struct MFunctionData {
    e: BandSystem,
    /// `U_D` roots.
    pub u_roots: Vec<f64>,
    /// `V_D` coefficients of `z^1 .. z^g`.
    pub v: Vec<f64>,
    /// Interpolation residual of `V_D`.
    pub residual: f64,
}

/// `sqrt(-T(z))` with the branch `prod(z - a_j)/Omega(z)`.
pub fn sqrt_minus_t(e: &BandSystem, z: Complex64) -> Result<Complex64> {
    let om = omega(e, z, None)?;
    let p: Complex64 = e
        .finite_gaps()
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &(a, _)| acc * (z - a));
    Ok(p / om)
}

fn sqrt_minus_t_real(e: &BandSystem, x: f64) -> f64 {
    // On gaps and at their endpoints the value is real.
    if e.finite_gaps().iter().any(|&(a, b)| x == a || x == b) {
        return 0.0;
    }
    let om = omega_upper(e, Complex64::new(x, 1e-300), &SignVector::ones(e.g()).0);
    let p: f64 = e.finite_gaps().iter().map(|&(a, _)| x - a).product();
    (p / om).re
}

pub fn divisor_mfunctions(e: &BandSystem, d: &Divisor) -> Result<MFunctionData> {
    s_kind(e)?;
    let g = e.g();
    if d.points.len() != g {
        return Err(Error::Validation("divisor needs one point per finite gap".into()));
    }
    for (j, &(x, s)) in d.points.iter().enumerate() {
        let (a, b) = e.finite_gaps()[j];
        if x < a || x > b {
            return Err(Error::Validation(format!("divisor point {x} not in gap {}", j + 1)));
        }
        if s != 1 && s != -1 {
            return Err(Error::Validation("sheet signs must be +-1".into()));
        }
    }
    let xs: Vec<f64> = d.points.iter().map(|p| p.0).collect();
    let target: Vec<f64> = d
        .points
        .iter()
        .map(|&(x, s)| -(s as f64) * sqrt_minus_t_real(e, x))
        .collect();
    let mut a = DMatrix::zeros(g, g);
    for i in 0..g {
        for m in 0..g {
            a[(i, m)] = xs[i].powi(m as i32 + 1);
        }
    }
    let sv = a.clone().svd(false, false).singular_values;
    if g > 0 && sv.min() <= 1e-13 * sv.max() {
        return Err(Error::Degeneracy("coalescing divisor points".into()));
    }
    let v = if g > 0 {
        a.clone()
            .lu()
            .solve(&DVector::from_vec(target.clone()))
            .ok_or_else(|| Error::Degeneracy("singular interpolation matrix".into()))?
            .iter()
            .copied()
            .collect()
    } else {
        Vec::new()
    };
    let mut data = MFunctionData {
        e: e.clone(),
        u_roots: xs,
        v,
        residual: 0.0,
    };
    data.residual = d
        .points
        .iter()
        .zip(&target)
        .map(|(&(x, _), t)| (data.v_eval(Complex64::new(x, 0.0)).re - t).abs())
        .fold(0.0, f64::max);
    Ok(data)
}

impl MFunctionData {
    pub fn v_eval(&self, z: Complex64) -> Complex64 {
        self.v
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| (acc + c) * z)
    }

    pub fn u_eval(&self, z: Complex64) -> Complex64 {
        self.u_roots
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &x| acc * (z - x))
    }

    /// `m_+(z)` (`plus = true`) or `m_-(z)` for `z` off the real axis.
    pub fn m(&self, z: Complex64, plus: bool) -> Result<Complex64> {
        if z.im < 0.0 {
            return Ok(self.m(z.conj(), plus)?.conj());
        }
        let r = sqrt_minus_t(&self.e, z)?;
        let v = self.v_eval(z);
        let num = if plus { -r + v } else { -r - v };
        Ok(num / self.u_eval(z))
    }

    /// Boundary value `m_+-(x + i0)` on `E`.
    pub fn m_boundary(&self, x: f64, plus: bool) -> Result<Complex64> {
        let om = omega_boundary(&self.e, x, true)?;
        let p: f64 = self.e.finite_gaps().iter().map(|&(a, _)| x - a).product();
        let r = p / om;
        let z = Complex64::new(x, 0.0);
        let v = self.v_eval(z);
        let num = if plus { -r + v } else { -r - v };
        Ok(num / self.u_eval(z))
    }

    /// `K(z, z0) = (m_+(z) - m_+(conj z0)) / (2 (z - conj z0))`.
    pub fn kernel(&self, z: Complex64, z0: Complex64) -> Result<Complex64> {
        let zb = z0.conj();
        Ok((self.m(z, true)? - self.m(zb, true)?) / (2.0 * (z - zb)))
    }
}

/// Smallest eigenvalue of the Hermitian part of a Gram matrix.
pub fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let ev = nalgebra::SymmetricEigen::new(h).eigenvalues;
    ev.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Gram matrix `[k(z_i, z_j)]`.
pub fn gram<F: Fn(Complex64, Complex64) -> Result<Complex64>>(
    pts: &[Complex64],
    k: F,
) -> Result<DMatrix<Complex64>> {
    let n = pts.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = k(pts[i], pts[j])?;
        }
    }
    Ok(m)
}

/// `Upsilon(l) = 2 sqrt(l) conj(sqrt(l)) / ((l + conj l)(sqrt(l) + conj sqrt(l))^2)`.
pub fn upsilon_g0(lambda: Complex64) -> Result<f64> {
    if lambda.re <= 0.0 {
        return Err(Error::Domain(format!("Re lambda = {} must be positive", lambda.re)));
    }
    Ok(upsilon_kernel(lambda, lambda).re)
}

/// The two-point kernel whose diagonal is `Upsilon`.
pub fn upsilon_kernel(lambda: Complex64, mu: Complex64) -> Complex64 {
    let sl = lambda.sqrt();
    let sm = mu.sqrt().conj();
    2.0 * sl * sm / ((lambda + mu.conj()) * (sl + sm) * (sl + sm))
}

/// `[dbar^m d^n Upsilon(lambda)]_{n,m = 0..size}` by two-variable Cauchy
/// integrals of the kernel, holomorphic in `lambda` and in `conj(mu)`.
pub fn upsilon_hilbert_matrix(lambda: Complex64, size: usize) -> Result<DMatrix<Complex64>> {
    if lambda.re <= 0.0 {
        return Err(Error::Domain("Re lambda must be positive".into()));
    }
    let r = 0.25 * lambda.re;
    let n = 48;
    let h = |l: Complex64, nu: Complex64| -> Complex64 {
        let sl = l.sqrt();
        let sn = nu.sqrt();
        2.0 * sl * sn / ((l + nu) * (sl + sn) * (sl + sn))
    };
    let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product() };
    let mut out = DMatrix::zeros(size, size);
    let nu0 = lambda.conj();
    let us: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    let mut vals = vec![Complex64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..n {
            vals[a * n + b] = h(lambda + r * us[a], nu0 + r * us[b]);
        }
    }
    for p in 0..size {
        for q in 0..size {
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    s += vals[a * n + b] * us[a].powi(-(p as i32)) * us[b].powi(-(q as i32));
                }
            }
            let d = s / (n * n) as f64 * fact(p) * fact(q) / r.powi((p + q) as i32);
            out[(p, q)] = d;
        }
    }
    Ok(out)
}

/// Complex-point prediction `Y = exp(-sum G(x_j, z0)) / (2 Im z0)` for each
/// branch of the generalized inversion.
#[derive(Debug, Clone)]
pub struct ComplexPrediction {
    pub branches: Vec<PredictionBranch>,
    pub multivalued: bool,
}

#[derive(Debug, Clone)]
pub struct PredictionBranch {
    pub y: f64,
    pub x: Vec<Position>,
    pub rho2: f64,
    pub rho_t2: f64,
    pub valid: bool,
}

impl ComplexPrediction {
    /// Values on branches with `rho^2 < rho~^2`.
    pub fn valid_values(&self) -> Vec<f64> {
        self.branches.iter().filter(|b| b.valid).map(|b| b.y).collect()
    }
}

/// `G(x, z0)` for a real (possibly infinite) pole `x`.
pub fn green_at(e: &BandSystem, x: Position, z0: Complex64) -> Result<f64> {
    match x {
        Position::Infinity => Comb::new(e)?.green_inf(z0),
        Position::Finite(v) => {
            if e.contains(v) {
                Ok(0.0)
            } else {
                PoleGreen::new(e, v)?.eval(z0)
            }
        }
    }
}

pub fn predict_complex(
    e: &BandSystem,
    z0: Complex64,
    beta: &CharacterVector,
) -> Result<ComplexPrediction> {
    if z0.im <= 0.0 {
        return Err(Error::Domain("z0 must lie in the upper half-plane".into()));
    }
    let sol = gaji_solve(e, beta, z0)?;
    let mut branches = Vec::new();
    for s in &sol.solutions {
        let mut sum = 0.0;
        for &p in &s.positions {
            sum += green_at(e, p, z0)?;
        }
        let rho2 = s.rho * s.rho;
        branches.push(PredictionBranch {
            y: (-sum).exp() / (2.0 * z0.im),
            x: s.positions.clone(),
            rho2,
            rho_t2: s.rho_t2,
            valid: rho2 < s.rho_t2,
        });
    }
    if !branches.iter().any(|b| b.valid) {
        return Err(Error::OutOfRegion(format!(
            "no inversion branch with rho^2 < rho~^2 ({} branches)",
            branches.len()
        )));
    }
    Ok(ComplexPrediction {
        multivalued: sol.multivalued,
        branches,
    })
}

/// Real-gap prediction `(1/2) e^{-gamma(x0)} exp(-sum_{j>=1} G(x_j, x0))`,
/// where `x_j` solve the real inversion for `beta - character(x0)`.
pub fn predict_real_gap(e: &BandSystem, x0: f64, beta: &CharacterVector) -> Result<f64> {
    let pg = PoleGreen::new(e, x0)?;
    let gamma = pg.robin()?;
    if e.g() == 0 {
        return Ok(0.5 * (-gamma).exp());
    }
    let basis = basis_differentials(e)?;
    let j = e
        .gap_of(x0)
        .ok_or_else(|| Error::Domain(format!("{x0} lies on E")))?;
    let gp = GapPoint::from_position(e, j, Position::Finite(x0))?;
    let shifted = beta.sub(&character_of_point(&basis, &gp)?);
    let xs = real_inversion(&basis, &shifted)?;
    let mut sum = 0.0;
    for p in &xs {
        match p.position(e) {
            Position::Finite(x) => {
                if (x - x0).abs() <= 1e-9 * e.scale() {
                    // The divisor sits on the pole: the extremal degree drops.
                    return Err(Error::OutOfRegion(format!("divisor point coincides with x0 = {x0}")));
                }
                if !e.contains(x) {
                    sum += pg.eval(Complex64::new(x, 0.0))?;
                }
            }
            Position::Infinity => {
                return Err(Error::Domain("finite gap point at infinity".into()));
            }
        }
    }
    Ok(0.5 * (-gamma - sum).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_system;

    #[test]
    fn omega_branch() {
        let e = validate_system(&[], Kind::S).unwrap();
        let w = omega(&e, Complex64::new(-1.0, 0.0), None).unwrap();
        assert!((w - 1.0).norm() < 1e-15);
        let w = omega(&e, Complex64::new(0.0, 1.0), None).unwrap();
        assert!((w.im - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn upsilon_real() {
        assert!((upsilon_g0(Complex64::new(1.0, 0.0)).unwrap() - 0.25).abs() < 1e-15);
    }
}
