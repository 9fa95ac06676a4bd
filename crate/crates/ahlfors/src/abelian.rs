//! Normalized Abelian differentials of the hyperelliptic double of `C \ E`,
//! harmonic measures of the partial sets `E_k`, and character arithmetic.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::geometry::{BandSystem, GapPoint, Kind, Position};
use crate::quadrature::{integrate_band, integrate_from_branch_split, integrate_regular};
use crate::{Error, Result};

/// Largest admissible condition number of the period matrix.
pub const MAX_PERIOD_CONDITION: f64 = 1e12;

/// Principal square root, except that the negative real axis (with either
/// sign of zero) is approached from above: `sqrt_up(-r) = i sqrt(r)`.
pub fn sqrt_up(w: Complex64) -> Complex64 {
    if w.im == 0.0 {
        if w.re >= 0.0 {
            Complex64::new(w.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-w.re).sqrt())
        }
    } else {
        w.sqrt()
    }
}

/// The radical `R(z) = c prod sqrt(z - e)` over the finite branch points,
/// analytic in the closed upper half-plane and real on the gaps.
///
/// J: `c = 1`, so `R^2 = T` and `R ~ z^{g+1}`.
/// S: `c = -i`, so `R^2 = -T` with `T = z prod (z-a_j)(z-b_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Radical {
    kind: Kind,
    bp: Vec<f64>,
}

impl Radical {
    pub fn new(e: &BandSystem) -> Self {
        Radical {
            kind: e.kind(),
            bp: e.branch_points(),
        }
    }

    pub fn branch_points(&self) -> &[f64] {
        &self.bp
    }

    fn phase(&self) -> Complex64 {
        match self.kind {
            Kind::J => Complex64::new(1.0, 0.0),
            Kind::S => Complex64::new(0.0, -1.0),
        }
    }

    /// `R(z)` for `Im z >= 0` (boundary values from above on the real axis).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut p = self.phase();
        for &e in &self.bp {
            p *= sqrt_up(z - e);
        }
        p
    }

    /// `R(z)` extended to the lower half-plane by `R(conj z) = conj R(z)`.
    pub fn eval_sym(&self, z: Complex64) -> Complex64 {
        if z.im < 0.0 {
            self.eval(z.conj()).conj()
        } else {
            self.eval(z)
        }
    }

    /// `R(z) / sqrt(z - bp[idx])`, regular at the branch point `bp[idx]`.
    pub fn eval_without(&self, idx: usize, z: Complex64) -> Complex64 {
        let mut p = self.phase();
        for (i, &e) in self.bp.iter().enumerate() {
            if i != idx {
                p *= sqrt_up(z - e);
            }
        }
        p
    }

    /// The polynomial `R^2` evaluated at `z`.
    pub fn square(&self, z: Complex64) -> Complex64 {
        let mut p = self.phase() * self.phase();
        for &e in &self.bp {
            p *= z - e;
        }
        p
    }

    /// Split `R(x + i0) = phase * sqrt((x-l)(r-x)) * rho(x)` on the segment
    /// between consecutive branch points `bp[i]`, `bp[i+1]`. Returns
    /// `(phase, rho)` with `phase` one of `+-1, +-i`.
    pub fn segment_factor(&self, i: usize) -> (Complex64, impl Fn(f64) -> f64 + '_) {
        let (l, r) = (self.bp[i], self.bp[i + 1]);
        let rho = move |x: f64| -> f64 {
            self.bp
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i && j != i + 1)
                .map(|(_, &e)| (x - e).abs().sqrt())
                .product()
        };
        let m = 0.5 * (l + r);
        let v = self.eval(Complex64::new(m, 0.0));
        let w = ((m - l) * (r - m)).sqrt() * rho(m);
        let ph = v / w;
        let snap = Complex64::new(ph.re.round(), ph.im.round());
        (snap, rho)
    }

    /// `int_l^r p(x) / R(x + i0) dx` over the segment `bp[i]..bp[i+1]`.
    pub fn segment_integral<P: Fn(f64) -> f64>(&self, i: usize, p: P) -> Result<Complex64> {
        let (ph, rho) = self.segment_factor(i);
        let (l, r) = (self.bp[i], self.bp[i + 1]);
        let v = integrate_band(|x| p(x) / rho(x), l, r)?;
        Ok(v / ph)
    }

    /// Index in the branch-point list of the left end of finite gap `j >= 1`.
    pub fn gap_segment(&self, j: usize) -> usize {
        2 * j - 1
    }

    /// Index of the left end of band `i` in the branch-point list.
    pub fn band_segment(&self, i: usize) -> usize {
        2 * i
    }
}

/// Normalized differentials `Q_k dz / R`, `k = 1..g`, with
/// `int_{a_j}^{b_j} Q_k / R dx = 1/2 delta_{jk}`.
///
/// `Q_k` is stored in the monomial basis of `u = (x - center)/scale`.
#[derive(Debug, Clone)]
pub struct DifferentialBasis {
    e: BandSystem,
    radical: Radical,
    center: f64,
    scale: f64,
    q: Vec<Vec<f64>>,
    condition: f64,
}

/// Period matrix `P[j][m] = int_{gap j+1} u^m / R dx`.
fn period_matrix(e: &BandSystem, rad: &Radical, center: f64, scale: f64) -> Result<DMatrix<f64>> {
    let g = e.g();
    let mut p = DMatrix::zeros(g, g);
    for j in 1..=g {
        let seg = rad.gap_segment(j);
        for m in 0..g {
            let v = rad.segment_integral(seg, |x| ((x - center) / scale).powi(m as i32))?;
            p[(j - 1, m)] = v.re;
        }
    }
    Ok(p)
}

/// Solve the period system for the normalized basis.
pub fn basis_differentials(e: &BandSystem) -> Result<DifferentialBasis> {
    let g = e.g();
    if g == 0 {
        return Err(Error::Validation("differential basis needs g >= 1".into()));
    }
    let radical = Radical::new(e);
    let bp = e.branch_points();
    let lo = bp[0];
    let hi = *bp.last().unwrap();
    let center = 0.5 * (lo + hi);
    let scale = (0.5 * (hi - lo)).max(1e-300);
    let p = period_matrix(e, &radical, center, scale)?;
    let sv = p.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_PERIOD_CONDITION {
        return Err(Error::Conditioning(condition));
    }
    let lu = p.lu();
    let mut q = Vec::with_capacity(g);
    for k in 0..g {
        let mut rhs = DVector::zeros(g);
        rhs[k] = 0.5;
        let sol = lu
            .solve(&rhs)
            .ok_or(Error::Conditioning(f64::INFINITY))?;
        q.push(sol.iter().copied().collect());
    }
    Ok(DifferentialBasis {
        e: e.clone(),
        radical,
        center,
        scale,
        q,
        condition,
    })
}

impl DifferentialBasis {
    pub fn system(&self) -> &BandSystem {
        &self.e
    }

    pub fn radical(&self) -> &Radical {
        &self.radical
    }

    pub fn g(&self) -> usize {
        self.q.len()
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Coefficients of `Q_k` (1-based `k`) in the scaled variable.
    pub fn q_scaled(&self, k: usize) -> &[f64] {
        &self.q[k - 1]
    }

    /// Coefficients of `Q_k` in the monomial basis of `x`.
    pub fn q_monomial(&self, k: usize) -> Vec<f64> {
        let u = crate::poly::Poly(vec![-self.center / self.scale, 1.0 / self.scale]);
        crate::poly::Poly(self.q[k - 1].clone()).compose(&u).0
    }

    pub fn q_eval(&self, k: usize, z: Complex64) -> Complex64 {
        let u = (z - self.center) / self.scale;
        self.q[k - 1]
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    /// `int_{a_j}^{b_j} Q_k / R dx` recomputed by quadrature.
    pub fn period(&self, j: usize, k: usize) -> Result<f64> {
        let seg = self.radical.gap_segment(j);
        Ok(self
            .radical
            .segment_integral(seg, |x| self.q_eval(k, Complex64::new(x, 0.0)).re)?
            .re)
    }

    /// Maximum deviation of the period matrix from `1/2 I`.
    pub fn period_residual(&self) -> Result<f64> {
        let g = self.g();
        let mut r: f64 = 0.0;
        for j in 1..=g {
            for k in 1..=g {
                let target = if j == k { 0.5 } else { 0.0 };
                r = r.max((self.period(j, k)? - target).abs());
            }
        }
        Ok(r)
    }

    /// Orientation sign: `omega(z,E_k) = base + sign * 2 Re int_e^z Q_k/R`.
    pub fn sign(&self) -> f64 {
        match self.e.kind() {
            Kind::J => -1.0,
            Kind::S => 1.0,
        }
    }

    /// Value of `omega(., E_k)` on band `i`.
    pub fn band_value(&self, i: usize, k: usize) -> f64 {
        match self.e.kind() {
            Kind::J => {
                if i < k {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::S => {
                if i >= k {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Band index owning branch point `bp[idx]`.
    fn band_of_bp(&self, idx: usize) -> usize {
        idx / 2
    }

    /// `int_{bp[idx]}^z Q_k / R dz` along the straight segment.
    pub fn abel_integral(&self, idx: usize, z: Complex64, k: usize) -> Complex64 {
        let e = Complex64::new(self.radical.bp[idx], 0.0);
        let f = |w: Complex64| self.q_eval(k, w) / self.radical.eval_without(idx, w);
        integrate_from_branch_split(f, e, z)
    }

    /// `omega(bp[idx] + d, E_k)`, `k = 1..g`, for a real offset `d` into the
    /// adjacent gap; `d` is carried exactly, so points within rounding
    /// distance of the branch point keep full accuracy.
    pub fn measures_at_offset(&self, idx: usize, d: f64) -> Vec<f64> {
        let e = Complex64::new(self.radical.bp[idx], 0.0);
        let dc = Complex64::new(d, 0.0);
        let sd = sqrt_up(dc);
        let base = self.band_of_bp(idx);
        (1..=self.g())
            .map(|k| {
                let f = |s: f64| {
                    let w = e + dc * (s * s);
                    self.q_eval(k, w) / self.radical.eval_without(idx, w) * 2.0 * sd
                };
                let v = crate::quadrature::gauss_legendre_adaptive_c(f, 0.0, 1.0).value;
                self.band_value(base, k) + self.sign() * 2.0 * v.re
            })
            .collect()
    }

    /// `omega(z, E_k)` from the given base branch point.
    pub fn harmonic_measure_from(&self, idx: usize, z: Complex64, k: usize) -> f64 {
        let z = if z.im < 0.0 { z.conj() } else { z };
        let base = self.band_value(self.band_of_bp(idx), k);
        base + self.sign() * 2.0 * self.abel_integral(idx, z, k).re
    }

    fn nearest_bp(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut d = f64::INFINITY;
        for (i, &e) in self.radical.bp.iter().enumerate() {
            let di = (z - e).norm();
            if di < d {
                d = di;
                best = i;
            }
        }
        best
    }

    fn check_off_e(&self, z: Complex64) -> Result<()> {
        if z.im == 0.0 && self.e.contains(z.re) {
            return Err(Error::Domain(format!("point {} lies on E", z.re)));
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain("non-finite point".into()));
        }
        Ok(())
    }

    /// `omega(z, E_k)` for `z` off `E` (1-based `k`).
    pub fn harmonic_measure(&self, z: Complex64, k: usize) -> Result<f64> {
        self.check_off_e(z)?;
        if k == 0 || k > self.g() {
            return Err(Error::Validation(format!("k = {k} outside 1..=g")));
        }
        Ok(self.harmonic_measure_from(self.nearest_bp(z), z, k))
    }

    /// All `omega(z, E_k)`, `k = 1..g`.
    pub fn harmonic_measures(&self, z: Complex64) -> Result<Vec<f64>> {
        self.check_off_e(z)?;
        let idx = self.nearest_bp(z);
        Ok((1..=self.g())
            .map(|k| self.harmonic_measure_from(idx, z, k))
            .collect())
    }

    /// Harmonic measures of the individual bands at `z`.
    pub fn band_measures(&self, z: Complex64) -> Result<Vec<f64>> {
        let w = self.harmonic_measures(z)?;
        let g = self.g();
        let full = |k: usize| -> f64 {
            match self.e.kind() {
                Kind::J => {
                    if k == 0 {
                        0.0
                    } else if k > g {
                        1.0
                    } else {
                        w[k - 1]
                    }
                }
                Kind::S => {
                    if k == 0 {
                        1.0
                    } else if k > g {
                        0.0
                    } else {
                        w[k - 1]
                    }
                }
            }
        };
        Ok((0..=g)
            .map(|i| match self.e.kind() {
                Kind::J => full(i + 1) - full(i),
                Kind::S => full(i) - full(i + 1),
            })
            .collect())
    }

    /// `omega(infinity, E_k)` for a J system, integrating from `a0` to `+inf`.
    pub fn harmonic_measure_at_infinity(&self, k: usize) -> Result<f64> {
        self.at_infinity(k, true)
    }

    /// Same quantity integrated from `b0` to `-inf` (cross-check).
    pub fn harmonic_measure_at_infinity_left(&self, k: usize) -> Result<f64> {
        self.at_infinity(k, false)
    }

    fn at_infinity(&self, k: usize, right: bool) -> Result<f64> {
        if self.e.kind() != Kind::J {
            return Err(Error::Domain("infinity is a boundary point of an S system".into()));
        }
        let bp = &self.radical.bp;
        let (e, dir, band) = if right {
            (*bp.last().unwrap(), 1.0, self.g())
        } else {
            (bp[0], -1.0, 0)
        };
        let f = |s: f64| -> f64 {
            if s >= 1.0 {
                return 0.0;
            }
            let t = s / (1.0 - s);
            let x = e + dir * t * t;
            let dx = dir * 2.0 * s / (1.0 - s).powi(3);
            let z = Complex64::new(x, 0.0);
            (self.q_eval(k, z) / self.radical.eval(z)).re * dx
        };
        let v = integrate_regular(f, 0.0, 1.0);
        Ok(self.band_value(band, k) + self.sign() * 2.0 * v)
    }

    /// Contribution `(omega(x, E_1), ..., omega(x, E_g))` of a gap point,
    /// not reduced mod 1.
    pub fn point_measures(&self, x: &GapPoint) -> Result<Vec<f64>> {
        let g = self.g();
        match x.position(&self.e) {
            Position::Infinity => (1..=g).map(|k| self.harmonic_measure_at_infinity(k)).collect(),
            Position::Finite(v) => {
                // Endpoints of the gap sit on E; use the boundary value.
                if let Some(i) = self.e.band_of(v) {
                    return Ok((1..=g).map(|k| self.band_value(i, k)).collect());
                }
                self.harmonic_measures(Complex64::new(v, 0.0))
            }
        }
    }
}

/// A character as a point of the torus `(R/Z)^g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterVector(Vec<f64>);

/// Reduce to `[0, 1)`.
pub fn mod1(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the circle `R/Z`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = mod1(a - b);
    d.min(1.0 - d)
}

impl CharacterVector {
    pub fn new(v: Vec<f64>) -> Self {
        CharacterVector(v.into_iter().map(mod1).collect())
    }

    pub fn zero(g: usize) -> Self {
        CharacterVector(vec![0.0; g])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn g(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, o: &CharacterVector) -> CharacterVector {
        CharacterVector::new(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &CharacterVector) -> CharacterVector {
        CharacterVector::new(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    /// Max componentwise circle distance.
    pub fn dist(&self, o: &CharacterVector) -> f64 {
        self.0
            .iter()
            .zip(&o.0)
            .map(|(a, b)| circle_dist(*a, *b))
            .fold(0.0, f64::max)
    }
}

/// Problem type selecting the character scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    J,
    T,
    S,
}

/// Limit character from the comb base angles `omega_k` (radians):
/// `beta_k = n omega_k / pi` (J, S) or `n omega_k / (2 pi)` (T), mod 1.
pub fn limit_character(omega: &[f64], n: f64, problem: Problem) -> CharacterVector {
    let div = match problem {
        Problem::J | Problem::S => std::f64::consts::PI,
        Problem::T => 2.0 * std::f64::consts::PI,
    };
    CharacterVector::new(omega.iter().map(|w| n * w / div).collect())
}

/// Character of a single gap point.
pub fn character_of_point(basis: &DifferentialBasis, x: &GapPoint) -> Result<CharacterVector> {
    Ok(CharacterVector::new(basis.point_measures(x)?))
}

/// Character of a divisor-like collection of gap points.
pub fn character_of_sum(basis: &DifferentialBasis, xs: &[GapPoint]) -> Result<CharacterVector> {
    let mut acc = vec![0.0; basis.g()];
    for x in xs {
        for (a, v) in acc.iter_mut().zip(basis.point_measures(x)?) {
            *a += v;
        }
    }
    Ok(CharacterVector::new(acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_system;

    #[test]
    fn sqrt_up_cut() {
        let v = sqrt_up(Complex64::new(-4.0, -0.0));
        assert_eq!(v, Complex64::new(0.0, 2.0));
    }

    #[test]
    fn symmetric_half() {
        let s = 2f64.sqrt();
        let e = validate_system(&[-2.0, -s, s, 2.0], Kind::J).unwrap();
        let b = basis_differentials(&e).unwrap();
        let w = b.harmonic_measure(Complex64::new(0.0, 0.0), 1).unwrap();
        assert!((w - 0.5).abs() < 1e-12, "{w}");
    }
}
