//! Dense polynomials in the monomial basis (ascending coefficients) and
//! Chebyshev-series helpers.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::{Error, Result};

/// Real polynomial `c[0] + c[1] x + ... + c[d] x^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(mut c: Vec<f64>) -> Self {
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Poly(c)
    }

    pub fn constant(v: f64) -> Self {
        Poly(vec![v])
    }

    pub fn x() -> Self {
        Poly(vec![0.0, 1.0])
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        let mut p = Poly(vec![1.0]);
        for &r in roots {
            p = p.mul(&Poly(vec![-r, 1.0]));
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.0.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.0.len().max(o.0.len());
        Poly::new(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&0.0) + o.0.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                r[i + j] += a * b;
            }
        }
        Poly::new(r)
    }

    /// Composition `self(inner(x))` by Horner's scheme.
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.0
            .iter()
            .rev()
            .fold(Poly(vec![0.0]), |acc, &c| acc.mul(inner).add(&Poly(vec![c])))
    }

    /// All complex roots, from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let c: Vec<Complex64> = self.0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        roots_complex(&c)
    }

    /// Real roots only, sorted; roots with `|Im| <= tol*(1+|Re|)` count as real.
    pub fn real_roots(&self, tol: f64) -> Result<Vec<f64>> {
        let mut r: Vec<f64> = self
            .roots()?
            .into_iter()
            .filter(|z| z.im.abs() <= tol * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(r)
    }
}

/// Evaluate a complex-coefficient polynomial (ascending order).
pub fn eval_complex(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// Roots of a complex-coefficient polynomial (ascending order) via the
/// companion matrix, followed by two Newton polishing steps.
pub fn roots_complex(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = c.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() == 0.0 {
        c.pop();
    }
    let d = c.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = c[d];
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -c[i] / lead;
    }
    let ev = Schur::new(m)
        .eigenvalues()
        .ok_or_else(|| Error::Solver {
            msg: "companion eigenvalues did not converge".into(),
            residual: f64::NAN,
        })?;
    let dc: Vec<Complex64> = c
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect();
    Ok(ev
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..2 {
                let dp = eval_complex(&dc, z);
                if dp.norm() > 0.0 {
                    let step = eval_complex(&c, z) / dp;
                    if step.norm() < 1e-6 * (1.0 + z.norm()) {
                        z -= step;
                    }
                }
            }
            z
        })
        .collect())
}

/// Clean up near-real roots: imaginary parts below `tol*(1+|z|)` are zeroed.
pub fn clean_near_real(roots: &mut [Complex64], tol: f64) {
    for z in roots.iter_mut() {
        if z.im.abs() <= tol * (1.0 + z.norm()) {
            z.im = 0.0;
        }
    }
}

/// Chebyshev polynomial of the first kind `T_m` in the monomial basis.
pub fn chebyshev_t(m: usize) -> Poly {
    let mut t0 = Poly(vec![1.0]);
    if m == 0 {
        return t0;
    }
    let mut t1 = Poly::x();
    for _ in 1..m {
        let t2 = Poly::x().scale(2.0).mul(&t1).add(&t0.scale(-1.0));
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Chebyshev polynomial of the second kind `U_m` in the monomial basis.
pub fn chebyshev_u(m: usize) -> Poly {
    let mut u0 = Poly(vec![1.0]);
    if m == 0 {
        return u0;
    }
    let mut u1 = Poly(vec![0.0, 2.0]);
    for _ in 1..m {
        let u2 = Poly::x().scale(2.0).mul(&u1).add(&u0.scale(-1.0));
        u0 = u1;
        u1 = u2;
    }
    u1
}

/// Values `T_0(t), ..., T_{n-1}(t)` at a complex argument.
pub fn chebyshev_values(n: usize, t: Complex64) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(n);
    if n == 0 {
        return v;
    }
    v.push(Complex64::new(1.0, 0.0));
    if n == 1 {
        return v;
    }
    v.push(t);
    for k in 2..n {
        let next = 2.0 * t * v[k - 1] - v[k - 2];
        v.push(next);
    }
    v
}

/// Clenshaw summation of `sum a_k T_k(t)` with complex coefficients.
pub fn clenshaw(a: &[Complex64], t: Complex64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for k in (1..a.len()).rev() {
        let b0 = a[k] + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match a.first() {
        Some(&a0) => a0 + t * b1 - b2,
        None => Complex64::new(0.0, 0.0),
    }
}

/// Convert a Chebyshev series on the affine variable `t = (x - mid)/half`
/// into monomial coefficients in `x`.
pub fn chebyshev_to_monomial(a: &[f64], mid: f64, half: f64) -> Poly {
    let t = Poly(vec![-mid / half, 1.0 / half]);
    let mut acc = Poly(vec![0.0]);
    let mut t0 = Poly(vec![1.0]);
    let mut t1 = t.clone();
    for (k, &ak) in a.iter().enumerate() {
        let tk = match k {
            0 => t0.clone(),
            1 => t1.clone(),
            _ => {
                let t2 = t.scale(2.0).mul(&t1).add(&t0.scale(-1.0));
                t0 = t1;
                t1 = t2;
                t1.clone()
            }
        };
        acc = acc.add(&tk.scale(ak));
    }
    acc
}
