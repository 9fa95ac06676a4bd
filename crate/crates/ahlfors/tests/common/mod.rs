//! Test-side reference solver: logarithmic potentials of Chebyshev-weighted
//! band densities fitted by collocation.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const DEG: usize = 24;
const QUAD: usize = 600;

pub struct Potential {
    bands: Vec<(f64, f64)>,
    coef: Vec<Vec<f64>>,
    constant: f64,
}

fn cheb(k: usize, s: f64) -> f64 {
    (k as f64 * s.clamp(-1.0, 1.0).acos()).cos()
}

/// `int_{-1}^{1} log|xi - s| T_k(s) / sqrt(1 - s^2) ds` for `xi` off the band.
fn log_moment(k: usize, xi: Complex64) -> f64 {
    let mut acc = 0.0;
    for i in 0..QUAD {
        let th = PI * (i as f64 + 0.5) / QUAD as f64;
        let s = th.cos();
        acc += (xi - s).norm().ln() * (k as f64 * th).cos();
    }
    acc * PI / QUAD as f64
}

fn moment(band: (f64, f64), k: usize, z: Complex64, on_band: bool) -> f64 {
    let (c, h) = (0.5 * (band.0 + band.1), 0.5 * (band.1 - band.0));
    let xi = (z - c) / h;
    let base = if k == 0 { PI * h.ln() } else { 0.0 };
    if on_band {
        base + if k == 0 { -PI * 2f64.ln() } else { -PI * cheb(k, xi.re) / k as f64 }
    } else {
        base + log_moment(k, xi)
    }
}

impl Potential {
    /// `u = sum_b int log|z - t| sigma_b(t) dt + C` with total charge `charge`
    /// and `u = target(x)` on the bands.
    pub fn solve(bands: &[(f64, f64)], charge: f64, target: &dyn Fn(usize, f64) -> f64) -> Self {
        let nb = bands.len();
        let nu = nb * (DEG + 1) + 1;
        let mut a = DMatrix::zeros(nu, nu);
        let mut rhs = DVector::zeros(nu);
        let mut row = 0;
        for (bi, &band) in bands.iter().enumerate() {
            let (c, h) = (0.5 * (band.0 + band.1), 0.5 * (band.1 - band.0));
            for m in 0..=DEG {
                let s = (PI * (m as f64 + 0.5) / (DEG + 1) as f64).cos();
                let x = Complex64::new(c + h * s, 0.0);
                for (bj, &other) in bands.iter().enumerate() {
                    for k in 0..=DEG {
                        a[(row, bj * (DEG + 1) + k)] = moment(other, k, x, bi == bj);
                    }
                }
                a[(row, nu - 1)] = 1.0;
                rhs[row] = target(bi, x.re);
                row += 1;
            }
        }
        for bj in 0..nb {
            a[(row, bj * (DEG + 1))] = PI;
        }
        rhs[row] = charge;
        let sol = a.lu().solve(&rhs).expect("collocation system");
        let coef = (0..nb)
            .map(|b| sol.as_slice()[b * (DEG + 1)..(b + 1) * (DEG + 1)].to_vec())
            .collect();
        Potential {
            bands: bands.to_vec(),
            coef,
            constant: sol[nu - 1],
        }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let mut u = self.constant;
        for (b, c) in self.bands.iter().zip(&self.coef) {
            for (k, a) in c.iter().enumerate() {
                u += a * moment(*b, k, z, false);
            }
        }
        u
    }

    /// `u(z) - charge log|z|` as `z -> infinity`.
    pub fn at_infinity(&self) -> f64 {
        self.constant
    }
}

/// Harmonic measure of band `k` at `z`.
pub fn harmonic_measure(bands: &[(f64, f64)], z: Complex64, k: usize) -> f64 {
    Potential::solve(bands, 0.0, &|b, _| if b == k { 1.0 } else { 0.0 }).eval(z)
}

/// Green function with pole at infinity and capacity.
pub fn green_inf(bands: &[(f64, f64)]) -> (Potential, f64) {
    let p = Potential::solve(bands, 1.0, &|_, _| 0.0);
    // G = log|z| - log cap + o(1) and G = u here.
    let cap = (-p.at_infinity()).exp();
    (p, cap)
}

/// `G(z, x0)` for a real pole off the bands, and the Robin constant at `x0`.
pub fn green_pole(bands: &[(f64, f64)], x0: f64) -> (impl Fn(Complex64) -> f64, f64) {
    // G = u - log|z - x0| with u = log|x - x0| on E and unit charge.
    let p = Potential::solve(bands, 1.0, &move |_, x| (x - x0).abs().ln());
    let robin = p.eval(Complex64::new(x0, 0.0));
    (move |z: Complex64| p.eval(z) - (z - x0).norm().ln(), robin)
}
