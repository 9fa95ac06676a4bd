use std::f64::consts::PI;

use ahlfors::quadrature::*;
use ahlfors::Complex64;

#[test]
fn chebyshev_weight_moments() {
    let a = integrate_band(|_| 1.0, -1.0, 1.0).unwrap();
    assert!((a - PI).abs() < 1e-13);
    let b = integrate_band(|x| x * x, -1.0, 1.0).unwrap();
    assert!((b - PI / 2.0).abs() < 1e-13);
}

#[test]
fn weight_on_shifted_band() {
    // int_2^5 dx / sqrt((x-2)(5-x)) = pi for any band.
    let a = integrate_band(|_| 1.0, 2.0, 5.0).unwrap();
    assert!((a - PI).abs() < 1e-13);
}

#[test]
fn regular_rule_arctan() {
    let v = integrate_regular(|x| 1.0 / (x * x + 1.0), 0.0, 1.0);
    assert!((v - PI / 4.0).abs() < 1e-14);
}

#[test]
fn quarter_circle_log() {
    let nodes: Vec<Complex64> = (0..=16)
        .map(|k| Complex64::from_polar(1.0, PI / 2.0 * k as f64 / 16.0))
        .collect();
    let path = Path::new(nodes).unwrap();
    let v = integrate_path(|z| 1.0 / z, &path).unwrap();
    // Chord polygon: the integral of 1/z only depends on the endpoints.
    assert!((v - Complex64::new(0.0, PI / 2.0)).norm() < 1e-12);
}

#[test]
fn lorentzian_segment() {
    let (u, v) = (0.3, 0.2);
    let f = |z: Complex64| 1.0 / ((z - u) * (z - u) + v * v);
    let got = integrate_segment(f, Complex64::new(-1.0, 0.0), Complex64::new(2.0, 0.0));
    let want = (((2.0 - u) / v).atan() - ((-1.0 - u) / v).atan()) / v;
    assert!((got.re - want).abs() < 1e-10 * want);
}

#[test]
fn joukowski_green_by_branch_integral() {
    // int_{-2}^{z} dw / sqrt(w^2 - 4) from the branch point gives acosh(z/2) + i pi.
    let z = Complex64::new(3.0, 0.0);
    let f = |w: Complex64| 1.0 / ((w - 2.0).sqrt() * (w + 2.0).sqrt());
    let v = integrate_from_branch(f, Complex64::new(2.0, 0.0), z);
    let want = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    assert!((v.re - want).abs() < 1e-10, "{v}");
}

#[test]
fn gauss_weights() {
    let (x, w) = gauss_legendre::<20>();
    assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
    assert!((m4 - 0.4).abs() < 1e-14);
}
