use std::f64::consts::PI;

use ahlfors::abelian::*;
use ahlfors::geometry::*;
use ahlfors::inversion::*;
use ahlfors::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sym() -> BandSystem {
    let r2 = 2f64.sqrt();
    BandSystem::from_bands(&[(-2.0, -r2), (r2, 2.0)]).unwrap()
}

fn asym() -> BandSystem {
    BandSystem::from_bands(&[(-2.0, -1.0), (0.5, 2.0)]).unwrap()
}

fn random_system(rng: &mut ChaCha8Rng, g: usize) -> BandSystem {
    let mut raw: Vec<f64> = (0..2 * g + 2).map(|_| rng.gen_range(-3.0..3.0)).collect();
    raw.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 1..raw.len() {
        if raw[i] - raw[i - 1] < 0.05 {
            raw[i] = raw[i - 1] + 0.05;
        }
    }
    validate_system(&raw, Kind::J).unwrap()
}

#[test]
fn real_inversion_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for g in 1..=3 {
        for _ in 0..4 {
            let e = random_system(&mut rng, g);
            let b = basis_differentials(&e).unwrap();
            let xs: Vec<GapPoint> = (1..=g).map(|j| GapPoint::new(j, rng.gen_range(0.02..0.98))).collect();
            let beta = character_of_sum(&b, &xs).unwrap();
            let got = real_inversion(&b, &beta).unwrap();
            for (p, q) in got.iter().zip(&xs) {
                assert_eq!(p.gap, q.gap);
                assert!(circle_dist(p.t, q.t) < 1e-9, "g={g}: {} vs {}", p.t, q.t);
            }
        }
    }
}

#[test]
fn symmetric_real_inversion() {
    let e = sym();
    let b = basis_differentials(&e).unwrap();
    let half = real_inversion(&b, &CharacterVector::new(vec![0.5])).unwrap();
    assert!(half[0].position(&e).finite().unwrap().abs() < 1e-10);
    let zero = real_inversion(&b, &CharacterVector::new(vec![0.0])).unwrap();
    let back = character_of_sum(&b, &zero).unwrap();
    assert!(back.dist(&CharacterVector::zero(1)) < 1e-10);
}

#[test]
fn halfline_generalized_inversion() {
    let e = validate_system(&[], Kind::S).unwrap();
    for z0 in [c(0.5, 1.0), c(-3.0, 0.2), c(2.0, 5.0)] {
        let r = gaji_solve(&e, &CharacterVector::new(vec![]), z0).unwrap();
        let x0 = r.solutions[0].positions[0].finite().unwrap();
        assert!((x0 + z0.norm()).abs() < 1e-10, "{z0}: {x0}");
    }
}

#[test]
fn symmetric_generalized_inversion() {
    let e = sym();
    let r = gaji_solve(&e, &CharacterVector::new(vec![0.0]), c(0.0, 0.7)).unwrap();
    let s = &r.solutions[0];
    assert!(s.x[0].at_endpoint(1e-9) || (s.x[0].t - 0.5).abs() < 1e-9);
    assert!(s.positions[1].finite().unwrap().abs() < 1e-9);
    assert!(s.cs2_residual.abs() < 1e-10);
}

/// Poisson mass of the boundary arc from `a` forward to `x` seen from `z0`,
/// through infinity when `x < a`.
fn mass(a: f64, x: f64, z0: Complex64) -> f64 {
    let p = |t: f64| ((t - z0.re) / z0.im).atan() / PI;
    if x >= a {
        p(x) - p(a)
    } else {
        (0.5 - p(a)) + (p(x) + 0.5)
    }
}

fn balance(e: &BandSystem, pos: &[Position], z0: Complex64) -> f64 {
    let mut f = 0.0;
    for (j, p) in pos.iter().enumerate() {
        let gap = e.gap(j);
        let x = p.finite().unwrap_or(f64::INFINITY);
        let m = if x.is_infinite() { 0.5 - ((gap.a - z0.re) / z0.im).atan() / PI } else { mass(gap.a, x, z0) };
        f += 2.0 * m - mass(gap.a, gap.b, z0);
    }
    f
}

#[test]
fn asymmetric_generalized_inversion() {
    let e = asym();
    let b = basis_differentials(&e).unwrap();
    let z0 = c(0.1, 0.8);
    for beta in [0.0, 0.2, 0.5, 0.8] {
        let r = gaji_solve(&e, &CharacterVector::new(vec![beta]), z0).unwrap();
        assert!(!r.solutions.is_empty());
        for s in &r.solutions {
            assert!(s.cs1_residual < 1e-10 && s.cs2_residual.abs() < 1e-10);
            assert!(s.realness_defect < 1e-8);
            // Independent residuals from the returned positions.
            let ch = character_of_sum(&b, &s.x).unwrap();
            assert!(ch.dist(&CharacterVector::new(vec![beta])) < 1e-10);
            assert!(balance(&e, &s.positions, z0).abs() < 1e-9, "beta={beta}");
            let j = jacobian_check(&e, &s.x, z0).unwrap();
            assert!(j.sigma_min > 1e-6 && j.analytic_det > 0.0 && !j.coalescing);
        }
    }
}

#[test]
fn branch_count_matches_balance_scan() {
    // Along the outer gap, x1 follows from the character equation; each
    // genuine sign change of the balance is a solution.
    let e = asym();
    let b = basis_differentials(&e).unwrap();
    let z0 = c(0.1, 0.8);
    let beta = 0.5;
    let r = gaji_solve(&e, &CharacterVector::new(vec![beta]), z0).unwrap();
    let gap1 = e.gap(1);
    let solve_x1 = |target: f64| -> f64 {
        let w = |x: f64| b.harmonic_measure(c(x, 0.0), 1).unwrap();
        let eps = 1e-12 * (gap1.b - gap1.a);
        let (mut lo, mut hi) = (gap1.a + eps, gap1.b - eps);
        let up = w(hi) > w(lo);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (w(mid) < target) == up {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut signs = Vec::new();
    let n = 400;
    for k in 0..n {
        let t = (k as f64 + 0.5) / n as f64;
        let x0 = GapPoint::new(0, t);
        let w0 = point_measures_mod(&b, &x0);
        let target = (beta - w0).rem_euclid(1.0);
        let x1 = solve_x1(target);
        signs.push(balance(&e, &[x0.position(&e), Position::Finite(x1)], z0));
    }
    let changes = signs.windows(2).filter(|w| w[0].signum() != w[1].signum() && (w[0] - w[1]).abs() < 0.5).count();
    assert_eq!(changes, r.solutions.len());
    assert!(r.multivalued);
}

fn point_measures_mod(b: &DifferentialBasis, x: &GapPoint) -> f64 {
    character_of_point(b, x).unwrap().values()[0].rem_euclid(1.0)
}

#[test]
fn jacobian_degenerates_at_band_end() {
    let e = asym();
    let z0 = c(0.1, 0.8);
    let r = gaji_solve(&e, &CharacterVector::new(vec![0.2]), z0).unwrap();
    let s = &r.solutions[0];
    let base = jacobian_check(&e, &s.x, z0).unwrap().sigma_min;
    let mut moved = s.x.clone();
    moved[1] = GapPoint::new(1, 1e-7);
    let edge = jacobian_check(&e, &moved, z0).unwrap().sigma_min;
    assert!(edge < base);
}

#[test]
fn symmetric_scan_mirror() {
    let e = sym();
    let scan = bifurcation_scan(&e, 0.05, 0.95, 19, c(0.0, 0.9)).unwrap();
    let best = |beta: f64| {
        scan.rows
            .iter()
            .filter(|r| (r.beta - beta).abs() < 1e-12)
            .map(|r| r.rho2)
            .fold(f64::INFINITY, f64::min)
    };
    for k in 0..19 {
        let b = 0.05 + 0.05 * k as f64;
        assert!((best(b) - best(1.0 - b)).abs() < 1e-8 * best(b).max(1.0), "beta={b}");
    }
}

#[test]
fn lopsided_scan_window() {
    let e = asym();
    let scan = bifurcation_scan(&e, 0.0, 1.0, 51, c(0.1, 0.8)).unwrap();
    assert!(!scan.multivalued_betas().is_empty());
    assert!(!scan.crossings().is_empty());
    let again = bifurcation_scan(&e, 0.0, 1.0, 51, c(0.1, 0.8)).unwrap();
    assert_eq!(scan, again);
}
