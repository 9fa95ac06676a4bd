use ahlfors::extremal_poly::*;
use ahlfors::geometry::*;
use ahlfors::oracle::Support;
use ahlfors::poly::{chebyshev_t, Poly};
use ahlfors::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn quad() -> Poly {
    Poly(vec![-3.0, 0.0, 1.0])
}

fn inner() -> BandSystem {
    let r2 = 2f64.sqrt();
    BandSystem::from_bands(&[(-1.9, -r2), (r2 + 0.1, 2.0)]).unwrap()
}

fn random_points(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

#[test]
fn chebyshev_preimage() {
    let (e, pair) = pell_from_preimage(&Poly::x(), 3).unwrap();
    assert_eq!(e.bands(), vec![(-1.0, 1.0)]);
    let t3 = [0.0, -3.0, 0.0, 4.0];
    for (a, b) in pair.psi.0.iter().zip(t3) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!(pair.residual(&random_points(50, -3.0, 3.0)) < 1e-10);
}

#[test]
fn quadratic_preimage() {
    let (e, pair) = pell_from_preimage(&quad(), 2).unwrap();
    let r2 = 2f64.sqrt();
    let b = e.bands();
    assert_eq!(b.len(), 2);
    for (got, want) in b.iter().zip([(-2.0, -r2), (r2, 2.0)]) {
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
    }
    // 2 (x^2 - 3)^2 - 1 = 2x^4 - 12x^2 + 17
    let want = [17.0, 0.0, -12.0, 0.0, 2.0];
    for (a, b) in pair.psi.0.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((pair.psi.eval(2.0) - 1.0).abs() < 1e-12 && (pair.psi.eval(-2.0) - 1.0).abs() < 1e-12);
    assert!(pair.residual(&random_points(50, -3.0, 3.0)) < 1e-10);
    assert_eq!(pair.n, 4);
}

#[test]
fn interior_critical_value_rejected() {
    // x^2 - 0.5 has critical value -0.5.
    assert!(pell_from_preimage(&Poly(vec![-0.5, 0.0, 1.0]), 2).is_err());
}

#[test]
fn pell_zeros_interlace() {
    for m in [2, 5, 8] {
        let (_, pair) = pell_from_preimage(&Poly::x(), m).unwrap();
        assert!(zeros_interlace(&pair.psi, &pair.phi).unwrap());
    }
    // With gaps the alternation holds band by band.
    for m in [2, 3, 4] {
        let (e, pair) = pell_from_preimage(&quad(), m).unwrap();
        let zp = pair.psi.real_roots(1e-9).unwrap();
        let zf = pair.phi.real_roots(1e-9).unwrap();
        for (l, r) in e.bands() {
            let mut all: Vec<(f64, u8)> = zp
                .iter()
                .map(|&x| (x, 0))
                .chain(zf.iter().map(|&x| (x, 1)))
                .filter(|&(x, _)| x > l && x < r)
                .collect();
            all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            assert_eq!(all.len(), 2 * m - 1);
            assert!(all.windows(2).all(|w| w[0].1 != w[1].1), "m={m}");
        }
    }
}

#[test]
fn candidate_is_bounded() {
    let (ext, pair) = pell_from_preimage(&quad(), 2).unwrap();
    let e = inner();
    for rho in [0.05, -0.05, 0.15, -0.15] {
        let cand = candidate_from_extension(&e, &ext, &pair, rho).unwrap();
        assert!(cand.sup_e <= 1.0 + 1e-8);
        assert_eq!(cand.points.len(), 4);
        for j in 0..4 {
            let p = cand.ahlfors_poly(j);
            assert!(p.eval(cand.points[j]).norm() < 1e-10);
            let d = p.derivative().eval(cand.points[j]).norm();
            assert!((d - cand.derivs[j]).abs() < 1e-8 * d);
        }
    }
}

#[test]
fn candidate_on_full_preimage() {
    // Every end is shared, so Phi_E = Phi R^2 and |p|^2 = Psi^2 + rho^2 Phi^2 R^4.
    let (ext, pair) = pell_from_preimage(&quad(), 2).unwrap();
    let rho = 0.3;
    let cand = candidate_from_extension(&ext, &ext, &pair, rho).unwrap();
    assert!(cand.sup_e <= 1.0 + 1e-8);
    let f = |x: f64| {
        let r = pair.r2.eval(x);
        pair.psi.eval(x).powi(2) + rho * rho * (pair.phi.eval(x) * r).powi(2)
    };
    let mut worst: f64 = 0.0;
    for (l, r) in ext.bands() {
        for k in 0..=2000 {
            worst = worst.max(f(l + (r - l) * k as f64 / 2000.0));
        }
    }
    assert!(worst <= 1.0 + 1e-10 && (worst - cand.sup_e * cand.sup_e).abs() < 1e-6);
}

#[test]
fn inadmissible_rho() {
    let (ext, pair) = pell_from_preimage(&quad(), 2).unwrap();
    assert!(matches!(
        candidate_from_extension(&inner(), &ext, &pair, 0.5),
        Err(ahlfors::Error::Admissibility(_))
    ));
}

#[test]
fn small_rho_limit() {
    let (ext, pair) = pell_from_preimage(&quad(), 2).unwrap();
    let cand = candidate_from_extension(&inner(), &ext, &pair, 1e-7).unwrap();
    let psi_roots = pair.psi.real_roots(1e-9).unwrap();
    for z in &cand.points {
        assert!(z.im.abs() < 1e-5);
        assert!(psi_roots.iter().any(|r| (r - z.re).abs() < 1e-5));
    }
}

#[test]
fn sign_of_rho_conjugates_zeros() {
    let (ext, pair) = pell_from_preimage(&quad(), 2).unwrap();
    let a = candidate_from_extension(&inner(), &ext, &pair, 0.1).unwrap();
    let b = candidate_from_extension(&inner(), &ext, &pair, -0.1).unwrap();
    assert!(a.zeros_in_lower(1e-10) != b.zeros_in_lower(1e-10));
    for z in &a.points {
        assert!(b.points.iter().any(|w| (w - z.conj()).norm() < 1e-9));
    }
}

#[test]
fn kolmogorov_identity_on_interval() {
    let s = Support::Bands(BandSystem::from_bands(&[(-1.0, 1.0)]).unwrap());
    let p = ComplexPoly(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    let r = kolmogorov_check(&p, &s, c(0.0, 0.0), KolmogorovOptions::default()).unwrap();
    assert!(r.passes && !r.inconclusive);
}

#[test]
fn kolmogorov_chebyshev() {
    let s = Support::Bands(BandSystem::from_bands(&[(-1.0, 1.0)]).unwrap());
    let t = chebyshev_t(5);
    let p = ComplexPoly::from_real(&t);
    let r = kolmogorov_check(&p, &s, c(0.0, 0.0), KolmogorovOptions::default()).unwrap();
    assert!(r.passes);
    assert!(r.contact.len() >= 6);
}

#[test]
fn kolmogorov_candidate_and_jitter() {
    let (ext, pair) = pell_from_preimage(&quad(), 2).unwrap();
    let e = inner();
    let s = Support::Bands(e.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for rho in [0.05, -0.15] {
        let cand = candidate_from_extension(&e, &ext, &pair, rho).unwrap();
        for j in 0..cand.points.len() {
            let zj = cand.points[j];
            let p = cand.ahlfors_poly(j);
            let r = kolmogorov_check(&p, &s, zj, KolmogorovOptions::default()).unwrap();
            assert!(r.passes, "rho={rho} j={j} margin={}", r.margin);

            let q = p.deflate(zj);
            let jq = ComplexPoly(
                q.0.iter()
                    .map(|a| a * Complex64::new(1.0 + 0.01 * rng.gen_range(-1.0..1.0), 0.01 * rng.gen_range(-1.0..1.0)))
                    .collect(),
            );
            let jp = jq.times_linear(zj);
            let sup = sup_on_bands(&e, &|x| jp.eval(c(x, 0.0)).norm(), 400);
            let jp = ComplexPoly(jp.0.iter().map(|a| a / sup).collect());
            let r = kolmogorov_check(&jp, &s, zj, KolmogorovOptions::default()).unwrap();
            assert!(!r.passes && r.margin > 0.0, "rho={rho} j={j}");
        }
    }
}
