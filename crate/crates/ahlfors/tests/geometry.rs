use ahlfors::geometry::*;
use ahlfors::{Complex64, Error};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn j_system_from_raw() {
    let e = validate_system(&[-2.0, -1.0, 1.0, 2.0], Kind::J).unwrap();
    assert_eq!(e.g(), 1);
    assert_eq!(e.bands(), vec![(-2.0, -1.0), (1.0, 2.0)]);
    assert_eq!(e.hull(), Some((0.0, 2.0)));
    assert!(e.contains(1.5) && !e.contains(0.0));
    assert_eq!(e.gap_of(0.0), Some(1));
    assert_eq!(e.gap_of(5.0), Some(0));
}

#[test]
fn s_system_from_raw() {
    let e = validate_system(&[1.0, 2.0], Kind::S).unwrap();
    assert_eq!(e.g(), 1);
    assert!(e.contains(0.5) && e.contains(7.0) && !e.contains(1.5) && !e.contains(-1.0));
    assert_eq!(e.branch_points(), vec![0.0, 1.0, 2.0]);
}

#[test]
fn unordered_raw_rejected() {
    let r = validate_system(&[-2.0, -1.0, -1.5, 2.0], Kind::J);
    assert!(matches!(r, Err(Error::Validation(_))));
    assert!(validate_system(&[-2.0, -1.0, 1.0], Kind::J).is_err());
    assert!(validate_system(&[f64::NAN, 1.0], Kind::S).is_err());
}

#[test]
fn reduce_interval() {
    let e = BandSystem::from_bands(&[(-2.0, 2.0)]).unwrap();
    let (ep, m) = moebius_reduce(&e, 4.0).unwrap();
    let b = ep.bands();
    assert!(close(b[0].0, 1.0 / 6.0, 1e-15) && close(b[0].1, 0.5, 1e-15));
    assert_eq!(m.apply_real(Position::Finite(4.0)), Position::Infinity);
    assert!(moebius_reduce(&e, 1.0).is_err());
}

#[test]
fn reduce_halfline() {
    let e = validate_system(&[], Kind::S).unwrap();
    let (ep, _) = moebius_reduce(&e, -1.0).unwrap();
    let b = ep.bands();
    assert_eq!(b.len(), 1);
    assert!(close(b[0].0, -1.0, 1e-15) && close(b[0].1, 0.0, 1e-15));
}

#[test]
fn reduce_symmetric_two_bands() {
    let r2 = 2f64.sqrt();
    let e = BandSystem::from_bands(&[(-2.0, -r2), (r2, 2.0)]).unwrap();
    let (ep, _) = moebius_reduce(&e, 0.0).unwrap();
    let b = ep.bands();
    assert_eq!(b.len(), 2);
    assert!(close(b[0].0, -1.0 / r2, 1e-15) && close(b[0].1, -0.5, 1e-15));
    assert!(close(b[1].0, 0.5, 1e-15) && close(b[1].1, 1.0 / r2, 1e-15));
}

#[test]
fn coordinate_maps() {
    let (z, dz) = thintro_maps(ThinTro::S, Complex64::new(2.0, 0.0)).unwrap();
    assert!((z - Complex64::new(-4.0, 0.0)).norm() < 1e-15);
    assert!((dz - Complex64::new(-4.0, 0.0)).norm() < 1e-15);
    let (z, _) = thintro_maps(ThinTro::J, Complex64::new(1.0 + 1e-6, 0.0)).unwrap();
    assert!(z.norm() > 1e5);
    assert!(thintro_maps(ThinTro::J, Complex64::new(1.0, 0.0)).is_err());
    let (w, _) = thintro_maps(ThinTro::T { y0: 2.0 }, Complex64::new(2.0, 0.0)).unwrap();
    assert!((w - Complex64::new(0.0, -1.0)).norm() < 1e-15);
}

#[test]
fn j_map_derivative_matches_difference() {
    let l = Complex64::new(1.3, 0.4);
    let h = 1e-6;
    let (_, d) = thintro_maps(ThinTro::J, l).unwrap();
    let (a, _) = thintro_maps(ThinTro::J, l + h).unwrap();
    let (b, _) = thintro_maps(ThinTro::J, l - h).unwrap();
    assert!(((a - b) / (2.0 * h) - d).norm() < 1e-6 * d.norm());
}

#[test]
fn gap_points_roundtrip() {
    let e = BandSystem::from_bands(&[(-2.0, -1.0), (0.5, 2.0)]).unwrap();
    for (gap, x) in [(1, -0.3), (0, 7.0), (0, -40.0)] {
        let p = GapPoint::from_position(&e, gap, Position::Finite(x)).unwrap();
        assert!(close(p.position(&e).finite().unwrap(), x, 1e-12 * x.abs().max(1.0)));
    }
    let inf = GapPoint::from_position(&e, 0, Position::Infinity).unwrap();
    assert!(close(inf.t, 0.5, 1e-15));
    assert_eq!(inf.position(&e), Position::Infinity);
}

#[test]
fn arcs_from_angles() {
    let a = ArcSystem::new(&[0.5, 1.0, 2.0, 3.0]).unwrap();
    let arcs = a.arcs();
    assert_eq!(arcs.len(), 2);
    assert!(close(arcs[0].0, 1.0, 0.0) && close(arcs[0].1, 2.0, 0.0));
    assert!(close(arcs[1].1, 0.5 + std::f64::consts::TAU, 1e-15));
    assert!(ArcSystem::new(&[0.0, 7.0]).is_err());
}

#[test]
fn instance_json() {
    let i = Instance::from_json(r#"{"kind":"J","endpoints":[-2,-1,1,2]}"#).unwrap();
    assert_eq!(i.bands().unwrap().g(), 1);
    assert!(Instance::from_json(r#"{"kind":"Q","endpoints":[]}"#).is_err());
    assert!(matches!(
        Instance::from_json(r#"{"kind":"T","endpoints":[0.1,0.4]}"#).unwrap(),
        Instance::Arcs(_)
    ));
}
