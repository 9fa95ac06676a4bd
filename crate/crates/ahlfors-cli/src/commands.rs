//! Subcommand implementations.

use std::path::Path;

use ahlfors::abelian::{basis_differentials, character_of_sum, limit_character, CharacterVector, Problem};
use ahlfors::extremal_poly::{candidate_from_extension, kolmogorov_check, pell_from_preimage, KolmogorovOptions};
use ahlfors::geometry::{BandSystem, GapPoint, Instance, Kind};
use ahlfors::inversion::{bifurcation_scan, gaji_solve, real_inversion};
use ahlfors::kernels::{predict_complex, predict_real_gap};
use ahlfors::oracle::{convergence_sweep, extremal_deriv, OracleOptions, Support};
use ahlfors::poly::Poly;
use ahlfors::potential::{capacity_and_robin, Comb, PoleGreen};
use ahlfors::Complex64;
use serde_json::json;

use crate::output::{self, parse_csv, Cell, Table};
use crate::svg::{self, Series, Style};
use crate::{Cli, CliError, Command, InstanceArg, PlotKind, PredictKind};

pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Usage(format!("cannot parse complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let im_of = |s: &str| -> Result<f64, CliError> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(Complex64::new(body[..k].parse().map_err(|_| bad())?, im_of(&body[k..])?)),
        None => Ok(Complex64::new(0.0, im_of(body)?)),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: {v:?}"))))
        .collect()
}

fn parse_degrees(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad degree list {s:?}"));
    let out: Vec<usize> = if s.contains(':') {
        let p: Vec<usize> = s.split(':').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        if p.len() != 3 || p[2] == 0 || p[0] > p[1] {
            return Err(bad());
        }
        (p[0]..=p[1]).step_by(p[2]).collect()
    } else {
        s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn load(inst: &InstanceArg) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(&inst.instance)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", inst.instance.display())))?;
    Ok(Instance::from_json(&text)?)
}

fn load_bands(inst: &InstanceArg) -> Result<BandSystem, CliError> {
    match load(inst)? {
        Instance::Bands(b) => Ok(b),
        Instance::Arcs(_) => Err(CliError::Usage("this command needs a J or S instance".into())),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(p) => output::write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Describe(inst) => {
            let v = match load(inst)? {
                Instance::Bands(e) => json!({
                    "kind": if e.kind() == Kind::J { "J" } else { "S" },
                    "g": e.g(),
                    "bands": e.bands(),
                    "finite_gaps": e.finite_gaps(),
                    "branch_points": e.branch_points(),
                }),
                Instance::Arcs(a) => json!({
                    "kind": "T",
                    "gaps": a.gaps(),
                    "arcs": a.arcs(),
                }),
            };
            emit(cli, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))
        }
        Command::Comb(inst) => {
            let comb = Comb::new(&load_bands(inst)?)?;
            let d = comb.data();
            let mut t = Table::new("comb", &["gap", "critical", "omega", "height"]);
            for k in 0..d.critical.len() {
                t.push(vec![(k + 1).into(), d.critical[k].into(), d.omega[k].into(), d.heights[k].into()]);
            }
            emit(cli, &t.render())
        }
        Command::Green { inst, z, x0 } => {
            let e = load_bands(inst)?;
            let mut t = Table::new("green", &["re", "im", "green"]);
            let pole = x0.map(|x| PoleGreen::new(&e, x)).transpose()?;
            let comb = if pole.is_none() { Some(Comb::new(&e)?) } else { None };
            for s in z {
                let p = parse_complex(s)?;
                let g = match (&pole, &comb) {
                    (Some(pg), _) => pg.eval(p)?,
                    (_, Some(c)) => c.green_inf(p)?,
                    _ => unreachable!(),
                };
                t.push(vec![p.re.into(), p.im.into(), g.into()]);
            }
            emit(cli, &t.render())
        }
        Command::Capacity(inst) => {
            let c = capacity_and_robin(&load_bands(inst)?)?;
            let mut t = Table::new("capacity", &["capacity", "robin", "spread"]);
            t.push(vec![c.cap.into(), c.robin.into(), c.spread.into()]);
            emit(cli, &t.render())
        }
        Command::Hm { inst, z } => {
            let e = load_bands(inst)?;
            let p = parse_complex(z)?;
            let b = basis_differentials(&e)?;
            let w = b.harmonic_measures(p)?;
            let bm = b.band_measures(p)?;
            let mut t = Table::new("hm", &["k", "omega_nested", "band_measure"]);
            for k in 0..bm.len() {
                let nested = if k < w.len() { w[k] } else { f64::NAN };
                t.push(vec![k.into(), nested.into(), bm[k].into()]);
            }
            emit(cli, &t.render())
        }
        Command::Invert { inst, beta } => {
            let e = load_bands(inst)?;
            let b = basis_differentials(&e)?;
            let beta = CharacterVector::new(parse_list(beta)?);
            if beta.g() != e.g() {
                return Err(CliError::Usage(format!("beta needs {} entries", e.g())));
            }
            let xs = real_inversion(&b, &beta)?;
            let back = character_of_sum(&b, &xs)?;
            let mut t = Table::new("invert", &["gap", "t", "x", "residual"]);
            let res = back.dist(&beta);
            for p in &xs {
                t.push(vec![p.gap.into(), p.t.into(), p.position(&e).into(), res.into()]);
            }
            emit(cli, &t.render())
        }
        Command::Gaji { inst, beta, z0 } => {
            let e = load_bands(inst)?;
            let z0 = parse_complex(z0)?;
            let r = gaji_solve(&e, &CharacterVector::new(parse_list(beta)?), z0)?;
            let mut t = Table::new(
                "gaji",
                &["branch", "gap", "t", "x", "rho", "rho_t2", "cs1", "cs2", "realness"],
            );
            for (k, s) in r.solutions.iter().enumerate() {
                for (p, x) in s.x.iter().zip(&s.positions) {
                    t.push(vec![
                        k.into(),
                        p.gap.into(),
                        p.t.into(),
                        (*x).into(),
                        s.rho.into(),
                        s.rho_t2.into(),
                        s.cs1_residual.into(),
                        s.cs2_residual.into(),
                        s.realness_defect.into(),
                    ]);
                }
            }
            emit(cli, &t.render())
        }
        Command::Bifurcation { inst, z0, lo, hi, steps } => {
            let e = load_bands(inst)?;
            if *steps < 2 || !(lo < hi) {
                return Err(CliError::Usage("need lo < hi and at least 2 steps".into()));
            }
            let scan = bifurcation_scan(&e, *lo, *hi, *steps, parse_complex(z0)?)?;
            let mut t = Table::new(
                "bifurcation",
                &["beta", "branch", "branches", "x0", "x1", "rho2", "rho_t2", "valid"],
            );
            for r in &scan.rows {
                let x = |k: usize| r.positions.get(k).copied().map(Cell::from).unwrap_or(Cell::Float(f64::NAN));
                t.push(vec![
                    r.beta.into(),
                    r.branch.into(),
                    r.branches.into(),
                    x(0),
                    x(1),
                    r.rho2.into(),
                    r.rho_t2.into(),
                    r.valid.into(),
                ]);
            }
            emit(cli, &t.render())
        }
        Command::Predict { inst, beta, z0, x0 } => {
            let e = load_bands(inst)?;
            let beta = CharacterVector::new(parse_list(beta)?);
            let mut t = Table::new("predict", &["branch", "y", "rho2", "rho_t2", "valid"]);
            match (z0, x0) {
                (Some(z), None) => {
                    let p = predict_complex(&e, parse_complex(z)?, &beta)?;
                    for (k, b) in p.branches.iter().enumerate() {
                        t.push(vec![k.into(), b.y.into(), b.rho2.into(), b.rho_t2.into(), b.valid.into()]);
                    }
                }
                (None, Some(x)) => {
                    let y = predict_real_gap(&e, *x, &beta)?;
                    t.push(vec![0usize.into(), y.into(), f64::NAN.into(), f64::NAN.into(), true.into()]);
                }
                _ => return Err(CliError::Usage("give exactly one of --z0 and --x0".into())),
            }
            emit(cli, &t.render())
        }
        Command::Candidate { inst, u, m, rho, n, contact_tol, lp_tol } => {
            let e = load_bands(inst)?;
            let u = Poly::new(parse_list(u)?);
            let (ext, pair) = pell_from_preimage(&u, *m)?;
            if let Some(n) = n {
                if *n != pair.n {
                    return Err(CliError::Usage(format!("n = {n} but m deg U = {}", pair.n)));
                }
            }
            let cand = candidate_from_extension(&e, &ext, &pair, *rho)?;
            let support = Support::Bands(e.clone());
            let opts = KolmogorovOptions { contact_tol: *contact_tol, lp_tol: *lp_tol, ..KolmogorovOptions::default() };
            let mut kol = Vec::new();
            for (j, z) in cand.points.iter().enumerate() {
                let k = kolmogorov_check(&cand.ahlfors_poly(j), &support, *z, opts)?;
                kol.push(json!({
                    "passes": k.passes,
                    "margin": k.margin,
                    "contact": k.contact.len(),
                    "inconclusive": k.inconclusive,
                }));
            }
            let v = json!({
                "n": pair.n,
                "rho": cand.rho,
                "rho_t2": cand.rho_t2,
                "sup_e": cand.sup_e,
                "extension": ext.bands(),
                "zeros": cand.points.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "derivs": cand.derivs,
                "kolmogorov": kol,
            });
            emit(cli, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))
        }
        Command::Oracle { inst, n, z0, k, grid } => {
            let s = load(inst)?;
            let r = extremal_deriv(&s, *n, parse_complex(z0)?, OracleOptions { facets: *k, grid_factor: *grid })?;
            let mut t = Table::new("oracle", &["n", "lower", "upper", "contact_count", "iters"]);
            t.push(vec![r.n.into(), r.lower.into(), r.upper.into(), r.contact.len().into(), r.iterations.into()]);
            emit(cli, &t.render())
        }
        Command::Sweep { inst, z0, n, k, grid, predict } => sweep(cli, inst, z0, n, *k, *grid, *predict),
        Command::Selftest => {
            let (text, ok) = selftest();
            emit(cli, &text)?;
            if ok {
                Ok(())
            } else {
                Err(CliError::Numeric(ahlfors::Error::Accuracy {
                    msg: "selftest failed".into(),
                    estimate: f64::NAN,
                }))
            }
        }
        Command::Plot { csv, kind } => plot(cli, csv, *kind),
    }
}

fn sweep(cli: &Cli, inst: &InstanceArg, z0: &str, n: &str, k: usize, grid: usize, predict: PredictKind) -> Result<(), CliError> {
    let s = load(inst)?;
    let z0 = parse_complex(z0)?;
    let ns = parse_degrees(n)?;
    let opts = OracleOptions { facets: k, grid_factor: grid };
    let j_bands = match &s {
        Instance::Bands(e) if e.kind() == Kind::J => Some(e.clone()),
        _ => None,
    };
    let rows = match (&j_bands, predict) {
        (Some(e), PredictKind::Auto) => {
            let comb = Comb::new(e)?;
            let g = comb.green_inf(z0)?;
            let om = comb.omegas();
            let beta = |n: usize| limit_character(&om, n as f64, Problem::J);
            let scale = move |n: usize| (-(n as f64) * g).exp();
            let pred = |n: usize| -> ahlfors::Result<f64> {
                let b = beta(n);
                let v = if z0.im == 0.0 {
                    predict_real_gap(e, z0.re, &b)
                } else {
                    predict_complex(e, z0, &b).map(|p| p.valid_values().into_iter().fold(f64::NAN, f64::max))
                };
                match v {
                    Err(ahlfors::Error::OutOfRegion(_)) => Ok(f64::NAN),
                    other => other,
                }
            };
            convergence_sweep(&s, z0, &ns, opts, &scale, &pred)?
        }
        (Some(e), PredictKind::None) => {
            let g = Comb::new(e)?.green_inf(z0)?;
            convergence_sweep(&s, z0, &ns, opts, &|n| (-(n as f64) * g).exp(), &|_| Ok(f64::NAN))?
        }
        (None, PredictKind::Auto) => {
            return Err(CliError::Usage("predictions need a J instance; use --predict none".into()));
        }
        (None, PredictKind::None) => convergence_sweep(&s, z0, &ns, opts, &|_| 1.0, &|_| Ok(f64::NAN))?,
    };
    let mut t = Table::new("sweep", &["n", "lower", "upper", "value", "scaled", "predicted", "ratio"]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.lower.into(),
            r.upper.into(),
            r.value.into(),
            r.scaled.into(),
            r.predicted.into(),
            r.ratio.into(),
        ]);
    }
    emit(cli, &t.render())
}

type Check = (&'static str, fn() -> ahlfors::Result<bool>);

fn selftest() -> (String, bool) {
    let checks: [Check; 6] = [
        ("period normalization", || {
            let e = BandSystem::from_bands(&[(-2.0, -1.0), (0.5, 2.0)])?;
            Ok(basis_differentials(&e)?.period_residual()? < 1e-10)
        }),
        ("band measures sum to one", || {
            let e = BandSystem::from_bands(&[(-3.0, -2.0), (-1.0, 0.5), (1.0, 2.0)])?;
            let m = basis_differentials(&e)?.band_measures(Complex64::new(0.3, 0.7))?;
            Ok((m.iter().sum::<f64>() - 1.0).abs() < 1e-8)
        }),
        ("real inversion round trip", || {
            let e = BandSystem::from_bands(&[(-3.0, -2.0), (-1.0, 0.5), (1.0, 2.0)])?;
            let b = basis_differentials(&e)?;
            let xs = vec![GapPoint::new(1, 0.3), GapPoint::new(2, 0.8)];
            let got = real_inversion(&b, &character_of_sum(&b, &xs)?)?;
            Ok(got.iter().zip(&xs).all(|(p, q)| ahlfors::abelian::circle_dist(p.t, q.t) < 1e-9))
        }),
        ("halfline generalized inversion", || {
            let e = ahlfors::geometry::validate_system(&[], Kind::S)?;
            let z0 = Complex64::new(0.5, 1.0);
            let r = gaji_solve(&e, &CharacterVector::new(vec![]), z0)?;
            Ok(r.solutions[0].positions[0].finite().is_some_and(|x| (x + z0.norm()).abs() < 1e-10))
        }),
        ("oracle degree one", || {
            let s = Support::Bands(BandSystem::from_bands(&[(-1.0, 1.0)])?);
            let r = extremal_deriv(&s, 1, Complex64::new(2.0, 0.0), OracleOptions::default())?;
            Ok((r.value - 1.0 / 3.0).abs() < 1e-10)
        }),
        ("candidate extremality", || {
            let (ext, pair) = pell_from_preimage(&Poly::new(vec![-3.0, 0.0, 1.0]), 2)?;
            let r2 = 2f64.sqrt();
            let e = BandSystem::from_bands(&[(-1.9, -r2), (r2 + 0.1, 2.0)])?;
            let c = candidate_from_extension(&e, &ext, &pair, -0.05)?;
            let k = kolmogorov_check(&c.ahlfors_poly(0), &Support::Bands(e), c.points[0], KolmogorovOptions::default())?;
            Ok(k.passes && c.sup_e <= 1.0 + 1e-8)
        }),
    ];
    let mut text = String::new();
    let mut ok = true;
    for (name, f) in checks {
        let pass = matches!(f(), Ok(true));
        ok &= pass;
        text.push_str(&format!("selftest {name}: {}\n", if pass { "PASS" } else { "FAIL" }));
    }
    (text, ok)
}

fn plot(cli: &Cli, csv: &Path, kind: PlotKind) -> Result<(), CliError> {
    let text = std::fs::read_to_string(csv).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", csv.display())))?;
    let p = parse_csv(&text)?;
    let col = |name: &str| p.column(name).ok_or_else(|| CliError::Format(format!("missing column {name:?}")));
    let kind = match kind {
        PlotKind::Auto => match p.command.as_deref() {
            Some("sweep") => PlotKind::Sweep,
            Some("bifurcation") => PlotKind::Bifurcation,
            _ => PlotKind::Auto,
        },
        k => k,
    };
    let (title, xlabel, series) = match kind {
        PlotKind::Sweep => {
            let n = p.floats(col("n")?)?;
            let mut series = vec![Series { label: "scaled".into(), xs: n.clone(), ys: p.floats(col("scaled")?)?, style: Style::Line }];
            let pred = p.floats(col("predicted")?)?;
            if pred.iter().any(|v| v.is_finite()) {
                series.push(Series { label: "predicted".into(), xs: n, ys: pred, style: Style::Line });
            }
            ("convergence", "n", series)
        }
        PlotKind::Bifurcation => {
            let b = p.floats(col("beta")?)?;
            let series = vec![
                Series { label: "rho^2".into(), xs: b.clone(), ys: p.floats(col("rho2")?)?, style: Style::Points },
                Series { label: "rho~^2".into(), xs: b, ys: p.floats(col("rho_t2")?)?, style: Style::Points },
            ];
            ("branch scan", "beta", series)
        }
        PlotKind::Auto => {
            if p.columns.len() < 2 {
                return Err(CliError::Format("need at least two columns".into()));
            }
            let x = p.floats(0)?;
            let mut series = Vec::new();
            for k in 1..p.columns.len() {
                if let Ok(ys) = p.floats(k) {
                    series.push(Series { label: p.columns[k].clone(), xs: x.clone(), ys, style: Style::Line });
                }
            }
            ("table", p.columns[0].as_str(), series)
        }
    };
    emit(cli, &svg::render(title, xlabel, &series))
}
