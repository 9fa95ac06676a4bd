//! Comb maps, Green and Martin functions, critical points, capacities and
//! Robin constants.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::abelian::Radical;
use crate::geometry::{moebius_image, moebius_reduce, BandSystem, Kind, MoebiusMap, Position};
use crate::poly::Poly;
use crate::quadrature::{integrate_from_branch_split, integrate_regular};
use crate::{Error, Result};

/// Residual target for the gap conditions defining the critical points.
pub const CRITICAL_TOL: f64 = 1e-11;

/// Critical points, slit bases and slit heights of the comb image.
#[derive(Debug, Clone, PartialEq)]
pub struct CombData {
    pub critical: Vec<f64>,
    pub omega: Vec<f64>,
    pub heights: Vec<f64>,
    /// Total base width (pi for J systems).
    pub width: Option<f64>,
}

/// Comb map `tau` of `C+ \ E`.
///
/// J: `tau = i int_{b0}^z C/R`, `Im tau = G(z, inf)`.
/// S: `tau = -i int_0^z C/(2R)`, `Im tau = M(z)` (Martin function).
/// `C(x) = prod (x - c_j)` is monic with one root in every finite gap.
#[derive(Debug, Clone)]
pub struct Comb {
    e: BandSystem,
    radical: Radical,
    crit: Vec<f64>,
    base: Vec<f64>,
    heights: Vec<f64>,
    residual: f64,
}

fn kappa(kind: Kind) -> Complex64 {
    match kind {
        Kind::J => Complex64::new(0.0, 1.0),
        Kind::S => Complex64::new(0.0, -0.5),
    }
}

fn c_eval(crit: &[f64], z: Complex64) -> Complex64 {
    crit.iter().fold(Complex64::new(1.0, 0.0), |acc, &c| acc * (z - c))
}

/// Gap integrals `int_{gap j} C / R`, j = 1..g.
fn gap_conditions(rad: &Radical, g: usize, crit: &[f64]) -> Result<Vec<f64>> {
    (1..=g)
        .map(|j| {
            Ok(rad
                .segment_integral(rad.gap_segment(j), |x| c_eval(crit, Complex64::new(x, 0.0)).re)?
                .re)
        })
        .collect()
}

/// Scale of the gap conditions used to make residuals relative:
/// `max_j int_{gap j} (|gap j| / 2)^g / |R|`.
fn gap_scale(rad: &Radical, g: usize, _crit: &[f64]) -> Result<f64> {
    let mut s: f64 = 0.0;
    let bp = rad.branch_points();
    for j in 1..=g {
        let seg = rad.gap_segment(j);
        let w = (0.5 * (bp[seg + 1] - bp[seg])).powi(g as i32);
        let v = rad.segment_integral(seg, |_| w)?;
        s = s.max(v.norm());
    }
    Ok(s.max(f64::MIN_POSITIVE))
}

/// The unique `c_j in (a_j, b_j)` making all gap integrals of `C/R` vanish.
///
/// The monic coefficients of `C` solve a linear moment system; the roots are
/// then polished by Newton steps on the gap conditions.
pub fn critical_points(e: &BandSystem) -> Result<Vec<f64>> {
    let g = e.g();
    if g == 0 {
        return Ok(Vec::new());
    }
    let rad = Radical::new(e);
    let bp = e.branch_points();
    let center = 0.5 * (bp[0] + bp[bp.len() - 1]);
    let scale = 0.5 * (bp[bp.len() - 1] - bp[0]);
    let mut m = DMatrix::zeros(g, g);
    let mut rhs = DVector::zeros(g);
    for j in 1..=g {
        let seg = rad.gap_segment(j);
        for p in 0..=g {
            let v = rad
                .segment_integral(seg, |x| ((x - center) / scale).powi(p as i32))?
                .re;
            if p < g {
                m[(j - 1, p)] = v;
            } else {
                rhs[j - 1] = -v;
            }
        }
    }
    let coef = m.lu().solve(&rhs).ok_or(Error::Solver {
        msg: "singular moment system for critical points".into(),
        residual: f64::NAN,
    })?;
    let mut cu: Vec<f64> = coef.iter().copied().collect();
    cu.push(1.0);
    let roots = Poly(cu).roots()?;
    let mut crit: Vec<f64> = roots.iter().map(|z| center + scale * z.re).collect();
    crit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max_im = roots.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_im > 1e-6 {
        return Err(Error::Solver {
            msg: "critical point polynomial has non-real roots".into(),
            residual: max_im,
        });
    }
    // Newton polish: dF_j/dc_i = -int_{gap j} prod_{l != i}(x - c_l) / R.
    for _ in 0..4 {
        let f = gap_conditions(&rad, g, &crit)?;
        let sc = gap_scale(&rad, g, &crit)?;
        let res = f.iter().map(|v| v.abs()).fold(0.0, f64::max) / sc;
        if res < 1e-14 {
            break;
        }
        let mut jac = DMatrix::zeros(g, g);
        for j in 1..=g {
            for i in 0..g {
                let others: Vec<f64> = crit
                    .iter()
                    .enumerate()
                    .filter(|&(l, _)| l != i)
                    .map(|(_, &c)| c)
                    .collect();
                jac[(j - 1, i)] = -rad
                    .segment_integral(rad.gap_segment(j), |x| {
                        c_eval(&others, Complex64::new(x, 0.0)).re
                    })?
                    .re;
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(f.clone()))
            .ok_or(Error::Solver {
                msg: "singular Jacobian in critical point polish".into(),
                residual: res,
            })?;
        for i in 0..g {
            crit[i] -= step[i];
        }
    }
    for (j, &c) in crit.iter().enumerate() {
        let gap = e.gap(j + 1);
        if !(c > gap.a && c < gap.b) {
            return Err(Error::Solver {
                msg: format!("critical point {c} outside gap {}", j + 1),
                residual: f64::NAN,
            });
        }
    }
    Ok(crit)
}

impl Comb {
    pub fn new(e: &BandSystem) -> Result<Self> {
        let crit = critical_points(e)?;
        let radical = Radical::new(e);
        let g = e.g();
        let residual = if g > 0 {
            let f = gap_conditions(&radical, g, &crit)?;
            f.iter().map(|v| v.abs()).fold(0.0, f64::max) / gap_scale(&radical, g, &crit)?
        } else {
            0.0
        };
        if residual > CRITICAL_TOL {
            return Err(Error::Solver {
                msg: "critical point conditions not met".into(),
                residual,
            });
        }
        let k = kappa(e.kind());
        let nb = radical.branch_points().len();
        let mut base = vec![0.0; nb];
        for i in 0..=g {
            let l = 2 * i;
            if l + 1 >= nb {
                break;
            }
            let v = k * radical.segment_integral(l, |x| c_eval(&crit, Complex64::new(x, 0.0)).re)?;
            base[l + 1] = base[l] + v.re;
            if l + 2 < nb {
                base[l + 2] = base[l + 1];
            }
        }
        let mut comb = Comb {
            e: e.clone(),
            radical,
            crit,
            base,
            heights: Vec::new(),
            residual,
        };
        comb.heights = (1..=g)
            .map(|j| {
                let idx = comb.radical.gap_segment(j);
                comb.tau_from(idx, Complex64::new(comb.crit[j - 1], 0.0)).im
            })
            .collect();
        Ok(comb)
    }

    pub fn system(&self) -> &BandSystem {
        &self.e
    }

    pub fn critical(&self) -> &[f64] {
        &self.crit
    }

    /// Relative residual of the critical-point gap conditions.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `Re tau` at every finite branch point.
    pub fn base_values(&self) -> &[f64] {
        &self.base
    }

    /// Slit base angles `omega_k = tau(a_k)`, k = 1..g.
    pub fn omegas(&self) -> Vec<f64> {
        (1..=self.e.g()).map(|k| self.base[2 * k - 1]).collect()
    }

    pub fn data(&self) -> CombData {
        CombData {
            critical: self.crit.clone(),
            omega: self.omegas(),
            heights: self.heights.clone(),
            width: match self.e.kind() {
                Kind::J => Some(self.base[self.base.len() - 1]),
                Kind::S => None,
            },
        }
    }

    /// `tau'(z)`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        kappa(self.e.kind()) * c_eval(&self.crit, z) / self.radical.eval(z)
    }

    /// `tau(z)` from the branch point `bp[idx]` along a straight segment.
    pub fn tau_from(&self, idx: usize, z: Complex64) -> Complex64 {
        let e = self.radical.branch_points()[idx];
        let k = kappa(self.e.kind());
        let f = |w: Complex64| c_eval(&self.crit, w) / self.radical.eval_without(idx, w);
        Complex64::new(self.base[idx], 0.0)
            + k * integrate_from_branch_split(f, Complex64::new(e, 0.0), z)
    }

    fn nearest_bp(&self, z: Complex64) -> usize {
        let bp = self.radical.branch_points();
        let mut best = 0;
        for i in 1..bp.len() {
            if (z - bp[i]).norm() < (z - bp[best]).norm() {
                best = i;
            }
        }
        best
    }

    /// `tau(z)` for `Im z >= 0`.
    pub fn tau(&self, z: Complex64) -> Result<Complex64> {
        if z.im < 0.0 {
            return Err(Error::Domain("comb map is evaluated in the closed upper half-plane".into()));
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Geometry("non-finite evaluation point".into()));
        }
        Ok(self.tau_from(self.nearest_bp(z), z))
    }

    /// `Im tau(z)`, extended symmetrically to the lower half-plane.
    pub fn im_tau(&self, z: Complex64) -> Result<f64> {
        let z = if z.im < 0.0 { z.conj() } else { z };
        if z.im == 0.0 && self.e.contains(z.re) {
            return Ok(0.0);
        }
        Ok(self.tau(z)?.im.max(0.0))
    }

    /// Green function with pole at infinity (J systems).
    pub fn green_inf(&self, z: Complex64) -> Result<f64> {
        if self.e.kind() != Kind::J {
            return Err(Error::Domain("Green function at infinity needs a J system".into()));
        }
        self.im_tau(z)
    }

    /// Martin function (S systems).
    pub fn martin(&self, z: Complex64) -> Result<f64> {
        if self.e.kind() != Kind::S {
            return Err(Error::Domain("Martin function needs an S system".into()));
        }
        self.im_tau(z)
    }

    /// Boundary density `d tau / dx` on a band (real, nonnegative).
    pub fn band_density(&self, x: f64) -> f64 {
        self.derivative(Complex64::new(x, 0.0)).re
    }
}

/// Critical points, slit bases and heights.
pub fn comb_data(e: &BandSystem) -> Result<CombData> {
    Ok(Comb::new(e)?.data())
}

/// `tau(z)` for a single evaluation.
pub fn comb_map(e: &BandSystem, z: Complex64) -> Result<Complex64> {
    Comb::new(e)?.tau(z)
}

/// Logarithmic capacity and Robin constant of a J system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    pub cap: f64,
    pub robin: f64,
    /// Disagreement of the two Richardson estimates.
    pub spread: f64,
}

/// `G(z, inf) = log|z| - log cap + o(1)` extrapolated on the imaginary axis.
pub fn capacity_of(comb: &Comb) -> Result<Capacity> {
    if comb.system().kind() != Kind::J {
        return Err(Error::Domain("capacity needs a J system".into()));
    }
    let (mid, _) = comb.system().hull().unwrap();
    let f = |y: f64| -> Result<f64> {
        let z = Complex64::new(mid, y);
        Ok(comb.green_inf(z)? - z.norm().ln())
    };
    let s = comb.system().scale();
    let (f1, f2, f3) = (f(1e3 * s)?, f(1e4 * s)?, f(1e5 * s)?);
    let r1 = (100.0 * f2 - f1) / 99.0;
    let r2 = (100.0 * f3 - f2) / 99.0;
    let spread = (r1 - r2).abs();
    // The o(1) term depends on the distance to the hull center only.
    let robin = r2;
    if spread > 1e-6 {
        return Err(Error::Accuracy {
            msg: "capacity extrapolation spread too large".into(),
            estimate: (-robin).exp(),
        });
    }
    Ok(Capacity {
        cap: (-robin).exp(),
        robin,
        spread,
    })
}

pub fn capacity_and_robin(e: &BandSystem) -> Result<Capacity> {
    capacity_of(&Comb::new(e)?)
}

/// Green function of `C \ E` with a finite real pole `x0`, evaluated through
/// the reduction `G_E(z, x0) = G_{E'}(m(z), inf)`.
#[derive(Debug, Clone)]
pub struct PoleGreen {
    x0: f64,
    m: MoebiusMap,
    comb: Comb,
}

impl PoleGreen {
    pub fn new(e: &BandSystem, x0: f64) -> Result<Self> {
        // Far poles use the near-identity map `x0 z/(x0 - z)`.
        let (ep, m) = if x0.abs() > 1.0 {
            let m = MoebiusMap::new(x0, 0.0, -1.0, x0)?;
            (moebius_image(e, &m, x0)?, m)
        } else {
            moebius_reduce(e, x0)?
        };
        Ok(PoleGreen {
            x0,
            m,
            comb: Comb::new(&ep)?,
        })
    }

    pub fn pole(&self) -> f64 {
        self.x0
    }

    pub fn reduced(&self) -> &Comb {
        &self.comb
    }

    pub fn map(&self) -> MoebiusMap {
        self.m
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        if z == Complex64::new(self.x0, 0.0) {
            return Err(Error::Domain(
                "evaluation at the pole; use the Robin constant".into(),
            ));
        }
        let w = self.m.apply(z);
        self.comb.green_inf(w)
    }

    pub fn eval_pos(&self, z: Position) -> Result<f64> {
        match self.m.apply_real(z) {
            Position::Finite(w) => self.comb.green_inf(Complex64::new(w, 0.0)),
            Position::Infinity => Err(Error::Domain("evaluation at the pole".into())),
        }
    }

    /// Robin constant from `gamma(x0) = -log cap(E') + log|m(z)(z - x0)|`
    /// at `z = x0`.
    pub fn robin(&self) -> Result<f64> {
        let k = (self.m.p * self.x0 + self.m.q).abs();
        Ok(capacity_of(&self.comb)?.robin + k.ln())
    }
}

/// `G_E(z, x0)`.
pub fn green_real_pole(e: &BandSystem, x0: f64, z: Complex64) -> Result<f64> {
    PoleGreen::new(e, x0)?.eval(z)
}

/// Robin constant at a real point off `E`.
pub fn robin_at(e: &BandSystem, x0: f64) -> Result<f64> {
    PoleGreen::new(e, x0)?.robin()
}

/// Robin constant by direct sampling of `G(z, x0) + log|z - x0|` at
/// `z = x0 + i h`, `h in {1e-3, 1e-4}`, with linear extrapolation.
pub fn robin_sampled(e: &BandSystem, x0: f64) -> Result<f64> {
    let pg = PoleGreen::new(e, x0)?;
    let s = |h: f64| -> Result<f64> { Ok(pg.eval(Complex64::new(x0, h))? + h.ln()) };
    let (f1, f2) = (s(1e-3)?, s(1e-4)?);
    Ok((10.0 * f2 - f1) / 9.0)
}

/// Sup over `zs` of `|M~(z) - M(z) + (1/pi) int_{added} G_E(z, x) d tau~(x)|`,
/// where `M` and `M~` are the comb imaginary parts of `E` and of the extension
/// `E~ = E + added`.
pub fn extension_identity_check(
    e: &BandSystem,
    ext: &BandSystem,
    added: &[(f64, f64)],
    zs: &[Complex64],
) -> Result<f64> {
    if e.kind() != ext.kind() {
        return Err(Error::Validation("extension must have the same kind".into()));
    }
    let comb = Comb::new(e)?;
    let comb_t = Comb::new(ext)?;
    let mut worst: f64 = 0.0;
    for &z in zs {
        let mut corr = 0.0;
        for &(u, v) in added {
            let (mid, half) = (0.5 * (u + v), 0.5 * (v - u));
            // x = mid + half cos(theta) removes the endpoint singularities.
            let h = |th: f64| -> f64 {
                let x = mid + half * th.cos();
                let g = PoleGreen::new(e, x).and_then(|pg| pg.eval(z));
                match g {
                    Ok(g) => g * comb_t.band_density(x).abs() * half * th.sin(),
                    Err(_) => f64::NAN,
                }
            };
            corr += integrate_regular(h, 0.0, std::f64::consts::PI);
        }
        if !corr.is_finite() {
            return Err(Error::Accuracy {
                msg: "extension correction integral failed".into(),
                estimate: corr,
            });
        }
        let lhs = comb_t.im_tau(z)? - comb.im_tau(z)? + corr / std::f64::consts::PI;
        worst = worst.max(lhs.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_system;

    #[test]
    fn interval_green() {
        let e = validate_system(&[-2.0, 2.0], Kind::J).unwrap();
        let c = Comb::new(&e).unwrap();
        let g = c.green_inf(Complex64::new(3.0, 0.0)).unwrap();
        assert!((g - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        assert!((c.base_values()[1] - std::f64::consts::PI).abs() < 1e-12);
    }
}
