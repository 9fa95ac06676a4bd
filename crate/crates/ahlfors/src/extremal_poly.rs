//! Pell pairs from polynomial preimages, candidate extremal polynomials
//! `rho Phi + i Psi`, and the Kolmogorov extremality test.

use num_complex::Complex64;

use crate::geometry::BandSystem;
use crate::oracle::lp::{lp_solve, LpSpec};
use crate::oracle::{golden_max, Support};
use crate::poly::{chebyshev_t, chebyshev_u, clean_near_real, eval_complex, roots_complex, Poly};
use crate::{Error, Result};

/// Anything that can be evaluated as a polynomial of known degree.
pub trait PolyEval {
    fn eval(&self, z: Complex64) -> Complex64;
    fn degree(&self) -> usize;
}

/// Complex polynomial in the monomial basis (ascending coefficients).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly(pub Vec<Complex64>);

impl ComplexPoly {
    pub fn from_real(p: &Poly) -> Self {
        ComplexPoly(p.0.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn roots(&self) -> Result<Vec<Complex64>> {
        roots_complex(&self.0)
    }

    pub fn derivative(&self) -> ComplexPoly {
        if self.0.len() <= 1 {
            return ComplexPoly(vec![Complex64::new(0.0, 0.0)]);
        }
        ComplexPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Quotient by `(z - r)` (synthetic division); the remainder is dropped.
    pub fn deflate(&self, r: Complex64) -> ComplexPoly {
        let d = self.0.len() - 1;
        let mut q = vec![Complex64::new(0.0, 0.0); d.max(1)];
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=d).rev() {
            acc = acc * r + self.0[k];
            q[k - 1] = acc;
        }
        ComplexPoly(q)
    }

    /// Product with `(z - r)`.
    pub fn times_linear(&self, r: Complex64) -> ComplexPoly {
        let mut out = vec![Complex64::new(0.0, 0.0); self.0.len() + 1];
        for (k, &c) in self.0.iter().enumerate() {
            out[k + 1] += c;
            out[k] -= c * r;
        }
        ComplexPoly(out)
    }
}

impl PolyEval for ComplexPoly {
    fn eval(&self, z: Complex64) -> Complex64 {
        eval_complex(&self.0, z)
    }

    fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
}

/// `Psi^2 - R^2 Phi^2 = 1` with `R^2` the monic polynomial vanishing at the
/// band ends of the preimage set.
#[derive(Debug, Clone, PartialEq)]
pub struct PellPair {
    pub n: usize,
    pub psi: Poly,
    pub phi: Poly,
    pub r2: Poly,
}

impl PellPair {
    /// Largest `|Psi^2 - R^2 Phi^2 - 1|` relative to `Psi^2 + |R^2| Phi^2`.
    pub fn residual(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| {
                let p = self.psi.eval(x);
                let f = self.phi.eval(x);
                let r = self.r2.eval(x);
                let v = p * p - r * f * f - 1.0;
                v.abs() / (p * p + (r * f * f).abs()).max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

fn merge_roots(mut r: Vec<f64>, tol: f64) -> (Vec<f64>, Vec<f64>) {
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut simple = Vec::new();
    let mut double = Vec::new();
    let mut i = 0;
    while i < r.len() {
        if i + 1 < r.len() && (r[i + 1] - r[i]).abs() <= tol {
            double.push(0.5 * (r[i] + r[i + 1]));
            i += 2;
        } else {
            simple.push(r[i]);
            i += 1;
        }
    }
    (simple, double)
}

/// `E = U^{-1}([-1, 1])` together with `Psi = T_m(U)` and the matching `Phi`.
pub fn pell_from_preimage(u: &Poly, m: usize) -> Result<(BandSystem, PellPair)> {
    let d = u.degree();
    if d == 0 || m == 0 {
        return Err(Error::Validation("generator needs deg U >= 1 and m >= 1".into()));
    }
    let lc = u.leading();
    let mut roots = Vec::new();
    for shift in [-1.0, 1.0] {
        let p = u.add(&Poly::constant(shift));
        for z in p.roots()? {
            let tol = 1e-7 * (1.0 + z.norm());
            if z.im.abs() > tol {
                return Err(Error::Admissibility(format!(
                    "generator has a critical value inside (-1, 1) (non-real preimage {z})"
                )));
            }
            roots.push(z.re);
        }
    }
    let scale = roots.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let (simple, double) = merge_roots(roots, 1e-6 * scale);
    if simple.len() % 2 != 0 || simple.is_empty() {
        return Err(Error::Admissibility("preimage endpoints do not pair up".into()));
    }
    let bands: Vec<(f64, f64)> = simple.chunks(2).map(|c| (c[0], c[1])).collect();
    let e = BandSystem::from_bands(&bands)?;
    let psi = chebyshev_t(m).compose(u);
    let phi = chebyshev_u(m - 1)
        .compose(u)
        .mul(&Poly::from_roots(&double))
        .scale(lc);
    let r2 = Poly::from_roots(&simple);
    Ok((
        e,
        PellPair {
            n: m * d,
            psi,
            phi,
            r2,
        },
    ))
}

/// Sorted real zeros of `a` and `b` alternate.
pub fn zeros_interlace(a: &Poly, b: &Poly) -> Result<bool> {
    let ra = a.real_roots(1e-8)?;
    let rb = b.real_roots(1e-8)?;
    let mut all: Vec<(f64, u8)> = ra.iter().map(|&x| (x, 0u8)).chain(rb.iter().map(|&x| (x, 1u8))).collect();
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    Ok(all.windows(2).all(|w| w[0].1 != w[1].1))
}

/// Candidate `p(z) = rho Phi_E(z) + i Psi(z)` for a set `E` inside the
/// preimage set, with its conjugated zeros and derivative values.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePoly {
    pub p: ComplexPoly,
    pub rho: f64,
    /// `-sup_E R_E^2`.
    pub rho_t2: f64,
    /// Conjugates of the zeros of `p`.
    pub points: Vec<Complex64>,
    /// `|P_j'(z_j)| = |p(z_j)| / (2 |Im z_j|)`.
    pub derivs: Vec<f64>,
    /// `Phi_E = Phi * prod over shared band ends (x - e)`.
    pub phi_e: Poly,
    pub psi: Poly,
    pub sup_e: f64,
}

impl CandidatePoly {
    /// `P_j(z) = (z - z_j)/(z - conj z_j) p(z)`.
    pub fn ahlfors_poly(&self, j: usize) -> ComplexPoly {
        let zj = self.points[j];
        self.p.deflate(zj.conj()).times_linear(zj)
    }

    /// All zeros of `p` lie in `Im z <= tol`.
    pub fn zeros_in_lower(&self, tol: f64) -> bool {
        self.points.iter().all(|z| -z.im <= tol)
    }
}

/// Supremum of `f` over the bands, by a cosine grid with golden refinement.
pub fn sup_on_bands<F: Fn(f64) -> f64>(e: &BandSystem, f: &F, per_band: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (l, r) in e.bands() {
        let x = |k: usize| 0.5 * (l + r) - 0.5 * (r - l) * (std::f64::consts::PI * k as f64 / per_band as f64).cos();
        let vals: Vec<f64> = (0..=per_band).map(|k| f(x(k))).collect();
        for k in 0..=per_band {
            best = best.max(vals[k]);
            let left = if k > 0 { vals[k - 1] } else { f64::NEG_INFINITY };
            let right = if k < per_band { vals[k + 1] } else { f64::NEG_INFINITY };
            if vals[k] >= left && vals[k] >= right && k > 0 && k < per_band {
                let (_, v) = golden_max(f, x(k - 1), x(k + 1));
                best = best.max(v);
            }
        }
    }
    best
}

/// Candidate extremal polynomial on `e` from a Pell pair of a set `ext`
/// containing `e`.
pub fn candidate_from_extension(
    e: &BandSystem,
    ext: &BandSystem,
    pair: &PellPair,
    rho: f64,
) -> Result<CandidatePoly> {
    let tol = 1e-9 * ext.scale().max(1.0);
    for (l, r) in e.bands() {
        if ext.band_of(l).is_none() || ext.band_of(r).is_none() || ext.band_of(l) != ext.band_of(r) {
            return Err(Error::Validation(format!("band [{l}, {r}] is not inside the extension")));
        }
    }
    let e_ends: Vec<f64> = e.bands().iter().flat_map(|&(l, r)| [l, r]).collect();
    let shared: Vec<f64> = ext
        .bands()
        .iter()
        .flat_map(|&(l, r)| [l, r])
        .filter(|x| e_ends.iter().any(|y| (x - y).abs() <= tol))
        .collect();
    let s = Poly::from_roots(&shared);
    let phi_e = pair.phi.mul(&s);
    let free: Vec<f64> = ext
        .bands()
        .iter()
        .flat_map(|&(l, r)| [l, r])
        .filter(|x| !shared.iter().any(|y| (x - y).abs() <= tol))
        .collect();
    // R^2 / s^2 as a product of linear factors keeps the sign exact near shared ends.
    let r2e = |x: f64| {
        let num: f64 = free.iter().map(|a| x - a).product();
        let den: f64 = shared.iter().map(|a| x - a).product();
        num / den
    };
    let rho_t2 = -sup_on_bands(e, &|x| {
        let v = r2e(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    }, 400);
    if !(rho * rho < rho_t2) {
        return Err(Error::Admissibility(format!(
            "rho^2 = {} is not below rho~^2 = {rho_t2}",
            rho * rho
        )));
    }
    let re = ComplexPoly::from_real(&phi_e.scale(rho));
    let im = ComplexPoly::from_real(&pair.psi);
    let len = re.0.len().max(im.0.len());
    let mut c = vec![Complex64::new(0.0, 0.0); len];
    for (k, v) in re.0.iter().enumerate() {
        c[k] += v;
    }
    for (k, v) in im.0.iter().enumerate() {
        c[k] += Complex64::new(0.0, 1.0) * v;
    }
    let p = ComplexPoly(c);
    let mut zeros = p.roots()?;
    clean_near_real(&mut zeros, 1e-10);
    let points: Vec<Complex64> = zeros.iter().map(|z| z.conj()).collect();
    let derivs = points
        .iter()
        .map(|z| p.eval(*z).norm() / (2.0 * z.im.abs()))
        .collect();
    let sup_e = sup_on_bands(e, &|x| p.eval(Complex64::new(x, 0.0)).norm(), 400);
    Ok(CandidatePoly {
        p,
        rho,
        rho_t2,
        points,
        derivs,
        phi_e,
        psi: pair.psi.clone(),
        sup_e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovOptions {
    /// Contact set: `|P| >= (1 - contact_tol) max_E |P|`.
    pub contact_tol: f64,
    /// The test passes when the optimal margin is at most this.
    pub lp_tol: f64,
    pub grid: usize,
}

impl Default for KolmogorovOptions {
    fn default() -> Self {
        KolmogorovOptions {
            contact_tol: 1e-6,
            lp_tol: 1e-7,
            grid: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KolmogorovReport {
    pub passes: bool,
    /// Optimal `t` of the improvement LP (bounded by 1).
    pub margin: f64,
    pub contact: Vec<Complex64>,
    pub inconclusive: bool,
}

/// Decide whether some `Q` of degree `n - 2` has
/// `Re((x - conj z0)^2 P(x) conj Q(x)) > 0` on the whole contact set.
pub fn kolmogorov_check(
    p: &dyn PolyEval,
    support: &Support,
    z0: Complex64,
    opts: KolmogorovOptions,
) -> Result<KolmogorovReport> {
    let n = p.degree();
    let modulus = |z: Complex64| p.eval(z).norm();
    let maxima = support.local_maxima(&modulus, opts.grid);
    let top = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::Degeneracy("P vanishes on E".into()));
    }
    let mut contact: Vec<Complex64> = Vec::new();
    for z in support.grid(opts.grid).into_iter().chain(maxima.iter().map(|m| m.0)) {
        if modulus(z) >= (1.0 - opts.contact_tol) * top {
            contact.push(z);
        }
    }
    if contact.is_empty() {
        return Ok(KolmogorovReport {
            passes: false,
            margin: f64::NAN,
            contact,
            inconclusive: true,
        });
    }
    let q = n.saturating_sub(1);
    let nv = 2 * q + 1;
    let mut obj = vec![0.0; nv];
    obj[nv - 1] = 1.0;
    let mut lp = LpSpec::new(obj);
    for &x in &contact {
        let w = ((x - z0) * (x - z0)).conj() * p.eval(x);
        let w = w / w.norm();
        let phi = support.basis_values(q, x);
        let mut row = vec![0.0; nv];
        for k in 0..q {
            let v = w * phi[k].conj();
            row[2 * k] = -v.re;
            row[2 * k + 1] = -v.im;
        }
        row[nv - 1] = 1.0;
        lp.add_le(row, 0.0);
    }
    for k in 0..2 * q {
        let mut up = vec![0.0; nv];
        up[k] = 1.0;
        lp.add_le(up.clone(), 1.0);
        up[k] = -1.0;
        lp.add_le(up, 1.0);
    }
    let mut cap = vec![0.0; nv];
    cap[nv - 1] = 1.0;
    lp.add_le(cap, 1.0);
    let sol = lp_solve(&lp)?;
    Ok(KolmogorovReport {
        passes: sol.optimum <= opts.lp_tol,
        margin: sol.optimum,
        contact,
        inconclusive: false,
    })
}
