//! Interval and arc systems, gap coordinates and the Möbius/coordinate maps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance for endpoint comparisons.
pub const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    /// Bounded: `[b0, a0]` minus the finite gaps.
    J,
    /// Unbounded: the positive half-axis minus the finite gaps.
    S,
}

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Position {
    Finite(f64),
    Infinity,
}

impl Position {
    pub fn finite(self) -> Option<f64> {
        match self {
            Position::Finite(x) => Some(x),
            Position::Infinity => None,
        }
    }
}

/// A closed gap `[a, b]`. For the outer gap of a J system `a > b` and the gap
/// runs `a -> +inf = -inf -> b`; for the zeroth gap of an S system `a = -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub a: f64,
    pub b: f64,
}

/// Real compact (J) or half-axis type (S) set, stored by its gaps.
///
/// Internal labeling: for J the raw endpoint list is
/// `[b0, a1, b1, ..., ag, bg, a0]`, bands are `[b0,a1], [b1,a2], ..., [bg,a0]`
/// and gap 0 is the outer gap through infinity. For S the raw list is
/// `[a1, b1, ..., ag, bg]`, bands are `[0,a1], ..., [bg, inf)` and gap 0 is
/// `(-inf, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSystem {
    kind: Kind,
    gaps: Vec<(f64, f64)>,
    outer: Option<(f64, f64)>,
}

impl BandSystem {
    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// Number of finite gaps.
    pub fn g(&self) -> usize {
        self.gaps.len()
    }

    /// Finite gaps `(a_j, b_j)`, `j = 1..g`.
    pub fn finite_gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    /// `(b0, a0)` for J systems.
    pub fn outer(&self) -> Option<(f64, f64)> {
        self.outer
    }

    /// Gap `j` in `0..=g`.
    pub fn gap(&self, j: usize) -> Gap {
        if j == 0 {
            match (self.kind, self.outer) {
                (Kind::J, Some((b0, a0))) => Gap { a: a0, b: b0 },
                _ => Gap {
                    a: f64::NEG_INFINITY,
                    b: 0.0,
                },
            }
        } else {
            let (a, b) = self.gaps[j - 1];
            Gap { a, b }
        }
    }

    /// Bands in increasing order; the last S band has `r = inf`.
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let mut left = match self.kind {
            Kind::J => self.outer.unwrap().0,
            Kind::S => 0.0,
        };
        let mut out = Vec::with_capacity(self.g() + 1);
        for &(a, b) in &self.gaps {
            out.push((left, a));
            left = b;
        }
        let right = match self.kind {
            Kind::J => self.outer.unwrap().1,
            Kind::S => f64::INFINITY,
        };
        out.push((left, right));
        out
    }

    /// Finite branch points in increasing order
    /// (J: all `2g+2` endpoints; S: `0` and the `2g` gap endpoints).
    pub fn branch_points(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.g() + 2);
        match self.kind {
            Kind::J => v.push(self.outer.unwrap().0),
            Kind::S => v.push(0.0),
        }
        for &(a, b) in &self.gaps {
            v.push(a);
            v.push(b);
        }
        if self.kind == Kind::J {
            v.push(self.outer.unwrap().1);
        }
        v
    }

    /// Raw endpoint list accepted by [`validate_system`].
    pub fn raw(&self) -> Vec<f64> {
        match self.kind {
            Kind::J => self.branch_points(),
            Kind::S => self.branch_points()[1..].to_vec(),
        }
    }

    /// Convex hull `(mid, half)` of a J system.
    pub fn hull(&self) -> Option<(f64, f64)> {
        self.outer.map(|(b0, a0)| (0.5 * (a0 + b0), 0.5 * (a0 - b0)))
    }

    /// Index of the band containing `x` (closed bands, with tolerance).
    pub fn band_of(&self, x: f64) -> Option<usize> {
        self.bands()
            .iter()
            .position(|&(l, r)| x >= l - ENDPOINT_TOL && x <= r + ENDPOINT_TOL)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.band_of(x).is_some()
    }

    /// Index of the open gap containing the real point `x`.
    pub fn gap_of(&self, x: f64) -> Option<usize> {
        if self.contains(x) {
            return None;
        }
        for (j, &(a, b)) in self.gaps.iter().enumerate() {
            if x > a && x < b {
                return Some(j + 1);
            }
        }
        Some(0)
    }

    /// Total extent used for scaling tolerances.
    pub fn scale(&self) -> f64 {
        let bp = self.branch_points();
        let lo = bp.first().copied().unwrap_or(0.0);
        let hi = bp.last().copied().unwrap_or(1.0);
        (hi - lo).abs().max(1.0)
    }

    /// J system from explicit sorted bands.
    pub fn from_bands(bands: &[(f64, f64)]) -> Result<Self> {
        let mut raw = Vec::with_capacity(2 * bands.len());
        for &(l, r) in bands {
            raw.push(l);
            raw.push(r);
        }
        validate_system(&raw, Kind::J)
    }
}

/// Validate a raw endpoint list (see [`BandSystem`] for the layout).
pub fn validate_system(raw: &[f64], kind: Kind) -> Result<BandSystem> {
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("non-finite endpoint".into()));
    }
    if raw.len() % 2 != 0 {
        return Err(Error::Validation(format!(
            "odd number of endpoints ({})",
            raw.len()
        )));
    }
    let check = |i: usize, lo: f64, hi: f64| -> Result<()> {
        if hi - lo <= ENDPOINT_TOL {
            Err(Error::Validation(format!(
                "unordered or degenerate endpoints at positions {}, {}: {} >= {}",
                i,
                i + 1,
                lo,
                hi
            )))
        } else {
            Ok(())
        }
    };
    match kind {
        Kind::J => {
            if raw.len() < 2 {
                return Err(Error::Validation("J system needs at least one band".into()));
            }
            for i in 0..raw.len() - 1 {
                check(i, raw[i], raw[i + 1])?;
            }
            let n = raw.len();
            let gaps = raw[1..n - 1]
                .chunks(2)
                .map(|c| (c[0], c[1]))
                .collect();
            Ok(BandSystem {
                kind,
                gaps,
                outer: Some((raw[0], raw[n - 1])),
            })
        }
        Kind::S => {
            if let Some(&x) = raw.first() {
                check(0, 0.0, x).map_err(|_| {
                    Error::Validation(format!("first S endpoint {x} must be positive"))
                })?;
            }
            for i in 0..raw.len().saturating_sub(1) {
                check(i, raw[i], raw[i + 1])?;
            }
            Ok(BandSystem {
                kind,
                gaps: raw.chunks(2).map(|c| (c[0], c[1])).collect(),
                outer: None,
            })
        }
    }
}

/// Unit-circle arc system given by its open gap arcs in angle form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSystem {
    gaps: Vec<(f64, f64)>,
}

impl ArcSystem {
    /// `angles = [a0, b0, a1, b1, ...]`, increasing, spanning less than `2pi`.
    pub fn new(angles: &[f64]) -> Result<Self> {
        use std::f64::consts::TAU;
        if angles.len() % 2 != 0 {
            return Err(Error::Validation("odd number of arc angles".into()));
        }
        if angles.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite angle".into()));
        }
        for i in 0..angles.len().saturating_sub(1) {
            if angles[i + 1] - angles[i] <= ENDPOINT_TOL {
                return Err(Error::Validation(format!(
                    "unordered angles at positions {}, {}",
                    i,
                    i + 1
                )));
            }
        }
        if let (Some(&f), Some(&l)) = (angles.first(), angles.last()) {
            if l - f >= TAU - ENDPOINT_TOL {
                return Err(Error::Validation("gaps cover the whole circle".into()));
            }
        }
        Ok(ArcSystem {
            gaps: angles.chunks(2).map(|c| (c[0], c[1])).collect(),
        })
    }

    pub fn gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    /// Arcs of E as increasing angle intervals `[lo, hi]`.
    pub fn arcs(&self) -> Vec<(f64, f64)> {
        use std::f64::consts::TAU;
        if self.gaps.is_empty() {
            return vec![(0.0, TAU)];
        }
        let k = self.gaps.len();
        (0..k)
            .map(|j| {
                let lo = self.gaps[j].1;
                let hi = if j + 1 < k {
                    self.gaps[j + 1].0
                } else {
                    self.gaps[0].0 + TAU
                };
                (lo, hi)
            })
            .collect()
    }
}

/// Real Möbius map `z -> (p z + q)/(r z + s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl MoebiusMap {
    pub fn new(p: f64, q: f64, r: f64, s: f64) -> Result<Self> {
        if (p * s - q * r).abs() <= f64::EPSILON * (p * s).abs().max((q * r).abs()) {
            return Err(Error::Validation("singular Möbius map".into()));
        }
        Ok(MoebiusMap { p, q, r, s })
    }

    pub fn det(&self) -> f64 {
        self.p * self.s - self.q * self.r
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.p * z + self.q) / (self.r * z + self.s)
    }

    pub fn apply_real(&self, x: Position) -> Position {
        match x {
            Position::Infinity => {
                if self.r == 0.0 {
                    Position::Infinity
                } else {
                    Position::Finite(self.p / self.r)
                }
            }
            Position::Finite(x) => {
                let d = self.r * x + self.s;
                if d == 0.0 {
                    Position::Infinity
                } else {
                    Position::Finite((self.p * x + self.q) / d)
                }
            }
        }
    }

    /// `m'(z) = det / (r z + s)^2`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d = self.r * z + self.s;
        self.det() / (d * d)
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            p: self.s,
            q: -self.q,
            r: -self.r,
            s: self.p,
        }
    }
}

/// Send the real pole `x0` to infinity by `m(z) = 1/(x0 - z)`.
pub fn moebius_reduce(e: &BandSystem, x0: f64) -> Result<(BandSystem, MoebiusMap)> {
    let m = MoebiusMap::new(0.0, 1.0, -1.0, x0)?;
    Ok((moebius_image(e, &m, x0)?, m))
}

/// Image of `E` under a map `m` with pole `x0` off `E`.
pub fn moebius_image(e: &BandSystem, m: &MoebiusMap, x0: f64) -> Result<BandSystem> {
    if !x0.is_finite() {
        return Err(Error::Domain("pole must be finite".into()));
    }
    if e.contains(x0) {
        return Err(Error::Domain(format!("pole {x0} lies on E")));
    }
    let img = |x: f64| -> f64 {
        let p = if x.is_infinite() { Position::Infinity } else { Position::Finite(x) };
        match m.apply_real(p) {
            Position::Finite(w) => w,
            Position::Infinity => f64::NAN,
        }
    };
    let mut bands: Vec<(f64, f64)> = e
        .bands()
        .into_iter()
        .map(|(l, r)| (img(l), img(r)))
        .collect();
    bands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    BandSystem::from_bands(&bands)
}

/// Torus coordinate on a closed gap with its endpoints identified.
///
/// Finite gaps use `x = a + t (b - a)`. The outer J gap uses
/// `x = mid + half / (1 - 2t)` (t = 1/2 is infinity) and the zeroth S gap
/// uses `x = -t/(1 - t)` (t -> 1 is -infinity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub gap: usize,
    pub t: f64,
}

fn wrap01(t: f64) -> f64 {
    let w = t - t.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

impl GapPoint {
    pub fn new(gap: usize, t: f64) -> Self {
        GapPoint { gap, t: wrap01(t) }
    }

    pub fn position(&self, e: &BandSystem) -> Position {
        let t = self.t;
        if self.gap == 0 {
            match e.kind() {
                Kind::J => {
                    let (mid, half) = e.hull().unwrap();
                    let d = 1.0 - 2.0 * t;
                    if d == 0.0 {
                        Position::Infinity
                    } else {
                        Position::Finite(mid + half / d)
                    }
                }
                Kind::S => Position::Finite(-t / (1.0 - t)),
            }
        } else {
            let g = e.gap(self.gap);
            Position::Finite(g.a + t * (g.b - g.a))
        }
    }

    pub fn from_position(e: &BandSystem, gap: usize, x: Position) -> Result<Self> {
        if gap > e.g() {
            return Err(Error::Validation(format!("gap index {gap} > g")));
        }
        let t = match (gap, e.kind(), x) {
            (0, Kind::J, Position::Infinity) => 0.5,
            (0, Kind::S, Position::Infinity) => 0.0,
            (_, _, Position::Infinity) => {
                return Err(Error::Domain("infinity is not in a finite gap".into()))
            }
            (0, Kind::J, Position::Finite(x)) => {
                let (mid, half) = e.hull().unwrap();
                let g = e.gap(0);
                if x < g.a - ENDPOINT_TOL && x > g.b + ENDPOINT_TOL {
                    return Err(Error::Domain(format!("{x} not in the outer gap")));
                }
                0.5 * (1.0 - half / (x - mid))
            }
            (0, Kind::S, Position::Finite(x)) => {
                if x > ENDPOINT_TOL {
                    return Err(Error::Domain(format!("{x} not in (-inf, 0]")));
                }
                -x / (1.0 - x)
            }
            (j, _, Position::Finite(x)) => {
                let g = e.gap(j);
                if x < g.a - ENDPOINT_TOL || x > g.b + ENDPOINT_TOL {
                    return Err(Error::Domain(format!("{x} not in gap {j}")));
                }
                ((x - g.a) / (g.b - g.a)).clamp(0.0, 1.0)
            }
        };
        Ok(GapPoint::new(gap, t))
    }

    /// True at the identified endpoint `a_j = b_j` of the gap.
    pub fn at_endpoint(&self, tol: f64) -> bool {
        self.t <= tol || self.t >= 1.0 - tol
    }
}

/// The three genus-zero coordinate maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThinTro {
    /// `z = 2(l^2 + 1)/(l^2 - 1)` onto the complement of `[-2, 2]`.
    J,
    /// `z = -l^2` onto the complement of the positive half-axis.
    S,
    /// Cayley map `zeta = (z - i y0)/(z + i y0)`.
    T { y0: f64 },
}

/// Evaluate the coordinate map and its derivative at `lambda`
/// (for `T` the argument is `z`).
pub fn thintro_maps(coord: ThinTro, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    match coord {
        ThinTro::J | ThinTro::S if lambda.re <= 0.0 => Err(Error::Domain(format!(
            "Re lambda = {} must be positive",
            lambda.re
        ))),
        ThinTro::J => {
            let l2 = lambda * lambda;
            let d = l2 - one;
            if d.norm() == 0.0 {
                return Err(Error::Domain("lambda = 1 is the pole of the J map".into()));
            }
            Ok((2.0 * (l2 + one) / d, -8.0 * lambda / (d * d)))
        }
        ThinTro::S => Ok((-lambda * lambda, -2.0 * lambda)),
        ThinTro::T { y0 } => {
            if y0 <= 0.0 {
                return Err(Error::Domain("y0 must be positive".into()));
            }
            let iy = Complex64::new(0.0, y0);
            let d = lambda + iy;
            if d.norm() == 0.0 {
                return Err(Error::Domain("z = -i y0 is the pole of the Cayley map".into()));
            }
            Ok(((lambda - iy) / d, 2.0 * iy / (d * d)))
        }
    }
}

/// Instance file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub kind: String,
    pub endpoints: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Bands(BandSystem),
    Arcs(ArcSystem),
}

impl Instance {
    pub fn from_config(c: &InstanceConfig) -> Result<Self> {
        match c.kind.as_str() {
            "J" => Ok(Instance::Bands(validate_system(&c.endpoints, Kind::J)?)),
            "S" => Ok(Instance::Bands(validate_system(&c.endpoints, Kind::S)?)),
            "T" => Ok(Instance::Arcs(ArcSystem::new(&c.endpoints)?)),
            k => Err(Error::Validation(format!("unknown kind {k:?}"))),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: InstanceConfig =
            serde_json::from_str(s).map_err(|e| Error::Validation(e.to_string()))?;
        Self::from_config(&c)
    }

    pub fn bands(&self) -> Option<&BandSystem> {
        match self {
            Instance::Bands(b) => Some(b),
            Instance::Arcs(_) => None,
        }
    }
}
