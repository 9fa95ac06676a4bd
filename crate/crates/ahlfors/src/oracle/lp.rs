//! Dense revised simplex for `max c.x` subject to `A x <= b`, `E x = f`,
//! with free `x`.
//!
//! The solver works on the dual `min b.y + f.w` subject to
//! `A^T y + E^T w = c`, `y >= 0`, whose basis has one row per primal
//! variable. That keeps the basis small when there are many constraints.
//! The primal point is read off the simplex multipliers.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Linear program in inequality form with free variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSpec {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub le_rows: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
}

impl LpSpec {
    /// Maximize `objective . x`.
    pub fn new(objective: Vec<f64>) -> Self {
        LpSpec {
            n_vars: objective.len(),
            objective,
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
        }
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    fn validate(&self) -> Result<()> {
        if self.n_vars == 0 {
            return Err(Error::Validation("LP without variables".into()));
        }
        if self.le_rows.is_empty() && self.eq_rows.is_empty() {
            return Err(Error::Validation("LP without constraints".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if self.objective.len() != self.n_vars || !finite(&self.objective) {
            return Err(Error::Validation("bad objective row".into()));
        }
        for (r, b) in self
            .le_rows
            .iter()
            .zip(&self.le_rhs)
            .chain(self.eq_rows.iter().zip(&self.eq_rhs))
        {
            if r.len() != self.n_vars || !finite(r) || !b.is_finite() {
                return Err(Error::Validation("bad constraint row".into()));
            }
        }
        Ok(())
    }
}

/// Residuals of the optimality certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest violation of `A x <= b` and `E x = f`.
    pub primal: f64,
    /// Largest violation of dual feasibility (`A^T y + E^T w = c`, `y >= 0`).
    pub dual: f64,
    /// `|c.x - (b.y + f.w)|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub optimum: f64,
    pub x: Vec<f64>,
    /// Multipliers of the inequality rows.
    pub y: Vec<f64>,
    /// Multipliers of the equality rows.
    pub w: Vec<f64>,
    pub iterations: usize,
    pub certificate: Certificate,
}

impl LpSolution {
    /// Indices of inequality rows with a positive multiplier.
    pub fn active(&self) -> Vec<usize> {
        let m = self.y.iter().fold(0.0f64, |a, v| a.max(*v));
        self.y
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 1e-12 * m.max(1e-300))
            .map(|(i, _)| i)
            .collect()
    }
}

const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_SWITCH: usize = 50;
/// Relative tolerance of the certificate check.
pub const CERT_TOL: f64 = 1e-7;

struct Dual<'a> {
    spec: &'a LpSpec,
    m: usize,
    /// Column count without artificials.
    n_real: usize,
    cost: Vec<f64>,
    art_sign: Vec<f64>,
}

impl<'a> Dual<'a> {
    fn new(spec: &'a LpSpec) -> Self {
        let m = spec.n_vars;
        let mut cost = spec.le_rhs.clone();
        for &f in &spec.eq_rhs {
            cost.push(f);
            cost.push(-f);
        }
        let n_real = cost.len();
        let art_sign = spec
            .objective
            .iter()
            .map(|c| if *c >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        Dual {
            spec,
            m,
            n_real,
            cost,
            art_sign,
        }
    }

    fn is_art(&self, j: usize) -> bool {
        j >= self.n_real
    }

    /// Entry `i` of column `j`.
    fn entry(&self, j: usize, i: usize) -> f64 {
        let nl = self.spec.le_rows.len();
        if j < nl {
            self.spec.le_rows[j][i]
        } else if j < self.n_real {
            let k = (j - nl) / 2;
            let s = if (j - nl) % 2 == 0 { 1.0 } else { -1.0 };
            s * self.spec.eq_rows[k][i]
        } else {
            let k = j - self.n_real;
            if k == i {
                self.art_sign[k]
            } else {
                0.0
            }
        }
    }

    fn column(&self, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.m, (0..self.m).map(|i| self.entry(j, i)))
    }

    fn dot_col(&self, pi: &DVector<f64>, j: usize) -> f64 {
        let nl = self.spec.le_rows.len();
        if j < nl {
            self.spec.le_rows[j].iter().zip(pi.iter()).map(|(a, b)| a * b).sum()
        } else if j < self.n_real {
            let k = (j - nl) / 2;
            let s = if (j - nl) % 2 == 0 { 1.0 } else { -1.0 };
            s * self.spec.eq_rows[k].iter().zip(pi.iter()).map(|(a, b)| a * b).sum::<f64>()
        } else {
            let k = j - self.n_real;
            self.art_sign[k] * pi[k]
        }
    }
}

struct State {
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    iterations: usize,
}

fn refactor(d: &Dual, st: &mut State, rhs: &DVector<f64>) -> Result<()> {
    let mut b = DMatrix::zeros(d.m, d.m);
    for (r, &j) in st.basis.iter().enumerate() {
        b.set_column(r, &d.column(j));
    }
    st.binv = b
        .try_inverse()
        .ok_or_else(|| Error::LpStatus("singular basis during refactorization".into()))?;
    st.xb = &st.binv * rhs;
    for v in st.xb.iter_mut() {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// `B^T x = c_B` by LU with two steps of iterative refinement.
fn refined_multipliers(d: &Dual, st: &State, cb: &DVector<f64>) -> DVector<f64> {
    let mut bt = DMatrix::zeros(d.m, d.m);
    for (r, &j) in st.basis.iter().enumerate() {
        bt.set_row(r, &d.column(j).transpose());
    }
    let lu = bt.clone().lu();
    let mut x = lu.solve(cb).unwrap_or_else(|| st.binv.transpose() * cb);
    for _ in 0..2 {
        let r = cb - &bt * &x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    x
}

/// Run simplex iterations for the given column costs. Returns `false` when
/// the problem is unbounded below.
fn iterate(d: &Dual, st: &mut State, cost: &dyn Fn(usize) -> f64, allow_art: bool, rhs: &DVector<f64>, max_iter: usize) -> Result<bool> {
    let ncols = d.n_real + d.m;
    let cscale = (0..d.n_real).map(|j| cost(j).abs()).fold(1e-300f64, f64::max);
    let dtol = 1e-10 * cscale.max(1.0);
    let mut degenerate = 0usize;
    let mut bland = false;
    let mut since_refactor = 0usize;
    loop {
        if st.iterations >= max_iter {
            return Err(Error::LpStatus(format!("iteration limit {max_iter} reached")));
        }
        let cb = DVector::from_iterator(d.m, st.basis.iter().map(|&j| cost(j)));
        let pi = st.binv.transpose() * cb;
        let mut in_basis = vec![false; ncols];
        for &j in &st.basis {
            in_basis[j] = true;
        }
        let mut enter = None;
        let mut best = 0.0;
        for j in 0..ncols {
            if in_basis[j] || (!allow_art && d.is_art(j)) {
                continue;
            }
            let cj = cost(j);
            let ap = d.dot_col(&pi, j);
            let dj = cj - ap;
            if bland {
                if dj < -dtol {
                    enter = Some(j);
                    break;
                }
            } else if dj < -dtol && dj < best {
                best = dj;
                enter = Some(j);
            }
        }
        let dq = enter.map(|j| cost(j) - d.dot_col(&pi, j)).unwrap_or(0.0);
        let Some(q) = enter else {
            if since_refactor > 0 {
                refactor(d, st, rhs)?;
                since_refactor = 0;
                continue;
            }
            return Ok(true);
        };
        let alpha = &st.binv * d.column(q);
        let amax = alpha.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let piv = PIVOT_TOL * amax.max(1.0);
        let mut leave: Option<usize> = None;
        let mut ratio = f64::INFINITY;
        if bland {
            for i in 0..d.m {
                if alpha[i] > piv {
                    let r = st.xb[i].max(0.0) / alpha[i];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            r < ratio - 1e-14 * ratio.abs().max(1e-300)
                                || (r <= ratio + 1e-14 * ratio.abs().max(1e-300) && st.basis[i] < st.basis[l])
                        }
                    };
                    if better {
                        ratio = r;
                        leave = Some(i);
                    }
                }
            }
        } else {
            // Harris: relax the bound slightly, then take the largest pivot.
            let xs = st.xb.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let delta = 1e-12 * xs.max(1e-300);
            let mut bound = f64::INFINITY;
            for i in 0..d.m {
                if alpha[i] > piv {
                    bound = bound.min((st.xb[i].max(0.0) + delta) / alpha[i]);
                }
            }
            let mut big = 0.0;
            for i in 0..d.m {
                if alpha[i] > piv && st.xb[i].max(0.0) / alpha[i] <= bound && alpha[i] > big {
                    big = alpha[i];
                    leave = Some(i);
                }
            }
            if let Some(l) = leave {
                ratio = st.xb[l].max(0.0) / alpha[l];
            }
        }
        let Some(r) = leave else {
            return Ok(false);
        };
        let theta = ratio;
        let ar = alpha[r];
        for i in 0..d.m {
            st.xb[i] -= theta * alpha[i];
        }
        st.xb[r] = theta;
        let row_r = st.binv.row(r) / ar;
        for i in 0..d.m {
            if i != r && alpha[i] != 0.0 {
                let a = alpha[i];
                for c in 0..d.m {
                    st.binv[(i, c)] -= a * row_r[c];
                }
            }
        }
        st.binv.set_row(r, &row_r);
        st.basis[r] = q;
        st.iterations += 1;
        since_refactor += 1;
        // Steps that barely move the objective count as degenerate too.
        if theta <= 1e-14 || (dq * theta).abs() <= 1e-13 * cscale {
            degenerate += 1;
            if degenerate > DEGENERATE_SWITCH {
                bland = true;
            }
        } else {
            degenerate = 0;
            bland = false;
        }
        if since_refactor >= REFACTOR_EVERY {
            refactor(d, st, rhs)?;
            since_refactor = 0;
        }
    }
}

/// Solve the LP; the reported optimum carries a verified certificate.
pub fn lp_solve(spec: &LpSpec) -> Result<LpSolution> {
    spec.validate()?;
    let d = Dual::new(spec);
    let m = d.m;
    let rhs = DVector::from_vec(spec.objective.clone());
    let mut st = State {
        basis: (d.n_real..d.n_real + m).collect(),
        binv: DMatrix::from_diagonal(&DVector::from_vec(d.art_sign.clone())),
        xb: rhs.map(f64::abs),
        iterations: 0,
    };
    // Crash: bound rows `v x_k <= b` with the right sign replace artificials.
    let mut crashed = vec![false; m];
    for (j, row) in spec.le_rows.iter().enumerate() {
        let mut nz = row.iter().enumerate().filter(|(_, v)| **v != 0.0);
        if let (Some((k, &v)), None) = (nz.next(), nz.next()) {
            if !crashed[k] && v * d.art_sign[k] > 0.0 {
                crashed[k] = true;
                st.basis[k] = j;
                st.binv[(k, k)] = 1.0 / v;
                st.xb[k] = rhs[k] / v;
            }
        }
    }
    let max_iter = 50 * (m + d.n_real) + 1000;
    let scale_c = spec.objective.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);

    // Phase 1: drive the artificials out.
    let phase1 = |j: usize| if d.is_art(j) { 1.0 } else { 0.0 };
    iterate(&d, &mut st, &phase1, true, &rhs, max_iter)?;
    refactor(&d, &mut st, &rhs)?;
    let infeas: f64 = st
        .basis
        .iter()
        .zip(st.xb.iter())
        .filter(|(j, _)| d.is_art(**j))
        .map(|(_, v)| v.abs())
        .sum();
    if infeas > 1e-9 * scale_c {
        return Err(Error::LpStatus(format!(
            "primal unbounded (dual infeasible, phase-one residual {infeas:e})"
        )));
    }
    // Pivot zero-level artificials out where possible.
    for r in 0..m {
        if !d.is_art(st.basis[r]) {
            continue;
        }
        let row = st.binv.row(r).clone_owned();
        let mut pick = None;
        let mut bestv = 1e-9;
        for j in 0..d.n_real {
            if st.basis.contains(&j) {
                continue;
            }
            let v: f64 = (0..m).map(|i| row[i] * d.entry(j, i)).sum();
            if v.abs() > bestv {
                bestv = v.abs();
                pick = Some(j);
            }
        }
        if let Some(q) = pick {
            st.basis[r] = q;
            refactor(&d, &mut st, &rhs)?;
        }
    }

    // Phase 2.
    let phase2 = |j: usize| if d.is_art(j) { 0.0 } else { d.cost[j] };
    let bounded = iterate(&d, &mut st, &phase2, false, &rhs, max_iter)?;
    if !bounded {
        return Err(Error::LpStatus("primal infeasible (dual unbounded)".into()));
    }
    refactor(&d, &mut st, &rhs)?;

    let cb = DVector::from_iterator(m, st.basis.iter().map(|&j| phase2(j)));
    let x: Vec<f64> = refined_multipliers(&d, &st, &cb).iter().copied().collect();
    let mut dual = vec![0.0; d.n_real];
    for (r, &j) in st.basis.iter().enumerate() {
        if !d.is_art(j) {
            dual[j] = st.xb[r].max(0.0);
        }
    }
    let nl = spec.le_rows.len();
    let y = dual[..nl].to_vec();
    let w: Vec<f64> = (0..spec.eq_rows.len())
        .map(|k| dual[nl + 2 * k] - dual[nl + 2 * k + 1])
        .collect();

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let xs = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let mut primal = 0.0f64;
    for (r, b) in spec.le_rows.iter().zip(&spec.le_rhs) {
        let s = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) * xs + b.abs();
        primal = primal.max((dot(r, &x) - b).max(0.0) / s.max(1e-300));
    }
    for (r, b) in spec.eq_rows.iter().zip(&spec.eq_rhs) {
        let s = r.iter().fold(0.0f64, |a, v| a.max(v.abs())) * xs + b.abs();
        primal = primal.max((dot(r, &x) - b).abs() / s.max(1e-300));
    }
    let mut resid = spec.objective.clone();
    for (i, r) in spec.le_rows.iter().enumerate() {
        for (k, v) in r.iter().enumerate() {
            resid[k] -= y[i] * v;
        }
    }
    for (i, r) in spec.eq_rows.iter().enumerate() {
        for (k, v) in r.iter().enumerate() {
            resid[k] -= w[i] * v;
        }
    }
    let dual_res = resid.iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale_c;
    let primal_obj = dot(&spec.objective, &x);
    let dual_obj = dot(&y, &spec.le_rhs) + dot(&w, &spec.eq_rhs);
    let gap = (primal_obj - dual_obj).abs() / primal_obj.abs().max(dual_obj.abs()).max(1e-300);
    let certificate = Certificate {
        primal,
        dual: dual_res,
        gap,
    };
    if primal > CERT_TOL || dual_res > CERT_TOL || (gap > CERT_TOL && primal_obj.abs().max(dual_obj.abs()) > 1e-12) {
        return Err(Error::LpStatus(format!(
            "certificate check failed: primal {primal:e}, dual {dual_res:e}, gap {gap:e}"
        )));
    }
    Ok(LpSolution {
        optimum: primal_obj,
        x,
        y,
        w,
        iterations: st.iterations,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable() {
        let mut s = LpSpec::new(vec![1.0]);
        s.add_le(vec![1.0], 1.0);
        let r = lp_solve(&s).unwrap();
        assert!((r.optimum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_sum() {
        let mut s = LpSpec::new(vec![1.0, 1.0]);
        s.add_le(vec![1.0, 0.0], 1.0);
        s.add_le(vec![0.0, 1.0], 2.0);
        let r = lp_solve(&s).unwrap();
        assert!((r.optimum - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let mut s = LpSpec::new(vec![1.0, 1.0]);
        s.add_le(vec![1.0, 0.0], 1.0);
        assert!(matches!(lp_solve(&s), Err(Error::LpStatus(_))));
        let mut s = LpSpec::new(vec![1.0]);
        s.add_le(vec![1.0], -1.0);
        s.add_le(vec![-1.0], -1.0);
        assert!(matches!(lp_solve(&s), Err(Error::LpStatus(_))));
    }
}
