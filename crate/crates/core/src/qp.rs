//! Small dense QP: `min (u - u_nom)' W (u - u_nom)` subject to `a_j . u >= b_j`,
//! with `W` diagonal positive definite and `u` in R^4.
//!
//! Solved with a dual active-set method (Goldfarb-Idnani) after the change of
//! variables `v = W^{1/2} u`, which turns the problem into a Euclidean
//! projection onto a polyhedron.

use nalgebra::{DMatrix, DVector, Vector4};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConstraint {
    pub a: Vector4<f64>,
    pub b: f64,
}

impl LinearConstraint {
    pub fn new(a: Vector4<f64>, b: f64) -> Self {
        Self { a, b }
    }

    pub fn residual(&self, u: &Vector4<f64>) -> f64 {
        self.a.dot(u) - self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub u_nom: Vector4<f64>,
    /// Diagonal of `W`.
    pub weights: Vector4<f64>,
    pub constraints: Vec<LinearConstraint>,
}

impl QpProblem {
    pub fn new(u_nom: Vector4<f64>, w_lambda: f64, constraints: Vec<LinearConstraint>) -> Self {
        Self { u_nom, weights: Vector4::new(1.0, 1.0, 1.0, w_lambda), constraints }
    }

    pub fn cost(&self, u: &Vector4<f64>) -> f64 {
        let d = u - self.u_nom;
        d.component_mul(&d).dot(&self.weights)
    }

    pub fn min_residual(&self, u: &Vector4<f64>) -> f64 {
        self.constraints.iter().map(|c| c.residual(u)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: Vector4<f64>,
    /// Indices of constraints in the final active set, ascending.
    pub active: Vec<usize>,
    /// Lagrange multipliers for `1/2 (u - u_nom)' W (u - u_nom)`, one per constraint.
    pub multipliers: Vec<f64>,
    /// Norm of `W (u - u_nom) - sum_j mu_j a_j`.
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QpError {
    #[error("constraint set is infeasible")]
    Infeasible,
    #[error("QP did not converge within {0} iterations")]
    NumericalFailure(usize),
    #[error("weight matrix must be positive definite")]
    InvalidWeights,
}

const FEAS_TOL: f64 = 1e-12;
const DEPENDENT_TOL: f64 = 1e-10;

struct Scaled {
    /// Unit normals in `v` coordinates.
    n: Vec<Vector4<f64>>,
    b: Vec<f64>,
    /// Original `|W^{-1/2} a_j|`, used to undo the normalization.
    norm: Vec<f64>,
    v_nom: Vector4<f64>,
    sqrt_w: Vector4<f64>,
    /// Constraints with a zero normal.
    trivial: Vec<usize>,
}

fn scale(p: &QpProblem) -> Result<Scaled, QpError> {
    if p.weights.iter().any(|w| *w <= 0.0 || !w.is_finite()) {
        return Err(QpError::InvalidWeights);
    }
    let sqrt_w = p.weights.map(f64::sqrt);
    let mut s = Scaled {
        n: Vec::with_capacity(p.constraints.len()),
        b: Vec::with_capacity(p.constraints.len()),
        norm: Vec::with_capacity(p.constraints.len()),
        v_nom: p.u_nom.component_mul(&sqrt_w),
        sqrt_w,
        trivial: Vec::new(),
    };
    for (j, c) in p.constraints.iter().enumerate() {
        let a = c.a.component_div(&sqrt_w);
        let norm = a.norm();
        if norm == 0.0 {
            s.trivial.push(j);
            s.n.push(Vector4::zeros());
            s.b.push(c.b);
        } else {
            s.n.push(a / norm);
            s.b.push(c.b / norm);
        }
        s.norm.push(norm);
    }
    Ok(s)
}

/// Projection of `n_p` onto the complement of the active normals, and the
/// coefficients of `n_p` in the active basis.
fn split(s: &Scaled, active: &[usize], np: &Vector4<f64>) -> Option<(Vector4<f64>, DVector<f64>)> {
    if active.is_empty() {
        return Some((*np, DVector::zeros(0)));
    }
    let k = active.len();
    let nmat = DMatrix::from_fn(4, k, |r, c| s.n[active[c]][r]);
    let gram = nmat.transpose() * &nmat;
    let chol = gram.cholesky()?;
    let rhs = nmat.transpose() * DVector::from_column_slice(np.as_slice());
    let r = chol.solve(&rhs);
    let proj = &nmat * &r;
    let z = np - Vector4::from_iterator(proj.iter().copied());
    Some((z, r))
}

fn finish(p: &QpProblem, s: &Scaled, v: Vector4<f64>, active: &[usize], mult: &[f64], iterations: usize) -> QpSolution {
    let moved = !active.is_empty();
    let u = if moved { v.component_div(&s.sqrt_w) } else { p.u_nom };
    let mut multipliers = vec![0.0; p.constraints.len()];
    for (slot, &j) in active.iter().enumerate() {
        multipliers[j] = mult[slot] / s.norm[j];
    }
    let mut stationarity = (u - p.u_nom).component_mul(&p.weights);
    for (j, c) in p.constraints.iter().enumerate() {
        stationarity -= c.a * multipliers[j];
    }
    let mut sorted: Vec<usize> = active.to_vec();
    sorted.sort_unstable();
    QpSolution { u, active: sorted, multipliers, kkt_residual: stationarity.norm(), iterations }
}

pub fn solve_qp(p: &QpProblem) -> Result<QpSolution, QpError> {
    solve_qp_warm(p, &[])
}

/// Solve, first trying `hint` as the optimal active set.
///
/// The hint is accepted only if it yields a primal feasible point with
/// nonnegative multipliers; otherwise the cold solver runs.
pub fn solve_qp_warm(p: &QpProblem, hint: &[usize]) -> Result<QpSolution, QpError> {
    let s = scale(p)?;
    for &j in &s.trivial {
        if s.b[j] > FEAS_TOL {
            return Err(QpError::Infeasible);
        }
    }
    if !hint.is_empty() {
        if let Some(sol) = try_active_set(p, &s, hint) {
            return Ok(sol);
        }
    }
    dual_active_set(p, &s)
}

fn violation(s: &Scaled, v: &Vector4<f64>, j: usize) -> f64 {
    s.n[j].dot(v) - s.b[j]
}

fn try_active_set(p: &QpProblem, s: &Scaled, hint: &[usize]) -> Option<QpSolution> {
    let mut set: Vec<usize> = hint.iter().copied().filter(|&j| j < s.n.len() && s.norm[j] > 0.0).collect();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() || set.len() > 4 {
        return None;
    }
    let (v, nu) = project(s, &set)?;
    if nu.iter().any(|m| *m < 0.0) {
        return None;
    }
    if (0..s.n.len()).any(|j| violation(s, &v, j) < -FEAS_TOL) {
        return None;
    }
    Some(finish(p, s, v, &set, &nu, 0))
}

/// Projection of `v_nom` onto the constraints in `set` held with equality,
/// and its multipliers. One refinement step removes the rounding left by the
/// first solve, which matters when the weights span many decades.
fn project(s: &Scaled, set: &[usize]) -> Option<(Vector4<f64>, Vec<f64>)> {
    let k = set.len();
    let nmat = DMatrix::from_fn(4, k, |r, c| s.n[set[c]][r]);
    let chol = (nmat.transpose() * &nmat).cholesky()?;
    let mut nu = DVector::zeros(k);
    let mut v = s.v_nom;
    for _ in 0..2 {
        let rhs = DVector::from_iterator(k, set.iter().map(|&j| s.b[j] - s.n[j].dot(&v)));
        let dnu = chol.solve(&rhs);
        let step = &nmat * &dnu;
        v += Vector4::from_iterator(step.iter().copied());
        nu += dnu;
    }
    Some((v, nu.iter().copied().collect()))
}

fn dual_active_set(p: &QpProblem, s: &Scaled) -> Result<QpSolution, QpError> {
    let m = s.n.len();
    let max_iter = 50 * (m + 1);
    let mut v = s.v_nom;
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut iterations = 0;

    loop {
        // Most violated constraint; lowest index on ties.
        let mut pick = None;
        let mut worst = -FEAS_TOL;
        for j in 0..m {
            if s.norm[j] == 0.0 || active.contains(&j) {
                continue;
            }
            let viol = violation(s, &v, j);
            if viol < worst {
                worst = viol;
                pick = Some(j);
            }
        }
        let Some(np_idx) = pick else {
            if active.is_empty() {
                return Ok(finish(p, s, v, &active, &mult, iterations));
            }
            // The iterates accumulate rounding; recompute the optimum from the
            // final active set.
            let (v, nu) = project(s, &active).ok_or(QpError::NumericalFailure(iterations))?;
            return Ok(finish(p, s, v, &active, &nu, iterations));
        };
        let np = s.n[np_idx];
        let mut mult_p = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::NumericalFailure(max_iter));
            }
            let (z, r) = split(s, &active, &np).ok_or(QpError::NumericalFailure(iterations))?;
            // Largest dual step keeping active multipliers nonnegative.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (slot, &rj) in r.iter().enumerate() {
                if rj > 0.0 {
                    let ratio = mult[slot] / rj;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(slot);
                    }
                }
            }
            let dependent = z.norm() <= DEPENDENT_TOL;
            let t2 = if dependent { f64::INFINITY } else { -violation(s, &v, np_idx) / z.dot(&np) };
            if dependent && drop.is_none() {
                return Err(QpError::Infeasible);
            }
            let t = t1.min(t2);
            if !dependent {
                v += z * t;
            }
            for (slot, rj) in r.iter().enumerate() {
                mult[slot] -= t * rj;
            }
            mult_p += t;
            if t2 <= t1 {
                active.push(np_idx);
                mult.push(mult_p);
                break;
            }
            let slot = drop.expect("partial step always has a blocking constraint");
            active.remove(slot);
            mult.remove(slot);
        }
    }
}
