//! Coordinate-descent Lasso on a precomputed Gram matrix.
//!
//! Solves `min_β (1/(2n))‖y − Xβ‖² + λ‖β‖₁` for one node of a node-wise
//! regression, where `y` is column `node` of a centered design and `X` holds
//! the remaining columns. Everything is expressed through `G = XᵀX/n` of the
//! full design, so the `d` regressions of a group share one Gram matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoSettings {
    /// Stop when the largest coefficient change in a sweep is at most this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Stationarity residual demanded before a converged fit is returned.
    pub kkt_target: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self { tolerance: 1e-7, max_sweeps: 1000, kkt_target: 1e-8 }
    }
}

/// Predictor slot `s` of node `node` refers to this variable.
#[inline]
pub fn slot_variable(node: usize, slot: usize) -> usize {
    if slot < node {
        slot
    } else {
        slot + 1
    }
}

#[inline]
fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Gradient of the smooth part, `(1/n)⟨x_j, y − Xβ⟩`, for every slot.
pub fn correlations(gram: &DMatrix<f64>, node: usize, beta: &[f64]) -> Vec<f64> {
    let p = beta.len();
    (0..p)
        .map(|s| {
            let js = slot_variable(node, s);
            let fitted: f64 = (0..p).map(|t| gram[(js, slot_variable(node, t))] * beta[t]).sum();
            gram[(js, node)] - fitted
        })
        .collect()
}

/// Largest violation of the Lasso stationarity conditions.
pub fn kkt_violation(gram: &DMatrix<f64>, node: usize, beta: &[f64], lambda: f64) -> f64 {
    correlations(gram, node, beta)
        .iter()
        .zip(beta)
        .map(|(&g, &b)| {
            if b != 0.0 {
                (g - lambda * b.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Objective value `(1/(2n))‖y − Xβ‖² + λ‖β‖₁`.
pub fn objective(gram: &DMatrix<f64>, node: usize, beta: &[f64], lambda: f64) -> f64 {
    let p = beta.len();
    let mut quad = 0.0;
    let mut lin = 0.0;
    for s in 0..p {
        let js = slot_variable(node, s);
        lin += gram[(js, node)] * beta[s];
        for t in 0..p {
            quad += beta[s] * gram[(js, slot_variable(node, t))] * beta[t];
        }
    }
    0.5 * (gram[(node, node)] - 2.0 * lin + quad) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Fit node `node` against all other columns.
pub fn fit_node_gram(
    gram: &DMatrix<f64>,
    node: usize,
    lambda: f64,
    settings: &LassoSettings,
) -> Result<Vec<f64>> {
    let d = gram.nrows();
    if node >= d {
        return Err(Error::invalid(format!("node {node} out of range for {d} variables")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("penalty must be positive and finite, got {lambda}")));
    }
    let p = d - 1;
    let vars: Vec<usize> = (0..p).map(|s| slot_variable(node, s)).collect();
    let target: Vec<f64> = vars.iter().map(|&j| gram[(j, node)]).collect();
    let mut beta = vec![0.0; p];
    // fitted[s] = Σ_t G[s, t] β_t over predictor slots
    let mut fitted = vec![0.0; p];

    let mut last_violation = f64::INFINITY;
    for sweep in 1..=settings.max_sweeps {
        let mut max_change: f64 = 0.0;
        for s in 0..p {
            let js = vars[s];
            let curvature = gram[(js, js)];
            let old = beta[s];
            let new = if curvature > 0.0 {
                soft_threshold(target[s] - fitted[s] + curvature * old, lambda) / curvature
            } else {
                0.0
            };
            let change = new - old;
            if change != 0.0 {
                beta[s] = new;
                for t in 0..p {
                    fitted[t] += gram[(vars[t], js)] * change;
                }
                max_change = max_change.max(change.abs());
            }
        }
        if max_change <= settings.tolerance {
            if let Some(exact) = polish(gram, node, &vars, &target, &beta, lambda) {
                beta = exact;
            }
            last_violation = kkt_violation(gram, node, &beta, lambda);
            if last_violation <= settings.kkt_target {
                log::trace!("node {node}: converged after {sweep} sweeps");
                return Ok(beta);
            }
            // the polished candidate was rejected; resync before sweeping on
            fitted = (0..p)
                .map(|s| (0..p).map(|t| gram[(vars[s], vars[t])] * beta[t]).sum())
                .collect();
        }
    }
    Err(Error::Convergence { node, sweeps: settings.max_sweeps, gap: last_violation })
}

/// Solve the stationarity equations on the current support exactly.
///
/// Returns `None` unless the solution keeps every sign and leaves every
/// inactive correlation within the penalty.
fn polish(
    gram: &DMatrix<f64>,
    node: usize,
    vars: &[usize],
    target: &[f64],
    beta: &[f64],
    lambda: f64,
) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..beta.len()).filter(|&s| beta[s] != 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let k = active.len();
    let sub = DMatrix::from_fn(k, k, |a, b| gram[(vars[active[a]], vars[active[b]])]);
    let rhs = nalgebra::DVector::from_fn(k, |a, _| target[active[a]] - lambda * beta[active[a]].signum());
    let solution = sub.cholesky()?.solve(&rhs);
    let mut exact = vec![0.0; beta.len()];
    for (a, &s) in active.iter().enumerate() {
        if solution[a].signum() != beta[s].signum() || solution[a] == 0.0 {
            return None;
        }
        exact[s] = solution[a];
    }
    let grads = correlations(gram, node, &exact);
    let inactive_ok = (0..beta.len())
        .filter(|&s| exact[s] == 0.0)
        .all(|s| grads[s].abs() <= lambda);
    inactive_ok.then_some(exact)
}

/// `XᵀX/n` for a centered `n×d` design.
pub fn gram_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let g = x.tr_mul(x) / x.nrows() as f64;
    // exact symmetry keeps node orderings interchangeable
    DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| if i <= j { g[(i, j)] } else { g[(j, i)] })
}

/// Fit node `node` of a centered design directly.
pub fn fit_node_lasso(x: &DMatrix<f64>, node: usize, lambda: f64) -> Result<Vec<f64>> {
    fit_node_gram(&gram_matrix(x), node, lambda, &LassoSettings::default())
}
