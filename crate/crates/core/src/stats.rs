//! Bias-corrected residual statistics and the standardized difference matrix.
//!
//! For each group the residual cross-moments `r̃` are bias corrected into
//! `r̂`, normalized into `T_ij = r̂_ij/(r̂_ii r̂_jj)` (an estimate of `ω_ij`)
//! and paired with the variance estimate `θ̂_ij`. The two groups meet in
//! `W_ij = (T_ij,1 − T_ij,2)/√(θ̂_ij,1 + θ̂_ij,2)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::nodewise::{coef, NodewiseFit};
use crate::norm::{self, NormOrder};

/// Relative floor below which a diagonal `r̂_ii` counts as degenerate.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Per-group statistics derived from a node-wise fit.
#[derive(Debug, Clone)]
pub struct GroupStats {
    pub r_tilde: DMatrix<f64>,
    pub r_hat: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// Off-diagonal entries only; the diagonal is zero.
    pub theta: DMatrix<f64>,
    pub n: usize,
}

impl GroupStats {
    pub fn from_fit(fit: &NodewiseFit) -> Result<Self> {
        let r_tilde = residual_cross_moments(&fit.residuals);
        let r_hat = bias_correct(&r_tilde, &fit.betas);
        let t = t_matrix(&r_hat)?;
        let theta = theta_matrix(&r_hat, &fit.betas, fit.n())?;
        Ok(Self { r_tilde, r_hat, t, theta, n: fit.n() })
    }

    pub fn d(&self) -> usize {
        self.r_hat.nrows()
    }
}

/// `r̃_ij = (1/n) Σ_k ε̂_ki ε̂_kj`.
pub fn residual_cross_moments(residuals: &DMatrix<f64>) -> DMatrix<f64> {
    let g = residuals.tr_mul(residuals) / residuals.nrows() as f64;
    DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| if i <= j { g[(i, j)] } else { g[(j, i)] })
}

/// `r̂_ij = −(r̃_ij + r̃_ii β̂_{i,j} + r̃_jj β̂_{j−1,i})` for `i < j`, `r̂_ii = r̃_ii`.
///
/// The same map turns bootstrap cross-moments `r̃ᵇ` into `r̂ᵇ`.
pub fn bias_correct(r_tilde: &DMatrix<f64>, betas: &DMatrix<f64>) -> DMatrix<f64> {
    let d = r_tilde.nrows();
    let mut r_hat = DMatrix::zeros(d, d);
    for j in 0..d {
        r_hat[(j, j)] = r_tilde[(j, j)];
        for i in 0..j {
            let v = -(r_tilde[(i, j)]
                + r_tilde[(i, i)] * coef(betas, i, j)
                + r_tilde[(j, j)] * coef(betas, j, i));
            r_hat[(i, j)] = v;
            r_hat[(j, i)] = v;
        }
    }
    r_hat
}

fn check_diagonal(r_hat: &DMatrix<f64>) -> Result<()> {
    let d = r_hat.nrows();
    let top = (0..d).map(|i| r_hat[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..d {
        let v = r_hat[(i, i)];
        if !(v.is_finite() && v > 0.0 && v > VARIANCE_FLOOR * top) {
            return Err(Error::DegenerateVariance { index: i, value: v });
        }
    }
    Ok(())
}

/// `T_ij = r̂_ij/(r̂_ii r̂_jj)`.
pub fn t_matrix(r_hat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_diagonal(r_hat)?;
    let d = r_hat.nrows();
    Ok(DMatrix::from_fn(d, d, |i, j| r_hat[(i, j)] / (r_hat[(i, i)] * r_hat[(j, j)])))
}

/// `θ̂_ij = (1 + q_ij)/(n r̂_ii r̂_jj)` for `i ≠ j`, where `q_ij` averages the
/// two regression-based estimates `β̂²_{i,j} r̂_ii/r̂_jj` and `β̂²_{j,i} r̂_jj/r̂_ii`
/// of `ω²_ij/(ω_ii ω_jj)`, so the result does not depend on variable order.
pub fn theta_matrix(r_hat: &DMatrix<f64>, betas: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::invalid(format!("sample size must be at least 2, got {n}")));
    }
    check_diagonal(r_hat)?;
    let d = r_hat.nrows();
    let mut theta = DMatrix::zeros(d, d);
    for j in 0..d {
        let rjj = r_hat[(j, j)];
        for i in 0..j {
            let rii = r_hat[(i, i)];
            let (bij, bji) = (coef(betas, i, j), coef(betas, j, i));
            let q = 0.5 * (bij * bij * rii / rjj + bji * bji * rjj / rii);
            let v = (1.0 + q) / (n as f64 * rii * rjj);
            theta[(i, j)] = v;
            theta[(j, i)] = v;
        }
    }
    Ok(theta)
}

/// Lower-triangle entries read column by column:
/// `(a21, …, ad1, a32, …, ad2, …, ad,d−1)`.
pub fn trivec(a: &DMatrix<f64>) -> Vec<f64> {
    let d = a.nrows();
    let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for j in 0..d {
        out.extend((j + 1..d).map(|i| a[(i, j)]));
    }
    out
}

/// Standardized difference matrix with its cached `trivec`.
#[derive(Debug, Clone, PartialEq)]
pub struct WMatrix {
    w: DMatrix<f64>,
    trivec: Vec<f64>,
}

impl WMatrix {
    pub fn from_matrix(w: DMatrix<f64>) -> Self {
        let trivec = trivec(&w);
        Self { w, trivec }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn trivec(&self) -> &[f64] {
        &self.trivec
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }
}

/// `W_ij = (T_ij,1 − T_ij,2)/√(θ̂_ij,1 + θ̂_ij,2)` for `i ≠ j`; zero diagonal.
pub fn w_matrix(
    t1: &DMatrix<f64>,
    t2: &DMatrix<f64>,
    theta1: &DMatrix<f64>,
    theta2: &DMatrix<f64>,
) -> Result<WMatrix> {
    let shape = t1.shape();
    if !t1.is_square() || t2.shape() != shape || theta1.shape() != shape || theta2.shape() != shape {
        return Err(Error::invalid("T and theta matrices must share one square shape"));
    }
    let d = shape.0;
    let mut w = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in (j + 1)..d {
            let v = (t1[(i, j)] - t2[(i, j)]) / (theta1[(i, j)] + theta2[(i, j)]).sqrt();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(WMatrix::from_matrix(w))
}

/// `W` from two groups' statistics.
pub fn w_from_groups(g1: &GroupStats, g2: &GroupStats) -> Result<WMatrix> {
    w_matrix(&g1.t, &g2.t, &g1.theta, &g2.theta)
}

/// `M_n = max_{i<j} W²_ij`.
pub fn max_statistic(w: &WMatrix) -> f64 {
    w.trivec().iter().map(|x| x * x).fold(0.0, f64::max)
}

/// `‖trivec(W)‖_(s0,p)`.
pub fn norm_statistic(w: &WMatrix, s0: usize, p: NormOrder) -> Result<f64> {
    norm::s0p_norm(w.trivec(), s0, p)
}
