//! Node-wise Lasso regressions and their residuals.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::lasso::{self, LassoSettings};
use crate::par;

/// Default multiplier in the penalty rule.
pub const DEFAULT_KAPPA: f64 = 2.0;

/// Column-centered (optionally standardized) copy of a data matrix.
#[derive(Debug, Clone)]
pub struct CenteredData {
    pub values: DMatrix<f64>,
    pub means: Vec<f64>,
    /// Divisor applied to each centered column; all ones when not standardized.
    pub scales: Vec<f64>,
    pub standardized: bool,
}

/// Remove column means and, if asked, divide by the divisor-`n` standard deviation.
pub fn center_and_scale(data: &DataMatrix, standardize: bool) -> Result<CenteredData> {
    let x = data.values();
    let (n, d) = x.shape();
    let mut values = x.clone();
    let mut means = Vec::with_capacity(d);
    let mut scales = Vec::with_capacity(d);
    for j in 0..d {
        let mut col = values.column_mut(j);
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let scale = if standardize {
            let sd = (col.norm_squared() / n as f64).sqrt();
            if sd == 0.0 || sd <= 16.0 * f64::EPSILON * mean.abs() {
                return Err(Error::DegenerateColumn { column: j });
            }
            col /= sd;
            sd
        } else {
            1.0
        };
        means.push(mean);
        scales.push(scale);
    }
    Ok(CenteredData { values, means, scales, standardized: standardize })
}

/// `κ·√(σ̂_ii · ln d / n)` with `σ̂_ii` the second moment of centered column `i`.
pub fn default_lambda(centered: &DMatrix<f64>, i: usize, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    let (n, d) = centered.shape();
    if i >= d {
        return Err(Error::invalid(format!("variable {i} out of range for {d} columns")));
    }
    let second_moment = centered.column(i).norm_squared() / n as f64;
    Ok(kappa * (second_moment * (d as f64).ln() / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodewiseOptions {
    pub kappa: f64,
    pub standardize: bool,
}

impl Default for NodewiseOptions {
    fn default() -> Self {
        Self { kappa: DEFAULT_KAPPA, standardize: true }
    }
}

/// Per-variable coefficients and residuals for one group.
#[derive(Debug, Clone)]
pub struct NodewiseFit {
    /// Row `i` holds the coefficients of node `i`'s regression in slot order,
    /// on the original data scale.
    pub betas: DMatrix<f64>,
    /// `n×d` residual matrix.
    pub residuals: DMatrix<f64>,
    pub lambdas: Vec<f64>,
    pub standardized: bool,
    pub column_scales: Vec<f64>,
}

impl NodewiseFit {
    pub fn n(&self) -> usize {
        self.residuals.nrows()
    }

    pub fn d(&self) -> usize {
        self.residuals.ncols()
    }

    /// Coefficient of variable `var` in the regression of variable `node`.
    pub fn coef(&self, var: usize, node: usize) -> f64 {
        coef(&self.betas, var, node)
    }
}

/// Coefficient of variable `var` in node `node`'s regression, `var != node`.
///
/// For `i < j` this is `β̂_{i,j}` when called as `coef(b, i, j)` and
/// `β̂_{j−1,i}` when called as `coef(b, j, i)`.
#[inline]
pub fn coef(betas: &DMatrix<f64>, var: usize, node: usize) -> f64 {
    debug_assert_ne!(var, node);
    let slot = if var < node { var } else { var - 1 };
    betas[(node, slot)]
}

/// `ε̂_{k,i} = X_{k,i} − X̄_i − (X_{k,−i} − X̄_{−i})ᵀ β̂_i`.
pub fn compute_residuals(data: &DataMatrix, betas: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = data.d();
    if betas.shape() != (d, d - 1) {
        return Err(Error::invalid(format!(
            "coefficient matrix is {:?}, expected ({d}, {})",
            betas.shape(),
            d - 1
        )));
    }
    if betas.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("coefficients must be finite"));
    }
    let centered = center_and_scale(data, false)?.values;
    // column i of (I − B) carries 1 at row i and −β̂_i elsewhere
    let mut transform = DMatrix::<f64>::identity(d, d);
    for i in 0..d {
        for s in 0..d - 1 {
            transform[(lasso::slot_variable(i, s), i)] = -betas[(i, s)];
        }
    }
    Ok(centered * transform)
}

/// Fit all `d` node regressions of one group.
pub fn fit_nodewise(data: &DataMatrix, options: &NodewiseOptions) -> Result<NodewiseFit> {
    fit_nodewise_with(data, options, &LassoSettings::default())
}

pub fn fit_nodewise_with(
    data: &DataMatrix,
    options: &NodewiseOptions,
    settings: &LassoSettings,
) -> Result<NodewiseFit> {
    let d = data.d();
    let prepared = center_and_scale(data, options.standardize)?;
    let gram = lasso::gram_matrix(&prepared.values);
    let lambdas = (0..d)
        .map(|i| {
            let lambda = default_lambda(&prepared.values, i, options.kappa)?;
            if lambda > 0.0 {
                Ok(lambda)
            } else {
                Err(Error::DegenerateColumn { column: i })
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = par::try_map_indexed(d, |i| lasso::fit_node_gram(&gram, i, lambdas[i], settings))?;
    let scales = &prepared.scales;
    let betas = DMatrix::from_fn(d, d - 1, |i, s| {
        rows[i][s] * scales[i] / scales[lasso::slot_variable(i, s)]
    });
    let residuals = compute_residuals(data, &betas)?;
    Ok(NodewiseFit {
        betas,
        residuals,
        lambdas,
        standardized: prepared.standardized,
        column_scales: prepared.scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Group;
    use approx::assert_abs_diff_eq;

    fn matrix(rows: &[Vec<f64>]) -> DataMatrix {
        DataMatrix::from_rows(rows, Group::First).unwrap()
    }

    #[test]
    fn centering_without_scaling() {
        let data = matrix(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 8.0]]);
        let c = center_and_scale(&data, false).unwrap();
        assert_eq!(c.values.column(0).as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(c.scales, vec![1.0, 1.0]);
        assert_eq!(c.means[0], 2.0);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let data = matrix(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]]);
        assert!(matches!(center_and_scale(&data, true), Err(Error::DegenerateColumn { column: 1 })));
        assert!(center_and_scale(&data, false).is_ok());
    }

    #[test]
    fn two_point_column_standardizes_to_unit() {
        let data = matrix(&[vec![0.0, 1.0], vec![2.0, 3.0]]);
        let c = center_and_scale(&data, true).unwrap();
        assert_eq!(c.values.column(0).as_slice(), &[-1.0, 1.0]);
        assert_eq!(c.scales[0], 1.0);
    }

    #[test]
    fn lambda_rule() {
        let n = 200;
        let d = 100;
        // column with unit second moment: alternating ±1
        let x = DMatrix::from_fn(n, d, |k, _| if k % 2 == 0 { 1.0 } else { -1.0 });
        let lambda = default_lambda(&x, 3, 2.0).unwrap();
        assert_abs_diff_eq!(lambda, 2.0 * ((100f64).ln() / 200.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(lambda, 0.30348, epsilon = 1e-5);
        let doubled = x.map(|v| 2.0 * v);
        assert_abs_diff_eq!(default_lambda(&doubled, 3, 2.0).unwrap(), 2.0 * lambda, epsilon = 1e-15);
        assert!(default_lambda(&x, 0, 0.0).is_err());
        assert!(default_lambda(&x, 0, -1.0).is_err());
    }

    #[test]
    fn zero_coefficients_give_centered_data() {
        let data = matrix(&[vec![1.0, 4.0, 0.0], vec![2.0, 1.0, 1.0], vec![6.0, 1.0, 2.0]]);
        let res = compute_residuals(&data, &DMatrix::zeros(3, 2)).unwrap();
        let centered = center_and_scale(&data, false).unwrap().values;
        assert_eq!(res, centered);
    }

    #[test]
    fn perfect_linear_fit_has_zero_residual() {
        let data = matrix(&[vec![1.0, 2.0, 0.3], vec![2.0, 4.0, -1.0], vec![-3.0, -6.0, 0.5], vec![0.5, 1.0, 2.0]]);
        let mut betas = DMatrix::zeros(3, 2);
        // node 1 regressed on (x0, x2): x1 = 2 x0
        betas[(1, 0)] = 2.0;
        let res = compute_residuals(&data, &betas).unwrap();
        assert!(res.column(1).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn residuals_match_naive_loop() {
        let rows = vec![
            vec![0.3, -1.2, 2.0],
            vec![1.1, 0.4, -0.7],
            vec![-0.5, 0.9, 0.1],
            vec![2.2, -0.3, 1.4],
        ];
        let data = matrix(&rows);
        let betas = DMatrix::from_row_slice(3, 2, &[0.5, -0.25, 1.5, 0.75, -2.0, 0.125]);
        let res = compute_residuals(&data, &betas).unwrap();
        let (n, d) = (4, 3);
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        for i in 0..d {
            for k in 0..n {
                let mut e = rows[k][i] - mean[i];
                let mut slot = 0;
                for j in 0..d {
                    if j == i {
                        continue;
                    }
                    e -= (rows[k][j] - mean[j]) * betas[(i, slot)];
                    slot += 1;
                }
                assert_abs_diff_eq!(res[(k, i)], e, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn coefficient_index_convention() {
        // node 2's regression: slots (var 0, var 1); node 0's: (var 1, var 2)
        let betas = DMatrix::from_row_slice(3, 2, &[10.0, 20.0, 30.0, 40.0, 50.0, 60.0]);
        assert_eq!(coef(&betas, 0, 2), 50.0);
        assert_eq!(coef(&betas, 1, 2), 60.0);
        assert_eq!(coef(&betas, 2, 0), 20.0);
        assert_eq!(coef(&betas, 0, 1), 30.0);
        assert_eq!(coef(&betas, 2, 1), 40.0);
    }

    #[test]
    fn fit_residuals_are_centered() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|k| {
                let t = k as f64;
                vec![(t * 0.7).sin(), (t * 1.3).cos() + 0.5 * (t * 0.7).sin(), (t * 0.31).sin() * 3.0 + 7.0]
            })
            .collect();
        let fit = fit_nodewise(&matrix(&rows), &NodewiseOptions::default()).unwrap();
        for i in 0..3 {
            assert!(fit.residuals.column(i).sum().abs() < 1e-10);
        }
        assert!(fit.lambdas.iter().all(|&l| l > 0.0));
        assert!(fit.betas.iter().all(|b| b.is_finite()));
    }
}
