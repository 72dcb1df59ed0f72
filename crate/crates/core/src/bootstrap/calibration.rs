//! Critical values, p-values and the adaptive (minimum p-value) combination.
//!
//! Tie handling follows the defining formulas literally: strict `>` in the
//! single-statistic and leave-one-out p-values, `≤` in the adaptive p-value.

use crate::error::{Error, Result};

use super::ensemble::BootstrapEnsemble;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `inf{t : (1/B) Σ_b 1{Nᵇ ≤ t} > 1 − α}`, attained at an observed replicate.
pub fn critical_value(column: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if column.is_empty() {
        return Err(Error::invalid("critical value of an empty bootstrap sample"));
    }
    let mut sorted = column.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let b = sorted.len() as f64;
    let level = 1.0 - alpha;
    let mut k = 0;
    while k < sorted.len() {
        // the empirical CDF jumps only at distinct values
        let t = sorted[k];
        let mut end = k + 1;
        while end < sorted.len() && sorted[end] == t {
            end += 1;
        }
        if end as f64 / b > level {
            return Ok(t);
        }
        k = end;
    }
    unreachable!("the empirical CDF reaches 1 > 1 - alpha")
}

/// `Σ_b 1{Nᵇ > N}/(B + 1)`.
pub fn p_value(observed: f64, column: &[f64]) -> f64 {
    let exceed = column.iter().filter(|&&v| v > observed).count();
    exceed as f64 / (column.len() + 1) as f64
}

/// Minimum of the p-values being combined.
pub fn adaptive_statistic(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::invalid("adaptive statistic over an empty set"));
    }
    Ok(p_values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Leave-one-out p-values `Σ_{b'≠b} 1{N^{b'} > Nᵇ}/B` for every replicate.
///
/// Uses one sort and a binary search per replicate; the count excludes `b`
/// automatically since `Nᵇ > Nᵇ` never holds.
pub fn leave_one_out_pvalues(column: &[f64]) -> Vec<f64> {
    let b = column.len();
    let mut sorted = column.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    column
        .iter()
        .map(|&v| {
            let at_most = sorted.partition_point(|&x| x <= v);
            (b - at_most) as f64 / b as f64
        })
        .collect()
}

/// `N_adᵇ = min_k P̂ᵇ_k` over the selected grid columns.
pub fn recycled_pvalues_for(ensemble: &BootstrapEnsemble, columns: &[usize]) -> Result<Vec<f64>> {
    if columns.is_empty() {
        return Err(Error::invalid("no grid columns selected"));
    }
    if ensemble.replicates < 2 {
        return Err(Error::invalid("recycling needs at least two replicates"));
    }
    let loo: Vec<Vec<f64>> = columns.iter().map(|&k| leave_one_out_pvalues(ensemble.column(k))).collect();
    Ok(min_across(&loo, ensemble.replicates))
}

/// `N_adᵇ` over the full grid.
pub fn recycled_pvalues(ensemble: &BootstrapEnsemble) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..ensemble.grid.len()).collect();
    recycled_pvalues_for(ensemble, &all)
}

fn min_across(columns: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|b| columns.iter().map(|c| c[b]).fold(f64::INFINITY, f64::min))
        .collect()
}

/// `((Σ_b 1{N_adᵇ ≤ N_ad}) + 1)/(B + 1)`.
pub fn adaptive_p_value(n_ad: f64, n_ad_boot: &[f64]) -> f64 {
    let at_most = n_ad_boot.iter().filter(|&&v| v <= n_ad).count();
    (at_most + 1) as f64 / (n_ad_boot.len() + 1) as f64
}

/// Reject iff `p ≤ α`.
pub fn decide(p_value: f64, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(p_value <= alpha)
}

/// Minimum p-value statistic with its recycled-bootstrap p-value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdaptiveResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Adaptive test over a subset of grid columns: observed minimum p-value and
/// its p-value against the recycled replicates.
pub fn adaptive_over(ensemble: &BootstrapEnsemble, columns: &[usize]) -> Result<AdaptiveResult> {
    let observed: Vec<f64> = columns
        .iter()
        .map(|&k| p_value(ensemble.observed[k], ensemble.column(k)))
        .collect();
    let statistic = adaptive_statistic(&observed)?;
    let boot = recycled_pvalues_for(ensemble, columns)?;
    Ok(AdaptiveResult { statistic, p_value: adaptive_p_value(statistic, &boot) })
}

/// Doubly tuned combination: minimum over the whole `(p, s0)` table.
///
/// `observed[k]` are the observed p-values and `recycled[k]` the
/// leave-one-out p-values of column `k`.
pub fn doubly_adaptive(observed: &[f64], recycled: &[Vec<f64>]) -> Result<AdaptiveResult> {
    if observed.is_empty() || observed.len() != recycled.len() {
        return Err(Error::invalid("p-value table and recycled tables must be nonempty and aligned"));
    }
    let b = recycled[0].len();
    if b == 0 || recycled.iter().any(|c| c.len() != b) {
        return Err(Error::invalid("recycled tables must share one nonzero length"));
    }
    let statistic = adaptive_statistic(observed)?;
    let boot = min_across(recycled, b);
    Ok(AdaptiveResult { statistic, p_value: adaptive_p_value(statistic, &boot) })
}
