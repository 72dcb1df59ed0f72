//! Monte Carlo size and power experiments.
//!
//! A configuration fixes the base model and the perturbation locations from
//! the model substream of the master seed; each replication then draws fresh
//! Gaussian samples and its own bootstrap seed. Rejection frequencies are
//! reported per test variant in a fixed column order:
//!
//! 1. one column per grid entry, `N_s{s0}_p{p}`, `s0`-major;
//! 2. `adaptive_s{s0}` for every `s0`;
//! 3. `doubly_adaptive` when more than one `s0` is in use;
//! 4. `max_test`, the bootstrap-calibrated `(1, ∞)` test.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Group;
use crate::error::{Error, Result};
use crate::model::{build_alternative_pair, build_base_precision, precision_to_covariance, sample_gaussian, ModelId};
use crate::par;
use crate::pipeline::{run_test, TestConfig, TestReport};
use crate::rng::{derive_key, domain, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub model: ModelId,
    pub d: usize,
    pub n1: usize,
    pub n2: usize,
    /// Number of nonzero entries of the perturbation; ignored when `r == 0`.
    pub m_t: usize,
    pub r: f64,
    pub reps: usize,
}

/// Rejection frequencies of every test variant for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub spec: SimulationSpec,
    pub variants: Vec<String>,
    pub rates: Vec<f64>,
}

impl SimulationSummary {
    pub fn rate(&self, variant: &str) -> Option<f64> {
        self.variants.iter().position(|v| v == variant).map(|i| self.rates[i])
    }
}

/// Variant names in column order, as they appear in a report.
pub fn variant_names(report: &TestReport) -> Vec<String> {
    let mut names: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("N_s{}_p{}", e.s0, e.p))
        .collect();
    names.extend(report.adaptive.iter().map(|a| format!("adaptive_s{}", a.s0)));
    if report.doubly_adaptive.is_some() {
        names.push("doubly_adaptive".to_string());
    }
    names.push("max_test".to_string());
    names
}

/// Reject flags aligned with [`variant_names`].
pub fn variant_decisions(report: &TestReport) -> Vec<bool> {
    let mut flags: Vec<bool> = report.entries.iter().map(|e| e.reject).collect();
    flags.extend(report.adaptive.iter().map(|a| a.reject));
    if let Some(t) = &report.doubly_adaptive {
        flags.push(t.reject);
    }
    flags.push(report.max_test.reject);
    flags
}

/// Covariances of the two groups for a configuration.
pub fn truth_covariances(spec: &SimulationSpec, seed: u64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let base = build_base_precision(spec.model, spec.d, &mut substream(seed, &[domain::MODEL, 0]))?;
    if spec.r == 0.0 {
        let sigma = precision_to_covariance(base.omega())?;
        return Ok((sigma.clone(), sigma));
    }
    let alt = build_alternative_pair(&base, spec.m_t, spec.r, &mut substream(seed, &[domain::MODEL, 1]))?;
    Ok((precision_to_covariance(&alt.omega1)?, precision_to_covariance(&alt.omega2)?))
}

/// One replication: fresh samples from both groups, then the full test.
pub fn replicate(
    spec: &SimulationSpec,
    sigmas: &(DMatrix<f64>, DMatrix<f64>),
    config: &TestConfig,
    rep: usize,
) -> Result<TestReport> {
    let seed = config.seed;
    let x = sample_gaussian(spec.n1, &sigmas.0, &mut substream(seed, &[domain::DATA, rep as u64, 1]), Group::First)?;
    let y = sample_gaussian(spec.n2, &sigmas.1, &mut substream(seed, &[domain::DATA, rep as u64, 2]), Group::Second)?;
    let rep_config = TestConfig { seed: derive_key(seed, &[domain::REPLICATION, rep as u64]), ..config.clone() };
    run_test(&x, &y, &rep_config)
}

pub fn simulate(spec: &SimulationSpec, config: &TestConfig) -> Result<SimulationSummary> {
    if spec.reps == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    if !(spec.r >= 0.0 && spec.r.is_finite()) {
        return Err(Error::invalid(format!("signal magnitude must be finite and >= 0, got {}", spec.r)));
    }
    config.validate()?;
    let sigmas = truth_covariances(spec, config.seed)?;
    let reports = par::try_map_indexed(spec.reps, |rep| replicate(spec, &sigmas, config, rep))?;
    let variants = variant_names(&reports[0]);
    let mut counts = vec![0usize; variants.len()];
    for report in &reports {
        for (c, flag) in counts.iter_mut().zip(variant_decisions(report)) {
            *c += usize::from(flag);
        }
    }
    let rates = counts.iter().map(|&c| c as f64 / spec.reps as f64).collect();
    Ok(SimulationSummary { spec: spec.clone(), variants, rates })
}

/// Power curve: one simulation per `r`, sharing the model and perturbation
/// locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub rows: Vec<SimulationSummary>,
}

impl PowerCurve {
    /// Header: `r,m_t,<variant>...`.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["r".to_string(), "m_t".to_string()];
        if let Some(first) = self.rows.first() {
            h.extend(first.variants.iter().cloned());
        }
        h
    }

    pub fn to_csv(&self) -> String {
        summaries_to_csv(&self.rows)
    }
}

/// CSV with columns `r, m_t`, then one rejection frequency per variant.
pub fn summaries_to_csv(rows: &[SimulationSummary]) -> String {
    let mut out = String::new();
    if let Some(first) = rows.first() {
        out.push_str("r,m_t");
        for v in &first.variants {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
    }
    for row in rows {
        let _ = write!(out, "{},{}", row.spec.r, row.spec.m_t);
        for rate in &row.rates {
            let _ = write!(out, ",{rate}");
        }
        out.push('\n');
    }
    out
}

pub fn power_curve(
    base: &SimulationSpec,
    r_values: &[f64],
    config: &TestConfig,
) -> Result<PowerCurve> {
    if r_values.is_empty() {
        return Err(Error::invalid("r list is empty"));
    }
    if r_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("r list must be ascending"));
    }
    let rows = r_values
        .iter()
        .map(|&r| simulate(&SimulationSpec { r, ..base.clone() }, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerCurve { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormOrder;

    fn tiny_config() -> TestConfig {
        TestConfig {
            p_norms: vec![NormOrder::Finite(1.0), NormOrder::Infinity],
            s0_values: vec![2, 10],
            replicates: 40,
            seed: 17,
            ..TestConfig::default()
        }
    }

    fn tiny_spec(r: f64, reps: usize) -> SimulationSpec {
        SimulationSpec { model: ModelId::Model1, d: 6, n1: 40, n2: 40, m_t: 4, r, reps }
    }

    #[test]
    fn single_rep_equals_single_test() {
        let spec = tiny_spec(0.5, 1);
        let cfg = tiny_config();
        let summary = simulate(&spec, &cfg).unwrap();
        let sigmas = truth_covariances(&spec, cfg.seed).unwrap();
        let report = replicate(&spec, &sigmas, &cfg, 0).unwrap();
        assert_eq!(summary.variants, variant_names(&report));
        let flags: Vec<f64> = variant_decisions(&report).into_iter().map(|f| f64::from(u8::from(f))).collect();
        assert_eq!(summary.rates, flags);
    }

    #[test]
    fn variant_columns_are_stable() {
        let summary = simulate(&tiny_spec(0.0, 2), &tiny_config()).unwrap();
        assert_eq!(
            summary.variants,
            vec![
                "N_s2_p1", "N_s2_pinf", "N_s10_p1", "N_s10_pinf", "adaptive_s2", "adaptive_s10",
                "doubly_adaptive", "max_test"
            ]
        );
        assert!(summary.rates.iter().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn null_configuration_has_equal_covariances() {
        let (a, b) = truth_covariances(&tiny_spec(0.0, 1), 3).unwrap();
        assert_eq!(a, b);
        let (a, b) = truth_covariances(&tiny_spec(0.8, 1), 3).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn power_curve_csv_layout() {
        let cfg = tiny_config();
        let curve = power_curve(&tiny_spec(0.0, 2), &[0.0], &cfg).unwrap();
        assert_eq!(curve.rows.len(), 1);
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), curve.header().join(","));
        assert!(lines.next().unwrap().starts_with("0,4,"));
        assert!(power_curve(&tiny_spec(0.0, 2), &[], &cfg).is_err());
        assert!(power_curve(&tiny_spec(0.0, 2), &[0.5, 0.1], &cfg).is_err());
    }
}
