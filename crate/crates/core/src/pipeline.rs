//! End-to-end two-sample test.

use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    adaptive_over, critical_value, decide, doubly_adaptive, leave_one_out_pvalues, p_value,
    run_ensemble, BootstrapEnsemble, Grid,
};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::nodewise::{fit_nodewise, NodewiseFit, NodewiseOptions, DEFAULT_KAPPA};
use crate::norm::NormOrder;
use crate::stats::{max_statistic, w_from_groups, GroupStats, WMatrix};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Human-readable description of the penalty rule, embedded in reports.
pub const LAMBDA_RULE: &str = "kappa * sqrt(sigma_ii * ln(d) / n)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub p_norms: Vec<NormOrder>,
    pub s0_values: Vec<usize>,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub kappa: f64,
    pub standardize: bool,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            p_norms: vec![
                NormOrder::Finite(1.0),
                NormOrder::Finite(2.0),
                NormOrder::Finite(3.0),
                NormOrder::Finite(4.0),
                NormOrder::Finite(5.0),
                NormOrder::Infinity,
            ],
            s0_values: vec![10, 100, 500, 1000],
            replicates: 1000,
            alpha: 0.05,
            seed: 20_190_401,
            kappa: DEFAULT_KAPPA,
            standardize: true,
            threads: None,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_norms.is_empty() {
            return Err(Error::invalid("p grid is empty"));
        }
        for p in &self.p_norms {
            if let NormOrder::Finite(v) = *p {
                NormOrder::finite(v)?;
            }
        }
        if self.s0_values.is_empty() || self.s0_values.contains(&0) {
            return Err(Error::invalid("s0 grid must be nonempty with entries >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.replicates < 2 {
            return Err(Error::invalid("at least two bootstrap replicates are needed for recycling"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be positive, got {}", self.kappa)));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("thread count must be positive"));
        }
        Ok(())
    }

    pub fn nodewise_options(&self) -> NodewiseOptions {
        NodewiseOptions { kappa: self.kappa, standardize: self.standardize }
    }
}

/// One `(s0, p)` test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub s0: usize,
    pub p: NormOrder,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Adaptive test over the `p` grid at one `s0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRecord {
    pub s0: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Adaptive test over the whole `(s0, p)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublyAdaptiveRecord {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub version: String,
    pub n1: usize,
    pub n2: usize,
    pub d: usize,
    pub pairs: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub kappa: f64,
    pub lambda_rule: String,
    pub standardize: bool,
    pub p_norms: Vec<NormOrder>,
    /// Requested `s0` values before clamping.
    pub s0_requested: Vec<usize>,
    /// `s0` values actually used.
    pub s0_values: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub metadata: ReportMetadata,
    pub entries: Vec<EntryRecord>,
    /// The `(1, ∞)` test, the bootstrap-calibrated max statistic.
    pub max_test: EntryRecord,
    /// `M_n = max_{i<j} W²_ij`.
    pub m_n: f64,
    pub adaptive: Vec<AdaptiveRecord>,
    /// Present when more than one `s0` is in use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doubly_adaptive: Option<DoublyAdaptiveRecord>,
}

impl TestReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn entry(&self, s0: usize, p: NormOrder) -> Option<&EntryRecord> {
        self.entries.iter().find(|e| e.s0 == s0 && e.p == p)
    }

    pub fn adaptive_for(&self, s0: usize) -> Option<&AdaptiveRecord> {
        self.adaptive.iter().find(|a| a.s0 == s0)
    }
}

/// Intermediate products of one run, for callers that need more than the report.
#[derive(Debug, Clone)]
pub struct TestArtifacts {
    pub fits: (NodewiseFit, NodewiseFit),
    pub stats: (GroupStats, GroupStats),
    pub w: WMatrix,
    pub ensemble: BootstrapEnsemble,
}

/// Fits, statistics and `W` for a pair of samples.
pub type GroupStatistics = ((NodewiseFit, NodewiseFit), (GroupStats, GroupStats), WMatrix);

/// Node-wise fits and per-group statistics for both samples.
pub fn group_statistics(
    group1: &DataMatrix,
    group2: &DataMatrix,
    options: &NodewiseOptions,
) -> Result<GroupStatistics> {
    if group1.d() != group2.d() {
        return Err(Error::invalid(format!(
            "groups have {} and {} variables",
            group1.d(),
            group2.d()
        )));
    }
    let fit1 = fit_nodewise(group1, options)?;
    let fit2 = fit_nodewise(group2, options)?;
    let stats1 = GroupStats::from_fit(&fit1)?;
    let stats2 = GroupStats::from_fit(&fit2)?;
    let w = w_from_groups(&stats1, &stats2)?;
    Ok(((fit1, fit2), (stats1, stats2), w))
}

pub fn run_test(group1: &DataMatrix, group2: &DataMatrix, config: &TestConfig) -> Result<TestReport> {
    run_test_detailed(group1, group2, config).map(|(report, _)| report)
}

pub fn run_test_detailed(
    group1: &DataMatrix,
    group2: &DataMatrix,
    config: &TestConfig,
) -> Result<(TestReport, TestArtifacts)> {
    config.validate()?;
    let (fits, stats, w) = group_statistics(group1, group2, &config.nodewise_options())?;
    let d = group1.d();
    let pairs = d * (d - 1) / 2;
    let grid = Grid::new(&config.p_norms, &config.s0_values, pairs)?;
    let ensemble = run_ensemble((&fits.0, &fits.1), (&stats.0, &stats.1), &grid, config.replicates, config.seed)?;

    let alpha = config.alpha;
    let record = |entry_s0: usize, p: NormOrder, observed: f64, column: &[f64]| -> Result<EntryRecord> {
        let pv = p_value(observed, column);
        Ok(EntryRecord {
            s0: entry_s0,
            p,
            statistic: observed,
            critical_value: critical_value(column, alpha)?,
            p_value: pv,
            reject: decide(pv, alpha)?,
        })
    };
    let entries = (0..grid.len())
        .map(|k| {
            let e = grid.entry(k);
            record(e.s0, e.p, ensemble.observed[k], ensemble.column(k))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_test = record(1, NormOrder::Infinity, ensemble.observed_max, &ensemble.max_column)?;

    let adaptive = (0..grid.s0_values().len())
        .map(|s| {
            let res = adaptive_over(&ensemble, &grid.s0_block(s))?;
            Ok(AdaptiveRecord {
                s0: grid.s0_values()[s],
                statistic: res.statistic,
                p_value: res.p_value,
                reject: decide(res.p_value, alpha)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let doubly = if grid.s0_values().len() > 1 {
        let observed: Vec<f64> = entries.iter().map(|e| e.p_value).collect();
        let recycled: Vec<Vec<f64>> = ensemble.columns.iter().map(|c| leave_one_out_pvalues(c)).collect();
        let res = doubly_adaptive(&observed, &recycled)?;
        Some(DoublyAdaptiveRecord {
            statistic: res.statistic,
            p_value: res.p_value,
            reject: decide(res.p_value, alpha)?,
        })
    } else {
        None
    };

    let report = TestReport {
        metadata: ReportMetadata {
            version: VERSION.to_string(),
            n1: group1.n(),
            n2: group2.n(),
            d,
            pairs,
            replicates: config.replicates,
            alpha,
            seed: config.seed,
            kappa: config.kappa,
            lambda_rule: LAMBDA_RULE.to_string(),
            standardize: config.standardize,
            p_norms: grid.p_norms().to_vec(),
            s0_requested: config.s0_values.clone(),
            s0_values: grid.s0_values().to_vec(),
            variable_names: group1.names().map(<[String]>::to_vec),
        },
        entries,
        max_test,
        m_n: max_statistic(&w),
        adaptive,
        doubly_adaptive: doubly,
    };
    Ok((report, TestArtifacts { fits, stats, w, ensemble }))
}
