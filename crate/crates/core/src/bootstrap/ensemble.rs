use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Group;
use crate::error::{Error, Result};
use crate::nodewise::NodewiseFit;
use crate::norm::{descending_magnitudes, NormFamily, NormOrder};
use crate::par;
use crate::rng::{domain, substream};
use crate::stats::{bias_correct, w_from_groups, GroupStats, WMatrix};

/// One `(s0, p)` pair of the statistic family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub s0: usize,
    pub p: NormOrder,
}

/// The `S × P` grid, stored `s0`-major: entry `k = s·|P| + q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    p_norms: Vec<NormOrder>,
    s0_values: Vec<usize>,
}

impl Grid {
    /// Build a grid for vectors of length `len`; `s0` values above `len`
    /// are clamped and duplicates (after clamping) dropped.
    pub fn new(p_norms: &[NormOrder], s0_values: &[usize], len: usize) -> Result<Self> {
        if p_norms.is_empty() || s0_values.is_empty() {
            return Err(Error::invalid("norm grid needs at least one p and one s0"));
        }
        if len == 0 {
            return Err(Error::invalid("grid for empty vectors"));
        }
        let mut ps: Vec<NormOrder> = Vec::new();
        for &p in p_norms {
            if let NormOrder::Finite(v) = p {
                NormOrder::finite(v)?;
            }
            if !ps.contains(&p) {
                ps.push(p);
            }
        }
        let mut ss: Vec<usize> = Vec::new();
        for &s0 in s0_values {
            if s0 == 0 {
                return Err(Error::invalid("s0 must be at least 1"));
            }
            let clamped = s0.min(len);
            if clamped != s0 {
                log::warn!("s0 = {s0} exceeds the {len} available pairs; using {clamped}");
            }
            if !ss.contains(&clamped) {
                ss.push(clamped);
            }
        }
        Ok(Self { p_norms: ps, s0_values: ss })
    }

    pub fn p_norms(&self) -> &[NormOrder] {
        &self.p_norms
    }

    pub fn s0_values(&self) -> &[usize] {
        &self.s0_values
    }

    pub fn len(&self) -> usize {
        self.p_norms.len() * self.s0_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, s0_index: usize, p_index: usize) -> usize {
        s0_index * self.p_norms.len() + p_index
    }

    pub fn entry(&self, k: usize) -> GridEntry {
        let np = self.p_norms.len();
        GridEntry { s0: self.s0_values[k / np], p: self.p_norms[k % np] }
    }

    pub fn entries(&self) -> Vec<GridEntry> {
        (0..self.len()).map(|k| self.entry(k)).collect()
    }

    /// Column indices sharing one `s0`.
    pub fn s0_block(&self, s0_index: usize) -> Vec<usize> {
        (0..self.p_norms.len()).map(|q| self.index(s0_index, q)).collect()
    }

    fn family(&self) -> NormFamily {
        let entries = self.entries().into_iter().map(|e| (e.s0, e.p)).collect();
        NormFamily::new(entries).expect("grid is validated at construction")
    }
}

/// Bootstrap replicates of every grid statistic plus the max statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    pub grid: Grid,
    /// `columns[k][b]` is `Nᵇ` for grid entry `k`.
    pub columns: Vec<Vec<f64>>,
    /// Replicates of `max_ij |Wᵇ_ij|`, the `(1, ∞)` norm.
    pub max_column: Vec<f64>,
    pub observed: Vec<f64>,
    pub observed_max: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl BootstrapEnsemble {
    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }
}

/// `r̃ᵇ_ij = (1/n) Σ_k η_k (ε̂_ki ε̂_kj − r̃_ij)`.
pub fn bootstrap_rtilde(
    residuals: &DMatrix<f64>,
    r_tilde: &DMatrix<f64>,
    eta: &[f64],
) -> Result<DMatrix<f64>> {
    let (n, d) = residuals.shape();
    if eta.len() != n {
        return Err(Error::invalid(format!("{} multipliers for {n} observations", eta.len())));
    }
    if r_tilde.shape() != (d, d) {
        return Err(Error::invalid("cross-moment matrix does not match residuals"));
    }
    let mut weighted = residuals.clone();
    for (k, &e) in eta.iter().enumerate() {
        weighted.row_mut(k).scale_mut(e);
    }
    let eta_mean = eta.iter().sum::<f64>() / n as f64;
    let prod = weighted.tr_mul(residuals);
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        prod[(a, b)] / n as f64 - r_tilde[(a, b)] * eta_mean
    }))
}

/// `r̂ᵇ`: the bias correction applied to `r̃ᵇ`, with `r̂ᵇ_ii = r̃ᵇ_ii`.
pub fn bootstrap_rhat(r_tilde_b: &DMatrix<f64>, betas: &DMatrix<f64>) -> DMatrix<f64> {
    bias_correct(r_tilde_b, betas)
}

/// `Wᵇ_ij = (Tᵇ_ij,1 − Tᵇ_ij,2)/√(θ̂_ij,1 + θ̂_ij,2)` with
/// `Tᵇ_ij,m = r̂ᵇ_ij,m/(r̂_ii,m r̂_jj,m)`, using the original-data `r̂` and `θ̂`.
pub fn bootstrap_w(
    r_hat_b1: &DMatrix<f64>,
    r_hat_b2: &DMatrix<f64>,
    stats1: &GroupStats,
    stats2: &GroupStats,
) -> Result<WMatrix> {
    let d = stats1.d();
    if stats2.d() != d || r_hat_b1.shape() != (d, d) || r_hat_b2.shape() != (d, d) {
        return Err(Error::invalid("bootstrap matrices do not match group dimensions"));
    }
    let (r1, r2) = (&stats1.r_hat, &stats2.r_hat);
    let mut w = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in (j + 1)..d {
            let t1 = r_hat_b1[(i, j)] / (r1[(i, i)] * r1[(j, j)]);
            let t2 = r_hat_b2[(i, j)] / (r2[(i, i)] * r2[(j, j)]);
            let v = (t1 - t2) / (stats1.theta[(i, j)] + stats2.theta[(i, j)]).sqrt();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(WMatrix::from_matrix(w))
}

/// Standard normal multipliers for replicate `b` of `group`.
pub fn multipliers(seed: u64, b: usize, group: Group, n: usize) -> Vec<f64> {
    let mut rng = substream(seed, &[domain::BOOTSTRAP, b as u64, group.label()]);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `trivec(Wᵇ)` for replicate `b`.
pub fn replicate_trivec(
    fits: (&NodewiseFit, &NodewiseFit),
    stats: (&GroupStats, &GroupStats),
    seed: u64,
    b: usize,
) -> Result<Vec<f64>> {
    let mut r_hat_b = [None, None];
    for (slot, (fit, st, group)) in
        [(fits.0, stats.0, Group::First), (fits.1, stats.1, Group::Second)].into_iter().enumerate()
    {
        let eta = multipliers(seed, b, group, fit.n());
        let r_tilde_b = bootstrap_rtilde(&fit.residuals, &st.r_tilde, &eta)?;
        r_hat_b[slot] = Some(bootstrap_rhat(&r_tilde_b, &fit.betas));
    }
    let [Some(b1), Some(b2)] = r_hat_b else { unreachable!() };
    Ok(bootstrap_w(&b1, &b2, stats.0, stats.1)?.trivec().to_vec())
}

/// Multiplier bootstrap of every grid statistic.
///
/// Replicate `b` draws its multipliers from the substream
/// `(seed, b, group)`, so the result does not depend on thread count.
pub fn run_ensemble(
    fits: (&NodewiseFit, &NodewiseFit),
    stats: (&GroupStats, &GroupStats),
    grid: &Grid,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapEnsemble> {
    if replicates == 0 {
        return Err(Error::invalid("need at least one bootstrap replicate"));
    }
    if fits.0.d() != fits.1.d() || stats.0.d() != fits.0.d() || stats.1.d() != fits.1.d() {
        return Err(Error::invalid("groups have different dimensions"));
    }
    let w = w_from_groups(stats.0, stats.1)?;
    let family = grid.family();
    let observed_desc = descending_magnitudes(w.trivec());
    let observed = family.evaluate_sorted(&observed_desc);
    let observed_max = observed_desc[0];

    let rows = par::try_map_indexed(replicates, |b| {
        let v = replicate_trivec(fits, stats, seed, b)?;
        let desc = descending_magnitudes(&v);
        let mut row = family.evaluate_sorted(&desc);
        row.push(desc[0]);
        Ok::<_, Error>(row)
    })?;

    let k = grid.len();
    let columns = (0..k).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    let max_column = rows.iter().map(|r| r[k]).collect();
    Ok(BootstrapEnsemble {
        grid: grid.clone(),
        columns,
        max_column,
        observed,
        observed_max,
        replicates,
        seed,
    })
}

/// Averages of `r̃ᵇ` over `replicates` multiplier draws for one group.
///
/// Returns the entrywise mean and sample standard deviation.
pub fn rtilde_replicate_moments(
    residuals: &DMatrix<f64>,
    r_tilde: &DMatrix<f64>,
    replicates: usize,
    seed: u64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = residuals.nrows();
    let draws = par::try_map_indexed(replicates, |b| {
        bootstrap_rtilde(residuals, r_tilde, &multipliers(seed, b, Group::First, n)).map(|m| trivec_full(&m))
    })?;
    let d = r_tilde.nrows();
    let len = d * (d + 1) / 2;
    let count = replicates as f64;
    let mean: Vec<f64> = (0..len).map(|c| draws.iter().map(|r| r[c]).sum::<f64>() / count).collect();
    let sd: Vec<f64> = (0..len)
        .map(|c| {
            let ss: f64 = draws.iter().map(|r| (r[c] - mean[c]).powi(2)).sum();
            (ss / (count - 1.0).max(1.0)).sqrt()
        })
        .collect();
    Ok((upper_to_matrix(d, &mean), upper_to_matrix(d, &sd)))
}

/// Upper triangle including the diagonal, column by column.
fn trivec_full(a: &DMatrix<f64>) -> Vec<f64> {
    let d = a.nrows();
    (0..d).flat_map(|j| (0..=j).map(move |i| (i, j))).map(|(i, j)| a[(i, j)]).collect()
}

fn upper_to_matrix(d: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    m
}
