//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use nalgebra::DMatrix;
use precdiff::model::{build_base_precision, precision_to_covariance, sample_gaussian, ModelId};
use precdiff::rng::substream;
use precdiff::{DataMatrix, Group, NormOrder};
use rand::Rng;

/// `(s0, p)` norm by sorting magnitudes ascending and summing the tail.
pub fn brute_norm(v: &[f64], s0: usize, p: NormOrder) -> f64 {
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = s0.min(mags.len());
    let top = &mags[mags.len() - k..];
    match p {
        NormOrder::Infinity => top.iter().copied().fold(0.0, f64::max),
        NormOrder::Finite(q) => {
            let scale = top.iter().copied().fold(0.0, f64::max);
            if scale == 0.0 {
                return 0.0;
            }
            top.iter().map(|x| (x / scale).powf(q)).sum::<f64>().powf(1.0 / q) * scale
        }
    }
}

/// Recycled adaptive replicates by the quadratic double loop.
pub fn naive_recycled(columns: &[Vec<f64>]) -> Vec<f64> {
    let b = columns[0].len();
    (0..b)
        .map(|i| {
            columns
                .iter()
                .map(|col| {
                    let exceed = (0..b).filter(|&j| j != i && col[j] > col[i]).count();
                    exceed as f64 / b as f64
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Lasso problem built from a raw design, without the library's Gram path.
pub struct LassoProblem {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl LassoProblem {
    /// Node `node` of centered data `z`.
    pub fn node(z: &DMatrix<f64>, node: usize, lambda: f64) -> Self {
        let d = z.ncols();
        let cols: Vec<usize> = (0..d).filter(|&j| j != node).collect();
        let x = DMatrix::from_fn(z.nrows(), d - 1, |i, s| z[(i, cols[s])]);
        let y = z.column(node).iter().copied().collect();
        Self { x, y, lambda }
    }

    fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let n = self.x.nrows();
        (0..n)
            .map(|i| self.y[i] - (0..beta.len()).map(|s| self.x[(i, s)] * beta[s]).sum::<f64>())
            .collect()
    }

    pub fn objective(&self, beta: &[f64]) -> f64 {
        let n = self.x.nrows() as f64;
        let r = self.residual(beta);
        r.iter().map(|v| v * v).sum::<f64>() / (2.0 * n) + self.lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// `(1/n)⟨x_s, y − Xβ⟩` for every predictor.
    pub fn gradient_terms(&self, beta: &[f64]) -> Vec<f64> {
        let n = self.x.nrows();
        let r = self.residual(beta);
        (0..self.x.ncols()).map(|s| (0..n).map(|i| self.x[(i, s)] * r[i]).sum::<f64>() / n as f64).collect()
    }

    /// Returns true when both stationarity conditions hold within `tol`.
    pub fn kkt_holds(&self, beta: &[f64], tol: f64) -> bool {
        self.gradient_terms(beta).iter().zip(beta).all(|(&g, &b)| {
            if b != 0.0 {
                (g - self.lambda * b.signum()).abs() <= tol
            } else {
                g.abs() <= self.lambda + tol
            }
        })
    }

    /// Accelerated proximal gradient with adaptive restart, run until the
    /// iterates stall or descent stops. Works on its own `XᵀX/n`, `Xᵀy/n`.
    pub fn fista(&self, max_iter: usize) -> Vec<f64> {
        let n = self.x.nrows() as f64;
        let p = self.x.ncols();
        let xtx = self.x.tr_mul(&self.x) / n;
        let xty: Vec<f64> = (0..p)
            .map(|s| (0..self.x.nrows()).map(|i| self.x[(i, s)] * self.y[i]).sum::<f64>() / n)
            .collect();
        let smooth = |b: &[f64]| -> f64 {
            let mut q = 0.0;
            for s in 0..p {
                for t in 0..p {
                    q += b[s] * xtx[(s, t)] * b[t];
                }
            }
            0.5 * q - (0..p).map(|s| xty[s] * b[s]).sum::<f64>() + self.lambda * b.iter().map(|v| v.abs()).sum::<f64>()
        };
        let step = 1.0 / xtx.clone().symmetric_eigenvalues().max();
        let mut beta = vec![0.0; p];
        let mut z = beta.clone();
        let mut t = 1.0_f64;
        let mut last = smooth(&beta);
        let mut restarted = false;
        for _ in 0..max_iter {
            let next: Vec<f64> = (0..p)
                .map(|s| {
                    let g = xty[s] - (0..p).map(|u| xtx[(s, u)] * z[u]).sum::<f64>();
                    let v = z[s] + step * g;
                    v.signum() * (v.abs() - step * self.lambda).max(0.0)
                })
                .collect();
            let obj = smooth(&next);
            if obj > last {
                // a plain proximal step from the current iterate no longer descends
                if restarted {
                    break;
                }
                restarted = true;
                t = 1.0;
                z = beta.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            z = (0..p).map(|s| next[s] + momentum * (next[s] - beta[s])).collect();
            let moved = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            beta = next;
            restarted = false;
            t = t_next;
            last = obj;
            if moved < 1e-14 {
                break;
            }
        }
        beta
    }
}

/// Column-centered copy.
pub fn centered(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = x.clone();
    for j in 0..z.ncols() {
        let m = z.column(j).mean();
        z.column_mut(j).add_scalar_mut(-m);
    }
    z
}

/// Gaussian design with random correlation, drawn from `rng`.
pub fn random_design<R: Rng>(n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    let mix = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rng.random_range(-0.3..0.3) });
    let z = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    z * mix
}

/// Two null samples from a Model 1 truth.
pub fn null_pair(d: usize, n: usize, model_seed: u64, data_seed: u64) -> (DataMatrix, DataMatrix) {
    let base = build_base_precision(ModelId::Model1, d, &mut substream(model_seed, &[0])).unwrap();
    let sigma = precision_to_covariance(base.omega()).unwrap();
    let x = sample_gaussian(n, &sigma, &mut substream(data_seed, &[1]), Group::First).unwrap();
    let y = sample_gaussian(n, &sigma, &mut substream(data_seed, &[2]), Group::Second).unwrap();
    (x, y)
}

/// Kolmogorov–Smirnov distance of a sample from Uniform(0, 1).
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max)
}
