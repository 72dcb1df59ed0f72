mod common;

use nalgebra::DMatrix;
use precdiff::model::{build_base_precision, precision_to_covariance, sample_gaussian, ModelId};
use precdiff::nodewise::{coef, fit_nodewise};
use precdiff::rng::substream;
use precdiff::{Group, NodewiseOptions};

fn worst_l1_error(omega: &DMatrix<f64>, sigma: &DMatrix<f64>, n: usize, seed: u64) -> f64 {
    let d = omega.nrows();
    let data = sample_gaussian(n, sigma, &mut substream(seed, &[n as u64]), Group::First).unwrap();
    let fit = fit_nodewise(&data, &NodewiseOptions::default()).unwrap();
    (0..d)
        .map(|node| {
            (0..d)
                .filter(|&v| v != node)
                .map(|v| (coef(&fit.betas, v, node) + omega[(v, node)] / omega[(node, node)]).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[test]
fn coefficient_error_shrinks_with_sample_size() {
    let base = build_base_precision(ModelId::Model1, 30, &mut substream(21, &[0])).unwrap();
    let sigma = precision_to_covariance(base.omega()).unwrap();
    let average = |n: usize| (0..10).map(|seed| worst_l1_error(base.omega(), &sigma, n, seed)).sum::<f64>() / 10.0;
    let (small, large) = (average(400), average(1600));
    println!("mean worst-node l1 error: n=400 {small:.4}, n=1600 {large:.4}");
    assert!(large < small);
}
