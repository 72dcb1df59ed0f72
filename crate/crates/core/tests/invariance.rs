mod common;

use common::{null_pair, rel_close};
use nalgebra::DMatrix;
use precdiff::bootstrap::Grid;
use precdiff::model::{build_alternative_pair, build_base_precision, precision_to_covariance, sample_gaussian, ModelId};
use precdiff::norm::NormFamily;
use precdiff::par::with_threads;
use precdiff::pipeline::group_statistics;
use precdiff::rng::substream;
use precdiff::{run_test, DataMatrix, Group, NodewiseOptions, NormOrder, TestConfig};

const TOL: f64 = 1e-10;

fn grid_norms(w: &[f64]) -> Vec<f64> {
    let p = [NormOrder::Finite(1.0), NormOrder::Finite(2.0), NormOrder::Finite(4.0), NormOrder::Infinity];
    let grid = Grid::new(&p, &[1, 5, 40, 400], w.len()).unwrap();
    NormFamily::new(grid.entries().iter().map(|e| (e.s0, e.p)).collect()).unwrap().evaluate(w)
}

fn alternative_pair(d: usize, n: usize, seed: u64) -> (DataMatrix, DataMatrix) {
    let base = build_base_precision(ModelId::Model1, d, &mut substream(seed, &[0])).unwrap();
    let alt = build_alternative_pair(&base, 30, 0.6, &mut substream(seed, &[1])).unwrap();
    let s1 = precision_to_covariance(&alt.omega1).unwrap();
    let s2 = precision_to_covariance(&alt.omega2).unwrap();
    let x = sample_gaussian(n, &s1, &mut substream(seed, &[2]), Group::First).unwrap();
    let y = sample_gaussian(n, &s2, &mut substream(seed, &[3]), Group::Second).unwrap();
    (x, y)
}

fn assert_all_close(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!(rel_close(*x, *y, TOL), "{x} vs {y}");
    }
}

#[test]
fn swapping_groups_negates_w_and_keeps_every_norm() {
    let (x, y) = alternative_pair(20, 90, 1);
    let opts = NodewiseOptions::default();
    let (_, _, w) = group_statistics(&x, &y, &opts).unwrap();
    let (_, _, w_swapped) =
        group_statistics(&y.clone().relabel(Group::First), &x.clone().relabel(Group::Second), &opts).unwrap();
    for (a, b) in w.trivec().iter().zip(w_swapped.trivec()) {
        assert!(rel_close(*a, -*b, TOL));
    }
    assert_all_close(&grid_norms(w.trivec()), &grid_norms(w_swapped.trivec()));
}

fn permute_columns(data: &DataMatrix, perm: &[usize]) -> DataMatrix {
    let v = data.values();
    DataMatrix::new(DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, perm[j])]), data.group()).unwrap()
}

#[test]
fn permuting_variables_permutes_w() {
    let (x, y) = alternative_pair(18, 80, 2);
    let perm: Vec<usize> = (0..18).map(|j| (j * 7 + 3) % 18).collect();
    let opts = NodewiseOptions::default();
    let (_, _, w) = group_statistics(&x, &y, &opts).unwrap();
    let (_, _, wp) = group_statistics(&permute_columns(&x, &perm), &permute_columns(&y, &perm), &opts).unwrap();
    for a in 0..18 {
        for b in 0..18 {
            let (u, v) = (wp.matrix()[(a, b)], w.matrix()[(perm[a], perm[b])]);
            assert!(rel_close(u, v, TOL), "({a},{b}): {u} vs {v}");
        }
    }
    assert_all_close(&grid_norms(w.trivec()), &grid_norms(wp.trivec()));
}

#[test]
fn global_rescaling_is_invisible_when_standardizing() {
    let (x, y) = alternative_pair(16, 70, 3);
    let scale = |d: &DataMatrix, c: f64| DataMatrix::new(d.values() * c, d.group()).unwrap();
    let opts = NodewiseOptions::default();
    let (_, _, w) = group_statistics(&x, &y, &opts).unwrap();
    for c in [1e-3, 3.7, 250.0] {
        let (_, _, wc) = group_statistics(&scale(&x, c), &scale(&y, c), &opts).unwrap();
        assert_all_close(w.trivec(), wc.trivec());
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let (x, y) = null_pair(24, 100, 4, 5);
    let config = TestConfig {
        p_norms: vec![NormOrder::Finite(1.0), NormOrder::Finite(3.0), NormOrder::Infinity],
        s0_values: vec![5, 50],
        replicates: 150,
        ..TestConfig::default()
    };
    let one = with_threads(Some(1), || run_test(&x, &y, &config)).unwrap().unwrap();
    let four = with_threads(Some(4), || run_test(&x, &y, &config)).unwrap().unwrap();
    let default = run_test(&x, &y, &config).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, default);
    assert_eq!(one.to_json().unwrap(), four.to_json().unwrap());
}

#[test]
fn max_entry_squared_is_m_n() {
    let (x, y) = alternative_pair(15, 60, 6);
    let config = TestConfig {
        p_norms: vec![NormOrder::Finite(2.0), NormOrder::Infinity],
        s0_values: vec![1, 10],
        replicates: 40,
        ..TestConfig::default()
    };
    let report = run_test(&x, &y, &config).unwrap();
    let entry = report.entry(1, NormOrder::Infinity).unwrap();
    assert!(rel_close(entry.statistic * entry.statistic, report.m_n, 1e-12));
    assert_eq!(entry.statistic, report.max_test.statistic);
}
