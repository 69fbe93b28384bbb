//! Fixtures shared by the benchmarks.

use weekdbm::rng;
use weekdbm::synthetic::two_group_weeks;
use weekdbm::DbmModel;

/// A 7-7-1 model with weights of order one, so mean-field needs several sweeps.
pub fn coupled_model(seed: u64) -> DbmModel {
    use rand::Rng;
    let mut r = rng::stream(seed, 0);
    let mut m = DbmModel::zeros(&[7, 7, 1]).expect("valid sizes");
    for w in &mut m.weights {
        w.mapv_inplace(|_| r.random_range(-1.5..1.5));
    }
    m
}

pub fn week_data(n: usize) -> ndarray::Array2<f64> {
    two_group_weeks(n, 1).to_array()
}
