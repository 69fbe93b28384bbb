use ndarray::ArrayView1;

use super::DbmModel;
use crate::error::{Error, Result};
use crate::math::{binary_entropy, sigmoid};

pub const MEAN_FIELD_TOLERANCE: f64 = 1e-6;
pub const MEAN_FIELD_MAX_ITERS: usize = 50;

/// Fully factorized approximation of the hidden posterior: `mu[l]` holds the
/// activation probabilities of hidden layer `l + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub mu: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

impl DbmModel {
    /// Runs the mean-field fixed-point iteration for a visible vector.
    ///
    /// Starts from a bottom-up pass and then sweeps the hidden layers in
    /// order, `μˡ ← σ(Wˡᵀ μˡ⁻¹ + Wˡ⁺¹ μˡ⁺¹)` (top layer without the second
    /// term), until no entry moves by `tolerance` or more within a sweep.
    pub fn mean_field_infer(
        &self,
        v: &[f64],
        tolerance: f64,
        max_iters: usize,
    ) -> Result<MeanFieldState> {
        Error::check_len("visible vector", self.n_visible(), v.len())?;
        if !(tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {tolerance}")));
        }
        if max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        let n_hidden = self.weights.len();

        let mut mu: Vec<Vec<f64>> = Vec::with_capacity(n_hidden);
        for l in 1..=n_hidden {
            let below = if l == 1 { v } else { mu[l - 2].as_slice() };
            let mut act = ArrayView1::from(below).dot(&self.weights[l - 1]);
            if let Some(b) = self.bias(l) {
                act += b;
            }
            mu.push(act.iter().map(|&x| sigmoid(x)).collect());
        }

        let mut converged = false;
        let mut iterations = 0;
        while iterations < max_iters {
            iterations += 1;
            let mut change: f64 = 0.0;
            for l in 1..=n_hidden {
                let next = {
                    let below = if l == 1 { v } else { mu[l - 2].as_slice() };
                    let above = mu.get(l).map(|a| a.as_slice());
                    self.conditional(l, Some(below), above)?
                };
                for (old, new) in mu[l - 1].iter_mut().zip(next) {
                    change = change.max((new - *old).abs());
                    *old = new;
                }
            }
            if change < tolerance {
                converged = true;
                break;
            }
        }
        Ok(MeanFieldState { mu, converged, iterations })
    }

    /// Largest change one more sweep of the update equations would make,
    /// each equation evaluated at the given state.
    pub fn mean_field_residual(&self, v: &[f64], state: &MeanFieldState) -> Result<f64> {
        self.check_mean_field(v, state)?;
        let mut worst: f64 = 0.0;
        for l in 1..self.n_layers() {
            let below = if l == 1 { v } else { state.mu[l - 2].as_slice() };
            let above = state.mu.get(l).map(|a| a.as_slice());
            let p = self.conditional(l, Some(below), above)?;
            for (a, b) in p.iter().zip(&state.mu[l - 1]) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    /// Variational lower bound on `log p(v)`:
    /// `E_q[−E(v, h)] + H(q) − log Z`, with `log_partition = log Z`.
    pub fn mean_field_lower_bound(
        &self,
        v: &[f64],
        state: &MeanFieldState,
        log_partition: f64,
    ) -> Result<f64> {
        self.check_mean_field(v, state)?;
        let layer = |l: usize| if l == 0 { v } else { state.mu[l - 1].as_slice() };
        let mut bound = 0.0;
        for (l, w) in self.weights.iter().enumerate() {
            bound += ArrayView1::from(layer(l)).dot(&w.dot(&ArrayView1::from(layer(l + 1))));
        }
        if let Some(biases) = &self.biases {
            for (l, b) in biases.iter().enumerate() {
                bound += b.dot(&ArrayView1::from(layer(l)));
            }
        }
        bound += state.mu.iter().flatten().map(|&m| binary_entropy(m)).sum::<f64>();
        Ok(bound - log_partition)
    }

    fn check_mean_field(&self, v: &[f64], state: &MeanFieldState) -> Result<()> {
        let sizes = self.layer_sizes();
        Error::check_len("visible vector", sizes[0], v.len())?;
        Error::check_len("mean-field layers", sizes.len() - 1, state.mu.len())?;
        for (mu, &n) in state.mu.iter().zip(&sizes[1..]) {
            Error::check_len("mean-field layer", n, mu.len())?;
        }
        Ok(())
    }
}
