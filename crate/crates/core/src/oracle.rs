//! Exact computations by brute-force enumeration of every joint state.
//!
//! Everything here is written as plain index loops over the weight entries and
//! shares no arithmetic with the vectorised model code, so it can serve as an
//! independent reference for the stochastic training and inference paths.
//!
//! Configurations are encoded as integers: bit `k` of the visible index is the
//! state of visible unit `k`.

use ndarray::{Array1, Array2};

use crate::data::WeekMatrix;
use crate::dbm::DbmModel;
use crate::error::{Error, Result};

pub const MAX_TOTAL_UNITS: usize = 24;
pub const MAX_VISIBLE_UNITS: usize = 20;

/// Exact likelihood quantities for a model and dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    pub log_partition: f64,
    pub per_row_loglik: Vec<f64>,
    /// Probability of each visible configuration, indexed as described in the
    /// module docs.
    pub visible_marginal: Vec<f64>,
}

/// Exact gradient of the mean log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactGradient {
    pub weights: Vec<Array2<f64>>,
    /// Per-layer bias gradients; present only when the model has biases.
    pub biases: Option<Vec<Array1<f64>>>,
}

fn guard(model: &DbmModel, need_visible: bool) -> Result<()> {
    let units = model.total_units();
    let visible = model.n_visible();
    if units > MAX_TOTAL_UNITS || (need_visible && visible > MAX_VISIBLE_UNITS) {
        return Err(Error::TooLarge {
            units,
            visible,
            max_units: MAX_TOTAL_UNITS,
            max_visible: MAX_VISIBLE_UNITS,
        });
    }
    Ok(())
}

fn decode(mut index: usize, n: usize, out: &mut [f64]) {
    for x in out.iter_mut().take(n) {
        *x = (index & 1) as f64;
        index >>= 1;
    }
}

pub fn visible_index(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |acc, (k, &x)| if x != 0.0 { acc | (1 << k) } else { acc })
}

/// Negative energy by explicit loops.
fn neg_energy(model: &DbmModel, layers: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (l, w) in model.weights.iter().enumerate() {
        let (rows, cols) = w.dim();
        for i in 0..rows {
            if layers[l][i] == 0.0 {
                continue;
            }
            for j in 0..cols {
                total += layers[l][i] * w[[i, j]] * layers[l + 1][j];
            }
        }
    }
    if let Some(biases) = &model.biases {
        for (l, b) in biases.iter().enumerate() {
            for i in 0..b.len() {
                total += b[i] * layers[l][i];
            }
        }
    }
    total
}

/// Fixed-order log-sum-exp accumulator.
struct LogSum {
    terms: Vec<f64>,
}

impl LogSum {
    fn new() -> Self {
        Self { terms: Vec::new() }
    }

    fn push(&mut self, x: f64) {
        self.terms.push(x);
    }

    fn value(&self) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for &t in &self.terms {
            if t > max {
                max = t;
            }
        }
        let mut sum = 0.0;
        for &t in &self.terms {
            sum += (t - max).exp();
        }
        max + sum.ln()
    }
}

fn empty_layers(model: &DbmModel) -> Vec<Vec<f64>> {
    model.layer_sizes().iter().map(|&n| vec![0.0; n]).collect()
}

/// Writes the hidden configuration `index` into layers 1.. of `layers`.
fn decode_hidden(model: &DbmModel, mut index: usize, layers: &mut [Vec<f64>]) {
    let sizes = model.layer_sizes();
    for l in 1..sizes.len() {
        decode(index, sizes[l], &mut layers[l]);
        index >>= sizes[l];
    }
}

fn n_hidden_units(model: &DbmModel) -> usize {
    model.total_units() - model.n_visible()
}

/// `log Σ_h exp(−E(v, h))` for a fixed visible vector.
fn log_unnormalized(model: &DbmModel, v: &[f64]) -> f64 {
    let mut layers = empty_layers(model);
    layers[0].copy_from_slice(v);
    let mut acc = LogSum::new();
    for h in 0..(1usize << n_hidden_units(model)) {
        decode_hidden(model, h, &mut layers);
        acc.push(neg_energy(model, &layers));
    }
    acc.value()
}

/// `log Z`, summing `exp(−E)` over every joint state.
pub fn partition_function(model: &DbmModel) -> Result<f64> {
    guard(model, false)?;
    model.validate()?;
    let nv = model.n_visible();
    let mut layers = empty_layers(model);
    let mut acc = LogSum::new();
    for v in 0..(1usize << nv) {
        decode(v, nv, &mut layers[0]);
        for h in 0..(1usize << n_hidden_units(model)) {
            decode_hidden(model, h, &mut layers);
            acc.push(neg_energy(model, &layers));
        }
    }
    Ok(acc.value())
}

/// Probability of every visible configuration.
pub fn exact_visible_marginal(model: &DbmModel) -> Result<Vec<f64>> {
    guard(model, true)?;
    model.validate()?;
    let nv = model.n_visible();
    let mut v = vec![0.0; nv];
    let logs: Vec<f64> = (0..(1usize << nv))
        .map(|idx| {
            decode(idx, nv, &mut v);
            log_unnormalized(model, &v)
        })
        .collect();
    let mut acc = LogSum::new();
    for &x in &logs {
        acc.push(x);
    }
    let log_z = acc.value();
    Ok(logs.iter().map(|&x| (x - log_z).exp()).collect())
}

fn check_data(model: &DbmModel, data: &Array2<f64>) -> Result<()> {
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    Error::check_len("data columns", model.n_visible(), data.ncols())?;
    if data.iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(Error::data("exact likelihood needs binary data"));
    }
    Ok(())
}

/// Per-row `log p(v)` by summing out the hidden layers of each row.
pub fn per_row_loglik(model: &DbmModel, data: &Array2<f64>) -> Result<Vec<f64>> {
    check_data(model, data)?;
    let log_z = partition_function(model)?;
    Ok(data
        .outer_iter()
        .map(|row| log_unnormalized(model, &row.to_vec()) - log_z)
        .collect())
}

/// Mean log-likelihood of the rows of `data`.
pub fn exact_loglik(model: &DbmModel, data: &Array2<f64>) -> Result<f64> {
    let rows = per_row_loglik(model, data)?;
    Ok(rows.iter().sum::<f64>() / rows.len() as f64)
}

pub fn exact_loglik_weeks(model: &DbmModel, data: &WeekMatrix) -> Result<f64> {
    exact_loglik(model, &data.to_array())
}

pub fn exact_summary(model: &DbmModel, data: &Array2<f64>) -> Result<ExactSummary> {
    Ok(ExactSummary {
        log_partition: partition_function(model)?,
        per_row_loglik: per_row_loglik(model, data)?,
        visible_marginal: exact_visible_marginal(model)?,
    })
}

fn accumulate_pairs(
    model: &DbmModel,
    layers: &[Vec<f64>],
    weight: f64,
    out: &mut [Array2<f64>],
    bias_out: &mut [Array1<f64>],
) {
    for (l, g) in out.iter_mut().enumerate() {
        let (rows, cols) = g.dim();
        for i in 0..rows {
            for j in 0..cols {
                g[[i, j]] += weight * layers[l][i] * layers[l + 1][j];
            }
        }
    }
    if model.biases.is_some() {
        for (l, g) in bias_out.iter_mut().enumerate() {
            for i in 0..g.len() {
                g[i] += weight * layers[l][i];
            }
        }
    }
}

/// Gradient of [`exact_loglik`] with respect to every weight (and bias, when
/// present): exact posterior correlations minus exact model correlations.
pub fn exact_gradient(model: &DbmModel, data: &Array2<f64>) -> Result<ExactGradient> {
    guard(model, false)?;
    check_data(model, data)?;
    let log_z = partition_function(model)?;
    let sizes = model.layer_sizes();
    let mut grad: Vec<Array2<f64>> = model.weights.iter().map(|w| Array2::zeros(w.dim())).collect();
    let mut bias_grad: Vec<Array1<f64>> = sizes.iter().map(|&n| Array1::zeros(n)).collect();
    let n_hidden_states = 1usize << n_hidden_units(model);
    let mut layers = empty_layers(model);

    let row_weight = 1.0 / data.nrows() as f64;
    for row in data.outer_iter() {
        let v = row.to_vec();
        let log_pv = log_unnormalized(model, &v);
        layers[0].copy_from_slice(&v);
        for h in 0..n_hidden_states {
            decode_hidden(model, h, &mut layers);
            let post = (neg_energy(model, &layers) - log_pv).exp();
            accumulate_pairs(model, &layers, row_weight * post, &mut grad, &mut bias_grad);
        }
    }

    let nv = sizes[0];
    for v in 0..(1usize << nv) {
        decode(v, nv, &mut layers[0]);
        for h in 0..n_hidden_states {
            decode_hidden(model, h, &mut layers);
            let p = (neg_energy(model, &layers) - log_z).exp();
            accumulate_pairs(model, &layers, -p, &mut grad, &mut bias_grad);
        }
    }

    Ok(ExactGradient {
        weights: grad,
        biases: model.biases.is_some().then_some(bias_grad),
    })
}
