//! Deep Boltzmann machine with layers `v = a⁰, h¹, …, hᴸ` and weights
//! `W¹ … Wᴸ`, where `Wˡ` connects layer `l−1` (rows) to layer `l` (columns).
//!
//! The energy of a joint state is
//! `E = −Σₗ aˡ⁻¹ᵀ Wˡ aˡ − Σₗ bˡ·aˡ`, the bias term present only when the model
//! carries biases.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::rbm::{RbmModel, TrainConfig, INIT_WEIGHT_RANGE};
use crate::rng::GENERATOR_ID;

mod gibbs;
mod io;
mod mean_field;
mod train;

pub use gibbs::{gibbs_step, GibbsParticle};
pub use io::{load_model, save_model, FORMAT_VERSION};
pub use mean_field::{MeanFieldState, MEAN_FIELD_MAX_ITERS, MEAN_FIELD_TOLERANCE};
pub use train::{train_dbm, update_direction, UpdateDirection};

/// Training provenance stored alongside the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub generator_id: String,
    pub seed: u64,
    pub config: Option<ConfigSnapshot>,
}

impl Default for ModelMetadata {
    fn default() -> Self {
        Self { generator_id: GENERATOR_ID.to_string(), seed: 0, config: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub layer_dims: Vec<usize>,
    pub pretrain: Option<TrainConfig>,
    pub dbm: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbmModel {
    pub weights: Vec<Array2<f64>>,
    /// One bias vector per layer, visible first; `None` for the bias-free energy.
    pub biases: Option<Vec<Array1<f64>>>,
    pub metadata: ModelMetadata,
}

impl DbmModel {
    pub fn new(weights: Vec<Array2<f64>>, biases: Option<Vec<Array1<f64>>>) -> Result<Self> {
        let model = Self { weights, biases, metadata: ModelMetadata::default() };
        model.validate()?;
        Ok(model)
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_layer_sizes(layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|w| Array2::zeros((w[0], w[1])))
            .collect();
        Self::new(weights, None)
    }

    /// Bias-free model with weights uniform in ±[`INIT_WEIGHT_RANGE`].
    pub fn random<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(layer_sizes)?;
        for w in &mut model.weights {
            w.mapv_inplace(|_| rng.random_range(-INIT_WEIGHT_RANGE..=INIT_WEIGHT_RANGE));
        }
        Ok(model)
    }

    /// Adds zero biases to every layer if the model has none.
    pub fn with_biases(mut self) -> Self {
        if self.biases.is_none() {
            self.biases = Some(self.layer_sizes().into_iter().map(Array1::zeros).collect());
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::InvalidModel("model has no weight matrices".into()));
        }
        for (l, pair) in self.weights.windows(2).enumerate() {
            if pair[0].ncols() != pair[1].nrows() {
                return Err(Error::InvalidModel(format!(
                    "weight matrix {} has {} columns but matrix {} has {} rows",
                    l + 1,
                    pair[0].ncols(),
                    l + 2,
                    pair[1].nrows()
                )));
            }
        }
        check_layer_sizes(&self.layer_sizes())?;
        if let Some(biases) = &self.biases {
            let sizes = self.layer_sizes();
            if biases.len() != sizes.len() {
                return Err(Error::InvalidModel(format!(
                    "{} bias vectors for {} layers",
                    biases.len(),
                    sizes.len()
                )));
            }
            for (l, (b, &n)) in biases.iter().zip(&sizes).enumerate() {
                if b.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "bias of layer {l} has length {} but the layer has {n} units",
                        b.len()
                    )));
                }
            }
        }
        let mut params = self.weights.iter().flat_map(|w| w.iter());
        if params.any(|x| !x.is_finite())
            || self.biases.iter().flatten().flatten().any(|x| !x.is_finite())
        {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Unit counts per layer, visible first.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.weights[0].nrows()];
        sizes.extend(self.weights.iter().map(|w| w.ncols()));
        sizes
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len() + 1
    }

    pub fn n_visible(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn total_units(&self) -> usize {
        self.layer_sizes().iter().sum()
    }

    pub fn bias(&self, layer: usize) -> Option<&Array1<f64>> {
        self.biases.as_ref().map(|b| &b[layer])
    }

    fn check_states(&self, states: &[&[f64]]) -> Result<()> {
        let sizes = self.layer_sizes();
        Error::check_len("number of layers in state", sizes.len(), states.len())?;
        for (s, n) in states.iter().zip(sizes) {
            Error::check_len("layer state", n, s.len())?;
        }
        Ok(())
    }

    /// Energy of a joint state given as one slice per layer.
    pub fn energy(&self, states: &[&[f64]]) -> Result<f64> {
        self.check_states(states)?;
        let mut e = 0.0;
        for (l, w) in self.weights.iter().enumerate() {
            let below = ArrayView1::from(states[l]);
            let above = ArrayView1::from(states[l + 1]);
            e -= below.dot(&w.dot(&above));
        }
        if let Some(biases) = &self.biases {
            for (b, s) in biases.iter().zip(states) {
                e -= b.dot(&ArrayView1::from(*s));
            }
        }
        Ok(e)
    }

    /// Total input to the units of `layer` from its neighbours (plus bias).
    pub(crate) fn net_input(
        &self,
        layer: usize,
        below: Option<&[f64]>,
        above: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let sizes = self.layer_sizes();
        let n = *sizes.get(layer).ok_or(Error::DimensionMismatch {
            context: "layer index",
            expected: sizes.len() - 1,
            actual: layer,
        })?;
        let mut act = match self.bias(layer) {
            Some(b) => b.clone(),
            None => Array1::zeros(n),
        };
        if layer > 0 {
            let below = below.ok_or(Error::DimensionMismatch {
                context: "missing state of the layer below",
                expected: sizes[layer - 1],
                actual: 0,
            })?;
            Error::check_len("state of the layer below", sizes[layer - 1], below.len())?;
            act += &ArrayView1::from(below).dot(&self.weights[layer - 1]);
        }
        if layer + 1 < sizes.len() {
            let above = above.ok_or(Error::DimensionMismatch {
                context: "missing state of the layer above",
                expected: sizes[layer + 1],
                actual: 0,
            })?;
            Error::check_len("state of the layer above", sizes[layer + 1], above.len())?;
            act += &self.weights[layer].dot(&ArrayView1::from(above));
        }
        Ok(act.to_vec())
    }

    /// `p(aˡ = 1 | neighbours)` for any layer. `below` is ignored for the
    /// visible layer and `above` for the top layer.
    pub fn conditional(
        &self,
        layer: usize,
        below: Option<&[f64]>,
        above: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        Ok(self.net_input(layer, below, above)?.into_iter().map(sigmoid).collect())
    }

    fn require_two_hidden(&self) -> Result<()> {
        if self.weights.len() == 2 {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "operation defined for two hidden layers, model has {}",
                self.weights.len()
            )))
        }
    }

    /// `p(h¹ⱼ = 1 | v, h²) = σ(Σᵢ W¹ᵢⱼ vᵢ + Σₘ W²ⱼₘ h²ₘ)`.
    pub fn conditional_h1(&self, v: &[f64], h2: &[f64]) -> Result<Vec<f64>> {
        self.require_two_hidden()?;
        self.conditional(1, Some(v), Some(h2))
    }

    /// `p(h²ₘ = 1 | h¹) = σ(Σⱼ W²ⱼₘ h¹ⱼ)`.
    pub fn conditional_h2(&self, h1: &[f64]) -> Result<Vec<f64>> {
        self.require_two_hidden()?;
        self.conditional(2, Some(h1), None)
    }

    /// `p(vᵢ = 1 | h¹) = σ(Σⱼ W¹ᵢⱼ h¹ⱼ)`.
    pub fn conditional_v(&self, h1: &[f64]) -> Result<Vec<f64>> {
        self.conditional(0, None, Some(h1))
    }
}

fn check_layer_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidModel(format!(
            "need at least two layers, got sizes {sizes:?}"
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidModel(format!("empty layer in sizes {sizes:?}")));
    }
    Ok(())
}

/// Assembles pretrained blocks into a DBM. Weights are copied as they are and
/// the boundary scales are dropped.
///
/// Biases, when the blocks carry non-zero ones, are merged per layer: the
/// visible layer takes the bottom block's visible bias, the top layer the top
/// block's hidden bias, and every intermediate layer the mean of the hidden
/// bias below and the visible bias above.
pub fn stack_to_dbm(rbms: &[RbmModel]) -> Result<DbmModel> {
    if rbms.is_empty() {
        return Err(Error::InvalidModel("no RBMs to stack".into()));
    }
    for (l, pair) in rbms.windows(2).enumerate() {
        if pair[0].n_hidden() != pair[1].n_visible() {
            return Err(Error::InvalidModel(format!(
                "RBM {} has {} hidden units but RBM {} has {} visible units",
                l + 1,
                pair[0].n_hidden(),
                l + 2,
                pair[1].n_visible()
            )));
        }
    }
    for rbm in rbms {
        rbm.validate()?;
    }
    let weights = rbms.iter().map(|r| r.weights.clone()).collect();
    let has_biases = rbms
        .iter()
        .any(|r| r.visible_bias.iter().chain(&r.hidden_bias).any(|&b| b != 0.0));
    let biases = has_biases.then(|| {
        let mut biases = vec![rbms[0].visible_bias.clone()];
        for pair in rbms.windows(2) {
            biases.push((&pair[0].hidden_bias + &pair[1].visible_bias) * 0.5);
        }
        biases.push(rbms[rbms.len() - 1].hidden_bias.clone());
        biases
    });
    DbmModel::new(weights, biases)
}
