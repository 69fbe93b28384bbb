//! Binary-binary restricted Boltzmann machines and greedy stack pretraining.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{bernoulli, sigmoid};
use crate::rng::{self, streams, ModelRng};

/// Half-width of the uniform interval used for fresh weights.
pub const INIT_WEIGHT_RANGE: f64 = 0.01;

/// Multiplier on one direction of an RBM's input during pretraining.
///
/// The bottom block of a stack doubles its bottom-up input, the top block
/// doubles its top-down input, and intermediate blocks double both. Once the
/// blocks are assembled into a DBM every scale is back to `Single`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scale {
    #[default]
    Single,
    Double,
}

impl Scale {
    pub fn factor(self) -> f64 {
        match self {
            Scale::Single => 1.0,
            Scale::Double => 2.0,
        }
    }
}

/// Hyperparameters shared by RBM and DBM training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub gibbs_steps: usize,
    pub seed: u64,
    pub use_biases: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::pretraining()
    }
}

impl TrainConfig {
    /// Settings for the greedy pretraining phase: learning rate 0.007, 40 epochs.
    pub fn pretraining() -> Self {
        Self {
            learning_rate: 0.007,
            epochs: 40,
            batch_size: 1,
            gibbs_steps: 1,
            seed: 0,
            use_biases: false,
        }
    }

    /// Settings for joint DBM training: learning rate 0.008, 40 epochs.
    pub fn fine_tuning() -> Self {
        Self { learning_rate: 0.008, ..Self::pretraining() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        for (name, value) in [
            ("epochs", self.epochs),
            ("batch size", self.batch_size),
            ("gibbs steps", self.gibbs_steps),
        ] {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// One two-layer block: `weights` is `n_visible × n_hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmModel {
    pub weights: Array2<f64>,
    pub visible_bias: Array1<f64>,
    pub hidden_bias: Array1<f64>,
    pub input_scale: Scale,
    pub output_scale: Scale,
}

impl RbmModel {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            weights: Array2::zeros((n_visible, n_hidden)),
            visible_bias: Array1::zeros(n_visible),
            hidden_bias: Array1::zeros(n_hidden),
            input_scale: Scale::Single,
            output_scale: Scale::Single,
        }
    }

    /// Weights uniform in ±[`INIT_WEIGHT_RANGE`], zero biases.
    pub fn random<R: Rng + ?Sized>(n_visible: usize, n_hidden: usize, rng: &mut R) -> Self {
        let mut model = Self::zeros(n_visible, n_hidden);
        model
            .weights
            .mapv_inplace(|_| rng.random_range(-INIT_WEIGHT_RANGE..=INIT_WEIGHT_RANGE));
        model
    }

    pub fn with_scales(mut self, input: Scale, output: Scale) -> Self {
        self.input_scale = input;
        self.output_scale = output;
        self
    }

    pub fn n_visible(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        Error::check_len("visible bias", self.n_visible(), self.visible_bias.len())?;
        Error::check_len("hidden bias", self.n_hidden(), self.hidden_bias.len())?;
        let finite = self.weights.iter().chain(&self.visible_bias).chain(&self.hidden_bias);
        if finite.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("non-finite RBM parameter".into()));
        }
        Ok(())
    }

    /// `p(h_j = 1 | v) = σ(input_scale · Σ_i W_ij v_i + b_j)`.
    pub fn hidden_potential(&self, v: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("hidden_potential input", self.n_visible(), v.len())?;
        let scale = self.input_scale.factor();
        let act = ArrayView1::from(v).dot(&self.weights);
        Ok(act
            .iter()
            .zip(&self.hidden_bias)
            .map(|(a, b)| sigmoid(scale * a + b))
            .collect())
    }

    /// `p(v_i = 1 | h) = σ(output_scale · Σ_j W_ij h_j + a_i)`.
    pub fn visible_potential(&self, h: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("visible_potential input", self.n_hidden(), h.len())?;
        let scale = self.output_scale.factor();
        let act = self.weights.dot(&ArrayView1::from(h));
        Ok(act
            .iter()
            .zip(&self.visible_bias)
            .map(|(a, b)| sigmoid(scale * a + b))
            .collect())
    }
}

/// `lr · (data − model)`: the stochastic-gradient step for a correlation matrix.
pub fn correlation_update(lr: f64, data: &Array2<f64>, model: &Array2<f64>) -> Array2<f64> {
    (data - model) * lr
}

pub(crate) fn add_outer(acc: &mut Array2<f64>, a: &[f64], b: &[f64], weight: f64) {
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            acc[[i, j]] += weight * ai * bj;
        }
    }
}

/// Trains one RBM with persistent contrastive divergence.
///
/// Rows of `data` may be real-valued in [0, 1] (upper blocks of a stack are
/// fed hidden potentials). One persistent chain per minibatch slot is seeded
/// from the first minibatch of the first epoch.
pub fn train_rbm(data: &Array2<f64>, config: &TrainConfig, init: &RbmModel) -> Result<RbmModel> {
    let mut rng = rng::stream(config.seed, streams::PRETRAIN);
    train_rbm_with_rng(data, config, init, &mut rng)
}

pub(crate) fn train_rbm_with_rng(
    data: &Array2<f64>,
    config: &TrainConfig,
    init: &RbmModel,
    rng: &mut ModelRng,
) -> Result<RbmModel> {
    config.validate()?;
    init.validate()?;
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    Error::check_len("training data columns", init.n_visible(), data.ncols())?;

    let mut model = init.clone();
    let n_rows = data.nrows();
    let (nv, nh) = (model.n_visible(), model.n_hidden());
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut chains: Vec<Vec<f64>> = Vec::new();

    for _ in 0..config.epochs {
        order.shuffle(rng);
        for batch in order.chunks(config.batch_size) {
            if chains.is_empty() {
                chains = batch
                    .iter()
                    .map(|&r| data.row(r).iter().map(|&p| bernoulli(p, rng)).collect())
                    .collect();
            }

            let mut pos = Array2::zeros((nv, nh));
            let mut pos_v = Array1::<f64>::zeros(nv);
            let mut pos_h = Array1::<f64>::zeros(nh);
            let w = 1.0 / batch.len() as f64;
            for &r in batch {
                let v = data.row(r).to_vec();
                let ph = model.hidden_potential(&v)?;
                add_outer(&mut pos, &v, &ph, w);
                pos_v.scaled_add(w, &ArrayView1::from(&v[..]));
                pos_h.scaled_add(w, &ArrayView1::from(&ph[..]));
            }

            let mut neg = Array2::zeros((nv, nh));
            let mut neg_v = Array1::<f64>::zeros(nv);
            let mut neg_h = Array1::<f64>::zeros(nh);
            let w = 1.0 / chains.len() as f64;
            for chain in chains.iter_mut() {
                for _ in 0..config.gibbs_steps {
                    let h: Vec<f64> = model
                        .hidden_potential(chain)?
                        .into_iter()
                        .map(|p| bernoulli(p, rng))
                        .collect();
                    *chain = model
                        .visible_potential(&h)?
                        .into_iter()
                        .map(|p| bernoulli(p, rng))
                        .collect();
                }
                let ph = model.hidden_potential(chain)?;
                add_outer(&mut neg, chain, &ph, w);
                neg_v.scaled_add(w, &ArrayView1::from(&chain[..]));
                neg_h.scaled_add(w, &ArrayView1::from(&ph[..]));
            }

            model.weights += &correlation_update(config.learning_rate, &pos, &neg);
            if config.use_biases {
                model.visible_bias.scaled_add(config.learning_rate, &(pos_v - neg_v));
                model.hidden_bias.scaled_add(config.learning_rate, &(pos_h - neg_h));
            }
        }
    }
    Ok(model)
}

fn initial_block(layer_dims: &[usize], l: usize, seed: u64) -> (RbmModel, ModelRng) {
    let mut rng = rng::stream(seed, streams::PRETRAIN + l as u64);
    let block = RbmModel::random(layer_dims[l], layer_dims[l + 1], &mut rng);
    (block, rng)
}

/// The untrained blocks [`pretrain_stack`] starts from for this seed.
pub fn initial_stack(layer_dims: &[usize], seed: u64) -> Result<Vec<RbmModel>> {
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(Error::Config(format!("invalid layer dims {layer_dims:?}")));
    }
    Ok((0..layer_dims.len() - 1)
        .map(|l| initial_block(layer_dims, l, seed).0)
        .collect())
}

/// Greedy layerwise pretraining of the blocks of a DBM with layer sizes
/// `layer_dims = (n_visible, n_h1, ..., n_hL)`.
///
/// Boundary scaling: the bottom block doubles its bottom-up input, the top
/// block doubles its top-down input, intermediate blocks double both. A single
/// block (two dims) is a plain RBM. Each block above the first is trained on
/// the hidden potentials of the block below evaluated on the data.
pub fn pretrain_stack(
    layer_dims: &[usize],
    data: &Array2<f64>,
    config: &TrainConfig,
) -> Result<Vec<RbmModel>> {
    if layer_dims.len() < 2 {
        return Err(Error::Config(format!(
            "need at least a visible and one hidden layer, got dims {layer_dims:?}"
        )));
    }
    if let Some(pos) = layer_dims.iter().position(|&d| d == 0) {
        return Err(Error::Config(format!("layer {pos} has zero units")));
    }
    config.validate()?;
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    Error::check_len("training data columns", layer_dims[0], data.ncols())?;

    let n_blocks = layer_dims.len() - 1;
    let mut blocks = Vec::with_capacity(n_blocks);
    let mut input = data.clone();
    for l in 0..n_blocks {
        let (input_scale, output_scale) = match (l == 0, l + 1 == n_blocks) {
            (true, true) => (Scale::Single, Scale::Single),
            (true, false) => (Scale::Double, Scale::Single),
            (false, true) => (Scale::Single, Scale::Double),
            (false, false) => (Scale::Double, Scale::Double),
        };
        let (init, mut rng) = initial_block(layer_dims, l, config.seed);
        let init = init.with_scales(input_scale, output_scale);
        let trained = train_rbm_with_rng(&input, config, &init, &mut rng)?;
        if l + 1 < n_blocks {
            let mut next = Array2::zeros((input.nrows(), trained.n_hidden()));
            for (r, row) in input.axis_iter(Axis(0)).enumerate() {
                let p = trained.hidden_potential(&row.to_vec())?;
                next.row_mut(r).assign(&ArrayView1::from(&p[..]));
            }
            input = next;
        }
        blocks.push(trained);
    }
    Ok(blocks)
}
