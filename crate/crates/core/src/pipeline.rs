//! End-to-end fit: greedy pretraining, stacking, joint DBM training.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dbm::{stack_to_dbm, train_dbm, ConfigSnapshot, DbmModel};
use crate::error::{Error, Result};
use crate::oracle::{self, MAX_TOTAL_UNITS, MAX_VISIBLE_UNITS};
use crate::rbm::{initial_stack, pretrain_stack, TrainConfig};

/// Full hyperparameter set of a training run. The defaults are a 7-7-1
/// network, pretraining at learning rate 0.007 and joint training at 0.008,
/// 40 epochs each, and 10,000 generated samples per condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub layer_dims: Vec<usize>,
    pub pretrain_learning_rate: f64,
    pub dbm_learning_rate: f64,
    pub pretrain_epochs: usize,
    pub dbm_epochs: usize,
    pub batch_size: usize,
    pub gibbs_steps: usize,
    pub seed: u64,
    pub use_biases: bool,
    pub sample_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            layer_dims: vec![7, 7, 1],
            pretrain_learning_rate: 0.007,
            dbm_learning_rate: 0.008,
            pretrain_epochs: 40,
            dbm_epochs: 40,
            batch_size: 1,
            gibbs_steps: 1,
            seed: 0,
            use_biases: false,
            sample_count: 10_000,
        }
    }
}

impl RunConfig {
    pub fn pretrain_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.pretrain_learning_rate,
            epochs: self.pretrain_epochs,
            batch_size: self.batch_size,
            gibbs_steps: self.gibbs_steps,
            seed: self.seed,
            use_biases: self.use_biases,
        }
    }

    pub fn dbm_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.dbm_learning_rate,
            epochs: self.dbm_epochs,
            ..self.pretrain_config()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layer_dims.contains(&0) {
            return Err(Error::Config(format!(
                "layer dims must list at least two positive sizes, got {:?}",
                self.layer_dims
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        self.pretrain_config().validate()?;
        self.dbm_config().validate()
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: DbmModel,
    /// Exact mean log-likelihood of the untrained initialization, the
    /// pretrained stack, and the final model; `None` beyond the oracle guard.
    pub loglik_initial: Option<f64>,
    pub loglik_pretrained: Option<f64>,
    pub loglik_final: Option<f64>,
}

pub fn within_oracle_guard(layer_dims: &[usize]) -> bool {
    layer_dims.iter().sum::<usize>() <= MAX_TOTAL_UNITS
        && layer_dims.first().is_some_and(|&v| v <= MAX_VISIBLE_UNITS)
}

/// Pretrains the stack, assembles the DBM and trains it jointly.
pub fn fit(data: &Array2<f64>, config: &RunConfig) -> Result<FitReport> {
    config.validate()?;
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    Error::check_len("data columns", config.layer_dims[0], data.ncols())?;

    let exact = within_oracle_guard(&config.layer_dims);
    let loglik = |m: &DbmModel| -> Result<Option<f64>> {
        if exact {
            oracle::exact_loglik(m, data).map(Some)
        } else {
            Ok(None)
        }
    };

    let initial = stack_to_dbm(&initial_stack(&config.layer_dims, config.seed)?)?;
    let pretrain = config.pretrain_config();
    let mut pretrained = stack_to_dbm(&pretrain_stack(&config.layer_dims, data, &pretrain)?)?;
    pretrained.metadata.config = Some(ConfigSnapshot {
        layer_dims: config.layer_dims.clone(),
        pretrain: Some(pretrain),
        dbm: None,
    });
    let model = train_dbm(&pretrained, data, &config.dbm_config())?;

    Ok(FitReport {
        loglik_initial: loglik(&initial)?,
        loglik_pretrained: loglik(&pretrained)?,
        loglik_final: loglik(&model)?,
        model,
    })
}
