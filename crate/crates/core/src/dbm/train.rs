use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{gibbs_step, ConfigSnapshot, DbmModel, GibbsParticle, MEAN_FIELD_MAX_ITERS, MEAN_FIELD_TOLERANCE};
use crate::error::{Error, Result};
use crate::rbm::{add_outer, TrainConfig};
use crate::rng::{self, streams, GENERATOR_ID};

/// Stochastic estimate of the log-likelihood gradient: data-dependent minus
/// data-independent correlations for every weight matrix and bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDirection {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Computes the update direction for one minibatch and advances the
/// persistent particles by `gibbs_steps` sweeps each.
///
/// The data term uses mean-field posteriors of each row, the model term the
/// binary particle states after the sweeps.
pub fn update_direction<R: Rng + ?Sized>(
    model: &DbmModel,
    batch: &[ArrayView1<'_, f64>],
    particles: &mut [GibbsParticle],
    gibbs_steps: usize,
    rng: &mut R,
) -> Result<UpdateDirection> {
    if batch.is_empty() || particles.is_empty() {
        return Err(Error::EmptyData);
    }
    let sizes = model.layer_sizes();
    let mut dir = UpdateDirection {
        weights: model.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
        biases: sizes.iter().map(|&n| Array1::zeros(n)).collect(),
    };

    let w = 1.0 / batch.len() as f64;
    for row in batch {
        let v = row.to_vec();
        let mf = model.mean_field_infer(&v, MEAN_FIELD_TOLERANCE, MEAN_FIELD_MAX_ITERS)?;
        let layer = |l: usize| if l == 0 { v.as_slice() } else { mf.mu[l - 1].as_slice() };
        for (l, acc) in dir.weights.iter_mut().enumerate() {
            add_outer(acc, layer(l), layer(l + 1), w);
        }
        for (l, acc) in dir.biases.iter_mut().enumerate() {
            acc.scaled_add(w, &ArrayView1::from(layer(l)));
        }
    }

    let w = 1.0 / particles.len() as f64;
    for particle in particles.iter_mut() {
        for _ in 0..gibbs_steps {
            *particle = gibbs_step(model, particle, rng)?;
        }
        for (l, acc) in dir.weights.iter_mut().enumerate() {
            add_outer(acc, &particle.state[l], &particle.state[l + 1], -w);
        }
        for (l, acc) in dir.biases.iter_mut().enumerate() {
            acc.scaled_add(-w, &ArrayView1::from(&particle.state[l][..]));
        }
    }
    Ok(dir)
}

/// Joint training of all layers by stochastic gradient ascent.
///
/// Rows are shuffled every epoch and split into minibatches of
/// `config.batch_size`. `config.batch_size` persistent particles are started
/// from the first minibatch and kept across epochs. Biases are trained only
/// when `config.use_biases` is set (zero biases are added if the model has
/// none); otherwise existing biases stay fixed.
pub fn train_dbm(init: &DbmModel, data: &Array2<f64>, config: &TrainConfig) -> Result<DbmModel> {
    config.validate()?;
    init.validate()?;
    if data.nrows() == 0 {
        return Err(Error::EmptyData);
    }
    Error::check_len("training data columns", init.n_visible(), data.ncols())?;

    let mut model = if config.use_biases { init.clone().with_biases() } else { init.clone() };
    let mut rng = rng::stream(config.seed, streams::DBM);
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    let mut particles: Vec<GibbsParticle> = Vec::new();
    let lr = config.learning_rate;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            if particles.is_empty() {
                particles = (0..config.batch_size)
                    .map(|k| {
                        let row = data.row(chunk[k % chunk.len()]).to_vec();
                        GibbsParticle::from_visible(&model, &row, &mut rng)
                    })
                    .collect::<Result<_>>()?;
            }
            let batch: Vec<_> = chunk.iter().map(|&r| data.row(r)).collect();
            let dir = update_direction(&model, &batch, &mut particles, config.gibbs_steps, &mut rng)?;
            for (w, d) in model.weights.iter_mut().zip(&dir.weights) {
                w.scaled_add(lr, d);
            }
            if config.use_biases {
                if let Some(biases) = model.biases.as_mut() {
                    for (b, d) in biases.iter_mut().zip(&dir.biases) {
                        b.scaled_add(lr, d);
                    }
                }
            }
        }
    }

    if model.weights.iter().flat_map(|w| w.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidModel("training diverged to non-finite weights".into()));
    }
    model.metadata.generator_id = GENERATOR_ID.to_string();
    model.metadata.seed = config.seed;
    let snapshot = model.metadata.config.get_or_insert_with(|| ConfigSnapshot {
        layer_dims: init.layer_sizes(),
        pretrain: None,
        dbm: None,
    });
    snapshot.dbm = Some(config.clone());
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::tests::random_model;
    use crate::oracle;

    fn two_pattern_data() -> Array2<f64> {
        let a = [1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        let b = [1.0; 7];
        Array2::from_shape_fn((40, 7), |(r, c)| if r % 2 == 0 { a[c] } else { b[c] })
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let init = random_model(&[7, 7, 1], 0.5, 1);
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 2, ..TrainConfig::fine_tuning() };
        let out = train_dbm(&init, &two_pattern_data(), &cfg).unwrap();
        assert_eq!(out.weights, init.weights);
    }

    #[test]
    fn same_seed_same_model() {
        let init = random_model(&[7, 7, 1], 0.1, 1);
        let cfg = TrainConfig { epochs: 3, seed: 11, ..TrainConfig::fine_tuning() };
        let a = train_dbm(&init, &two_pattern_data(), &cfg).unwrap();
        let b = train_dbm(&init, &two_pattern_data(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.metadata.seed, 11);
        assert_eq!(a.metadata.config.as_ref().unwrap().dbm.as_ref(), Some(&cfg));
    }

    #[test]
    fn training_improves_exact_likelihood() {
        let mut r = rng::stream(3, 0);
        let init = DbmModel::random(&[7, 7, 1], &mut r).unwrap();
        let data = two_pattern_data();
        let cfg = TrainConfig { seed: 2, ..TrainConfig::fine_tuning() };
        let out = train_dbm(&init, &data, &cfg).unwrap();
        let before = oracle::exact_loglik(&init, &data).unwrap();
        let after = oracle::exact_loglik(&out, &data).unwrap();
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn rejects_bad_input() {
        let init = DbmModel::zeros(&[7, 7, 1]).unwrap();
        let cfg = TrainConfig::fine_tuning();
        assert!(matches!(train_dbm(&init, &Array2::zeros((0, 7)), &cfg), Err(Error::EmptyData)));
        assert!(train_dbm(&init, &Array2::zeros((3, 6)), &cfg).is_err());
        let bad = TrainConfig { epochs: 0, ..cfg };
        assert!(train_dbm(&init, &two_pattern_data(), &bad).is_err());
    }

    #[test]
    fn biases_are_trained_when_enabled() {
        let init = DbmModel::zeros(&[7, 7, 1]).unwrap();
        let cfg = TrainConfig { epochs: 2, use_biases: true, ..TrainConfig::fine_tuning() };
        let out = train_dbm(&init, &two_pattern_data(), &cfg).unwrap();
        let b = out.biases.expect("biases added");
        assert!(b[0].iter().any(|&x| x != 0.0));
    }
}
