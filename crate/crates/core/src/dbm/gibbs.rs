use rand::Rng;

use super::DbmModel;
use crate::error::{Error, Result};
use crate::math::sample_bits;

/// Persistent joint state `(v, h¹, …, hᴸ)` of a Gibbs chain, entries 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsParticle {
    pub state: Vec<Vec<f64>>,
}

impl GibbsParticle {
    pub fn zeros(model: &DbmModel) -> Self {
        Self { state: model.layer_sizes().into_iter().map(|n| vec![0.0; n]).collect() }
    }

    /// Starts a chain at `v` with hidden layers drawn from a bottom-up pass.
    pub fn from_visible<R: Rng + ?Sized>(model: &DbmModel, v: &[f64], rng: &mut R) -> Result<Self> {
        Error::check_len("visible vector", model.n_visible(), v.len())?;
        let mut state = vec![sample_bits(v, rng)];
        for l in 1..model.n_layers() {
            let mut act = ndarray::ArrayView1::from(&state[l - 1][..]).dot(&model.weights[l - 1]);
            if let Some(b) = model.bias(l) {
                act += b;
            }
            let p: Vec<f64> = act.iter().map(|&x| crate::math::sigmoid(x)).collect();
            state.push(sample_bits(&p, rng));
        }
        Ok(Self { state })
    }

    pub fn visible(&self) -> &[f64] {
        &self.state[0]
    }

    fn check(&self, model: &DbmModel) -> Result<()> {
        let sizes = model.layer_sizes();
        Error::check_len("particle layers", sizes.len(), self.state.len())?;
        for (s, n) in self.state.iter().zip(sizes) {
            Error::check_len("particle layer", n, s.len())?;
        }
        Ok(())
    }
}

/// One block-Gibbs sweep: every even layer (v, h², …) is resampled given the
/// odd layers, then every odd layer (h¹, h³, …) given the new even layers.
pub fn gibbs_step<R: Rng + ?Sized>(
    model: &DbmModel,
    particle: &GibbsParticle,
    rng: &mut R,
) -> Result<GibbsParticle> {
    particle.check(model)?;
    let mut next = particle.clone();
    let n_layers = model.n_layers();
    for parity in [0, 1] {
        for l in (parity..n_layers).step_by(2) {
            let p = {
                let below = (l > 0).then(|| next.state[l - 1].as_slice());
                let above = next.state.get(l + 1).map(|a| a.as_slice());
                model.conditional(l, below, above)?
            };
            next.state[l] = sample_bits(&p, rng);
        }
    }
    Ok(next)
}
