//! Versioned JSON model documents.
//!
//! ```json
//! {
//!   "version": 1,
//!   "generator_id": "chacha20",
//!   "seed": 0,
//!   "layer_sizes": [7, 7, 1],
//!   "weights": [[[...], ...], [[...], ...]],
//!   "visible_bias": [...],          // optional
//!   "hidden_biases": [[...], ...],  // optional
//!   "config": { ... }               // optional
//! }
//! ```
//!
//! Weight matrices are row-major nested arrays. Floats are written in their
//! shortest round-trip form so a save/load cycle is bit-exact.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{ConfigSnapshot, DbmModel, ModelMetadata};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    generator_id: String,
    seed: u64,
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    visible_bias: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden_biases: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    config: Option<ConfigSnapshot>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

pub fn save_model<W: Write>(model: &DbmModel, mut sink: W) -> Result<()> {
    model.validate()?;
    let biases = model.biases.as_ref();
    let doc = ModelDocument {
        version: FORMAT_VERSION,
        generator_id: model.metadata.generator_id.clone(),
        seed: model.metadata.seed,
        layer_sizes: model.layer_sizes(),
        weights: model
            .weights
            .iter()
            .map(|w| w.outer_iter().map(|r| r.to_vec()).collect())
            .collect(),
        visible_bias: biases.map(|b| b[0].to_vec()),
        hidden_biases: biases.map(|b| b[1..].iter().map(|x| x.to_vec()).collect()),
        config: model.metadata.config.clone(),
    };
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load_model<R: Read>(mut source: R) -> Result<DbmModel> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let probe: VersionProbe = serde_json::from_str(&text)?;
    if probe.version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(probe.version));
    }
    let doc: ModelDocument = serde_json::from_str(&text)?;

    if doc.weights.len() + 1 != doc.layer_sizes.len() {
        return Err(Error::InvalidModel(format!(
            "{} weight matrices declared for {} layers",
            doc.weights.len(),
            doc.layer_sizes.len()
        )));
    }
    let mut weights = Vec::with_capacity(doc.weights.len());
    for (l, rows) in doc.weights.iter().enumerate() {
        let (n_rows, n_cols) = (doc.layer_sizes[l], doc.layer_sizes[l + 1]);
        if rows.len() != n_rows || rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidModel(format!(
                "weight matrix {} does not have the declared shape {n_rows}x{n_cols}",
                l + 1
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let w = Array2::from_shape_vec((n_rows, n_cols), flat)
            .map_err(|e| Error::InvalidModel(e.to_string()))?;
        weights.push(w);
    }
    let biases = match (doc.visible_bias, doc.hidden_biases) {
        (None, None) => None,
        (Some(v), Some(h)) => {
            let mut all = vec![Array1::from(v)];
            all.extend(h.into_iter().map(Array1::from));
            Some(all)
        }
        _ => {
            return Err(Error::InvalidModel(
                "visible_bias and hidden_biases must be given together".into(),
            ))
        }
    };
    let mut model = DbmModel::new(weights, biases)?;
    model.metadata = ModelMetadata {
        generator_id: doc.generator_id,
        seed: doc.seed,
        config: doc.config,
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbm::tests::random_model;
    use crate::rbm::TrainConfig;

    fn round_trip(m: &DbmModel) -> DbmModel {
        let mut buf = Vec::new();
        save_model(m, &mut buf).unwrap();
        load_model(buf.as_slice()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let mut m = random_model(&[7, 7, 1], 1.0, 3).with_biases();
        m.biases.as_mut().unwrap()[1][2] = 0.1 + 0.2;
        m.weights[0][[0, 0]] = 1.0 / 3.0;
        m.weights[1][[6, 0]] = -2.5e-300;
        m.metadata = ModelMetadata {
            generator_id: "chacha20".into(),
            seed: u64::MAX,
            config: Some(ConfigSnapshot {
                layer_dims: vec![7, 7, 1],
                pretrain: Some(TrainConfig::pretraining()),
                dbm: Some(TrainConfig::fine_tuning()),
            }),
        };
        assert_eq!(round_trip(&m), m);
        let plain = random_model(&[3, 2, 2], 1.0, 4);
        assert_eq!(round_trip(&plain), plain);
    }

    #[test]
    fn rejects_unsupported_version() {
        let mut buf = Vec::new();
        save_model(&DbmModel::zeros(&[2, 1]).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\"version\": 1", "\"version\": 999");
        assert!(matches!(load_model(text.as_bytes()), Err(Error::UnsupportedVersion(999))));
    }

    #[test]
    fn rejects_shape_mismatch() {
        let text = r#"{"version":1,"generator_id":"chacha20","seed":0,
            "layer_sizes":[2,2,1],"weights":[[[0.0,0.0],[0.0,0.0]],[[0.0],[0.0],[0.0]]]}"#;
        assert!(matches!(load_model(text.as_bytes()), Err(Error::InvalidModel(_))));
        let text = r#"{"version":1,"generator_id":"chacha20","seed":0,
            "layer_sizes":[2,1],"weights":[[[0.0],[0.0]]],"visible_bias":[0.0]}"#;
        assert!(load_model(text.as_bytes()).is_err());
    }

    #[test]
    fn rejects_non_finite_and_garbage() {
        let text = r#"{"version":1,"generator_id":"x","seed":0,"layer_sizes":[1,1],"weights":[[[1e999]]]}"#;
        assert!(load_model(text.as_bytes()).is_err());
        assert!(load_model("not json".as_bytes()).is_err());
    }
}
