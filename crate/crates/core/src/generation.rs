//! Artificial weeks generated by clamping the top hidden layer.
//!
//! With the top layer fixed to all-on or all-off, the activation potential is
//! propagated deterministically down to the visible layer, and binary weeks
//! are drawn by comparing that potential against independent uniforms. The
//! per-weekday activation frequencies of the two conditions form the usage
//! heatmap.

use std::io::Write;

use ndarray::{Array2, ArrayView1, Axis};
use rand::Rng;

use crate::data::MATRIX_HEADER;
use crate::dbm::{gibbs_step, DbmModel, GibbsParticle};
use crate::error::{Error, Result};
use crate::math::sigmoid;

pub const TABLE_HEADER: [&str; 9] = ["condition", "mon", "tue", "wed", "thu", "fri", "sat", "sun", "n_samples"];

/// Top-layer condition used for generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    On,
    Off,
}

impl Condition {
    pub const BOTH: [Condition; 2] = [Condition::On, Condition::Off];

    pub fn label(self) -> &'static str {
        match self {
            Condition::On => "on",
            Condition::Off => "off",
        }
    }

    pub fn top_state(self, n_top: usize) -> Vec<f64> {
        vec![if self == Condition::On { 1.0 } else { 0.0 }; n_top]
    }
}

/// How visible samples are produced for a clamped top layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenerationMode {
    /// Deterministic potential propagation followed by thresholding.
    #[default]
    Potential,
    /// Block Gibbs sampling of all non-top layers with the top layer clamped;
    /// one sample is kept after `burn_in` sweeps and then after every sweep.
    Gibbs { burn_in: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternRow {
    pub label: String,
    pub frequencies: Vec<f64>,
}

/// Per-weekday activation frequencies for the "on" and "off" conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternTable {
    pub rows: Vec<PatternRow>,
    pub sample_count: usize,
}

/// Propagates the clamped top state down to a visible potential, using every
/// intermediate potential as a real-valued input to the layer below.
pub fn top_down_potential(model: &DbmModel, h_top: &[f64]) -> Result<Vec<f64>> {
    let sizes = model.layer_sizes();
    Error::check_len("top layer state", sizes[sizes.len() - 1], h_top.len())?;
    let mut p = h_top.to_vec();
    for l in (0..model.weights.len()).rev() {
        let mut act = model.weights[l].dot(&ArrayView1::from(&p[..]));
        if let Some(b) = model.bias(l) {
            act += b;
        }
        p = act.iter().map(|&x| sigmoid(x)).collect();
    }
    Ok(p)
}

/// `n` binary rows; entry `(k, i)` is 1 iff `potential[i] > u` for a fresh
/// uniform `u` in [0, 1). Uniforms are drawn row by row.
pub fn sample_binary<R: Rng + ?Sized>(potential: &[f64], n: usize, rng: &mut R) -> Result<Array2<u8>> {
    if let Some(p) = potential.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Config(format!("potential {p} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    let mut out = Array2::zeros((n, potential.len()));
    for mut row in out.outer_iter_mut() {
        for (x, &p) in row.iter_mut().zip(potential) {
            let u: f64 = rng.random();
            *x = u8::from(p > u);
        }
    }
    Ok(out)
}

/// Visible samples with the top layer clamped to `condition`.
pub fn conditional_samples<R: Rng + ?Sized>(
    model: &DbmModel,
    condition: Condition,
    n: usize,
    mode: GenerationMode,
    rng: &mut R,
) -> Result<Array2<u8>> {
    let sizes = model.layer_sizes();
    let top = condition.top_state(sizes[sizes.len() - 1]);
    match mode {
        GenerationMode::Potential => sample_binary(&top_down_potential(model, &top)?, n, rng),
        GenerationMode::Gibbs { burn_in } => {
            if n == 0 {
                return Err(Error::Config("sample count must be at least 1".into()));
            }
            let top_layer = sizes.len() - 1;
            let mut particle = GibbsParticle::zeros(model);
            particle.state[top_layer] = top.clone();
            let mut out = Array2::zeros((n, sizes[0]));
            for k in 0..burn_in + n {
                particle = gibbs_step(model, &particle, rng)?;
                particle.state[top_layer].clone_from(&top);
                if k >= burn_in {
                    for (x, &v) in out.row_mut(k - burn_in).iter_mut().zip(particle.visible()) {
                        *x = v as u8;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Column means of a binary sample matrix.
pub fn column_frequencies(samples: &Array2<u8>) -> Vec<f64> {
    let n = samples.nrows() as f64;
    samples
        .axis_iter(Axis(1))
        .map(|col| col.iter().map(|&x| f64::from(x)).sum::<f64>() / n)
        .collect()
}

/// Builds the two-row pattern table ("on" first) from `n` samples per condition.
pub fn usage_heatmap<R: Rng + ?Sized>(model: &DbmModel, n: usize, rng: &mut R) -> Result<PatternTable> {
    usage_heatmap_with_mode(model, n, GenerationMode::Potential, rng)
}

pub fn usage_heatmap_with_mode<R: Rng + ?Sized>(
    model: &DbmModel,
    n: usize,
    mode: GenerationMode,
    rng: &mut R,
) -> Result<PatternTable> {
    let rows = Condition::BOTH
        .iter()
        .map(|&c| {
            let samples = conditional_samples(model, c, n, mode, rng)?;
            Ok(PatternRow { label: c.label().to_string(), frequencies: column_frequencies(&samples) })
        })
        .collect::<Result<_>>()?;
    Ok(PatternTable { rows, sample_count: n })
}

impl PatternTable {
    pub fn row(&self, label: &str) -> Option<&PatternRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// CSV with header `condition,mon,...,sun,n_samples`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let n_days = self.rows.first().map_or(7, |r| r.frequencies.len());
        if n_days == 7 {
            w.write_record(TABLE_HEADER)?;
        } else {
            let mut header = vec!["condition".to_string()];
            header.extend((1..=n_days).map(|i| format!("v{i}")));
            header.push("n_samples".into());
            w.write_record(&header)?;
        }
        for row in &self.rows {
            let mut fields = vec![row.label.clone()];
            fields.extend(row.frequencies.iter().map(|f| f.to_string()));
            fields.push(self.sample_count.to_string());
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain (`P2`) grayscale image of the table, one `cell_size`-pixel square
    /// per entry; darker means a higher frequency.
    pub fn write_pgm<W: Write>(&self, mut sink: W, cell_size: usize) -> Result<()> {
        if cell_size == 0 {
            return Err(Error::Config("cell size must be at least 1".into()));
        }
        let cols = self.rows.first().map_or(0, |r| r.frequencies.len());
        let (width, height) = (cols * cell_size, self.rows.len() * cell_size);
        writeln!(sink, "P2")?;
        writeln!(sink, "{width} {height}")?;
        writeln!(sink, "255")?;
        for row in &self.rows {
            let shades: Vec<String> = row
                .frequencies
                .iter()
                .map(|f| ((1.0 - f.clamp(0.0, 1.0)) * 255.0).round() as u8)
                .flat_map(|g| std::iter::repeat_n(g.to_string(), cell_size))
                .collect();
            let line = shades.join(" ");
            for _ in 0..cell_size {
                writeln!(sink, "{line}")?;
            }
        }
        Ok(())
    }
}

/// Writes raw samples as CSV: `condition,mon,...,sun`, one row per sample.
pub fn write_samples_csv<W: Write>(sink: W, samples: &[(Condition, Array2<u8>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["condition"];
    header.extend(&MATRIX_HEADER[2..]);
    w.write_record(&header)?;
    for (cond, m) in samples {
        for row in m.outer_iter() {
            let mut fields = vec![cond.label().to_string()];
            fields.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&fields)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    #[test]
    fn zero_model_potential_is_half() {
        let m = DbmModel::zeros(&[7, 7, 1]).unwrap();
        assert_eq!(top_down_potential(&m, &[1.0]).unwrap(), vec![0.5; 7]);
    }

    #[test]
    fn two_step_substitution() {
        let m = DbmModel::new(vec![array![[4.0]], array![[4.0]]], None).unwrap();
        let p = top_down_potential(&m, &[1.0]).unwrap();
        let h1 = sigmoid(4.0);
        assert!((p[0] - sigmoid(4.0 * h1)).abs() < 1e-15);
    }

    #[test]
    fn matches_scalar_loops() {
        for seed in 0..10 {
            let mut r = rng::stream(seed, 7);
            let mut m = DbmModel::zeros(&[7, 7, 1]).unwrap();
            for w in &mut m.weights {
                w.mapv_inplace(|_| r.random_range(-2.0..2.0));
            }
            let p = top_down_potential(&m, &[1.0]).unwrap();
            let mut h1 = [0.0; 7];
            for (j, h) in h1.iter_mut().enumerate() {
                *h = 1.0 / (1.0 + (-m.weights[1][[j, 0]]).exp());
            }
            for i in 0..7 {
                let mut s = 0.0;
                for j in 0..7 {
                    s += m.weights[0][[i, j]] * h1[j];
                }
                assert!((p[i] - 1.0 / (1.0 + (-s).exp())).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sampling_edges() {
        let mut r = rng::stream(0, 0);
        assert!(sample_binary(&[1.0; 7], 500, &mut r).unwrap().iter().all(|&x| x == 1));
        assert!(sample_binary(&[0.0; 7], 500, &mut r).unwrap().iter().all(|&x| x == 0));
        assert!(sample_binary(&[1.2], 5, &mut r).is_err());
        assert!(sample_binary(&[-0.1], 5, &mut r).is_err());
        assert!(sample_binary(&[0.5], 0, &mut r).is_err());
    }

    #[test]
    fn sampling_frequency_at_point_seven() {
        let mut r = rng::stream(42, 0);
        let s = sample_binary(&[0.7], 10_000, &mut r).unwrap();
        let f = column_frequencies(&s)[0];
        assert!((0.68..=0.72).contains(&f), "{f}");
    }

    #[test]
    fn heatmap_is_reproducible_and_consistent() {
        let m = DbmModel::zeros(&[7, 7, 1]).unwrap();
        let a = usage_heatmap(&m, 10_000, &mut rng::stream(3, 0)).unwrap();
        let b = usage_heatmap(&m, 10_000, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows[0].label, "on");
        assert_eq!(a.rows[1].label, "off");
        for row in &a.rows {
            // 99.99% binomial interval at p = 0.5, n = 10,000 is about ±0.02.
            assert!(row.frequencies.iter().all(|f| (f - 0.5).abs() < 0.02));
        }

        // Entries equal the column means of the samples drawn with the same stream.
        let mut r = rng::stream(3, 0);
        let on = conditional_samples(&m, Condition::On, 10_000, GenerationMode::Potential, &mut r).unwrap();
        assert_eq!(column_frequencies(&on), a.rows[0].frequencies);
    }

    #[test]
    fn gibbs_mode_respects_clamp() {
        let m = DbmModel::new(vec![array![[0.0], [0.0]], array![[6.0]]], None).unwrap();
        // With W¹ = 0 the visible layer is a fair coin whatever the top says.
        let s = conditional_samples(&m, Condition::On, 4000, GenerationMode::Gibbs { burn_in: 10 }, &mut rng::stream(1, 1))
            .unwrap();
        let f = column_frequencies(&s);
        assert!(f.iter().all(|x| (x - 0.5).abs() < 0.05));
    }

    #[test]
    fn csv_and_pgm_formats() {
        let t = PatternTable {
            rows: vec![
                PatternRow { label: "on".into(), frequencies: vec![1.0, 0.5, 0.0, 0.25, 0.0, 0.0, 0.75] },
                PatternRow { label: "off".into(), frequencies: vec![0.0; 7] },
            ],
            sample_count: 4,
        };
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "condition,mon,tue,wed,thu,fri,sat,sun,n_samples\non,1,0.5,0,0.25,0,0,0.75,4\noff,0,0,0,0,0,0,0,4\n"
        );
        let mut pgm = Vec::new();
        t.write_pgm(&mut pgm, 2).unwrap();
        let text = String::from_utf8(pgm).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(&lines[..3], &["P2", "14 4", "255"]);
        assert_eq!(lines.len(), 3 + 4);
        assert!(lines[3].starts_with("0 0 128 128 255 255"));
        assert!(t.write_pgm(Vec::new(), 0).is_err());
    }
}
