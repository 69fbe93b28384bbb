//! Small numeric helpers shared by the model code.

use rand::Rng;

/// Logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Draws a Bernoulli bit: 1 iff `p > u` for a fresh uniform `u` in [0, 1).
#[inline]
pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if p > u {
        1.0
    } else {
        0.0
    }
}

pub fn sample_bits<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Vec<f64> {
    probs.iter().map(|&p| bernoulli(p, rng)).collect()
}

/// Numerically stable `log(sum(exp(xs)))`, summed in input order.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Binary entropy in nats, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Half the L1 distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
