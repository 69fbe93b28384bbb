//! Synthetic weekly-usage data drawn from a mixture of independent-day profiles.

use rand::Rng;

use crate::data::{WeekMatrix, DAYS_PER_WEEK};
use crate::rng::{self, ModelRng};

/// One mixture component: selection weight and per-weekday usage probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsageProfile {
    pub weight: f64,
    pub day_probs: [f64; DAYS_PER_WEEK],
}

/// Two usage groups: trackers worn mostly at the start of the week (and a
/// bit at the weekend) versus worn throughout the week.
pub fn two_group_profiles() -> [UsageProfile; 2] {
    [
        UsageProfile { weight: 0.5, day_probs: [0.9, 0.9, 0.15, 0.15, 0.15, 0.4, 0.4] },
        UsageProfile { weight: 0.5, day_probs: [0.85; DAYS_PER_WEEK] },
    ]
}

/// Draws `n` weeks. Each week picks a component by weight, then each day is
/// active independently with the component's probability.
pub fn sample_weeks(profiles: &[UsageProfile], n: usize, rng: &mut ModelRng) -> WeekMatrix {
    let total: f64 = profiles.iter().map(|p| p.weight).sum();
    let rows = (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let profile = profiles
                .iter()
                .find(|p| {
                    u -= p.weight;
                    u < 0.0
                })
                .unwrap_or(&profiles[profiles.len() - 1]);
            let mut week = [0u8; DAYS_PER_WEEK];
            for (d, x) in week.iter_mut().enumerate() {
                *x = u8::from(profile.day_probs[d] > rng.random::<f64>());
            }
            week
        })
        .collect::<Vec<_>>();
    WeekMatrix::from_values(rows)
}

pub fn two_group_weeks(n: usize, seed: u64) -> WeekMatrix {
    sample_weeks(&two_group_profiles(), n, &mut rng::stream(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_frequencies() {
        let m = two_group_weeks(20_000, 1);
        let a = m.to_array();
        let mon = a.column(0).mean().unwrap();
        let wed = a.column(2).mean().unwrap();
        assert!((mon - 0.875).abs() < 0.02, "{mon}");
        assert!((wed - 0.5).abs() < 0.02, "{wed}");
        assert_eq!(two_group_weeks(50, 3), two_group_weeks(50, 3));
    }
}
