use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::objective::sigmoid;

/// Draws `n` samples from a logistic model with a standard-normal ground truth.
///
/// Features are i.i.d. standard normal with a constant 1 appended, so the
/// result has dimension `d_features + 1`. Label 1 occurs with probability
/// `σ(separation·⟨a, w_true⟩)`, where the ground truth covers the
/// non-bias features only.
pub fn synthesize_dataset(seed: u64, n: usize, d_features: usize, separation: f64) -> Dataset {
    let mut truth_rng = ChaCha8Rng::seed_from_u64(seed);
    truth_rng.set_stream(0);
    let w_true: Vec<f64> = (0..d_features)
        .map(|_| truth_rng.sample(StandardNormal))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut data = Dataset::new(d_features + 1);
    let mut row = vec![1.0; d_features + 1];
    for _ in 0..n {
        for x in &mut row[..d_features] {
            *x = rng.sample(StandardNormal);
        }
        let margin: f64 = row[..d_features]
            .iter()
            .zip(&w_true)
            .map(|(a, w)| a * w)
            .sum();
        let label = (rng.random::<f64>() < sigmoid(separation * margin)) as u8;
        data.push(&row, label)
            .expect("synthetic rows are finite and well-formed");
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = synthesize_dataset(7, 50, 5, 1.0);
        assert_eq!(a, synthesize_dataset(7, 50, 5, 1.0));
        assert_ne!(a, synthesize_dataset(8, 50, 5, 1.0));
        assert_eq!(
            a.fingerprint(),
            synthesize_dataset(7, 50, 5, 1.0).fingerprint()
        );
    }

    #[test]
    fn bias_is_appended() {
        let d = synthesize_dataset(0, 20, 3, 1.0);
        assert_eq!(d.dim(), 4);
        assert!(d.iter().all(|s| s.features[3] == 1.0));
    }

    #[test]
    fn zero_separation_is_a_fair_coin() {
        let d = synthesize_dataset(0, 10_000, 4, 0.0);
        let rate = d.labels().iter().filter(|&&b| b == 1).count() as f64 / d.len() as f64;
        assert!((0.45..=0.55).contains(&rate), "{rate}");
    }
}
