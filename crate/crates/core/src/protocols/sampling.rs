use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::table::{OutcomeTable, Sampling};
use crate::error::{Error, Result};

/// Multinomial counts for `probs` (clamped, renormalized over the positive mass).
pub(crate) fn multinomial_counts(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let clamped: Vec<f64> = probs.iter().map(|p| p.clamp(0.0, 1.0)).collect();
    let mut remaining_mass: f64 = clamped.iter().sum();
    let mut remaining = shots;
    let mut counts = vec![0; probs.len()];
    let last_positive = clamped.iter().rposition(|&p| p > 0.0);
    for (k, &p) in clamped.iter().enumerate() {
        if remaining == 0 || p <= 0.0 {
            continue;
        }
        if Some(k) == last_positive {
            counts[k] = remaining;
            break;
        }
        let conditional = (p / remaining_mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, conditional)
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[k] = draw;
        remaining -= draw;
        remaining_mass -= p;
    }
    counts
}

/// Finite-shot emulation of an experiment: one multinomial draw of `shots`
/// runs from an exact table.
pub fn sample_counts(table: &OutcomeTable, shots: u64, seed: u64) -> Result<OutcomeTable> {
    if shots == 0 {
        return Err(Error::ZeroSamples);
    }
    if !table.is_exact() {
        return Err(Error::InvalidTable(
            "sampling requires an exact table".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = multinomial_counts(table.raw_probabilities(), shots, &mut rng);
    let probs = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    Ok(OutcomeTable::from_parts_unchecked(
        table.times().to_vec(),
        table.slots().to_vec(),
        probs,
        Sampling::Multinomial { shots },
    ))
}

/// Independent per-experiment seed stream (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
