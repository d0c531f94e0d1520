//! Synthetic two-class Gaussian data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{DppError, Result};

/// Two spherical Gaussian clouds with standard deviation `sd`, centred at
/// `-d/2` and `+d/2` on the first axis. The first `n - n/2` rows are +1,
/// the rest -1.
pub fn make_blobs(n: usize, p: usize, center_distance: f64, sd: f64, seed: u64) -> Result<LabeledDataset> {
    if p == 0 {
        return Err(DppError::invalid("p", "must be at least 1"));
    }
    if !center_distance.is_finite() {
        return Err(DppError::invalid("center_distance", "must be finite"));
    }
    let normal = Normal::new(0.0, sd).map_err(|e| DppError::invalid("sd", e.to_string()))?;
    if !(sd > 0.0) {
        return Err(DppError::invalid("sd", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = n - n / 2;
    let mut features = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i < n_pos { Label::Positive } else { Label::Negative };
        for j in 0..p {
            let shift = if j == 0 {
                0.5 * center_distance * label.sign()
            } else {
                0.0
            };
            features.push(shift + normal.sample(&mut rng));
        }
        labels.push(label);
    }
    LabeledDataset::new(features, p, labels)
}
