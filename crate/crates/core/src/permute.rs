//! Label permutations and their per-permutation random streams.
//!
//! Permutation `b` always draws from `derive_stream(seed, b)`, a ChaCha8
//! stream selected by index, so results do not depend on how permutations
//! are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_counts, Label};
use crate::error::{DppError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Balanced,
    Unbalanced,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Balanced => "balanced",
            Scheme::Unbalanced => "unbalanced",
        })
    }
}

impl FromStr for Scheme {
    type Err = DppError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(Scheme::Balanced),
            "unbalanced" => Ok(Scheme::Unbalanced),
            other => Err(DppError::invalid(
                "scheme",
                format!("{other:?} (expected balanced or unbalanced)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub scheme: Scheme,
    /// Number of permutations, B.
    pub permutations: usize,
    pub seed: u64,
}

impl PermutationPlan {
    pub fn new(scheme: Scheme, permutations: usize, seed: u64) -> Result<Self> {
        if permutations == 0 {
            return Err(DppError::invalid("B", "number of permutations must be at least 1"));
        }
        Ok(PermutationPlan {
            scheme,
            permutations,
            seed,
        })
    }
}

impl Default for PermutationPlan {
    fn default() -> Self {
        PermutationPlan {
            scheme: Scheme::Balanced,
            permutations: 1000,
            seed: 0,
        }
    }
}

/// Random stream owned by one permutation.
pub type PermStream = ChaCha8Rng;

/// The stream for permutation `perm_index` under master `seed`.
pub fn derive_stream(seed: u64, perm_index: u64) -> PermStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(perm_index);
    rng
}

/// `m / 2`, or a fair coin between floor and ceiling when `m` is odd.
fn half<R: Rng + ?Sized>(m: usize, rng: &mut R) -> usize {
    if m.is_multiple_of(2) {
        m / 2
    } else {
        m / 2 + rng.random_range(0..2usize)
    }
}

/// Draws a relabeling of `labels`.
///
/// * `Unbalanced`: a uniform shuffle of the labels.
/// * `Balanced`: with `n-` negatives, the new -1 group is `k` original -1
///   members plus `n- - k` original +1 members, `k = n-/2` (floor or ceiling
///   at random when odd). When the +1 class is too small for that
///   (`ceil(n-/2) > n+`), half of each class is swapped instead, so both new
///   groups hold half of each original class; group sizes change in that
///   case only.
pub fn permute_labels<R: Rng + ?Sized>(labels: &[Label], scheme: Scheme, rng: &mut R) -> Result<Vec<Label>> {
    let (n_neg, n_pos) = class_counts(labels);
    if n_neg == 0 || n_pos == 0 {
        return Err(DppError::SingleClass);
    }
    match scheme {
        Scheme::Unbalanced => {
            let mut out = labels.to_vec();
            out.shuffle(rng);
            Ok(out)
        }
        Scheme::Balanced => {
            if n_neg < 2 || n_pos < 2 {
                return Err(DppError::InfeasibleBalance {
                    negatives: n_neg,
                    positives: n_pos,
                });
            }
            let neg_idx: Vec<usize> = positions(labels, Label::Negative);
            let pos_idx: Vec<usize> = positions(labels, Label::Positive);
            if n_neg.div_ceil(2) <= n_pos {
                let kept = half(n_neg, rng);
                let mut out = vec![Label::Positive; labels.len()];
                for i in index::sample(rng, n_neg, kept) {
                    out[neg_idx[i]] = Label::Negative;
                }
                for i in index::sample(rng, n_pos, n_neg - kept) {
                    out[pos_idx[i]] = Label::Negative;
                }
                Ok(out)
            } else {
                let swap_neg = half(n_neg, rng);
                let swap_pos = half(n_pos, rng);
                let mut out = labels.to_vec();
                for i in index::sample(rng, n_neg, swap_neg) {
                    out[neg_idx[i]] = Label::Positive;
                }
                for i in index::sample(rng, n_pos, swap_pos) {
                    out[pos_idx[i]] = Label::Negative;
                }
                Ok(out)
            }
        }
    }
}

fn positions(labels: &[Label], which: Label) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == which)
        .map(|(i, _)| i)
        .collect()
}
