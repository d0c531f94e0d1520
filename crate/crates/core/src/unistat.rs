//! Univariate two-sample statistics on projection scores.
//!
//! Every statistic is an absolute value, so the permutation test built on
//! top of them is two-sided.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::direction::{dot, Direction};
use crate::error::{DppError, Result};

/// Scores `x_i . w + beta` aligned with their labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionScores {
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

impl ProjectionScores {
    pub fn new(scores: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(DppError::DimensionMismatch {
                what: "score count",
                expected: labels.len(),
                found: scores.len(),
            });
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(DppError::NonFinite { row: i + 1, col: 1 });
        }
        let ps = ProjectionScores { scores, labels };
        let (neg, pos) = ps.split();
        if neg.is_empty() || pos.is_empty() {
            return Err(DppError::SingleClass);
        }
        Ok(ps)
    }

    /// Scores of the (-1, +1) classes.
    pub fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let mut neg = Vec::new();
        let mut pos = Vec::new();
        for (s, l) in self.scores.iter().zip(&self.labels) {
            match l {
                Label::Negative => neg.push(*s),
                Label::Positive => pos.push(*s),
            }
        }
        (neg, pos)
    }

    /// (mean of +1 scores, mean of -1 scores).
    pub fn class_means(&self) -> Result<(f64, f64)> {
        let (neg, pos) = nonempty_split(self)?;
        Ok((mean(&pos), mean(&neg)))
    }
}

/// Projects every row of `ds` on `dir`.
pub fn project(ds: &LabeledDataset, dir: &Direction) -> Result<ProjectionScores> {
    if dir.w.len() != ds.n_features() {
        return Err(DppError::DimensionMismatch {
            what: "direction length",
            expected: ds.n_features(),
            found: dir.w.len(),
        });
    }
    let scores = ds.rows().map(|row| dot(row, &dir.w) + dir.beta).collect();
    ProjectionScores::new(scores, ds.labels().to_vec())
}

/// Which univariate statistic to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Absolute difference of class means.
    Md,
    /// Absolute Welch two-sample t statistic.
    T,
    /// Absolute difference of class medians.
    Med,
}

impl Statistic {
    pub fn compute(self, ps: &ProjectionScores) -> Result<f64> {
        match self {
            Statistic::Md => stat_md(ps),
            Statistic::T => stat_t(ps),
            Statistic::Med => stat_med(ps),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Md => "md",
            Statistic::T => "t",
            Statistic::Med => "med",
        })
    }
}

impl FromStr for Statistic {
    type Err = DppError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" => Ok(Statistic::Md),
            "t" => Ok(Statistic::T),
            "med" => Ok(Statistic::Med),
            other => Err(DppError::invalid(
                "statistic",
                format!("{other:?} (expected md, t or med)"),
            )),
        }
    }
}

fn nonempty_split(ps: &ProjectionScores) -> Result<(Vec<f64>, Vec<f64>)> {
    let (neg, pos) = ps.split();
    if neg.is_empty() || pos.is_empty() {
        return Err(DppError::SingleClass);
    }
    Ok((neg, pos))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Median with the midpoint convention for even counts; reorders `xs`.
/// NaN for an empty slice.
pub(crate) fn median(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    xs.sort_unstable_by(f64::total_cmp);
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `|mean(+1) - mean(-1)|`.
pub fn stat_md(ps: &ProjectionScores) -> Result<f64> {
    let (neg, pos) = nonempty_split(ps)?;
    Ok((mean(&pos) - mean(&neg)).abs())
}

/// Welch form: `|mean+ - mean-| / sqrt(s+^2/n+ + s-^2/n-)`.
pub fn stat_t(ps: &ProjectionScores) -> Result<f64> {
    let (neg, pos) = nonempty_split(ps)?;
    for (label, class) in [(-1, &neg), (1, &pos)] {
        if class.len() < 2 {
            return Err(DppError::ClassTooSmall {
                label,
                size: class.len(),
                required: 2,
            });
        }
    }
    let se2 = variance(&pos) / pos.len() as f64 + variance(&neg) / neg.len() as f64;
    if !(se2 > 0.0) {
        return Err(DppError::ZeroVariance);
    }
    Ok((mean(&pos) - mean(&neg)).abs() / se2.sqrt())
}

/// `|median(+1) - median(-1)|`.
pub fn stat_med(ps: &ProjectionScores) -> Result<f64> {
    let (mut neg, mut pos) = nonempty_split(ps)?;
    Ok((median(&mut pos) - median(&mut neg)).abs())
}
