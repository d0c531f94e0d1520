//! The DiProPerm test: fit a direction, project, and calibrate the
//! univariate statistic against re-fits on permuted labels.

use std::time::Instant;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::direction::{
    fit_direction, loadings_of, penalty_parameter, Classifier, Direction, DwdModel, Loading, SolverOptions,
};
use crate::error::{DppError, Result};
use crate::permute::{derive_stream, permute_labels, PermutationPlan};
use crate::unistat::{mean, project, variance, ProjectionScores, Statistic};

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Everything that determines a test's output (worker count does not).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DppConfig {
    pub classifier: Classifier,
    pub statistic: Statistic,
    pub plan: PermutationPlan,
    pub alpha: f64,
    pub solver: SolverOptions,
    /// Keep every permutation's scores, not only the diagnostic ones.
    #[serde(default)]
    pub retain_all: bool,
}

impl Default for DppConfig {
    fn default() -> Self {
        DppConfig {
            classifier: Classifier::Dwd,
            statistic: Statistic::Md,
            plan: PermutationPlan::default(),
            alpha: DEFAULT_ALPHA,
            solver: SolverOptions::default(),
            retain_all: false,
        }
    }
}

impl DppConfig {
    pub fn validate(&self) -> Result<()> {
        let b = self.plan.permutations;
        if b == 0 {
            return Err(DppError::invalid("B", "number of permutations must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DppError::invalid("alpha", format!("{} is outside (0, 1)", self.alpha)));
        }
        if self.alpha * (b as f64) < 1.0 - 1e-9 {
            return Err(DppError::invalid(
                "alpha",
                format!("alpha * B = {} must be at least 1", self.alpha * b as f64),
            ));
        }
        if !(self.solver.tol > 0.0) {
            return Err(DppError::invalid("tol", "must be positive"));
        }
        if self.solver.max_iter == 0 {
            return Err(DppError::invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

/// One permuted re-fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationRecord {
    /// 1-based.
    pub perm_index: usize,
    /// Scores under the re-fit direction, carrying the permuted labels.
    pub scores: ProjectionScores,
    pub statistic: f64,
}

impl PermutationRecord {
    pub fn permuted_labels(&self) -> &[Label] {
        &self.scores.labels
    }
}

/// Full output of [`diproperm`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DppResult {
    pub config: DppConfig,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_negative: usize,
    pub n_positive: usize,
    /// DWD penalty, computed once from the observed labels.
    pub penalty: Option<f64>,
    pub observed_model: Option<DwdModel>,
    pub observed_direction: Direction,
    pub observed_scores: ProjectionScores,
    pub observed_statistic: f64,
    /// All p loadings, largest magnitude first.
    pub loadings: Vec<Loading>,
    pub perm_statistics: Vec<f64>,
    pub records: Vec<PermutationRecord>,
    pub min_perm_index: usize,
    pub max_perm_index: usize,
    pub p_value: f64,
    /// `None` when the permutation statistics have zero spread.
    pub z_score: Option<f64>,
    pub cutoff: f64,
}

impl DppResult {
    pub fn record(&self, perm_index: usize) -> Option<&PermutationRecord> {
        self.records.iter().find(|r| r.perm_index == perm_index)
    }

    /// True when `p_value <= alpha`.
    pub fn rejects(&self) -> bool {
        self.p_value <= self.config.alpha
    }
}

/// Share of permutation statistics at or above `observed`.
pub fn p_value(perm_stats: &[f64], observed: f64) -> Result<f64> {
    if perm_stats.is_empty() {
        return Err(DppError::Empty);
    }
    let hits = perm_stats.iter().filter(|&&t| t >= observed).count();
    Ok(hits as f64 / perm_stats.len() as f64)
}

/// `(observed - mean) / sd` against the permutation distribution, unbiased sd.
pub fn z_score(perm_stats: &[f64], observed: f64) -> Result<f64> {
    if perm_stats.is_empty() {
        return Err(DppError::Empty);
    }
    if perm_stats.len() < 2 {
        return Err(DppError::ZeroVariance);
    }
    let sd = variance(perm_stats).sqrt();
    if !(sd > 0.0) {
        return Err(DppError::ZeroVariance);
    }
    Ok((observed - mean(perm_stats)) / sd)
}

/// The `ceil((1 - alpha) * B)`-th smallest permutation statistic.
pub fn cutoff(perm_stats: &[f64], alpha: f64) -> Result<f64> {
    if perm_stats.is_empty() {
        return Err(DppError::Empty);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DppError::invalid("alpha", format!("{alpha} is outside (0, 1)")));
    }
    let b = perm_stats.len();
    // the guard keeps e.g. 0.95 * 100 from rounding up to 96
    let rank = (((1.0 - alpha) * b as f64) - 1e-9).ceil().clamp(1.0, b as f64) as usize;
    let mut sorted = perm_stats.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(sorted[rank - 1])
}

fn run_permutation(
    ds: &LabeledDataset,
    config: &DppConfig,
    penalty: Option<f64>,
    perm_index: usize,
) -> Result<PermutationRecord> {
    let started = Instant::now();
    let wrap = |e: DppError| DppError::Permutation {
        perm_index,
        source: Box::new(e),
    };
    let mut stream = derive_stream(config.plan.seed, perm_index as u64);
    let labels = permute_labels(ds.labels(), config.plan.scheme, &mut stream).map_err(wrap)?;
    let permuted = ds.relabeled(labels).map_err(wrap)?;
    let fit = fit_direction(&permuted, config.classifier, penalty, &config.solver).map_err(wrap)?;
    let scores = project(&permuted, &fit.direction).map_err(wrap)?;
    let statistic = config.statistic.compute(&scores).map_err(wrap)?;
    debug!(
        "permutation {perm_index}: statistic {statistic:.6}, {} solver iterations, {:?}",
        fit.model.as_ref().map_or(0, |m| m.iterations),
        started.elapsed()
    );
    Ok(PermutationRecord {
        perm_index,
        scores,
        statistic,
    })
}

/// Index (1-based) of the first minimum and first maximum.
fn extreme_indices(stats: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &s) in stats.iter().enumerate() {
        if s < stats[lo] {
            lo = i;
        }
        if s > stats[hi] {
            hi = i;
        }
    }
    (lo + 1, hi + 1)
}

/// Runs the test with `workers` threads.
///
/// Permutation `b` uses stream `b` of the configured seed and results are
/// gathered by index, so the output is identical for any worker count.
/// A failed re-fit aborts the run with the failing permutation index.
pub fn diproperm(ds: &LabeledDataset, config: &DppConfig, workers: usize) -> Result<DppResult> {
    config.validate()?;
    if workers == 0 {
        return Err(DppError::invalid("workers", "must be at least 1"));
    }
    let started = Instant::now();

    let penalty = match config.classifier {
        Classifier::Dwd => Some(penalty_parameter(ds)?),
        Classifier::Md => None,
    };
    let observed = fit_direction(ds, config.classifier, penalty, &config.solver)?;
    if let Some(m) = &observed.model {
        info!(
            "observed DWD fit: C = {:.6}, {} iterations, kkt residual {:.3e}, training error {:.4}",
            m.penalty, m.iterations, m.kkt_residual, m.training_error
        );
    }
    let observed_scores = project(ds, &observed.direction)?;
    let observed_statistic = config.statistic.compute(&observed_scores)?;
    let loadings = loadings_of(&observed.direction, ds.n_features(), ds.feature_names())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DppError::invalid("workers", e.to_string()))?;
    let b_total = config.plan.permutations;
    let retain_all = config.retain_all;
    let outcomes: Vec<(f64, Option<PermutationRecord>)> = pool.install(|| {
        (1..=b_total)
            .into_par_iter()
            .map(|b| {
                let rec = run_permutation(ds, config, penalty, b)?;
                Ok((rec.statistic, retain_all.then_some(rec)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let perm_statistics: Vec<f64> = outcomes.iter().map(|(s, _)| *s).collect();
    let (min_perm_index, max_perm_index) = extreme_indices(&perm_statistics);

    let records = if retain_all {
        outcomes.into_iter().filter_map(|(_, r)| r).collect()
    } else {
        let mut wanted = vec![1, min_perm_index, max_perm_index];
        if b_total >= 2 {
            wanted.push(2);
        }
        wanted.sort_unstable();
        wanted.dedup();
        // streams are deterministic, so re-running reproduces the same fits
        wanted
            .into_iter()
            .map(|b| run_permutation(ds, config, penalty, b))
            .collect::<Result<Vec<_>>>()?
    };

    let p = p_value(&perm_statistics, observed_statistic)?;
    let z = match z_score(&perm_statistics, observed_statistic) {
        Ok(z) => Some(z),
        Err(DppError::ZeroVariance) => None,
        Err(e) => return Err(e),
    };
    let cut = cutoff(&perm_statistics, config.alpha)?;
    info!(
        "{} permutations on {} worker(s) in {:?}: statistic {observed_statistic:.6}, p {p}, cutoff {cut:.6}",
        b_total,
        workers,
        started.elapsed()
    );

    let (n_negative, n_positive) = ds.class_counts();
    Ok(DppResult {
        config: config.clone(),
        n_samples: ds.n_samples(),
        n_features: ds.n_features(),
        n_negative,
        n_positive,
        penalty,
        observed_model: observed.model,
        observed_direction: observed.direction,
        observed_scores,
        observed_statistic,
        loadings,
        perm_statistics,
        records,
        min_perm_index,
        max_perm_index,
        p_value: p,
        z_score: z,
        cutoff: cut,
    })
}
