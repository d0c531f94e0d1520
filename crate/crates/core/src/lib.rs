//! Direction-projection-permutation (DiProPerm) test for whether two
//! high-dimensional samples differ.
//!
//! A linear classifier (DWD or mean difference) picks a direction, the data
//! are projected onto it, and a univariate statistic of the projections is
//! compared with its distribution over re-fits on permuted labels.
//!
//! ```
//! use diproperm::{diproperm, make_blobs, Classifier, DppConfig, PermutationPlan, Scheme};
//!
//! let ds = make_blobs(40, 5, 6.0, 1.0, 7).unwrap();
//! let config = DppConfig {
//!     classifier: Classifier::Md,
//!     plan: PermutationPlan::new(Scheme::Unbalanced, 100, 1).unwrap(),
//!     ..DppConfig::default()
//! };
//! let result = diproperm(&ds, &config, 2).unwrap();
//! assert!(result.p_value <= 0.05);
//! ```

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod direction;
pub mod engine;
pub mod error;
pub mod permute;
pub mod report;
pub mod synth;
pub mod unistat;

pub use dataset::{Label, LabeledDataset};
pub use direction::{Classifier, Direction, DwdModel, Loading, SolverOptions};
pub use engine::{diproperm, DppConfig, DppResult, PermutationRecord};
pub use error::{DppError, Result};
pub use permute::{PermutationPlan, Scheme};
pub use report::Panel;
pub use synth::make_blobs;
pub use unistat::{ProjectionScores, Statistic};
