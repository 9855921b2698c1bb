//! Predictive hyperparameter optimisation (PHO).
//!
//! Every candidate configuration is trained for a few iterations, a linear
//! regression fitted on a handful of fully trained pilots predicts each
//! candidate's final score from its early score, and only the predicted best
//! are trained to completion. The crate also ships the equal-budget random
//! search baseline and the statistics used to compare the two.
//!
//! ```
//! use pho_core::learners::{BoostedStumpsFactory, TrainingData};
//! use pho_core::{pho, split, Dataset, MetricKind, PhoParams, SearchSpace, SyntheticSpec};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let data = Dataset::synthetic(&SyntheticSpec::default());
//! let pair = split(&data, 0.67, 1, false)?;
//! let factory = BoostedStumpsFactory::new(TrainingData::carve(&pair.train, 0.2), MetricKind::Accuracy, 2, 20)?;
//! let grid = SearchSpace::default_boosted().enumerate_grid();
//! let result = pho(&grid, &factory, &PhoParams { n: 5, m: 2, k: 5, seed: 3 })?;
//! assert_eq!(result.fully_trained.len(), 10);
//! # Ok(())
//! # }
//! ```
//!
//! Module map:
//! - [`space`]: discrete search spaces and configurations
//! - [`data`]: CSV loading, one-hot encoding, seeded splits
//! - [`trainable`]: the incremental training contract and traces
//! - [`learners`]: boosted stumps, logistic SGD, analytic curves
//! - [`metrics`]: accuracy and ROC AUC
//! - [`predictor`]: early→final linear regression
//! - [`tuner`]: the PHO procedure and budget ledger
//! - [`baselines`]: random search and full pool evaluation
//! - [`stats`]: summaries and t-tests
//! - [`experiment`]: the trial harness behind the `pho` binary

pub mod baselines;
pub mod data;
pub mod experiment;
pub mod learners;
pub mod metrics;
pub mod predictor;
pub mod space;
pub mod stats;
pub mod trainable;
pub mod tuner;

pub use baselines::{evaluate_pool, random_search, PoolEntry};
pub use data::{split, Dataset, SplitPair, SyntheticSpec};
pub use metrics::{accuracy, auc_roc, MetricKind, ScoredLabels};
pub use predictor::{pearson, EarlyPredictor};
pub use space::{Configuration, HyperparamAxis, ParamValue, SearchSpace};
pub use stats::{summarize, t_test_two_tailed, Summary, TTestKind, TTestResult};
pub use trainable::{CostMode, Learner, LearnerFactory, TrainableSession, TrainingTrace};
pub use tuner::{pho, BudgetLedger, PhoParams, TuneResult};

/// Mixes a base seed with a stream number (SplitMix64 finalizer) so related
/// random streams stay independent.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
