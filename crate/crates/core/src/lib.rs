//! Screening for depression from posted photographs.
//!
//! The crate covers the whole analysis chain:
//!
//! - [`imaging`]: mean hue/saturation/brightness per photo and Haar-cascade face counts.
//! - [`cohort`]: participants, posts and ratings; admission rules; per-person per-day
//!   aggregation; feature matrices; a seeded synthetic cohort generator.
//! - [`inference`]: Bayesian logistic regression by random-walk Metropolis, convergence
//!   diagnostics, HPD intervals, Laplace marginal likelihoods and Bayes factors,
//!   posterior predictive checks, and a maximum-likelihood logit for comparison.
//! - [`forest`]: a random forest classifier with stratified cross-validated grid search
//!   and confusion-table metrics.
//! - [`stats`]: chi-squared independence tests, Pearson correlation matrices and
//!   inter-rater agreement.
//! - [`pipeline`]: the file-based pipeline behind the `depscreen` binary.

pub mod cohort;
pub mod forest;
pub mod imaging;
pub mod inference;
pub mod pipeline;
pub mod stats;

use serde::{Deserialize, Serialize};

/// Participant group. Healthy is class 0, depressed is class 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Depressed,
    Healthy,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::Depressed => "Depressed",
            Group::Healthy => "Healthy",
        }
    }

    /// Binary target: 1 for depressed, 0 for healthy.
    pub fn target(self) -> u8 {
        match self {
            Group::Depressed => 1,
            Group::Healthy => 0,
        }
    }
}
