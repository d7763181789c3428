//! Bayesian logistic regression by random-walk Metropolis, with convergence
//! diagnostics, HPD intervals, Laplace-approximated Bayes factors and posterior
//! predictive checks, plus an IRLS maximum-likelihood logit for comparison.

mod bayes;
mod diagnostics;
mod logit;
mod mcmc;
mod summary;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::cohort::FeatureMatrix;

pub use bayes::{
    bayes_factor, log_marginal_laplace, posterior_predictive_pvalue, BayesFactorResult, JeffreysBand, PpcResult,
};
pub use diagnostics::{
    autocorrelation, gelman_rubin, geweke, hpd_interval, max_excluding_zero_level, mcse, GewekeResult,
    HPD_LEVEL_GRID,
};
pub use logit::{fit_logit_mle, log_likelihood, log_posterior, posterior_mode, FreqFit};
pub use mcmc::{run_metropolis, McmcChain, McmcConfig};
pub use summary::{summarize_posterior, write_draws_csv, HpdBand, ParamSummary, PosteriorSummary};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("response must be 0 or 1; row {row} is {value}")]
    Response { row: usize, value: f64 },
    #[error("both classes must be present")]
    SingleClass,
    #[error("design matrix is rank deficient at column {0:?}")]
    RankDeficient(String),
    #[error("{0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("too few samples: need {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("need at least two chains of equal length")]
    Chains,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mode search did not converge")]
    NoMode,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Design matrix (intercept column included), binary response and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitData {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub names: Vec<String>,
}

impl LogitData {
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, names: Vec<String>) -> Result<Self, InferenceError> {
        if x.nrows() != y.len() {
            return Err(InferenceError::Dimension(format!("{} rows but {} responses", x.nrows(), y.len())));
        }
        if x.ncols() != names.len() {
            return Err(InferenceError::Dimension(format!("{} columns but {} names", x.ncols(), names.len())));
        }
        if let Some((row, &value)) = y.iter().enumerate().find(|(_, v)| **v != 0.0 && **v != 1.0) {
            return Err(InferenceError::Response { row, value });
        }
        Ok(Self { x, y: DVector::from_vec(y), names })
    }

    /// Prepends an `intercept` column to the matrix's features.
    pub fn from_matrix(m: &FeatureMatrix) -> Self {
        let n = m.nrows();
        let x = DMatrix::from_fn(n, m.ncols() + 1, |i, j| if j == 0 { 1.0 } else { m.values[(i, j - 1)] });
        let mut names = vec!["intercept".to_string()];
        names.extend(m.names.iter().cloned());
        Self { x, y: DVector::from_iterator(n, m.targets.iter().map(|&t| f64::from(t))), names }
    }

    /// Intercept-only model on the same response.
    pub fn intercept_only(&self) -> Self {
        Self { x: DMatrix::from_element(self.nobs(), 1, 1.0), y: self.y.clone(), names: vec!["intercept".into()] }
    }

    pub fn nobs(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Normal prior `beta ~ N(b0, B0^-1)`, where `B0` is a precision.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitSpec {
    pub b0: DVector<f64>,
    pub precision: DMatrix<f64>,
}

/// Default prior precision per coefficient.
pub const DEFAULT_PRIOR_PRECISION: f64 = 1e-4;

impl LogitSpec {
    /// Zero-mean prior with diagonal precision `b0_precision`.
    pub fn diffuse(dim: usize, b0_precision: f64) -> Self {
        Self { b0: DVector::zeros(dim), precision: DMatrix::from_diagonal_element(dim, dim, b0_precision) }
    }

    pub fn default_for(dim: usize) -> Self {
        Self::diffuse(dim, DEFAULT_PRIOR_PRECISION)
    }

    pub fn dim(&self) -> usize {
        self.b0.len()
    }

    pub(crate) fn check(&self, dim: usize) -> Result<(), InferenceError> {
        if self.b0.len() != dim || self.precision.shape() != (dim, dim) {
            return Err(InferenceError::Dimension(format!(
                "prior is {}-dimensional but the design has {dim} columns",
                self.b0.len()
            )));
        }
        Ok(())
    }
}
