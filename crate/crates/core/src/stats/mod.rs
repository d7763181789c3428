//! Chi-squared tests of filter usage, Pearson correlation matrices and
//! inter-rater agreement.

mod agreement;
mod chi2;
mod correlation;

use thiserror::Error;

pub use agreement::{interrater_agreement, AgreementReport, CategoryAgreement};
pub use chi2::{chi2_independence, chi2_upper_tail, ln_chi2_upper_tail, Chi2Result, ContingencyTable};
pub use correlation::{
    correlation_block, correlation_matrix, correlation_p_value, pearson_r, Correlation, CorrelationBlock,
    CorrelationMatrix,
};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{0}")]
    Invalid(String),
    #[error("{axis} {label:?} has a zero marginal total")]
    ZeroMarginal { axis: &'static str, label: String },
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("column {0:?} has zero variance")]
    ZeroVarianceColumn(String),
    #[error("no column named {0:?}")]
    UnknownColumn(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
