//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    #[error("parameter `{name}` = {value} violates constraint {constraint}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Binomial threshold larger than the number of trials.
    #[error("threshold {threshold} exceeds trial count {trials}")]
    ThresholdExceedsTrials { threshold: u64, trials: u64 },

    /// An operation defined only for moderate prices was called outside
    /// that regime.
    #[error("price tau = {tau} is not moderate: requires {posterior_l} < tau < {posterior_h}")]
    NotModerate {
        tau: f64,
        posterior_l: f64,
        posterior_h: f64,
    },

    /// The operation applies to one mechanism only.
    #[error("operation requires the {required} mechanism")]
    WrongMechanism { required: &'static str },

    /// Strict-majority voting is undefined for even group sizes.
    #[error("voting correctness requires an odd group size, got {n}")]
    EvenVoters { n: u64 },

    /// The observed (psi, lambda, phi) triple is incompatible with the
    /// two-type mixture model.
    #[error("inconsistent mixture: {detail} (psi = {psi}, lambda = {lambda}, phi = {phi})")]
    InconsistentMixture {
        psi: f64,
        lambda: f64,
        phi: f64,
        detail: String,
    },

    /// The equilibrium root search exhausted its iteration budget.
    #[error(
        "equilibrium solver did not converge after {iterations} iterations; last bracket [{bracket_low}, {bracket_high}]"
    )]
    SolverNoConvergence {
        bracket_low: f64,
        bracket_high: f64,
        iterations: u32,
    },

    /// The regression design matrix has linearly dependent columns.
    #[error(
        "design matrix is rank deficient: column `{column}` is collinear with earlier columns"
    )]
    RankDeficient { column: String },

    /// A regression stratum required by the requested model is empty.
    #[error("no records in stratum: {0}")]
    EmptyStratum(String),

    /// The filtered outcome never varies, so the likelihood has no
    /// interior maximum.
    #[error(
        "outcome `{outcome}` takes a single value in the filtered records; logistic fit undefined"
    )]
    ConstantOutcome { outcome: String },

    /// A predictor must take exactly two levels for treatment coding.
    #[error("predictor `{predictor}` has {levels} distinct levels, expected 2")]
    BadPredictorLevels { predictor: String, levels: usize },

    /// A decision log row failed validation.
    #[error("invalid decision log at record {record}: {detail}")]
    InvalidLog { record: u64, detail: String },

    #[error("scenario is invalid: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::InvalidParam {
            name,
            value,
            constraint,
        }
    }

    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_domain(&self) -> bool {
        !matches!(
            self,
            Error::Csv(_) | Error::Io(_) | Error::SolverNoConvergence { .. }
        )
    }
}
