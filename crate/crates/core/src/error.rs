use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a thermal series evaluation was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFailure {
    /// Row sums kept growing past the allowed number of terms.
    Divergent,
    /// The largest row sum is so big that rounding swamps the result.
    Cancellation,
    /// `max_s` rows were used without meeting the stopping rule.
    Exhausted,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("momentum index {k} lies outside the grid [{k_min}, {k_max}]")]
    OutsideGrid { k: i64, k_min: i64, k_max: i64 },

    #[error("dense eigendecomposition refused for {n_states} states (limit {limit})")]
    GridTooLarge { n_states: usize, limit: usize },

    #[error("thermal series did not converge ({reason:?}) after {terms} rows; last partial sum {partial_sum}")]
    SeriesNonConvergence {
        reason: SeriesFailure,
        terms: usize,
        partial_sum: f64,
    },

    #[error("steady-state population {p_ss} outside the attainable interval (1/2, 1)")]
    SteadyStateOutOfRange { p_ss: f64 },

    #[error(
        "data span {span} covers only {periods:.2} oscillation periods; at least {required} are needed (minimum duration {minimum_duration})"
    )]
    InsufficientSpan {
        span: f64,
        periods: f64,
        required: usize,
        minimum_duration: f64,
    },

    #[error("optimizer did not converge: {message} (bracket [{lo}, {hi}])")]
    NonConvergence { message: String, lo: f64, hi: f64 },

    #[error("invalid measurement set: {0}")]
    Measurement(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
