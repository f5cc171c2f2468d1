use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input sample is empty")]
    EmptyInput,

    /// Index is 0-based into the raw input.
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sample of size {n} is too small: {what} requires n >= {required}")]
    SampleTooSmall {
        n: usize,
        required: usize,
        what: &'static str,
    },

    #[error("sample of size {n} exceeds the brute-force oracle limit of {max}")]
    SampleTooLargeForOracle { n: usize, max: usize },

    #[error("value {value} at index {index} lies outside the domain [{lo}, {hi}]")]
    ValueOutOfDomain {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("sensitivity must be finite and positive, got {0}")]
    InfiniteSensitivity(f64),

    #[error("smoothing parameter beta = {got} does not match the required {expected}")]
    BetaMismatch { got: f64, expected: f64 },

    #[error(
        "n = {n} is below the median calibration threshold: need n >= {required} \
         (2*ceil(C)/(rL) = {bound_c:.1}, 2*log(8/tau)/(rL)^2 = {bound_tau:.1})"
    )]
    SampleSizeBelowMedianThreshold {
        n: usize,
        required: usize,
        bound_c: f64,
        bound_tau: f64,
    },

    #[error("block count K = {k} exceeds sample size n = {n}")]
    BlockCountExceedsSample { k: usize, n: usize },

    #[error(
        "block count K = {k} is below the calibration threshold: need K >= {required:.1} \
         (8C = {bound_c:.1}, 32*log(4/tau) = {bound_tau:.1})"
    )]
    BlockCountBelowThreshold {
        k: usize,
        required: f64,
        bound_c: f64,
        bound_tau: f64,
    },

    #[error(
        "n = {n} is below the moment condition n >= {factor}*(rho/sigma)^6*K = {required:.0}"
    )]
    SampleSizeBelowMomentThreshold { n: usize, factor: f64, required: f64 },

    #[error(
        "n = {n} is not a multiple of K = {k}; drop the last {remainder} points before estimating"
    )]
    NonIntegerBlockSize { n: usize, k: usize, remainder: usize },

    #[error("unsupported distribution parameters: {0}")]
    UnsupportedFamilyParameters(String),

    #[error("datasets are not neighbors: they differ in {differing} coordinates (lengths {len_x}, {len_x_prime})")]
    NotNeighbors {
        differing: usize,
        len_x: usize,
        len_x_prime: usize,
    },

    #[error("audit needs at least {required} trials, got {got}")]
    InsufficientTrials { got: usize, required: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors raised because a calibration's sample-size or block-count
    /// condition does not hold (as opposed to malformed input).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::SampleTooSmall { .. }
                | Error::SampleSizeBelowMedianThreshold { .. }
                | Error::BlockCountExceedsSample { .. }
                | Error::BlockCountBelowThreshold { .. }
                | Error::SampleSizeBelowMomentThreshold { .. }
                | Error::NonIntegerBlockSize { .. }
        )
    }
}
