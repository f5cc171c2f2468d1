//! Domain types shared by every estimator.
//!
//! Order statistics use 1-based indices throughout: `x_(1) <= ... <= x_(n)`,
//! and the median is the *left* median `x_(l)` with `l = floor(n / 2)`. For odd
//! `n` this is not the middle element (`[1, 2, 3, 4, 5]` has left median 2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated, batch-ingested dataset together with its order statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    /// Builds a sample, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(idx));
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Sample { values, sorted })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `l = floor(n / 2)`, the 1-based index of the left median.
    pub fn ell(&self) -> usize {
        self.len() / 2
    }

    /// Values in input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// The order statistic `x_(i)` for `1 <= i <= n`, `None` otherwise.
    pub fn order_stat(&self, i: usize) -> Option<f64> {
        if i == 0 {
            None
        } else {
            self.sorted.get(i - 1).copied()
        }
    }

    /// Like [`Sample::order_stat`] but takes a signed index so callers can
    /// probe `l - k` without underflow.
    pub(crate) fn order_stat_signed(&self, i: isize) -> Option<f64> {
        usize::try_from(i).ok().and_then(|i| self.order_stat(i))
    }

    pub fn max_abs(&self) -> f64 {
        self.sorted[0].abs().max(self.sorted[self.len() - 1].abs())
    }
}

/// An `(epsilon, delta)` privacy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be finite and > 0, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid("delta", format!("must lie in (0, 1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `log(1.25 / delta)`, the recurring Gaussian-mechanism constant.
    pub fn log_gauss(&self) -> f64 {
        (1.25 / self.delta).ln()
    }
}

/// Failure level `tau` of a high-probability statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    tau: f64,
}

impl Confidence {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid("tau", format!("must lie in (0, 1), got {tau}")));
        }
        Ok(Confidence { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// The threshold constant
/// `C = 1 + (2 log(1.25/delta) + 2 sqrt(log(2/tau) log(1.25/delta))) / epsilon`.
///
/// Every eta calibration is tuned so that the breakdown statistic exceeds `C`
/// with probability at least `1 - tau/2`.
pub fn compute_c(budget: PrivacyBudget, conf: Confidence) -> f64 {
    let lg = budget.log_gauss();
    let lt = (2.0 / conf.tau()).ln();
    1.0 + (2.0 * lg + 2.0 * (lt * lg).sqrt()) / budget.epsilon()
}

/// Noise family used by a propose-test-release mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Laplace,
    Gaussian,
}

impl Variant {
    pub fn a_delta(self, delta: f64) -> f64 {
        match self {
            Variant::Laplace => 1.0,
            Variant::Gaussian => (2.0 * (1.25 / delta).ln()).sqrt(),
        }
    }

    pub fn b_delta(self, delta: f64) -> f64 {
        match self {
            Variant::Laplace => (2.0 / delta).ln(),
            Variant::Gaussian => 2.0 * (1.25 / delta).ln(),
        }
    }
}

/// Threshold `eta`, noise variant and the constants derived from the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PtrConfig {
    pub eta: f64,
    pub variant: Variant,
    pub a_delta: f64,
    pub b_delta: f64,
    pub c: f64,
    pub budget: PrivacyBudget,
}

impl PtrConfig {
    pub fn new(eta: f64, variant: Variant, budget: PrivacyBudget, conf: Confidence) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid("eta", format!("must be finite and > 0, got {eta}")));
        }
        let delta = budget.delta();
        Ok(PtrConfig {
            eta,
            variant,
            a_delta: variant.a_delta(delta),
            b_delta: variant.b_delta(delta),
            c: compute_c(budget, conf),
            budget,
        })
    }

    /// The test passes (a value is released) only when the noisy breakdown
    /// statistic strictly exceeds `1 + b_delta / epsilon`.
    pub fn no_reply_threshold(&self) -> f64 {
        1.0 + self.b_delta / self.budget.epsilon()
    }
}

/// Output of a propose-test-release run: a value or the no-reply symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReleaseOutcome {
    Value(f64),
    NoReply,
}

impl ReleaseOutcome {
    pub fn value(self) -> Option<f64> {
        match self {
            ReleaseOutcome::Value(v) => Some(v),
            ReleaseOutcome::NoReply => None,
        }
    }

    pub fn is_no_reply(self) -> bool {
        matches!(self, ReleaseOutcome::NoReply)
    }
}

impl Serialize for ReleaseOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ReleaseOutcome::Value(v) => s.serialize_f64(*v),
            ReleaseOutcome::NoReply => s.serialize_str("no_reply"),
        }
    }
}

/// Density lower bound `f >= L` on `[m - r, m + r]` around the population median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianProfile {
    pub r: f64,
    pub l: f64,
}

impl MedianProfile {
    pub fn new(r: f64, l: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid("r", format!("must be finite and > 0, got {r}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid("L", format!("must be finite and > 0, got {l}")));
        }
        // F(m) - F(m - r) >= rL and F(m) = 1/2.
        if r * l > 0.5 * (1.0 + 1e-12) {
            return Err(Error::invalid("r*L", format!("must be <= 1/2, got {}", r * l)));
        }
        Ok(MedianProfile { r, l })
    }

    /// The Gaussian choice `r = sqrt(2) sigma`, `L = 1/(e sqrt(2 pi) sigma)`,
    /// i.e. the density value at `m +- r`.
    pub fn normal(sigma: f64) -> Result<Self> {
        let l = 1.0 / (std::f64::consts::E * (2.0 * std::f64::consts::PI).sqrt() * sigma);
        Self::new(std::f64::consts::SQRT_2 * sigma, l)
    }
}

/// First three central moments: mean, standard deviation and
/// `rho = E[|X - mu|^3]^(1/3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentProfile {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl MomentProfile {
    pub fn new(mu: f64, sigma: f64, rho: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", "must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        // Lyapunov: E|X - mu|^3 >= sigma^3.
        if !(rho.is_finite() && rho >= sigma * (1.0 - 1e-12)) {
            return Err(Error::invalid("rho", format!("must be finite and >= sigma = {sigma}, got {rho}")));
        }
        Ok(MomentProfile { mu, sigma, rho })
    }

    /// `(rho / sigma)^3`, the normalized third absolute moment.
    pub fn rho_ratio_cubed(&self) -> f64 {
        (self.rho / self.sigma).powi(3)
    }
}

/// Block layout for the median-of-means estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomConfig {
    k: usize,
    block_size: usize,
    /// When set, observations are assigned to blocks after a seeded shuffle
    /// instead of in input order.
    pub shuffle_seed: Option<u64>,
}

impl MomConfig {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K", "must be >= 1"));
        }
        if k > n {
            return Err(Error::BlockCountExceedsSample { k, n });
        }
        Ok(MomConfig {
            k,
            block_size: n / k,
            shuffle_seed: None,
        })
    }

    pub fn with_shuffle(mut self, seed: u64) -> Self {
        self.shuffle_seed = Some(seed);
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `N = floor(n / K)`, the minimum block size.
    pub fn block_size(&self) -> usize {
        self.block_size
    }
}
