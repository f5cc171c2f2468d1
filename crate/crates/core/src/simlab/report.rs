//! Experiment summaries, exact binomial intervals and CSV/JSON emitters.

use std::io::Write;

use serde::Serialize;
use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

use crate::estimators::PreconditionCheck;

/// Two-sided confidence level used for every interval in a report.
pub const INTERVAL_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl RateEstimate {
    pub fn new(successes: usize, trials: usize) -> Self {
        let (lower, upper) = clopper_pearson(successes, trials, 1.0 - INTERVAL_LEVEL);
        RateEstimate {
            successes,
            trials,
            rate: successes as f64 / trials as f64,
            lower,
            upper,
        }
    }
}

/// Exact binomial interval for `x` successes in `n` trials at miscoverage `alpha`.
pub fn clopper_pearson(x: usize, n: usize, alpha: f64) -> (f64, f64) {
    assert!(n > 0 && x <= n);
    let (xf, nf) = (x as f64, n as f64);
    let lower = if x == 0 {
        0.0
    } else {
        Beta::new(xf, nf - xf + 1.0).expect("positive shapes").inverse_cdf(alpha / 2.0)
    };
    let upper = if x == n {
        1.0
    } else {
        Beta::new(xf + 1.0, nf - xf).expect("positive shapes").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

/// Empirical `level`-quantile of `errors` with a distribution-free interval
/// from binomial order-statistic ranks. Infinite entries (no reply) sort last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileEstimate {
    pub tau: f64,
    pub level: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl QuantileEstimate {
    /// `sorted` must be ascending.
    pub fn from_sorted(sorted: &[f64], tau: f64) -> Self {
        let n = sorted.len();
        assert!(n > 0);
        let level = 1.0 - tau;
        let at = |rank: u64| sorted[(rank.clamp(1, n as u64) - 1) as usize];
        let rank = (level * n as f64).ceil() as u64;
        let bin = Binomial::new(level, n as u64).expect("valid binomial");
        let alpha = 1.0 - INTERVAL_LEVEL;
        let lo_rank = bin.inverse_cdf(alpha / 2.0);
        let hi_rank = bin.inverse_cdf(1.0 - alpha / 2.0) + 1;
        QuantileEstimate {
            tau,
            level,
            value: at(rank),
            lower: at(lo_rank),
            upper: if hi_rank > n as u64 { f64::INFINITY } else { at(hi_rank) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub estimator: String,
    pub distribution: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    pub trials: usize,
    pub seed: u64,
    pub truth: f64,
    pub eta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub theoretical_bound: f64,
    /// Reply produced and within `theoretical_bound` of the truth.
    pub coverage: RateEstimate,
    pub noreply: RateEstimate,
    /// Quantiles of `|estimate - truth|`, with no reply counted as an infinite
    /// error (serialized as `null`).
    pub error_quantiles: Vec<QuantileEstimate>,
    pub precondition_checks: Vec<PreconditionCheck>,
}

impl ExperimentReport {
    pub fn coverage_rate(&self) -> f64 {
        self.coverage.rate
    }

    pub fn noreply_rate(&self) -> f64 {
        self.noreply.rate
    }

    pub fn quantile(&self, tau: f64) -> Option<f64> {
        self.error_quantiles.iter().find(|q| q.tau == tau).map(|q| q.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plot-ready rows `x, quantile_or_rate, lower, upper`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,quantile_or_rate,lower,upper")?;
        for (name, r) in [("coverage", &self.coverage), ("noreply", &self.noreply)] {
            writeln!(out, "{name},{},{},{}", r.rate, r.lower, r.upper)?;
        }
        for q in &self.error_quantiles {
            writeln!(out, "q{},{},{},{}", q.level, q.value, q.lower, q.upper)?;
        }
        Ok(())
    }
}
