//! Additive-noise mechanisms and the propose-test-release (PTR) mechanism.

use crate::error::{Error, Result};
use crate::model::{PrivacyBudget, PtrConfig, ReleaseOutcome, Sample, Variant};
use crate::noise::Noise;
use crate::sensitivity::{breakdown_stat_median_with, BreakdownRule};

fn check_sensitivity(gs: f64) -> Result<()> {
    if gs.is_finite() && gs > 0.0 {
        Ok(())
    } else {
        Err(Error::InfiniteSensitivity(gs))
    }
}

/// Noise multiplier `sqrt(2 log(1.25/delta)) / epsilon` of the Gaussian mechanism.
pub fn gaussian_global_scale(budget: PrivacyBudget) -> f64 {
    (2.0 * budget.log_gauss()).sqrt() / budget.epsilon()
}

/// `value + (Z / epsilon) * gs` with `Z ~ Lap(1)`; `(epsilon, 0)`-DP.
pub fn laplace_global_mech(value: f64, gs: f64, budget: PrivacyBudget, noise: &mut impl Noise) -> Result<f64> {
    check_sensitivity(gs)?;
    Ok(value + noise.laplace() / budget.epsilon() * gs)
}

/// `value + sqrt(2 log(1.25/delta)) Z / epsilon * gs` with `Z ~ N(0, 1)`.
pub fn gaussian_global_mech(value: f64, gs: f64, budget: PrivacyBudget, noise: &mut impl Noise) -> Result<f64> {
    check_sensitivity(gs)?;
    Ok(value + gaussian_global_scale(budget) * noise.gaussian() * gs)
}

/// Smoothing parameter `epsilon / (2 log(1/delta))` for the Laplace smooth mechanism.
pub fn laplace_smooth_beta(budget: PrivacyBudget) -> f64 {
    budget.epsilon() / (2.0 * (1.0 / budget.delta()).ln())
}

/// Smoothing parameter `epsilon / (4 (1 + log(2/delta)))` for the Gaussian smooth mechanism.
pub fn gaussian_smooth_beta(budget: PrivacyBudget) -> f64 {
    budget.epsilon() / (4.0 * (1.0 + (2.0 / budget.delta()).ln()))
}

/// Noise multiplier `5 sqrt(2 log(2/delta)) / epsilon` of the Gaussian smooth mechanism.
pub fn gaussian_smooth_scale(budget: PrivacyBudget) -> f64 {
    5.0 * (2.0 * (2.0 / budget.delta()).ln()).sqrt() / budget.epsilon()
}

fn check_smooth(smooth_sens: f64, beta: f64, expected: f64) -> Result<()> {
    if !(smooth_sens.is_finite() && smooth_sens >= 0.0) {
        return Err(Error::InfiniteSensitivity(smooth_sens));
    }
    if (beta - expected).abs() > 1e-12 * expected {
        return Err(Error::BetaMismatch { got: beta, expected });
    }
    Ok(())
}

/// `h(x) + (2Z / epsilon) S`, where `S` must be the smooth sensitivity of `h`
/// at `x` evaluated at `beta = laplace_smooth_beta(budget)`.
pub fn laplace_smooth_mech(
    s: &Sample,
    h: impl Fn(&Sample) -> f64,
    smooth_sens: f64,
    beta: f64,
    budget: PrivacyBudget,
    noise: &mut impl Noise,
) -> Result<f64> {
    check_smooth(smooth_sens, beta, laplace_smooth_beta(budget))?;
    Ok(h(s) + 2.0 * noise.laplace() / budget.epsilon() * smooth_sens)
}

/// `h(x) + 5 sqrt(2 log(2/delta)) Z / epsilon * S`, with `S` evaluated at
/// `beta = gaussian_smooth_beta(budget)`.
pub fn gaussian_smooth_mech(
    s: &Sample,
    h: impl Fn(&Sample) -> f64,
    smooth_sens: f64,
    beta: f64,
    budget: PrivacyBudget,
    noise: &mut impl Noise,
) -> Result<f64> {
    check_smooth(smooth_sens, beta, gaussian_smooth_beta(budget))?;
    Ok(h(s) + gaussian_smooth_scale(budget) * noise.gaussian() * smooth_sens)
}

/// An estimator paired with its breakdown statistic.
///
/// `breakdown` must change by at most one between datasets that differ in a
/// single coordinate; the privacy of [`ptr_release`] rests on it.
pub trait PtrTarget {
    fn estimate(&self, s: &Sample) -> Result<f64>;
    fn breakdown(&self, s: &Sample, eta: f64) -> Result<usize>;
}

/// Left median tested with the window breakdown rule by default.
#[derive(Debug, Clone, Copy, Default)]
pub struct MedianTarget {
    pub rule: BreakdownRule,
}

impl PtrTarget for MedianTarget {
    fn estimate(&self, s: &Sample) -> Result<f64> {
        crate::estimators::empirical_median(s)
    }

    fn breakdown(&self, s: &Sample, eta: f64) -> Result<usize> {
        Ok(breakdown_stat_median_with(s, eta, self.rule).k_star)
    }
}

#[derive(Debug, Clone)]
pub struct PtrMechanism<T> {
    pub config: PtrConfig,
    pub target: T,
}

impl<T: PtrTarget> PtrMechanism<T> {
    pub fn new(config: PtrConfig, target: T) -> Self {
        PtrMechanism { config, target }
    }

    fn draw(&self, noise: &mut impl Noise) -> f64 {
        match self.config.variant {
            Variant::Laplace => noise.laplace(),
            Variant::Gaussian => noise.gaussian(),
        }
    }

    /// Applies the test and the payload noise to precomputed statistics.
    pub fn decide(&self, breakdown: usize, estimate: impl FnOnce() -> Result<f64>, z1: f64, z2: f64) -> Result<ReleaseOutcome> {
        let cfg = &self.config;
        let eps = cfg.budget.epsilon();
        let noisy_breakdown = breakdown as f64 + cfg.a_delta / eps * z1;
        if noisy_breakdown <= cfg.no_reply_threshold() {
            return Ok(ReleaseOutcome::NoReply);
        }
        Ok(ReleaseOutcome::Value(estimate()? + cfg.eta / eps * cfg.a_delta * z2))
    }

    pub fn release(&self, s: &Sample, noise: &mut impl Noise) -> Result<ReleaseOutcome> {
        ptr_release(self, s, noise)
    }
}

/// Propose-test-release: `A~ = A(x) + (a_delta/epsilon) Z1`; no reply when
/// `A~ <= 1 + b_delta/epsilon`, otherwise `theta(x) + (eta/epsilon) a_delta Z2`.
///
/// Both draws are consumed on every call, in the order `Z1, Z2`.
pub fn ptr_release<T: PtrTarget>(mech: &PtrMechanism<T>, s: &Sample, noise: &mut impl Noise) -> Result<ReleaseOutcome> {
    let z1 = mech.draw(noise);
    let z2 = mech.draw(noise);
    let a_hat = mech.target.breakdown(s, mech.config.eta)?;
    mech.decide(a_hat, || mech.target.estimate(s), z1, z2)
}
