//! Calibrated private location estimators: the left median and median of
//! means, each released through Gaussian PTR with a threshold `eta` chosen so
//! that the breakdown statistic clears `C` with probability `1 - tau/2`.

use std::f64::consts::{E, SQRT_2};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{MedianTarget, PtrMechanism, PtrTarget};
use crate::model::{
    compute_c, Confidence, MedianProfile, MomConfig, MomentProfile, PrivacyBudget, PtrConfig, ReleaseOutcome,
    Sample, Variant,
};
use crate::noise::Noise;
use crate::sensitivity::{breakdown_stat_median_with, BreakdownRule};

/// Default multiplier `c` in `eta = c * sigma * sqrt(K / n)` for the moment-only
/// median of means.
pub const MOM_ETA_CONSTANT: f64 = 2.0 * SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreconditionCheck {
    pub name: String,
    pub satisfied: bool,
    pub actual: f64,
    pub required: f64,
    /// `actual - required`; negative when the check fails.
    pub margin: f64,
}

impl PreconditionCheck {
    fn at_least(name: impl Into<String>, actual: f64, required: f64) -> Self {
        PreconditionCheck {
            name: name.into(),
            satisfied: actual >= required,
            actual,
            required,
            margin: actual - required,
        }
    }
}

/// Additive pieces of a high-probability error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundTerms {
    /// Deviation of the non-private estimator.
    pub statistical: f64,
    /// Bias of the median of block means (zero for the plain median).
    pub berry_esseen: f64,
    /// `(2 eta / epsilon) sqrt(log(2/tau) log(1.25/delta))`, the cost of the payload noise.
    pub privacy: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.statistical + self.berry_esseen + self.privacy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpEstimateReport {
    pub outcome: ReleaseOutcome,
    pub eta_used: f64,
    #[serde(rename = "C_used")]
    pub c_used: f64,
    pub precondition_checks: Vec<PreconditionCheck>,
    /// Error bound holding with probability `1 - 2 tau`.
    pub theoretical_bound: f64,
    pub bound_terms: BoundTerms,
}

impl DpEstimateReport {
    pub fn all_checks_pass(&self) -> bool {
        self.precondition_checks.iter().all(|c| c.satisfied)
    }
}

/// Whether the moment condition `n >= c (rho/sigma)^6 K` aborts the estimate or
/// is only recorded in the report. The block-count conditions that `eta`
/// depends on are always enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    #[default]
    Enforce,
    Report,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomOptions {
    pub eta_constant: f64,
    pub shuffle_seed: Option<u64>,
    pub moment_condition: CheckMode,
}

impl Default for MomOptions {
    fn default() -> Self {
        MomOptions {
            eta_constant: MOM_ETA_CONSTANT,
            shuffle_seed: None,
            moment_condition: CheckMode::Enforce,
        }
    }
}

fn privacy_term(eta: f64, budget: PrivacyBudget, conf: Confidence) -> f64 {
    2.0 * eta / budget.epsilon() * ((2.0 / conf.tau()).ln() * budget.log_gauss()).sqrt()
}

/// `x_(l)` with `l = floor(n/2)`.
pub fn empirical_median(s: &Sample) -> Result<f64> {
    s.order_stat(s.ell()).ok_or(Error::SampleTooSmall {
        n: s.len(),
        required: 2,
        what: "the left median",
    })
}

fn median_thresholds(profile: MedianProfile, c: f64, tau: f64) -> (f64, f64) {
    let rl = profile.r * profile.l;
    (2.0 * c.ceil() / rl, 2.0 * (8.0 / tau).ln() / (rl * rl))
}

/// `eta = 4C/(Ln) + 4 log(4/tau)/(3Ln)`, valid once
/// `n >= max(2 ceil(C)/(rL), 2 log(8/tau)/(rL)^2)`.
pub fn median_eta(profile: MedianProfile, n: usize, budget: PrivacyBudget, conf: Confidence) -> Result<f64> {
    let c = compute_c(budget, conf);
    let (bound_c, bound_tau) = median_thresholds(profile, c, conf.tau());
    let required = bound_c.max(bound_tau);
    if (n as f64) < required {
        return Err(Error::SampleSizeBelowMedianThreshold {
            n,
            required: required.ceil() as usize,
            bound_c,
            bound_tau,
        });
    }
    let ln = profile.l * n as f64;
    Ok(4.0 * c / ln + 4.0 * (4.0 / conf.tau()).ln() / (3.0 * ln))
}

/// `sqrt(log(2/tau) / (2 n L^2)) + (2 eta / epsilon) sqrt(log(2/tau) log(1.25/delta))`.
pub fn median_bound(profile: MedianProfile, n: usize, eta: f64, budget: PrivacyBudget, conf: Confidence) -> BoundTerms {
    let l = profile.l;
    BoundTerms {
        statistical: ((2.0 / conf.tau()).ln() / (2.0 * n as f64 * l * l)).sqrt(),
        berry_esseen: 0.0,
        privacy: privacy_term(eta, budget, conf),
    }
}

/// Private left median via Gaussian PTR. Runs in `O(n log n)` including the sort
/// done when the [`Sample`] was built.
pub fn dp_median(
    s: &Sample,
    profile: MedianProfile,
    budget: PrivacyBudget,
    conf: Confidence,
    noise: &mut impl Noise,
) -> Result<DpEstimateReport> {
    let n = s.len();
    let eta = median_eta(profile, n, budget, conf)?;
    let cfg = PtrConfig::new(eta, Variant::Gaussian, budget, conf)?;
    let (bound_c, bound_tau) = median_thresholds(profile, cfg.c, conf.tau());
    let rl = profile.r * profile.l;
    let checks = vec![
        PreconditionCheck::at_least("n >= 2*ceil(C)/(rL)", n as f64, bound_c),
        PreconditionCheck::at_least("n >= 2*log(8/tau)/(rL)^2", n as f64, bound_tau),
        PreconditionCheck::at_least(
            "tau >= 2*exp(-2*n*(rL)^2)",
            conf.tau(),
            2.0 * (-2.0 * n as f64 * rl * rl).exp(),
        ),
    ];
    let mech = PtrMechanism::new(cfg, MedianTarget::default());
    let outcome = mech.release(s, noise)?;
    let terms = median_bound(profile, n, eta, budget, conf);
    Ok(DpEstimateReport {
        outcome,
        eta_used: eta,
        c_used: cfg.c,
        precondition_checks: checks,
        theoretical_bound: terms.total(),
        bound_terms: terms,
    })
}

/// Means of `K` disjoint blocks. Blocks follow input order (or a seeded
/// permutation of it); the first `n mod K` blocks hold one extra point.
pub fn block_means(s: &Sample, cfg: &MomConfig) -> Result<Vec<f64>> {
    let n = s.len();
    let k = cfg.k();
    if k > n {
        return Err(Error::BlockCountExceedsSample { k, n });
    }
    let shuffled;
    let values: &[f64] = match cfg.shuffle_seed {
        Some(seed) => {
            let mut v = s.values().to_vec();
            v.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
            shuffled = v;
            &shuffled
        }
        None => s.values(),
    };
    let base = n / k;
    let extra = n % k;
    let mut means = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let len = base + usize::from(j < extra);
        let block = &values[start..start + len];
        means.push(block.iter().sum::<f64>() / len as f64);
        start += len;
    }
    Ok(means)
}

fn left_median_index(k: usize) -> usize {
    (k / 2).max(1)
}

/// Left median of the block means. `K = 1` gives the sample mean and `K = n`
/// the left median of the data.
pub fn mom_point_estimate(s: &Sample, cfg: &MomConfig) -> Result<f64> {
    let mut means = block_means(s, cfg)?;
    let idx = left_median_index(means.len()) - 1;
    let (_, m, _) = means.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*m)
}

/// Median of means with the breakdown statistic taken over the block means:
/// one raw change moves exactly one block mean, arbitrarily far.
#[derive(Debug, Clone, Copy)]
pub struct MomTarget {
    pub config: MomConfig,
    pub rule: BreakdownRule,
}

impl MomTarget {
    pub fn new(config: MomConfig) -> Self {
        MomTarget {
            config,
            rule: BreakdownRule::default(),
        }
    }
}

impl PtrTarget for MomTarget {
    fn estimate(&self, s: &Sample) -> Result<f64> {
        mom_point_estimate(s, &self.config)
    }

    fn breakdown(&self, s: &Sample, eta: f64) -> Result<usize> {
        let means = Sample::new(block_means(s, &self.config)?)?;
        Ok(breakdown_stat_median_with(&means, eta, self.rule).k_star)
    }
}

/// `max(8C, 32 log(4/tau))`, which dominates every block-count condition used
/// by the median-of-means calibrations.
pub fn mom_block_threshold(budget: PrivacyBudget, conf: Confidence) -> (f64, f64) {
    (8.0 * compute_c(budget, conf), 32.0 * (4.0 / conf.tau()).ln())
}

fn check_block_count(k: usize, budget: PrivacyBudget, conf: Confidence) -> Result<()> {
    let (bound_c, bound_tau) = mom_block_threshold(budget, conf);
    let required = bound_c.max(bound_tau);
    if (k as f64) < required {
        return Err(Error::BlockCountBelowThreshold {
            k,
            required,
            bound_c,
            bound_tau,
        });
    }
    Ok(())
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("K", "must be >= 1"));
    }
    if k > n {
        return Err(Error::BlockCountExceedsSample { k, n });
    }
    Ok(())
}

/// `eta = 2 sqrt(2) sigma sqrt(K/n)`; requires `K >= max(8C, 32 log(4/tau))`.
pub fn mom_eta(profile: MomentProfile, n: usize, k: usize, budget: PrivacyBudget, conf: Confidence) -> Result<f64> {
    mom_eta_with_constant(profile, n, k, budget, conf, MOM_ETA_CONSTANT)
}

/// [`mom_eta`] with the multiplier exposed (e.g. 8 for the conservative choice).
pub fn mom_eta_with_constant(
    profile: MomentProfile,
    n: usize,
    k: usize,
    budget: PrivacyBudget,
    conf: Confidence,
    constant: f64,
) -> Result<f64> {
    check_sizes(n, k)?;
    check_block_count(k, budget, conf)?;
    if !(constant.is_finite() && constant > 0.0) {
        return Err(Error::invalid("eta_constant", format!("must be finite and > 0, got {constant}")));
    }
    Ok(constant * profile.sigma * (k as f64 / n as f64).sqrt())
}

/// `sigma (3 sqrt(log(4/tau)/(2n)) + 1.43 K rho^3/(sigma^3 n)) + (2 eta/epsilon) sqrt(log(2/tau) log(1.25/delta))`.
///
/// With the default `eta` the privacy term equals
/// `4 sigma sqrt(2 K log(2/tau) log(1.25/delta)) / (epsilon sqrt(n))`.
pub fn mom_bound(profile: MomentProfile, n: usize, k: usize, eta: f64, budget: PrivacyBudget, conf: Confidence) -> BoundTerms {
    let nf = n as f64;
    BoundTerms {
        statistical: 3.0 * profile.sigma * ((4.0 / conf.tau()).ln() / (2.0 * nf)).sqrt(),
        berry_esseen: 1.43 * k as f64 * profile.rho.powi(3) / (profile.sigma.powi(2) * nf),
        privacy: privacy_term(eta, budget, conf),
    }
}

fn moment_check(profile: MomentProfile, n: usize, k: usize, factor: f64) -> PreconditionCheck {
    let required = factor * profile.rho_ratio_cubed().powi(2) * k as f64;
    PreconditionCheck::at_least(format!("n >= {factor}*(rho/sigma)^6*K"), n as f64, required)
}

fn apply_mode(check: &PreconditionCheck, n: usize, factor: f64, mode: CheckMode) -> Result<()> {
    if !check.satisfied && mode == CheckMode::Enforce {
        return Err(Error::SampleSizeBelowMomentThreshold {
            n,
            factor,
            required: check.required,
        });
    }
    Ok(())
}

fn block_checks(k: usize, n: usize, budget: PrivacyBudget, conf: Confidence) -> Vec<PreconditionCheck> {
    let (bound_c, bound_tau) = mom_block_threshold(budget, conf);
    vec![
        PreconditionCheck::at_least("K <= n", n as f64, k as f64),
        PreconditionCheck::at_least("K >= 8C", k as f64, bound_c),
        PreconditionCheck::at_least("K >= 32*log(4/tau)", k as f64, bound_tau),
    ]
}

fn mom_config(n: usize, k: usize, opts: &MomOptions) -> Result<MomConfig> {
    let cfg = MomConfig::new(k, n)?;
    Ok(match opts.shuffle_seed {
        Some(seed) => cfg.with_shuffle(seed),
        None => cfg,
    })
}

/// Private median of means under three finite moments. `O(n)` for the block
/// means plus `O(K log K)` for the test statistic.
pub fn dp_mom(
    s: &Sample,
    profile: MomentProfile,
    k: usize,
    budget: PrivacyBudget,
    conf: Confidence,
    opts: &MomOptions,
    noise: &mut impl Noise,
) -> Result<DpEstimateReport> {
    let n = s.len();
    let eta = mom_eta_with_constant(profile, n, k, budget, conf, opts.eta_constant)?;
    let cfg = PtrConfig::new(eta, Variant::Gaussian, budget, conf)?;
    let mut checks = block_checks(k, n, budget, conf);
    checks.push(PreconditionCheck::at_least("K >= 4C", k as f64, 4.0 * cfg.c));
    let moments = moment_check(profile, n, k, 33.0);
    apply_mode(&moments, n, 33.0, opts.moment_condition)?;
    checks.push(moments);

    let mech = PtrMechanism::new(cfg, MomTarget::new(mom_config(n, k, opts)?));
    let outcome = mech.release(s, noise)?;
    let terms = mom_bound(profile, n, k, eta, budget, conf);
    Ok(DpEstimateReport {
        outcome,
        eta_used: eta,
        c_used: cfg.c,
        precondition_checks: checks,
        theoretical_bound: terms.total(),
        bound_terms: terms,
    })
}

/// `1 / L_r` with `r = 2`, where `L_r = e^{-r^2/2} / sqrt(2 pi)` lower-bounds the
/// standard normal density on `[-r, r]`.
const INV_L2: f64 = E * E * 2.506_628_274_631_000_5;

fn mom_density_eta_unchecked(profile: MomentProfile, n: usize, k: usize, c: f64, tau: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let spread = profile.rho_ratio_cubed() * kf / nf + (2.0 * c + (2.0 / 3.0) * (4.0 / tau).ln()) / (kf * nf).sqrt();
    2.0 * INV_L2 * profile.sigma * spread
}

fn check_integer_blocks(n: usize, k: usize) -> Result<()> {
    let remainder = n % k;
    if remainder != 0 {
        return Err(Error::NonIntegerBlockSize { n, k, remainder });
    }
    Ok(())
}

/// `eta_0 = 2 e^2 sigma sqrt(2 pi) (rho^3 K/(sigma^3 n) + (2C + (2/3) log(4/tau))/sqrt(K n))`
/// for data with a density. Requires `n/K` integer, `K >= max(8C, 32 log(4/tau))`
/// and `n >= 10 (rho/sigma)^6 K`.
pub fn mom_density_eta(profile: MomentProfile, n: usize, k: usize, budget: PrivacyBudget, conf: Confidence) -> Result<f64> {
    check_sizes(n, k)?;
    check_integer_blocks(n, k)?;
    check_block_count(k, budget, conf)?;
    let m = moment_check(profile, n, k, 10.0);
    apply_mode(&m, n, 10.0, CheckMode::Enforce)?;
    Ok(mom_density_eta_unchecked(profile, n, k, compute_c(budget, conf), conf.tau()))
}

/// Sub-Gaussian term `3 sqrt(sigma^2 log(4/tau)/(2n))`, bias `1.43 rho^3 K/(sigma^2 n)`,
/// and the payload-noise term `(2 eta/epsilon) sqrt(log(2/tau) log(1.25/delta))`.
pub fn mom_density_bound(profile: MomentProfile, n: usize, k: usize, eta: f64, budget: PrivacyBudget, conf: Confidence) -> BoundTerms {
    mom_bound(profile, n, k, eta, budget, conf)
}

/// Private median of means for data with a density, using the sharper `eta_0`.
pub fn dp_mom_density(
    s: &Sample,
    profile: MomentProfile,
    k: usize,
    budget: PrivacyBudget,
    conf: Confidence,
    opts: &MomOptions,
    noise: &mut impl Noise,
) -> Result<DpEstimateReport> {
    let n = s.len();
    check_sizes(n, k)?;
    check_integer_blocks(n, k)?;
    check_block_count(k, budget, conf)?;
    let moments = moment_check(profile, n, k, 10.0);
    apply_mode(&moments, n, 10.0, opts.moment_condition)?;
    let c = compute_c(budget, conf);
    let eta = mom_density_eta_unchecked(profile, n, k, c, conf.tau());
    let cfg = PtrConfig::new(eta, Variant::Gaussian, budget, conf)?;
    let mut checks = block_checks(k, n, budget, conf);
    checks.push(PreconditionCheck::at_least("n mod K == 0", 0.0, (n % k) as f64));
    checks.push(moments);

    let mech = PtrMechanism::new(cfg, MomTarget::new(mom_config(n, k, opts)?));
    let outcome = mech.release(s, noise)?;
    let terms = mom_density_bound(profile, n, k, eta, budget, conf);
    Ok(DpEstimateReport {
        outcome,
        eta_used: eta,
        c_used: cfg.c,
        precondition_checks: checks,
        theoretical_bound: terms.total(),
        bound_terms: terms,
    })
}
