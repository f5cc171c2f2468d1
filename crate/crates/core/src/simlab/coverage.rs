//! Repeated-sampling coverage and no-reply experiments.
//!
//! Trial `t` draws its data from stream `2t` and its mechanism noise from
//! stream `2t + 1` of the master seed, so reports do not depend on how rayon
//! schedules trials.

use rayon::prelude::*;
use serde::Serialize;

use super::distributions::{generate, DistributionSpec};
use super::report::{ExperimentReport, QuantileEstimate, RateEstimate};
use crate::error::{Error, Result};
use crate::estimators::{
    dp_median, dp_mom, dp_mom_density, empirical_median, median_bound, BoundTerms, DpEstimateReport, MomOptions,
};
use crate::model::{compute_c, Confidence, PrivacyBudget, ReleaseOutcome, Sample};
use crate::noise::NoiseSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Median,
    Mom,
    MomDensity,
    /// Left median without noise; its bound is the statistical term alone.
    NonPrivateMedian,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Median => "median",
            EstimatorKind::Mom => "mom",
            EstimatorKind::MomDensity => "mom_density",
            EstimatorKind::NonPrivateMedian => "nonprivate_median",
        }
    }

    pub fn targets_mean(self) -> bool {
        matches!(self, EstimatorKind::Mom | EstimatorKind::MomDensity)
    }
}

/// Estimator choice plus everything needed to calibrate it.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorSetup {
    pub kind: EstimatorKind,
    pub k: Option<usize>,
    pub budget: PrivacyBudget,
    pub conf: Confidence,
    pub mom: MomOptions,
}

impl EstimatorSetup {
    pub fn new(kind: EstimatorKind, k: Option<usize>, budget: PrivacyBudget, conf: Confidence) -> Self {
        EstimatorSetup {
            kind,
            k,
            budget,
            conf,
            mom: MomOptions::default(),
        }
    }

    fn blocks(&self) -> Result<usize> {
        self.k.ok_or(Error::invalid("K", "required for median-of-means estimators"))
    }

    pub fn truth(&self, spec: &DistributionSpec) -> f64 {
        if self.kind.targets_mean() {
            spec.mean
        } else {
            spec.median
        }
    }

    pub fn run(&self, spec: &DistributionSpec, s: &Sample, noise: &mut NoiseSource) -> Result<DpEstimateReport> {
        let (budget, conf) = (self.budget, self.conf);
        match self.kind {
            EstimatorKind::Median => dp_median(s, spec.median_profile()?, budget, conf, noise),
            EstimatorKind::Mom => dp_mom(s, spec.moment_profile()?, self.blocks()?, budget, conf, &self.mom, noise),
            EstimatorKind::MomDensity => {
                dp_mom_density(s, spec.moment_profile()?, self.blocks()?, budget, conf, &self.mom, noise)
            }
            EstimatorKind::NonPrivateMedian => {
                let profile = spec.median_profile()?;
                let terms = BoundTerms {
                    privacy: 0.0,
                    ..median_bound(profile, s.len(), 0.0, budget, conf)
                };
                Ok(DpEstimateReport {
                    outcome: ReleaseOutcome::Value(empirical_median(s)?),
                    eta_used: 0.0,
                    c_used: compute_c(budget, conf),
                    precondition_checks: Vec::new(),
                    theoretical_bound: terms.total(),
                    bound_terms: terms,
                })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub setup: EstimatorSetup,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Error quantiles are reported at levels `1 - tau` for each entry.
    pub quantile_taus: Vec<f64>,
}

impl CoverageConfig {
    pub fn new(setup: EstimatorSetup, n: usize, trials: usize, seed: u64) -> Self {
        CoverageConfig {
            setup,
            n,
            trials,
            seed,
            quantile_taus: vec![0.5, 0.1, 0.05, 0.01],
        }
    }
}

pub(crate) struct TrialOutcome {
    pub error: f64,
    pub report: DpEstimateReport,
}

pub(crate) fn run_trials(
    spec: &DistributionSpec,
    setup: &EstimatorSetup,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    let truth = setup.truth(spec);
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = generate(spec, n, &mut NoiseSource::new(seed, 2 * t))?;
            let report = setup.run(spec, &s, &mut NoiseSource::new(seed, 2 * t + 1))?;
            let error = match report.outcome {
                ReleaseOutcome::Value(v) => (v - truth).abs(),
                ReleaseOutcome::NoReply => f64::INFINITY,
            };
            Ok(TrialOutcome { error, report })
        })
        .collect()
}

pub(crate) fn sorted_errors(outcomes: &[TrialOutcome]) -> Vec<f64> {
    let mut errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
    errors.sort_by(f64::total_cmp);
    errors
}

/// Runs `trials` independent replications and summarizes coverage of the
/// theoretical bound, the no-reply rate and error quantiles.
pub fn run_coverage(spec: &DistributionSpec, cfg: &CoverageConfig) -> Result<ExperimentReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let setup = &cfg.setup;
    let outcomes = run_trials(spec, setup, cfg.n, cfg.trials, cfg.seed)?;
    let first = &outcomes[0].report;
    let bound = first.theoretical_bound;
    let covered = outcomes.iter().filter(|o| o.error <= bound).count();
    let noreply = outcomes.iter().filter(|o| o.report.outcome.is_no_reply()).count();
    let errors = sorted_errors(&outcomes);
    Ok(ExperimentReport {
        estimator: setup.kind.name().to_string(),
        distribution: spec.name(),
        n: cfg.n,
        k: setup.k.filter(|_| setup.kind.targets_mean()),
        epsilon: setup.budget.epsilon(),
        delta: setup.budget.delta(),
        tau: setup.conf.tau(),
        trials: cfg.trials,
        seed: cfg.seed,
        truth: setup.truth(spec),
        eta: first.eta_used,
        c: first.c_used,
        theoretical_bound: bound,
        coverage: RateEstimate::new(covered, cfg.trials),
        noreply: RateEstimate::new(noreply, cfg.trials),
        error_quantiles: cfg
            .quantile_taus
            .iter()
            .map(|&tau| QuantileEstimate::from_sorted(&errors, tau))
            .collect(),
        precondition_checks: first.precondition_checks.clone(),
    })
}
