//! Heuristic empirical privacy-loss audit on a pair of neighboring datasets.
//!
//! Output histograms over fixed bins (plus a no-reply bin) are estimated for
//! both datasets and the largest log-ratio over well-populated bins is
//! reported. This is a lower-bound diagnostic, not a proof of privacy.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ReleaseOutcome, Sample};
use crate::noise::NoiseSource;

/// Trials below this are rejected; the per-bin floor is `1 / trials`.
pub const MIN_AUDIT_TRIALS: usize = 1000;
/// Bins with fewer hits than this in either histogram are ignored.
pub const MIN_BIN_COUNT: usize = 25;

#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Ascending interior edges; `m` edges make `m + 1` numeric bins.
    pub edges: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub delta_target: f64,
    pub bootstrap: usize,
}

impl AuditConfig {
    pub fn new(edges: Vec<f64>, trials: usize, seed: u64, delta_target: f64) -> Self {
        AuditConfig {
            edges,
            trials,
            seed,
            delta_target,
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub epsilon_hat: f64,
    /// 2.5% and 97.5% bootstrap percentiles of `epsilon_hat`.
    pub bootstrap_lower: f64,
    pub bootstrap_upper: f64,
    pub trials: usize,
    pub delta_target: f64,
    /// Counts per bin, the last entry being no-reply.
    pub counts_x: Vec<usize>,
    pub counts_x_prime: Vec<usize>,
    pub bins_used: usize,
    pub seed: u64,
}

/// Number of coordinates at which two equal-length datasets differ, in input order.
pub fn hamming_distance(x: &Sample, y: &Sample) -> Option<usize> {
    (x.len() == y.len()).then(|| x.values().iter().zip(y.values()).filter(|(a, b)| a != b).count())
}

fn bin_of(edges: &[f64], out: ReleaseOutcome) -> usize {
    match out {
        ReleaseOutcome::NoReply => edges.len() + 1,
        ReleaseOutcome::Value(v) => edges.partition_point(|&e| e <= v),
    }
}

fn one_sided(p: &[usize], q: &[usize], trials: usize, delta: f64) -> f64 {
    let t = trials as f64;
    let floor = 1.0 / t;
    p.iter()
        .zip(q)
        .filter(|(&a, &b)| a >= MIN_BIN_COUNT && b >= MIN_BIN_COUNT)
        .map(|(&a, &b)| ((a as f64 / t - delta).max(floor) / (b as f64 / t)).ln())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Symmetrized estimate; `-inf` when no bin is populated enough in both histograms.
pub fn epsilon_hat(p: &[usize], q: &[usize], trials: usize, delta: f64) -> f64 {
    one_sided(p, q, trials, delta).max(one_sided(q, p, trials, delta))
}

fn resample(bins: &[usize], trials: usize, nbins: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut counts = vec![0; nbins];
    for _ in 0..trials {
        counts[bins[rng.random_range(0..bins.len())]] += 1;
    }
    counts
}

/// Runs `mechanism` `trials` times on each dataset. Trial `t` uses noise
/// stream `2t` for `x` and `2t + 1` for `x_prime`.
pub fn dp_audit<M>(mechanism: M, x: &Sample, x_prime: &Sample, cfg: &AuditConfig) -> Result<AuditReport>
where
    M: Fn(&Sample, &mut NoiseSource) -> Result<ReleaseOutcome>,
{
    match hamming_distance(x, x_prime) {
        Some(d) if d <= 1 => {}
        d => {
            return Err(Error::NotNeighbors {
                differing: d.unwrap_or(usize::MAX),
                len_x: x.len(),
                len_x_prime: x_prime.len(),
            })
        }
    }
    if cfg.trials < MIN_AUDIT_TRIALS {
        return Err(Error::InsufficientTrials {
            got: cfg.trials,
            required: MIN_AUDIT_TRIALS,
        });
    }
    if !cfg.edges.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("edges", "must be strictly increasing"));
    }
    let nbins = cfg.edges.len() + 2;
    let mut bins_x = Vec::with_capacity(cfg.trials);
    let mut bins_y = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials as u64 {
        bins_x.push(bin_of(&cfg.edges, mechanism(x, &mut NoiseSource::new(cfg.seed, 2 * t))?));
        bins_y.push(bin_of(&cfg.edges, mechanism(x_prime, &mut NoiseSource::new(cfg.seed, 2 * t + 1))?));
    }
    let count = |bins: &[usize]| {
        let mut c = vec![0; nbins];
        for &b in bins {
            c[b] += 1;
        }
        c
    };
    let (cx, cy) = (count(&bins_x), count(&bins_y));
    let estimate = epsilon_hat(&cx, &cy, cfg.trials, cfg.delta_target);

    let mut boot_rng = NoiseSource::new(cfg.seed, u64::MAX);
    let mut boots: Vec<f64> = (0..cfg.bootstrap)
        .map(|_| {
            let rx = resample(&bins_x, cfg.trials, nbins, boot_rng.rng());
            let ry = resample(&bins_y, cfg.trials, nbins, boot_rng.rng());
            epsilon_hat(&rx, &ry, cfg.trials, cfg.delta_target)
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let pct = |p: f64| {
        if boots.is_empty() {
            estimate
        } else {
            boots[((p * boots.len() as f64) as usize).min(boots.len() - 1)]
        }
    };
    let bins_used = cx
        .iter()
        .zip(&cy)
        .filter(|(&a, &b)| a >= MIN_BIN_COUNT && b >= MIN_BIN_COUNT)
        .count();
    Ok(AuditReport {
        epsilon_hat: estimate,
        bootstrap_lower: pct(0.025),
        bootstrap_upper: pct(0.975),
        trials: cfg.trials,
        delta_target: cfg.delta_target,
        counts_x: cx,
        counts_x_prime: cy,
        bins_used,
        seed: cfg.seed,
    })
}

/// Shipped neighbor pairs with matching bin edges.
pub mod presets {
    use super::*;
    use crate::mechanisms::{laplace_global_mech, MedianTarget, PtrMechanism};
    use crate::model::{Confidence, PrivacyBudget, PtrConfig, Variant};

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
    #[serde(rename_all = "kebab-case")]
    pub enum Preset {
        /// Laplace mechanism on a clamped sum, `[0,0,0,0]` vs `[1,0,0,0]`.
        LaplaceSum,
        /// Gaussian PTR median on data near the no-reply threshold.
        PtrGaussian,
        /// Laplace PTR median on the same neighbors.
        PtrLaplace,
    }

    impl Preset {
        pub fn name(self) -> &'static str {
            match self {
                Preset::LaplaceSum => "laplace-sum",
                Preset::PtrGaussian => "ptr-gaussian",
                Preset::PtrLaplace => "ptr-laplace",
            }
        }

        /// `(epsilon, delta)` the mechanism is proven to satisfy. The Gaussian
        /// PTR guarantee composes the test and the release.
        pub fn guarantee(self, budget: PrivacyBudget) -> (f64, f64) {
            let (eps, delta) = (budget.epsilon(), budget.delta());
            match self {
                Preset::LaplaceSum => (eps, 0.0),
                Preset::PtrGaussian => (2.0 * eps, 2.0 * eps.exp() * delta + delta * delta),
                Preset::PtrLaplace => (2.0 * eps, delta),
            }
        }
    }

    #[derive(Debug, Clone, PartialEq, Serialize)]
    pub struct PresetAudit {
        pub preset: Preset,
        pub guarantee: (f64, f64),
        pub report: AuditReport,
    }

    fn clamped(s: &Sample) -> f64 {
        s.values().iter().map(|v| v.clamp(0.0, 1.0)).sum()
    }

    /// Audits a preset with the additive slack set to its proven `delta`.
    pub fn run_preset(preset: Preset, budget: PrivacyBudget, trials: usize, seed: u64) -> Result<PresetAudit> {
        let guarantee = preset.guarantee(budget);
        let report = match preset {
            Preset::LaplaceSum => {
                let (x, y, edges) = clamped_sum();
                let mech = |s: &Sample, n: &mut NoiseSource| laplace_global_mech(clamped(s), 1.0, budget, n).map(ReleaseOutcome::Value);
                dp_audit(mech, &x, &y, &AuditConfig::new(edges, trials, seed, guarantee.1))?
            }
            Preset::PtrGaussian | Preset::PtrLaplace => {
                let (x, y, eta, edges) = ptr_threshold();
                let variant = if preset == Preset::PtrGaussian { Variant::Gaussian } else { Variant::Laplace };
                // tau only enters the calibration constant, which the release ignores.
                let cfg = PtrConfig::new(eta, variant, budget, Confidence::new(0.05)?)?;
                let mech = PtrMechanism::new(cfg, MedianTarget::default());
                dp_audit(|s: &Sample, n: &mut NoiseSource| mech.release(s, n), &x, &y, &AuditConfig::new(edges, trials, seed, guarantee.1))?
            }
        };
        Ok(PresetAudit { preset, guarantee, report })
    }

    /// `[0,0,0,0]` vs `[1,0,0,0]` for a sum clamped to `[0, 1]` per coordinate
    /// (global sensitivity 1). Coarse unit bins keep every bin well populated;
    /// the two tail bins carry the exact likelihood ratio `e^epsilon`.
    pub fn clamped_sum() -> (Sample, Sample, Vec<f64>) {
        let x = Sample::from_slice(&[0.0; 4]).expect("valid");
        let y = Sample::from_slice(&[1.0, 0.0, 0.0, 0.0]).expect("valid");
        (x, y, vec![-1.0, 0.0, 1.0, 2.0])
    }

    /// Evenly spaced data whose window breakdown statistic at `eta = 0.075` sits
    /// next to the no-reply threshold, against the same data with one point
    /// below the median moved far above it.
    pub fn ptr_threshold() -> (Sample, Sample, f64, Vec<f64>) {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.01).collect();
        let mut ys = xs.clone();
        ys[0] = 1e6;
        let edges = (-2..=2).map(|i| 0.19 + 0.2 * f64::from(i)).collect();
        (Sample::new(xs).expect("valid"), Sample::new(ys).expect("valid"), 0.075, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::laplace_global_mech;
    use crate::model::PrivacyBudget;

    fn clamped_sum(s: &Sample) -> f64 {
        s.values().iter().map(|v| v.clamp(0.0, 1.0)).sum()
    }

    #[test]
    fn identical_inputs_give_near_zero() {
        let (x, _, edges) = presets::clamped_sum();
        let budget = PrivacyBudget::new(1.0, 0.05).unwrap();
        let mech = |s: &Sample, n: &mut NoiseSource| laplace_global_mech(clamped_sum(s), 1.0, budget, n).map(ReleaseOutcome::Value);
        let r = dp_audit(mech, &x, &x, &AuditConfig::new(edges, 20_000, 3, 0.0)).unwrap();
        assert!(r.epsilon_hat < 0.15, "{}", r.epsilon_hat);
        assert!(r.bootstrap_lower <= r.epsilon_hat + 1e-12);
    }

    #[test]
    fn presets_stay_within_guarantee() {
        let budget = PrivacyBudget::new(1.0, 0.05).unwrap();
        for p in [presets::Preset::LaplaceSum, presets::Preset::PtrGaussian, presets::Preset::PtrLaplace] {
            let a = presets::run_preset(p, budget, 5000, 8).unwrap();
            assert!(a.report.epsilon_hat <= a.guarantee.0 + 0.2, "{} {}", p.name(), a.report.epsilon_hat);
        }
        assert_eq!(presets::Preset::PtrGaussian.guarantee(budget).1, 2.0 * 1f64.exp() * 0.05 + 0.0025);
    }

    #[test]
    fn laplace_close_to_budget() {
        let (x, y, edges) = presets::clamped_sum();
        let budget = PrivacyBudget::new(1.0, 0.05).unwrap();
        let mech = |s: &Sample, n: &mut NoiseSource| laplace_global_mech(clamped_sum(s), 1.0, budget, n).map(ReleaseOutcome::Value);
        let r = dp_audit(mech, &x, &y, &AuditConfig::new(edges, 20_000, 4, 0.0)).unwrap();
        // Tail bins have likelihood ratio exactly e.
        assert!(r.epsilon_hat > 0.8 && r.epsilon_hat < 1.2, "{}", r.epsilon_hat);
        assert_eq!(r.counts_x.len(), 6);
    }

    #[test]
    fn errors() {
        let a = Sample::from_slice(&[0.0, 0.0, 0.0]).unwrap();
        let b = Sample::from_slice(&[1.0, 1.0, 0.0]).unwrap();
        let c = Sample::from_slice(&[0.0, 0.0]).unwrap();
        let mech = |_: &Sample, _: &mut NoiseSource| Ok(ReleaseOutcome::NoReply);
        let cfg = AuditConfig::new(vec![0.0], 1000, 0, 0.0);
        assert!(matches!(dp_audit(mech, &a, &b, &cfg), Err(Error::NotNeighbors { differing: 2, .. })));
        assert!(matches!(dp_audit(mech, &a, &c, &cfg), Err(Error::NotNeighbors { .. })));
        let few = AuditConfig::new(vec![0.0], 999, 0, 0.0);
        assert!(matches!(dp_audit(mech, &a, &a, &few), Err(Error::InsufficientTrials { got: 999, .. })));
    }

    #[test]
    fn bins_and_estimator() {
        let edges = [0.0, 1.0];
        assert_eq!(bin_of(&edges, ReleaseOutcome::Value(-0.5)), 0);
        assert_eq!(bin_of(&edges, ReleaseOutcome::Value(0.0)), 1);
        assert_eq!(bin_of(&edges, ReleaseOutcome::Value(5.0)), 2);
        assert_eq!(bin_of(&edges, ReleaseOutcome::NoReply), 3);
        // p = (0.5, 0.5), q = (0.25, 0.75): max(log 2, log(0.75/0.5)) = log 2
        let e = epsilon_hat(&[500, 500], &[250, 750], 1000, 0.0);
        assert!((e - 2f64.ln()).abs() < 1e-12);
        assert_eq!(epsilon_hat(&[1000, 0], &[1000, 0], 1000, 0.0), 0.0);
        // Sparse bins are ignored.
        assert!((epsilon_hat(&[990, 10], &[1000, 0], 1000, 0.0) + 0.99f64.ln()).abs() < 1e-12);
    }
}
