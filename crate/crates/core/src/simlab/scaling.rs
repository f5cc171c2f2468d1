//! Error quantiles over grids of sample sizes and confidence levels, with
//! log-log slope fits.

use serde::Serialize;

use super::coverage::{run_trials, sorted_errors, EstimatorKind, EstimatorSetup};
use super::distributions::DistributionSpec;
use super::report::{QuantileEstimate, RateEstimate};
use crate::error::{Error, Result};
use crate::estimators::{BoundTerms, MomOptions};
use crate::model::{Confidence, PrivacyBudget};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRule {
    Fixed(usize),
    /// `K = round(scale * n^{1/3})`.
    CubeRoot { scale: f64 },
}

impl BlockRule {
    pub fn blocks(self, n: usize) -> usize {
        match self {
            BlockRule::Fixed(k) => k,
            BlockRule::CubeRoot { scale } => ((scale * (n as f64).cbrt()).round() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub kind: EstimatorKind,
    pub n_grid: Vec<usize>,
    /// Each row is calibrated at its own `tau` and reports the `1 - tau` quantile.
    pub tau_grid: Vec<f64>,
    pub budget: PrivacyBudget,
    pub trials: usize,
    pub seed: u64,
    pub blocks: Option<BlockRule>,
    /// Drop the last `n mod K` points so blocks have equal size.
    pub trim_to_blocks: bool,
    pub mom: MomOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    /// Sample size after trimming.
    pub n: usize,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub tau: f64,
    pub quantile: QuantileEstimate,
    pub noreply: RateEstimate,
    pub eta: f64,
    pub bound_terms: BoundTerms,
    pub theoretical_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slope {
    /// The grid coordinate held fixed (a `tau` for fits in `n`, an `n` for fits in `tau`).
    pub at: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingTable {
    pub estimator: String,
    pub distribution: String,
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<ScalingRow>,
    /// Slope of `log quantile` against `log n`, per `tau`.
    pub quantile_vs_n: Vec<Slope>,
    /// Slope of `log quantile` against `log log(1/tau)`, per `n`: 1/2 for
    /// sub-Gaussian tails, 1 for sub-exponential.
    pub quantile_vs_log_inv_tau: Vec<Slope>,
    /// Slope of `log privacy term of the bound` against `log n`, per `tau`.
    pub privacy_term_vs_n: Vec<Slope>,
}

impl ScalingTable {
    pub fn row(&self, n: usize, tau: f64) -> Option<&ScalingRow> {
        self.rows.iter().find(|r| r.n == n && r.tau == tau)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "x,quantile_or_rate,lower,upper")?;
        for r in &self.rows {
            let q = &r.quantile;
            writeln!(out, "n={};tau={},{},{},{}", r.n, r.tau, q.value, q.lower, q.upper)?;
        }
        Ok(())
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn slopes(rows: &[ScalingRow], key: impl Fn(&ScalingRow) -> f64, x: impl Fn(&ScalingRow) -> f64, y: impl Fn(&ScalingRow) -> f64) -> Vec<Slope> {
    let mut keys: Vec<f64> = rows.iter().map(&key).collect();
    keys.sort_by(f64::total_cmp);
    keys.dedup();
    keys.into_iter()
        .filter_map(|k| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| key(r) == k)
                .map(|r| (x(r), y(r)))
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .collect();
            (pts.len() >= 2).then(|| Slope { at: k, slope: fit_slope(&pts) })
        })
        .collect()
}

pub fn run_scaling(spec: &DistributionSpec, cfg: &ScalingConfig) -> Result<ScalingTable> {
    if cfg.trials == 0 || cfg.n_grid.is_empty() || cfg.tau_grid.is_empty() {
        return Err(Error::invalid("grid", "n_grid, tau_grid and trials must be non-empty"));
    }
    let mut rows = Vec::new();
    for &n_raw in &cfg.n_grid {
        let k = cfg.blocks.map(|b| b.blocks(n_raw));
        let n = match k {
            Some(k) if cfg.trim_to_blocks && k > 0 => n_raw - n_raw % k,
            _ => n_raw,
        };
        for &tau in &cfg.tau_grid {
            let setup = EstimatorSetup {
                kind: cfg.kind,
                k,
                budget: cfg.budget,
                conf: Confidence::new(tau)?,
                mom: cfg.mom,
            };
            let outcomes = run_trials(spec, &setup, n, cfg.trials, cfg.seed)?;
            let noreply = outcomes.iter().filter(|o| o.report.outcome.is_no_reply()).count();
            let first = &outcomes[0].report;
            rows.push(ScalingRow {
                n,
                k: k.filter(|_| cfg.kind.targets_mean()),
                tau,
                quantile: QuantileEstimate::from_sorted(&sorted_errors(&outcomes), tau),
                noreply: RateEstimate::new(noreply, cfg.trials),
                eta: first.eta_used,
                bound_terms: first.bound_terms,
                theoretical_bound: first.theoretical_bound,
            });
        }
    }
    let log_n = |r: &ScalingRow| (r.n as f64).ln();
    Ok(ScalingTable {
        estimator: cfg.kind.name().to_string(),
        distribution: spec.name(),
        seed: cfg.seed,
        trials: cfg.trials,
        quantile_vs_n: slopes(&rows, |r| r.tau, log_n, |r| r.quantile.value.ln()),
        quantile_vs_log_inv_tau: slopes(&rows, |r| r.n as f64, |r| (1.0 / r.tau).ln().ln(), |r| r.quantile.value.ln()),
        privacy_term_vs_n: slopes(&rows, |r| r.tau, log_n, |r| r.bound_terms.privacy.ln()),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(kind: EstimatorKind, n_grid: Vec<usize>, tau_grid: Vec<f64>, trials: usize) -> ScalingConfig {
        ScalingConfig {
            kind,
            n_grid,
            tau_grid,
            budget: PrivacyBudget::new(1.0, 0.05).unwrap(),
            trials,
            seed: 11,
            blocks: None,
            trim_to_blocks: false,
            mom: MomOptions::default(),
        }
    }

    #[test]
    fn slope_fit_exact_on_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (f64::from(i).ln(), 3.0 - 0.5 * f64::from(i).ln())).collect();
        assert_abs_diff_eq!(fit_slope(&pts), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn nonprivate_median_concentration_exponents() {
        let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
        let cfg = config(EstimatorKind::NonPrivateMedian, vec![1000, 4000, 16000], vec![0.2, 0.1, 0.05, 0.02, 0.01], 2000);
        let table = run_scaling(&spec, &cfg).unwrap();
        for s in &table.quantile_vs_n {
            assert_abs_diff_eq!(s.slope, -0.5, epsilon = 0.1);
        }
        for s in &table.quantile_vs_log_inv_tau {
            // Gaussian quantile z_{1-tau} grows like sqrt(2 log(1/tau)) only
            // asymptotically; on [0.01, 0.2] its exponent is close to 0.6.
            assert!(s.slope > 0.4 && s.slope < 0.75, "{}", s.slope);
        }
    }

    #[test]
    fn scale_equivariance() {
        let one = DistributionSpec::normal(0.0, 1.0).unwrap();
        let two = one.scaled(2.0).unwrap();
        let cfg = config(EstimatorKind::Median, vec![2000], vec![0.1], 200);
        let a = run_scaling(&one, &cfg).unwrap();
        let b = run_scaling(&two, &cfg).unwrap();
        let (qa, qb) = (a.rows[0].quantile.value, b.rows[0].quantile.value);
        assert_abs_diff_eq!(qb, 2.0 * qa, epsilon = 1e-12 * qa.max(1.0));
        assert_abs_diff_eq!(b.rows[0].theoretical_bound, 2.0 * a.rows[0].theoretical_bound, epsilon = 1e-12);
    }

    #[test]
    fn cube_root_blocks_and_trim() {
        let rule = BlockRule::CubeRoot { scale: 6.0 };
        assert_eq!(rule.blocks(1 << 15), 192);
        assert_eq!(rule.blocks(1 << 18), 384);
        let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
        let mut cfg = config(EstimatorKind::MomDensity, vec![1 << 14, 1 << 15], vec![0.05], 4);
        cfg.blocks = Some(rule);
        cfg.trim_to_blocks = true;
        let t = run_scaling(&spec, &cfg).unwrap();
        for r in &t.rows {
            assert_eq!(r.n % r.k.unwrap(), 0);
        }
    }
}
