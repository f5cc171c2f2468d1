//! Monte Carlo lab: data generators with analytic calibration profiles,
//! coverage and scaling experiments, and an empirical privacy audit.

pub mod audit;
pub mod coverage;
pub mod distributions;
pub mod quad;
pub mod report;
pub mod scaling;

pub use audit::{dp_audit, AuditConfig, AuditReport};
pub use coverage::{run_coverage, CoverageConfig, EstimatorKind, EstimatorSetup};
pub use distributions::{generate, DistributionSpec, Family};
pub use report::{clopper_pearson, ExperimentReport, QuantileEstimate, RateEstimate};
pub use scaling::{fit_slope, run_scaling, BlockRule, ScalingConfig, ScalingRow, ScalingTable};
