//! Differentially private median and mean estimation by Propose-Test-Release,
//! with the sensitivity primitives it is built on and a Monte Carlo lab for
//! checking coverage, scaling and privacy loss empirically.

pub mod error;
pub mod estimators;
pub mod mechanisms;
pub mod model;
pub mod noise;
pub mod sensitivity;
pub mod simlab;

pub use error::{Error, Result};
pub use estimators::{
    block_means, dp_median, dp_mom, dp_mom_density, empirical_median, median_bound, median_eta, mom_bound,
    mom_density_bound, mom_density_eta, mom_eta, mom_point_estimate, BoundTerms, CheckMode, DpEstimateReport,
    MomOptions, PreconditionCheck,
};
pub use mechanisms::{ptr_release, MedianTarget, PtrMechanism, PtrTarget};
pub use model::{
    compute_c, Confidence, MedianProfile, MomConfig, MomentProfile, PrivacyBudget, PtrConfig, ReleaseOutcome, Sample,
    Variant,
};
pub use noise::{InjectedNoise, Noise, NoiseSource};
pub use sensitivity::{breakdown_stat_median, breakdown_stat_oracle, BreakdownRule};
