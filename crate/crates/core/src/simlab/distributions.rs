//! Data-generating families with their population median, mean and the
//! calibration profiles the estimators need.

use rand_distr::Distribution;
use serde::Serialize;
use statrs::distribution::{Continuous, LogNormal, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use super::quad::adaptive_simpson;
use crate::error::{Error, Result};
use crate::model::{MedianProfile, MomentProfile, Sample};
use crate::noise::NoiseSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Normal { mu: f64, sigma: f64 },
    /// `loc + scale * T_nu`.
    StudentT { nu: f64, loc: f64, scale: f64 },
    /// Pareto with tail index `alpha` and minimum `x_m`, shifted to mean zero.
    CenteredPareto { alpha: f64, x_m: f64 },
    /// `exp(N(mu, sigma^2))`.
    LogNormal { mu: f64, sigma: f64 },
}

/// A family together with its cached analytic summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionSpec {
    pub family: Family,
    pub median: f64,
    pub mean: f64,
    pub sigma: f64,
    /// `E|X - mean|^3`.
    pub third_abs_moment: f64,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedFamilyParameters(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// `E|Y - mu|^3` from the raw moments `E[Y^k]` and the lower tail below `mu`:
/// `|d|^3 = d^3 + 2 (-d)^3 1{d < 0}`.
fn third_abs_from_raw(raw: [f64; 3], mu: f64, lower: f64, pdf: impl Fn(f64) -> f64) -> f64 {
    let [m1, m2, m3] = raw;
    let central3 = m3 - 3.0 * mu * m2 + 3.0 * mu * mu * m1 - mu.powi(3);
    let tail = adaptive_simpson(|y| (mu - y).powi(3) * pdf(y), lower, mu, 1e-12);
    central3 + 2.0 * tail
}

impl DistributionSpec {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        if !mu.is_finite() {
            return Err(Error::UnsupportedFamilyParameters(format!("mu must be finite, got {mu}")));
        }
        Ok(DistributionSpec {
            family: Family::Normal { mu, sigma },
            median: mu,
            mean: mu,
            sigma,
            third_abs_moment: 2.0 * (2.0 / std::f64::consts::PI).sqrt() * sigma.powi(3),
        })
    }

    /// Requires `nu >= 4` so that the third absolute moment exists with room to spare.
    pub fn student_t(nu: f64, loc: f64, scale: f64) -> Result<Self> {
        positive("scale", scale)?;
        if !(nu.is_finite() && nu >= 4.0) {
            return Err(Error::UnsupportedFamilyParameters(format!("Student t needs nu >= 4, got {nu}")));
        }
        // E|T|^3 = nu^{3/2} Gamma(2) Gamma((nu-3)/2) / (sqrt(pi) Gamma(nu/2))
        let ln_abs3 = 1.5 * nu.ln() + ln_gamma((nu - 3.0) / 2.0)
            - 0.5 * std::f64::consts::PI.ln()
            - ln_gamma(nu / 2.0);
        Ok(DistributionSpec {
            family: Family::StudentT { nu, loc, scale },
            median: loc,
            mean: loc,
            sigma: scale * (nu / (nu - 2.0)).sqrt(),
            third_abs_moment: scale.powi(3) * ln_abs3.exp(),
        })
    }

    /// Requires `alpha >= 4`.
    pub fn centered_pareto(alpha: f64, x_m: f64) -> Result<Self> {
        positive("x_m", x_m)?;
        if !(alpha.is_finite() && alpha >= 4.0) {
            return Err(Error::UnsupportedFamilyParameters(format!("Pareto needs alpha >= 4, got {alpha}")));
        }
        let raw = |k: f64| alpha * x_m.powf(k) / (alpha - k);
        let mu = raw(1.0);
        let pdf = |y: f64| if y < x_m { 0.0 } else { alpha * x_m.powf(alpha) / y.powf(alpha + 1.0) };
        let rho3 = third_abs_from_raw([mu, raw(2.0), raw(3.0)], mu, x_m, pdf);
        Ok(DistributionSpec {
            family: Family::CenteredPareto { alpha, x_m },
            median: x_m * 2f64.powf(1.0 / alpha) - mu,
            mean: 0.0,
            sigma: (raw(2.0) - mu * mu).sqrt(),
            third_abs_moment: rho3,
        })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        if !mu.is_finite() {
            return Err(Error::UnsupportedFamilyParameters(format!("mu must be finite, got {mu}")));
        }
        let raw = |k: f64| (k * mu + k * k * sigma * sigma / 2.0).exp();
        let mean = raw(1.0);
        let dist = LogNormal::new(mu, sigma).map_err(|e| Error::UnsupportedFamilyParameters(e.to_string()))?;
        let rho3 = third_abs_from_raw([mean, raw(2.0), raw(3.0)], mean, 0.0, |y| if y <= 0.0 { 0.0 } else { dist.pdf(y) });
        Ok(DistributionSpec {
            family: Family::LogNormal { mu, sigma },
            median: mu.exp(),
            mean,
            sigma: (raw(2.0) - mean * mean).sqrt(),
            third_abs_moment: rho3,
        })
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Normal { mu, sigma } => format!("normal(mu={mu},sigma={sigma})"),
            Family::StudentT { nu, loc, scale } => format!("student_t(nu={nu},loc={loc},scale={scale})"),
            Family::CenteredPareto { alpha, x_m } => format!("centered_pareto(alpha={alpha},x_m={x_m})"),
            Family::LogNormal { mu, sigma } => format!("lognormal(mu={mu},sigma={sigma})"),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Normal { mu, sigma } => Normal::new(mu, sigma).map(|d| d.pdf(x)).unwrap_or(0.0),
            Family::StudentT { nu, loc, scale } => StudentsT::new(loc, scale, nu).map(|d| d.pdf(x)).unwrap_or(0.0),
            Family::CenteredPareto { alpha, x_m } => {
                let y = x + alpha * x_m / (alpha - 1.0);
                if y < x_m {
                    0.0
                } else {
                    alpha * x_m.powf(alpha) / y.powf(alpha + 1.0)
                }
            }
            Family::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    LogNormal::new(mu, sigma).map(|d| d.pdf(x)).unwrap_or(0.0)
                }
            }
        }
    }

    /// Lower end of the support.
    fn lower(&self) -> f64 {
        match self.family {
            Family::CenteredPareto { alpha, x_m } => x_m - alpha * x_m / (alpha - 1.0),
            Family::LogNormal { .. } => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Half-width `r` and density floor `L` around the population median.
    ///
    /// The Normal uses `r = sqrt(2) sigma`, `L = 1/(e sqrt(2 pi) sigma)`. The
    /// other families are unimodal or monotone on their support, so the density
    /// minimum over `[m - r, m + r]` sits at an endpoint; `r` is the scale for
    /// Student t and half the distance to the support edge otherwise.
    pub fn median_profile(&self) -> Result<MedianProfile> {
        let r = match self.family {
            Family::Normal { sigma, .. } => return MedianProfile::normal(sigma),
            Family::StudentT { scale, .. } => scale,
            Family::CenteredPareto { .. } | Family::LogNormal { .. } => (self.median - self.lower()) / 2.0,
        };
        let l = self.pdf(self.median - r).min(self.pdf(self.median + r));
        MedianProfile::new(r, l)
    }

    pub fn moment_profile(&self) -> Result<MomentProfile> {
        MomentProfile::new(self.mean, self.sigma, self.third_abs_moment.cbrt())
    }

    /// Same family with every draw multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        positive("scale factor", c)?;
        match self.family {
            Family::Normal { mu, sigma } => Self::normal(c * mu, c * sigma),
            Family::StudentT { nu, loc, scale } => Self::student_t(nu, c * loc, c * scale),
            Family::CenteredPareto { alpha, x_m } => Self::centered_pareto(alpha, c * x_m),
            Family::LogNormal { mu, sigma } => Self::lognormal(mu + c.ln(), sigma),
        }
    }

    pub fn draw(&self, src: &mut NoiseSource) -> f64 {
        use rand::Rng;
        let rng = src.rng();
        match self.family {
            Family::Normal { mu, sigma } => {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                mu + sigma * z
            }
            Family::StudentT { nu, loc, scale } => {
                let t: f64 = rand_distr::StudentT::new(nu).expect("validated").sample(rng);
                loc + scale * t
            }
            Family::CenteredPareto { alpha, x_m } => {
                // 1 - U lies in (0, 1].
                let u: f64 = 1.0 - rng.random::<f64>();
                x_m * u.powf(-1.0 / alpha) - alpha * x_m / (alpha - 1.0)
            }
            Family::LogNormal { mu, sigma } => {
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
        }
    }
}

/// `n` i.i.d. draws.
pub fn generate(spec: &DistributionSpec, n: usize, src: &mut NoiseSource) -> Result<Sample> {
    Sample::new(generate_values(spec, n, src))
}

pub fn generate_values(spec: &DistributionSpec, n: usize, src: &mut NoiseSource) -> Vec<f64> {
    (0..n).map(|_| spec.draw(src)).collect()
}
