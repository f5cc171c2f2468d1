//! Reproducible noise streams.
//!
//! A [`NoiseSource`] is a ChaCha20 generator keyed by a 64-bit seed and a
//! stream id, so Monte Carlo trial `i` can own stream `i` of a master seed and
//! produce the same draws no matter how trials are scheduled. Floating-point
//! side channels are not addressed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Anything that can supply the standard Laplace and Gaussian draws consumed by
/// the mechanisms.
pub trait Noise {
    /// Uniform draw on `[0, 1)`.
    fn uniform(&mut self) -> f64;

    /// Draw from `Lap(1)`, density `e^{-|u|} / 2`.
    fn laplace(&mut self) -> f64;

    /// Draw from `N(0, 1)`.
    fn gaussian(&mut self) -> f64;
}

/// Inverse CDF of `Lap(lambda)` evaluated at `u` in `(-1/2, 1/2)`.
pub fn laplace_inverse_cdf(u: f64, lambda: f64) -> f64 {
    -u.signum() * (1.0 - 2.0 * u.abs()).ln() / lambda
}

#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        NoiseSource { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

impl Noise for NoiseSource {
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn laplace(&mut self) -> f64 {
        loop {
            let u = self.uniform() - 0.5;
            // u = -1/2 maps to -inf.
            if u > -0.5 {
                return laplace_inverse_cdf(u, 1.0);
            }
        }
    }

    fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// `Lap(lambda)` draw.
pub fn sample_laplace(lambda: f64, src: &mut impl Noise) -> f64 {
    src.laplace() / lambda
}

pub fn sample_gaussian(src: &mut impl Noise) -> f64 {
    src.gaussian()
}

/// Replays fixed draws, for exercising exact code paths in tests. Laplace and
/// Gaussian requests both pop from the same queue; panics when exhausted.
#[derive(Debug, Clone, Default)]
pub struct InjectedNoise {
    draws: std::collections::VecDeque<f64>,
}

impl InjectedNoise {
    pub fn new(draws: impl IntoIterator<Item = f64>) -> Self {
        InjectedNoise {
            draws: draws.into_iter().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.draws.len()
    }

    fn pop(&mut self) -> f64 {
        self.draws.pop_front().expect("injected noise exhausted")
    }
}

impl Noise for InjectedNoise {
    fn uniform(&mut self) -> f64 {
        self.pop()
    }

    fn laplace(&mut self) -> f64 {
        self.pop()
    }

    fn gaussian(&mut self) -> f64 {
        self.pop()
    }
}
