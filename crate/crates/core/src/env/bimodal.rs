use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Two-component Gaussian mixture: `N(mu1, sigma1)` with probability `p`,
/// otherwise `N(mu2, sigma2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalSpec {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub p: f64,
}

impl BimodalSpec {
    pub fn new(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", format!("{p} is not in [0, 1]")));
        }
        if !(sigma1 >= 0.0 && sigma2 >= 0.0) {
            return Err(invalid("sigma", "standard deviations must be non-negative"));
        }
        if !(mu1.is_finite() && mu2.is_finite() && sigma1.is_finite() && sigma2.is_finite()) {
            return Err(invalid("mu", "mixture parameters must be finite"));
        }
        Ok(Self { mu1, sigma1, mu2, sigma2, p })
    }

    /// Point mass at `value`.
    pub fn constant(value: f64) -> Self {
        Self {
            mu1: value,
            sigma1: 0.0,
            mu2: value,
            sigma2: 0.0,
            p: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.p * self.mu1 + (1.0 - self.p) * self.mu2
    }

    /// `[min, max]` over both components of `mu +- k sigma`.
    pub fn support(&self, k: f64) -> (f64, f64) {
        let lo = (self.mu1 - k * self.sigma1).min(self.mu2 - k * self.sigma2);
        let hi = (self.mu1 + k * self.sigma1).max(self.mu2 + k * self.sigma2);
        (lo, hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Always draw the selector so the stream advances identically for
        // degenerate and non-degenerate mixtures.
        let first = rng.random::<f64>() < self.p;
        let (mu, sigma) = if first {
            (self.mu1, self.sigma1)
        } else {
            (self.mu2, self.sigma2)
        };
        if sigma == 0.0 {
            mu
        } else {
            Normal::new(mu, sigma).expect("sigma validated").sample(rng)
        }
    }
}

/// A two-armed gambling scenario. Arm 0 is "left", arm 1 is "right"; the
/// right arm always has the higher analytic mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoArmScenario {
    pub left: BimodalSpec,
    pub right: BimodalSpec,
    pub expected_left: f64,
    pub expected_right: f64,
}

impl TwoArmScenario {
    /// Builds a scenario, swapping the arms if needed so right is better.
    pub fn new(a: BimodalSpec, b: BimodalSpec) -> Self {
        let (left, right) = if a.mean() <= b.mean() { (a, b) } else { (b, a) };
        Self {
            expected_left: left.mean(),
            expected_right: right.mean(),
            left,
            right,
        }
    }

    pub fn arm(&self, index: usize) -> &BimodalSpec {
        if index == 0 {
            &self.left
        } else {
            &self.right
        }
    }

    /// Reward range used to normalise bounded-reward baselines: the union of
    /// each component's `mu +- 6 sigma`.
    pub fn reward_bounds(&self) -> (f64, f64) {
        let (l0, h0) = self.left.support(6.0);
        let (l1, h1) = self.right.support(6.0);
        (l0.min(l1), h0.max(h1))
    }
}

/// Integer means in `[-100, 100]`, integer standard deviations in `[0, 50]`,
/// mixing weight uniform in `[0, 1]`.
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R) -> TwoArmScenario {
    let mut arm = || {
        let mu1 = rng.random_range(-100i32..=100) as f64;
        let sigma1 = rng.random_range(0i32..=50) as f64;
        let mu2 = rng.random_range(-100i32..=100) as f64;
        let sigma2 = rng.random_range(0i32..=50) as f64;
        let p = rng.random::<f64>();
        BimodalSpec { mu1, sigma1, mu2, sigma2, p }
    };
    let a = arm();
    let b = arm();
    TwoArmScenario::new(a, b)
}
