use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discount (`lambda`) and weight (`w`) for each reward stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub lambda_plus: f64,
    pub w_plus: f64,
    pub lambda_minus: f64,
    pub w_minus: f64,
}

impl SplitParams {
    pub const STANDARD: SplitParams = SplitParams::new(1.0, 1.0, 1.0, 1.0);

    pub const fn new(lambda_plus: f64, w_plus: f64, lambda_minus: f64, w_minus: f64) -> Self {
        Self {
            lambda_plus,
            w_plus,
            lambda_minus,
            w_minus,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.lambda_plus, self.w_plus, self.lambda_minus, self.w_minus]
    }

    pub fn is_valid(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}

impl Default for SplitParams {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// One observation split into a non-negative and a non-positive part.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardPair {
    pub positive: f64,
    pub negative: f64,
}

impl RewardPair {
    pub const ZERO: RewardPair = RewardPair {
        positive: 0.0,
        negative: 0.0,
    };

    /// Builds a pair, rejecting values on the wrong side of zero.
    pub fn new(positive: f64, negative: f64) -> Result<Self> {
        if !positive.is_finite() {
            return Err(Error::NonFiniteReward(positive));
        }
        if !negative.is_finite() {
            return Err(Error::NonFiniteReward(negative));
        }
        if positive < 0.0 || negative > 0.0 {
            return Err(crate::error::invalid(
                "reward_pair",
                format!("expected positive >= 0 and negative <= 0, got ({positive}, {negative})"),
            ));
        }
        Ok(Self { positive, negative })
    }

    pub fn combined(&self) -> f64 {
        self.positive + self.negative
    }

    pub fn is_valid(&self) -> bool {
        self.positive >= 0.0 && self.negative <= 0.0
    }
}

impl std::ops::Add for RewardPair {
    type Output = RewardPair;

    fn add(self, rhs: RewardPair) -> RewardPair {
        RewardPair {
            positive: self.positive + rhs.positive,
            negative: self.negative + rhs.negative,
        }
    }
}

impl std::ops::AddAssign for RewardPair {
    fn add_assign(&mut self, rhs: RewardPair) {
        *self = *self + rhs;
    }
}

/// Routes a scalar reward to the positive or negative stream by sign.
pub fn split_reward(r: f64) -> Result<RewardPair> {
    if !r.is_finite() {
        return Err(Error::NonFiniteReward(r));
    }
    // `0.0 + r` normalises -0.0 so the pair sums back to a value equal to r.
    Ok(RewardPair {
        positive: r.max(0.0),
        negative: r.min(0.0) + 0.0,
    })
}
