//! Behavioural profiles: named split-parameter settings with population jitter.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::reward::SplitParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviorProfile {
    /// "Addiction"
    Add,
    Adhd,
    /// "Alzheimer's"
    Ad,
    /// "Chronic pain"
    Cp,
    BvFtd,
    /// "Parkinson's"
    Pd,
    /// "moderate" forgetting
    M,
    Standard,
    PositiveOnly,
    NegativeOnly,
}

impl BehaviorProfile {
    pub const ALL: [BehaviorProfile; 10] = [
        BehaviorProfile::Add,
        BehaviorProfile::Adhd,
        BehaviorProfile::Ad,
        BehaviorProfile::Cp,
        BehaviorProfile::BvFtd,
        BehaviorProfile::Pd,
        BehaviorProfile::M,
        BehaviorProfile::Standard,
        BehaviorProfile::PositiveOnly,
        BehaviorProfile::NegativeOnly,
    ];

    pub fn nominal(self) -> SplitParams {
        use BehaviorProfile::*;
        match self {
            Add => SplitParams::new(1.0, 1.0, 0.5, 1.0),
            Adhd => SplitParams::new(0.2, 1.0, 0.2, 1.0),
            Ad => SplitParams::new(0.1, 1.0, 0.1, 1.0),
            Cp => SplitParams::new(0.5, 0.5, 1.0, 1.0),
            BvFtd => SplitParams::new(0.5, 100.0, 0.5, 1.0),
            Pd => SplitParams::new(0.5, 1.0, 0.5, 100.0),
            M => SplitParams::new(0.5, 1.0, 0.5, 1.0),
            Standard => SplitParams::new(1.0, 1.0, 1.0, 1.0),
            PositiveOnly => SplitParams::new(1.0, 1.0, 0.0, 0.0),
            NegativeOnly => SplitParams::new(0.0, 0.0, 1.0, 1.0),
        }
    }

    /// Jitter half-widths in field order `(lambda+, w+, lambda-, w-)`.
    pub fn jitter(self) -> [f64; 4] {
        use BehaviorProfile::*;
        match self {
            Standard | PositiveOnly | NegativeOnly => [0.0; 4],
            BvFtd => [0.1, 10.0, 0.1, 0.1],
            Pd => [0.1, 0.1, 0.1, 10.0],
            Add | Adhd | Ad | Cp | M => [0.1; 4],
        }
    }

    pub fn has_jitter(self) -> bool {
        self.jitter().iter().any(|h| *h > 0.0)
    }

    /// Profile suffix used in agent spec strings (`b-PD`, `cb-ADHD`, `CP`).
    pub fn tag(self) -> &'static str {
        use BehaviorProfile::*;
        match self {
            Add => "ADD",
            Adhd => "ADHD",
            Ad => "AD",
            Cp => "CP",
            BvFtd => "bvFTD",
            Pd => "PD",
            M => "M",
            Standard => "Standard",
            PositiveOnly => "Positive",
            NegativeOnly => "Negative",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.tag() == tag)
    }
}

/// Draws an agent's parameters from a profile.
///
/// With `jitter` on, each field is the nominal value plus a uniform offset in
/// `[-h, h]`, clamped at zero. Profiles without jitter never touch `rng`.
pub fn profile_params<R: Rng + ?Sized>(
    profile: BehaviorProfile,
    rng: &mut R,
    jitter: bool,
) -> SplitParams {
    let nominal = profile.nominal();
    if !jitter || !profile.has_jitter() {
        return nominal;
    }
    let half = profile.jitter();
    let mut out = nominal.as_array();
    for (v, h) in out.iter_mut().zip(half) {
        if h > 0.0 {
            *v = (*v + rng.random_range(-h..=h)).max(0.0);
        }
    }
    SplitParams::new(out[0], out[1], out[2], out[3])
}
