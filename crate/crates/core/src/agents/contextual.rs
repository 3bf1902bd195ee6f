//! Contextual Thompson sampling with split Gaussian-linear posteriors, plus
//! the CTS and LinUCB baselines. Arms keep disjoint models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::select::argmax_random;
use super::{Agent, Feedback};
use crate::env::Observation;
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, dot, mvn_sample_factored, norm_inf, Cholesky, Matrix};
use crate::reward::{RewardPair, SplitParams};
use crate::rng::RngStream;

/// Ridge re-added to `B` when its smallest Cholesky pivot drops below
/// [`MIN_PIVOT`].
pub const RIDGE: f64 = 1e-6;
pub const MIN_PIVOT: f64 = 1e-8;

/// Constants of the posterior sampling scale
/// `v = R sqrt((24 / epsilon) d ln(1 / gamma))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtsNoise {
    pub r: f64,
    pub epsilon: f64,
    pub gamma_conf: f64,
}

impl Default for CtsNoise {
    fn default() -> Self {
        Self {
            r: 1.0,
            epsilon: 0.5,
            gamma_conf: 0.1,
        }
    }
}

impl CtsNoise {
    pub fn v(&self, d: usize) -> Result<f64> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(invalid("R", format!("{} must be positive", self.r)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid("epsilon", format!("{} is not in (0, 1]", self.epsilon)));
        }
        if !(self.gamma_conf > 0.0 && self.gamma_conf <= 1.0) {
            return Err(invalid("gamma", format!("{} is not in (0, 1]", self.gamma_conf)));
        }
        if d == 0 {
            return Err(invalid("d", "context dimension must be positive"));
        }
        Ok(self.r * ((24.0 / self.epsilon) * d as f64 * (1.0 / self.gamma_conf).ln()).sqrt())
    }
}

/// Bayesian linear-regression state `(B, f, mu_hat)` with `B mu_hat = f`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinearStream {
    b: Matrix,
    f: Vec<f64>,
    mu_hat: Vec<f64>,
    chol: Cholesky,
}

impl GaussianLinearStream {
    pub fn new(dim: usize) -> Self {
        let b = Matrix::identity(dim);
        let chol = cholesky(&b).expect("identity is SPD");
        Self {
            b,
            f: vec![0.0; dim],
            mu_hat: vec![0.0; dim],
            chol,
        }
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn mu_hat(&self) -> &[f64] {
        &self.mu_hat
    }

    /// `B = lambda B + x x^T`, `f = lambda f + w x r`, `mu_hat = B^{-1} f`.
    pub fn update(&mut self, lambda: f64, weight: f64, x: &[f64], r: f64) -> Result<()> {
        self.check_dim(x)?;
        self.b.scale_add_outer(lambda, x);
        for (fi, xi) in self.f.iter_mut().zip(x) {
            *fi = lambda * *fi + weight * xi * r;
        }
        self.chol = match cholesky(&self.b) {
            Ok(c) if c.min_pivot() >= MIN_PIVOT => c,
            _ => {
                self.b.add_diagonal(RIDGE);
                cholesky(&self.b)?
            }
        };
        self.mu_hat = self.chol.solve(&self.f);
        Ok(())
    }

    /// Draws from `N(mu_hat, v^2 B^{-1})`.
    pub fn sample<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> Vec<f64> {
        mvn_sample_factored(&self.mu_hat, v, &self.chol, rng)
    }

    /// `x^T B^{-1} x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.chol.solve(x))
    }

    /// `||B mu_hat - f||_inf`
    pub fn residual(&self) -> f64 {
        let bm = self.b.mul_vec(&self.mu_hat);
        let diff: Vec<f64> = bm.iter().zip(&self.f).map(|(a, b)| a - b).collect();
        norm_inf(&diff)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }
}

/// Positive and negative stream of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitLinearPosterior {
    pub positive: GaussianLinearStream,
    pub negative: GaussianLinearStream,
}

impl SplitLinearPosterior {
    pub fn new(dim: usize) -> Self {
        Self {
            positive: GaussianLinearStream::new(dim),
            negative: GaussianLinearStream::new(dim),
        }
    }
}

/// Samples both streams of every arm and plays the best summed score.
pub fn scts_select<R: Rng + ?Sized>(
    arms: &[SplitLinearPosterior],
    x: &[f64],
    v: f64,
    rng: &mut R,
) -> Result<usize> {
    let mut scores = Vec::with_capacity(arms.len());
    for arm in arms {
        arm.positive.check_dim(x)?;
        let plus = arm.positive.sample(v, rng);
        let minus = arm.negative.sample(v, rng);
        scores.push(dot(x, &plus) + dot(x, &minus));
    }
    Ok(argmax_random(&scores, rng))
}

pub fn scts_update(post: &mut SplitLinearPosterior, x: &[f64], rp: RewardPair, params: &SplitParams) -> Result<()> {
    post.positive.update(params.lambda_plus, params.w_plus, x, rp.positive)?;
    post.negative.update(params.lambda_minus, params.w_minus, x, rp.negative)
}

fn validate_arms(arms: usize, dim: usize) -> Result<()> {
    if arms == 0 {
        return Err(invalid("arms", "need at least one arm"));
    }
    if dim == 0 {
        return Err(invalid("d", "context dimension must be positive"));
    }
    Ok(())
}

/// Split contextual Thompson sampling.
#[derive(Debug, Clone)]
pub struct Scts {
    arms: Vec<SplitLinearPosterior>,
    params: SplitParams,
    v: f64,
    rng: RngStream,
    last: Option<(usize, Vec<f64>)>,
}

impl Scts {
    pub fn new(arms: usize, dim: usize, params: SplitParams, noise: CtsNoise, rng: RngStream) -> Result<Self> {
        validate_arms(arms, dim)?;
        Ok(Self {
            arms: vec![SplitLinearPosterior::new(dim); arms],
            params,
            v: noise.v(dim)?,
            rng,
            last: None,
        })
    }

    /// Overrides the sampling scale.
    pub fn with_v(mut self, v: f64) -> Self {
        self.v = v;
        self
    }

    pub fn arms(&self) -> &[SplitLinearPosterior] {
        &self.arms
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

impl Agent for Scts {
    fn select(&mut self, obs: &Observation) -> Result<usize> {
        scts_select(&self.arms, &obs.context, self.v, &mut self.rng)
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        scts_update(&mut self.arms[fb.action], fb.context, fb.reward, &self.params)?;
        self.last = Some((fb.action, fb.context.to_vec()));
        Ok(())
    }

    fn is_stateless(&self) -> bool {
        true
    }

    fn stream_values(&self) -> Option<(f64, f64)> {
        self.last.as_ref().map(|(a, x)| {
            let arm = &self.arms[*a];
            (dot(x, arm.positive.mu_hat()), dot(x, arm.negative.mu_hat()))
        })
    }
}

/// Contextual Thompson sampling on the combined reward.
#[derive(Debug, Clone)]
pub struct Cts {
    arms: Vec<GaussianLinearStream>,
    v: f64,
    rng: RngStream,
}

impl Cts {
    pub fn new(arms: usize, dim: usize, noise: CtsNoise, rng: RngStream) -> Result<Self> {
        validate_arms(arms, dim)?;
        Ok(Self {
            arms: vec![GaussianLinearStream::new(dim); arms],
            v: noise.v(dim)?,
            rng,
        })
    }

    pub fn with_v(mut self, v: f64) -> Self {
        self.v = v;
        self
    }

    pub fn arms(&self) -> &[GaussianLinearStream] {
        &self.arms
    }
}

impl Agent for Cts {
    fn select(&mut self, obs: &Observation) -> Result<usize> {
        let x = &obs.context;
        let mut scores = Vec::with_capacity(self.arms.len());
        for arm in &self.arms {
            arm.check_dim(x)?;
            scores.push(dot(x, &arm.sample(self.v, &mut self.rng)));
        }
        Ok(argmax_random(&scores, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        self.arms[fb.action].update(1.0, 1.0, fb.context, fb.reward.combined())
    }

    fn is_stateless(&self) -> bool {
        true
    }
}

/// Disjoint-arm LinUCB.
#[derive(Debug, Clone)]
pub struct LinUcb {
    arms: Vec<GaussianLinearStream>,
    alpha: f64,
    rng: RngStream,
}

impl LinUcb {
    pub fn new(arms: usize, dim: usize, alpha: f64, rng: RngStream) -> Result<Self> {
        validate_arms(arms, dim)?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("{alpha} must be non-negative")));
        }
        Ok(Self {
            arms: vec![GaussianLinearStream::new(dim); arms],
            alpha,
            rng,
        })
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.arms
            .iter()
            .map(|arm| {
                arm.check_dim(x)?;
                Ok(dot(x, arm.mu_hat()) + self.alpha * arm.quadratic_form(x).sqrt())
            })
            .collect()
    }
}

impl Agent for LinUcb {
    fn select(&mut self, obs: &Observation) -> Result<usize> {
        let scores = self.scores(&obs.context)?;
        Ok(argmax_random(&scores, &mut self.rng))
    }

    fn update(&mut self, fb: &Feedback<'_>) -> Result<()> {
        self.arms[fb.action].update(1.0, 1.0, fb.context, fb.reward.combined())
    }

    fn is_stateless(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn obs(x: &[f64]) -> Observation {
        Observation {
            state: 0,
            actions: 2,
            context: x.to_vec(),
        }
    }

    #[test]
    fn v_parameter_examples() {
        let n = CtsNoise { r: 1.0, epsilon: 1.0, gamma_conf: 1.0 };
        assert_eq!(n.v(3).unwrap(), 0.0);
        let n = CtsNoise { r: 1.0, epsilon: 0.5, gamma_conf: 0.1 };
        let v = n.v(2).unwrap();
        assert_abs_diff_eq!(v, (48.0 * 2.0 * 10f64.ln()).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 14.87, epsilon = 5e-3);
        let n3 = CtsNoise { r: 3.0, ..n };
        assert_abs_diff_eq!(n3.v(2).unwrap(), 3.0 * v, epsilon = 1e-12);
        assert!(CtsNoise { r: 0.0, ..n }.v(1).is_err());
        assert!(CtsNoise { epsilon: 1.5, ..n }.v(1).is_err());
        assert!(CtsNoise { gamma_conf: 0.0, ..n }.v(1).is_err());
    }

    #[test]
    fn one_dimensional_update_by_hand() {
        let mut s = GaussianLinearStream::new(1);
        s.update(1.0, 1.0, &[1.0], 2.0).unwrap();
        assert_eq!(s.b()[(0, 0)], 2.0);
        assert_eq!(s.f(), &[2.0]);
        assert_abs_diff_eq!(s.mu_hat()[0], 1.0, epsilon = 1e-15);

        let mut c = GaussianLinearStream::new(1);
        c.update(1.0, 1.0, &[1.0], 3.0).unwrap();
        assert_abs_diff_eq!(c.mu_hat()[0], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn zeroed_positive_stream() {
        let mut post = SplitLinearPosterior::new(1);
        let neg_only = SplitParams::new(0.0, 0.0, 1.0, 1.0);
        scts_update(&mut post, &[1.0], RewardPair { positive: 4.0, negative: -1.0 }, &neg_only).unwrap();
        assert_eq!(post.positive.b()[(0, 0)], 1.0);
        assert_eq!(post.positive.f(), &[0.0]);
        assert_eq!(post.positive.mu_hat(), &[0.0]);

        // In higher dimension the rank-one B needs the ridge floor.
        let mut post = SplitLinearPosterior::new(3);
        scts_update(&mut post, &[1.0, 0.5, 0.0], RewardPair { positive: 4.0, negative: 0.0 }, &neg_only).unwrap();
        let b = post.positive.b();
        assert_abs_diff_eq!(b[(2, 2)], RIDGE, epsilon = 1e-18);
        assert_abs_diff_eq!(b[(0, 0)], 1.0 + RIDGE, epsilon = 1e-15);
        assert!(post.positive.mu_hat().iter().all(|m| *m == 0.0));
    }

    #[test]
    fn zero_reward_grows_b_only() {
        let mut s = GaussianLinearStream::new(2);
        s.update(1.0, 1.0, &[1.0, 2.0], 0.0).unwrap();
        assert_eq!(s.f(), &[0.0, 0.0]);
        assert_eq!(s.b().as_slice(), &[2.0, 2.0, 2.0, 5.0]);
    }

    #[test]
    fn decay_keeps_stream_solvable() {
        let mut s = GaussianLinearStream::new(4);
        for _ in 0..200 {
            s.update(0.1, 1.0, &[1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
            assert!(s.residual() < 1e-8);
            assert!(s.b().asymmetry() < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut s = GaussianLinearStream::new(2);
        assert!(matches!(s.update(1.0, 1.0, &[1.0], 1.0), Err(Error::DimensionMismatch { .. })));
        let mut scts = Scts::new(2, 2, SplitParams::STANDARD, CtsNoise::default(), RngStream::new(0, 0)).unwrap();
        assert!(scts.select(&obs(&[1.0])).is_err());
    }

    #[test]
    fn noiseless_select_is_argmax() {
        let mut arms = vec![SplitLinearPosterior::new(1), SplitLinearPosterior::new(1)];
        arms[0].positive.mu_hat = vec![1.0];
        arms[1].negative.mu_hat = vec![-1.0];
        let mut rng = RngStream::new(0, 0);
        assert_eq!(scts_select(&arms, &[1.0], 0.0, &mut rng).unwrap(), 0);
    }

    #[test]
    fn identical_posteriors_are_chosen_uniformly() {
        let arms = vec![SplitLinearPosterior::new(2); 2];
        let mut rng = RngStream::new(3, 0);
        let hits = (0..10_000)
            .filter(|_| scts_select(&arms, &[1.0, 0.5], 1.0, &mut rng).unwrap() == 0)
            .count();
        assert!((hits as f64 / 1e4 - 0.5).abs() < 0.02);
    }

    #[test]
    fn concentrated_posteriors_reduce_to_argmax() {
        let mut arms = vec![SplitLinearPosterior::new(1), SplitLinearPosterior::new(1)];
        for arm in &mut arms {
            for s in [&mut arm.positive, &mut arm.negative] {
                s.b = Matrix::scaled_identity(1, 1e6);
                s.chol = cholesky(&s.b).unwrap();
            }
        }
        arms[0].positive.mu_hat = vec![0.6];
        arms[1].positive.mu_hat = vec![0.4];
        let mut rng = RngStream::new(3, 1);
        let v = CtsNoise::default().v(1).unwrap();
        let hits = (0..10_000)
            .filter(|_| scts_select(&arms, &[1.0], v, &mut rng).unwrap() == 0)
            .count();
        assert!(hits as f64 / 1e4 > 0.999, "{hits}");
    }

    #[test]
    fn linucb_examples() {
        let mut l = LinUcb::new(3, 2, 1.0, RngStream::new(0, 0)).unwrap();
        assert_eq!(l.scores(&[1.0, 0.0]).unwrap(), vec![1.0; 3]);
        let picks: std::collections::HashSet<usize> =
            (0..200).map(|_| l.select(&obs(&[1.0, 0.0])).unwrap()).collect();
        assert_eq!(picks.len(), 3);

        let mut l = LinUcb::new(1, 1, 0.7, RngStream::new(0, 0)).unwrap();
        let o = obs(&[1.0]);
        l.update(&Feedback {
            state: 0,
            action: 0,
            context: &[1.0],
            reward: RewardPair { positive: 1.0, negative: 0.0 },
            next: &o,
            done: true,
            terminal: true,
        })
        .unwrap();
        assert_abs_diff_eq!(l.scores(&[1.0]).unwrap()[0], 0.5 + 0.7 * 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn linucb_alpha_zero_is_greedy() {
        let mut l = LinUcb::new(2, 1, 0.0, RngStream::new(0, 0)).unwrap();
        l.arms[1].update(1.0, 1.0, &[1.0], 2.0).unwrap();
        assert!((0..50).all(|_| l.select(&obs(&[1.0])).unwrap() == 1));
    }

    #[test]
    fn cts_without_noise_is_greedy_ridge() {
        let mut c = Cts::new(2, 1, CtsNoise::default(), RngStream::new(0, 0)).unwrap().with_v(0.0);
        c.arms[0].update(1.0, 1.0, &[1.0], -1.0).unwrap();
        c.arms[1].update(1.0, 1.0, &[1.0], 1.0).unwrap();
        assert!((0..50).all(|_| c.select(&obs(&[1.0])).unwrap() == 1));
    }
}
