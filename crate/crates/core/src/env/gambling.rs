use super::{ContextSpec, Environment, Observation, Step, TwoArmScenario};
use crate::error::{Error, Result};
use crate::reward::{split_reward, RewardPair};
use crate::rng::RngStream;

fn constant_obs(state: u64, actions: usize) -> Observation {
    Observation {
        state,
        actions,
        context: ContextSpec::constant_vector(1),
    }
}

fn draw(scenario: &TwoArmScenario, arm: usize, rng: &mut RngStream) -> RewardPair {
    split_reward(scenario.arm(arm).sample(rng)).expect("mixture draws are finite")
}

/// One-step version of the gambling task: pick an arm, observe a draw.
#[derive(Debug, Clone)]
pub struct BanditTask {
    scenario: TwoArmScenario,
    rng: RngStream,
}

impl BanditTask {
    pub fn new(scenario: TwoArmScenario, rng: RngStream) -> Self {
        Self { scenario, rng }
    }

    pub fn scenario(&self) -> &TwoArmScenario {
        &self.scenario
    }
}

impl Environment for BanditTask {
    fn reset(&mut self) -> Observation {
        constant_obs(0, 2)
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if action >= 2 {
            return Err(Error::InvalidAction { action, available: 2 });
        }
        Ok(Step {
            observation: constant_obs(0, 2),
            reward: draw(&self.scenario, action, &mut self.rng),
            done: true,
            terminal: true,
        })
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn context_spec(&self) -> ContextSpec {
        ContextSpec::Constant { dim: 1 }
    }

    fn reward_bounds(&self) -> Option<(f64, f64)> {
        Some(self.scenario.reward_bounds())
    }

    fn better_actions(&self) -> Option<Vec<usize>> {
        Some(vec![1])
    }
}

/// Two-step gambling MDP: from A go left to B or right to C (zero reward),
/// then B or C pays a draw from its arm's mixture and the episode ends.
#[derive(Debug, Clone)]
pub struct GamblingMdp {
    scenario: TwoArmScenario,
    rng: RngStream,
    state: MdpState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MdpState {
    Start,
    Left,
    Right,
    Done,
}

impl GamblingMdp {
    pub const START: u64 = 0;
    pub const LEFT: u64 = 1;
    pub const RIGHT: u64 = 2;

    pub fn new(scenario: TwoArmScenario, rng: RngStream) -> Self {
        Self {
            scenario,
            rng,
            state: MdpState::Start,
        }
    }

    pub fn scenario(&self) -> &TwoArmScenario {
        &self.scenario
    }
}

impl Environment for GamblingMdp {
    fn reset(&mut self) -> Observation {
        self.state = MdpState::Start;
        constant_obs(Self::START, 2)
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        match self.state {
            MdpState::Done => Err(Error::EpisodeFinished),
            MdpState::Start => {
                if action >= 2 {
                    return Err(Error::InvalidAction { action, available: 2 });
                }
                let (next, id) = if action == 0 {
                    (MdpState::Left, Self::LEFT)
                } else {
                    (MdpState::Right, Self::RIGHT)
                };
                self.state = next;
                Ok(Step {
                    observation: constant_obs(id, 1),
                    reward: RewardPair::ZERO,
                    done: false,
                    terminal: false,
                })
            }
            MdpState::Left | MdpState::Right => {
                if action != 0 {
                    return Err(Error::InvalidAction { action, available: 1 });
                }
                let arm = usize::from(self.state == MdpState::Right);
                self.state = MdpState::Done;
                Ok(Step {
                    observation: constant_obs(Self::START, 2),
                    reward: draw(&self.scenario, arm, &mut self.rng),
                    done: true,
                    terminal: true,
                })
            }
        }
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn context_spec(&self) -> ContextSpec {
        ContextSpec::Constant { dim: 1 }
    }

    fn reward_bounds(&self) -> Option<(f64, f64)> {
        Some(self.scenario.reward_bounds())
    }

    fn better_actions(&self) -> Option<Vec<usize>> {
        Some(vec![1])
    }
}
