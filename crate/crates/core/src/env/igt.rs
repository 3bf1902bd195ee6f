use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContextSpec, Environment, Observation, Step};
use crate::error::{Error, Result};
use crate::reward::RewardPair;
use crate::rng::RngStream;

/// Payoff scheme of the Iowa Gambling Task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IgtScheme {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl IgtScheme {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(IgtScheme::One),
            2 => Some(IgtScheme::Two),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            IgtScheme::One => 1,
            IgtScheme::Two => 2,
        }
    }
}

/// A deck pays `win` on every card and at most one loss per card.
#[derive(Debug, Clone, PartialEq)]
pub struct Deck {
    pub win: f64,
    /// `(amount <= 0, probability)`; the remaining mass is no loss.
    pub losses: Vec<(f64, f64)>,
}

impl Deck {
    fn new(win: f64, losses: &[(f64, f64)]) -> Self {
        Self {
            win,
            losses: losses.to_vec(),
        }
    }

    pub fn expected_value(&self) -> f64 {
        self.win + self.losses.iter().map(|(a, p)| a * p).sum::<f64>()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> RewardPair {
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut loss = 0.0;
        for &(amount, p) in &self.losses {
            acc += p;
            if u < acc {
                loss = amount;
                break;
            }
        }
        RewardPair {
            positive: self.win,
            negative: loss,
        }
    }

    /// Worst combined outcome of a single card.
    pub fn worst(&self) -> f64 {
        self.win + self.losses.iter().map(|(a, _)| *a).fold(0.0, f64::min)
    }
}

pub fn decks(scheme: IgtScheme) -> [Deck; 4] {
    let a = Deck::new(
        100.0,
        &[(-150.0, 0.1), (-200.0, 0.1), (-250.0, 0.1), (-300.0, 0.1), (-350.0, 0.1)],
    );
    let b = Deck::new(100.0, &[(-1250.0, 0.1)]);
    let c = match scheme {
        IgtScheme::One => Deck::new(50.0, &[(-25.0, 0.1), (-75.0, 0.1), (-50.0, 0.3)]),
        IgtScheme::Two => Deck::new(50.0, &[(-50.0, 0.5)]),
    };
    let d = Deck::new(50.0, &[(-250.0, 0.1)]);
    [a, b, c, d]
}

/// Four-deck gambling task. Each draw is a one-step episode; decks never
/// deplete.
#[derive(Debug, Clone)]
pub struct IgtEnv {
    scheme: IgtScheme,
    decks: [Deck; 4],
    rng: RngStream,
}

impl IgtEnv {
    pub fn new(scheme: IgtScheme, rng: RngStream) -> Self {
        Self {
            scheme,
            decks: decks(scheme),
            rng,
        }
    }

    pub fn scheme(&self) -> IgtScheme {
        self.scheme
    }

    pub fn deck(&self, index: usize) -> &Deck {
        &self.decks[index]
    }

    pub fn draw(&mut self, deck: usize) -> Result<RewardPair> {
        match self.decks.get(deck) {
            Some(d) => Ok(d.draw(&mut self.rng)),
            None => Err(Error::InvalidAction {
                action: deck,
                available: 4,
            }),
        }
    }

    fn observation() -> Observation {
        Observation {
            state: 0,
            actions: 4,
            context: ContextSpec::constant_vector(1),
        }
    }
}

impl Environment for IgtEnv {
    fn reset(&mut self) -> Observation {
        Self::observation()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let reward = self.draw(action)?;
        Ok(Step {
            observation: Self::observation(),
            reward,
            done: true,
            terminal: true,
        })
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn context_spec(&self) -> ContextSpec {
        ContextSpec::Constant { dim: 1 }
    }

    fn reward_bounds(&self) -> Option<(f64, f64)> {
        let lo = self.decks.iter().map(Deck::worst).fold(f64::INFINITY, f64::min);
        let hi = self.decks.iter().map(|d| d.win).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    /// Decks C and D.
    fn better_actions(&self) -> Option<Vec<usize>> {
        Some(vec![2, 3])
    }
}
