//! A small PacMan gridworld.
//!
//! Rewards per frame: -1 time penalty, +10 per pac-dot, +500 for clearing the
//! maze, +200 per scared ghost eaten, -500 on being caught. Eating a power
//! pellet scares every ghost for 40 frames; scared ghosts move every other
//! frame and flee instead of chase.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{ContextSpec, Environment, Observation, Step};
use crate::error::{Error, Result};
use crate::reward::RewardPair;
use crate::rng::RngStream;

pub const PACMAN_CONTEXT_DIM: usize = 8;

const LAYOUT: [&str; 9] = [
    "#########",
    "#o.....o#",
    "#.#.#.#.#",
    "#.......#",
    "#.#G G#.#",
    "#.......#",
    "#.#.#.#.#",
    "#...P...#",
    "#########",
];
const WIDTH: usize = 9;
const HEIGHT: usize = 9;
const CENTER: Pos = Pos { row: 4, col: 4 };

const DOT_REWARD: f64 = 10.0;
const WIN_REWARD: f64 = 500.0;
const GHOST_REWARD: f64 = 200.0;
const STEP_PENALTY: f64 = -1.0;
const DEATH_PENALTY: f64 = -500.0;
const SCARED_FRAMES: u32 = 40;
const GHOST_GREED: f64 = 0.8;
pub const DEFAULT_MAX_FRAMES: usize = 500;
/// Largest Manhattan distance between two open cells.
const MAX_DISTANCE: f64 = ((WIDTH - 3) + (HEIGHT - 3)) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    fn index(self) -> usize {
        self.row * WIDTH + self.col
    }

    fn manhattan(self, other: Pos) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    fn offset(self, action: Action) -> Pos {
        match action {
            Action::North => Pos::new(self.row - 1, self.col),
            Action::South => Pos::new(self.row + 1, self.col),
            Action::East => Pos::new(self.row, self.col + 1),
            Action::West => Pos::new(self.row, self.col - 1),
            Action::Stay => self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    North,
    South,
    East,
    West,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::North, Action::South, Action::East, Action::West, Action::Stay];
    pub const MOVES: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ghost {
    pub pos: Pos,
    pub scared: bool,
    /// Scared ghosts skip every other frame.
    skip_next: bool,
}

#[derive(Debug, Clone)]
struct Maze {
    walls: [bool; WIDTH * HEIGHT],
    dots: [bool; WIDTH * HEIGHT],
    pellets: [bool; WIDTH * HEIGHT],
    pacman: Pos,
    ghosts: Vec<Pos>,
}

fn parse_layout() -> Maze {
    let mut maze = Maze {
        walls: [false; WIDTH * HEIGHT],
        dots: [false; WIDTH * HEIGHT],
        pellets: [false; WIDTH * HEIGHT],
        pacman: CENTER,
        ghosts: Vec::new(),
    };
    for (row, line) in LAYOUT.iter().enumerate() {
        for (col, ch) in line.chars().enumerate() {
            let p = Pos::new(row, col);
            match ch {
                '#' => maze.walls[p.index()] = true,
                '.' => maze.dots[p.index()] = true,
                'o' => maze.pellets[p.index()] = true,
                'P' => maze.pacman = p,
                'G' => maze.ghosts.push(p),
                _ => {}
            }
        }
    }
    maze
}

#[derive(Debug, Clone)]
pub struct PacmanEnv {
    maze: Maze,
    dots: [bool; WIDTH * HEIGHT],
    pellets: [bool; WIDTH * HEIGHT],
    initial_dots: usize,
    dots_left: usize,
    pacman: Pos,
    ghosts: Vec<Ghost>,
    scared_timer: u32,
    frame: usize,
    max_frames: usize,
    done: bool,
    terminal: bool,
    score: RewardPair,
    rng: RngStream,
}

impl PacmanEnv {
    pub fn new(rng: RngStream) -> Self {
        let maze = parse_layout();
        let initial_dots = maze.dots.iter().filter(|d| **d).count();
        let mut env = Self {
            dots: maze.dots,
            pellets: maze.pellets,
            pacman: maze.pacman,
            ghosts: Vec::new(),
            initial_dots,
            dots_left: initial_dots,
            maze,
            scared_timer: 0,
            frame: 0,
            max_frames: DEFAULT_MAX_FRAMES,
            done: false,
            terminal: false,
            score: RewardPair::ZERO,
            rng,
        };
        env.restart();
        env
    }

    /// Frames after which an episode is cut off (not a terminal state).
    pub fn with_max_frames(mut self, max_frames: usize) -> Self {
        self.max_frames = max_frames.max(1);
        self
    }

    fn restart(&mut self) {
        self.dots = self.maze.dots;
        self.pellets = self.maze.pellets;
        self.dots_left = self.initial_dots;
        self.pacman = self.maze.pacman;
        self.ghosts = self
            .maze
            .ghosts
            .iter()
            .map(|&pos| Ghost {
                pos,
                scared: false,
                skip_next: false,
            })
            .collect();
        self.scared_timer = 0;
        self.frame = 0;
        self.done = false;
        self.terminal = false;
        self.score = RewardPair::ZERO;
    }

    pub fn pacman(&self) -> Pos {
        self.pacman
    }

    pub fn ghosts(&self) -> &[Ghost] {
        &self.ghosts
    }

    pub fn dots_left(&self) -> usize {
        self.dots_left
    }

    pub fn initial_dots(&self) -> usize {
        self.initial_dots
    }

    pub fn scared_timer(&self) -> u32 {
        self.scared_timer
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Sum of this episode's rewards so far.
    pub fn score(&self) -> RewardPair {
        self.score
    }

    pub fn center() -> Pos {
        CENTER
    }

    pub fn is_wall(&self, p: Pos) -> bool {
        self.maze.walls[p.index()]
    }

    pub fn has_dot(&self, p: Pos) -> bool {
        self.dots[p.index()]
    }

    /// Moves pieces directly; intended for tests and scripted scenarios.
    pub fn place(&mut self, pacman: Pos, ghosts: &[Pos]) {
        assert!(!self.is_wall(pacman));
        self.pacman = pacman;
        for (g, &p) in self.ghosts.iter_mut().zip(ghosts) {
            assert!(!self.maze.walls[p.index()]);
            g.pos = p;
        }
    }

    /// Puts every ghost in the scared state with `frames` remaining.
    pub fn scare(&mut self, frames: u32) {
        self.scared_timer = frames;
        for g in &mut self.ghosts {
            g.scared = frames > 0;
            g.skip_next = false;
        }
    }

    /// Removes every dot except those at `keep`.
    pub fn clear_dots_except(&mut self, keep: &[Pos]) {
        for (i, d) in self.dots.iter_mut().enumerate() {
            let p = Pos::new(i / WIDTH, i % WIDTH);
            *d = *d && keep.contains(&p);
        }
        self.dots_left = self.dots.iter().filter(|d| **d).count();
    }

    fn legal_moves(&self, from: Pos) -> Vec<Action> {
        Action::MOVES
            .into_iter()
            .filter(|&a| !self.is_wall(from.offset(a)))
            .collect()
    }

    fn move_ghost(&mut self, idx: usize) {
        let ghost = self.ghosts[idx];
        if ghost.scared && ghost.skip_next {
            self.ghosts[idx].skip_next = false;
            return;
        }
        let moves = self.legal_moves(ghost.pos);
        let greedy = self.rng.random_bool(GHOST_GREED);
        let chosen = if greedy {
            let dist = |a: Action| ghost.pos.offset(a).manhattan(self.pacman) as i64;
            let key = |a: Action| if ghost.scared { -dist(a) } else { dist(a) };
            let best = moves.iter().map(|&a| key(a)).min().expect("ghosts always have a move");
            let ties: Vec<Action> = moves.iter().copied().filter(|&a| key(a) == best).collect();
            *ties.choose(&mut self.rng).expect("non-empty")
        } else {
            *moves.choose(&mut self.rng).expect("ghosts always have a move")
        };
        let g = &mut self.ghosts[idx];
        g.pos = g.pos.offset(chosen);
        g.skip_next = g.scared;
    }

    /// Resolves contact between PacMan and ghosts. Returns true if PacMan died.
    fn resolve_collisions(&mut self, before: &[Pos], pac_before: Pos, reward: &mut RewardPair) -> bool {
        for i in 0..self.ghosts.len() {
            let g = self.ghosts[i];
            let same_cell = g.pos == self.pacman;
            let crossed = !before.is_empty() && before[i] == self.pacman && g.pos == pac_before;
            if !(same_cell || crossed) {
                continue;
            }
            if g.scared {
                reward.positive += GHOST_REWARD;
                self.ghosts[i] = Ghost {
                    pos: CENTER,
                    scared: false,
                    skip_next: false,
                };
            } else {
                reward.negative += DEATH_PENALTY;
                return true;
            }
        }
        false
    }

    /// Advances one frame.
    pub fn pacman_step(&mut self, action: Action) -> Result<(Observation, RewardPair, bool)> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let mut reward = RewardPair {
            positive: 0.0,
            negative: STEP_PENALTY,
        };
        let pac_before = self.pacman;
        let target = self.pacman.offset(action);
        if !self.is_wall(target) {
            self.pacman = target;
        }
        let cell = self.pacman.index();
        if self.dots[cell] {
            self.dots[cell] = false;
            self.dots_left -= 1;
            reward.positive += DOT_REWARD;
        }
        if self.pellets[cell] {
            self.pellets[cell] = false;
            self.scare(SCARED_FRAMES);
        }

        let mut died = self.resolve_collisions(&[], pac_before, &mut reward);
        let won = !died && self.dots_left == 0;
        if won {
            reward.positive += WIN_REWARD;
        }

        if !died && !won {
            let before: Vec<Pos> = self.ghosts.iter().map(|g| g.pos).collect();
            for i in 0..self.ghosts.len() {
                self.move_ghost(i);
            }
            died = self.resolve_collisions(&before, pac_before, &mut reward);
        }

        if self.scared_timer > 0 {
            self.scared_timer -= 1;
            if self.scared_timer == 0 {
                for g in &mut self.ghosts {
                    g.scared = false;
                    g.skip_next = false;
                }
            }
        }

        self.frame += 1;
        self.terminal = died || won;
        self.done = self.terminal || self.frame >= self.max_frames;
        self.score += reward;
        Ok((self.observation(), reward, self.done))
    }

    /// True once the episode ended by death or by clearing the maze.
    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn nearest<F: Fn(Pos) -> bool>(&self, pred: F) -> Option<usize> {
        (0..WIDTH * HEIGHT)
            .map(|i| Pos::new(i / WIDTH, i % WIDTH))
            .filter(|&p| pred(p))
            .map(|p| p.manhattan(self.pacman))
            .min()
    }

    fn nearest_dot_from(&self, from: Pos) -> Option<usize> {
        (0..WIDTH * HEIGHT)
            .filter(|&i| self.dots[i])
            .map(|i| Pos::new(i / WIDTH, i % WIDTH).manhattan(from))
            .min()
    }

    fn nearest_threat_from(&self, from: Pos) -> Option<usize> {
        self.ghosts.iter().filter(|g| !g.scared).map(|g| g.pos.manhattan(from)).min()
    }

    /// Context features, each in `[0, 1]`:
    /// nearest dot, pellet and ghost distances; scared-timer fraction;
    /// fraction of dots left; whether some move approaches a dot; whether
    /// some move gets away from the nearest unscared ghost; whether PacMan
    /// stands on a junction.
    pub fn features(&self) -> [f64; PACMAN_CONTEXT_DIM] {
        let norm = |d: Option<usize>| d.map_or(1.0, |d| (d as f64 / MAX_DISTANCE).min(1.0));
        let moves = self.legal_moves(self.pacman);
        let here_dot = self.nearest_dot_from(self.pacman);
        let approaches_dot = match here_dot {
            Some(d) => moves
                .iter()
                .any(|&a| self.nearest_dot_from(self.pacman.offset(a)).is_some_and(|n| n < d)),
            None => false,
        };
        let here_threat = self.nearest_threat_from(self.pacman);
        let escapes = match here_threat {
            Some(d) => moves
                .iter()
                .any(|&a| self.nearest_threat_from(self.pacman.offset(a)).is_some_and(|n| n > d)),
            None => false,
        };
        [
            norm(here_dot),
            norm(self.nearest(|p| self.pellets[p.index()])),
            norm(self.ghosts.iter().map(|g| g.pos.manhattan(self.pacman)).min()),
            self.scared_timer as f64 / SCARED_FRAMES as f64,
            self.dots_left as f64 / self.initial_dots as f64,
            f64::from(u8::from(approaches_dot)),
            f64::from(u8::from(escapes)),
            f64::from(u8::from(moves.len() >= 3)),
        ]
    }

    /// Tabular state id: PacMan cell, ghost cells, scared-timer bucket
    /// `{0, 1-20, 21-40}` and a bucket of the dots left.
    pub fn state_id(&self) -> u64 {
        let cells = (WIDTH * HEIGHT) as u64;
        let mut id = self.pacman.index() as u64;
        for g in &self.ghosts {
            id = id * cells + g.pos.index() as u64;
        }
        let scared = match self.scared_timer {
            0 => 0,
            1..=20 => 1,
            _ => 2,
        };
        id = id * 3 + scared;
        // buckets of 5 dots; 0 only when the maze is clear
        let dots = self.dots_left.div_ceil(5) as u64;
        id * 16 + dots.min(15)
    }

    pub fn observation(&self) -> Observation {
        Observation {
            state: self.state_id(),
            actions: Action::ALL.len(),
            context: self.features().to_vec(),
        }
    }
}

impl Environment for PacmanEnv {
    fn reset(&mut self) -> Observation {
        self.restart();
        self.observation()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let act = Action::from_index(action).ok_or(Error::InvalidAction {
            action,
            available: Action::ALL.len(),
        })?;
        let (observation, reward, done) = self.pacman_step(act)?;
        Ok(Step {
            observation,
            reward,
            done,
            terminal: self.terminal,
        })
    }

    fn num_actions(&self) -> usize {
        Action::ALL.len()
    }

    fn context_spec(&self) -> ContextSpec {
        ContextSpec::Pacman
    }

    fn reward_bounds(&self) -> Option<(f64, f64)> {
        None
    }
}
