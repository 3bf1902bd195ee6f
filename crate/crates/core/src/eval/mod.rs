//! Experiment orchestration and the metrics computed from its results.

mod metrics;
mod run;

pub use metrics::{
    average_wins, learning_curves, pairwise_wins, CurveAccumulator, CurvePoint, LearningCurve, Metric, PairwiseMatrix,
};
pub use run::{for_each_scenario, run_cell, run_experiment, Cell, Experiment, RunResult, Task};
