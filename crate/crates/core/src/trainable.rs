//! The incremental-training contract.
//!
//! A [`Learner`] advances one iteration at a time and reports its validation
//! metric after each. A [`TrainableSession`] wraps a learner with progress
//! bookkeeping so a model can be trained to `m` iterations, set aside, and
//! later resumed to its full budget. Iterations are counted from 1: the
//! metric "after m iterations" is `trace.metric_by_iteration[m - 1]`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricError;
use crate::space::Configuration;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("target {target} exceeds the full budget of {full_budget} iterations")]
    BeyondBudget { target: usize, full_budget: usize },
    #[error("target {target} is below the {done} iterations already trained")]
    Regress { target: usize, done: usize },
    #[error("metric after iteration {m} requested but only {done} iterations trained")]
    InsufficientProgress { m: usize, done: usize },
    #[error("iteration index must be at least 1")]
    ZeroIteration,
    #[error("final metric requested before training completed")]
    Incomplete,
    #[error("no learner available for configuration #{0}")]
    UnknownConfiguration(usize),
    #[error("invalid learner setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// How training cost is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// One unit per iteration, independent of the machine.
    #[default]
    Units,
    /// Measured wall-clock seconds per iteration.
    WallClock,
}

/// A model trained one iteration at a time.
pub trait Learner: Send {
    /// Metric of the untrained model, if the learner defines one.
    fn initial_metric(&self) -> Option<f64> {
        None
    }

    /// Runs one more iteration and returns the validation metric afterwards.
    fn step(&mut self) -> Result<f64, TrainError>;
}

/// Builds learners for configurations. Implementations own the data and the
/// seed, and must derive each learner's randomness from the configuration
/// index alone so sessions never share RNG state.
pub trait LearnerFactory: Sync {
    /// Iterations that constitute full training for `config`.
    fn full_budget(&self, config: &Configuration) -> usize;

    fn create(&self, config: &Configuration) -> Result<Box<dyn Learner>, TrainError>;

    fn cost_mode(&self) -> CostMode {
        CostMode::Units
    }

    fn open(&self, config: &Configuration) -> Result<TrainableSession, TrainError> {
        let full_budget = self.full_budget(config);
        if full_budget == 0 {
            return Err(TrainError::Setup(format!("configuration #{} has a zero budget", config.index)));
        }
        let learner = self.create(config)?;
        Ok(TrainableSession::new(config.clone(), full_budget, learner, self.cost_mode()))
    }
}

/// One model's learning curve.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    /// Metric before any training (plotted at iteration 0), when defined.
    pub initial_metric: Option<f64>,
    pub metric_by_iteration: Vec<f64>,
    pub cost_units_by_iteration: Vec<f64>,
    pub completed: bool,
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.metric_by_iteration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric_by_iteration.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.cost_units_by_iteration.iter().sum()
    }

    /// Rows of `(iteration, metric, cost)`, starting at iteration 0 when the
    /// initial metric is known.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let initial = self.initial_metric.map(|m| (0, m, 0.0));
        initial.into_iter().chain(
            self.metric_by_iteration
                .iter()
                .zip(&self.cost_units_by_iteration)
                .enumerate()
                .map(|(i, (&m, &c))| (i + 1, m, c)),
        )
    }

    /// Writes `iteration,metric,cost_units` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "metric", "cost_units"])?;
        for (i, m, c) in self.rows() {
            w.write_record([i.to_string(), m.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A learner plus its progress toward the full budget.
pub struct TrainableSession {
    configuration: Configuration,
    full_budget: usize,
    trace: TrainingTrace,
    learner: Box<dyn Learner>,
    cost_mode: CostMode,
}

impl std::fmt::Debug for TrainableSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainableSession")
            .field("configuration", &self.configuration.index)
            .field("iterations_done", &self.iterations_done())
            .field("full_budget", &self.full_budget)
            .finish()
    }
}

impl TrainableSession {
    pub fn new(
        configuration: Configuration,
        full_budget: usize,
        learner: Box<dyn Learner>,
        cost_mode: CostMode,
    ) -> Self {
        let trace = TrainingTrace { initial_metric: learner.initial_metric(), ..Default::default() };
        Self { configuration, full_budget, trace, learner, cost_mode }
    }

    pub fn configuration(&self) -> &Configuration {
        &self.configuration
    }

    pub fn iterations_done(&self) -> usize {
        self.trace.len()
    }

    pub fn full_budget(&self) -> usize {
        self.full_budget
    }

    pub fn trace(&self) -> &TrainingTrace {
        &self.trace
    }

    pub fn into_trace(self) -> TrainingTrace {
        self.trace
    }

    pub fn is_complete(&self) -> bool {
        self.trace.completed
    }

    /// Trains until exactly `target` iterations are done. Returns the cost of
    /// the newly run iterations.
    pub fn advance(&mut self, target: usize) -> Result<f64, TrainError> {
        if target > self.full_budget {
            return Err(TrainError::BeyondBudget { target, full_budget: self.full_budget });
        }
        let done = self.iterations_done();
        if target < done {
            return Err(TrainError::Regress { target, done });
        }
        let mut spent = 0.0;
        for _ in done..target {
            let started = (self.cost_mode == CostMode::WallClock).then(Instant::now);
            let metric = self.learner.step()?;
            debug_assert!((0.0..=1.0).contains(&metric), "metric {metric} outside [0, 1]");
            let cost = started.map_or(1.0, |t| t.elapsed().as_secs_f64());
            self.trace.metric_by_iteration.push(metric);
            self.trace.cost_units_by_iteration.push(cost);
            spent += cost;
        }
        self.trace.completed = self.iterations_done() == self.full_budget;
        Ok(spent)
    }

    /// Trains the remaining iterations.
    pub fn finish(&mut self) -> Result<f64, TrainError> {
        self.advance(self.full_budget)
    }

    /// Metric after `m` completed iterations (1-based).
    pub fn early_metric(&self, m: usize) -> Result<f64, TrainError> {
        if m == 0 {
            return Err(TrainError::ZeroIteration);
        }
        self.trace
            .metric_by_iteration
            .get(m - 1)
            .copied()
            .ok_or(TrainError::InsufficientProgress { m, done: self.iterations_done() })
    }

    pub fn final_metric(&self) -> Result<f64, TrainError> {
        if !self.trace.completed {
            return Err(TrainError::Incomplete);
        }
        Ok(*self.trace.metric_by_iteration.last().expect("completed trace is non-empty"))
    }
}

/// Replays a recorded learning curve. `curve[0]` is the metric before
/// training and `curve[i]` the metric after `i` iterations.
#[derive(Debug, Clone)]
pub struct ReplayLearner {
    curve: Vec<f64>,
    position: usize,
}

impl ReplayLearner {
    pub fn new(curve: Vec<f64>) -> Result<Self, TrainError> {
        if curve.len() < 2 {
            return Err(TrainError::Setup("replay curve needs an initial point and at least one iteration".into()));
        }
        if let Some(v) = curve.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(TrainError::Setup(format!("replay metric {v} outside [0, 1]")));
        }
        Ok(Self { curve, position: 0 })
    }

    pub fn iterations(&self) -> usize {
        self.curve.len() - 1
    }
}

impl Learner for ReplayLearner {
    fn initial_metric(&self) -> Option<f64> {
        Some(self.curve[0])
    }

    fn step(&mut self) -> Result<f64, TrainError> {
        self.position += 1;
        self.curve
            .get(self.position)
            .copied()
            .ok_or(TrainError::BeyondBudget { target: self.position, full_budget: self.curve.len() - 1 })
    }
}

/// Serves recorded curves keyed by configuration index.
#[derive(Debug, Clone, Default)]
pub struct ReplayFactory {
    curves: BTreeMap<usize, Vec<f64>>,
}

impl ReplayFactory {
    pub fn new(curves: BTreeMap<usize, Vec<f64>>) -> Self {
        Self { curves }
    }

    pub fn insert(&mut self, index: usize, curve: Vec<f64>) {
        self.curves.insert(index, curve);
    }
}

impl LearnerFactory for ReplayFactory {
    fn full_budget(&self, config: &Configuration) -> usize {
        self.curves.get(&config.index).map_or(0, |c| c.len().saturating_sub(1))
    }

    fn create(&self, config: &Configuration) -> Result<Box<dyn Learner>, TrainError> {
        let curve = self.curves.get(&config.index).ok_or(TrainError::UnknownConfiguration(config.index))?;
        Ok(Box::new(ReplayLearner::new(curve.clone())?))
    }
}

/// Validation-accuracy curves of two boosted-tree models over 20 recorded
/// points (iterations 0 through 19).
pub mod fixtures {
    pub const HIGH_PERFORMER: [f64; 20] = [
        0.4356, 0.5344, 0.5839, 0.619, 0.6178, 0.696, 0.7438, 0.7438, 0.7886, 0.7737, 0.8011, 0.8151, 0.8031, 0.8083,
        0.8054, 0.8151, 0.8413, 0.8251, 0.8375, 0.8567,
    ];
    pub const LOW_PERFORMER: [f64; 20] = [
        0.2639, 0.4229, 0.4809, 0.4935, 0.5126, 0.5816, 0.5965, 0.5891, 0.6096, 0.611, 0.6354, 0.6506, 0.6382, 0.6538,
        0.6559, 0.6832, 0.6989, 0.7032, 0.6895, 0.6743,
    ];
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn cfg(index: usize) -> Configuration {
        Configuration { assignments: BTreeMap::new(), index }
    }

    fn replay(curve: &[f64]) -> TrainableSession {
        let learner = ReplayLearner::new(curve.to_vec()).unwrap();
        let budget = learner.iterations();
        TrainableSession::new(cfg(0), budget, Box::new(learner), CostMode::Units)
    }

    #[test]
    fn early_metric_is_one_based() {
        let mut s = replay(&HIGH_PERFORMER);
        s.advance(2).unwrap();
        assert_eq!(s.early_metric(2).unwrap(), 0.5839);
        assert_eq!(s.early_metric(1).unwrap(), 0.5344);

        let mut s = replay(&LOW_PERFORMER);
        s.advance(3).unwrap();
        assert_eq!(s.early_metric(3).unwrap(), 0.4935);
        assert_eq!(s.early_metric(s.iterations_done()).unwrap(), *s.trace().metric_by_iteration.last().unwrap());
    }

    #[test]
    fn final_metrics_of_fixtures() {
        let mut s = replay(&HIGH_PERFORMER);
        assert_eq!(s.final_metric(), Err(TrainError::Incomplete));
        s.finish().unwrap();
        assert_eq!(s.final_metric().unwrap(), 0.8567);
        assert_eq!(s.iterations_done(), 19);

        let mut s = replay(&LOW_PERFORMER);
        s.finish().unwrap();
        assert_eq!(s.final_metric().unwrap(), 0.6743);
    }

    #[test]
    fn single_iteration_budget() {
        let mut s = replay(&[0.1, 0.6]);
        s.finish().unwrap();
        assert_eq!(s.final_metric().unwrap(), s.early_metric(1).unwrap());
    }

    #[test]
    fn advance_is_idempotent_at_current_progress() {
        let mut s = replay(&HIGH_PERFORMER);
        s.advance(4).unwrap();
        let before = s.trace().clone();
        assert_eq!(s.advance(4).unwrap(), 0.0);
        assert_eq!(s.trace(), &before);
    }

    #[test]
    fn split_run_equals_straight_run() {
        let mut split = replay(&HIGH_PERFORMER);
        split.advance(2).unwrap();
        split.finish().unwrap();
        let mut straight = replay(&HIGH_PERFORMER);
        straight.finish().unwrap();
        assert_eq!(split.trace(), straight.trace());
    }

    #[test]
    fn advance_errors() {
        let mut s = replay(&HIGH_PERFORMER);
        assert_eq!(s.advance(20), Err(TrainError::BeyondBudget { target: 20, full_budget: 19 }));
        s.advance(5).unwrap();
        assert_eq!(s.advance(3), Err(TrainError::Regress { target: 3, done: 5 }));
        assert_eq!(s.early_metric(6), Err(TrainError::InsufficientProgress { m: 6, done: 5 }));
        assert_eq!(s.early_metric(0), Err(TrainError::ZeroIteration));
    }

    #[test]
    fn trace_bookkeeping() {
        let mut s = replay(&LOW_PERFORMER);
        s.advance(7).unwrap();
        assert_eq!(s.trace().metric_by_iteration.len(), 7);
        assert_eq!(s.trace().cost_units_by_iteration.len(), 7);
        assert_eq!(s.trace().total_cost(), 7.0);
        assert!(!s.is_complete());
    }

    #[test]
    fn csv_export_reproduces_twenty_points() {
        let mut s = replay(&HIGH_PERFORMER);
        s.finish().unwrap();
        let mut out = Vec::new();
        s.trace().write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,metric,cost_units");
        assert_eq!(lines.len(), 21);
        assert_eq!(lines[1], "0,0.4356,0");
        assert_eq!(lines[20], "19,0.8567,1");
    }

    #[test]
    fn replay_factory_budgets() {
        let mut f = ReplayFactory::default();
        f.insert(3, HIGH_PERFORMER.to_vec());
        assert_eq!(f.full_budget(&cfg(3)), 19);
        assert!(f.open(&cfg(4)).is_err());
        assert!(ReplayLearner::new(vec![0.5]).is_err());
        assert!(ReplayLearner::new(vec![0.5, 1.5]).is_err());
    }
}
