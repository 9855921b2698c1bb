//! Experiment harness: builds learners from a JSON config, runs repeated
//! PHO-versus-random-search trials on fresh splits, aggregates statistics,
//! and writes the plot CSVs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{evaluate_pool, random_search, write_pool_csv, PoolEntry};
use crate::data::{split, DataError, Dataset, SyntheticSpec};
use crate::derive_seed;
use crate::learners::{AnalyticFactory, BoostedStumpsFactory, LogisticSgdFactory, TrainingData};
use crate::metrics::{MetricError, MetricKind};
use crate::space::{Configuration, SearchSpace, SpaceError};
use crate::stats::{summarize, t_test_two_tailed, StatsError, Summary, TTestKind, TTestResult};
use crate::trainable::{CostMode, LearnerFactory, ReplayFactory, TrainError};
use crate::tuner::{par_map, pho, PhoParams, PredictorSummary, TuneError, TuneResult};

/// Harness errors, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl HarnessError {
    /// 2 for bad inputs, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Space(_) | HarnessError::Data(_) => 2,
            _ => 3,
        }
    }
}

impl From<TrainError> for HarnessError {
    fn from(e: TrainError) -> Self {
        HarnessError::Tune(TuneError::Train(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    #[default]
    BoostedStumps,
    LogisticSgd,
    Analytic,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        label_column: String,
        positive_label: String,
        #[serde(default = "default_delimiter")]
        delimiter: char,
    },
    Synthetic(SyntheticSpec),
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhoSettings {
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl Default for PhoSettings {
    fn default() -> Self {
        Self { n: 5, m: 2, k: 5 }
    }
}

/// Curve family used by the analytic learner; one family is drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticSettings {
    pub rate: f64,
    pub noise_sd: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for AnalyticSettings {
    fn default() -> Self {
        Self { rate: 0.3, noise_sd: 0.02, low: 0.5, high: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    /// Search-space JSON. Defaults to the 540-point boosted-stumps grid.
    pub space: Option<PathBuf>,
    pub dataset: Option<DatasetSource>,
    /// JSON array of curves, one per grid index, for the replay learner.
    pub replay_curves: Option<PathBuf>,
    pub metric: MetricKind,
    pub pho: PhoSettings,
    pub trials: usize,
    pub seed: u64,
    pub train_fraction: f64,
    /// Trailing share of the (shuffled) training rows used for validation.
    pub validation_fraction: f64,
    pub stratified: bool,
    /// Iterations of full training (boosting rounds or epochs) before any
    /// `rounds_fraction` scaling.
    pub full_budget: usize,
    pub cost_mode: CostMode,
    pub analytic: AnalyticSettings,
    pub pooled_t_test: bool,
    /// Evaluate the whole pool on the first trial's split for the pool CSV.
    pub emit_pool: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            learner: LearnerKind::BoostedStumps,
            space: None,
            dataset: Some(DatasetSource::Synthetic(SyntheticSpec::default())),
            replay_curves: None,
            metric: MetricKind::Accuracy,
            pho: PhoSettings::default(),
            trials: 200,
            seed: 0,
            train_fraction: 0.67,
            validation_fraction: 0.2,
            stratified: false,
            full_budget: 20,
            cost_mode: CostMode::Units,
            analytic: AnalyticSettings::default(),
            pooled_t_test: false,
            emit_pool: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: line {}: {e}", path.display(), e.line())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = config.space.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.replay_curves.as_mut() {
            resolve(p);
        }
        if let Some(DatasetSource::Csv { path, .. }) = config.dataset.as_mut() {
            resolve(path);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail("train_fraction must lie strictly between 0 and 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return fail("validation_fraction must lie strictly between 0 and 1");
        }
        if self.full_budget == 0 {
            return fail("full_budget must be positive");
        }
        let needs_data = matches!(self.learner, LearnerKind::BoostedStumps | LearnerKind::LogisticSgd);
        if needs_data && self.dataset.is_none() {
            return fail("this learner needs a dataset");
        }
        if self.learner == LearnerKind::Replay && self.replay_curves.is_none() {
            return fail("the replay learner needs replay_curves");
        }
        for p in self.space.iter().chain(&self.replay_curves) {
            if !p.exists() {
                return Err(HarnessError::Config(format!("{} does not exist", p.display())));
            }
        }
        if let Some(DatasetSource::Csv { path, .. }) = &self.dataset {
            if !path.exists() {
                return Err(HarnessError::Config(format!("{} does not exist", path.display())));
            }
        }
        Ok(())
    }

    pub fn pho_params(&self, seed: u64) -> PhoParams {
        PhoParams { n: self.pho.n, m: self.pho.m, k: self.pho.k, seed }
    }
}

/// Per-trial seeds. The split, both tuners' sampling streams and the
/// learners each get their own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub split: u64,
    pub pho: u64,
    pub random_search: u64,
    pub learner: u64,
}

impl TrialSeeds {
    pub fn derive(base: u64, trial: usize, attempt: u32) -> Self {
        let mut split = derive_seed(base, trial as u64);
        if attempt > 0 {
            split = derive_seed(split, 0x5eed_0000 + u64::from(attempt));
        }
        Self { split, pho: derive_seed(split, 1), random_search: derive_seed(split, 2), learner: derive_seed(split, 3) }
    }
}

const MAX_SPLIT_ATTEMPTS: u32 = 10;

/// Loaded inputs shared by every trial.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub space: SearchSpace,
    pub candidates: Vec<Configuration>,
    dataset: Option<Dataset>,
    replay: Option<ReplayFactory>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let space = match &config.space {
            Some(p) => SearchSpace::load(p)?,
            None => SearchSpace::default_boosted(),
        };
        Self::build(config, space)
    }

    /// Like [`Experiment::new`] with the space supplied directly; the
    /// config's `space` path is dropped.
    pub fn with_space(mut config: ExperimentConfig, space: SearchSpace) -> Result<Self, HarnessError> {
        config.space = None;
        config.validate()?;
        Self::build(config, space)
    }

    fn build(config: ExperimentConfig, space: SearchSpace) -> Result<Self, HarnessError> {
        let dataset = match (&config.learner, &config.dataset) {
            (LearnerKind::BoostedStumps | LearnerKind::LogisticSgd, Some(source)) => Some(load_dataset(source)?),
            _ => None,
        };
        let replay = match (&config.learner, &config.replay_curves) {
            (LearnerKind::Replay, Some(p)) => Some(load_replay(p)?),
            _ => None,
        };
        let candidates = space.enumerate_grid();
        Ok(Self { config, space, candidates, dataset, replay })
    }

    /// Builds the learner factory for one trial, resampling the split when
    /// the validation subset cannot support the metric.
    pub fn factory(&self, trial: usize) -> Result<(TrialSeeds, Box<dyn LearnerFactory>), HarnessError> {
        let cfg = &self.config;
        for attempt in 0..MAX_SPLIT_ATTEMPTS {
            let seeds = TrialSeeds::derive(cfg.seed, trial, attempt);
            let built: Result<Box<dyn LearnerFactory>, TrainError> = match cfg.learner {
                LearnerKind::Analytic => {
                    let a = cfg.analytic;
                    Ok(Box::new(AnalyticFactory::random(
                        self.candidates.len(),
                        seeds.learner,
                        a.rate,
                        a.noise_sd,
                        a.low,
                        a.high,
                        cfg.full_budget,
                    )))
                }
                LearnerKind::Replay => Ok(Box::new(self.replay.clone().expect("loaded with the config"))),
                LearnerKind::BoostedStumps | LearnerKind::LogisticSgd => {
                    let dataset = self.dataset.as_ref().expect("loaded with the config");
                    let pair = split(dataset, cfg.train_fraction, seeds.split, cfg.stratified)?;
                    let data = TrainingData::carve(&pair.train, cfg.validation_fraction);
                    if cfg.learner == LearnerKind::BoostedStumps {
                        BoostedStumpsFactory::new(data, cfg.metric, seeds.learner, cfg.full_budget)
                            .map(|f| Box::new(f.with_cost_mode(cfg.cost_mode)) as Box<dyn LearnerFactory>)
                    } else {
                        LogisticSgdFactory::new(data, cfg.metric, seeds.learner, cfg.full_budget)
                            .map(|f| Box::new(f.with_cost_mode(cfg.cost_mode)) as Box<dyn LearnerFactory>)
                    }
                }
            };
            match built {
                Ok(f) => return Ok((seeds, f)),
                Err(TrainError::Metric(MetricError::SingleClass)) => {
                    log::warn!(
                        "trial {trial}: validation subset is single-class, resampling split (attempt {})",
                        attempt + 1
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(HarnessError::Run(format!("trial {trial}: no usable split after {MAX_SPLIT_ATTEMPTS} attempts")))
    }

    pub fn run_pho(&self, trial: usize) -> Result<(TrialSeeds, TuneResult), HarnessError> {
        let (seeds, factory) = self.factory(trial)?;
        let result = pho(&self.candidates, factory.as_ref(), &self.config.pho_params(seeds.pho))?;
        Ok((seeds, result))
    }

    pub fn run_random(&self, trial: usize, budget: f64) -> Result<(TrialSeeds, TuneResult), HarnessError> {
        let (seeds, factory) = self.factory(trial)?;
        let result = random_search(&self.candidates, factory.as_ref(), budget, seeds.random_search)?;
        Ok((seeds, result))
    }

    pub fn run_pool(&self, trial: usize) -> Result<Vec<PoolEntry>, HarnessError> {
        let (_, factory) = self.factory(trial)?;
        Ok(evaluate_pool(&self.candidates, factory.as_ref())?)
    }

    /// Trains every candidate of one trial fully and pairs its metric after
    /// `m` iterations with its final metric, the raw material of the
    /// early-versus-final scatter.
    pub fn correlation_study(&self, trial: usize, m: usize) -> Result<Vec<(f64, f64)>, HarnessError> {
        let (_, factory) = self.factory(trial)?;
        let factory = factory.as_ref();
        let pairs = par_map(&self.candidates, |c| -> Result<(f64, f64), TrainError> {
            let mut session = factory.open(c)?;
            session.finish()?;
            Ok((session.early_metric(m)?, session.final_metric()?))
        });
        Ok(pairs.into_iter().collect::<Result<Vec<_>, _>>()?)
    }

    /// One trial: PHO first, then random search with PHO's spent budget on
    /// the same split.
    pub fn run_trial(&self, trial: usize) -> Result<(TrialRow, TuneResult), HarnessError> {
        let (seeds, factory) = self.factory(trial)?;
        let tuned = pho(&self.candidates, factory.as_ref(), &self.config.pho_params(seeds.pho))?;
        let budget = tuned.ledger.total_cost_units;
        let baseline = random_search(&self.candidates, factory.as_ref(), budget, seeds.random_search)?;
        let row = TrialRow {
            trial,
            split_seed: seeds.split,
            pho_best_metric: tuned.best_final_metric,
            rs_best_metric: baseline.best_final_metric,
            pho_best_index: tuned.best_configuration.index,
            rs_best_index: baseline.best_configuration.index,
            pho_budget: budget,
            rs_cost: baseline.ledger.total_cost_units,
            rs_models_evaluated: baseline.fully_trained.len(),
            rs_overrun: baseline.overrun,
            predictor: tuned.predictor,
        };
        Ok((row, tuned))
    }

    pub fn run_comparison(&self) -> Result<ComparisonReport, HarnessError> {
        let trials: Vec<usize> = (0..self.config.trials).collect();
        let outcomes = par_map(&trials, |&t| self.run_trial(t));

        let mut rows = Vec::with_capacity(trials.len());
        let mut failures = Vec::new();
        let mut first_trial = None;
        for (t, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok((row, tuned)) => {
                    if t == 0 {
                        first_trial = Some(tuned);
                    }
                    rows.push(row);
                }
                Err(e) => {
                    log::error!("trial {t} failed: {e}");
                    failures.push(TrialFailure { trial: t, message: e.to_string() });
                }
            }
        }
        if failures.len() * 10 > trials.len() {
            return Err(HarnessError::Run(format!(
                "{} of {} trials failed; first: {}",
                failures.len(),
                trials.len(),
                failures[0].message
            )));
        }
        if rows.is_empty() {
            return Err(HarnessError::Run("no trial completed".into()));
        }

        let pool = if self.config.emit_pool { Some(self.run_pool(0)?) } else { None };
        let pho_scores: Vec<f64> = rows.iter().map(|r| r.pho_best_metric).collect();
        let rs_scores: Vec<f64> = rows.iter().map(|r| r.rs_best_metric).collect();
        let diffs: Vec<f64> = pho_scores.iter().zip(&rs_scores).map(|(a, b)| a - b).collect();
        let tests = |kind| (rows.len() >= 2).then(|| t_test_two_tailed(&pho_scores, &rs_scores, kind)).transpose();
        Ok(ComparisonReport {
            kind: ReportKind::Comparison,
            trials: self.config.trials,
            metric: self.config.metric,
            pho_summary: summarize(&pho_scores)?,
            rs_summary: summarize(&rs_scores)?,
            difference_summary: summarize(&diffs)?,
            mean_difference: diffs.iter().sum::<f64>() / diffs.len() as f64,
            welch_t_test: tests(TTestKind::Welch)?,
            paired_t_test: tests(TTestKind::Paired)?,
            pooled_t_test: if self.config.pooled_t_test { tests(TTestKind::Pooled)? } else { None },
            trial_failures: failures.len(),
            failures,
            rows,
            first_trial,
            pool,
        })
    }
}

fn load_dataset(source: &DatasetSource) -> Result<Dataset, HarnessError> {
    match source {
        DatasetSource::Csv { path, label_column, positive_label, delimiter } => {
            let delimiter = u8::try_from(*delimiter)
                .map_err(|_| HarnessError::Config(format!("delimiter `{delimiter}` is not a single byte")))?;
            Ok(Dataset::load_csv(path, label_column, positive_label, delimiter)?)
        }
        DatasetSource::Synthetic(spec) => Ok(Dataset::synthetic(spec)),
    }
}

fn load_replay(path: &Path) -> Result<ReplayFactory, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let curves: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: line {}: {e}", path.display(), e.line())))?;
    Ok(ReplayFactory::new(curves.into_iter().enumerate().collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub split_seed: u64,
    pub pho_best_metric: f64,
    pub rs_best_metric: f64,
    pub pho_best_index: usize,
    pub rs_best_index: usize,
    pub pho_budget: f64,
    pub rs_cost: f64,
    pub rs_models_evaluated: usize,
    pub rs_overrun: bool,
    pub predictor: Option<PredictorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub kind: ReportKind,
    pub trials: usize,
    pub metric: MetricKind,
    pub pho_summary: Summary,
    pub rs_summary: Summary,
    /// Per-trial PHO minus random-search best metric.
    pub difference_summary: Summary,
    pub mean_difference: f64,
    /// Unpaired, unequal variances.
    pub welch_t_test: Option<TTestResult>,
    pub paired_t_test: Option<TTestResult>,
    pub pooled_t_test: Option<TTestResult>,
    pub trial_failures: usize,
    pub failures: Vec<TrialFailure>,
    pub rows: Vec<TrialRow>,
    /// Full PHO result of trial 0, source of the trace and scatter CSVs.
    pub first_trial: Option<TuneResult>,
    /// Pool evaluated on trial 0's split.
    pub pool: Option<Vec<PoolEntry>>,
}

/// Any JSON document the harness writes and `plots` can read back. On disk
/// each is an object whose `kind` field names the variant.
///
/// Serde's internally tagged enums buffer their input, which loses the
/// integer keys of [`TuneResult::traces`], so the tag is dispatched by hand.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Tune { result: TuneResult },
    Pool { entries: Vec<PoolEntry> },
    Comparison(Box<ComparisonReport>),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ArtifactKind {
    Tune,
    Pool,
    Comparison,
}

#[derive(Serialize, Deserialize)]
struct TuneDoc<T> {
    kind: ArtifactKind,
    result: T,
}

#[derive(Serialize, Deserialize)]
struct PoolDoc<T> {
    kind: ArtifactKind,
    entries: T,
}

#[derive(Deserialize)]
struct KindOnly {
    kind: ArtifactKind,
}

impl Serialize for Artifact {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Artifact::Tune { result } => TuneDoc { kind: ArtifactKind::Tune, result }.serialize(s),
            Artifact::Pool { entries } => PoolDoc { kind: ArtifactKind::Pool, entries }.serialize(s),
            Artifact::Comparison(report) => report.serialize(s),
        }
    }
}

impl Artifact {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        Ok(match serde_json::from_str::<KindOnly>(text)?.kind {
            ArtifactKind::Tune => Artifact::Tune { result: serde_json::from_str::<TuneDoc<TuneResult>>(text)?.result },
            ArtifactKind::Pool => {
                Artifact::Pool { entries: serde_json::from_str::<PoolDoc<Vec<PoolEntry>>>(text)?.entries }
            }
            ArtifactKind::Comparison => Artifact::Comparison(Box::new(serde_json::from_str(text)?)),
        })
    }
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Output { path: path.display().to_string(), message: e.to_string() }
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<(), String>) -> Result<(), HarnessError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| output_err(path, e))?;
    fs::write(path, buf).map_err(|e| output_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    write_with(path, |buf| {
        serde_json::to_writer_pretty(&mut *buf, value).map_err(|e| e.to_string())?;
        buf.push(b'\n');
        Ok(())
    })
}

/// `iteration,model_id,metric` for every trace, iteration 0 included when
/// the learner reports an untrained metric.
pub fn write_traces_csv<W: Write>(result: &TuneResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "model_id", "metric"])?;
    for (id, trace) in &result.traces {
        for (i, m, _) in trace.rows() {
            w.write_record([i.to_string(), id.to_string(), m.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `early_metric,final_metric,predicted`, one row per candidate; fields
/// that were never measured are empty.
pub fn write_scatter_csv<W: Write>(result: &TuneResult, out: W) -> csv::Result<()> {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["early_metric", "final_metric", "predicted"])?;
    for r in &result.table {
        w.write_record([cell(r.early), cell(r.final_metric), cell(r.predicted)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials_csv<W: Write>(rows: &[TrialRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trial",
        "split_seed",
        "pho_best_metric",
        "rs_best_metric",
        "pho_budget",
        "rs_models_evaluated",
        "rs_cost",
    ])?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            r.split_seed.to_string(),
            r.pho_best_metric.to_string(),
            r.rs_best_metric.to_string(),
            r.pho_budget.to_string(),
            r.rs_models_evaluated.to_string(),
            r.rs_cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes whichever of `fig1_traces.csv`, `fig2_pool.csv` and
/// `fig3_scatter.csv` the inputs support. Returns the paths written.
pub fn emit_plots(
    dir: &Path,
    tuned: Option<&TuneResult>,
    pool: Option<&[PoolEntry]>,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
    let mut written = Vec::new();
    if let Some(result) = tuned {
        let p = dir.join("fig1_traces.csv");
        write_with(&p, |b| write_traces_csv(result, b).map_err(|e| e.to_string()))?;
        written.push(p);
    }
    if let Some(entries) = pool {
        let p = dir.join("fig2_pool.csv");
        write_with(&p, |b| write_pool_csv(entries, b).map_err(|e| e.to_string()))?;
        written.push(p);
    }
    if let Some(result) = tuned {
        let p = dir.join("fig3_scatter.csv");
        write_with(&p, |b| write_scatter_csv(result, b).map_err(|e| e.to_string()))?;
        written.push(p);
    }
    Ok(written)
}

/// Emits plot CSVs from a saved artifact.
pub fn emit_plots_from(dir: &Path, artifact: &Artifact) -> Result<Vec<PathBuf>, HarnessError> {
    match artifact {
        Artifact::Tune { result } => emit_plots(dir, Some(result), None),
        Artifact::Pool { entries } => emit_plots(dir, None, Some(entries)),
        Artifact::Comparison(report) => emit_plots(dir, report.first_trial.as_ref(), report.pool.as_deref()),
    }
}

/// Writes the report JSON, the per-trial CSV and all plot CSVs.
pub fn write_comparison(dir: &Path, report: &ComparisonReport) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
    let report_path = dir.join("report.json");
    write_json(&report_path, report)?;
    let trials_path = dir.join("trials.csv");
    write_with(&trials_path, |b| write_trials_csv(&report.rows, b).map_err(|e| e.to_string()))?;
    let mut written = vec![report_path, trials_path];
    written.extend(emit_plots(dir, report.first_trial.as_ref(), report.pool.as_deref())?);
    Ok(written)
}
