//! Built-in learners implementing [`Learner`].
//!
//! | learner          | axis              | meaning                                   | default |
//! |------------------|-------------------|-------------------------------------------|---------|
//! | boosted stumps   | `learning_rate`   | shrinkage applied to every stump         | 0.1     |
//! |                  | `colsample`       | fraction of features searched per round   | 1.0     |
//! |                  | `subsample`       | fraction of rows each stump is fitted on  | 1.0     |
//! |                  | `min_leaf_weight` | minimum hessian mass on each side         | 0.0     |
//! |                  | `rounds_fraction` | fraction of the round cap to train        | 1.0     |
//! | logistic SGD     | `learning_rate`   | step size                                 | 0.1     |
//! |                  | `l2_penalty`      | weight decay (bias excluded)              | 0.0     |
//! |                  | `batch_size`      | rows per mini-batch                       | 16      |
//! |                  | `rounds_fraction` | fraction of the epoch cap to train        | 1.0     |
//!
//! Boosted stumps are the desk-scale analog of gradient-boosted trees; the
//! default 540-point grid (`SearchSpace::default_boosted`) spans the first
//! table block.

use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::derive_seed;
use crate::metrics::{MetricKind, ScoredLabels};
use crate::space::Configuration;
use crate::trainable::{CostMode, Learner, LearnerFactory, TrainError};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn validation_metric(kind: MetricKind, margins: &[f64], data: &Dataset) -> Result<f64, TrainError> {
    let scores: Vec<f64> = margins.iter().map(|&m| sigmoid(m)).collect();
    Ok(kind.evaluate(&ScoredLabels::new(&scores, data.labels())?)?)
}

fn majority_label(data: &Dataset) -> u8 {
    u8::from(2 * data.positive_count() >= data.row_count())
}

fn check_axes(config: &Configuration, known: &[&str]) -> Result<(), TrainError> {
    match config.assignments.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(TrainError::Setup(format!("unknown hyperparameter `{k}`"))),
        None => Ok(()),
    }
}

fn rounds(cap: usize, config: &Configuration) -> usize {
    let fraction = config.get_f64("rounds_fraction").unwrap_or(1.0);
    ((fraction * cap as f64).round() as usize).max(1)
}

/// Everything a learner factory needs besides hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub fit: Arc<Dataset>,
    pub validation: Arc<Dataset>,
}

impl TrainingData {
    /// Carves the trailing `validation_fraction` of `train` as the
    /// validation subset.
    pub fn carve(train: &Dataset, validation_fraction: f64) -> Self {
        let (fit, validation) = train.carve_tail(validation_fraction);
        Self { fit: Arc::new(fit), validation: Arc::new(validation) }
    }

    fn check(&self, metric: MetricKind) -> Result<(), TrainError> {
        if self.fit.row_count() == 0 || self.validation.row_count() == 0 {
            return Err(TrainError::Setup("training and validation subsets must be non-empty".into()));
        }
        if metric == MetricKind::Auc && !self.validation.has_both_classes() {
            return Err(TrainError::Metric(crate::metrics::MetricError::SingleClass));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- stumps

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub min_leaf_weight: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self { learning_rate: 0.1, subsample: 1.0, colsample: 1.0, min_leaf_weight: 0.0 }
    }
}

impl BoostParams {
    pub fn from_config(config: &Configuration) -> Result<Self, TrainError> {
        check_axes(config, &["learning_rate", "subsample", "colsample", "min_leaf_weight", "rounds_fraction"])?;
        let d = Self::default();
        let p = Self {
            learning_rate: config.get_f64("learning_rate").unwrap_or(d.learning_rate),
            subsample: config.get_f64("subsample").unwrap_or(d.subsample),
            colsample: config.get_f64("colsample").unwrap_or(d.colsample),
            min_leaf_weight: config.get_f64("min_leaf_weight").unwrap_or(d.min_leaf_weight),
        };
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !(p.learning_rate > 0.0) || !in_unit(p.subsample) || !in_unit(p.colsample) || !(p.min_leaf_weight >= 0.0) {
            return Err(TrainError::Setup(format!("invalid boosting parameters {p:?}")));
        }
        Ok(p)
    }
}

/// Depth-one regression tree: rows with `x[feature] <= threshold` get `left`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    pub fn output(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedStumpsModel {
    pub stumps: Vec<Stump>,
    pub params: BoostParams,
    pub base_score: f64,
}

impl BoostedStumpsModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_score + self.params.learning_rate * self.stumps.iter().map(|s| s.output(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

/// Fits one stump to `residuals` over `rows`, searching `features` in the
/// given (ascending) order. Ties keep the earliest candidate, i.e. the lowest
/// feature index and then the lowest threshold.
///
/// The split minimizes squared error to the residuals; each leaf then takes
/// the one-step Newton value `Σ residual / Σ hessian` for log-loss.
pub fn fit_stump(
    data: &Dataset,
    sorted_rows: &[Vec<usize>],
    in_sample: &[bool],
    features: &[usize],
    residuals: &[f64],
    hessians: &[f64],
    min_leaf_weight: f64,
) -> Stump {
    let total_r: f64 = (0..residuals.len()).filter(|&i| in_sample[i]).map(|i| residuals[i]).sum();
    let total_h: f64 = (0..hessians.len()).filter(|&i| in_sample[i]).map(|i| hessians[i]).sum();
    let total_n = in_sample.iter().filter(|&&b| b).count() as f64;

    let mut best: Option<(f64, usize, f64)> = None;
    for &f in features {
        let (mut sr, mut sh, mut n) = (0.0, 0.0, 0.0);
        let rows: Vec<usize> = sorted_rows[f].iter().copied().filter(|&i| in_sample[i]).collect();
        for pair in rows.windows(2) {
            let (i, next) = (pair[0], pair[1]);
            sr += residuals[i];
            sh += hessians[i];
            n += 1.0;
            let (a, b) = (data.value(i, f), data.value(next, f));
            if a == b {
                continue;
            }
            if sh < min_leaf_weight || total_h - sh < min_leaf_weight {
                continue;
            }
            let gain = sr * sr / n + (total_r - sr).powi(2) / (total_n - n);
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, a + (b - a) / 2.0));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        let v = newton_value(total_r, total_h);
        return Stump { feature: 0, threshold: f64::INFINITY, left: v, right: v };
    };
    let (mut lr, mut lh, mut rr, mut rh) = (0.0, 0.0, 0.0, 0.0);
    for i in (0..residuals.len()).filter(|&i| in_sample[i]) {
        if data.value(i, feature) <= threshold {
            lr += residuals[i];
            lh += hessians[i];
        } else {
            rr += residuals[i];
            rh += hessians[i];
        }
    }
    Stump { feature, threshold, left: newton_value(lr, lh), right: newton_value(rr, rh) }
}

/// Leaf value `g / h`, zero when the hessian mass has vanished.
pub(crate) fn newton_value(residual_sum: f64, hessian_sum: f64) -> f64 {
    if hessian_sum < 1e-150 {
        0.0
    } else {
        residual_sum / hessian_sum
    }
}

/// Training rows pre-sorted by each feature, shared by all sessions built
/// from one factory.
#[derive(Debug)]
struct SortedTrain {
    data: TrainingData,
    sorted_rows: Vec<Vec<usize>>,
}

impl SortedTrain {
    fn new(data: TrainingData) -> Self {
        let fit = &data.fit;
        let sorted_rows = (0..fit.column_count())
            .map(|f| {
                let mut rows: Vec<usize> = (0..fit.row_count()).collect();
                rows.sort_by(|&a, &b| fit.value(a, f).total_cmp(&fit.value(b, f)).then(a.cmp(&b)));
                rows
            })
            .collect();
        Self { data, sorted_rows }
    }
}

pub struct BoostedStumpsLearner {
    model: BoostedStumpsModel,
    shared: Arc<SortedTrain>,
    metric: MetricKind,
    fit_margin: Vec<f64>,
    valid_margin: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BoostedStumpsLearner {
    pub fn new(data: TrainingData, params: BoostParams, metric: MetricKind, seed: u64) -> Self {
        Self::with_shared(Arc::new(SortedTrain::new(data)), params, metric, seed)
    }

    fn with_shared(shared: Arc<SortedTrain>, params: BoostParams, metric: MetricKind, seed: u64) -> Self {
        let fit = &shared.data.fit;
        let rate = (fit.positive_count() as f64 / fit.row_count() as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (rate / (1.0 - rate)).ln();
        let fit_margin = vec![base_score; fit.row_count()];
        let valid_margin = vec![base_score; shared.data.validation.row_count()];
        Self {
            model: BoostedStumpsModel { stumps: Vec::new(), params, base_score },
            shared,
            metric,
            fit_margin,
            valid_margin,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn model(&self) -> &BoostedStumpsModel {
        &self.model
    }

    /// Mean log-loss on the fitting rows.
    pub fn train_log_loss(&self) -> f64 {
        let fit = &self.shared.data.fit;
        let total: f64 = self
            .fit_margin
            .iter()
            .zip(fit.labels())
            .map(|(&m, &y)| {
                // log(1 + e^-m) for positives, log(1 + e^m) for negatives.
                let z = if y == 1 { -m } else { m };
                z.max(0.0) + (-z.abs()).exp().ln_1p()
            })
            .sum();
        total / fit.row_count() as f64
    }

    fn current_metric(&self) -> Result<f64, TrainError> {
        let valid = &self.shared.data.validation;
        if !self.shared.data.fit.has_both_classes() && self.metric == MetricKind::Accuracy {
            let majority = majority_label(&self.shared.data.fit);
            let hits = valid.labels().iter().filter(|&&l| l == majority).count();
            return Ok(hits as f64 / valid.row_count() as f64);
        }
        validation_metric(self.metric, &self.valid_margin, valid)
    }

    /// Fits and appends one stump, then returns the validation metric.
    pub fn boost_round(&mut self) -> Result<f64, TrainError> {
        let fit = &self.shared.data.fit;
        let n = fit.row_count();
        let d = fit.column_count();
        let params = self.model.params;

        let sample_size = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        let mut in_sample = vec![sample_size == n; n];
        if sample_size < n {
            for i in index::sample(&mut self.rng, n, sample_size) {
                in_sample[i] = true;
            }
        }
        let feature_count = ((params.colsample * d as f64).round() as usize).clamp(1, d.max(1));
        let mut features: Vec<usize> = if feature_count < d {
            index::sample(&mut self.rng, d, feature_count).into_vec()
        } else {
            (0..d).collect()
        };
        features.sort_unstable();

        let stump = if fit.has_both_classes() && d > 0 {
            let mut residuals = Vec::with_capacity(n);
            let mut hessians = Vec::with_capacity(n);
            for (m, &y) in self.fit_margin.iter().zip(fit.labels()) {
                let p = sigmoid(*m);
                residuals.push(f64::from(y) - p);
                hessians.push(p * (1.0 - p));
            }
            fit_stump(
                fit,
                &self.shared.sorted_rows,
                &in_sample,
                &features,
                &residuals,
                &hessians,
                params.min_leaf_weight,
            )
        } else {
            Stump { feature: 0, threshold: f64::INFINITY, left: 0.0, right: 0.0 }
        };

        for (i, m) in self.fit_margin.iter_mut().enumerate() {
            *m += params.learning_rate * stump.output(fit.row(i));
        }
        let valid = &self.shared.data.validation;
        for (i, m) in self.valid_margin.iter_mut().enumerate() {
            *m += params.learning_rate * stump.output(valid.row(i));
        }
        self.model.stumps.push(stump);
        self.current_metric()
    }
}

impl Learner for BoostedStumpsLearner {
    fn initial_metric(&self) -> Option<f64> {
        self.current_metric().ok()
    }

    fn step(&mut self) -> Result<f64, TrainError> {
        self.boost_round()
    }
}

/// Builds boosted-stumps sessions over one train/validation split.
#[derive(Debug, Clone)]
pub struct BoostedStumpsFactory {
    shared: Arc<SortedTrain>,
    metric: MetricKind,
    seed: u64,
    max_rounds: usize,
    cost_mode: CostMode,
}

impl BoostedStumpsFactory {
    pub fn new(data: TrainingData, metric: MetricKind, seed: u64, max_rounds: usize) -> Result<Self, TrainError> {
        data.check(metric)?;
        Ok(Self { shared: Arc::new(SortedTrain::new(data)), metric, seed, max_rounds, cost_mode: CostMode::Units })
    }

    pub fn with_cost_mode(mut self, mode: CostMode) -> Self {
        self.cost_mode = mode;
        self
    }

    pub fn learner(&self, config: &Configuration) -> Result<BoostedStumpsLearner, TrainError> {
        let params = BoostParams::from_config(config)?;
        let seed = derive_seed(self.seed, config.index as u64);
        Ok(BoostedStumpsLearner::with_shared(self.shared.clone(), params, self.metric, seed))
    }
}

impl LearnerFactory for BoostedStumpsFactory {
    fn full_budget(&self, config: &Configuration) -> usize {
        rounds(self.max_rounds, config)
    }

    fn create(&self, config: &Configuration) -> Result<Box<dyn Learner>, TrainError> {
        Ok(Box::new(self.learner(config)?))
    }

    fn cost_mode(&self) -> CostMode {
        self.cost_mode
    }
}

// ---------------------------------------------------------------- logistic

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub batch_size: usize,
}

impl Default for SgdParams {
    fn default() -> Self {
        Self { learning_rate: 0.1, l2_penalty: 0.0, batch_size: 16 }
    }
}

impl SgdParams {
    pub fn from_config(config: &Configuration) -> Result<Self, TrainError> {
        check_axes(config, &["learning_rate", "l2_penalty", "batch_size", "rounds_fraction"])?;
        let d = Self::default();
        let batch = config.get_f64("batch_size").unwrap_or(d.batch_size as f64);
        let p = Self {
            learning_rate: config.get_f64("learning_rate").unwrap_or(d.learning_rate),
            l2_penalty: config.get_f64("l2_penalty").unwrap_or(d.l2_penalty),
            batch_size: batch.round() as usize,
        };
        if !(p.learning_rate >= 0.0) || !(p.l2_penalty >= 0.0) || p.batch_size == 0 {
            return Err(TrainError::Setup(format!("invalid SGD parameters {p:?}")));
        }
        Ok(p)
    }
}

/// Logistic regression on standardized features. `weights` holds one weight
/// per feature followed by the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticSgdModel {
    pub weights: Vec<f64>,
    pub params: SgdParams,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl LogisticSgdModel {
    pub fn new(fit: &Dataset, params: SgdParams) -> Self {
        let d = fit.column_count();
        let n = fit.row_count() as f64;
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for f in 0..d {
            let m = (0..fit.row_count()).map(|r| fit.value(r, f)).sum::<f64>() / n;
            let var = (0..fit.row_count()).map(|r| (fit.value(r, f) - m).powi(2)).sum::<f64>() / n;
            mean[f] = m;
            if var > 0.0 {
                scale[f] = var.sqrt();
            }
        }
        Self { weights: vec![0.0; d + 1], params, mean, scale }
    }

    fn standardized(&self, row: &[f64], f: usize) -> f64 {
        (row[f] - self.mean[f]) / self.scale[f]
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        let d = self.mean.len();
        let dot: f64 = (0..d).map(|f| self.weights[f] * self.standardized(row, f)).sum();
        dot + self.weights[d]
    }

    /// One pass over `fit` in shuffled mini-batches. The L2 term is applied
    /// as an implicit (proximal) step so any penalty stays stable.
    pub fn epoch(&mut self, fit: &Dataset, rng: &mut ChaCha8Rng) {
        let d = self.mean.len();
        let mut order: Vec<usize> = (0..fit.row_count()).collect();
        order.shuffle(rng);
        let lr = self.params.learning_rate;
        let shrink = 1.0 / (1.0 + lr * self.params.l2_penalty);
        let mut grad = vec![0.0; d + 1];
        for batch in order.chunks(self.params.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &r in batch {
                let row = fit.row(r);
                let err = sigmoid(self.margin(row)) - f64::from(fit.labels()[r]);
                for (f, g) in grad.iter_mut().take(d).enumerate() {
                    *g += err * self.standardized(row, f);
                }
                grad[d] += err;
            }
            let scale = lr / batch.len() as f64;
            for (f, w) in self.weights.iter_mut().enumerate() {
                *w -= scale * grad[f];
                if f < d {
                    *w *= shrink;
                }
            }
        }
    }
}

pub struct LogisticSgdLearner {
    model: LogisticSgdModel,
    data: TrainingData,
    metric: MetricKind,
    rng: ChaCha8Rng,
}

impl LogisticSgdLearner {
    pub fn new(data: TrainingData, params: SgdParams, metric: MetricKind, seed: u64) -> Self {
        let model = LogisticSgdModel::new(&data.fit, params);
        Self { model, data, metric, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn model(&self) -> &LogisticSgdModel {
        &self.model
    }

    fn current_metric(&self) -> Result<f64, TrainError> {
        let valid = &self.data.validation;
        let margins: Vec<f64> = (0..valid.row_count()).map(|r| self.model.margin(valid.row(r))).collect();
        validation_metric(self.metric, &margins, valid)
    }

    pub fn sgd_epoch(&mut self) -> Result<f64, TrainError> {
        self.model.epoch(&self.data.fit, &mut self.rng);
        self.current_metric()
    }
}

impl Learner for LogisticSgdLearner {
    fn initial_metric(&self) -> Option<f64> {
        self.current_metric().ok()
    }

    fn step(&mut self) -> Result<f64, TrainError> {
        self.sgd_epoch()
    }
}

#[derive(Debug, Clone)]
pub struct LogisticSgdFactory {
    data: TrainingData,
    metric: MetricKind,
    seed: u64,
    max_epochs: usize,
    cost_mode: CostMode,
}

impl LogisticSgdFactory {
    pub fn new(data: TrainingData, metric: MetricKind, seed: u64, max_epochs: usize) -> Result<Self, TrainError> {
        data.check(metric)?;
        Ok(Self { data, metric, seed, max_epochs, cost_mode: CostMode::Units })
    }

    pub fn with_cost_mode(mut self, mode: CostMode) -> Self {
        self.cost_mode = mode;
        self
    }

    pub fn learner(&self, config: &Configuration) -> Result<LogisticSgdLearner, TrainError> {
        let params = SgdParams::from_config(config)?;
        let seed = derive_seed(self.seed, config.index as u64);
        Ok(LogisticSgdLearner::new(self.data.clone(), params, self.metric, seed))
    }
}

impl LearnerFactory for LogisticSgdFactory {
    fn full_budget(&self, config: &Configuration) -> usize {
        rounds(self.max_epochs, config)
    }

    fn create(&self, config: &Configuration) -> Result<Box<dyn Learner>, TrainError> {
        Ok(Box::new(self.learner(config)?))
    }

    fn cost_mode(&self) -> CostMode {
        self.cost_mode
    }
}

// ---------------------------------------------------------------- analytic

/// Saturating learning curve `final_value × (1 − e^(−rate·t))` plus seeded
/// Gaussian noise, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCurveSpec {
    pub final_value: f64,
    pub rate: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

pub fn analytic_step(spec: &AnalyticCurveSpec, t: usize) -> f64 {
    let clean = spec.final_value * (1.0 - (-spec.rate * t as f64).exp());
    let noise = if spec.noise_sd > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, t as u64));
        Normal::new(0.0, spec.noise_sd).expect("finite sd").sample(&mut rng)
    } else {
        0.0
    };
    (clean + noise).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct AnalyticLearner {
    spec: AnalyticCurveSpec,
    t: usize,
}

impl AnalyticLearner {
    pub fn new(spec: AnalyticCurveSpec) -> Self {
        Self { spec, t: 0 }
    }
}

impl Learner for AnalyticLearner {
    fn initial_metric(&self) -> Option<f64> {
        Some(0.0)
    }

    fn step(&mut self) -> Result<f64, TrainError> {
        self.t += 1;
        Ok(analytic_step(&self.spec, self.t))
    }
}

/// Analytic curves keyed by configuration index.
#[derive(Debug, Clone)]
pub struct AnalyticFactory {
    specs: Vec<AnalyticCurveSpec>,
    full_budget: usize,
}

impl AnalyticFactory {
    pub fn new(specs: Vec<AnalyticCurveSpec>, full_budget: usize) -> Self {
        Self { specs, full_budget }
    }

    /// One curve per grid index with `final_value` drawn uniformly from
    /// `[low, high)` and a shared rate and noise level.
    pub fn random(
        grid_size: usize,
        seed: u64,
        rate: f64,
        noise_sd: f64,
        low: f64,
        high: f64,
        full_budget: usize,
    ) -> Self {
        use rand::Rng;
        let specs = (0..grid_size)
            .map(|i| {
                let s = derive_seed(seed, i as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                AnalyticCurveSpec { final_value: rng.gen_range(low..high), rate, noise_sd, seed: s }
            })
            .collect();
        Self { specs, full_budget }
    }

    pub fn specs(&self) -> &[AnalyticCurveSpec] {
        &self.specs
    }

    pub fn curve_final(&self, index: usize) -> f64 {
        analytic_step(&self.specs[index], self.full_budget)
    }
}

impl LearnerFactory for AnalyticFactory {
    fn full_budget(&self, _config: &Configuration) -> usize {
        self.full_budget
    }

    fn create(&self, config: &Configuration) -> Result<Box<dyn Learner>, TrainError> {
        let spec = self.specs.get(config.index).ok_or(TrainError::UnknownConfiguration(config.index))?;
        Ok(Box::new(AnalyticLearner::new(*spec)))
    }
}
