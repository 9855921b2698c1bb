//! Predictive hyperparameter optimisation.
//!
//! 1. Fully train `n` randomly drawn pilot configurations, noting each one's
//!    metric after `m` iterations and at completion.
//! 2. Fit an [`EarlyPredictor`] on the `n` (early, final) pairs.
//! 3. Train every other configuration to `m` iterations and predict its
//!    final metric.
//! 4. Resume the `k` best predicted configurations to full training.
//! 5. Return the best of the `n + k` fully trained models.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::{EarlyPredictor, PredictorError};
use crate::space::Configuration;
use crate::trainable::{LearnerFactory, TrainError, TrainableSession, TrainingTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuneError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no candidates to tune over")]
    NoCandidates,
    #[error("cost must be non-negative, got {0}")]
    NegativeCost(f64),
    #[error("budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhoParams {
    /// Pilot models trained fully before fitting the predictor.
    pub n: usize,
    /// Iterations of partial training.
    pub m: usize,
    /// Predicted-best models trained fully at the end.
    pub k: usize,
    pub seed: u64,
}

impl Default for PhoParams {
    fn default() -> Self {
        Self { n: 5, m: 2, k: 5, seed: 0 }
    }
}

impl PhoParams {
    pub fn validate(&self, candidates: usize) -> Result<(), TuneError> {
        if self.n < 2 {
            return Err(TuneError::InvalidParams(format!("n = {} but the regression needs n >= 2", self.n)));
        }
        if self.m == 0 {
            return Err(TuneError::InvalidParams("m must be positive".into()));
        }
        if self.n + self.k > candidates {
            return Err(TuneError::InvalidParams(format!(
                "n + k = {} exceeds the {} candidates",
                self.n + self.k,
                candidates
            )));
        }
        Ok(())
    }
}

/// Training cost consumed, per configuration and in total.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub total_cost_units: f64,
    pub per_configuration: BTreeMap<usize, f64>,
}

impl BudgetLedger {
    pub fn charge(&mut self, index: usize, cost: f64) -> Result<(), TuneError> {
        if !(cost >= 0.0) {
            return Err(TuneError::NegativeCost(cost));
        }
        *self.per_configuration.entry(index).or_insert(0.0) += cost;
        self.total_cost_units += cost;
        Ok(())
    }
}

/// Slope, intercept, correlation and sample count of the fitted predictor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorSummary {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
    pub sample_count: usize,
    pub degenerate: bool,
    pub negative_slope: bool,
}

impl From<&EarlyPredictor> for PredictorSummary {
    fn from(p: &EarlyPredictor) -> Self {
        Self {
            slope: p.slope,
            intercept: p.intercept,
            pearson_r: p.pearson_r,
            sample_count: p.sample_count,
            degenerate: p.degenerate,
            negative_slope: !p.degenerate && p.slope < 0.0,
        }
    }
}

/// One row of the per-candidate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub early: Option<f64>,
    pub predicted: Option<f64>,
    #[serde(rename = "final")]
    pub final_metric: Option<f64>,
    pub pilot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_configuration: Configuration,
    pub best_final_metric: f64,
    pub fully_trained: BTreeSet<usize>,
    pub partially_trained_only: BTreeSet<usize>,
    pub predictor: Option<PredictorSummary>,
    pub ledger: BudgetLedger,
    /// Candidates in index order.
    pub table: Vec<CandidateRecord>,
    /// Traces of the fully trained models, by configuration index.
    pub traces: BTreeMap<usize, TrainingTrace>,
    /// Set when a random-search run had to exceed its budget.
    #[serde(default)]
    pub overrun: bool,
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Returns the position of the best final metric; ties go to the lowest
/// configuration index.
pub(crate) fn argmax_final(entries: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    entries.fold(None, |best, (index, value)| match best {
        Some((bi, bv)) if bv > value || (bv == value && bi < index) => Some((bi, bv)),
        _ => Some((index, value)),
    })
}

pub fn pho(
    candidates: &[Configuration],
    factory: &dyn LearnerFactory,
    params: &PhoParams,
) -> Result<TuneResult, TuneError> {
    if candidates.is_empty() {
        return Err(TuneError::NoCandidates);
    }
    params.validate(candidates.len())?;
    if let Some(c) = candidates.iter().find(|c| factory.full_budget(c) < params.m) {
        return Err(TuneError::InvalidParams(format!(
            "m = {} exceeds the full budget {} of configuration #{}",
            params.m,
            factory.full_budget(c),
            c.index
        )));
    }

    let m = params.m;
    let mut ledger = BudgetLedger::default();
    let mut traces = BTreeMap::new();
    let mut records: BTreeMap<usize, CandidateRecord> = BTreeMap::new();

    // Step 1: pilots.
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pilot_pos = rand::seq::index::sample(&mut rng, candidates.len(), params.n).into_vec();
    pilot_pos.sort_unstable();
    let mut is_pilot = vec![false; candidates.len()];
    for &p in &pilot_pos {
        is_pilot[p] = true;
    }

    let pilots = par_map(&pilot_pos, |&p| -> Result<TrainableSession, TrainError> {
        let mut session = factory.open(&candidates[p])?;
        session.finish()?;
        Ok(session)
    });
    let mut pairs = Vec::with_capacity(params.n);
    for session in pilots {
        let session = session?;
        let index = session.configuration().index;
        let early = session.early_metric(m)?;
        let fin = session.final_metric()?;
        ledger.charge(index, session.trace().total_cost())?;
        pairs.push((early, fin));
        records.insert(
            index,
            CandidateRecord { index, early: Some(early), predicted: None, final_metric: Some(fin), pilot: true },
        );
        traces.insert(index, session.into_trace());
    }

    // Step 2.
    let predictor = EarlyPredictor::fit(&pairs)?;
    let predict = |early: f64| predictor.predict(early).ok();
    for r in records.values_mut() {
        r.predicted = r.early.and_then(predict);
    }

    // Step 3: partial training of the rest, merged in candidate order.
    let rest: Vec<usize> = (0..candidates.len()).filter(|&p| !is_pilot[p]).collect();
    let partial = par_map(&rest, |&p| -> Result<TrainableSession, TrainError> {
        let mut session = factory.open(&candidates[p])?;
        session.advance(m)?;
        Ok(session)
    });
    let mut ranked: Vec<(TrainableSession, f64, Option<f64>)> = Vec::with_capacity(rest.len());
    for session in partial {
        let session = session?;
        let index = session.configuration().index;
        let early = session.early_metric(m)?;
        ledger.charge(index, session.trace().total_cost())?;
        let predicted = predict(early);
        records
            .insert(index, CandidateRecord { index, early: Some(early), predicted, final_metric: None, pilot: false });
        ranked.push((session, early, predicted));
    }

    // Step 4: predicted desc, early desc, index asc. A degenerate predictor
    // yields no predictions and the order falls through to the early metric.
    ranked.sort_by(|a, b| {
        let pa = a.2.unwrap_or(f64::NEG_INFINITY);
        let pb = b.2.unwrap_or(f64::NEG_INFINITY);
        pb.total_cmp(&pa).then(b.1.total_cmp(&a.1)).then(a.0.configuration().index.cmp(&b.0.configuration().index))
    });
    let mut partially_trained_only = BTreeSet::new();
    let mut chosen = Vec::with_capacity(params.k);
    for (i, (session, _, _)) in ranked.into_iter().enumerate() {
        if i < params.k {
            chosen.push(session);
        } else {
            partially_trained_only.insert(session.configuration().index);
        }
    }
    let resumed = par_map_owned(chosen, |mut session| -> Result<(TrainableSession, f64), TrainError> {
        let cost = session.finish()?;
        Ok((session, cost))
    });
    for item in resumed {
        let (session, cost) = item?;
        let index = session.configuration().index;
        ledger.charge(index, cost)?;
        let fin = session.final_metric()?;
        records.get_mut(&index).expect("recorded in step 3").final_metric = Some(fin);
        traces.insert(index, session.into_trace());
    }

    // Step 5.
    let fully_trained: BTreeSet<usize> = traces.keys().copied().collect();
    let (best_index, best_final_metric) =
        argmax_final(records.values().filter_map(|r| r.final_metric.map(|f| (r.index, f))))
            .expect("at least two fully trained models");
    let best_configuration =
        candidates.iter().find(|c| c.index == best_index).cloned().expect("best index comes from candidates");

    Ok(TuneResult {
        best_configuration,
        best_final_metric,
        fully_trained,
        partially_trained_only,
        predictor: Some(PredictorSummary::from(&predictor)),
        ledger,
        table: records.into_values().collect(),
        traces,
        overrun: false,
    })
}

#[cfg(feature = "parallel")]
fn par_map_owned<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map_owned<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{AnalyticCurveSpec, AnalyticFactory};
    use crate::space::{HyperparamAxis, SearchSpace};
    use crate::trainable::fixtures::{HIGH_PERFORMER, LOW_PERFORMER};
    use crate::trainable::ReplayFactory;

    fn line(n: usize) -> Vec<Configuration> {
        let values: Vec<i64> = (0..n as i64).collect();
        SearchSpace::new(vec![HyperparamAxis::int("id", &values).unwrap()]).unwrap().enumerate_grid()
    }

    #[test]
    fn ledger_charges() {
        let mut l = BudgetLedger::default();
        l.charge(1, 3.0).unwrap();
        l.charge(1, 2.0).unwrap();
        assert_eq!((l.per_configuration[&1], l.total_cost_units), (5.0, 5.0));
        l.charge(4, 1.5).unwrap();
        assert_eq!(l.total_cost_units, 6.5);
        assert_eq!(l.charge(2, -1.0), Err(TuneError::NegativeCost(-1.0)));
    }

    #[test]
    fn parameter_validation() {
        assert!(PhoParams { n: 1, m: 2, k: 1, seed: 0 }.validate(10).is_err());
        assert!(PhoParams { n: 2, m: 0, k: 1, seed: 0 }.validate(10).is_err());
        assert!(PhoParams { n: 6, m: 2, k: 5, seed: 0 }.validate(10).is_err());
        assert!(PhoParams { n: 5, m: 2, k: 5, seed: 0 }.validate(10).is_ok());
    }

    #[test]
    fn m_beyond_budget_rejected() {
        let f = AnalyticFactory::random(10, 0, 0.3, 0.0, 0.5, 0.9, 3);
        let err = pho(&line(10), &f, &PhoParams { n: 2, m: 4, k: 1, seed: 0 });
        assert!(matches!(err, Err(TuneError::InvalidParams(_))));
    }

    #[test]
    fn two_replayed_models_pick_the_high_performer() {
        let mut f = ReplayFactory::default();
        f.insert(0, LOW_PERFORMER.to_vec());
        f.insert(1, HIGH_PERFORMER.to_vec());
        let r = pho(&line(2), &f, &PhoParams { n: 2, m: 2, k: 0, seed: 3 }).unwrap();
        assert_eq!(r.best_configuration.index, 1);
        assert_eq!(r.best_final_metric, 0.8567);
        assert_eq!(r.fully_trained.len(), 2);
        assert!(r.partially_trained_only.is_empty());
    }

    #[test]
    fn paper_scale_counts_and_cost() {
        let f = AnalyticFactory::random(540, 1, 0.3, 0.02, 0.5, 0.95, 20);
        let r = pho(&line(540), &f, &PhoParams { n: 5, m: 2, k: 5, seed: 8 }).unwrap();
        assert_eq!(r.fully_trained.len(), 10);
        assert_eq!(r.partially_trained_only.len(), 530);
        assert_eq!(r.ledger.total_cost_units, 10.0 * 20.0 + 530.0 * 2.0);
        assert_eq!(r.table.len(), 540);
        let sum: f64 = r.ledger.per_configuration.values().sum();
        assert_eq!(sum, r.ledger.total_cost_units);
    }

    #[test]
    fn exhaustive_when_all_fully_trained() {
        let f = AnalyticFactory::random(12, 5, 0.2, 0.03, 0.4, 0.9, 10);
        let r = pho(&line(12), &f, &PhoParams { n: 4, m: 3, k: 8, seed: 2 }).unwrap();
        assert!(r.partially_trained_only.is_empty());
        let best = (0..12).map(|i| f.curve_final(i)).fold(f64::MIN, f64::max);
        assert_eq!(r.best_final_metric, best);
    }

    #[test]
    fn noiseless_family_recovers_optimum() {
        let finals: Vec<f64> = (0..20).map(|i| 0.5 + ((i * 7) % 20) as f64 / 50.0).collect();
        let specs =
            finals.iter().map(|&v| AnalyticCurveSpec { final_value: v, rate: 0.3, noise_sd: 0.0, seed: 0 }).collect();
        let f = AnalyticFactory::new(specs, 20);
        let oracle = (0..20).max_by(|&a, &b| f.curve_final(a).total_cmp(&f.curve_final(b))).unwrap();
        for seed in 0..10 {
            let r = pho(&line(20), &f, &PhoParams { n: 3, m: 2, k: 1, seed }).unwrap();
            assert_eq!(r.best_configuration.index, oracle);
        }
    }

    #[test]
    fn degenerate_predictor_ranks_by_early_metric() {
        // Pilots all share one early value, so the fit is degenerate.
        let mut f = ReplayFactory::default();
        f.insert(0, vec![0.0, 0.5, 0.6]);
        f.insert(1, vec![0.0, 0.5, 0.7]);
        f.insert(2, vec![0.0, 0.2, 0.9]);
        f.insert(3, vec![0.0, 0.4, 0.3]);
        let cands = line(4);
        let seed = (0..200)
            .find(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut picked = rand::seq::index::sample(&mut rng, 4, 2).into_vec();
                picked.sort_unstable();
                picked == [0, 1]
            })
            .unwrap();
        let r = pho(&cands, &f, &PhoParams { n: 2, m: 1, k: 1, seed }).unwrap();
        assert!(r.predictor.unwrap().degenerate);
        assert!(r.fully_trained.contains(&3));
        assert_eq!(r.best_configuration.index, 1);
    }

    #[test]
    fn deterministic_results() {
        let f = AnalyticFactory::random(60, 3, 0.25, 0.05, 0.5, 0.9, 15);
        let p = PhoParams { n: 5, m: 2, k: 5, seed: 11 };
        assert_eq!(pho(&line(60), &f, &p).unwrap(), pho(&line(60), &f, &p).unwrap());
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax_final([(3, 0.5), (1, 0.7), (2, 0.7)].into_iter()), Some((1, 0.7)));
        assert_eq!(argmax_final(std::iter::empty()), None);
    }
}
