//! Reference tuners: equal-budget random search and exhaustive pool
//! evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::space::Configuration;
use crate::trainable::{CostMode, LearnerFactory, TrainError};
use crate::tuner::{argmax_final, par_map, BudgetLedger, CandidateRecord, TuneError, TuneResult};

/// Fully trains configurations in a seeded random order until the next run
/// would not fit in `budget`. At least one run always happens; if that run
/// alone exceeds the budget the result is flagged as an overrun.
///
/// In unit-cost mode a run's cost is known up front (its full budget). In
/// wall-clock mode the next run is projected at the mean cost of the runs so
/// far.
pub fn random_search(
    candidates: &[Configuration],
    factory: &dyn LearnerFactory,
    budget: f64,
    seed: u64,
) -> Result<TuneResult, TuneError> {
    if candidates.is_empty() {
        return Err(TuneError::NoCandidates);
    }
    if !(budget > 0.0) {
        return Err(TuneError::NonPositiveBudget(budget));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut ledger = BudgetLedger::default();
    let mut traces = BTreeMap::new();
    let mut table = Vec::new();
    for p in order {
        let config = &candidates[p];
        if !traces.is_empty() {
            let projected = match factory.cost_mode() {
                CostMode::Units => factory.full_budget(config) as f64,
                CostMode::WallClock => ledger.total_cost_units / traces.len() as f64,
            };
            if ledger.total_cost_units + projected > budget {
                break;
            }
        }
        let mut session = factory.open(config)?;
        let cost = session.finish()?;
        ledger.charge(config.index, cost)?;
        let fin = session.final_metric()?;
        table.push(CandidateRecord {
            index: config.index,
            early: None,
            predicted: None,
            final_metric: Some(fin),
            pilot: false,
        });
        traces.insert(config.index, session.into_trace());
    }

    let overrun = ledger.total_cost_units > budget;
    let (best_index, best_final_metric) =
        argmax_final(table.iter().filter_map(|r| r.final_metric.map(|f| (r.index, f))))
            .expect("one run always completes");
    let best_configuration = candidates.iter().find(|c| c.index == best_index).cloned().expect("index from candidates");
    table.sort_by_key(|r| r.index);
    Ok(TuneResult {
        best_configuration,
        best_final_metric,
        fully_trained: traces.keys().copied().collect(),
        partially_trained_only: BTreeSet::new(),
        predictor: None,
        ledger,
        table,
        traces,
        overrun,
    })
}

/// One fully trained pool member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    /// 1-based position in ascending order of final metric.
    pub rank: usize,
    pub index: usize,
    pub final_metric: f64,
}

/// Fully trains every candidate. Output is sorted by final metric ascending
/// (ties by configuration index), which is the cumulative-histogram layout.
pub fn evaluate_pool(candidates: &[Configuration], factory: &dyn LearnerFactory) -> Result<Vec<PoolEntry>, TrainError> {
    let finals = par_map(candidates, |c| -> Result<(usize, f64), TrainError> {
        let mut session = factory.open(c)?;
        session.finish()?;
        Ok((c.index, session.final_metric()?))
    });
    let mut finals = finals.into_iter().collect::<Result<Vec<_>, _>>()?;
    finals.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(finals
        .into_iter()
        .enumerate()
        .map(|(i, (index, final_metric))| PoolEntry { rank: i + 1, index, final_metric })
        .collect())
}

/// Writes the pool as `rank,final_metric` CSV.
pub fn write_pool_csv<W: Write>(pool: &[PoolEntry], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "final_metric"])?;
    for e in pool {
        w.write_record([e.rank.to_string(), e.final_metric.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
