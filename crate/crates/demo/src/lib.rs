//! Browser demo: three operations over the 100-point desk grid, each
//! returning a JSON string for the page to draw.
//!
//! - [`learning_curves`]: validation curves of a few random configurations
//! - [`early_vs_final`]: the early/final scatter with its fitted line
//! - [`pho_vs_random`]: one PHO run, random search on the same budget, and
//!   the full pool for context

use pho_core::experiment::{DatasetSource, Experiment, ExperimentConfig, HarnessError, PhoSettings};
use pho_core::{pearson, EarlyPredictor, SearchSpace, SyntheticSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const DESK_SPACE: &str = include_str!("../../core/configs/desk_space.json");

fn experiment(seed: u64, pho: PhoSettings) -> Result<Experiment, HarnessError> {
    let config = ExperimentConfig {
        dataset: Some(DatasetSource::Synthetic(SyntheticSpec { seed, ..Default::default() })),
        seed,
        pho,
        trials: 1,
        ..Default::default()
    };
    Experiment::with_space(config, SearchSpace::from_json(DESK_SPACE)?)
}

#[derive(Serialize)]
struct Curve {
    index: usize,
    label: String,
    metrics: Vec<f64>,
}

#[derive(Serialize)]
struct Curves {
    curves: Vec<Curve>,
}

fn label(exp: &Experiment, index: usize) -> String {
    exp.candidates[index].assignments.iter().map(|(k, v)| format!("{k}={}", v.as_f64())).collect::<Vec<_>>().join(", ")
}

/// Full validation-accuracy curves for `count` configurations drawn
/// without replacement.
pub fn learning_curves_json(seed: u64, count: usize) -> Result<String, HarnessError> {
    let exp = experiment(seed, PhoSettings::default())?;
    let (_, factory) = exp.factory(0)?;
    let picks = exp.space.sample_without_replacement(count.clamp(1, exp.candidates.len()), seed)?;
    let mut curves = Vec::with_capacity(picks.len());
    for c in &picks {
        let mut session = factory.open(c)?;
        session.finish()?;
        let trace = session.into_trace();
        let metrics = trace.initial_metric.into_iter().chain(trace.metric_by_iteration).collect();
        curves.push(Curve { index: c.index, label: label(&exp, c.index), metrics });
    }
    Ok(serde_json::to_string(&Curves { curves }).expect("plain data serializes"))
}

#[derive(Serialize)]
struct Scatter {
    m: usize,
    points: Vec<(f64, f64)>,
    slope: f64,
    intercept: f64,
    pearson_r: Option<f64>,
}

/// Early (iteration `m`) versus final accuracy for every grid point, with
/// the least-squares line through all of them.
pub fn early_vs_final_json(seed: u64, m: usize) -> Result<String, HarnessError> {
    let exp = experiment(seed, PhoSettings::default())?;
    let points = exp.correlation_study(0, m.max(1))?;
    let fit = EarlyPredictor::fit(&points).map_err(|e| HarnessError::Run(e.to_string()))?;
    let scatter = Scatter { m, slope: fit.slope, intercept: fit.intercept, pearson_r: pearson(&points).ok(), points };
    Ok(serde_json::to_string(&scatter).expect("plain data serializes"))
}

#[derive(Serialize)]
struct Duel {
    pho_best: f64,
    pho_best_label: String,
    pho_cost: f64,
    pho_fully_trained: usize,
    random_best: f64,
    random_best_label: String,
    random_models: usize,
    slope: Option<f64>,
    pearson_r: Option<f64>,
    pool: Vec<f64>,
}

/// One PHO run, then random search with PHO's spent budget on the same
/// split; `pool` is every configuration's final accuracy, ascending.
pub fn pho_vs_random_json(seed: u64, n: usize, m: usize, k: usize) -> Result<String, HarnessError> {
    let exp = experiment(seed, PhoSettings { n, m, k })?;
    let (row, tuned) = exp.run_trial(0)?;
    let pool = exp.run_pool(0)?.into_iter().map(|e| e.final_metric).collect();
    let duel = Duel {
        pho_best: row.pho_best_metric,
        pho_best_label: label(&exp, row.pho_best_index),
        pho_cost: row.pho_budget,
        pho_fully_trained: tuned.fully_trained.len(),
        random_best: row.rs_best_metric,
        random_best_label: label(&exp, row.rs_best_index),
        random_models: row.rs_models_evaluated,
        slope: tuned.predictor.map(|p| p.slope),
        pearson_r: tuned.predictor.map(|p| p.pearson_r),
        pool,
    };
    Ok(serde_json::to_string(&duel).expect("plain data serializes"))
}

fn js(e: HarnessError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn learning_curves(seed: u32, count: u32) -> Result<String, JsError> {
    learning_curves_json(seed.into(), count as usize).map_err(js)
}

#[wasm_bindgen]
pub fn early_vs_final(seed: u32, m: u32) -> Result<String, JsError> {
    early_vs_final_json(seed.into(), m as usize).map_err(js)
}

#[wasm_bindgen]
pub fn pho_vs_random(seed: u32, n: u32, m: u32, k: u32) -> Result<String, JsError> {
    pho_vs_random_json(seed.into(), n as usize, m as usize, k as usize).map_err(js)
}
