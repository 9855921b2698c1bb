//! Summary statistics and two-tailed t-tests for comparing tuners.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    Empty,
    #[error("t-test needs at least 2 observations per sample, got {0}")]
    TooFewObservations(usize),
    #[error("paired test needs equal-length samples ({0} vs {1})")]
    UnequalLengths(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single sample.
    pub sd: f64,
    pub n: usize,
}

/// Quantile by linear interpolation between order statistics
/// (Hyndman–Fan type 7): position `p × (n − 1)` in the sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(samples: &[f64]) -> Result<Summary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd =
        if n > 1 { (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        mean,
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        sd,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestKind {
    /// Unequal variances, Welch–Satterthwaite degrees of freedom.
    Welch,
    /// Equal variances, pooled estimate, `n_a + n_b − 2` degrees of freedom.
    Pooled,
    /// One-sample test on paired differences `a_i − b_i`.
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub kind: TTestKind,
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub significant_at_005: bool,
}

impl TTestResult {
    fn new(kind: TTestKind, t: f64, df: f64) -> Self {
        let p_value = two_tailed_p(t, df);
        Self { kind, t_statistic: t, degrees_of_freedom: df, p_value, significant_at_005: p_value < 0.05 }
    }
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

// Zero standard error: identical means give t = 0, otherwise the difference
// is infinitely many standard errors away.
fn ratio(diff: f64, se: f64) -> f64 {
    if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.len() < 2 {
        return Err(StatsError::TooFewObservations(a.len()));
    }
    if b.len() < 2 {
        return Err(StatsError::TooFewObservations(b.len()));
    }
    Ok(())
}

/// Two-tailed test of `mean(a) = mean(b)`. `t > 0` means `a` is larger.
pub fn t_test_two_tailed(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TTestResult, StatsError> {
    check_len(a, b)?;
    match kind {
        TTestKind::Welch => {
            let (ma, va) = mean_var(a);
            let (mb, vb) = mean_var(b);
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let (sa, sb) = (va / na, vb / nb);
            let se = (sa + sb).sqrt();
            let df = if sa + sb > 0.0 {
                (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0))
            } else {
                na + nb - 2.0
            };
            Ok(TTestResult::new(kind, ratio(ma - mb, se), df))
        }
        TTestKind::Pooled => {
            let (ma, va) = mean_var(a);
            let (mb, vb) = mean_var(b);
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
            Ok(TTestResult::new(kind, ratio(ma - mb, se), df))
        }
        TTestKind::Paired => {
            if a.len() != b.len() {
                return Err(StatsError::UnequalLengths(a.len(), b.len()));
            }
            let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let (md, vd) = mean_var(&diffs);
            let n = diffs.len() as f64;
            Ok(TTestResult::new(kind, ratio(md, (vd / n).sqrt()), n - 1.0))
        }
    }
}
