//! Simple linear regression from an early-iteration metric to the final
//! metric, fitted on the pilot models.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictorError {
    #[error("need at least 2 (early, final) pairs, got {0}")]
    TooFewPairs(usize),
    #[error("early metric has zero variance; the fit is degenerate")]
    Degenerate,
    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(&'static str),
}

/// Fitted `final ≈ slope × early + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyPredictor {
    pub slope: f64,
    pub intercept: f64,
    /// Zero when either coordinate has no variance.
    pub pearson_r: f64,
    pub sample_count: usize,
    /// Set when all early values are equal. Slope and intercept are then
    /// meaningless and callers rank by the early metric directly.
    pub degenerate: bool,
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

fn moments(pairs: &[(f64, f64)]) -> Moments {
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Moments { mean_x, mean_y, sxx, syy, sxy }
}

impl EarlyPredictor {
    /// Closed-form ordinary least squares on `(early, final)` pairs.
    pub fn fit(pairs: &[(f64, f64)]) -> Result<Self, PredictorError> {
        if pairs.len() < 2 {
            return Err(PredictorError::TooFewPairs(pairs.len()));
        }
        let m = moments(pairs);
        let degenerate = m.sxx == 0.0;
        let (slope, intercept) = if degenerate {
            (0.0, m.mean_y)
        } else {
            let slope = m.sxy / m.sxx;
            (slope, m.mean_y - slope * m.mean_x)
        };
        let pearson_r =
            if m.sxx > 0.0 && m.syy > 0.0 { (m.sxy / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
        Ok(Self { slope, intercept, pearson_r, sample_count: pairs.len(), degenerate })
    }

    pub fn predict(&self, early: f64) -> Result<f64, PredictorError> {
        if self.degenerate {
            return Err(PredictorError::Degenerate);
        }
        Ok(self.slope * early + self.intercept)
    }
}

/// Pearson product-moment correlation.
pub fn pearson(pairs: &[(f64, f64)]) -> Result<f64, PredictorError> {
    if pairs.len() < 2 {
        return Err(PredictorError::TooFewPairs(pairs.len()));
    }
    let m = moments(pairs);
    if m.sxx == 0.0 {
        return Err(PredictorError::ZeroVariance("first coordinate"));
    }
    if m.syy == 0.0 {
        return Err(PredictorError::ZeroVariance("second coordinate"));
    }
    Ok((m.sxy / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line() {
        let p = EarlyPredictor::fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert_eq!((p.slope, p.intercept, p.pearson_r), (2.0, 1.0, 1.0));
        assert!(!p.degenerate);
        assert_eq!(p.predict(0.5).unwrap(), 2.0);
    }

    #[test]
    fn degenerate_when_early_constant() {
        let p = EarlyPredictor::fit(&[(0.4, 0.7), (0.4, 0.9)]).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.predict(0.4), Err(PredictorError::Degenerate));
    }

    #[test]
    fn too_few_pairs() {
        assert_eq!(EarlyPredictor::fit(&[(0.1, 0.2)]), Err(PredictorError::TooFewPairs(1)));
        assert_eq!(pearson(&[]), Err(PredictorError::TooFewPairs(0)));
    }

    #[test]
    fn zero_slope_predicts_intercept() {
        let p = EarlyPredictor { slope: 0.0, intercept: 0.3, pearson_r: 0.0, sample_count: 2, degenerate: false };
        assert_eq!(p.predict(-4.0).unwrap(), 0.3);
        assert_eq!(p.predict(0.9).unwrap(), 0.3);
    }

    #[test]
    fn reported_line_at_080() {
        let p = EarlyPredictor {
            slope: 0.17746344745827727,
            intercept: 0.7167788206986645,
            pearson_r: 0.55,
            sample_count: 540,
            degenerate: false,
        };
        assert!((p.predict(0.80).unwrap() - 0.8587495786652863).abs() < 1e-15);
    }

    #[test]
    fn pearson_examples() {
        let r = pearson(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).unwrap();
        assert!((r - 0.4472135955).abs() < 1e-10);
        assert_eq!(pearson(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]).unwrap(), 1.0);
        let flipped = pearson(&[(0.0, 0.0), (1.0, -1.0), (2.0, 0.0), (3.0, -1.0)]).unwrap();
        assert!((flipped + r).abs() < 1e-15);
        assert!(matches!(pearson(&[(1.0, 2.0), (1.0, 3.0)]), Err(PredictorError::ZeroVariance(_))));
        assert!(matches!(pearson(&[(1.0, 2.0), (2.0, 2.0)]), Err(PredictorError::ZeroVariance(_))));
    }

    proptest! {
        #[test]
        fn residuals_orthogonal(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..60)) {
            let p = EarlyPredictor::fit(&pairs).unwrap();
            prop_assume!(!p.degenerate);
            let res: Vec<f64> = pairs.iter().map(|&(x, y)| y - p.predict(x).unwrap()).collect();
            let n = pairs.len() as f64;
            prop_assert!(res.iter().sum::<f64>().abs() <= 1e-9 * n);
            let dot: f64 = res.iter().zip(&pairs).map(|(r, p)| r * p.0).sum();
            prop_assert!(dot.abs() <= 1e-9 * n);
        }

        #[test]
        fn r_squared_is_coefficient_of_determination(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..60)
        ) {
            let p = EarlyPredictor::fit(&pairs).unwrap();
            prop_assume!(!p.degenerate);
            let mean_y = pairs.iter().map(|q| q.1).sum::<f64>() / pairs.len() as f64;
            let ss_tot: f64 = pairs.iter().map(|q| (q.1 - mean_y).powi(2)).sum();
            prop_assume!(ss_tot > 1e-9);
            let ss_res: f64 = pairs.iter().map(|&(x, y)| (y - p.predict(x).unwrap()).powi(2)).sum();
            prop_assert!((p.pearson_r.powi(2) - (1.0 - ss_res / ss_tot)).abs() < 1e-9);
        }

        #[test]
        fn recovers_exact_lines(
            a in -5.0f64..5.0, b in -5.0f64..5.0,
            xs in prop::collection::hash_set(-100i32..100, 2..30)
        ) {
            let pairs: Vec<(f64, f64)> = xs.iter().map(|&x| {
                let x = f64::from(x) / 10.0;
                (x, a * x + b)
            }).collect();
            let p = EarlyPredictor::fit(&pairs).unwrap();
            prop_assert!((p.slope - a).abs() < 1e-10);
            prop_assert!((p.intercept - b).abs() < 1e-10);
        }

        #[test]
        fn positive_slope_preserves_ranking(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40),
            probe in prop::collection::vec(0.0f64..1.0, 2..20)
        ) {
            let p = EarlyPredictor::fit(&pairs).unwrap();
            prop_assume!(!p.degenerate && p.slope > 0.0);
            for w in probe.windows(2) {
                let (x, y) = (w[0], w[1]);
                if x < y {
                    prop_assert!(p.predict(x).unwrap() < p.predict(y).unwrap());
                }
            }
        }
    }
}
