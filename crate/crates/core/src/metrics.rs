//! Classification quality metrics.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("no samples to score")]
    Empty,
    #[error("AUC is undefined when only one class is present")]
    SingleClass,
}

/// Which validation metric drives traces, regression and final comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    Accuracy,
    Auc,
}

impl MetricKind {
    pub fn evaluate(self, scored: &ScoredLabels<'_>) -> Result<f64, MetricError> {
        match self {
            MetricKind::Accuracy => Ok(accuracy(scored, 0.5)),
            MetricKind::Auc => auc_roc(scored),
        }
    }
}

/// Borrowed scores paired with binary labels.
#[derive(Debug, Clone, Copy)]
pub struct ScoredLabels<'a> {
    scores: &'a [f64],
    labels: &'a [u8],
}

impl<'a> ScoredLabels<'a> {
    pub fn new(scores: &'a [f64], labels: &'a [u8]) -> Result<Self, MetricError> {
        if scores.len() != labels.len() {
            return Err(MetricError::LengthMismatch { scores: scores.len(), labels: labels.len() });
        }
        if scores.is_empty() {
            return Err(MetricError::Empty);
        }
        Ok(Self { scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        self.scores
    }

    pub fn labels(&self) -> &[u8] {
        self.labels
    }
}

/// Fraction of rows where `score >= threshold` agrees with the label.
pub fn accuracy(scored: &ScoredLabels<'_>, threshold: f64) -> f64 {
    let hits = scored.scores.iter().zip(scored.labels).filter(|(&s, &l)| (s >= threshold) == (l == 1)).count();
    hits as f64 / scored.scores.len() as f64
}

/// Area under the ROC curve via the Mann–Whitney rank sum with average ranks
/// for tied scores.
pub fn auc_roc(scored: &ScoredLabels<'_>) -> Result<f64, MetricError> {
    let n = scored.scores.len();
    let n_pos = scored.labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scored.scores[a].partial_cmp(&scored.scores[b]).unwrap_or(Ordering::Equal));

    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && scored.scores[order[j]] == scored.scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share their mean.
        let rank = (i + 1 + j) as f64 / 2.0;
        let positives = order[i..j].iter().filter(|&&r| scored.labels[r] == 1).count();
        positive_rank_sum += rank * positives as f64;
        i = j;
    }

    let (p, q) = (n_pos as f64, n_neg as f64);
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sl<'a>(s: &'a [f64], l: &'a [u8]) -> ScoredLabels<'a> {
        ScoredLabels::new(s, l).unwrap()
    }

    fn pairwise_auc(s: &[f64], l: &[u8]) -> f64 {
        let mut total = 0.0;
        let mut pairs = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if l[i] == 1 && l[j] == 0 {
                    pairs += 1.0;
                    total += match s[i].partial_cmp(&s[j]).unwrap() {
                        Ordering::Greater => 1.0,
                        Ordering::Equal => 0.5,
                        Ordering::Less => 0.0,
                    };
                }
            }
        }
        total / pairs
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&sl(&[0.9, 0.1], &[1, 0]), 0.5), 1.0);
        assert_eq!(accuracy(&sl(&[0.9, 0.1], &[0, 1]), 0.5), 0.0);
        assert_eq!(accuracy(&sl(&[0.5], &[1]), 0.5), 1.0);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_roc(&sl(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1])).unwrap(), 1.0);
        assert_eq!(auc_roc(&sl(&[0.3; 5], &[0, 1, 0, 1, 1])).unwrap(), 0.5);
        assert_eq!(auc_roc(&sl(&[0.3, 0.4], &[1, 1])), Err(MetricError::SingleClass));
    }

    #[test]
    fn constructor_checks() {
        assert!(matches!(ScoredLabels::new(&[0.1], &[]), Err(MetricError::LengthMismatch { .. })));
        assert!(matches!(ScoredLabels::new(&[], &[]), Err(MetricError::Empty)));
    }

    #[test]
    fn thirty_point_instance_matches_pairwise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(30);
        let s: Vec<f64> = (0..30).map(|_| (rng.gen_range(0..10) as f64) / 10.0).collect();
        let l: Vec<u8> = (0..30).map(|i| (i % 3 == 0) as u8).collect();
        let got = auc_roc(&sl(&s, &l)).unwrap();
        assert!((got - pairwise_auc(&s, &l)).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn matches_pairwise_definition(
            data in prop::collection::vec((0u8..20, 0u8..2), 2..80)
        ) {
            let s: Vec<f64> = data.iter().map(|d| d.0 as f64 * 0.05).collect();
            let l: Vec<u8> = data.iter().map(|d| d.1).collect();
            prop_assume!(l.contains(&0) && l.contains(&1));
            let got = auc_roc(&sl(&s, &l)).unwrap();
            prop_assert!((got - pairwise_auc(&s, &l)).abs() <= 1e-12);
        }

        #[test]
        fn invariant_under_monotone_transform(
            data in prop::collection::vec((-5.0f64..5.0, 0u8..2), 2..60)
        ) {
            let s: Vec<f64> = data.iter().map(|d| d.0).collect();
            let l: Vec<u8> = data.iter().map(|d| d.1).collect();
            prop_assume!(l.contains(&0) && l.contains(&1));
            let t: Vec<f64> = s.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            let a = auc_roc(&sl(&s, &l)).unwrap();
            let b = auc_roc(&sl(&t, &l)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn negation_complements_without_ties(
            data in prop::collection::vec((-5.0f64..5.0, 0u8..2), 2..60)
        ) {
            let s: Vec<f64> = data.iter().map(|d| d.0).collect();
            let l: Vec<u8> = data.iter().map(|d| d.1).collect();
            prop_assume!(l.contains(&0) && l.contains(&1));
            let mut sorted = s.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assume!(sorted.windows(2).all(|w| w[0] != w[1]));
            let neg: Vec<f64> = s.iter().map(|x| -x).collect();
            let sum = auc_roc(&sl(&s, &l)).unwrap() + auc_roc(&sl(&neg, &l)).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn accuracy_permutation_invariant(
            data in prop::collection::vec((0.0f64..1.0, 0u8..2), 1..50),
            rot in 0usize..50
        ) {
            let s: Vec<f64> = data.iter().map(|d| d.0).collect();
            let l: Vec<u8> = data.iter().map(|d| d.1).collect();
            let r = rot % s.len();
            let mut s2 = s.clone();
            let mut l2 = l.clone();
            s2.rotate_left(r);
            l2.rotate_left(r);
            s2.reverse();
            l2.reverse();
            prop_assert_eq!(accuracy(&sl(&s, &l), 0.5), accuracy(&sl(&s2, &l2), 0.5));
        }
    }
}
