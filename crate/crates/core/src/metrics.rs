//! Classification scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Unweighted mean over classes.
    Macro,
    /// Mean weighted by each class's support in the ground truth.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    /// `counts[truth][pred]`
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(preds: &[usize], truths: &[usize]) -> Result<Self> {
        if preds.len() != truths.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictions for {} ground-truth labels",
                preds.len(),
                truths.len()
            )));
        }
        let k = preds.iter().chain(truths).max().map_or(0, |&m| m + 1);
        let mut counts = vec![vec![0; k]; k];
        for (&p, &t) in preds.iter().zip(truths) {
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn count(&self, truth: usize, pred: usize) -> usize {
        self.counts.get(truth).and_then(|r| r.get(pred)).copied().unwrap_or(0)
    }

    pub fn true_positives(&self, c: usize) -> usize {
        self.count(c, c)
    }

    /// Ground-truth count of class `c`.
    pub fn support(&self, c: usize) -> usize {
        self.counts.get(c).map_or(0, |r| r.iter().sum())
    }

    pub fn predicted(&self, c: usize) -> usize {
        self.counts.iter().map(|r| r.get(c).copied().unwrap_or(0)).sum()
    }

    /// Classes occurring in either the predictions or the ground truth.
    pub fn present_classes(&self) -> Vec<usize> {
        (0..self.counts.len())
            .filter(|&c| self.support(c) > 0 || self.predicted(c) > 0)
            .collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Per-class precision, recall and F1, with 0/0 taken as 0.
    pub fn class_scores(&self, c: usize) -> Scores {
        let tp = self.true_positives(c) as f64;
        let ratio = |den: usize| if den == 0 { 0.0 } else { tp / den as f64 };
        let precision = ratio(self.predicted(c));
        let recall = ratio(self.support(c));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores { precision, recall, f1 }
    }

    pub fn scores(&self, averaging: Averaging) -> Scores {
        let classes = self.present_classes();
        if classes.is_empty() {
            return Scores::default();
        }
        let weights: Vec<f64> = match averaging {
            Averaging::Macro => vec![1.0 / classes.len() as f64; classes.len()],
            Averaging::Weighted => {
                let total = self.total() as f64;
                classes.iter().map(|&c| self.support(c) as f64 / total).collect()
            }
        };
        let mut out = Scores::default();
        for (&c, w) in classes.iter().zip(weights) {
            let s = self.class_scores(c);
            out.precision += w * s.precision;
            out.recall += w * s.recall;
            out.f1 += w * s.f1;
        }
        out
    }
}

pub fn evaluate(preds: &[usize], truths: &[usize], averaging: Averaging) -> Result<Scores> {
    Ok(ConfusionMatrix::new(preds, truths)?.scores(averaging))
}

pub fn accuracy(preds: &[usize], truths: &[usize]) -> Result<f64> {
    let cm = ConfusionMatrix::new(preds, truths)?;
    let total = cm.total();
    if total == 0 {
        return Ok(0.0);
    }
    let correct: usize = (0..cm.counts.len()).map(|c| cm.true_positives(c)).sum();
    Ok(correct as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn balanced_half_right() {
        let s = evaluate(&[0, 1, 0, 1], &[0, 0, 1, 1], Averaging::Macro).unwrap();
        assert_eq!(s.f1, 0.5);
        assert_eq!(s.precision, 0.5);
        assert_eq!(s.recall, 0.5);
    }

    #[test]
    fn perfect_and_empty() {
        let s = evaluate(&[2, 0, 1], &[2, 0, 1], Averaging::Weighted).unwrap();
        assert_eq!(s.f1, 1.0);
        assert_eq!(evaluate(&[], &[], Averaging::Macro).unwrap(), Scores::default());
    }

    #[test]
    fn class_never_predicted_counts_as_zero() {
        // class 1 has support but no predictions: precision 0/0 -> 0
        let s = evaluate(&[0, 0, 0], &[0, 0, 1], Averaging::Macro).unwrap();
        let f1_0 = 2.0 * (2.0 / 3.0) / (2.0 / 3.0 + 1.0);
        assert!((s.f1 - f1_0 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_uses_support() {
        let s = evaluate(&[0, 0, 0, 1], &[0, 0, 0, 0], Averaging::Weighted).unwrap();
        // class 1 has zero support and gets zero weight
        let f1_0 = 2.0 * 0.75 / 1.75;
        assert!((s.f1 - f1_0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(evaluate(&[0], &[0, 1], Averaging::Macro).is_err());
    }

    fn brute_macro_f1(preds: &[usize], truths: &[usize]) -> f64 {
        let mut classes: Vec<usize> = preds.iter().chain(truths).copied().collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0;
        for &c in &classes {
            let mut tp = 0.0;
            let mut fp = 0.0;
            let mut fneg = 0.0;
            for (&p, &t) in preds.iter().zip(truths) {
                match (p == c, t == c) {
                    (true, true) => tp += 1.0,
                    (true, false) => fp += 1.0,
                    (false, true) => fneg += 1.0,
                    _ => {}
                }
            }
            // F1 = 2tp / (2tp + fp + fn)
            let den = 2.0 * tp + fp + fneg;
            sum += if den == 0.0 { 0.0 } else { 2.0 * tp / den };
        }
        sum / classes.len() as f64
    }

    fn labelled_pairs() -> impl Strategy<Value = Vec<(usize, usize)>> {
        prop::collection::vec((0usize..4, 0usize..4), 0..40)
    }

    proptest! {
        #[test]
        fn macro_f1_matches_counting(pairs in labelled_pairs()) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let s = evaluate(&p, &t, Averaging::Macro).unwrap();
            prop_assert!((s.f1 - brute_macro_f1(&p, &t)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&s.f1));
        }

        #[test]
        fn invariant_under_label_permutation(pairs in labelled_pairs(), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let pp: Vec<_> = p.iter().map(|&x| perm[x]).collect();
            let tp: Vec<_> = t.iter().map(|&x| perm[x]).collect();
            for avg in [Averaging::Macro, Averaging::Weighted] {
                let a = evaluate(&p, &t, avg).unwrap();
                let b = evaluate(&pp, &tp, avg).unwrap();
                prop_assert!((a.f1 - b.f1).abs() < 1e-12);
                prop_assert!((a.precision - b.precision).abs() < 1e-12);
            }
        }
    }
}
