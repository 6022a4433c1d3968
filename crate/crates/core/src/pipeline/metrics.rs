//! Binary classification metrics. Class 1 is the positive class.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn from_pairs<I: IntoIterator<Item = (u8, u8)>>(truth_pred: I) -> Self {
        let mut c = Confusion::default();
        for (t, p) in truth_pred {
            match (t, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, 0) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// 0 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Area under the ROC curve (Mann-Whitney form, ties count one half).
/// Returns 0.5 when only one class is present.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over tied groups
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return 0.5;
    }
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictor() {
        let pairs = [(0, 0), (1, 1), (0, 0), (1, 1)];
        let c = Confusion::from_pairs(pairs);
        assert_eq!((c.accuracy(), c.precision(), c.recall(), c.f1()), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_positive_predictor() {
        let truth = [1, 1, 0, 0, 0, 1, 1, 0, 0, 0];
        let c = Confusion::from_pairs(truth.iter().map(|&t| (t, 1)));
        assert_eq!(c.recall(), 1.0);
        assert!((c.precision() - 0.4).abs() < 1e-15);
        assert!((c.accuracy() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]), 1.0);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]), 0.0);
        assert_eq!(roc_auc(&[0.5, 0.5, 0.5, 0.5], &[0, 1, 0, 1]), 0.5);
        assert_eq!(roc_auc(&[0.3, 0.7], &[1, 1]), 0.5);
        // one discordant pair out of four
        assert_eq!(roc_auc(&[0.1, 0.6, 0.5, 0.9], &[0, 0, 1, 1]), 0.75);
    }

    fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li == 1 && lj == 0 {
                    pairs += 1.0;
                    wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        if pairs == 0.0 {
            0.5
        } else {
            wins / pairs
        }
    }

    proptest! {
        #[test]
        fn metric_identities(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let c = Confusion::from_pairs(pairs.iter().copied());
            let correct = pairs.iter().filter(|(t, p)| t == p).count() as f64;
            prop_assert!((c.accuracy() - correct / pairs.len() as f64).abs() < 1e-12);
            let (p, r) = (c.precision(), c.recall());
            if p + r > 0.0 {
                prop_assert!((c.f1() - 2.0 * p * r / (p + r)).abs() < 1e-12);
            }
            prop_assert_eq!(c.total(), pairs.len() as u64);
        }

        #[test]
        fn auc_matches_pair_count(data in proptest::collection::vec((0u8..5, 0u8..2), 1..40)) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s) / 4.0).collect();
            let labels: Vec<u8> = data.iter().map(|(_, l)| *l).collect();
            prop_assert!((roc_auc(&scores, &labels) - brute_auc(&scores, &labels)).abs() < 1e-12);
        }
    }
}
