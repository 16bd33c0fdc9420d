//! Evaluation: set metrics, synthetic enterprise workloads, schedule sweeps and
//! latency benchmarks.

mod generator;
mod latency;
mod sweep;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::TableId;

pub use generator::{
    generate_synthetic, relevant_size_distribution, GeneratorProfile, SyntheticWorkload, TABLE1_GROUPS,
};
pub use latency::{latency_bench, LatencyReport, MIN_REPETITIONS};
pub use sweep::{run_sweep, sweep_schedules, write_sweep_csv, SweepConfig, SweepRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid generator profile: {0}")]
    InvalidProfile(String),
    #[error("infeasible generator profile: {0}")]
    Infeasible(String),
    #[error("sweep needs at least one build and one held-out question (trace has {0})")]
    TraceTooSmall(usize),
    #[error("latency bench needs at least {min} repetitions, got {got}")]
    TooFewRepetitions { min: usize, got: usize },
    #[error("no questions to benchmark")]
    NoQuestions,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Contextual(#[from] crate::contextual::ContextualError),
    #[error(transparent)]
    Similarity(#[from] crate::similarity::SimilarityError),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

fn ratio(hits: usize, total: usize, both_empty: bool) -> f64 {
    if total == 0 {
        if both_empty {
            1.0
        } else {
            0.0
        }
    } else {
        hits as f64 / total as f64
    }
}

/// Set precision and recall. An empty prediction against an empty truth
/// scores 1 on both; any other zero denominator scores 0.
pub fn precision_recall(predicted: &BTreeSet<TableId>, truth: &BTreeSet<TableId>) -> Metrics {
    let tp = predicted.intersection(truth).count();
    let fp = predicted.len() - tp;
    let fn_ = truth.len() - tp;
    let both_empty = predicted.is_empty() && truth.is_empty();
    Metrics {
        precision: ratio(tp, tp + fp, both_empty),
        recall: ratio(tp, tp + fn_, both_empty),
        true_pos: tp,
        false_pos: fp,
        false_neg: fn_,
    }
}

/// Nearest-rank percentile: the smallest sample whose rank is at least
/// `⌈p/100 · n⌉`. `p` is clamped to `[0, 100]`; `None` for no samples.
pub fn percentile_nearest_rank(samples: &[f64], p: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(nearest_rank_sorted(&sorted, p))
}

pub(crate) fn nearest_rank_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p.clamp(0.0, 100.0) / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[u32]) -> BTreeSet<TableId> {
        ids.iter().map(|&i| TableId(i)).collect()
    }

    #[test]
    fn hand_cases() {
        let m = precision_recall(&set(&[1, 2]), &set(&[1, 2]));
        assert_eq!((m.precision, m.recall), (1.0, 1.0));
        let m = precision_recall(&set(&[1, 2, 3, 4]), &set(&[1, 2]));
        assert_eq!((m.precision, m.recall, m.false_pos), (0.5, 1.0, 2));
        let m = precision_recall(&set(&[]), &set(&[1]));
        assert_eq!((m.precision, m.recall), (0.0, 0.0));
        let m = precision_recall(&set(&[]), &set(&[]));
        assert_eq!((m.precision, m.recall), (1.0, 1.0));
        let m = precision_recall(&set(&[3]), &set(&[]));
        assert_eq!((m.precision, m.recall), (0.0, 0.0));
    }

    #[test]
    fn nearest_rank_examples() {
        let s = [15.0, 20.0, 35.0, 40.0, 50.0];
        assert_eq!(percentile_nearest_rank(&s, 5.0), Some(15.0));
        assert_eq!(percentile_nearest_rank(&s, 30.0), Some(20.0));
        assert_eq!(percentile_nearest_rank(&s, 40.0), Some(20.0));
        assert_eq!(percentile_nearest_rank(&s, 50.0), Some(35.0));
        assert_eq!(percentile_nearest_rank(&s, 100.0), Some(50.0));
        assert_eq!(percentile_nearest_rank(&[], 50.0), None);
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(a in proptest::collection::btree_set(0u32..12, 0..8),
                                               b in proptest::collection::btree_set(0u32..12, 0..8)) {
            let (a, b): (BTreeSet<TableId>, BTreeSet<TableId>) =
                (a.into_iter().map(TableId).collect(), b.into_iter().map(TableId).collect());
            let ab = precision_recall(&a, &b);
            let ba = precision_recall(&b, &a);
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.recall, ba.precision);
        }

        #[test]
        fn percentile_is_a_sample_and_monotone(xs in proptest::collection::vec(0.0f64..1e3, 1..50)) {
            let p50 = percentile_nearest_rank(&xs, 50.0).unwrap();
            let p90 = percentile_nearest_rank(&xs, 90.0).unwrap();
            let p99 = percentile_nearest_rank(&xs, 99.0).unwrap();
            prop_assert!(xs.contains(&p50));
            prop_assert!(p50 <= p90 && p90 <= p99);
        }
    }
}
