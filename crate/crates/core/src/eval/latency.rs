use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{nearest_rank_sorted, EvalError};
use crate::pipeline::{PipelineConfig, RetrievalIndexes};

pub const MIN_REPETITIONS: usize = 30;
const WARMUP: usize = 10;

/// End-to-end latency summary; every duration is in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub mean: f64,
    pub per_stage_means: BTreeMap<String, f64>,
    pub sample_count: usize,
    /// Raw samples in run order.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub samples: Vec<f64>,
}

impl LatencyReport {
    /// Summarizes raw samples with nearest-rank percentiles.
    pub fn from_samples(samples: Vec<f64>, per_stage_means: BTreeMap<String, f64>) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            p50: nearest_rank_sorted(&sorted, 50.0),
            p90: nearest_rank_sorted(&sorted, 90.0),
            p99: nearest_rank_sorted(&sorted, 99.0),
            mean: samples.iter().sum::<f64>() / samples.len() as f64,
            per_stage_means,
            sample_count: samples.len(),
            samples,
        })
    }
}

/// Times `repetitions` sequential retrievals, cycling through `questions`,
/// after a short untimed warm-up. Failed retrievals are timed too.
pub fn latency_bench(
    indexes: &RetrievalIndexes,
    config: &PipelineConfig,
    questions: &[String],
    repetitions: usize,
) -> Result<LatencyReport, EvalError> {
    if repetitions < MIN_REPETITIONS {
        return Err(EvalError::TooFewRepetitions {
            min: MIN_REPETITIONS,
            got: repetitions,
        });
    }
    if questions.is_empty() {
        return Err(EvalError::NoQuestions);
    }
    config.schedule.validate()?;
    for q in questions.iter().take(WARMUP) {
        let _ = indexes.run(q, config);
    }
    let mut samples = Vec::with_capacity(repetitions);
    let mut stage_sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut stage_counts: BTreeMap<String, usize> = BTreeMap::new();
    for i in 0..repetitions {
        let q = &questions[i % questions.len()];
        let start = Instant::now();
        let out = indexes.run(q, config);
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        if let Ok(out) = out {
            for (stage, us) in out.timings {
                *stage_sums.entry(stage.clone()).or_default() += us as f64 / 1e3;
                *stage_counts.entry(stage).or_default() += 1;
            }
        }
    }
    let means = stage_sums
        .into_iter()
        .map(|(s, sum)| {
            let n = stage_counts[&s] as f64;
            (s, sum / n)
        })
        .collect();
    Ok(LatencyReport::from_samples(samples, means).expect("repetitions > 0"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_matches_full_sort() {
        let samples: Vec<f64> = (0..100).rev().map(|i| i as f64 * 0.5).collect();
        let r = LatencyReport::from_samples(samples.clone(), BTreeMap::new()).unwrap();
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(r.p50, sorted[49]);
        assert_eq!(r.p90, sorted[89]);
        assert_eq!(r.p99, sorted[98]);
        assert_eq!(r.sample_count, 100);
        assert!(r.p50 <= r.p90 && r.p90 <= r.p99);
    }

    #[test]
    fn constant_samples_collapse_percentiles() {
        let r = LatencyReport::from_samples(vec![3.0; 40], BTreeMap::new()).unwrap();
        assert_eq!((r.p50, r.p99, r.mean), (3.0, 3.0, 3.0));
    }
}
