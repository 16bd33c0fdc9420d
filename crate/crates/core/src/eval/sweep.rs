use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{precision_recall, EvalError, Metrics};
use crate::catalog::{SchemaCatalog, TableId};
use crate::contextual::{label_entry, TraceEntry};
use crate::pipeline::{IterationSchedule, PipelineConfig, RetrievalIndexes, Step};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Label written to the `group` column.
    pub group: String,
    /// Share of the trace, taken from its end, that is held out for evaluation.
    pub holdout_fraction: f64,
    /// Similarity, ranking and execution settings; its schedule is ignored.
    pub pipeline: PipelineConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            group: "synthetic".into(),
            holdout_fraction: 0.2,
            pipeline: PipelineConfig::default(),
        }
    }
}

/// One CSV row: macro-averaged metrics of one iteration of one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub group: String,
    pub schedule_id: usize,
    pub iteration: usize,
    pub k: usize,
    pub l: usize,
    pub h: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Three-step schedules spanning broad-to-narrow chunk and triplet budgets.
pub fn sweep_schedules(catalog_size: usize) -> Vec<IterationSchedule> {
    let n = catalog_size.max(1);
    let scale = |x: usize| (x * n / 100).max(1);
    [
        [(40, 400, 12), (20, 200, 12), (10, 100, 12)],
        [(30, 300, 10), (15, 150, 10), (8, 80, 10)],
        [(20, 200, 8), (10, 100, 8), (5, 50, 8)],
        [(40, 300, 16), (20, 150, 16), (10, 80, 16)],
    ]
    .iter()
    .map(|steps| {
        IterationSchedule::new(
            steps
                .iter()
                .map(|&(k, l, h)| Step {
                    k: scale(k),
                    l: scale(l),
                    h,
                })
                .collect(),
        )
    })
    .collect()
}

/// Per-iteration predicted tables: the combined scope for every iteration but
/// the last, and the ranked entities' tables for the last.
fn predictions(
    indexes: &RetrievalIndexes,
    question: &str,
    config: &PipelineConfig,
) -> Vec<BTreeSet<TableId>> {
    let steps = config.schedule.steps.len();
    match indexes.run(question, config) {
        Ok(out) => {
            let mut preds: Vec<BTreeSet<TableId>> = out.per_stage[..steps - 1].iter().map(|s| s.scope.clone()).collect();
            preds.push(out.tables);
            preds
        }
        Err(_) => vec![BTreeSet::new(); steps],
    }
}

/// Evaluates every schedule on the held-out tail of `trace`, retrieving from
/// indexes built over the remaining entries only.
pub fn run_sweep(
    catalog: &SchemaCatalog,
    trace: &[TraceEntry],
    schedules: &[IterationSchedule],
    config: &SweepConfig,
) -> Result<Vec<SweepRow>, EvalError> {
    let held = ((trace.len() as f64) * config.holdout_fraction.clamp(0.0, 1.0)).ceil() as usize;
    if held == 0 || held >= trace.len() {
        return Err(EvalError::TraceTooSmall(trace.len()));
    }
    let split = trace.len() - held;
    let (build, eval) = trace.split_at(split);
    let indexes = RetrievalIndexes::build(catalog.clone(), build, &config.pipeline.similarity)?;
    let truths = eval
        .iter()
        .enumerate()
        .map(|(i, e)| label_entry(split + i, e, catalog).map(|rs| rs.tables))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (sid, schedule) in schedules.iter().enumerate() {
        schedule.validate()?;
        let run_config = PipelineConfig {
            schedule: schedule.clone(),
            ..config.pipeline.clone()
        };
        let per_question: Vec<Vec<Metrics>> = eval
            .par_iter()
            .zip(truths.par_iter())
            .map(|(entry, truth)| {
                predictions(&indexes, &entry.question, &run_config)
                    .iter()
                    .map(|p| precision_recall(p, truth))
                    .collect()
            })
            .collect();
        for (i, step) in schedule.steps.iter().enumerate() {
            let n = per_question.len() as f64;
            let precision = per_question.iter().map(|m| m[i].precision).sum::<f64>() / n;
            let recall = per_question.iter().map(|m| m[i].recall).sum::<f64>() / n;
            rows.push(SweepRow {
                group: config.group.clone(),
                schedule_id: sid + 1,
                iteration: i + 1,
                k: step.k,
                l: step.l,
                h: step.h,
                precision,
                recall,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
