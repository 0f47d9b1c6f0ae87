//! Parallel sweep execution with deterministic aggregation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trial::{run_trial, TrialContext, TrialOutcome};
use super::{Metric, SweepSpec};
use crate::error::{Error, Result};

/// One output row: a metric at a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub sweep_value: String,
    pub metric: Metric,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`; 0 for a single trial.
    pub stderr: f64,
    pub trials: usize,
    pub seconds: f64,
}

/// Folds outcomes in the order given; one record per metric with at least
/// one defined value.
pub fn aggregate(sweep_value: &str, outcomes: &[TrialOutcome], metrics: &[Metric], seconds: f64) -> Vec<MetricsRecord> {
    let mut out = Vec::with_capacity(metrics.len());
    for (j, &metric) in metrics.iter().enumerate() {
        let vals: Vec<f64> = outcomes.iter().filter_map(|o| o.values.get(j).copied().flatten()).collect();
        let n = vals.len();
        if n == 0 {
            continue;
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        out.push(MetricsRecord { sweep_value: sweep_value.to_string(), metric, mean, stderr, trials: n, seconds });
    }
    out
}

fn run_point(spec: &SweepSpec, index: usize) -> Result<Vec<MetricsRecord>> {
    let value = &spec.values[index];
    let config = spec.config_for(value)?;
    let trials = config.trials;
    let ctx = TrialContext::new(config, spec.metrics.clone(), spec.detector, spec.estimator)?;
    let start = Instant::now();
    let results: Vec<Result<TrialOutcome>> =
        (0..trials as u64).into_par_iter().map(|t| run_trial(&ctx, index as u64, t)).collect();
    let seconds = if spec.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let mut first_err = None;
    let mut ok = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(o) => ok.push(o),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if ok.is_empty() {
        return Err(first_err.unwrap_or(Error::EmptyInput("trials")));
    }
    Ok(aggregate(&value.to_string(), &ok, &spec.metrics, seconds))
}

/// Runs every sweep point on the global thread pool, handing each point's
/// records to `on_point` as soon as it finishes.
pub fn run_sweep(spec: &SweepSpec, mut on_point: impl FnMut(&[MetricsRecord])) -> Result<Vec<MetricsRecord>> {
    spec.validate()?;
    let mut all = Vec::new();
    for i in 0..spec.values.len() {
        let recs = run_point(spec, i)?;
        on_point(&recs);
        all.extend(recs);
    }
    Ok(all)
}

/// `run_sweep` on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(
    spec: &SweepSpec,
    threads: usize,
    on_point: impl FnMut(&[MetricsRecord]) + Send,
) -> Result<Vec<MetricsRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(spec, on_point))
}
