use std::fs;
use std::path::Path;

use anyhow::Result;

use crate::experiment::run_experiment;
use crate::runspec::{Method, RunSpec};

/// Timing trials per `M` are at least this many.
pub const MIN_BENCH_TRIALS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub m: usize,
    /// Median wall time of one optimizer iteration over all trials.
    pub median_iter_ms: f64,
    /// Median wall time of a complete trial.
    pub total_ms: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times every method of a run spec over its sweep, one trial after another.
///
/// For the closed-form method a trial counts as a single iteration.
/// Inapplicable trials are skipped.
pub fn bench(spec: &RunSpec) -> Result<Vec<BenchRow>> {
    let spec = RunSpec { trials: spec.trials.max(MIN_BENCH_TRIALS), ..spec.clone() };
    let out = run_experiment(&spec)?;
    let mut rows = Vec::new();
    for &method in &spec.methods {
        for &m in &spec.sweep {
            let runs: Vec<_> = out.rows_for(method, m).filter(|r| r.applicable()).collect();
            if runs.is_empty() {
                continue;
            }
            let per_iter: Vec<f64> = runs
                .iter()
                .flat_map(|r| match &r.trace {
                    Some(t) => t.records.iter().map(|rec| rec.wall_ms).collect(),
                    None => vec![r.wall_ms],
                })
                .collect();
            let totals = runs.iter().map(|r| r.wall_ms).collect();
            rows.push(BenchRow { method, m, median_iter_ms: median(per_iter), total_ms: median(totals) });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "M", "median_iter_ms", "total_ms"])?;
    for r in rows {
        w.write_record([r.method.to_string(), r.m.to_string(), format!("{:.4}", r.median_iter_ms), format!("{:.3}", r.total_ms)])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn write_bench(rows: &[BenchRow], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("bench.csv"), bench_csv(rows)?)?;
    Ok(())
}
