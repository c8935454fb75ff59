use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use unisym::bdris::{gen_channels, low_cost_bdris, mo_u_proj_baseline, RateObjective};
use unisym::optimizer::{optimize_us, ArmijoParams};
use unisym::{Error, IterationTrace, UPoint, UsPoint};

use crate::runspec::{Method, RunSpec};

const LN2: f64 = std::f64::consts::LN_2;

/// Outcome of one method on one `(M, trial)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the method does not apply to the channel.
    pub rate_bits: Option<f64>,
    pub iterations: usize,
    pub wall_ms: f64,
    pub converged: bool,
    /// Iterative methods only.
    pub trace: Option<IterationTrace>,
}

impl ResultRow {
    pub fn applicable(&self) -> bool {
        self.rate_bits.is_some()
    }

    fn converged_field(&self) -> &'static str {
        match (self.applicable(), self.converged) {
            (false, _) => "inapplicable",
            (true, true) => "true",
            (true, false) => "false",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub mean_rate_bits: Option<f64>,
    pub std_rate_bits: Option<f64>,
    pub mean_iters: Option<f64>,
    pub applicable_trials: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub spec: RunSpec,
    /// Ordered by method (as listed in the run spec), then `M`, then trial.
    pub rows: Vec<ResultRow>,
}

pub const RESULTS_HEADER: &str = "method,M,trial,seed,rate_bits,iterations,wall_ms,converged";

/// Runs every method on every `(M, trial)` pair of the sweep.
///
/// The channel of a trial is drawn once and shared by all methods; the
/// unitary baseline starts from the same random point as the geodesic method.
pub fn run_experiment(spec: &RunSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let cfg = spec.optimizer();
    let armijo = ArmijoParams::default();
    let mut rows = Vec::with_capacity(spec.methods.len() * spec.sweep.len() * spec.trials);

    for &m in &spec.sweep {
        let sc = spec.scenario(m);
        for trial in 0..spec.trials {
            let seed = spec.channel_seed(trial);
            let channels = gen_channels(&sc, seed)?;
            let objective = RateObjective::new(channels, sc.rho)?;
            let start = UsPoint::random(m, spec.start_seed(trial))?;

            for &method in &spec.methods {
                let t0 = Instant::now();
                let row = match method {
                    Method::MoUs => {
                        let (point, trace) = optimize_us(&objective, &start, &cfg)?;
                        iterative_row(method, m, trial, seed, objective.rate(point.u())?, trace, t0)
                    }
                    Method::MoUProj => {
                        let (point, trace) =
                            mo_u_proj_baseline(&objective, &UPoint::from(start.clone()), &cfg, &armijo)?;
                        iterative_row(method, m, trial, seed, objective.rate(point.u())?, trace, t0)
                    }
                    Method::LowCost => match low_cost_bdris(objective.channels()) {
                        Ok(point) => ResultRow {
                            method,
                            m,
                            trial,
                            seed,
                            rate_bits: Some(objective.rate(point.u())? / LN2),
                            iterations: 0,
                            wall_ms: elapsed_ms(t0),
                            converged: true,
                            trace: None,
                        },
                        Err(Error::Inapplicable(_)) => ResultRow {
                            method,
                            m,
                            trial,
                            seed,
                            rate_bits: None,
                            iterations: 0,
                            wall_ms: 0.0,
                            converged: false,
                            trace: None,
                        },
                        Err(e) => return Err(e.into()),
                    },
                };
                rows.push(row);
            }
        }
    }

    let rank = |m: Method| spec.methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (rank(r.method), r.m, r.trial));
    Ok(ExperimentOutput { spec: spec.clone(), rows })
}

fn iterative_row(
    method: Method,
    m: usize,
    trial: usize,
    seed: u64,
    rate_nats: f64,
    trace: IterationTrace,
    t0: Instant,
) -> ResultRow {
    ResultRow {
        method,
        m,
        trial,
        seed,
        rate_bits: Some(rate_nats / LN2),
        iterations: trace.iterations(),
        wall_ms: elapsed_ms(t0),
        converged: trace.converged(),
        trace: Some(trace),
    }
}

fn elapsed_ms(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Some((mean, var.sqrt()))
}

impl ExperimentOutput {
    pub fn rows_for(&self, method: Method, m: usize) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| r.method == method && r.m == m)
    }

    /// Mean rate in bits over the applicable trials.
    pub fn mean_rate(&self, method: Method, m: usize) -> Option<f64> {
        self.summary_entry(method, m).mean_rate_bits
    }

    pub fn summary_entry(&self, method: Method, m: usize) -> SummaryEntry {
        let rows: Vec<_> = self.rows_for(method, m).filter(|r| r.applicable()).collect();
        let rates: Vec<f64> = rows.iter().filter_map(|r| r.rate_bits).collect();
        let iters: Vec<f64> = rows.iter().map(|r| r.iterations as f64).collect();
        let rate_stats = mean_std(&rates);
        SummaryEntry {
            mean_rate_bits: rate_stats.map(|s| s.0),
            std_rate_bits: rate_stats.map(|s| s.1),
            mean_iters: mean_std(&iters).map(|s| s.0),
            applicable_trials: rows.len(),
        }
    }

    /// `method -> M -> statistics`.
    pub fn summary(&self) -> BTreeMap<String, BTreeMap<String, SummaryEntry>> {
        let mut out = BTreeMap::new();
        for &method in &self.spec.methods {
            let per_m = self.spec.sweep.iter().map(|&m| (m.to_string(), self.summary_entry(method, m))).collect();
            out.insert(method.to_string(), per_m);
        }
        out
    }

    pub fn results_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(RESULTS_HEADER.split(','))?;
        for r in &self.rows {
            w.write_record([
                r.method.to_string(),
                r.m.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.rate_bits.map(|x| x.to_string()).unwrap_or_default(),
                r.iterations.to_string(),
                format!("{:.3}", r.wall_ms),
                r.converged_field().to_string(),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Trace of one iterative run: `k, F_bits, wall_ms` with the start at `k = 0`.
    pub fn trace_csv(trace: &IterationTrace) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "F_bits", "wall_ms"])?;
        w.write_record(["0".to_string(), (trace.initial_value / LN2).to_string(), "0.000".to_string()])?;
        for rec in &trace.records {
            w.write_record([rec.k.to_string(), (rec.value / LN2).to_string(), format!("{:.3}", rec.wall_ms)])?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Writes `results.csv`, `summary.json` and one `trace_<method>_<M>_<trial>.csv`
    /// per iterative run.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("results.csv"), self.results_csv()?)?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&self.summary())? + "\n")?;
        for r in &self.rows {
            if let Some(trace) = &r.trace {
                let name = format!("trace_{}_{}_{}.csv", r.method, r.m, r.trial);
                fs::write(dir.join(name), Self::trace_csv(trace)?)?;
            }
        }
        Ok(())
    }
}
