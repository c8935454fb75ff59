use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use unisym_harness::{bench, run_experiment, write_bench, Method, RunSpec};

#[derive(Parser)]
#[command(name = "unisym", version, about = "Sum-rate experiments for symmetric BD-RIS designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep and write results.csv, summary.json and traces.
    Run(Common),
    /// Time the optimizers and write bench.csv.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run spec.
    spec: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of trials per element count.
    #[arg(long)]
    trials: Option<usize>,
    /// First channel seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of mo_us, mo_u_proj, low_cost.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
}

impl Common {
    fn load(&self) -> Result<RunSpec> {
        let mut spec = RunSpec::load(&self.spec)?;
        if let Some(out) = &self.out {
            spec.output_dir = out.clone();
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(s) = self.seed {
            spec.seed0 = s;
        }
        if let Some(m) = &self.methods {
            spec.methods = m.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let spec = args.load()?;
            let out = run_experiment(&spec)?;
            out.write(&spec.output_dir)?;
            for &method in &spec.methods {
                for &m in &spec.sweep {
                    let entry = out.summary_entry(method, m);
                    match entry.mean_rate_bits {
                        Some(rate) => println!(
                            "{:>10} M={m:<4} rate {rate:8.3} bits  iters {:6.1}",
                            method.to_string(),
                            entry.mean_iters.unwrap_or(0.0)
                        ),
                        None => println!("{:>10} M={m:<4} inapplicable", method.to_string()),
                    }
                }
            }
            println!("wrote {}", spec.output_dir.display());
        }
        Command::Bench(args) => {
            let spec = args.load()?;
            let rows = bench(&spec)?;
            write_bench(&rows, &spec.output_dir)?;
            for r in &rows {
                println!("{:>10} M={:<4} {:10.4} ms/iter  {:10.3} ms/trial", r.method.to_string(), r.m, r.median_iter_ms, r.total_ms);
            }
            println!("wrote {}", spec.output_dir.join("bench.csv").display());
        }
    }
    Ok(())
}
