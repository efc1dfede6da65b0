use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use glove::harness::{run_baseline, run_eval, run_training, RunOptions, RunReport, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "glove",
    version,
    about = "THz UAV mesh resource allocation: train, evaluate, compare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the agent and save a checkpoint.
    Train(Common),
    /// Run a saved policy without exploration or updates.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to load.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the uniform-allocation baseline.
    Baseline(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Extra `key=value` override; repeatable, applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of slots.
    #[arg(long)]
    steps: Option<usize>,
    /// Disable the self-node path (GNN-only actor).
    #[arg(long)]
    ablation: bool,
    /// Output directory.
    #[arg(short, long, env = "GLOVE_OUT_DIR", default_value = "runs")]
    out: PathBuf,
    /// Also write the per-slot routing tree.
    #[arg(long)]
    topology: bool,
    #[arg(long)]
    run_id: Option<String>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(steps) = self.steps {
            overrides.push(format!("steps={steps}"));
        }
        if self.ablation {
            overrides.push("ablation=true".into());
        }
        Ok(ScenarioConfig::load(self.config.as_deref(), &overrides)?)
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            out_dir: Some(self.out.clone()),
            run_id: self.run_id.clone(),
            topology: self.topology,
        }
    }
}

fn summarize(report: &RunReport, out: &std::path::Path) {
    let m = &report.metrics;
    if let (Some(first), Some(last)) = (m.first(), m.last()) {
        let tail = &m[m.len().saturating_sub(50)..];
        let mean_u = tail.iter().map(|r| r.usage).sum::<f64>() / tail.len() as f64;
        let lost: u64 = m.iter().map(|r| r.lost).sum();
        let max_t = m.iter().map(|r| r.latency_s).fold(0.0, f64::max);
        println!(
            "{} steps: usage {:.3} -> {:.3} (last {} mean {:.3}), lost {lost}, max mean latency {:.3} ms",
            m.len(),
            first.usage,
            last.usage,
            tail.len(),
            mean_u,
            max_t * 1e3
        );
    }
    if report.violations > 0 {
        println!("constraint violations: {}", report.violations);
    }
    if report.unconserved > 0 {
        println!("slots failing packet conservation: {}", report.unconserved);
    }
    println!("output in {}", out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.config()?;
            let report = run_training(&cfg, &c.options()).context("training failed")?;
            summarize(&report, &c.out);
        }
        Command::Eval {
            common: c,
            checkpoint,
        } => {
            let cfg = c.config()?;
            let report = run_eval(&cfg, &checkpoint, &c.options()).context("evaluation failed")?;
            summarize(&report, &c.out);
        }
        Command::Baseline(c) => {
            let cfg = c.config()?;
            let report = run_baseline(&cfg, &c.options()).context("baseline run failed")?;
            summarize(&report, &c.out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
