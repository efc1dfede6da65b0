use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::agent::{uniform_baseline, Glove};
use crate::env::{check_constraints, ActionRatios, Env, Observation, ResourceAction, StepOutcome};
use crate::error::{Error, Result};
use crate::network::TopologySnapshot;
use crate::nn::checkpoint;
use crate::rng::{stream, Stream};

use super::metrics::{MetricsWriter, StepMetrics, TopologyWriter};
use super::ScenarioConfig;

pub const METRICS_FILE: &str = "metrics.tsv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const CONFIG_FILE: &str = "config.txt";
pub const TOPOLOGY_FILE: &str = "topology.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
    Baseline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Eval => "eval",
            Mode::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where metrics, config and checkpoint go; nothing is written if unset.
    pub out_dir: Option<PathBuf>,
    /// Defaults to `<mode>-s<seed>`.
    pub run_id: Option<String>,
    /// Also dump the routing tree of every slot.
    pub topology: bool,
}

#[derive(Debug)]
pub struct RunReport {
    pub metrics: Vec<StepMetrics>,
    /// Constraint violations found by the independent audit.
    pub violations: usize,
    /// Slots where created packets did not equal delivered + queued + lost.
    pub unconserved: usize,
    /// Final agent (training and evaluation only).
    pub agent: Option<Glove<f64>>,
}

struct Sinks {
    run_id: String,
    metrics: Option<MetricsWriter>,
    topology: Option<TopologyWriter>,
}

impl Sinks {
    fn open(cfg: &ScenarioConfig, opts: &RunOptions, mode: Mode) -> Result<Self> {
        let run_id = opts
            .run_id
            .clone()
            .unwrap_or_else(|| format!("{}-s{}", mode.name(), cfg.seed));
        let (mut metrics, mut topology) = (None, None);
        if let Some(dir) = &opts.out_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let cfg_path = dir.join(CONFIG_FILE);
            std::fs::write(&cfg_path, cfg.to_text()).map_err(|e| Error::io(&cfg_path, e))?;
            metrics = Some(MetricsWriter::create(&dir.join(METRICS_FILE))?);
            if opts.topology {
                topology = Some(TopologyWriter::create(&dir.join(TOPOLOGY_FILE))?);
            }
        }
        Ok(Self {
            run_id,
            metrics,
            topology,
        })
    }

    fn emit(
        &mut self,
        record: &StepMetrics,
        topo: &TopologySnapshot,
        action: &ResourceAction,
        rates: &[f64],
    ) -> Result<()> {
        if let Some(w) = &mut self.metrics {
            w.write(record)?;
        }
        if let Some(w) = &mut self.topology {
            for i in 0..topo.len() {
                if let (Some(j), Some(d)) = (topo.next_hop[i], topo.link_distance[i]) {
                    let rx = action.rx_for(j, i);
                    w.write_link(
                        &self.run_id,
                        record.step,
                        i,
                        j,
                        d,
                        action.tx_subarrays[i],
                        rx,
                        rates[i],
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn record(
    run_id: &str,
    step: usize,
    action: &ResourceAction,
    outcome: &StepOutcome,
    critic_loss: f64,
    q: f64,
    started: Instant,
    discarded: usize,
) -> StepMetrics {
    let n = action.len().max(1) as f64;
    let power: f64 = action.power.iter().map(|p| p.iter().sum::<f64>()).sum();
    let subarrays: usize = (0..action.len())
        .map(|i| action.tx_subarrays[i] + action.rx_total(i))
        .sum();
    let t = &outcome.traffic;
    StepMetrics {
        run_id: run_id.to_string(),
        step: step as u64,
        usage: outcome.usage.mean,
        power_w: power / n,
        subarrays: subarrays as f64 / n,
        latency_s: t.mean_latency,
        max_latency_s: t.max_latency,
        lost: t.lost,
        generated: t.generated,
        delivered: t.delivered,
        reward: outcome.reward.r,
        critic_loss,
        q,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        discarded: discarded as u64,
    }
}

fn at_step<T>(step: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Step {
        step,
        source: Box::new(e),
    })
}

/// Trains for `cfg.steps` slots; the final parameters are saved as the
/// checkpoint when an output directory is given.
pub fn run_training(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut env = Env::new(cfg)?;
    let mut agent = Glove::<f64>::from_config(cfg)?;
    let mut explore = stream(cfg.seed, Stream::Exploration);
    let mut sinks = Sinks::open(cfg, opts, Mode::Train)?;
    let budget = env.budget();
    let mut metrics = Vec::with_capacity(cfg.steps);
    let mut violations = 0;
    let mut unconserved = 0;
    for step in 0..cfg.steps {
        let started = Instant::now();
        let topo = env.topology().clone();
        let out = at_step(step, agent.train_step(&mut env, &mut explore))?;
        violations += check_constraints(&out.action, &topo, budget).len();
        unconserved += usize::from(!out.outcome.traffic.is_conserved());
        let d = out.diagnostics;
        let m = record(
            &sinks.run_id,
            step,
            &out.action,
            &out.outcome,
            d.critic_loss,
            d.q,
            started,
            d.discarded,
        );
        at_step(step, sinks.emit(&m, &topo, &out.action, &out.outcome.rates))?;
        metrics.push(m);
    }
    if let Some(dir) = &opts.out_dir {
        checkpoint::save(&agent.export_params(), &dir.join(CHECKPOINT_FILE))?;
    }
    Ok(RunReport {
        metrics,
        violations,
        unconserved,
        agent: Some(agent),
    })
}

fn run_fixed(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    mode: Mode,
    mut policy: impl FnMut(&Observation) -> Result<(ActionRatios, f64)>,
) -> Result<(Vec<StepMetrics>, usize, usize)> {
    let mut env = Env::new(cfg)?;
    let mut sinks = Sinks::open(cfg, opts, mode)?;
    let budget = env.budget();
    let mut metrics = Vec::with_capacity(cfg.steps);
    let mut violations = 0;
    let mut unconserved = 0;
    for step in 0..cfg.steps {
        let started = Instant::now();
        let topo = env.topology().clone();
        let obs = env.observe();
        let (ratios, q) = at_step(step, policy(&obs))?;
        let action = at_step(step, env.allocate(&ratios))?;
        violations += check_constraints(&action, &topo, budget).len();
        let outcome = at_step(step, env.step(&action))?;
        unconserved += usize::from(!outcome.traffic.is_conserved());
        let m = record(&sinks.run_id, step, &action, &outcome, 0.0, q, started, 0);
        at_step(step, sinks.emit(&m, &topo, &action, &outcome.rates))?;
        metrics.push(m);
    }
    Ok((metrics, violations, unconserved))
}

/// Runs a trained policy with no exploration and no updates. The `q`
/// column holds the critic's value of the executed action.
pub fn run_eval(
    cfg: &ScenarioConfig,
    checkpoint_path: &Path,
    opts: &RunOptions,
) -> Result<RunReport> {
    let mut agent = Glove::<f64>::from_config(cfg)?;
    agent.import_params(&checkpoint::load(checkpoint_path)?)?;
    let (metrics, violations, unconserved) = run_fixed(cfg, opts, Mode::Eval, |obs| {
        let ratios = agent.act(obs)?;
        let q = agent.critic.q(&obs.features, &obs.graph, &ratios)?;
        Ok((ratios, q))
    })?;
    Ok(RunReport {
        metrics,
        violations,
        unconserved,
        agent: Some(agent),
    })
}

/// Full power spread evenly over the bands, sub-arrays split evenly.
pub fn run_baseline(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let (metrics, violations, unconserved) = run_fixed(cfg, opts, Mode::Baseline, |obs| {
        Ok((uniform_baseline(obs.uavs(), cfg.k), 0.0))
    })?;
    Ok(RunReport {
        metrics,
        violations,
        unconserved,
        agent: None,
    })
}
