//! Configuration, experiment runs and metrics files.

mod config;
mod metrics;
mod run;

pub use config::ScenarioConfig;
pub use metrics::{read_metrics, write_metrics, MetricsWriter, StepMetrics, TopologyWriter};
pub use run::{
    run_baseline, run_eval, run_training, Mode, RunOptions, RunReport, CHECKPOINT_FILE,
    CONFIG_FILE, METRICS_FILE, TOPOLOGY_FILE,
};
