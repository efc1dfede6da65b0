//! Tab-separated per-step metrics.
//!
//! Columns, in order: `run_id step usage power_w subarrays latency_s
//! max_latency_s lost generated delivered reward critic_loss q wall_ms
//! discarded`. One header line, then one line per step. Floats are
//! written in shortest round-trip form.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub run_id: String,
    pub step: u64,
    /// Network-mean resource usage ratio.
    pub usage: f64,
    /// Mean transmit power per UAV (W).
    pub power_w: f64,
    /// Mean Tx plus Rx sub-arrays per UAV.
    pub subarrays: f64,
    /// Mean header-arrival latency this slot (s).
    pub latency_s: f64,
    pub max_latency_s: f64,
    pub lost: u64,
    pub generated: u64,
    pub delivered: u64,
    pub reward: f64,
    pub critic_loss: f64,
    pub q: f64,
    pub wall_ms: f64,
    pub discarded: u64,
}

impl StepMetrics {
    /// Equality with the wall-time column ignored.
    pub fn same_run_values(&self, other: &Self) -> bool {
        let mut a = self.clone();
        a.wall_ms = other.wall_ms;
        a == *other
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Appends records to a metrics file, flushing after every line.
pub struct MetricsWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let inner = csv::WriterBuilder::new().delimiter(b'\t').from_writer(file);
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn write(&mut self, record: &StepMetrics) -> Result<()> {
        self.inner.serialize(record).map_err(csv_err(&self.path))?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_metrics(path: &Path, records: &[StepMetrics]) -> Result<()> {
    let mut w = MetricsWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<StepMetrics>> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(csv_err(path))?;
    r.deserialize()
        .map(|rec| rec.map_err(csv_err(path)))
        .collect()
}

/// Per-slot routing-tree links.
pub struct TopologyWriter {
    path: PathBuf,
    file: File,
}

impl TopologyWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "run_id\tstep\tfrom\tto\tdistance_m\ttx\trx\trate_bps")
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn write_link(
        &mut self,
        run_id: &str,
        step: u64,
        from: usize,
        to: usize,
        distance: f64,
        tx: usize,
        rx: usize,
        rate: f64,
    ) -> Result<()> {
        writeln!(
            self.file,
            "{run_id}\t{step}\t{from}\t{to}\t{distance}\t{tx}\t{rx}\t{rate}"
        )
        .map_err(|e| Error::io(&self.path, e))
    }
}
