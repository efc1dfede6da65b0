//! Long-range-dependent traffic, per-UAV FIFO buffers, and per-packet
//! latency and loss accounting.

mod fgn;
mod transport;

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

pub use fgn::{autocovariance, FgnGenerator};
pub use transport::{Delivery, Drop, Routes, SlotTrafficReport, Transport, UavSlotStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub id: u64,
    /// Time spent in the network so far (s), summed per hop.
    pub latency: f64,
    /// Slot and in-slot offset of arrival at the current buffer.
    pub arrival_offset: f64,
    pub arrived_slot: u32,
    pub origin: u16,
    pub hops: u16,
}

/// Bounded FIFO packet buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct FifoBuffer {
    pub(crate) queue: VecDeque<Packet>,
    capacity: usize,
    lost: u64,
}

impl FifoBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: VecDeque::new(),
            capacity,
            lost: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn lost(&self) -> u64 {
        self.lost
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.capacity
    }

    /// Appends unless full; a refused packet is counted as lost.
    pub fn offer(&mut self, packet: Packet) -> std::result::Result<(), Packet> {
        if self.is_full() {
            self.lost += 1;
            Err(packet)
        } else {
            self.queue.push_back(packet);
            Ok(())
        }
    }

    pub fn packets(&self) -> impl Iterator<Item = &Packet> {
        self.queue.iter()
    }
}

/// Occupation ratio of a buffer.
pub fn buffer_occupancy(buffer: &FifoBuffer) -> f64 {
    if buffer.capacity() == 0 {
        return 1.0;
    }
    buffer.len() as f64 / buffer.capacity() as f64
}

/// Aggregate single-link loss: packets beyond what the buffer plus one
/// slot of service can absorb.
pub fn aggregate_loss(
    incoming: u64,
    queued: u64,
    capacity: u64,
    rate: f64,
    dt: f64,
    packet_bits: f64,
) -> u64 {
    let served = (rate * dt / packet_bits).floor() as u64;
    (incoming + queued).saturating_sub(capacity + served)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficModel {
    /// Mean offered load per UAV (bit/s).
    pub mean_rate: f64,
    pub hurst: f64,
    /// Standard deviation of the per-slot volume (bit).
    pub sigma: f64,
    pub packet_bits: f64,
}

impl TrafficModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_rate >= 0.0) {
            return Err(Error::invalid("mean traffic rate must be non-negative"));
        }
        if !(0.5..1.0).contains(&self.hurst) {
            return Err(Error::invalid("Hurst exponent must lie in [0.5, 1)"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::invalid("traffic sigma must be non-negative"));
        }
        if !(self.packet_bits > 0.0) {
            return Err(Error::invalid("packet size must be positive"));
        }
        Ok(())
    }

    /// Expected packets per UAV per slot.
    pub fn expected_packets(&self, dt: f64) -> f64 {
        self.mean_rate * dt / self.packet_bits
    }
}

/// Packet count for one slot given a unit-variance fGn increment.
pub fn packet_count(model: &TrafficModel, dt: f64, increment: f64) -> u64 {
    let volume = (model.mean_rate * dt + model.sigma * increment).max(0.0);
    (volume / model.packet_bits).floor() as u64
}

/// `count` arrival offsets in `[0, dt)`, ascending. These are the order
/// statistics of `count` independent uniforms, drawn through normalized
/// exponential spacings so no sort is needed.
pub fn arrival_offsets<R: Rng + ?Sized>(count: u64, dt: f64, rng: &mut R) -> Vec<f64> {
    let count = count as usize;
    if count == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(count);
    let mut acc = 0.0f64;
    for _ in 0..count {
        acc += <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
        out.push(acc);
    }
    let total = acc + <Exp1 as Distribution<f64>>::sample(&Exp1, rng);
    let scale = dt / total;
    for v in &mut out {
        *v *= scale;
        if *v >= dt {
            *v = dt * (1.0 - f64::EPSILON);
        }
    }
    out
}

/// Per-UAV arrival process over a fixed horizon of slots.
#[derive(Debug)]
pub struct TrafficSource {
    model: TrafficModel,
    fgn: FgnGenerator,
    paths: Vec<Vec<f64>>,
    cursor: usize,
}

impl TrafficSource {
    pub fn new<R: Rng + ?Sized>(
        model: TrafficModel,
        uavs: usize,
        horizon: usize,
        rng: &mut R,
    ) -> Result<Self> {
        model.validate()?;
        let fgn = FgnGenerator::new(model.hurst, horizon.max(1))?;
        let mut source = Self {
            model,
            fgn,
            paths: Vec::new(),
            cursor: 0,
        };
        source.refill(uavs, rng);
        Ok(source)
    }

    fn refill<R: Rng + ?Sized>(&mut self, uavs: usize, rng: &mut R) {
        self.paths = if self.model.sigma == 0.0 {
            vec![vec![0.0; self.fgn.len()]; uavs]
        } else {
            (0..uavs).map(|_| self.fgn.sample(rng)).collect()
        };
        self.cursor = 0;
    }

    pub fn model(&self) -> &TrafficModel {
        &self.model
    }

    /// Arrival offsets for every UAV for the next slot. Past the horizon a
    /// fresh independent block of increments is drawn.
    pub fn next_slot<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> Vec<Vec<f64>> {
        let uavs = self.paths.len();
        if self.cursor >= self.fgn.len() {
            self.refill(uavs, rng);
        }
        let t = self.cursor;
        self.cursor += 1;
        (0..uavs)
            .map(|i| {
                let count = packet_count(&self.model, dt, self.paths[i][t]);
                arrival_offsets(count, dt, rng)
            })
            .collect()
    }
}
