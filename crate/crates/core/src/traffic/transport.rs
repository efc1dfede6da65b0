//! Per-slot packet engine.
//!
//! Each UAV serves its buffer FIFO at the constant rate of its routed link.
//! A packet completes at `max(arrival, previous completion) + packet/rate`
//! and leaves only if that lands inside the slot; otherwise it (and all
//! behind it) waits for the next slot, where service restarts at offset 0
//! with the new rate. Propagation delay is added to the packet's latency
//! and to its arrival offset at the next hop, so several hops can be
//! crossed within one slot. Nodes are processed leaves first, which makes
//! every inflow known before a buffer is served.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::network::TopologySnapshot;
use crate::SPEED_OF_LIGHT;

use super::{FifoBuffer, Packet};

/// Routing view consumed by the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Routes {
    pub header: usize,
    pub next_hop: Vec<Option<usize>>,
    /// Distance to the next hop (m); ignored for unrouted UAVs.
    pub distance: Vec<f64>,
}

impl Routes {
    pub fn from_snapshot(snap: &TopologySnapshot) -> Self {
        Self {
            header: snap.header,
            next_hop: snap.next_hop.clone(),
            distance: snap
                .link_distance
                .iter()
                .map(|d| d.unwrap_or(0.0))
                .collect(),
        }
    }

    /// Predecessors before successors (Kahn); errors on a routing cycle.
    fn order(&self) -> Result<Vec<usize>> {
        let n = self.next_hop.len();
        let mut indeg = vec![0usize; n];
        for hop in self.next_hop.iter().flatten() {
            indeg[*hop] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            order.push(i);
            if let Some(j) = self.next_hop[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(j);
                }
            }
        }
        if order.len() != n {
            return Err(Error::invalid("routing contains a cycle"));
        }
        Ok(order)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UavSlotStats {
    pub generated: u64,
    /// Packets that arrived from predecessors this slot.
    pub relayed_in: u64,
    /// Packets originating here that reached the header this slot.
    pub delivered: u64,
    pub lost: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub id: u64,
    pub origin: u32,
    pub hops: u32,
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Drop {
    pub id: u64,
    pub node: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotTrafficReport {
    pub slot: u32,
    pub per_uav: Vec<UavSlotStats>,
    pub generated: u64,
    pub delivered: u64,
    pub lost: u64,
    /// Buffered plus in-flight packets before and after the slot.
    pub queued_start: u64,
    pub queued_end: u64,
    /// Mean header-arrival latency over relayed deliveries (0 if none).
    pub mean_latency: f64,
    pub max_latency: f64,
    /// Latency of every relayed delivery; header-originated packets are
    /// delivered on creation and excluded.
    pub latencies: Vec<f64>,
    /// Per-packet trace, only filled when tracing is enabled.
    pub deliveries: Vec<Delivery>,
    pub drops: Vec<Drop>,
}

impl SlotTrafficReport {
    /// `generated + queued_start == delivered + queued_end + lost`.
    pub fn is_conserved(&self) -> bool {
        self.generated + self.queued_start == self.delivered + self.queued_end + self.lost
    }
}

/// A sorted run of packets with a read cursor.
struct Run {
    packets: Vec<Packet>,
    pos: usize,
}

impl Run {
    fn peek(&self) -> Option<&Packet> {
        self.packets.get(self.pos)
    }

    fn remaining(&self) -> usize {
        self.packets.len() - self.pos
    }
}

fn arrival_order(a: &Packet, b: &Packet) -> Ordering {
    a.arrival_offset
        .total_cmp(&b.arrival_offset)
        .then(a.id.cmp(&b.id))
}

/// Pops the earliest head among `runs` by `(arrival offset, id)`.
fn next_arrival(runs: &mut [Run]) -> Option<Packet> {
    let mut best = usize::MAX;
    let (mut off, mut id) = (f64::INFINITY, u64::MAX);
    for (r, run) in runs.iter().enumerate() {
        let Some(p) = run.peek() else { continue };
        if best == usize::MAX || p.arrival_offset < off || (p.arrival_offset == off && p.id < id) {
            best = r;
            off = p.arrival_offset;
            id = p.id;
        }
    }
    let run = runs.get_mut(best)?;
    run.pos += 1;
    Some(run.packets[run.pos - 1])
}

/// FIFO service of one buffer onto its routed link. A packet's completion
/// time is fixed when it joins the queue, so packets that finish inside
/// the slot are forwarded at once and only their completion times are
/// kept to account for buffer occupancy.
struct Sender<'a> {
    slot: u32,
    dt: f64,
    service: f64,
    prop: f64,
    last_done: f64,
    /// Completion times of packets scheduled this slot; those from
    /// `head` on still occupy the buffer.
    pending: &'a mut Vec<f64>,
    head: usize,
    /// Packets reaching the next hop inside this slot.
    out: &'a mut Vec<Packet>,
    /// Packets still on the air at the slot boundary.
    carry: Option<&'a mut Vec<Packet>>,
}

impl Sender<'_> {
    fn send(&mut self, mut p: Packet, done: f64) {
        let waited = (self.slot - p.arrived_slot) as f64;
        p.latency += waited * self.dt + (done - p.arrival_offset) + self.prop;
        p.hops += 1;
        let arrival = done + self.prop;
        if arrival < self.dt {
            p.arrived_slot = self.slot;
            p.arrival_offset = arrival;
            self.out.push(p);
        } else {
            p.arrived_slot = self.slot + 1;
            p.arrival_offset = arrival - self.dt;
            if let Some(c) = self.carry.as_deref_mut() {
                c.push(p);
            }
        }
    }

    /// Serves packets left over from earlier slots, from offset 0.
    fn start(&mut self, buffer: &mut FifoBuffer) {
        while !buffer.queue.is_empty() {
            let done = self.last_done + self.service;
            if done > self.dt {
                break;
            }
            let p = buffer.queue.pop_front().expect("non-empty");
            self.last_done = done;
            self.pending.push(done);
            self.send(p, done);
        }
    }

    /// Packet arriving now; refused when the buffer is full.
    fn offer(&mut self, buffer: &mut FifoBuffer, p: Packet) -> std::result::Result<(), Packet> {
        let t = p.arrival_offset;
        if self.pending.len() - self.head + buffer.queue.len() >= buffer.capacity {
            // The count above is an upper bound; settle departures first.
            while self.head < self.pending.len() && self.pending[self.head] <= t {
                self.head += 1;
            }
            if self.pending.len() - self.head + buffer.queue.len() >= buffer.capacity {
                buffer.lost += 1;
                return Err(p);
            }
        }
        if buffer.queue.is_empty() {
            let start = if t > self.last_done {
                t
            } else {
                self.last_done
            };
            let done = start + self.service;
            if done <= self.dt {
                self.last_done = done;
                self.pending.push(done);
                self.send(p, done);
                return Ok(());
            }
        }
        buffer.queue.push_back(p);
        Ok(())
    }
}

/// Buffers, in-flight packets and id allocation for one network.
#[derive(Debug, Clone)]
pub struct Transport {
    buffers: Vec<FifoBuffer>,
    /// Packets on the air across a slot boundary, keyed by receiver.
    in_flight: Vec<Vec<Packet>>,
    slot: u32,
    next_id: u64,
    packet_bits: f64,
    trace: bool,
    /// Spare packet vectors, reused across hops and slots.
    pool: Vec<Vec<Packet>>,
    pending: Vec<f64>,
}

impl Transport {
    /// # Panics
    /// If `uavs` exceeds 65536; packet origins are stored in 16 bits.
    pub fn new(uavs: usize, capacity: usize, packet_bits: f64) -> Self {
        assert!(uavs <= 1 << 16, "at most 65536 UAVs");
        Self {
            buffers: (0..uavs).map(|_| FifoBuffer::new(capacity)).collect(),
            in_flight: vec![Vec::new(); uavs],
            slot: 0,
            next_id: 0,
            packet_bits,
            trace: false,
            pool: Vec::new(),
            pending: Vec::new(),
        }
    }

    /// Record per-packet deliveries and drops in each report.
    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }

    pub fn buffers(&self) -> &[FifoBuffer] {
        &self.buffers
    }

    pub fn slot(&self) -> u32 {
        self.slot
    }

    pub fn packet_bits(&self) -> f64 {
        self.packet_bits
    }

    /// Packets held anywhere in the network.
    pub fn queued(&self) -> u64 {
        let buffered: usize = self.buffers.iter().map(FifoBuffer::len).sum();
        let flying: usize = self.in_flight.iter().map(Vec::len).sum();
        (buffered + flying) as u64
    }

    /// Advances one slot. `rates[i]` is the rate of UAV `i`'s routed link
    /// and `arrivals[i]` the ascending offsets of its newly generated
    /// packets.
    pub fn run_slot(
        &mut self,
        routes: &Routes,
        rates: &[f64],
        arrivals: &[Vec<f64>],
        dt: f64,
    ) -> Result<SlotTrafficReport> {
        let n = self.buffers.len();
        if routes.next_hop.len() != n
            || routes.distance.len() != n
            || rates.len() != n
            || arrivals.len() != n
        {
            return Err(Error::shape("run_slot", format!("expected {n} UAVs")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!(
                "slot length must be positive, got {dt}"
            )));
        }
        if let Some(i) = rates.iter().position(|r| !(*r >= 0.0)) {
            return Err(Error::invalid(format!(
                "negative or NaN rate {} on UAV {i}",
                rates[i]
            )));
        }
        let order = routes.order()?;
        let slot = self.slot;

        let mut report = SlotTrafficReport {
            slot,
            per_uav: vec![UavSlotStats::default(); n],
            queued_start: self.queued(),
            ..Default::default()
        };

        // Ids follow UAV order then offset order, independent of the
        // processing order.
        let mut first_id = Vec::with_capacity(n);
        for offs in arrivals {
            first_id.push(self.next_id);
            self.next_id += offs.len() as u64;
        }

        let mut inbox: Vec<Vec<Vec<Packet>>> = vec![Vec::new(); n];
        for (j, flying) in self.in_flight.iter_mut().enumerate() {
            if !flying.is_empty() {
                let mut run = std::mem::take(flying);
                run.sort_by(arrival_order);
                inbox[j].push(run);
            }
        }
        let mut next_in_flight: Vec<Vec<Packet>> = vec![Vec::new(); n];
        let trace = self.trace;
        let packet_bits = self.packet_bits;

        for &i in &order {
            let runs_in = std::mem::take(&mut inbox[i]);
            let relayed: usize = runs_in.iter().map(Vec::len).sum();
            report.per_uav[i].relayed_in = relayed as u64;
            report.per_uav[i].generated = arrivals[i].len() as u64;
            report.generated += arrivals[i].len() as u64;

            if i == routes.header {
                // Header-originated data enters the uplink immediately.
                let own = arrivals[i].len() as u64;
                report.per_uav[i].delivered += own;
                report.delivered += own;
                if trace {
                    report.deliveries.extend((0..own).map(|k| Delivery {
                        id: first_id[i] + k,
                        origin: i as u32,
                        hops: 0,
                        latency: 0.0,
                    }));
                }
                let mut runs: Vec<Run> = runs_in
                    .into_iter()
                    .map(|packets| Run { packets, pos: 0 })
                    .collect();
                let mut take = |p: Packet| {
                    report.per_uav[p.origin as usize].delivered += 1;
                    report.delivered += 1;
                    report.latencies.push(p.latency);
                    if trace {
                        report.deliveries.push(Delivery {
                            id: p.id,
                            origin: p.origin as u32,
                            hops: p.hops as u32,
                            latency: p.latency,
                        });
                    }
                };
                if trace {
                    while let Some(p) = next_arrival(&mut runs) {
                        take(p);
                    }
                } else {
                    for run in &runs {
                        run.packets.iter().copied().for_each(&mut take);
                    }
                }
                self.pool.extend(runs.into_iter().map(|r| r.packets));
                continue;
            }

            let mut local = self.pool.pop().unwrap_or_default();
            local.clear();
            local.extend(arrivals[i].iter().enumerate().map(|(k, &off)| Packet {
                id: first_id[i] + k as u64,
                latency: 0.0,
                arrival_offset: off,
                arrived_slot: slot,
                origin: i as u16,
                hops: 0,
            }));

            let mut runs: Vec<Run> = runs_in
                .into_iter()
                .map(|packets| Run { packets, pos: 0 })
                .collect();
            runs.push(Run {
                packets: local,
                pos: 0,
            });

            let next = routes.next_hop[i];
            let service = match next {
                Some(_) if rates[i] > 0.0 => packet_bits / rates[i],
                _ => f64::INFINITY,
            };
            let prop = next.map_or(0.0, |_| routes.distance[i] / SPEED_OF_LIGHT);
            let mut out = self.pool.pop().unwrap_or_default();
            out.clear();
            let carry = next.map(|j| &mut next_in_flight[j]);
            self.pending.clear();
            let mut sender = Sender {
                slot,
                dt,
                service,
                prop,
                last_done: 0.0,
                pending: &mut self.pending,
                head: 0,
                out: &mut out,
                carry,
            };
            let buffer = &mut self.buffers[i];
            sender.start(buffer);

            if runs.len() == 1 {
                let run = runs.pop().expect("one run");
                for &p in &run.packets {
                    let id = p.id;
                    if sender.offer(buffer, p).is_err() {
                        report.per_uav[i].lost += 1;
                        report.lost += 1;
                        if trace {
                            report.drops.push(Drop { id, node: i });
                        }
                    }
                }
                self.pool.push(run.packets);
            } else {
                while let Some(p) = next_arrival(&mut runs) {
                    let id = p.id;
                    if sender.offer(buffer, p).is_err() {
                        report.per_uav[i].lost += 1;
                        report.lost += 1;
                        if trace {
                            report.drops.push(Drop { id, node: i });
                        }
                    }
                }
                debug_assert!(runs.iter().all(|r| r.remaining() == 0));
                self.pool.extend(runs.into_iter().map(|r| r.packets));
            }

            match next {
                Some(j) if !out.is_empty() => inbox[j].push(out),
                _ => self.pool.push(out),
            }
        }

        self.pool.truncate(2 * n + 2);
        self.in_flight = next_in_flight;
        self.slot += 1;
        report.queued_end = self.queued();
        if !report.latencies.is_empty() {
            report.mean_latency =
                report.latencies.iter().sum::<f64>() / report.latencies.len() as f64;
            report.max_latency = report.latencies.iter().copied().fold(0.0, f64::max);
        }
        Ok(report)
    }
}
