//! Global event-list simulation of the FIFO relay network, used as an
//! independent reference for the slot engine.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use glove::traffic::{Routes, Transport};
use glove::SPEED_OF_LIGHT;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
struct Pkt {
    id: u64,
    origin: usize,
    hops: u32,
    latency: f64,
    slot: u32,
    offset: f64,
}

#[derive(Debug, PartialEq)]
enum Kind {
    Done(usize),
    Arrive(usize, u64),
}

struct Event {
    at: f64,
    kind: Kind,
    pkt: Option<Pkt>,
}

impl Event {
    fn rank(&self) -> (u8, u64) {
        match self.kind {
            // Departures at an instant precede arrivals at that instant.
            Kind::Done(node) => (0, node as u64),
            Kind::Arrive(_, id) => (1, id),
        }
    }
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Event {
    // Reversed: BinaryHeap pops the earliest.
    fn cmp(&self, o: &Self) -> Ordering {
        o.at.total_cmp(&self.at)
            .then_with(|| o.rank().cmp(&self.rank()))
    }
}

#[derive(Default)]
struct Node {
    queue: VecDeque<Pkt>,
    busy: bool,
    /// Head could not finish inside the slot; nothing more is served.
    stalled: bool,
    last_done: f64,
}

#[derive(Default, Debug, PartialEq)]
pub struct Outcome {
    pub deliveries: BTreeMap<u64, (usize, u32, f64)>,
    pub drops: BTreeMap<u64, usize>,
    pub lost_per_slot: Vec<u64>,
    pub queued_per_slot: Vec<u64>,
}

pub struct Scenario {
    pub header: usize,
    pub next_hop: Vec<Option<usize>>,
    pub distance: Vec<f64>,
    pub capacity: usize,
    pub bits: f64,
    pub dt: f64,
    pub rates: Vec<Vec<f64>>,
    pub arrivals: Vec<Vec<Vec<f64>>>,
}

pub fn oracle(sc: &Scenario) -> Outcome {
    let n = sc.next_hop.len();
    let mut nodes: Vec<Node> = (0..n).map(|_| Node::default()).collect();
    let mut flying: Vec<(usize, Pkt)> = Vec::new();
    let mut out = Outcome::default();
    let mut next_id = 0u64;
    for (s, (rates, arrivals)) in sc.rates.iter().zip(&sc.arrivals).enumerate() {
        let s = s as u32;
        let service: Vec<f64> = (0..n)
            .map(|i| match sc.next_hop[i] {
                Some(_) if rates[i] > 0.0 => sc.bits / rates[i],
                _ => f64::INFINITY,
            })
            .collect();
        let mut heap = BinaryHeap::new();
        for (j, p) in flying.drain(..) {
            heap.push(Event {
                at: p.offset,
                kind: Kind::Arrive(j, p.id),
                pkt: Some(p),
            });
        }
        for (i, offs) in arrivals.iter().enumerate() {
            for &off in offs {
                let p = Pkt {
                    id: next_id,
                    origin: i,
                    hops: 0,
                    latency: 0.0,
                    slot: s,
                    offset: off,
                };
                next_id += 1;
                if i == sc.header {
                    out.deliveries.insert(p.id, (i, 0, 0.0));
                } else {
                    heap.push(Event {
                        at: off,
                        kind: Kind::Arrive(i, p.id),
                        pkt: Some(p),
                    });
                }
            }
        }
        let mut lost = 0u64;
        for (i, node) in nodes.iter_mut().enumerate() {
            node.busy = false;
            node.stalled = false;
            node.last_done = 0.0;
            if !node.queue.is_empty() {
                let done = 0.0 + service[i];
                if done <= sc.dt {
                    node.busy = true;
                    node.last_done = done;
                    heap.push(Event {
                        at: done,
                        kind: Kind::Done(i),
                        pkt: None,
                    });
                } else {
                    node.stalled = true;
                }
            }
        }
        while let Some(ev) = heap.pop() {
            match ev.kind {
                Kind::Arrive(i, _) => {
                    let p = ev.pkt.unwrap();
                    if i == sc.header {
                        out.deliveries.insert(p.id, (p.origin, p.hops, p.latency));
                        continue;
                    }
                    let node = &mut nodes[i];
                    if node.queue.len() >= sc.capacity {
                        out.drops.insert(p.id, i);
                        lost += 1;
                        continue;
                    }
                    node.queue.push_back(p);
                    if !node.busy && !node.stalled {
                        let start = if ev.at > node.last_done {
                            ev.at
                        } else {
                            node.last_done
                        };
                        let done = start + service[i];
                        if done <= sc.dt {
                            node.busy = true;
                            node.last_done = done;
                            heap.push(Event {
                                at: done,
                                kind: Kind::Done(i),
                                pkt: None,
                            });
                        } else {
                            node.stalled = true;
                        }
                    }
                }
                Kind::Done(i) => {
                    let node = &mut nodes[i];
                    let mut p = node.queue.pop_front().unwrap();
                    let j = sc.next_hop[i].unwrap();
                    let prop = sc.distance[i] / SPEED_OF_LIGHT;
                    p.latency += (s - p.slot) as f64 * sc.dt + (ev.at - p.offset) + prop;
                    p.hops += 1;
                    let arrival = ev.at + prop;
                    if arrival < sc.dt {
                        p.slot = s;
                        p.offset = arrival;
                        heap.push(Event {
                            at: arrival,
                            kind: Kind::Arrive(j, p.id),
                            pkt: Some(p),
                        });
                    } else {
                        p.slot = s + 1;
                        p.offset = arrival - sc.dt;
                        flying.push((j, p));
                    }
                    node.busy = false;
                    if !node.queue.is_empty() {
                        let done = node.last_done + service[i];
                        if done <= sc.dt {
                            node.busy = true;
                            node.last_done = done;
                            heap.push(Event {
                                at: done,
                                kind: Kind::Done(i),
                                pkt: None,
                            });
                        } else {
                            node.stalled = true;
                        }
                    }
                }
            }
        }
        out.lost_per_slot.push(lost);
        let held: usize = nodes.iter().map(|n| n.queue.len()).sum();
        out.queued_per_slot.push((held + flying.len()) as u64);
    }
    out
}

/// Engine outcome and whether every slot conserved packets.
pub fn engine(sc: &Scenario) -> (Outcome, bool) {
    let n = sc.next_hop.len();
    let routes = Routes {
        header: sc.header,
        next_hop: sc.next_hop.clone(),
        distance: sc.distance.clone(),
    };
    let mut t = Transport::new(n, sc.capacity, sc.bits).with_trace(true);
    let mut out = Outcome::default();
    let mut conserved = true;
    for (rates, arrivals) in sc.rates.iter().zip(&sc.arrivals) {
        let r = t.run_slot(&routes, rates, arrivals, sc.dt).unwrap();
        conserved &= r.is_conserved();
        for d in &r.deliveries {
            out.deliveries
                .insert(d.id, (d.origin as usize, d.hops, d.latency));
        }
        for d in &r.drops {
            out.drops.insert(d.id, d.node);
        }
        out.lost_per_slot.push(r.lost);
        out.queued_per_slot.push(r.queued_end);
    }
    (out, conserved)
}

/// Random routing tree of depth at most 4 hops.
fn random_tree<R: Rng>(n: usize, rng: &mut R) -> (usize, Vec<Option<usize>>) {
    let header = rng.random_range(0..n);
    let mut depth = vec![0usize; n];
    let mut next = vec![None; n];
    let mut placed = vec![header];
    let mut order: Vec<usize> = (0..n).filter(|&i| i != header).collect();
    for k in (1..order.len()).rev() {
        order.swap(k, rng.random_range(0..=k));
    }
    for i in order {
        let candidates: Vec<usize> = placed.iter().copied().filter(|&p| depth[p] < 4).collect();
        let parent = candidates[rng.random_range(0..candidates.len())];
        next[i] = Some(parent);
        depth[i] = depth[parent] + 1;
        placed.push(i);
    }
    // Occasionally cut a node off the tree.
    if n > 2 && rng.random_bool(0.1) {
        let i = (0..n).find(|&i| i != header).unwrap();
        next[i] = None;
    }
    (header, next)
}

pub fn random_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let n = rng.random_range(2..=6);
    let (header, next_hop) = random_tree(n, rng);
    let slots = rng.random_range(1..=3);
    let dt = 1e-5;
    let bits = 1000.0;
    // Grid-aligned values make exact ties between events likely.
    let grid = rng.random_bool(0.3);
    let distance: Vec<f64> = (0..n)
        .map(|_| {
            if grid {
                0.0
            } else {
                rng.random_range(1.0..1500.0)
            }
        })
        .collect();
    let budget = rng.random_range(1..=300usize);
    let mut remaining = budget;
    let mut arrivals = Vec::new();
    let mut rates = Vec::new();
    for _ in 0..slots {
        let mut slot = Vec::new();
        for _ in 0..n {
            let count = if remaining == 0 {
                0
            } else {
                rng.random_range(0..=remaining.min(60))
            };
            remaining -= count;
            let mut offs: Vec<f64> = (0..count)
                .map(|_| {
                    if grid {
                        rng.random_range(0..64) as f64 * (dt / 64.0)
                    } else {
                        rng.random_range(0.0..dt)
                    }
                })
                .collect();
            offs.sort_by(f64::total_cmp);
            slot.push(offs);
        }
        arrivals.push(slot);
        rates.push(
            (0..n)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        0.0
                    } else if grid {
                        // Service time dt / 2^k.
                        bits * 2f64.powi(rng.random_range(3..8)) / dt
                    } else {
                        bits * rng.random_range(2.0..120.0) / dt
                    }
                })
                .collect(),
        );
    }
    Scenario {
        header,
        next_hop,
        distance,
        capacity: rng.random_range(1..=40),
        bits,
        dt,
        rates,
        arrivals,
    }
}

#[derive(Debug, Default)]
pub struct Comparison {
    pub cases: usize,
    pub mismatches: Vec<usize>,
    pub unconserved: usize,
    pub delivered: usize,
    pub dropped: usize,
    pub carried: u64,
}

/// Runs `cases` random scenarios through both simulators.
pub fn compare(cases: usize, seed: u64) -> Comparison {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Comparison {
        cases,
        ..Default::default()
    };
    for case in 0..cases {
        let sc = random_scenario(&mut rng);
        let want = oracle(&sc);
        let (got, conserved) = engine(&sc);
        if got != want {
            c.mismatches.push(case);
        }
        if !conserved {
            c.unconserved += 1;
        }
        c.delivered += want.deliveries.len();
        c.dropped += want.drops.len();
        c.carried += want.queued_per_slot.iter().sum::<u64>();
    }
    c
}
