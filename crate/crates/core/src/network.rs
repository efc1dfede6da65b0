//! UAV positions and mobility, distance-gated connectivity, and the
//! per-slot routing tree toward the header UAV.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_max: f64,
    pub y_max: f64,
    pub altitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavNode {
    pub id: usize,
    pub position: [f64; 3],
    /// Horizontal velocity over the last mobility step (m/s).
    pub velocity: [f64; 2],
    pub v_max: f64,
    pub is_header: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    pub region: Region,
    pub nodes: Vec<UavNode>,
}

/// Reflects `v` back into `[0, max]`.
fn reflect(mut v: f64, max: f64) -> f64 {
    if max <= 0.0 {
        return 0.0;
    }
    let period = 2.0 * max;
    v = v.rem_euclid(period);
    if v > max {
        period - v
    } else {
        v
    }
}

impl Fleet {
    pub fn new(region: Region, nodes: Vec<UavNode>) -> Result<Self> {
        if nodes.iter().filter(|n| n.is_header).count() != 1 {
            return Err(Error::invalid("exactly one header UAV is required"));
        }
        if nodes.iter().enumerate().any(|(i, n)| n.id != i) {
            return Err(Error::invalid("UAV ids must be 0..N-1 in order"));
        }
        Ok(Self { region, nodes })
    }

    /// Uniform placement at the common altitude with a random header.
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        region: Region,
        v_max: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("fleet needs at least one UAV"));
        }
        let header = rng.random_range(0..n);
        let nodes = (0..n)
            .map(|id| UavNode {
                id,
                position: [
                    rng.random::<f64>() * region.x_max,
                    rng.random::<f64>() * region.y_max,
                    region.altitude,
                ],
                velocity: [0.0, 0.0],
                v_max,
                is_header: id == header,
            })
            .collect();
        Self::new(region, nodes)
    }

    /// Draws placements until every UAV can reach the header, giving up
    /// after `attempts` draws and keeping the last one.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        region: Region,
        v_max: f64,
        d_max: f64,
        attempts: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut fleet = Self::random(n, region, v_max, rng)?;
        for _ in 1..attempts.max(1) {
            let adj = build_adjacency(&fleet, d_max);
            if adj.reachable_from(fleet.header()).iter().all(|r| *r) {
                break;
            }
            fleet = Self::random(n, region, v_max, rng)?;
        }
        Ok(fleet)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn header(&self) -> usize {
        self.nodes
            .iter()
            .position(|n| n.is_header)
            .expect("fleet invariant: one header")
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.nodes[i].position;
        let b = self.nodes[j].position;
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Closing speed of `j` toward `i` along the line of sight (m/s).
    pub fn radial_speed(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.nodes[i], &self.nodes[j]);
        let dx = b.position[0] - a.position[0];
        let dy = b.position[1] - a.position[1];
        let d = self.distance(i, j);
        if d == 0.0 {
            return 0.0;
        }
        let rel = [b.velocity[0] - a.velocity[0], b.velocity[1] - a.velocity[1]];
        -(rel[0] * dx + rel[1] * dy) / d
    }

    /// Random-direction, random-speed move for `dt` seconds, reflected at
    /// the region boundary.
    pub fn step_mobility<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> Result<()> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!(
                "mobility step must be non-negative, got {dt}"
            )));
        }
        let region = self.region;
        for node in &mut self.nodes {
            let speed = rng.random::<f64>() * node.v_max;
            let heading = rng.random::<f64>() * 2.0 * PI;
            let (vx, vy) = (speed * heading.cos(), speed * heading.sin());
            node.velocity = [vx, vy];
            if dt == 0.0 || speed == 0.0 {
                continue;
            }
            node.position[0] = reflect(node.position[0] + vx * dt, region.x_max);
            node.position[1] = reflect(node.position[1] + vy * dt, region.y_max);
        }
        Ok(())
    }
}

/// Dense symmetric 0/1 adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::shape("adjacency", "rows must be square"));
        }
        Ok(Self {
            n,
            bits: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn connect(&mut self, i: usize, j: usize) {
        self.bits[i * self.n + j] = true;
        self.bits[j * self.n + i] = true;
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n).any(|i| self.get(i, i))
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count() / 2
    }

    /// Nodes reachable from `root` by breadth-first search.
    pub fn reachable_from(&self, root: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([root]);
        seen[root] = true;
        while let Some(i) = queue.pop_front() {
            for j in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// Relabels nodes: new node `perm[i]` is old node `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.bits[perm[i] * self.n + perm[j]] = true;
                }
            }
        }
        out
    }
}

pub fn build_adjacency(fleet: &Fleet, d_max: f64) -> Adjacency {
    let n = fleet.len();
    let mut adj = Adjacency::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if fleet.distance(i, j) <= d_max {
                adj.connect(i, j);
            }
        }
    }
    adj
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingWeights {
    pub hop: f64,
    pub loss: f64,
}

impl Default for RoutingWeights {
    fn default() -> Self {
        Self {
            hop: 1.0,
            loss: 1.0,
        }
    }
}

impl RoutingWeights {
    /// Cost of one hop of length `d`: hop count plus a spreading-loss proxy.
    pub fn edge_cost(&self, d: f64, d_max: f64) -> f64 {
        let r = d / d_max;
        self.hop + self.loss * r * r
    }
}

/// Shortest-path costs to the header (infinite when unreachable).
pub fn path_costs(
    adjacency: &Adjacency,
    distances: &[Vec<f64>],
    header: usize,
    d_max: f64,
    weights: RoutingWeights,
) -> Vec<f64> {
    let n = adjacency.len();
    let mut cost = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    cost[header] = 0.0;
    // Dense Dijkstra; N is tens of UAVs.
    for _ in 0..n {
        let mut best = None;
        for i in 0..n {
            if !done[i] && cost[i].is_finite() && best.is_none_or(|b: usize| cost[i] < cost[b]) {
                best = Some(i);
            }
        }
        let Some(u) = best else { break };
        done[u] = true;
        for v in adjacency.neighbors(u) {
            let c = cost[u] + weights.edge_cost(distances[u][v], d_max);
            if c < cost[v] {
                cost[v] = c;
            }
        }
    }
    cost
}

/// Next hop of every UAV toward the header; ties go to the smaller id.
pub fn route(
    adjacency: &Adjacency,
    distances: &[Vec<f64>],
    header: usize,
    d_max: f64,
    weights: RoutingWeights,
) -> Vec<Option<usize>> {
    let cost = path_costs(adjacency, distances, header, d_max, weights);
    (0..adjacency.len())
        .map(|i| {
            if i == header || !cost[i].is_finite() {
                return None;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in adjacency.neighbors(i) {
                if !(cost[j] < cost[i]) {
                    continue;
                }
                let c = cost[j] + weights.edge_cost(distances[i][j], d_max);
                if best.is_none_or(|(_, b)| c < b) {
                    best = Some((j, c));
                }
            }
            best.map(|(j, _)| j)
        })
        .collect()
}

/// One routed link of a snapshot, used for the optional topology dump.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinkRecord {
    pub slot: u64,
    pub from: usize,
    pub to: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologySnapshot {
    pub slot: u64,
    pub header: usize,
    pub positions: Vec<[f64; 3]>,
    pub adjacency: Adjacency,
    pub next_hop: Vec<Option<usize>>,
    /// Distance to the next hop (m) for routed UAVs.
    pub link_distance: Vec<Option<f64>>,
    /// Predecessors of each UAV in the routing tree, ascending ids.
    pub in_links: Vec<Vec<usize>>,
    /// Closing speed along each routed link (m/s).
    pub radial_speed: Vec<f64>,
}

impl TopologySnapshot {
    pub fn build(slot: u64, fleet: &Fleet, d_max: f64, weights: RoutingWeights) -> Self {
        let n = fleet.len();
        let adjacency = build_adjacency(fleet, d_max);
        let distances: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| fleet.distance(i, j)).collect())
            .collect();
        let header = fleet.header();
        let next_hop = route(&adjacency, &distances, header, d_max, weights);
        Self::from_routes(slot, fleet, adjacency, next_hop)
    }

    /// Snapshot with an externally supplied routing (tests, scripted runs).
    pub fn from_routes(
        slot: u64,
        fleet: &Fleet,
        adjacency: Adjacency,
        next_hop: Vec<Option<usize>>,
    ) -> Self {
        let n = fleet.len();
        let mut in_links = vec![Vec::new(); n];
        let mut link_distance = vec![None; n];
        let mut radial_speed = vec![0.0; n];
        for (i, hop) in next_hop.iter().enumerate() {
            if let Some(j) = *hop {
                in_links[j].push(i);
                link_distance[i] = Some(fleet.distance(i, j));
                radial_speed[i] = fleet.radial_speed(i, j);
            }
        }
        Self {
            slot,
            header: fleet.header(),
            positions: fleet.nodes.iter().map(|n| n.position).collect(),
            adjacency,
            next_hop,
            link_distance,
            in_links,
            radial_speed,
        }
    }

    pub fn len(&self) -> usize {
        self.next_hop.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next_hop.is_empty()
    }

    /// Hop count to the header; `None` when the header is unreachable.
    pub fn depths(&self) -> Vec<Option<usize>> {
        let n = self.len();
        let mut depth = vec![None; n];
        depth[self.header] = Some(0);
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            let mut hops = 0;
            let resolved = loop {
                if let Some(d) = depth[cur] {
                    break Some(d);
                }
                match self.next_hop[cur] {
                    Some(j) if hops < n => {
                        path.push(cur);
                        cur = j;
                        hops += 1;
                    }
                    _ => break None,
                }
            };
            if let Some(base) = resolved {
                for (k, node) in path.iter().rev().enumerate() {
                    depth[*node] = Some(base + k + 1);
                }
            }
        }
        depth
    }

    /// Every UAV ordered so that a node comes after all its predecessors:
    /// unreachable nodes first, then deepest to shallowest, ids ascending.
    pub fn leaves_first(&self) -> Vec<usize> {
        let depth = self.depths();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| match depth[i] {
            None => (0, usize::MAX, i),
            Some(d) => (1, usize::MAX - d, i),
        });
        order
    }

    /// Parent/child adjacency of the routing tree.
    pub fn tree_adjacency(&self) -> Adjacency {
        let mut adj = Adjacency::empty(self.len());
        for (i, hop) in self.next_hop.iter().enumerate() {
            if let Some(j) = *hop {
                adj.connect(i, j);
            }
        }
        adj
    }

    pub fn link_records(&self) -> Vec<LinkRecord> {
        self.next_hop
            .iter()
            .enumerate()
            .filter_map(|(i, hop)| {
                hop.map(|j| LinkRecord {
                    slot: self.slot,
                    from: i,
                    to: j,
                    distance: self.link_distance[i].expect("routed link has a distance"),
                })
            })
            .collect()
    }
}
