//! The learning environment: observation, allocation, reward, and the
//! fixed per-slot update order.

mod action;

use crate::channel::{ChannelRealization, LinkInput, RadioModel};
use crate::error::{Error, Result};
use crate::harness::ScenarioConfig;
use crate::network::{Adjacency, Fleet, TopologySnapshot};
use crate::nn::Tensor;
use crate::rng::{stream, SimRng, Stream};
use crate::traffic::{buffer_occupancy, Routes, SlotTrafficReport, TrafficSource, Transport};

pub use action::{
    allocate, check_constraints, usage, ActionRatios, Budget, RawHeads, ResourceAction,
    UsageMetrics, Violation, SIMPLEX_TOL,
};

/// Horizon of one block of traffic increments.
const TRAFFIC_HORIZON: usize = 1024;

/// Per-UAV features: expected packets, buffer ratio, K SINR features,
/// next-hop distance, x, y, header flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `N x (K + 6)`, standardized.
    pub features: Tensor<f64>,
    /// Routing-tree (parent/child) adjacency the GNN aggregates over.
    pub graph: Adjacency,
    /// Unscaled expected packets per UAV.
    pub expected_packets: Vec<f64>,
}

impl Observation {
    pub fn uavs(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }
}

/// Number of observation features for `k` sub-bands.
pub fn feature_count(k: usize) -> usize {
    k + 6
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRecord {
    pub r: f64,
    pub usage: f64,
    pub latency: f64,
    pub loss: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub chi3: f64,
}

impl RewardRecord {
    pub fn new(usage: f64, latency: f64, loss: f64, chi: [f64; 3]) -> Self {
        let penalty = chi[0] * usage + chi[1] * latency + chi[2] * loss;
        Self {
            r: -penalty,
            usage,
            latency,
            loss,
            chi1: chi[0],
            chi2: chi[1],
            chi3: chi[2],
        }
    }

    /// `r` plus the recomposed penalty; zero by construction.
    pub fn residual(&self) -> f64 {
        self.r + (self.chi1 * self.usage + self.chi2 * self.latency + self.chi3 * self.loss)
    }
}

/// What one slot produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardRecord,
    pub traffic: SlotTrafficReport,
    pub usage: UsageMetrics,
    pub links: Vec<ChannelRealization>,
    /// Routing-tree link rates used this slot (bit/s), 0 for unrouted UAVs.
    pub rates: Vec<f64>,
}

/// Expected packets to send this slot: own mean arrivals, plus the same
/// quantity of every predecessor, plus the current queue.
pub fn expected_packets(topo: &TopologySnapshot, own: f64, queued: &[usize]) -> Vec<f64> {
    let mut mu: Vec<f64> = queued.iter().map(|q| own + *q as f64).collect();
    for i in topo.leaves_first() {
        if let Some(j) = topo.next_hop[i] {
            mu[j] += mu[i];
        }
    }
    mu
}

pub struct Env {
    cfg: ScenarioConfig,
    budget: Budget,
    radio: RadioModel,
    fleet: Fleet,
    topo: TopologySnapshot,
    transport: Transport,
    traffic: TrafficSource,
    mobility_rng: SimRng,
    traffic_rng: SimRng,
    channel_rng: SimRng,
    /// SINRs realized last slot on each UAV's outgoing link.
    last_sinr: Vec<Vec<f64>>,
    slot: u64,
}

impl std::fmt::Debug for Env {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Env")
            .field("slot", &self.slot)
            .field("uavs", &self.fleet.len())
            .finish()
    }
}

impl Env {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.seed;
        let mut placement = stream(seed, Stream::Placement);
        let fleet = Fleet::random_connected(
            cfg.n,
            cfg.region(),
            cfg.v_max,
            cfg.d_max,
            cfg.placement_attempts,
            &mut placement,
        )?;
        let mut traffic_rng = stream(seed, Stream::Traffic);
        let traffic = TrafficSource::new(cfg.traffic(), cfg.n, TRAFFIC_HORIZON, &mut traffic_rng)?;
        let topo = TopologySnapshot::build(0, &fleet, cfg.d_max, cfg.routing());
        Ok(Self {
            budget: Budget {
                p_max: cfg.p_max(),
                s_max: cfg.s_max,
            },
            radio: cfg.radio()?,
            transport: Transport::new(cfg.n, cfg.buffer, cfg.packet_bits()),
            traffic,
            topo,
            fleet,
            mobility_rng: stream(seed, Stream::Mobility),
            traffic_rng,
            channel_rng: stream(seed, Stream::Channel),
            last_sinr: vec![vec![0.0; cfg.k]; cfg.n],
            slot: 0,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn topology(&self) -> &TopologySnapshot {
        &self.topo
    }

    pub fn fleet(&self) -> &Fleet {
        &self.fleet
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    pub fn radio(&self) -> &RadioModel {
        &self.radio
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn observe(&self) -> Observation {
        let cfg = &self.cfg;
        let n = self.topo.len();
        let k = cfg.k;
        let queued: Vec<usize> = self.transport.buffers().iter().map(|b| b.len()).collect();
        let mu = expected_packets(&self.topo, cfg.mean_packets(), &queued);
        let mu_scale = (cfg.mean_packets() * n as f64).max(1.0);
        let mut f = Tensor::zeros(n, feature_count(k));
        for i in 0..n {
            let routed = self.topo.next_hop[i].is_some();
            f.set(i, 0, mu[i] / mu_scale);
            f.set(i, 1, buffer_occupancy(&self.transport.buffers()[i]));
            for band in 0..k {
                let g = if routed { self.last_sinr[i][band] } else { 0.0 };
                f.set(i, 2 + band, (1.0 + g).log10() / 10.0);
            }
            f.set(
                i,
                k + 2,
                self.topo.link_distance[i].unwrap_or(0.0) / cfg.d_max,
            );
            let p = self.topo.positions[i];
            f.set(i, k + 3, p[0] / cfg.x_max);
            f.set(i, k + 4, p[1] / cfg.y_max);
            f.set(i, k + 5, if i == self.topo.header { 1.0 } else { 0.0 });
        }
        Observation {
            features: f,
            graph: self.topo.tree_adjacency(),
            expected_packets: mu,
        }
    }

    /// Allocation for the current topology from actor heads.
    pub fn apply_action(&self, heads: &RawHeads) -> Result<ResourceAction> {
        heads.validate(self.cfg.k)?;
        allocate(&heads.ratios(), &self.topo, self.budget)
    }

    pub fn allocate(&self, ratios: &ActionRatios) -> Result<ResourceAction> {
        allocate(ratios, &self.topo, self.budget)
    }

    /// Channel realizations and rates for every routed link.
    fn realize(&mut self, action: &ResourceAction) -> Result<(Vec<ChannelRealization>, Vec<f64>)> {
        let n = self.topo.len();
        let mut links = Vec::new();
        let mut rates = vec![0.0; n];
        for i in 0..n {
            let Some(j) = self.topo.next_hop[i] else {
                continue;
            };
            let link = LinkInput {
                from: i,
                to: j,
                distance: self.topo.link_distance[i].expect("routed link has a distance"),
                radial_speed: self.topo.radial_speed[i],
                power: &action.power[i],
                tx_subarrays: action.tx_subarrays[i],
                rx_subarrays: action.rx_for(j, i),
            };
            let real = self.radio.realize(&link, &mut self.channel_rng)?;
            rates[i] = real.rate;
            links.push(real);
        }
        Ok((links, rates))
    }

    /// Advances one slot under `action`, which must have been allocated for
    /// the current topology.
    pub fn step(&mut self, action: &ResourceAction) -> Result<StepOutcome> {
        let violations = check_constraints(action, &self.topo, self.budget);
        if let Some(v) = violations.first() {
            return Err(Error::InfeasibleAction {
                uav: v.uav,
                reason: v.what.clone(),
            });
        }
        let usage = usage(action, self.budget);
        let (links, rates) = self.realize(action)?;
        let arrivals = self.traffic.next_slot(self.cfg.dt, &mut self.traffic_rng);
        let routes = Routes::from_snapshot(&self.topo);
        let traffic = self
            .transport
            .run_slot(&routes, &rates, &arrivals, self.cfg.dt)?;
        let reward = RewardRecord::new(
            usage.mean,
            traffic.mean_latency,
            traffic.lost as f64,
            [self.cfg.chi1, self.cfg.chi2, self.cfg.chi3],
        );

        let mut sinr = vec![vec![0.0; self.cfg.k]; self.topo.len()];
        for link in &links {
            sinr[link.from].clone_from(&link.sinr);
        }
        self.last_sinr = sinr;

        self.fleet
            .step_mobility(self.cfg.dt, &mut self.mobility_rng)?;
        self.slot += 1;
        self.topo =
            TopologySnapshot::build(self.slot, &self.fleet, self.cfg.d_max, self.cfg.routing());
        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            traffic,
            usage,
            links,
            rates,
        })
    }
}

/// One on-policy experience sample.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Observation,
    pub action: ActionRatios,
    pub reward: f64,
    pub next_state: Observation,
}

impl Transition {
    /// Scalars stored per UAV: its features, its action ratios, the reward.
    pub fn scalars_per_uav(&self) -> usize {
        self.state.feature_count() + self.action.power.first().map_or(0, Vec::len) + 2 + 1
    }

    /// Per UAV, `[features, power ratios, Tx, Rx, reward]` as little-endian
    /// `f32`.
    pub fn encode(&self) -> Vec<u8> {
        let n = self.state.uavs();
        let mut out = Vec::with_capacity(n * self.scalars_per_uav() * 4);
        for i in 0..n {
            let vals = self.state.features.row(i).iter().copied();
            let act = self.action.power[i]
                .iter()
                .copied()
                .chain(self.action.subarray[i]);
            for v in vals.chain(act).chain(std::iter::once(self.reward)) {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }
}
