//! From actor heads to integer sub-array counts and per-band watts.

use crate::error::{Error, Result};
use crate::network::TopologySnapshot;

/// Tolerance on simplex sums coming out of the actor.
pub const SIMPLEX_TOL: f64 = 1e-6;

/// Four softmax heads per UAV, as emitted by the actor.
#[derive(Debug, Clone, PartialEq)]
pub struct RawHeads {
    /// (used, unused) power shares.
    pub power_used: Vec<[f64; 2]>,
    /// Distribution of the used power over the sub-bands.
    pub power_dist: Vec<Vec<f64>>,
    /// (used, unused) sub-array shares.
    pub sub_used: Vec<[f64; 2]>,
    /// (Tx, Rx) split of the used sub-arrays.
    pub sub_split: Vec<[f64; 2]>,
}

/// Absolute resource ratios: `power[i][k]` of the power budget and
/// `subarray[i] = (Tx, Rx)` of the sub-arrays left after pre-assignment.
/// Each group sums to at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionRatios {
    pub power: Vec<Vec<f64>>,
    pub subarray: Vec<[f64; 2]>,
}

fn check_simplex(uav: usize, name: &str, v: &[f64]) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if v.iter().any(|x| !(x.is_finite() && *x >= -SIMPLEX_TOL)) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InfeasibleAction {
            uav,
            reason: format!("{name} head is not a simplex vector: {v:?}"),
        });
    }
    Ok(())
}

fn check_subsimplex(uav: usize, name: &str, v: &[f64]) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || sum > 1.0 + SIMPLEX_TOL {
        return Err(Error::InfeasibleAction {
            uav,
            reason: format!("{name} ratios must be non-negative and sum to at most 1: {v:?}"),
        });
    }
    Ok(())
}

impl RawHeads {
    pub fn len(&self) -> usize {
        self.power_used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power_used.is_empty()
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let n = self.len();
        if self.power_dist.len() != n || self.sub_used.len() != n || self.sub_split.len() != n {
            return Err(Error::shape("RawHeads", "head lengths differ"));
        }
        for i in 0..n {
            if self.power_dist[i].len() != k {
                return Err(Error::shape(
                    "RawHeads",
                    format!(
                        "UAV {i} has {} power bands, expected {k}",
                        self.power_dist[i].len()
                    ),
                ));
            }
            check_simplex(i, "power used/unused", &self.power_used[i])?;
            check_simplex(i, "power distribution", &self.power_dist[i])?;
            check_simplex(i, "sub-array used/unused", &self.sub_used[i])?;
            check_simplex(i, "sub-array Tx/Rx", &self.sub_split[i])?;
        }
        Ok(())
    }

    /// `used * distribution` for both resources.
    pub fn ratios(&self) -> ActionRatios {
        ActionRatios {
            power: self
                .power_used
                .iter()
                .zip(&self.power_dist)
                .map(|(u, d)| d.iter().map(|x| (u[0] * x).max(0.0)).collect())
                .collect(),
            subarray: self
                .sub_used
                .iter()
                .zip(&self.sub_split)
                .map(|(u, s)| [(u[0] * s[0]).max(0.0), (u[0] * s[1]).max(0.0)])
                .collect(),
        }
    }
}

impl ActionRatios {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.subarray.len() != self.power.len() {
            return Err(Error::shape(
                "ActionRatios",
                "power and sub-array lengths differ",
            ));
        }
        for (i, p) in self.power.iter().enumerate() {
            if p.len() != k {
                return Err(Error::shape(
                    "ActionRatios",
                    format!("UAV {i}: {} bands, expected {k}", p.len()),
                ));
            }
            check_subsimplex(i, "power", p)?;
            check_subsimplex(i, "sub-array", &self.subarray[i])?;
        }
        Ok(())
    }

    /// Row-major `N x (K + 2)` values, the action part of a transition.
    pub fn flatten(&self) -> Vec<f64> {
        self.power
            .iter()
            .zip(&self.subarray)
            .flat_map(|(p, s)| p.iter().copied().chain(s.iter().copied()))
            .collect()
    }
}

/// Concrete allocation for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceAction {
    /// Transmit power per sub-band on the routed link (W).
    pub power: Vec<Vec<f64>>,
    /// Tx sub-arrays on the routed link.
    pub tx_subarrays: Vec<usize>,
    /// Rx sub-arrays per in-link as `(from, count)`, ascending `from`.
    pub rx_subarrays: Vec<Vec<(usize, usize)>>,
    /// Routing the allocation was made for.
    pub next_hop: Vec<Option<usize>>,
}

impl ResourceAction {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn rx_total(&self, i: usize) -> usize {
        self.rx_subarrays[i].iter().map(|(_, c)| c).sum()
    }

    /// Rx sub-arrays UAV `to` dedicates to the link from `from`.
    pub fn rx_for(&self, to: usize, from: usize) -> usize {
        self.rx_subarrays[to]
            .iter()
            .find(|(f, _)| *f == from)
            .map_or(0, |(_, c)| *c)
    }
}

/// Physical budgets an allocation is made against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub p_max: f64,
    pub s_max: usize,
}

/// Turns ratios into watts and integer sub-array counts.
///
/// Every link first gets one Tx sub-array at its sender and one Rx at its
/// receiver; the rest of the budget is split by `floor(rest * ratio)`. Rx
/// sub-arrays are spread evenly over in-links, the remainder going to the
/// lowest ids. A UAV without a next hop (the header included) transmits
/// nothing and one without in-links receives nothing; in both cases the
/// idle side's share moves to the other side.
pub fn allocate(
    ratios: &ActionRatios,
    topo: &TopologySnapshot,
    budget: Budget,
) -> Result<ResourceAction> {
    let n = topo.len();
    if ratios.len() != n {
        return Err(Error::shape(
            "allocate",
            format!("{} UAVs in action, {n} in topology", ratios.len()),
        ));
    }
    let k = ratios.power.first().map_or(0, Vec::len);
    ratios.validate(k)?;

    let mut action = ResourceAction {
        power: vec![vec![0.0; k]; n],
        tx_subarrays: vec![0; n],
        rx_subarrays: vec![Vec::new(); n],
        next_hop: topo.next_hop.clone(),
    };
    for i in 0..n {
        let has_tx = topo.next_hop[i].is_some() && i != topo.header;
        let in_links = &topo.in_links[i];
        let pre = usize::from(has_tx) + in_links.len();
        if pre > budget.s_max {
            return Err(Error::InfeasibleAction {
                uav: i,
                reason: format!("{pre} links need more than {} sub-arrays", budget.s_max),
            });
        }

        if has_tx {
            let p = &ratios.power[i];
            let sum: f64 = p.iter().sum();
            // Softmax rounding can leave the sum a few ulps above one.
            let norm = if sum > 1.0 { sum } else { 1.0 };
            for (w, r) in action.power[i].iter_mut().zip(p) {
                *w = budget.p_max * (r / norm);
            }
        }

        let [mut tx, mut rx] = ratios.subarray[i];
        if !has_tx {
            rx += tx;
            tx = 0.0;
        }
        if in_links.is_empty() {
            tx += rx;
            rx = 0.0;
        }
        let rest = budget.s_max - pre;
        let extra_tx = ((rest as f64 * tx).floor() as usize).min(rest);
        let extra_rx = ((rest as f64 * rx).floor() as usize).min(rest - extra_tx);
        if has_tx {
            action.tx_subarrays[i] = 1 + extra_tx;
        }
        if !in_links.is_empty() {
            let m = in_links.len();
            let (each, remainder) = (extra_rx / m, extra_rx % m);
            action.rx_subarrays[i] = in_links
                .iter()
                .enumerate()
                .map(|(pos, &from)| (from, 1 + each + usize::from(pos < remainder)))
                .collect();
        }
    }
    Ok(action)
}

/// Resource usage ratios per UAV and their network mean.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageMetrics {
    pub u_p: Vec<f64>,
    pub u_s_tx: Vec<f64>,
    pub u_s_rx: Vec<f64>,
    pub u_s: Vec<f64>,
    pub u: Vec<f64>,
    pub mean: f64,
}

pub fn usage(action: &ResourceAction, budget: Budget) -> UsageMetrics {
    let n = action.len();
    let s = budget.s_max as f64;
    let mut m = UsageMetrics {
        u_p: Vec::with_capacity(n),
        u_s_tx: Vec::with_capacity(n),
        u_s_rx: Vec::with_capacity(n),
        u_s: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        mean: 0.0,
    };
    for i in 0..n {
        let u_p = action.power[i].iter().sum::<f64>() / budget.p_max;
        let tx = action.tx_subarrays[i] as f64 / s;
        let rx = action.rx_total(i) as f64 / s;
        let u_s = tx + rx;
        m.u_p.push(u_p);
        m.u_s_tx.push(tx);
        m.u_s_rx.push(rx);
        m.u_s.push(u_s);
        m.u.push((u_p + u_s) / 2.0);
    }
    if n > 0 {
        m.mean = m.u.iter().sum::<f64>() / n as f64;
    }
    m
}

/// One broken budget or link requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub uav: usize,
    pub what: String,
}

/// Audits an allocation against the power and sub-array budgets and the
/// link requirements, from the allocation's own numbers alone.
pub fn check_constraints(
    action: &ResourceAction,
    topo: &TopologySnapshot,
    budget: Budget,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |uav: usize, what: String| out.push(Violation { uav, what });
    let n = topo.len();
    if action.len() != n || action.next_hop != topo.next_hop {
        flag(0, "allocation was made for a different topology".into());
        return out;
    }
    for i in 0..n {
        let p = &action.power[i];
        if p.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            flag(i, format!("negative or non-finite power {p:?}"));
        }
        let total: f64 = p.iter().sum();
        if total > budget.p_max * (1.0 + 1e-12) {
            flag(i, format!("power {total} W exceeds {} W", budget.p_max));
        }
        let tx = action.tx_subarrays[i];
        let rx: usize = action.rx_subarrays[i].iter().map(|(_, c)| c).sum();
        if tx + rx > budget.s_max {
            flag(
                i,
                format!("{tx} Tx + {rx} Rx sub-arrays exceed {}", budget.s_max),
            );
        }
        match topo.next_hop[i] {
            Some(j) if i != topo.header => {
                if tx == 0 {
                    flag(i, format!("link {i}->{j} has no Tx sub-array"));
                }
                let at_j = action.rx_subarrays[j]
                    .iter()
                    .find(|(f, _)| *f == i)
                    .map(|(_, c)| *c);
                if at_j.unwrap_or(0) == 0 {
                    flag(j, format!("link {i}->{j} has no Rx sub-array"));
                }
            }
            _ => {
                if tx != 0 || total != 0.0 {
                    flag(i, "transmit resources without a routed link".into());
                }
            }
        }
        for (from, _) in &action.rx_subarrays[i] {
            if topo.next_hop[*from] != Some(i) {
                flag(
                    i,
                    format!("Rx sub-arrays for {from}, which does not route here"),
                );
            }
        }
    }
    out
}
