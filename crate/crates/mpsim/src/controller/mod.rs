//! Multipath plan computation: max-flow path selection between demand
//! endpoints, delay-imbalance gating, capacity-proportional weights, and
//! periodic recomputation from sampled port statistics.

mod maxflow;

use crate::error::{Error, Result};
use crate::netmodel::{NodeId, PortStats, Topology};
use crate::packet::FlowId;
use crate::time::SimTime;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Maximum delay imbalance over a set of path delays:
/// `d_max / (d_max + d_min) - 0.5`. Zero for balanced paths, approaching
/// 0.5 as the imbalance grows.
pub fn mdi(delays_ms: &[f64]) -> Result<f64> {
    if delays_ms.is_empty() {
        return Err(Error::InvalidArgument(
            "mdi requires at least one delay".into(),
        ));
    }
    if delays_ms.iter().any(|d| *d <= 0.0 || !d.is_finite()) {
        return Err(Error::InvalidArgument(
            "mdi requires strictly positive delays".into(),
        ));
    }
    let d_min = delays_ms.iter().cloned().fold(f64::INFINITY, f64::min);
    let d_max = delays_ms.iter().cloned().fold(0.0f64, f64::max);
    Ok(d_max / (d_max + d_min) - 0.5)
}

/// One selected forwarding path with its rate allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePath {
    /// Node sequence from source to sink (a simple path).
    pub hops: Vec<NodeId>,
    /// Bits per second allocated to this path by the flow computation.
    pub allocated_rate: f64,
    /// Sum of one-way link latencies along the path, milliseconds.
    pub path_delay_ms: f64,
}

impl CandidatePath {
    /// Ordered (src, dst) pairs along the path.
    pub fn segments(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.hops.iter().zip(self.hops.iter().skip(1))
    }
}

/// Why a plan came out the way it did; recorded with every decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlanReason {
    Initial,
    Periodic,
    /// A path's residual capacity collapsed below 1% of nominal.
    PathDropped { hops: Vec<NodeId> },
    /// A previously dropped path passed the re-admission check.
    PathRestored { hops: Vec<NodeId> },
    /// No usable path remained; the previous plan was kept.
    Degraded,
}

/// The controller's output for one demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathPlan {
    pub paths: Vec<CandidatePath>,
    /// Capacity-proportional weights, summing to 1.
    pub weights: Vec<f64>,
    /// Delay imbalance over the selected paths' delays.
    pub mdi: f64,
    pub reorder_buffer_enabled: bool,
    /// Set when aggregation was abandoned because the candidate set's
    /// imbalance exceeded the cutoff; carries the offending value.
    pub fallback_mdi: Option<f64>,
    /// Set when recomputation found no usable path and the previous plan
    /// was kept as-is.
    pub degraded: bool,
}

impl MultipathPlan {
    pub fn single_path_fallback(&self) -> bool {
        self.fallback_mdi.is_some()
    }

    pub fn total_rate(&self) -> f64 {
        self.paths.iter().map(|p| p.allocated_rate).sum()
    }

    pub fn delays_ms(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.path_delay_ms).collect()
    }
}

/// Tunables for plan computation and monitoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Imbalance above which the receiving edge resequences the flow.
    pub reorder_threshold: f64,
    /// Imbalance above which aggregation is abandoned for the fastest path.
    pub aggregation_cutoff: f64,
    pub poll_interval_ms: f64,
    pub max_paths: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            reorder_threshold: 0.15,
            aggregation_cutoff: 0.40,
            poll_interval_ms: 2000.0,
            max_paths: 2,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.reorder_threshold
            && self.reorder_threshold <= self.aggregation_cutoff
            && self.aggregation_cutoff <= 0.5;
        if !ok {
            return Err(Error::Validation(
                "controller thresholds must satisfy 0 <= reorder_threshold <= aggregation_cutoff <= 0.5"
                    .into(),
            ));
        }
        if self.poll_interval_ms <= 0.0 {
            return Err(Error::Validation("poll interval must be positive".into()));
        }
        if self.max_paths == 0 {
            return Err(Error::Validation("max_paths must be >= 1".into()));
        }
        Ok(())
    }

    pub fn poll_interval(&self) -> SimTime {
        SimTime::from_ms(self.poll_interval_ms)
    }
}

/// Computes up to `max_paths` forwarding paths from `src` to `dst` whose
/// combined allocation equals the maximum flow restricted to that many
/// paths. Paths come back ordered by latency, shortest first.
pub fn max_flow_paths(
    topology: &Topology,
    src: &NodeId,
    dst: &NodeId,
    max_paths: usize,
) -> Result<Vec<CandidatePath>> {
    if src == dst {
        return Err(Error::InvalidArgument(
            "source and sink must differ".into(),
        ));
    }
    let mut graph = maxflow::FlowGraph::from_topology(topology);
    let find = |id: &NodeId| {
        graph
            .nodes
            .binary_search(id)
            .map_err(|_| Error::Validation(format!("node {id} not in topology")))
    };
    let (s, d) = (find(src)?, find(dst)?);
    let paths = graph.max_flow_decomposed(s, d);
    if paths.is_empty() {
        return Err(Error::NoPath {
            src: src.to_string(),
            dst: dst.to_string(),
        });
    }
    Ok(paths
        .into_iter()
        .take(max_paths)
        .map(|p| CandidatePath {
            hops: p.hops,
            allocated_rate: p.rate,
            path_delay_ms: p.delay_ms,
        })
        .collect())
}

/// Builds the forwarding plan for a path set: weights proportional to the
/// allocated rates, reordering enabled above the reorder threshold, and a
/// single-path fallback above the aggregation cutoff.
pub fn build_plan(paths: Vec<CandidatePath>, config: &ControllerConfig) -> Result<MultipathPlan> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("build_plan requires >= 1 path".into()));
    }
    let delays: Vec<f64> = paths.iter().map(|p| p.path_delay_ms).collect();
    let imbalance = mdi(&delays)?;

    if imbalance > config.aggregation_cutoff && paths.len() > 1 {
        // aggregation not worth it; keep only the fastest path
        let best = paths
            .into_iter()
            .min_by(|a, b| {
                a.path_delay_ms
                    .partial_cmp(&b.path_delay_ms)
                    .unwrap()
                    .then_with(|| a.hops.cmp(&b.hops))
            })
            .expect("nonempty");
        return Ok(MultipathPlan {
            mdi: 0.0,
            paths: vec![best],
            weights: vec![1.0],
            reorder_buffer_enabled: false,
            fallback_mdi: Some(imbalance),
            degraded: false,
        });
    }

    let total: f64 = paths.iter().map(|p| p.allocated_rate).sum();
    let weights: Vec<f64> = paths.iter().map(|p| p.allocated_rate / total).collect();
    Ok(MultipathPlan {
        mdi: imbalance,
        reorder_buffer_enabled: imbalance > config.reorder_threshold && paths.len() > 1,
        paths,
        weights,
        fallback_mdi: None,
        degraded: false,
    })
}

/// A (source, sink) pair the controller plans paths for, together with the
/// flows whose traffic belongs to it (their bytes are subtracted from link
/// utilization when estimating residual capacity).
#[derive(Debug, Clone)]
pub struct Demand {
    pub src: NodeId,
    pub dst: NodeId,
    pub flows: BTreeSet<FlowId>,
}

/// One plan decision with its timestamp, kept as an audit trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanDecision {
    pub time_ms: f64,
    pub demand_src: NodeId,
    pub demand_dst: NodeId,
    pub reason: PlanReason,
    pub plan: MultipathPlan,
}

/// Residual capacity below this fraction of a path's nominal rate drops
/// the path from the plan.
const DROP_FRACTION: f64 = 0.01;
/// A dropped path needs this fraction of nominal capacity back...
const READMIT_FRACTION: f64 = 0.10;
/// ...for this many consecutive polls before re-admission.
const READMIT_POLLS: u32 = 2;

#[derive(Debug, Clone, Default)]
struct DemandState {
    plan: Option<MultipathPlan>,
    /// Dropped paths (by hop list) -> consecutive polls above the
    /// re-admission threshold.
    banned: BTreeMap<Vec<NodeId>, u32>,
}

/// Stateful monitoring loop: recomputes plans from sampled port counters,
/// drops starved paths, and re-admits them with hysteresis.
#[derive(Debug)]
pub struct Controller {
    pub config: ControllerConfig,
    demands: Vec<Demand>,
    states: Vec<DemandState>,
    pub decisions: Vec<PlanDecision>,
}

impl Controller {
    pub fn new(config: ControllerConfig, demands: Vec<Demand>) -> Self {
        let states = demands.iter().map(|_| DemandState::default()).collect();
        Controller {
            config,
            demands,
            states,
            decisions: Vec::new(),
        }
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    pub fn plan_for(&self, demand_idx: usize) -> Option<&MultipathPlan> {
        self.states[demand_idx].plan.as_ref()
    }

    /// Computes initial plans from nominal capacities.
    pub fn initial_plans(&mut self, topology: &Topology) -> Result<Vec<(usize, MultipathPlan)>> {
        let mut out = Vec::new();
        for i in 0..self.demands.len() {
            let d = &self.demands[i];
            let paths = max_flow_paths(topology, &d.src, &d.dst, self.config.max_paths)?;
            let plan = build_plan(paths, &self.config)?;
            self.states[i].plan = Some(plan.clone());
            self.record(SimTime::ZERO, i, PlanReason::Initial, plan.clone());
            out.push((i, plan));
        }
        Ok(out)
    }

    /// Periodic recomputation from the last completed stats window of every
    /// port. Returns the demands whose plan changed.
    pub fn recompute_on_poll(
        &mut self,
        topology: &Topology,
        stats: &BTreeMap<(NodeId, NodeId), PortStats>,
        now: SimTime,
    ) -> Vec<(usize, MultipathPlan)> {
        let mut changed = Vec::new();
        for i in 0..self.demands.len() {
            let demand = self.demands[i].clone();
            let residual = self.residual_topology(topology, stats, &demand);

            // hysteresis bookkeeping for paths dropped earlier
            let restored = self.update_ban_counters(i, topology, &residual);

            let candidates =
                max_flow_paths(&residual, &demand.src, &demand.dst, self.config.max_paths);

            let (plan, reason) = self.decide(i, topology, &residual, candidates, restored);
            let state = &mut self.states[i];
            let plan_changed = state.plan.as_ref() != Some(&plan);
            state.plan = Some(plan.clone());
            self.record(now, i, reason, plan.clone());
            if plan_changed {
                changed.push((i, plan));
            }
        }
        changed
    }

    /// Residual topology for a demand: per link, nominal capacity minus
    /// utilization by traffic that is *not* the demand's own (the
    /// controller knows its own flows' counters and must not starve a path
    /// merely because it is carrying the demand it serves).
    fn residual_topology(
        &self,
        topology: &Topology,
        stats: &BTreeMap<(NodeId, NodeId), PortStats>,
        demand: &Demand,
    ) -> Topology {
        let mut caps = BTreeMap::new();
        for (key, link) in &topology.links {
            if let Some(port) = stats.get(key) {
                if let Some(w) = port.completed_window() {
                    let foreign = w.foreign_bytes(&demand.flows);
                    let residual =
                        crate::netmodel::residual_from_bytes(link.capacity, foreign, w.len());
                    caps.insert(key.clone(), residual);
                }
            }
        }
        topology.with_capacities(&caps)
    }

    /// Nominal bottleneck rate over a hop list.
    fn nominal_rate(topology: &Topology, hops: &[NodeId]) -> f64 {
        hops.iter()
            .zip(hops.iter().skip(1))
            .filter_map(|(a, b)| topology.link(a, b))
            .map(|l| l.capacity)
            .fold(f64::INFINITY, f64::min)
    }

    fn update_ban_counters(
        &mut self,
        demand_idx: usize,
        topology: &Topology,
        residual: &Topology,
    ) -> Vec<Vec<NodeId>> {
        let mut restored = Vec::new();
        let state = &mut self.states[demand_idx];
        let mut still_banned = BTreeMap::new();
        for (hops, count) in std::mem::take(&mut state.banned) {
            let nominal = Self::nominal_rate(topology, &hops);
            let avail = Self::nominal_rate(residual, &hops);
            let recovered = avail >= READMIT_FRACTION * nominal;
            let count = if recovered { count + 1 } else { 0 };
            if recovered && count >= READMIT_POLLS {
                restored.push(hops);
            } else {
                still_banned.insert(hops, count);
            }
        }
        state.banned = still_banned;
        restored
    }

    fn decide(
        &mut self,
        demand_idx: usize,
        topology: &Topology,
        residual: &Topology,
        candidates: Result<Vec<CandidatePath>>,
        restored: Vec<Vec<NodeId>>,
    ) -> (MultipathPlan, PlanReason) {
        let state = &mut self.states[demand_idx];
        let mut reason = if let Some(hops) = restored.into_iter().next() {
            PlanReason::PathRestored { hops }
        } else {
            PlanReason::Periodic
        };

        let mut usable = Vec::new();
        if let Ok(paths) = candidates {
            for path in paths {
                if state.banned.contains_key(&path.hops) {
                    continue;
                }
                let nominal = Self::nominal_rate(topology, &path.hops);
                if path.allocated_rate < DROP_FRACTION * nominal {
                    reason = PlanReason::PathDropped {
                        hops: path.hops.clone(),
                    };
                    state.banned.insert(path.hops, 0);
                    continue;
                }
                usable.push(path);
            }
        }

        // A previously planned path that vanished from the candidate set
        // and has (near) zero residual capacity was starved by cross
        // traffic: treat it as dropped so re-admission goes through the
        // hysteresis check.
        if let Some(prev) = &state.plan {
            for p in &prev.paths {
                let in_candidates = usable.iter().any(|c| c.hops == p.hops);
                if in_candidates || state.banned.contains_key(&p.hops) {
                    continue;
                }
                let nominal = Self::nominal_rate(topology, &p.hops);
                if Self::nominal_rate(residual, &p.hops) < DROP_FRACTION * nominal {
                    reason = PlanReason::PathDropped {
                        hops: p.hops.clone(),
                    };
                    state.banned.insert(p.hops.clone(), 0);
                }
            }
        }

        if usable.is_empty() {
            // keep the previous plan, flagged as degraded
            let mut plan = state
                .plan
                .clone()
                .expect("recompute_on_poll runs after initial_plans");
            plan.degraded = true;
            return (plan, PlanReason::Degraded);
        }

        match build_plan(usable, &self.config) {
            Ok(plan) => (plan, reason),
            Err(_) => {
                let mut plan = state.plan.clone().expect("previous plan exists");
                plan.degraded = true;
                (plan, PlanReason::Degraded)
            }
        }
    }

    fn record(&mut self, now: SimTime, demand_idx: usize, reason: PlanReason, plan: MultipathPlan) {
        let d = &self.demands[demand_idx];
        self.decisions.push(PlanDecision {
            time_ms: now.as_ms(),
            demand_src: d.src.clone(),
            demand_dst: d.dst.clone(),
            reason,
            plan,
        });
    }
}

#[cfg(test)]
mod tests;
