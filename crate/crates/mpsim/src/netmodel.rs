//! Ground-truth network representation: nodes, directed links with
//! capacity/latency, and the per-port byte counters the controller samples.

use crate::error::{Error, Result};
use crate::packet::FlowId;
use crate::time::SimTime;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Opaque node label, e.g. `"BEJ"` or `"TOK"`. Unique within a topology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

/// Directed link. Bidirectional declarations in scenario files expand to
/// two `Link` records so forward and reverse paths can differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Bits per second.
    pub capacity: f64,
    /// One-way propagation delay, milliseconds.
    pub latency_ms: f64,
    /// Droptail queue limit, packets.
    pub queue_limit: usize,
    /// Independent per-packet loss probability.
    pub loss_rate: f64,
}

pub const DEFAULT_QUEUE_LIMIT: usize = 100;

impl Link {
    pub fn validate(&self) -> Result<()> {
        if self.capacity <= 0.0 {
            return Err(Error::Validation(format!(
                "link {}->{}: capacity must be > 0",
                self.src, self.dst
            )));
        }
        if self.latency_ms < 0.0 {
            return Err(Error::Validation(format!(
                "link {}->{}: latency must be >= 0",
                self.src, self.dst
            )));
        }
        if self.queue_limit < 1 {
            return Err(Error::Validation(format!(
                "link {}->{}: queue limit must be >= 1",
                self.src, self.dst
            )));
        }
        if !(0.0..=1.0).contains(&self.loss_rate) {
            return Err(Error::Validation(format!(
                "link {}->{}: loss rate must be in [0, 1]",
                self.src, self.dst
            )));
        }
        Ok(())
    }

    /// Serialization delay for `wire_bytes` at this link's rate.
    pub fn tx_time(&self, wire_bytes: u32) -> SimTime {
        SimTime::from_secs(wire_bytes as f64 * 8.0 / self.capacity)
    }

    pub fn propagation(&self) -> SimTime {
        SimTime::from_ms(self.latency_ms)
    }
}

/// Per-port transmit counters over fixed windows. The active window
/// accumulates; the most recently completed window is what the controller
/// reads ("utilization from the last period of observation").
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PortStats {
    window_len: SimTime,
    window_start: SimTime,
    bytes_current: u64,
    per_flow_current: BTreeMap<FlowId, u64>,
    completed: Option<CompletedWindow>,
    /// Lifetime byte total, used to check that window rollover loses nothing.
    pub total_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletedWindow {
    pub start: SimTime,
    pub end: SimTime,
    pub bytes: u64,
    pub per_flow: BTreeMap<FlowId, u64>,
}

impl CompletedWindow {
    pub fn len(&self) -> SimTime {
        self.end.saturating_sub(self.start)
    }

    /// Bytes in this window not attributable to `ours`.
    pub fn foreign_bytes(&self, ours: &BTreeSet<FlowId>) -> u64 {
        let own: u64 = self
            .per_flow
            .iter()
            .filter(|(f, _)| ours.contains(f))
            .map(|(_, b)| *b)
            .sum();
        self.bytes - own
    }
}

impl PortStats {
    pub fn new(window_len: SimTime) -> Self {
        debug_assert!(window_len > SimTime::ZERO, "window must have positive length");
        PortStats {
            window_len,
            window_start: SimTime::ZERO,
            bytes_current: 0,
            per_flow_current: BTreeMap::new(),
            completed: None,
            total_bytes: 0,
        }
    }

    pub fn window_end(&self) -> SimTime {
        self.window_start + self.window_len
    }

    pub fn bytes_in_current_window(&self) -> u64 {
        self.bytes_current
    }

    pub fn completed_window(&self) -> Option<&CompletedWindow> {
        self.completed.as_ref()
    }

    /// Accumulates a transmission, rolling the window first if `now` has
    /// passed its end. Rolling steps one window at a time so idle windows
    /// complete as zero-byte windows and no bytes are lost.
    pub fn record_transmission(&mut self, pkt_size: u32, now: SimTime, flow: FlowId) {
        debug_assert!(now >= self.window_start, "time went backwards");
        self.roll_to(now);
        self.bytes_current += pkt_size as u64;
        *self.per_flow_current.entry(flow).or_insert(0) += pkt_size as u64;
        self.total_bytes += pkt_size as u64;
    }

    /// Completes every window that ends at or before `now`.
    pub fn roll_to(&mut self, now: SimTime) {
        while now >= self.window_end() {
            let end = self.window_end();
            self.completed = Some(CompletedWindow {
                start: self.window_start,
                end,
                bytes: self.bytes_current,
                per_flow: std::mem::take(&mut self.per_flow_current),
            });
            self.bytes_current = 0;
            self.window_start = end;
        }
    }
}

/// Residual capacity of a link given its most recent completed stats
/// window: `max(0, capacity - 8*bytes/window)`. A link with no completed
/// window yet reports full capacity.
pub fn available_capacity(link: &Link, stats: &PortStats) -> f64 {
    match stats.completed_window() {
        Some(w) => residual_from_bytes(link.capacity, w.bytes, w.len()),
        None => link.capacity,
    }
}

/// `max(0, capacity - 8*bytes/window_len)`, clamped at zero.
pub fn residual_from_bytes(capacity: f64, bytes: u64, window_len: SimTime) -> f64 {
    debug_assert!(window_len > SimTime::ZERO, "window must have positive length");
    let utilization = bytes as f64 * 8.0 / window_len.as_secs();
    (capacity - utilization).max(0.0)
}

/// Directed graph of nodes and links, plus the traffic demands declared by
/// the scenario. Immutable after load; live counters are kept separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: BTreeSet<NodeId>,
    /// Keyed by (src, dst); at most one link per ordered pair.
    #[serde(with = "link_map_serde")]
    pub links: BTreeMap<(NodeId, NodeId), Link>,
    /// (source, sink) per traffic demand.
    pub demands: Vec<(NodeId, NodeId)>,
}

/// (De)serializes the link map as a plain sequence; the (src, dst) key is
/// recoverable from each link record.
mod link_map_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(NodeId, NodeId), Link>,
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(map.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<BTreeMap<(NodeId, NodeId), Link>, D::Error> {
        let links = Vec::<Link>::deserialize(de)?;
        Ok(links
            .into_iter()
            .map(|l| ((l.src.clone(), l.dst.clone()), l))
            .collect())
    }
}

impl Topology {
    pub fn new() -> Self {
        Topology {
            nodes: BTreeSet::new(),
            links: BTreeMap::new(),
            demands: Vec::new(),
        }
    }

    pub fn add_node(&mut self, id: NodeId) {
        self.nodes.insert(id);
    }

    pub fn add_link(&mut self, link: Link) -> Result<()> {
        link.validate()?;
        let key = (link.src.clone(), link.dst.clone());
        if self.links.contains_key(&key) {
            return Err(Error::Validation(format!(
                "duplicate link {}->{}",
                key.0, key.1
            )));
        }
        self.links.insert(key, link);
        Ok(())
    }

    pub fn link(&self, src: &NodeId, dst: &NodeId) -> Option<&Link> {
        self.links.get(&(src.clone(), dst.clone()))
    }

    pub fn out_links<'a>(&'a self, from: &'a NodeId) -> impl Iterator<Item = &'a Link> + 'a {
        self.links.values().filter(move |l| &l.src == from)
    }

    /// Checks node references, link invariants, and that every declared
    /// demand has at least one path.
    pub fn validate(&self) -> Result<()> {
        for link in self.links.values() {
            link.validate()?;
            for end in [&link.src, &link.dst] {
                if !self.nodes.contains(end) {
                    return Err(Error::Validation(format!(
                        "link {}->{} references undeclared node {}",
                        link.src, link.dst, end
                    )));
                }
            }
        }
        for (src, dst) in &self.demands {
            for end in [src, dst] {
                if !self.nodes.contains(end) {
                    return Err(Error::Validation(format!(
                        "demand {}->{} references undeclared node {}",
                        src, dst, end
                    )));
                }
            }
            if !self.is_reachable(src, dst) {
                return Err(Error::Validation(format!(
                    "no path from {} to {} for declared demand",
                    src, dst
                )));
            }
        }
        Ok(())
    }

    pub fn is_reachable(&self, src: &NodeId, dst: &NodeId) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([src.clone()]);
        seen.insert(src.clone());
        while let Some(n) = queue.pop_front() {
            if &n == dst {
                return true;
            }
            for l in self.out_links(&n) {
                if seen.insert(l.dst.clone()) {
                    queue.push_back(l.dst.clone());
                }
            }
        }
        false
    }

    /// Copy of this topology with per-link capacities replaced (used for
    /// residual-capacity path recomputation). Links absent from `capacities`
    /// keep their nominal value.
    pub fn with_capacities(&self, capacities: &BTreeMap<(NodeId, NodeId), f64>) -> Topology {
        let mut t = self.clone();
        for (key, link) in t.links.iter_mut() {
            if let Some(c) = capacities.get(key) {
                link.capacity = *c;
            }
        }
        t
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self::new()
    }
}

/// Parses a scenario file and returns its validated topology.
pub fn load_topology(spec: &str) -> Result<Topology> {
    let scenario = crate::scenario::ScenarioConfig::parse(spec)?;
    Ok(scenario.topology)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mbps(m: f64) -> f64 {
        m * 1e6
    }

    fn link(src: &str, dst: &str, cap_mbps: f64, latency_ms: f64) -> Link {
        Link {
            src: src.into(),
            dst: dst.into(),
            capacity: mbps(cap_mbps),
            latency_ms,
            queue_limit: DEFAULT_QUEUE_LIMIT,
            loss_rate: 0.0,
        }
    }

    #[test]
    fn available_capacity_idle_link() {
        let l = link("A", "B", 10.0, 25.0);
        let mut stats = PortStats::new(SimTime::from_ms(2000.0));
        stats.roll_to(SimTime::from_ms(2000.0));
        assert_eq!(available_capacity(&l, &stats), mbps(10.0));
    }

    #[test]
    fn available_capacity_partial_use() {
        // 2.5 Mbit observed over a 1 s window leaves 7.5 Mbit/s
        let l = link("A", "B", 10.0, 25.0);
        let mut stats = PortStats::new(SimTime::from_secs(1.0));
        stats.record_transmission(312_500, SimTime::ZERO, FlowId(0)); // 2.5 Mbit
        stats.roll_to(SimTime::from_secs(1.0));
        let avail = available_capacity(&l, &stats);
        assert!((avail - mbps(7.5)).abs() < 1e-6, "got {avail}");
    }

    #[test]
    fn available_capacity_clamps_at_zero() {
        let l = link("A", "B", 10.0, 25.0);
        let mut stats = PortStats::new(SimTime::from_secs(1.0));
        // 16 Mbit in one second on a 10 Mbit/s link (queue drain burst)
        stats.record_transmission(2_000_000, SimTime::ZERO, FlowId(0));
        stats.roll_to(SimTime::from_secs(1.0));
        assert_eq!(available_capacity(&l, &stats), 0.0);
    }

    #[test]
    fn record_accumulates_within_window() {
        let mut stats = PortStats::new(SimTime::from_ms(2000.0));
        stats.record_transmission(1500, SimTime::from_ms(10.0), FlowId(0));
        stats.record_transmission(500, SimTime::from_ms(20.0), FlowId(1));
        assert_eq!(stats.bytes_in_current_window(), 2000);
        assert!(stats.completed_window().is_none());
    }

    #[test]
    fn record_rolls_window_on_late_packet() {
        let mut stats = PortStats::new(SimTime::from_ms(2000.0));
        stats.record_transmission(1500, SimTime::from_ms(10.0), FlowId(0));
        stats.record_transmission(100, SimTime::from_ms(2500.0), FlowId(0));
        assert_eq!(stats.bytes_in_current_window(), 100);
        let done = stats.completed_window().unwrap();
        assert_eq!(done.bytes, 1500);
        assert_eq!(done.start, SimTime::ZERO);
        assert_eq!(done.end, SimTime::from_ms(2000.0));
    }

    #[test]
    fn rollover_preserves_totals() {
        let mut stats = PortStats::new(SimTime::from_ms(100.0));
        let mut recorded = 0u64;
        let mut completed_sum = 0u64;
        for i in 0..50u64 {
            let t = SimTime::from_micros(i * 37_000); // crosses several windows
            let before = stats.completed_window().map(|w| (w.start, w.bytes));
            stats.record_transmission(1000 + i as u32, t, FlowId(0));
            recorded += 1000 + i;
            let after = stats.completed_window().map(|w| (w.start, w.bytes));
            if before != after {
                if let Some((_, b)) = after {
                    completed_sum += b;
                }
            }
        }
        assert_eq!(stats.total_bytes, recorded);
        // every byte is either in a completed window we saw or still current
        assert!(completed_sum <= recorded);
        assert!(stats.bytes_in_current_window() + completed_sum <= recorded);
    }

    #[test]
    fn foreign_bytes_excludes_own_flows() {
        let mut stats = PortStats::new(SimTime::from_secs(1.0));
        stats.record_transmission(1000, SimTime::ZERO, FlowId(0));
        stats.record_transmission(500, SimTime::ZERO, FlowId(1));
        stats.roll_to(SimTime::from_secs(1.0));
        let w = stats.completed_window().unwrap();
        let ours: BTreeSet<FlowId> = [FlowId(0)].into_iter().collect();
        assert_eq!(w.foreign_bytes(&ours), 500);
    }

    #[test]
    fn duplicate_link_rejected() {
        let mut t = Topology::new();
        t.add_node("A".into());
        t.add_node("B".into());
        t.add_link(link("A", "B", 10.0, 5.0)).unwrap();
        assert!(t.add_link(link("A", "B", 20.0, 5.0)).is_err());
    }

    #[test]
    fn dangling_link_rejected() {
        let mut t = Topology::new();
        t.add_node("A".into());
        t.add_link(link("A", "B", 10.0, 5.0)).unwrap();
        let err = t.validate().unwrap_err();
        assert!(err.to_string().contains("undeclared node B"), "{err}");
    }

    #[test]
    fn unreachable_demand_rejected() {
        let mut t = Topology::new();
        t.add_node("A".into());
        t.add_node("B".into());
        t.add_node("C".into());
        t.add_link(link("A", "B", 10.0, 5.0)).unwrap();
        t.demands.push(("A".into(), "C".into()));
        assert!(t.validate().is_err());
    }

    #[test]
    fn topology_serde_round_trip() {
        let mut t = Topology::new();
        t.add_node("A".into());
        t.add_node("B".into());
        t.add_link(link("A", "B", 10.0, 25.0)).unwrap();
        t.demands.push(("A".into(), "B".into()));
        let json = serde_json::to_string(&t).unwrap();
        let back: Topology = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
    }
}
