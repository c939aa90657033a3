//! Scenario files: a TOML document declaring nodes, links, flows, and
//! controller/simulation parameters. See the repository README for the
//! full grammar; `scenarios/` ships one canonical file per experiment.

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::netmodel::{Link, NodeId, Topology, DEFAULT_QUEUE_LIMIT};
use crate::packet::FlowId;
use crate::scheduler::DEFAULT_ROUND_SIZE;
use crate::time::SimTime;
use serde::{Deserialize, Serialize};

pub const DEFAULT_MSS: u32 = 1448;

/// Raw TOML shape of a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: Option<String>,
    nodes: Vec<String>,
    #[serde(default)]
    links: Vec<LinkDecl>,
    #[serde(default)]
    flows: Vec<FlowDecl>,
    #[serde(default)]
    controller: ControllerConfig,
    #[serde(default)]
    sim: SimDecl,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDecl {
    src: String,
    dst: String,
    capacity_mbps: f64,
    latency_ms: f64,
    #[serde(default)]
    loss: f64,
    #[serde(default = "default_queue")]
    queue: usize,
    /// Bidirectional by default: one declaration yields both directions.
    #[serde(default = "default_true")]
    bidir: bool,
}

fn default_queue() -> usize {
    DEFAULT_QUEUE_LIMIT
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowDecl {
    kind: String, // "tcp" | "udp"
    src: String,
    dst: String,
    #[serde(default)]
    start_s: f64,
    stop_s: f64,
    /// Target rate for UDP sources, Mbit/s.
    #[serde(default)]
    rate_mbps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimDecl {
    duration_s: f64,
    seed: u64,
    measurement_interval_ms: f64,
    wrr_round_size: u32,
    mss: u32,
}

impl Default for SimDecl {
    fn default() -> Self {
        SimDecl {
            duration_s: 30.0,
            seed: 1,
            measurement_interval_ms: 1000.0,
            wrr_round_size: DEFAULT_ROUND_SIZE,
            mss: DEFAULT_MSS,
        }
    }
}

/// Kind-specific flow parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FlowKind {
    Tcp,
    /// Constant-bit-rate source at `target_rate` bits per second.
    Udp { target_rate: f64 },
}

/// One traffic source declared by the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub kind: FlowKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub start: SimTime,
    pub stop: SimTime,
}

impl FlowSpec {
    pub fn is_tcp(&self) -> bool {
        matches!(self.kind, FlowKind::Tcp)
    }
}

/// Simulation-level knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub duration: SimTime,
    pub seed: u64,
    pub measurement_interval: SimTime,
    pub wrr_round_size: u32,
    pub mss: u32,
}

/// A fully validated experiment input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub topology: Topology,
    pub flows: Vec<FlowSpec>,
    pub controller: ControllerConfig,
    pub sim: SimParams,
}

impl ScenarioConfig {
    /// Parses and validates scenario text. Parse errors carry the line
    /// number; validation errors name the offending item.
    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(1);
            Error::Parse {
                line,
                msg: e.message().to_string(),
            }
        })?;
        ScenarioConfig::from_file(file)
    }

    pub fn load(path: &std::path::Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ScenarioConfig::parse(&text)?;
        if cfg.name.is_empty() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                cfg.name = stem.to_string();
            }
        }
        Ok(cfg)
    }

    fn from_file(file: ScenarioFile) -> Result<ScenarioConfig> {
        let mut topology = Topology::new();
        for n in &file.nodes {
            if !topology.nodes.insert(NodeId::new(n.clone())) {
                return Err(Error::Validation(format!("duplicate node {n}")));
            }
        }
        for decl in &file.links {
            let fwd = Link {
                src: NodeId::new(decl.src.clone()),
                dst: NodeId::new(decl.dst.clone()),
                capacity: decl.capacity_mbps * 1e6,
                latency_ms: decl.latency_ms,
                queue_limit: decl.queue,
                loss_rate: decl.loss,
            };
            if decl.bidir {
                let mut rev = fwd.clone();
                std::mem::swap(&mut rev.src, &mut rev.dst);
                topology.add_link(fwd)?;
                topology.add_link(rev)?;
            } else {
                topology.add_link(fwd)?;
            }
        }

        let mut flows = Vec::new();
        for (i, decl) in file.flows.iter().enumerate() {
            let kind = match decl.kind.as_str() {
                "tcp" => FlowKind::Tcp,
                "udp" => {
                    let rate = decl.rate_mbps.ok_or_else(|| {
                        Error::Validation(format!("flow {i}: udp flows need rate_mbps"))
                    })?;
                    if rate <= 0.0 {
                        return Err(Error::Validation(format!(
                            "flow {i}: rate_mbps must be positive"
                        )));
                    }
                    FlowKind::Udp {
                        target_rate: rate * 1e6,
                    }
                }
                other => {
                    return Err(Error::Validation(format!(
                        "flow {i}: unknown kind '{other}' (expected tcp or udp)"
                    )))
                }
            };
            if decl.stop_s <= decl.start_s {
                return Err(Error::Validation(format!(
                    "flow {i}: stop_s must be after start_s"
                )));
            }
            flows.push(FlowSpec {
                id: FlowId(i as u32),
                kind,
                src: NodeId::new(decl.src.clone()),
                dst: NodeId::new(decl.dst.clone()),
                start: SimTime::from_secs(decl.start_s),
                stop: SimTime::from_secs(decl.stop_s),
            });
        }

        // every flow endpoint pair is a demand the topology must serve
        for f in &flows {
            if !topology.demands.contains(&(f.src.clone(), f.dst.clone())) {
                topology.demands.push((f.src.clone(), f.dst.clone()));
            }
        }
        topology.validate()?;

        file.controller.validate()?;
        if file.sim.duration_s <= 0.0 {
            return Err(Error::Validation("duration must be positive".into()));
        }
        if file.sim.measurement_interval_ms <= 0.0 {
            return Err(Error::Validation(
                "measurement interval must be positive".into(),
            ));
        }
        if file.sim.mss == 0 {
            return Err(Error::Validation("mss must be positive".into()));
        }

        Ok(ScenarioConfig {
            name: file.name.unwrap_or_default(),
            topology,
            flows,
            controller: file.controller,
            sim: SimParams {
                duration: SimTime::from_secs(file.sim.duration_s),
                seed: file.sim.seed,
                measurement_interval: SimTime::from_ms(file.sim.measurement_interval_ms),
                wrr_round_size: file.sim.wrr_round_size,
                mss: file.sim.mss,
            },
        })
    }

    /// Two relay paths `SRC-A-DST` / `SRC-B-DST` with per-path one-way
    /// delays `d1`/`d2` (split across the two hops) and the given
    /// bottleneck capacities. The workhorse topology for imbalance sweeps
    /// and fairness runs.
    pub fn two_path(
        name: &str,
        cap1_mbps: f64,
        cap2_mbps: f64,
        d1_ms: f64,
        d2_ms: f64,
        loss: f64,
    ) -> ScenarioConfig {
        let mut topology = Topology::new();
        let mut add = |src: &str, dst: &str, cap: f64, lat: f64| {
            topology.add_node(src.into());
            topology.add_node(dst.into());
            for (s, d) in [(src, dst), (dst, src)] {
                topology
                    .add_link(Link {
                        src: s.into(),
                        dst: d.into(),
                        capacity: cap * 1e6,
                        latency_ms: lat,
                        queue_limit: DEFAULT_QUEUE_LIMIT,
                        loss_rate: loss,
                    })
                    .expect("builder links are unique");
            }
        };
        add("SRC", "A", cap1_mbps, d1_ms / 2.0);
        add("A", "DST", cap1_mbps, d1_ms / 2.0);
        add("SRC", "B", cap2_mbps, d2_ms / 2.0);
        add("B", "DST", cap2_mbps, d2_ms / 2.0);

        ScenarioConfig {
            name: name.to_string(),
            topology,
            flows: Vec::new(),
            controller: ControllerConfig::default(),
            sim: SimParams {
                duration: SimTime::from_secs(30.0),
                seed: 1,
                measurement_interval: SimTime::from_ms(1000.0),
                wrr_round_size: DEFAULT_ROUND_SIZE,
                mss: DEFAULT_MSS,
            },
        }
    }

    /// Appends a TCP flow between `src` and `dst`, registering the demand.
    pub fn add_tcp_flow(&mut self, src: &str, dst: &str, start_s: f64, stop_s: f64) -> FlowId {
        self.add_flow(FlowKind::Tcp, src, dst, start_s, stop_s)
    }

    pub fn add_udp_flow(
        &mut self,
        src: &str,
        dst: &str,
        start_s: f64,
        stop_s: f64,
        rate_mbps: f64,
    ) -> FlowId {
        self.add_flow(
            FlowKind::Udp {
                target_rate: rate_mbps * 1e6,
            },
            src,
            dst,
            start_s,
            stop_s,
        )
    }

    fn add_flow(&mut self, kind: FlowKind, src: &str, dst: &str, start_s: f64, stop_s: f64) -> FlowId {
        let id = FlowId(self.flows.len() as u32);
        self.flows.push(FlowSpec {
            id,
            kind,
            src: src.into(),
            dst: dst.into(),
            start: SimTime::from_secs(start_s),
            stop: SimTime::from_secs(stop_s),
        });
        let demand = (NodeId::new(src), NodeId::new(dst));
        if !self.topology.demands.contains(&demand) {
            self.topology.demands.push(demand);
        }
        id
    }

    /// TCP demands the controller plans paths for, grouped by endpoint
    /// pair (UDP sources are unmanaged cross traffic).
    pub fn tcp_demands(&self) -> Vec<crate::controller::Demand> {
        let mut demands: Vec<crate::controller::Demand> = Vec::new();
        for f in self.flows.iter().filter(|f| f.is_tcp()) {
            if let Some(d) = demands
                .iter_mut()
                .find(|d| d.src == f.src && d.dst == f.dst)
            {
                d.flows.insert(f.id);
            } else {
                demands.push(crate::controller::Demand {
                    src: f.src.clone(),
                    dst: f.dst.clone(),
                    flows: [f.id].into_iter().collect(),
                });
            }
        }
        demands
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
nodes = ["A", "B"]

[[links]]
src = "A"
dst = "B"
capacity_mbps = 10.0
latency_ms = 25.0

[[flows]]
kind = "tcp"
src = "A"
dst = "B"
stop_s = 30.0
"#;

    #[test]
    fn minimal_two_node_scenario_parses() {
        let cfg = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.topology.nodes.len(), 2);
        assert_eq!(cfg.topology.links.len(), 2, "bidir expands to two links");
        let fwd = cfg.topology.link(&"A".into(), &"B".into()).unwrap();
        assert_eq!(fwd.capacity, 10e6);
        assert_eq!(fwd.latency_ms, 25.0);
        assert_eq!(fwd.queue_limit, DEFAULT_QUEUE_LIMIT);
        assert_eq!(cfg.flows.len(), 1);
        assert_eq!(cfg.sim.mss, 1448);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let bad = "nodes = [\"A\"]\n\n[[links]]\nsrc = \"A\"\ndst = 42\n";
        let err = ScenarioConfig::parse(bad).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert!(line >= 4, "line {line}"),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn dangling_link_is_a_validation_error() {
        let bad = r#"
nodes = ["A"]

[[links]]
src = "A"
dst = "GHOST"
capacity_mbps = 10.0
latency_ms = 5.0
"#;
        let err = ScenarioConfig::parse(bad).unwrap_err();
        assert!(err.to_string().contains("GHOST"), "{err}");
    }

    #[test]
    fn udp_flow_requires_rate() {
        let bad = r#"
nodes = ["A", "B"]

[[links]]
src = "A"
dst = "B"
capacity_mbps = 10.0
latency_ms = 5.0

[[flows]]
kind = "udp"
src = "A"
dst = "B"
stop_s = 10.0
"#;
        assert!(ScenarioConfig::parse(bad).is_err());
    }

    #[test]
    fn unreachable_flow_endpoint_rejected() {
        let bad = r#"
nodes = ["A", "B", "C"]

[[links]]
src = "A"
dst = "B"
capacity_mbps = 10.0
latency_ms = 5.0

[[flows]]
kind = "tcp"
src = "A"
dst = "C"
stop_s = 10.0
"#;
        assert!(ScenarioConfig::parse(bad).is_err());
    }

    #[test]
    fn two_path_builder_round_trips_demand() {
        let mut cfg = ScenarioConfig::two_path("t", 10.0, 10.0, 25.0, 100.0, 0.0);
        cfg.add_tcp_flow("SRC", "DST", 0.0, 15.0);
        assert!(cfg.topology.validate().is_ok());
        let demands = cfg.tcp_demands();
        assert_eq!(demands.len(), 1);
        assert_eq!(demands[0].flows.len(), 1);
    }

    #[test]
    fn controller_overrides_parse() {
        let text = r#"
nodes = ["A", "B"]

[[links]]
src = "A"
dst = "B"
capacity_mbps = 10.0
latency_ms = 25.0

[controller]
reorder_threshold = 0.2
aggregation_cutoff = 0.45
poll_interval_ms = 1000.0
max_paths = 3
"#;
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.controller.max_paths, 3);
        assert_eq!(cfg.controller.poll_interval_ms, 1000.0);
    }
}
