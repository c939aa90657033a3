//! Endpoint-transparent multipath forwarding in a deterministic
//! discrete-event network simulator.
//!
//! A centralized controller computes max-flow path sets between demand
//! endpoints, gates aggregation on the delay imbalance between candidate
//! paths, and installs capacity-proportional weighted-round-robin
//! forwarding. The receiving edge restores packet order in a per-flow
//! resequencing buffer so endpoints see a single well-behaved path.
//! Bundled scenarios reproduce throughput-aggregation, imbalance-sweep,
//! fairness, and congestion-reaction experiments at desk scale.

pub mod controller;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod netmodel;
pub mod packet;
pub mod resequencer;
pub mod scenario;
pub mod scheduler;
pub mod simcore;
pub mod time;

pub use controller::{
    build_plan, max_flow_paths, mdi, CandidatePath, Controller, ControllerConfig, MultipathPlan,
    PlanDecision, PlanReason,
};
pub use error::{Error, Result};
pub use metrics::{jain_index, MetricsRecord};
pub use netmodel::{available_capacity, load_topology, Link, NodeId, PortStats, Topology};
pub use packet::{AckInfo, FlowId, Packet};
pub use resequencer::{compute_threshold, FlowResequencerState, ResequenceAction};
pub use scenario::{FlowKind, FlowSpec, ScenarioConfig, SimParams};
pub use scheduler::WrrState;
pub use simcore::{run_scenario, FlowSummary, RunOptions, RunResult};
pub use time::SimTime;
