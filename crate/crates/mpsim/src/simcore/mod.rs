//! Deterministic discrete-event simulator: link queues with serialization
//! and propagation delay, seeded random loss, TCP-like senders behind the
//! multipath scheduler, UDP cross traffic, the controller's monitoring
//! loop, and per-flow resequencers at the receiving edge.

mod link;
mod tcp;
mod udp;

pub use link::{LinkState, OfferOutcome, Transit};
pub use tcp::{TcpReceiver, TcpSender};
pub use udp::UdpSource;

use crate::controller::{Controller, MultipathPlan, PlanDecision};
use crate::error::{Error, Result};
use crate::metrics::MetricsRecord;
use crate::netmodel::{NodeId, PortStats, Topology};
use crate::packet::{FlowId, Packet};
use crate::resequencer::{
    capacity_for_threshold, compute_threshold, FlowResequencerState, DEFAULT_LOSS_RECOVERY_FACTOR,
};
use crate::scenario::{FlowKind, FlowSpec, ScenarioConfig};
use crate::scheduler::WrrState;
use crate::time::SimTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

/// Per-run switches that do not belong to the scenario itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Pin every demand to a single plan path (by index into the initial
    /// plan) and disable recomputation; used for single-path baselines.
    pub pin_path: Option<usize>,
    /// Record packet-level delivery/drop events.
    pub trace: bool,
    /// Record resequencer actions into the trace.
    pub trace_reseq: bool,
}

/// One packet-level trace record (deliveries, drops, resequencer actions).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_ms: f64,
    pub event: String,
    pub flow: FlowId,
    pub seq: u32,
    pub path: Option<usize>,
    pub detail: String,
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{:.3},{},{},{},{},{}",
            self.time_ms,
            self.event,
            self.flow.0,
            self.seq,
            self.path.map(|p| p.to_string()).unwrap_or_default(),
            self.detail
        )
    }
}

/// End-of-run accounting for one flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowSummary {
    pub flow: FlowId,
    pub kind: String,
    pub src: NodeId,
    pub dst: NodeId,
    /// In-order payload bytes delivered to the application.
    pub delivered_bytes: u64,
    /// Delivered bytes over the flow's active window, bits per second.
    pub goodput_bps: f64,
    pub retransmits: u64,
    pub timeouts: u64,
    pub drops: u64,
}

/// Conservation counters for one link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkTotals {
    pub src: NodeId,
    pub dst: NodeId,
    pub offered: u64,
    pub completed: u64,
    pub queue_drops: u64,
    pub loss_drops: u64,
    pub left_in_queue: u64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: String,
    pub seed: u64,
    pub metrics: Vec<MetricsRecord>,
    pub flows: Vec<FlowSummary>,
    pub decisions: Vec<PlanDecision>,
    pub links: Vec<LinkTotals>,
    pub trace: Vec<TraceRecord>,
}

impl RunResult {
    pub fn flow_summary(&self, id: FlowId) -> &FlowSummary {
        &self.flows[id.0 as usize]
    }

    /// Aggregate TCP goodput across all flows, bits per second.
    pub fn aggregate_tcp_goodput(&self) -> f64 {
        self.flows
            .iter()
            .filter(|f| f.kind == "tcp")
            .map(|f| f.goodput_bps)
            .sum()
    }
}

/// Runs a scenario to completion. Identical `(scenario, seed, options)`
/// inputs produce identical results.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunResult> {
    Simulation::new(cfg.clone(), opts.clone())?.run()
}

#[derive(Debug)]
enum EventKind {
    FlowStart(usize),
    UdpSend(usize),
    LinkDeparture(usize),
    Arrival(Transit),
    RtoTimer { flow: usize, id: u64 },
    ControllerPoll,
    MeasureTick,
    Finalize,
}

struct HeapEvent {
    time: SimTime,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for HeapEvent {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for HeapEvent {}
impl Ord for HeapEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want earliest first,
        // insertion order breaking ties
        other
            .time
            .cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for HeapEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct TcpFlowRt {
    spec: FlowSpec,
    sender: TcpSender,
    receiver: TcpReceiver,
    reseq: Option<FlowResequencerState>,
    wrr: WrrState,
    data_routes: Vec<Arc<[usize]>>,
    ack_route: Arc<[usize]>,
    interval_path_bytes: Vec<u64>,
    interval_drops: u64,
    total_drops: u64,
}

struct UdpFlowRt {
    spec: FlowSpec,
    source: UdpSource,
    route: Arc<[usize]>,
    delivered_bytes: u64,
    interval_bytes: u64,
    interval_drops: u64,
    total_drops: u64,
}

enum FlowRt {
    Tcp(Box<TcpFlowRt>),
    Udp(Box<UdpFlowRt>),
}

struct Simulation {
    cfg: ScenarioConfig,
    opts: RunOptions,
    heap: BinaryHeap<HeapEvent>,
    event_seq: u64,
    rng: ChaCha8Rng,
    links: Vec<LinkState>,
    link_index: BTreeMap<(NodeId, NodeId), usize>,
    flows: Vec<FlowRt>,
    controller: Controller,
    duration: SimTime,
    last_tick: SimTime,
    metrics: Vec<MetricsRecord>,
    trace: Vec<TraceRecord>,
}

impl Simulation {
    fn new(cfg: ScenarioConfig, opts: RunOptions) -> Result<Self> {
        cfg.topology.validate()?;
        cfg.controller.validate()?;

        let stats_window = cfg.controller.poll_interval();
        let mut links = Vec::new();
        let mut link_index = BTreeMap::new();
        for (key, link) in &cfg.topology.links {
            link_index.insert(key.clone(), links.len());
            links.push(LinkState::new(link.clone(), stats_window));
        }

        let controller = Controller::new(cfg.controller.clone(), cfg.tcp_demands());
        let rng = ChaCha8Rng::seed_from_u64(cfg.sim.seed);
        let duration = cfg.sim.duration;

        let mut sim = Simulation {
            opts,
            heap: BinaryHeap::new(),
            event_seq: 0,
            rng,
            links,
            link_index,
            flows: Vec::new(),
            controller,
            duration,
            last_tick: SimTime::ZERO,
            metrics: Vec::new(),
            trace: Vec::new(),
            cfg,
        };
        sim.build_flows()?;
        Ok(sim)
    }

    fn build_flows(&mut self) -> Result<()> {
        let demands = self.controller.demands().to_vec();
        for spec in self.cfg.flows.clone() {
            let rt = match &spec.kind {
                FlowKind::Tcp => {
                    debug_assert!(
                        demands.iter().any(|d| d.src == spec.src && d.dst == spec.dst),
                        "every tcp flow belongs to a demand"
                    );
                    let ack_hops =
                        shortest_path_hops(&self.cfg.topology, &spec.dst, &spec.src)?;
                    let ack_route = self.route_links(&ack_hops)?;
                    FlowRt::Tcp(Box::new(TcpFlowRt {
                        sender: TcpSender::new(spec.id, self.cfg.sim.mss, spec.stop),
                        receiver: TcpReceiver::new(spec.id),
                        reseq: None,
                        wrr: WrrState::new(vec![1.0], self.cfg.sim.wrr_round_size)?,
                        data_routes: Vec::new(),
                        ack_route,
                        interval_path_bytes: Vec::new(),
                        interval_drops: 0,
                        total_drops: 0,
                        spec,
                    }))
                }
                FlowKind::Udp { target_rate } => {
                    let hops = shortest_path_hops(&self.cfg.topology, &spec.src, &spec.dst)?;
                    let route = self.route_links(&hops)?;
                    FlowRt::Udp(Box::new(UdpFlowRt {
                        source: UdpSource::new(spec.id, *target_rate, self.cfg.sim.mss, spec.stop),
                        route,
                        delivered_bytes: 0,
                        interval_bytes: 0,
                        interval_drops: 0,
                        total_drops: 0,
                        spec,
                    }))
                }
            };
            self.flows.push(rt);
        }
        Ok(())
    }

    fn run(mut self) -> Result<RunResult> {
        // initial plans from nominal capacities
        let initial = self.controller.initial_plans(&self.cfg.topology)?;
        for (demand_idx, mut plan) in initial {
            if let Some(pin) = self.opts.pin_path {
                plan = pin_plan(&plan, pin)?;
            }
            self.install_plan(demand_idx, &plan, SimTime::ZERO)?;
        }

        let starts: Vec<SimTime> = self.cfg.flows.iter().map(|f| f.start).collect();
        for (i, start) in starts.into_iter().enumerate() {
            self.schedule(start, EventKind::FlowStart(i));
        }
        if self.opts.pin_path.is_none() {
            let poll = self.cfg.controller.poll_interval();
            if poll < self.duration {
                self.schedule(poll, EventKind::ControllerPoll);
            }
        }
        let interval = self.cfg.sim.measurement_interval;
        if interval < self.duration {
            self.schedule(interval, EventKind::MeasureTick);
        }
        self.schedule(self.duration, EventKind::Finalize);

        while let Some(ev) = self.heap.pop() {
            if ev.time > self.duration {
                break;
            }
            self.handle(ev.time, ev.kind)?;
        }

        Ok(self.finish())
    }

    fn handle(&mut self, now: SimTime, kind: EventKind) -> Result<()> {
        match kind {
            EventKind::FlowStart(idx) => self.flow_start(idx, now),
            EventKind::UdpSend(idx) => self.udp_send(idx, now),
            EventKind::LinkDeparture(l) => self.link_departure(l, now),
            EventKind::Arrival(transit) => self.arrival(transit, now),
            EventKind::RtoTimer { flow, id } => self.rto_timer(flow, id, now),
            EventKind::ControllerPoll => self.controller_poll(now),
            EventKind::MeasureTick => {
                self.emit_rows(now);
                let next = now + self.cfg.sim.measurement_interval;
                if next < self.duration {
                    self.schedule(next, EventKind::MeasureTick);
                }
                Ok(())
            }
            EventKind::Finalize => {
                self.flush_resequencers(now);
                self.emit_rows(now);
                Ok(())
            }
        }
    }

    fn schedule(&mut self, time: SimTime, kind: EventKind) {
        self.event_seq += 1;
        self.heap.push(HeapEvent {
            time,
            seq: self.event_seq,
            kind,
        });
    }

    // ---- plan installation -------------------------------------------------

    fn route_links(&self, hops: &[NodeId]) -> Result<Arc<[usize]>> {
        let mut route = Vec::with_capacity(hops.len().saturating_sub(1));
        for pair in hops.windows(2) {
            let idx = self
                .link_index
                .get(&(pair[0].clone(), pair[1].clone()))
                .ok_or_else(|| {
                    Error::Validation(format!("no link {} -> {}", pair[0], pair[1]))
                })?;
            route.push(*idx);
        }
        Ok(Arc::from(route.as_slice()))
    }

    fn install_plan(
        &mut self,
        demand_idx: usize,
        plan: &MultipathPlan,
        now: SimTime,
    ) -> Result<()> {
        let routes: Vec<Arc<[usize]>> = plan
            .paths
            .iter()
            .map(|p| self.route_links(&p.hops))
            .collect::<Result<_>>()?;
        let flow_ids: Vec<FlowId> = self.controller.demands()[demand_idx]
            .flows
            .iter()
            .cloned()
            .collect();
        let mss = self.cfg.sim.mss;

        let mut flushed: Vec<(usize, Vec<Packet>)> = Vec::new();
        for fid in flow_ids {
            let idx = fid.0 as usize;
            let FlowRt::Tcp(rt) = &mut self.flows[idx] else {
                continue;
            };
            rt.data_routes = routes.clone();
            rt.wrr.reconfigure(plan)?;
            if rt.interval_path_bytes.len() < routes.len() {
                rt.interval_path_bytes.resize(routes.len(), 0);
            }
            if plan.reorder_buffer_enabled && plan.paths.len() >= 2 {
                let threshold = compute_threshold(plan, mss);
                let capacity = capacity_for_threshold(threshold);
                match &mut rt.reseq {
                    Some(rs) => rs.resize(threshold, capacity),
                    None => {
                        rt.reseq = Some(FlowResequencerState::new(
                            threshold,
                            capacity,
                            DEFAULT_LOSS_RECOVERY_FACTOR,
                        ))
                    }
                }
            } else if let Some(mut rs) = rt.reseq.take() {
                flushed.push((idx, rs.flush()));
            }
        }
        for (idx, packets) in flushed {
            for pkt in packets {
                self.deliver_to_receiver(idx, pkt, now);
            }
        }
        Ok(())
    }

    // ---- event handlers ----------------------------------------------------

    fn flow_start(&mut self, idx: usize, now: SimTime) -> Result<()> {
        match &mut self.flows[idx] {
            FlowRt::Tcp(rt) => {
                let out = rt.sender.on_start(now);
                self.apply_sender_output(idx, out, now);
            }
            FlowRt::Udp(_) => {
                self.schedule(now, EventKind::UdpSend(idx));
            }
        }
        Ok(())
    }

    fn udp_send(&mut self, idx: usize, now: SimTime) -> Result<()> {
        let FlowRt::Udp(rt) = &mut self.flows[idx] else {
            return Ok(());
        };
        if let Some((pkt, next)) = rt.source.on_send(now, &mut self.rng) {
            let route = rt.route.clone();
            self.offer_transit(Transit { pkt, route, hop: 0 }, now);
            self.schedule(next, EventKind::UdpSend(idx));
        }
        Ok(())
    }

    fn link_departure(&mut self, link_idx: usize, now: SimTime) -> Result<()> {
        let loss_rate = self.links[link_idx].link.loss_rate;
        let (done, next_departure) = self.links[link_idx].complete_service(now);
        if let Some(t) = next_departure {
            self.schedule(t, EventKind::LinkDeparture(link_idx));
        }
        let lost = loss_rate > 0.0 && self.rng.gen::<f64>() < loss_rate;
        if lost {
            self.links[link_idx].record_loss();
            self.count_drop(done.pkt.flow);
            if self.opts.trace {
                self.trace.push(TraceRecord {
                    time_ms: now.as_ms(),
                    event: "drop_loss".into(),
                    flow: done.pkt.flow,
                    seq: done.pkt.seq,
                    path: done.pkt.path_taken,
                    detail: format!(
                        "{}->{}",
                        self.links[link_idx].link.src, self.links[link_idx].link.dst
                    ),
                });
            }
            return Ok(());
        }
        let arrival = now + self.links[link_idx].link.propagation();
        self.schedule(arrival, EventKind::Arrival(done));
        Ok(())
    }

    fn arrival(&mut self, mut transit: Transit, now: SimTime) -> Result<()> {
        if transit.hop + 1 < transit.route.len() {
            transit.hop += 1;
            self.offer_transit(transit, now);
            return Ok(());
        }
        let mut pkt = transit.pkt;
        pkt.arrival_time = now;
        debug_assert!(pkt.arrival_time > pkt.send_time, "causality violated");
        self.deliver(pkt, now)
    }

    fn deliver(&mut self, mut pkt: Packet, now: SimTime) -> Result<()> {
        if self.opts.trace {
            self.trace.push(TraceRecord {
                time_ms: now.as_ms(),
                event: if pkt.ack.is_some() { "ack" } else { "deliver" }.into(),
                flow: pkt.flow,
                seq: if let Some(a) = &pkt.ack { a.cumulative } else { pkt.seq },
                path: pkt.path_taken,
                detail: String::new(),
            });
        }
        let idx = pkt.flow.0 as usize;

        if let FlowRt::Udp(rt) = &mut self.flows[idx] {
            rt.delivered_bytes += pkt.size as u64;
            rt.interval_bytes += pkt.size as u64;
            return Ok(());
        }

        if let Some(info) = pkt.ack.take() {
            let out = {
                let FlowRt::Tcp(rt) = &mut self.flows[idx] else {
                    unreachable!()
                };
                rt.sender.on_ack(info, now)
            };
            self.apply_sender_output(idx, out, now);
            return Ok(());
        }

        // data direction: account the path, then resequence
        let (seq, path_taken) = (pkt.seq, pkt.path_taken);
        let (released, reseq_note) = {
            let FlowRt::Tcp(rt) = &mut self.flows[idx] else {
                unreachable!()
            };
            if let Some(p) = path_taken {
                if rt.interval_path_bytes.len() <= p {
                    rt.interval_path_bytes.resize(p + 1, 0);
                }
                rt.interval_path_bytes[p] += pkt.size as u64;
            }
            match &mut rt.reseq {
                Some(rs) => {
                    let (released, action) = rs.on_packet(pkt);
                    let note = (action, rs.occupancy());
                    (released, Some(note))
                }
                None => (vec![pkt], None),
            }
        };
        if self.opts.trace_reseq {
            if let Some((action, occupancy)) = reseq_note {
                self.trace.push(TraceRecord {
                    time_ms: now.as_ms(),
                    event: "reseq".into(),
                    flow: FlowId(idx as u32),
                    seq,
                    path: path_taken,
                    detail: format!("{},occ={}", action.label(), occupancy),
                });
            }
        }
        for p in released {
            self.deliver_to_receiver(idx, p, now);
        }
        Ok(())
    }

    fn deliver_to_receiver(&mut self, idx: usize, pkt: Packet, now: SimTime) {
        let (ack, route) = {
            let FlowRt::Tcp(rt) = &mut self.flows[idx] else {
                return;
            };
            let info = rt.receiver.on_segment(&pkt);
            (Packet::ack(pkt.flow, info, now), rt.ack_route.clone())
        };
        self.offer_transit(
            Transit {
                pkt: ack,
                route,
                hop: 0,
            },
            now,
        );
    }

    fn apply_sender_output(&mut self, idx: usize, out: tcp::SenderOutput, now: SimTime) {
        for pkt in out.to_send {
            self.dispatch_tcp_data(idx, pkt, now);
        }
        if let Some(fire_at) = out.arm_timer {
            let id = match &self.flows[idx] {
                FlowRt::Tcp(rt) => rt.sender.timer_id,
                FlowRt::Udp(_) => return,
            };
            self.schedule(fire_at, EventKind::RtoTimer { flow: idx, id });
        }
    }

    fn dispatch_tcp_data(&mut self, idx: usize, mut pkt: Packet, now: SimTime) {
        let route = {
            let FlowRt::Tcp(rt) = &mut self.flows[idx] else {
                return;
            };
            debug_assert!(!rt.data_routes.is_empty(), "plan installed before start");
            // SYNs take the lowest-delay path; data is burst-scheduled
            let path = if pkt.syn { 0 } else { rt.wrr.next_path() };
            pkt.path_taken = Some(path);
            rt.data_routes[path].clone()
        };
        self.offer_transit(
            Transit {
                pkt,
                route,
                hop: 0,
            },
            now,
        );
    }

    fn offer_transit(&mut self, transit: Transit, now: SimTime) {
        let link_idx = transit.route[transit.hop];
        let flow = transit.pkt.flow;
        let seq = transit.pkt.seq;
        let path = transit.pkt.path_taken;
        match self.links[link_idx].offer(transit, now) {
            OfferOutcome::StartService(at) => {
                self.schedule(at, EventKind::LinkDeparture(link_idx));
            }
            OfferOutcome::Queued => {}
            OfferOutcome::Dropped => {
                self.count_drop(flow);
                if self.opts.trace {
                    self.trace.push(TraceRecord {
                        time_ms: now.as_ms(),
                        event: "drop_queue".into(),
                        flow,
                        seq,
                        path,
                        detail: format!(
                            "{}->{}",
                            self.links[link_idx].link.src, self.links[link_idx].link.dst
                        ),
                    });
                }
            }
        }
    }

    fn rto_timer(&mut self, idx: usize, id: u64, now: SimTime) -> Result<()> {
        let FlowRt::Tcp(rt) = &mut self.flows[idx] else {
            return Ok(());
        };
        if rt.sender.timer_id != id {
            return Ok(()); // stale timer
        }
        let out = rt.sender.on_timeout(now);
        self.apply_sender_output(idx, out, now);
        Ok(())
    }

    fn controller_poll(&mut self, now: SimTime) -> Result<()> {
        for l in &mut self.links {
            l.stats.roll_to(now);
        }
        let stats: BTreeMap<(NodeId, NodeId), PortStats> = self
            .links
            .iter()
            .map(|l| ((l.link.src.clone(), l.link.dst.clone()), l.stats.clone()))
            .collect();
        let changed = self
            .controller
            .recompute_on_poll(&self.cfg.topology, &stats, now);
        for (demand_idx, plan) in changed {
            if plan.degraded {
                continue; // previous plan stays installed
            }
            self.install_plan(demand_idx, &plan, now)?;
            // a fresh plan may open the window again
            let flow_ids: Vec<usize> = self.controller.demands()[demand_idx]
                .flows
                .iter()
                .map(|f| f.0 as usize)
                .collect();
            for idx in flow_ids {
                if let FlowRt::Tcp(rt) = &mut self.flows[idx] {
                    let out = rt.sender.try_send(now);
                    self.apply_sender_output(idx, out, now);
                }
            }
        }
        let next = now + self.cfg.controller.poll_interval();
        if next < self.duration {
            self.schedule(next, EventKind::ControllerPoll);
        }
        Ok(())
    }

    fn count_drop(&mut self, flow: FlowId) {
        match &mut self.flows[flow.0 as usize] {
            FlowRt::Tcp(rt) => {
                rt.interval_drops += 1;
                rt.total_drops += 1;
            }
            FlowRt::Udp(rt) => {
                rt.interval_drops += 1;
                rt.total_drops += 1;
            }
        }
    }

    fn flush_resequencers(&mut self, now: SimTime) {
        for idx in 0..self.flows.len() {
            let FlowRt::Tcp(rt) = &mut self.flows[idx] else {
                continue;
            };
            let Some(rs) = &mut rt.reseq else { continue };
            let released = rs.flush();
            for pkt in released {
                self.deliver_to_receiver(idx, pkt, now);
            }
        }
    }

    fn emit_rows(&mut self, now: SimTime) {
        let bucket = now.saturating_sub(self.last_tick);
        if bucket == SimTime::ZERO {
            return;
        }
        let bucket_s = bucket.as_secs();
        for flow in &mut self.flows {
            match flow {
                FlowRt::Tcp(rt) => {
                    let bytes = std::mem::take(&mut rt.receiver.interval_bytes);
                    let path_bytes = std::mem::take(&mut rt.interval_path_bytes);
                    rt.interval_path_bytes = vec![0; rt.data_routes.len()];
                    self.metrics.push(MetricsRecord {
                        time_s: now.as_secs(),
                        flow: rt.spec.id,
                        goodput_bps: bytes as f64 * 8.0 / bucket_s,
                        path_throughput_bps: path_bytes
                            .iter()
                            .map(|b| *b as f64 * 8.0 / bucket_s)
                            .collect(),
                        cwnd_bytes: Some(rt.sender.cwnd),
                        reseq_occupancy: rt.reseq.as_ref().map(|r| r.occupancy()),
                        drops: std::mem::take(&mut rt.interval_drops),
                    });
                }
                FlowRt::Udp(rt) => {
                    let bytes = std::mem::take(&mut rt.interval_bytes);
                    self.metrics.push(MetricsRecord {
                        time_s: now.as_secs(),
                        flow: rt.spec.id,
                        goodput_bps: bytes as f64 * 8.0 / bucket_s,
                        path_throughput_bps: Vec::new(),
                        cwnd_bytes: None,
                        reseq_occupancy: None,
                        drops: std::mem::take(&mut rt.interval_drops),
                    });
                }
            }
        }
        self.last_tick = now;
    }

    fn finish(self) -> RunResult {
        let mut flows = Vec::new();
        for rt in &self.flows {
            let summary = match rt {
                FlowRt::Tcp(rt) => {
                    let active = rt
                        .spec
                        .stop
                        .min(self.duration)
                        .saturating_sub(rt.spec.start);
                    FlowSummary {
                        flow: rt.spec.id,
                        kind: "tcp".into(),
                        src: rt.spec.src.clone(),
                        dst: rt.spec.dst.clone(),
                        delivered_bytes: rt.receiver.delivered_bytes,
                        goodput_bps: rate(rt.receiver.delivered_bytes, active),
                        retransmits: rt.sender.retransmit_count,
                        timeouts: rt.sender.timeout_count,
                        drops: rt.total_drops,
                    }
                }
                FlowRt::Udp(rt) => {
                    let active = rt
                        .spec
                        .stop
                        .min(self.duration)
                        .saturating_sub(rt.spec.start);
                    FlowSummary {
                        flow: rt.spec.id,
                        kind: "udp".into(),
                        src: rt.spec.src.clone(),
                        dst: rt.spec.dst.clone(),
                        delivered_bytes: rt.delivered_bytes,
                        goodput_bps: rate(rt.delivered_bytes, active),
                        retransmits: 0,
                        timeouts: 0,
                        drops: rt.total_drops,
                    }
                }
            };
            flows.push(summary);
        }
        let links = self
            .links
            .iter()
            .map(|l| LinkTotals {
                src: l.link.src.clone(),
                dst: l.link.dst.clone(),
                offered: l.offered,
                completed: l.completed,
                queue_drops: l.queue_drops,
                loss_drops: l.loss_drops,
                left_in_queue: l.in_flight() as u64,
            })
            .collect();

        RunResult {
            scenario: self.cfg.name.clone(),
            seed: self.cfg.sim.seed,
            metrics: self.metrics,
            flows,
            decisions: self.controller.decisions.clone(),
            links,
            trace: self.trace,
        }
    }
}

fn rate(bytes: u64, window: SimTime) -> f64 {
    if window == SimTime::ZERO {
        return 0.0;
    }
    bytes as f64 * 8.0 / window.as_secs()
}

/// Reduces a plan to one pinned path carrying all traffic.
fn pin_plan(plan: &MultipathPlan, pin: usize) -> Result<MultipathPlan> {
    let path = plan.paths.get(pin).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "pinned path {pin} out of range ({} paths)",
            plan.paths.len()
        ))
    })?;
    Ok(MultipathPlan {
        paths: vec![path.clone()],
        weights: vec![1.0],
        mdi: 0.0,
        reorder_buffer_enabled: false,
        fallback_mdi: None,
        degraded: false,
    })
}

/// Latency-shortest path over the ground-truth topology (Dijkstra,
/// lexicographic tie-breaking). Used for ACK return routes and unmanaged
/// UDP traffic.
pub fn shortest_path_hops(topo: &Topology, src: &NodeId, dst: &NodeId) -> Result<Vec<NodeId>> {
    let nodes: Vec<NodeId> = topo.nodes.iter().cloned().collect();
    let idx = |n: &NodeId| nodes.binary_search(n);
    let (Ok(s), Ok(d)) = (idx(src), idx(dst)) else {
        return Err(Error::Validation(format!("unknown endpoint {src} or {dst}")));
    };
    let mut dist = vec![f64::INFINITY; nodes.len()];
    let mut prev: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut visited = vec![false; nodes.len()];
    dist[s] = 0.0;
    for _ in 0..nodes.len() {
        let mut u = None;
        let mut best = f64::INFINITY;
        for (i, d) in dist.iter().enumerate() {
            if !visited[i] && *d < best {
                best = *d;
                u = Some(i);
            }
        }
        let Some(u) = u else { break };
        visited[u] = true;
        for link in topo.out_links(&nodes[u]) {
            let v = idx(&link.dst).expect("validated topology");
            let nd = dist[u] + link.latency_ms;
            let better = nd < dist[v] - 1e-12;
            let tie = (nd - dist[v]).abs() <= 1e-12 && prev[v].is_some_and(|p| u < p);
            if better || tie {
                dist[v] = nd;
                prev[v] = Some(u);
            }
        }
    }
    if !dist[d].is_finite() {
        return Err(Error::NoPath {
            src: src.to_string(),
            dst: dst.to_string(),
        });
    }
    let mut hops = vec![nodes[d].clone()];
    let mut v = d;
    while v != s {
        let p = prev[v].expect("path exists");
        hops.push(nodes[p].clone());
        v = p;
    }
    hops.reverse();
    Ok(hops)
}
