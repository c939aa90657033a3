//! Droptail link queues with serialization and propagation delay.

use crate::netmodel::{Link, PortStats};
use crate::packet::Packet;
use crate::time::SimTime;
use std::collections::VecDeque;
use std::sync::Arc;

/// A packet in transit with its remaining source route. `hop` is the index
/// of the link currently carrying it within `route`.
#[derive(Debug, Clone)]
pub struct Transit {
    pub pkt: Packet,
    pub route: Arc<[usize]>,
    pub hop: usize,
}

/// Runtime state of one directed link: a bounded FIFO plus the packet in
/// service, port counters, and drop totals.
#[derive(Debug)]
pub struct LinkState {
    pub link: Link,
    queue: VecDeque<Transit>,
    in_service: Option<Transit>,
    pub stats: PortStats,
    pub offered: u64,
    pub completed: u64,
    pub queue_drops: u64,
    pub loss_drops: u64,
}

pub enum OfferOutcome {
    /// Service began immediately; schedule the departure.
    StartService(SimTime),
    Queued,
    Dropped,
}

impl LinkState {
    pub fn new(link: Link, stats_window: SimTime) -> Self {
        LinkState {
            link,
            queue: VecDeque::new(),
            in_service: None,
            stats: PortStats::new(stats_window),
            offered: 0,
            completed: 0,
            queue_drops: 0,
            loss_drops: 0,
        }
    }

    pub fn occupancy(&self) -> usize {
        self.queue.len() + usize::from(self.in_service.is_some())
    }

    pub fn in_flight(&self) -> usize {
        self.occupancy()
    }

    /// Offers a packet to the queue. Droptail: arrivals beyond
    /// `queue_limit` packets (including the one in service) are dropped.
    pub fn offer(&mut self, transit: Transit, now: SimTime) -> OfferOutcome {
        self.offered += 1;
        if self.occupancy() >= self.link.queue_limit {
            self.queue_drops += 1;
            return OfferOutcome::Dropped;
        }
        if self.in_service.is_none() {
            let tx = self.link.tx_time(transit.pkt.wire_size());
            self.in_service = Some(transit);
            OfferOutcome::StartService(now + tx)
        } else {
            self.queue.push_back(transit);
            OfferOutcome::Queued
        }
    }

    /// Completes the in-service packet: records it against the port
    /// counters and starts the next one if queued. Returns the finished
    /// transit and, when the queue was non-empty, the departure time of
    /// the next packet.
    pub fn complete_service(&mut self, now: SimTime) -> (Transit, Option<SimTime>) {
        let done = self.in_service.take().expect("departure without service");
        self.completed += 1;
        self.stats
            .record_transmission(done.pkt.wire_size(), now, done.pkt.flow);
        let next_departure = self.queue.pop_front().map(|next| {
            let tx = self.link.tx_time(next.pkt.wire_size());
            self.in_service = Some(next);
            now + tx
        });
        (done, next_departure)
    }

    pub fn record_loss(&mut self) {
        self.loss_drops += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::NodeId;
    use crate::packet::FlowId;

    fn link(cap_mbps: f64, latency_ms: f64, queue_limit: usize) -> Link {
        Link {
            src: NodeId::new("A"),
            dst: NodeId::new("B"),
            capacity: cap_mbps * 1e6,
            latency_ms,
            queue_limit,
            loss_rate: 0.0,
        }
    }

    fn transit(size: u32) -> Transit {
        Transit {
            pkt: Packet::data(FlowId(0), 0, size, SimTime::ZERO),
            route: Arc::from(vec![0usize].as_slice()),
            hop: 0,
        }
    }

    #[test]
    fn serialization_plus_propagation() {
        // 1500-byte wire packet on 10 Mbit/s: 1.2 ms serialization, then
        // 25 ms propagation -> arrival at 26.2 ms
        let l = link(10.0, 25.0, 100);
        let mut state = LinkState::new(l, SimTime::from_secs(2.0));
        // payload 1448 -> wire 1500
        let t = transit(1448);
        let OfferOutcome::StartService(departure) = state.offer(t, SimTime::ZERO) else {
            panic!("expected immediate service");
        };
        assert_eq!(departure, SimTime::from_ms(1.2));
        let (_done, next) = state.complete_service(departure);
        assert!(next.is_none());
        let arrival = departure + state.link.propagation();
        assert_eq!(arrival, SimTime::from_ms(26.2));
    }

    #[test]
    fn queue_limit_drops_excess() {
        let l = link(10.0, 25.0, 2);
        let mut state = LinkState::new(l, SimTime::from_secs(2.0));
        assert!(matches!(
            state.offer(transit(1448), SimTime::ZERO),
            OfferOutcome::StartService(_)
        ));
        assert!(matches!(
            state.offer(transit(1448), SimTime::ZERO),
            OfferOutcome::Queued
        ));
        assert!(matches!(
            state.offer(transit(1448), SimTime::ZERO),
            OfferOutcome::Dropped
        ));
        assert_eq!(state.queue_drops, 1);
        assert_eq!(state.occupancy(), 2);
    }

    #[test]
    fn back_to_back_service() {
        let l = link(10.0, 0.0, 10);
        let mut state = LinkState::new(l, SimTime::from_secs(2.0));
        state.offer(transit(1448), SimTime::ZERO);
        state.offer(transit(1448), SimTime::ZERO);
        let (_, next) = state.complete_service(SimTime::from_ms(1.2));
        assert_eq!(next, Some(SimTime::from_ms(2.4)));
        assert_eq!(state.stats.bytes_in_current_window(), 1500);
    }
}
