//! Receiving-edge per-flow resequencing buffer.
//!
//! Packets received ahead of the next expected sequence number are held
//! back until the gap fills, the buffer passes its release threshold, or
//! the buffer is full. Threshold releases flush everything in order,
//! ignoring gaps, and advance the expected sequence past a presumed loss
//! burst so the flow recovers without sender timeouts.

use crate::controller::MultipathPlan;
use crate::packet::{seq_add, seq_le, seq_lt, seq_max, Packet};
use std::collections::BTreeMap;

/// What `on_packet` did with an arrival; used for tracing and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResequenceAction {
    /// SYN observed; expected sequence (re)initialised.
    SynForward,
    /// Sequence below expected: duplicate or late packet, passed through.
    DuplicateForward,
    /// Expected packet: forwarded together with any unblocked buffer prefix.
    InOrderForward,
    /// Zero-payload packet passed through without touching state.
    ZeroSizeForward,
    /// Out-of-order packet stored.
    Buffered,
    /// Occupancy passed the threshold: whole buffer released in order.
    ThresholdFlush,
    /// Buffer full: lowest-sequence packet evicted to make room.
    EvictForward,
    /// Buffer full and the arrival precedes everything stored: bypassed.
    FullBypass,
}

impl ResequenceAction {
    pub fn label(&self) -> &'static str {
        match self {
            ResequenceAction::SynForward => "syn",
            ResequenceAction::DuplicateForward => "dup",
            ResequenceAction::InOrderForward => "inorder",
            ResequenceAction::ZeroSizeForward => "zerosize",
            ResequenceAction::Buffered => "buffered",
            ResequenceAction::ThresholdFlush => "threshold_flush",
            ResequenceAction::EvictForward => "evict",
            ResequenceAction::FullBypass => "bypass",
        }
    }
}

pub const DEFAULT_LOSS_RECOVERY_FACTOR: u32 = 20;
pub const MIN_THRESHOLD: usize = 4;
pub const MAX_CAPACITY: usize = 1024;

/// Per-flow resequencer state: the next expected sequence number plus a
/// bounded, sequence-ordered buffer of early arrivals.
#[derive(Debug, Clone)]
pub struct FlowResequencerState {
    expected: Option<u32>,
    /// Early packets keyed by sequence number. Iteration in serial order
    /// starts at `expected` and wraps (see `ordered_keys`).
    buffer: BTreeMap<u32, Packet>,
    /// Buffer capacity, packets.
    capacity: usize,
    /// Release threshold, packets.
    threshold: usize,
    /// Multiplier advancing `expected` past a presumed loss burst after a
    /// threshold release.
    loss_recovery_factor: u32,
}

impl FlowResequencerState {
    pub fn new(threshold: usize, capacity: usize, loss_recovery_factor: u32) -> Self {
        FlowResequencerState {
            expected: None,
            buffer: BTreeMap::new(),
            capacity,
            threshold,
            loss_recovery_factor,
        }
    }

    /// Threshold/capacity sized for a plan (see [`compute_threshold`]).
    pub fn for_plan(plan: &MultipathPlan, mss: u32) -> Self {
        let threshold = compute_threshold(plan, mss);
        FlowResequencerState::new(
            threshold,
            capacity_for_threshold(threshold),
            DEFAULT_LOSS_RECOVERY_FACTOR,
        )
    }

    pub fn occupancy(&self) -> usize {
        self.buffer.len()
    }

    pub fn expected(&self) -> Option<u32> {
        self.expected
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Re-sizes threshold and capacity after a plan change. Buffered
    /// packets and the expected sequence are preserved.
    pub fn resize(&mut self, threshold: usize, capacity: usize) {
        self.threshold = threshold;
        self.capacity = capacity;
    }

    /// Processes one arrival and returns the packets to forward, in order.
    pub fn on_packet(&mut self, pkt: Packet) -> (Vec<Packet>, ResequenceAction) {
        if pkt.syn {
            let next = seq_add(pkt.seq, pkt.seq_units());
            self.expected = Some(next);
            return (vec![pkt], ResequenceAction::SynForward);
        }
        // Pure ACKs and other zero-payload packets pass straight through.
        if pkt.size == 0 {
            return (vec![pkt], ResequenceAction::ZeroSizeForward);
        }
        let expected = match self.expected {
            Some(e) => e,
            None => {
                // Flow observed mid-stream (no SYN seen): adopt this packet
                // as the in-order point.
                self.expected = Some(seq_add(pkt.seq, pkt.size));
                return (vec![pkt], ResequenceAction::InOrderForward);
            }
        };

        if seq_lt(pkt.seq, expected) {
            // duplicates and late retransmissions go straight through
            return (vec![pkt], ResequenceAction::DuplicateForward);
        }

        if pkt.seq == expected {
            let mut out = vec![pkt.clone()];
            let mut next = seq_add(pkt.seq, pkt.size);
            // release the maximal now-in-order prefix of the buffer
            loop {
                let Some(head) = self.first_buffered_key(next) else {
                    break;
                };
                if seq_le(head, next) {
                    let buffered = self.buffer.remove(&head).expect("key present");
                    next = seq_max(next, seq_add(buffered.seq, buffered.size));
                    out.push(buffered);
                } else {
                    break;
                }
            }
            self.expected = Some(next);
            return (out, ResequenceAction::InOrderForward);
        }

        // Out of order (seq > expected). Store-then-release when occupancy
        // passes the threshold.
        if self.buffer.len() + 1 > self.threshold {
            self.buffer.insert(pkt.seq, pkt);
            let out = self.drain_in_order();
            let last = out.last().expect("flush is nonempty");
            let jump = last.size.wrapping_mul(self.loss_recovery_factor);
            self.expected = Some(seq_add(last.seq, jump));
            return (out, ResequenceAction::ThresholdFlush);
        }

        if self.buffer.len() < self.capacity {
            self.buffer.insert(pkt.seq, pkt);
            return (Vec::new(), ResequenceAction::Buffered);
        }

        // Buffer full: evict the lowest-sequence packet if it precedes the
        // arrival, otherwise pass the arrival straight through.
        let min_key = self
            .first_buffered_key(expected)
            .expect("full buffer is nonempty");
        if seq_le(min_key, pkt.seq) {
            let evicted = self.buffer.remove(&min_key).expect("key present");
            self.buffer.insert(pkt.seq, pkt);
            (vec![evicted], ResequenceAction::EvictForward)
        } else {
            (vec![pkt], ResequenceAction::FullBypass)
        }
    }

    /// Releases everything still buffered, in sequence order. Used at flow
    /// teardown; the state should be discarded afterwards.
    pub fn flush(&mut self) -> Vec<Packet> {
        self.drain_in_order()
    }

    /// Smallest buffered key in serial order, measured from `from`.
    fn first_buffered_key(&self, from: u32) -> Option<u32> {
        self.buffer
            .range(from..)
            .next()
            .or_else(|| self.buffer.range(..from).next())
            .map(|(k, _)| *k)
    }

    /// Removes and returns all buffered packets in serial sequence order.
    fn drain_in_order(&mut self) -> Vec<Packet> {
        let Some(expected) = self.expected else {
            let mut out: Vec<Packet> = std::mem::take(&mut self.buffer).into_values().collect();
            out.sort_by_key(|p| p.seq);
            return out;
        };
        let keys: Vec<u32> = self
            .buffer
            .range(expected..)
            .map(|(k, _)| *k)
            .chain(self.buffer.range(..expected).map(|(k, _)| *k))
            .collect();
        keys.into_iter()
            .map(|k| self.buffer.remove(&k).expect("key present"))
            .collect()
    }
}

/// Buffering threshold for a plan: the worst-case number of ahead-of-time
/// packets accumulated during one delay-difference window,
/// `ceil(delay_gap * aggregate_rate / packet_bits)`, clamped to
/// `[4, capacity - 1]`.
pub fn compute_threshold(plan: &MultipathPlan, mss: u32) -> usize {
    let delays = plan.delays_ms();
    let d_min = delays.iter().cloned().fold(f64::INFINITY, f64::min);
    let d_max = delays.iter().cloned().fold(0.0f64, f64::max);
    let gap_s = (d_max - d_min).max(0.0) / 1000.0;
    let aggregate = plan.total_rate();
    let raw = (gap_s * aggregate / (8.0 * mss as f64)).ceil() as usize;
    let t = raw.max(MIN_THRESHOLD);
    t.min(capacity_for_threshold(t) - 1)
}

/// Buffer capacity is twice the threshold, capped per flow.
pub fn capacity_for_threshold(threshold: usize) -> usize {
    (2 * threshold).min(MAX_CAPACITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::CandidatePath;
    use crate::packet::FlowId;
    use crate::time::SimTime;

    fn pkt(seq: u32, size: u32) -> Packet {
        Packet::data(FlowId(0), seq, size, SimTime::ZERO)
    }

    fn syn() -> Packet {
        Packet::syn(FlowId(0), 0, SimTime::ZERO)
    }

    fn seqs(packets: &[Packet]) -> Vec<u32> {
        packets.iter().map(|p| p.seq).collect()
    }

    fn fresh(threshold: usize, capacity: usize) -> FlowResequencerState {
        let mut st = FlowResequencerState::new(threshold, capacity, 20);
        let (out, action) = st.on_packet(syn());
        assert_eq!(action, ResequenceAction::SynForward);
        assert_eq!(out.len(), 1);
        assert_eq!(st.expected(), Some(1));
        st
    }

    #[test]
    fn in_order_stream_passes_straight_through() {
        let mut st = fresh(8, 16);
        for (seq, next) in [(1u32, 1449u32), (1449, 2897), (2897, 4345)] {
            let (out, action) = st.on_packet(pkt(seq, 1448));
            assert_eq!(action, ResequenceAction::InOrderForward);
            assert_eq!(seqs(&out), vec![seq]);
            assert_eq!(st.expected(), Some(next));
            assert_eq!(st.occupancy(), 0);
        }
    }

    #[test]
    fn swapped_pair_is_restored() {
        let mut st = fresh(8, 16);
        let (out, action) = st.on_packet(pkt(1449, 1448));
        assert_eq!(action, ResequenceAction::Buffered);
        assert!(out.is_empty());
        let (out, action) = st.on_packet(pkt(1, 1448));
        assert_eq!(action, ResequenceAction::InOrderForward);
        assert_eq!(seqs(&out), vec![1, 1449]);
        assert_eq!(st.expected(), Some(2897));
        assert_eq!(st.occupancy(), 0);
    }

    #[test]
    fn duplicate_below_expected_forwards_without_state_change() {
        let mut st = fresh(8, 16);
        st.on_packet(pkt(1, 1448));
        let (out, action) = st.on_packet(pkt(1, 1448));
        assert_eq!(action, ResequenceAction::DuplicateForward);
        assert_eq!(seqs(&out), vec![1]);
        assert_eq!(st.expected(), Some(1449));
    }

    #[test]
    fn threshold_flush_releases_everything_and_jumps_expected() {
        // threshold 3: the 4th out-of-order packet (occupancy 4 > 3 after
        // insert) releases the whole buffer in order
        let mut st = fresh(3, 16);
        let gap_after = |k: u32| 1 + (k + 1) * 1448; // seq skipping segment 1..
        for k in 0..3u32 {
            let (_, action) = st.on_packet(pkt(gap_after(k), 1448));
            assert_eq!(action, ResequenceAction::Buffered);
        }
        let (out, action) = st.on_packet(pkt(gap_after(3), 1448));
        assert_eq!(action, ResequenceAction::ThresholdFlush);
        assert_eq!(
            seqs(&out),
            (0..4).map(gap_after).collect::<Vec<_>>(),
            "ordered flush ignoring the gap"
        );
        assert_eq!(st.occupancy(), 0, "buffer empty after flush");
        let last = out.last().unwrap();
        assert_eq!(st.expected(), Some(last.seq + 1448 * 20), "seq + size*LRF");
    }

    #[test]
    fn after_flush_late_packets_forward_as_duplicates() {
        let mut st = fresh(3, 16);
        for k in 0..4u32 {
            st.on_packet(pkt(2897 + k * 1448, 1448));
        }
        // the gap packet (seq 1) arrives after the flush; expected has
        // jumped ahead, so it passes straight through
        let (out, action) = st.on_packet(pkt(1, 1448));
        assert_eq!(action, ResequenceAction::DuplicateForward);
        assert_eq!(seqs(&out), vec![1]);
    }

    #[test]
    fn full_buffer_evicts_minimum_when_arrival_is_higher() {
        // capacity 2, threshold 8 (> capacity, so case (f) is reachable)
        let mut st = fresh(8, 2);
        st.on_packet(pkt(1449, 1448));
        st.on_packet(pkt(2897, 1448));
        assert_eq!(st.occupancy(), 2);
        let (out, action) = st.on_packet(pkt(4345, 1448));
        assert_eq!(action, ResequenceAction::EvictForward);
        assert_eq!(seqs(&out), vec![1449]);
        assert_eq!(st.occupancy(), 2);
        // invariant: nothing buffered below expected
        assert!(st.buffer.keys().all(|&k| seq_le(st.expected().unwrap(), k)));
    }

    #[test]
    fn full_buffer_bypasses_arrival_below_buffered_minimum() {
        let mut st = fresh(8, 2);
        st.on_packet(pkt(2897, 1448));
        st.on_packet(pkt(4345, 1448));
        let (out, action) = st.on_packet(pkt(1449, 1448));
        assert_eq!(action, ResequenceAction::FullBypass);
        assert_eq!(seqs(&out), vec![1449]);
        assert_eq!(st.occupancy(), 2);
    }

    #[test]
    fn in_order_arrival_drains_contiguous_prefix_only() {
        let mut st = fresh(8, 16);
        st.on_packet(pkt(1449, 1448)); // contiguous once 1 arrives
        st.on_packet(pkt(5793, 1448)); // still leaves a hole at 2897
        let (out, action) = st.on_packet(pkt(1, 1448));
        assert_eq!(action, ResequenceAction::InOrderForward);
        assert_eq!(seqs(&out), vec![1, 1449]);
        assert_eq!(st.expected(), Some(2897));
        assert_eq!(st.occupancy(), 1);
    }

    #[test]
    fn zero_size_packets_bypass_state() {
        let mut st = fresh(8, 16);
        st.on_packet(pkt(1449, 1448));
        let (out, action) = st.on_packet(pkt(9999, 0));
        assert_eq!(action, ResequenceAction::ZeroSizeForward);
        assert_eq!(out.len(), 1);
        assert_eq!(st.occupancy(), 1, "buffer untouched");
        assert_eq!(st.expected(), Some(1));
    }

    #[test]
    fn syn_reinitialises_expected() {
        let mut st = fresh(8, 16);
        st.on_packet(pkt(1, 1448));
        let restart = Packet::syn(FlowId(0), 5000, SimTime::ZERO);
        let (_, action) = st.on_packet(restart);
        assert_eq!(action, ResequenceAction::SynForward);
        assert_eq!(st.expected(), Some(5001));
    }

    #[test]
    fn flush_returns_remaining_in_order() {
        let mut st = fresh(8, 16);
        assert!(st.flush().is_empty());
        st.on_packet(pkt(4345, 1448));
        st.on_packet(pkt(1449, 1448));
        st.on_packet(pkt(2897, 1448));
        let out = st.flush();
        assert_eq!(seqs(&out), vec![1449, 2897, 4345]);
        assert_eq!(st.occupancy(), 0);
    }

    #[test]
    fn sequence_space_wraps_cleanly() {
        let near_wrap = u32::MAX - 2000;
        let mut st = FlowResequencerState::new(8, 16, 20);
        st.on_packet(Packet::syn(FlowId(0), near_wrap, SimTime::ZERO));
        let first = seq_add(near_wrap, 1);
        // second segment wraps around zero; deliver out of order
        let second = seq_add(first, 1448);
        let (out, action) = st.on_packet(pkt(second, 1448));
        assert_eq!(action, ResequenceAction::Buffered);
        assert!(out.is_empty());
        let (out, _) = st.on_packet(pkt(first, 1448));
        assert_eq!(seqs(&out), vec![first, second]);
        assert_eq!(st.expected(), Some(seq_add(second, 1448)));
    }

    #[test]
    fn threshold_formula_matches_hand_computation() {
        // 75 ms gap, 20 Mbit/s aggregate, 1448-byte segments:
        // ceil(0.075 * 20e6 / (8*1448)) = 130
        let plan = MultipathPlan {
            paths: vec![
                CandidatePath {
                    hops: vec![],
                    allocated_rate: 10e6,
                    path_delay_ms: 25.0,
                },
                CandidatePath {
                    hops: vec![],
                    allocated_rate: 10e6,
                    path_delay_ms: 100.0,
                },
            ],
            weights: vec![0.5, 0.5],
            mdi: 0.3,
            reorder_buffer_enabled: true,
            fallback_mdi: None,
            degraded: false,
        };
        assert_eq!(compute_threshold(&plan, 1448), 130);
        assert_eq!(capacity_for_threshold(130), 260);
    }

    #[test]
    fn threshold_clamps_low_and_high() {
        let mut plan = MultipathPlan {
            paths: vec![
                CandidatePath {
                    hops: vec![],
                    allocated_rate: 10e6,
                    path_delay_ms: 25.0,
                },
                CandidatePath {
                    hops: vec![],
                    allocated_rate: 10e6,
                    path_delay_ms: 25.0,
                },
            ],
            weights: vec![0.5, 0.5],
            mdi: 0.0,
            reorder_buffer_enabled: false,
            fallback_mdi: None,
            degraded: false,
        };
        assert_eq!(compute_threshold(&plan, 1448), MIN_THRESHOLD);
        // absurd gap: threshold stays below capacity
        plan.paths[1].path_delay_ms = 60_000.0;
        plan.paths[0].allocated_rate = 100e6;
        plan.paths[1].allocated_rate = 100e6;
        let t = compute_threshold(&plan, 1448);
        assert!(t < MAX_CAPACITY);
        assert_eq!(capacity_for_threshold(t), MAX_CAPACITY);
    }
}
