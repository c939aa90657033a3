//! Loss-based TCP sender and receiver models.
//!
//! The sender runs textbook slow start / congestion avoidance with a
//! selective-acknowledgement scoreboard. Loss detection starts with the
//! classic three-duplicate-ACK rule; once packet reordering has been
//! observed on the connection it switches to a time-based rule (a hole
//! counts as lost only when data sent a quarter of the minimum RTT after
//! it has already been delivered), so persistent multipath interleaving
//! does not masquerade as loss. During recovery, transmission is limited
//! by the estimated pipe at `cwnd = ssthresh` and holes are retransmitted
//! bottom-up. A standard SRTT/RTTVAR retransmission timer backstops lost
//! recoveries. The receiver ACKs every arrival and reports its
//! out-of-order ranges.

use crate::packet::{seq_add, seq_le, seq_lt, AckInfo, FlowId, Packet};
use crate::time::SimTime;
use std::collections::BTreeMap;

const INITIAL_WINDOW_SEGMENTS: u32 = 10;
const MIN_RTO: SimTime = SimTime(200_000); // 200 ms
const MAX_RTO: SimTime = SimTime(60_000_000);
const INITIAL_RTO: SimTime = SimTime(1_000_000); // 1 s
/// Cap on reported selective-acknowledgement ranges per ACK.
const MAX_SACK_RANGES: usize = 64;

/// What the sender wants done after handling an event.
#[derive(Debug, Default)]
pub struct SenderOutput {
    pub to_send: Vec<Packet>,
    /// (Re)arm the retransmission timer at this absolute time.
    pub arm_timer: Option<SimTime>,
}

#[derive(Debug, Clone, Copy)]
struct SegmentMeta {
    len: u32,
    send_time: SimTime,
    /// Retransmitted at least once (excluded from RTT sampling, counted
    /// as in flight again).
    retransmitted: bool,
    /// Receiver reported holding this segment.
    sacked: bool,
    /// Known drained from the network (set for everything unsacked when
    /// the retransmission timer fires).
    lost: bool,
}

#[derive(Debug)]
pub struct TcpSender {
    pub flow: FlowId,
    mss: u32,
    /// Congestion window, bytes.
    pub cwnd: f64,
    pub ssthresh: f64,
    snd_una: u32,
    snd_nxt: u32,
    established: bool,
    stop: SimTime,
    dupacks: u32,
    in_recovery: bool,
    recover: u32,
    /// Sacked bytes among unacknowledged segments (scoreboard total).
    sacked_total: u64,
    /// Highest sequence covered by any sacked segment.
    highest_sacked: u32,
    srtt_us: Option<f64>,
    rttvar_us: f64,
    min_rtt_us: f64,
    /// Out-of-order delivery seen on this connection; switches loss
    /// detection from the duplicate-ACK rule to the time-based rule.
    reorder_observed: bool,
    /// Newest send time among delivered (acked or sacked) segments.
    delivered_xmit: SimTime,
    rto: SimTime,
    /// Token invalidating stale timer events.
    pub timer_id: u64,
    segments: BTreeMap<u32, SegmentMeta>,
    pub retransmit_count: u64,
    pub timeout_count: u64,
}

impl TcpSender {
    pub fn new(flow: FlowId, mss: u32, stop: SimTime) -> Self {
        TcpSender {
            flow,
            mss,
            cwnd: (INITIAL_WINDOW_SEGMENTS * mss) as f64,
            ssthresh: f64::INFINITY,
            snd_una: 0,
            snd_nxt: 0,
            established: false,
            stop,
            dupacks: 0,
            in_recovery: false,
            recover: 0,
            sacked_total: 0,
            highest_sacked: 0,
            srtt_us: None,
            rttvar_us: 0.0,
            min_rtt_us: f64::INFINITY,
            reorder_observed: false,
            delivered_xmit: SimTime::ZERO,
            rto: INITIAL_RTO,
            timer_id: 0,
            segments: BTreeMap::new(),
            retransmit_count: 0,
            timeout_count: 0,
        }
    }

    pub fn established(&self) -> bool {
        self.established
    }

    /// Reordering tolerance once reordering has been seen: a quarter of
    /// the lowest RTT observed.
    fn reorder_window(&self) -> SimTime {
        if self.min_rtt_us.is_finite() {
            SimTime((self.min_rtt_us / 4.0) as u64)
        } else {
            SimTime::ZERO
        }
    }

    /// Loss inference. Before any reordering has been observed the classic
    /// rule applies: the selective-ACK frontier three segments past the
    /// end marks a hole lost. Afterwards the rule is time-based: the hole
    /// is lost only when data sent a reorder-window later has already
    /// been delivered.
    fn deemed_lost(&self, start: u32, meta: &SegmentMeta) -> bool {
        if meta.lost {
            return true;
        }
        if self.reorder_observed {
            self.delivered_xmit >= meta.send_time + self.reorder_window()
        } else {
            let end = seq_add(start, meta.len);
            seq_le(seq_add(end, 3 * self.mss), self.highest_sacked)
        }
    }

    /// Estimated bytes in the network: outstanding data minus what the
    /// receiver holds, minus holes deemed lost that have not been resent.
    pub fn pipe_bytes(&self) -> u64 {
        let outstanding = self.snd_nxt.wrapping_sub(self.snd_una) as u64;
        let mut pipe = outstanding.saturating_sub(self.sacked_total);
        for (&start, meta) in &self.segments {
            if meta.sacked || meta.retransmitted {
                continue;
            }
            if self.deemed_lost(start, meta) {
                // deemed lost, not yet resent: not in the pipe
                pipe = pipe.saturating_sub(meta.len as u64);
            } else {
                break; // scoreboard is ordered; nothing higher is lost
            }
        }
        pipe
    }

    /// Opens the connection: sends a SYN occupying sequence 0.
    pub fn on_start(&mut self, now: SimTime) -> SenderOutput {
        let syn = Packet::syn(self.flow, 0, now);
        self.snd_nxt = 1;
        self.segments.insert(
            0,
            SegmentMeta {
                len: 1,
                send_time: now,
                retransmitted: false,
                sacked: false,
                lost: false,
            },
        );
        SenderOutput {
            to_send: vec![syn],
            arm_timer: Some(self.arm(now)),
        }
    }

    pub fn on_ack(&mut self, info: AckInfo, now: SimTime) -> SenderOutput {
        let mut out = SenderOutput::default();
        let ack = info.cumulative;

        if !self.established {
            if seq_lt(self.snd_una, ack) {
                self.take_rtt_sample(ack, now);
                self.established = true;
                self.snd_una = ack; // 1
                self.snd_nxt = ack;
                self.segments.clear();
                self.send_window(now, &mut out);
                self.update_timer(now, &mut out);
            }
            return out;
        }

        self.apply_sack(&info);

        let advanced = seq_lt(self.snd_una, ack);
        if advanced {
            self.handle_new_ack(ack, now);
        } else if ack == self.snd_una && self.outstanding() > 0 {
            self.dupacks += 1;
        }
        // recovery entry is suppressed until everything outstanding at the
        // last timeout has been acknowledged (the timeout already collapsed
        // the window once)
        if !self.in_recovery && seq_lt(self.recover, self.snd_una) && self.next_hole().is_some() {
            self.enter_recovery();
            // the first retransmission goes out immediately, bypassing
            // the pipe limit
            self.resend_hole(now, &mut out);
        }
        self.send_window(now, &mut out);
        if advanced {
            // the timer restarts only on forward progress; duplicate ACKs
            // must not keep a dead retransmission alive
            self.update_timer(now, &mut out);
        }
        out
    }

    fn outstanding(&self) -> u64 {
        self.snd_nxt.wrapping_sub(self.snd_una) as u64
    }

    /// Marks scoreboard segments covered by the reported ranges, watching
    /// for out-of-order delivery (a never-retransmitted segment filling in
    /// below the existing frontier).
    fn apply_sack(&mut self, info: &AckInfo) {
        for &(start, len) in &info.sack {
            let end = seq_add(start, len);
            let keys: Vec<u32> = self
                .segments
                .range(start..)
                .take_while(|(s, m)| seq_le(seq_add(**s, m.len), end))
                .filter(|(_, m)| !m.sacked)
                .map(|(s, _)| *s)
                .collect();
            for k in keys {
                let meta = self.segments.get_mut(&k).expect("key present");
                meta.sacked = true;
                self.sacked_total += meta.len as u64;
                let seg_end = seq_add(k, meta.len);
                if seq_lt(self.highest_sacked, seg_end) {
                    self.highest_sacked = seg_end;
                } else if !meta.retransmitted {
                    if !self.reorder_observed && std::env::var("MPSIM_TCP_DEBUG").is_ok() {
                        eprintln!("reorder observed: seg end {seg_end} below frontier {}", self.highest_sacked);
                    }
                    self.reorder_observed = true;
                }
                if !meta.retransmitted && self.delivered_xmit < meta.send_time {
                    self.delivered_xmit = meta.send_time;
                }
            }
        }
    }

    fn enter_recovery(&mut self) {
        if std::env::var("MPSIM_TCP_DEBUG").is_ok() {
            eprintln!("enter_recovery una={} outstanding={} reorder={} reo_wnd={}us min_rtt={}us",
                self.snd_una, self.outstanding(), self.reorder_observed, self.reorder_window().0, self.min_rtt_us);
        }
        self.ssthresh = (self.outstanding() as f64 / 2.0).max(2.0 * self.mss as f64);
        self.cwnd = self.ssthresh;
        self.recover = self.snd_nxt;
        self.in_recovery = true;
        // new episode: previous retransmissions may be resent again
        for meta in self.segments.values_mut() {
            meta.retransmitted = false;
        }
    }

    fn handle_new_ack(&mut self, ack: u32, now: SimTime) {
        self.take_rtt_sample(ack, now);
        // acknowledgements land on segment boundaries, so everything below
        // the cumulative point is fully covered
        let acked: Vec<(u32, SegmentMeta)> = {
            let keep = self.segments.split_off(&ack);
            std::mem::replace(&mut self.segments, keep).into_iter().collect()
        };
        for (start, meta) in &acked {
            if meta.sacked {
                self.sacked_total -= meta.len as u64;
            } else if !meta.retransmitted
                && seq_lt(seq_add(*start, meta.len), self.highest_sacked)
            {
                // delivered in order at the receiver only now, while newer
                // data was already held: the path reordered it
                self.reorder_observed = true;
            }
            if !meta.retransmitted && self.delivered_xmit < meta.send_time {
                self.delivered_xmit = meta.send_time;
            }
        }
        self.snd_una = ack;
        if seq_lt(self.highest_sacked, ack) {
            self.highest_sacked = ack;
        }

        if self.in_recovery {
            if seq_le(self.recover, ack) {
                // recovery complete
                self.cwnd = self.ssthresh.max(self.mss as f64);
                self.in_recovery = false;
                self.dupacks = 0;
            }
            // partial ACKs keep the episode open; the scoreboard drives
            // further retransmissions from send_window
        } else {
            self.dupacks = 0;
            if self.cwnd < self.ssthresh {
                self.cwnd += self.mss as f64; // slow start: one segment per ACK
            } else {
                self.cwnd += (self.mss as f64) * (self.mss as f64) / self.cwnd;
            }
        }
    }

    /// Retransmission timeout: collapse to one segment and back off.
    pub fn on_timeout(&mut self, now: SimTime) -> SenderOutput {
        let mut out = SenderOutput::default();
        if self.established && self.outstanding() == 0 {
            return out; // idle: nothing to recover
        }
        self.timeout_count += 1;
        if self.established {
            self.ssthresh = (self.outstanding() as f64 / 2.0).max(2.0 * self.mss as f64);
            self.cwnd = self.mss as f64;
            self.recover = self.snd_nxt;
        }
        self.in_recovery = false;
        self.dupacks = 0;
        // the full timeout drained the network: everything unsacked is
        // gone and gets resent as the window reopens
        for meta in self.segments.values_mut() {
            meta.retransmitted = false;
            if !meta.sacked {
                meta.lost = true;
            }
        }
        self.rto = SimTime((self.rto.0 * 2).min(MAX_RTO.0));
        self.retransmit_front(now, &mut out);
        out.arm_timer = Some(self.arm(now));
        out
    }

    /// Emits new segments while the congestion window allows and the flow
    /// is still in its sending window.
    pub fn try_send(&mut self, now: SimTime) -> SenderOutput {
        let mut out = SenderOutput::default();
        self.send_window(now, &mut out);
        self.update_timer(now, &mut out);
        out
    }

    /// Fills the window: holes deemed lost go out first (bottom-up), then
    /// new data.
    fn send_window(&mut self, now: SimTime, out: &mut SenderOutput) {
        if !self.established {
            return;
        }
        while self.pipe_bytes() + self.mss as u64 <= self.cwnd as u64 {
            if let Some(seq) = self.next_hole() {
                let meta = self.segments.get_mut(&seq).expect("hole exists");
                meta.retransmitted = true;
                meta.send_time = now;
                let mut pkt = Packet::data(self.flow, seq, meta.len, now);
                pkt.retransmit = true;
                self.retransmit_count += 1;
                out.to_send.push(pkt);
                continue;
            }
            if now >= self.stop {
                return; // past the sending window: no new data
            }
            let seq = self.snd_nxt;
            let pkt = Packet::data(self.flow, seq, self.mss, now);
            self.segments.insert(
                seq,
                SegmentMeta {
                    len: self.mss,
                    send_time: now,
                    retransmitted: false,
                    sacked: false,
                    lost: false,
                },
            );
            self.snd_nxt = seq_add(seq, self.mss);
            out.to_send.push(pkt);
        }
    }

    /// Retransmits the lowest outstanding hole unconditionally.
    fn resend_hole(&mut self, now: SimTime, out: &mut SenderOutput) {
        let Some(seq) = self.next_hole() else { return };
        let meta = self.segments.get_mut(&seq).expect("hole exists");
        meta.retransmitted = true;
        meta.send_time = now;
        let mut pkt = Packet::data(self.flow, seq, meta.len, now);
        pkt.retransmit = true;
        self.retransmit_count += 1;
        out.to_send.push(pkt);
    }

    /// Lowest unacknowledged segment deemed lost and not yet resent.
    fn next_hole(&self) -> Option<u32> {
        for (&start, meta) in &self.segments {
            if meta.sacked || meta.retransmitted {
                continue;
            }
            if self.deemed_lost(start, meta) {
                return Some(start);
            }
            break; // ordered: nothing above this one qualifies
        }
        None
    }

    /// Retransmits the segment at the left edge of the window.
    fn retransmit_front(&mut self, now: SimTime, out: &mut SenderOutput) {
        if !self.established {
            // lost SYN
            if let Some(meta) = self.segments.get_mut(&0) {
                meta.retransmitted = true;
            }
            let mut syn = Packet::syn(self.flow, 0, now);
            syn.retransmit = true;
            out.to_send.push(syn);
            return;
        }
        let Some(meta) = self.segments.get_mut(&self.snd_una) else {
            return;
        };
        meta.retransmitted = true;
        meta.send_time = now;
        let mut pkt = Packet::data(self.flow, self.snd_una, meta.len, now);
        pkt.retransmit = true;
        self.retransmit_count += 1;
        out.to_send.push(pkt);
    }

    fn take_rtt_sample(&mut self, ack: u32, now: SimTime) {
        // sample from the most recent segment the cumulative ACK covers,
        // skipping retransmitted ones (Karn's rule)
        let sample = self
            .segments
            .range(..)
            .filter(|(s, m)| seq_le(seq_add(**s, m.len), ack) && !m.retransmitted)
            .map(|(_, m)| m.send_time)
            .next_back();
        let Some(sent) = sample else { return };
        let rtt_us = now.saturating_sub(sent).as_micros() as f64;
        if rtt_us < self.min_rtt_us {
            self.min_rtt_us = rtt_us;
        }
        match self.srtt_us {
            None => {
                self.srtt_us = Some(rtt_us);
                self.rttvar_us = rtt_us / 2.0;
            }
            Some(srtt) => {
                self.rttvar_us = 0.75 * self.rttvar_us + 0.25 * (srtt - rtt_us).abs();
                self.srtt_us = Some(0.875 * srtt + 0.125 * rtt_us);
            }
        }
        let srtt = self.srtt_us.unwrap();
        let rto_us = srtt + (4.0 * self.rttvar_us).max(1_000.0);
        self.rto = SimTime((rto_us as u64).clamp(MIN_RTO.0, MAX_RTO.0));
    }

    fn arm(&mut self, now: SimTime) -> SimTime {
        self.timer_id += 1;
        now + self.rto
    }

    fn update_timer(&mut self, now: SimTime, out: &mut SenderOutput) {
        if self.outstanding() > 0 {
            out.arm_timer = Some(self.arm(now));
        } else {
            self.timer_id += 1; // cancel: outstanding timers become stale
        }
    }

    pub fn srtt_ms(&self) -> Option<f64> {
        self.srtt_us.map(|v| v / 1_000.0)
    }
}

/// Receive side: tracks the in-order point, buffers out-of-order ranges,
/// and acknowledges every arrival.
#[derive(Debug)]
pub struct TcpReceiver {
    pub flow: FlowId,
    established: bool,
    rcv_nxt: u32,
    /// Out-of-order segments, start -> length.
    ooo: BTreeMap<u32, u32>,
    /// Cumulative payload bytes delivered in order to the application.
    pub delivered_bytes: u64,
    /// Delivered bytes since the last metrics tick.
    pub interval_bytes: u64,
}

impl TcpReceiver {
    pub fn new(flow: FlowId) -> Self {
        TcpReceiver {
            flow,
            established: false,
            rcv_nxt: 0,
            ooo: BTreeMap::new(),
            delivered_bytes: 0,
            interval_bytes: 0,
        }
    }

    pub fn rcv_nxt(&self) -> u32 {
        self.rcv_nxt
    }

    /// Handles an arriving segment and returns the ACK to send back.
    pub fn on_segment(&mut self, pkt: &Packet) -> AckInfo {
        if pkt.syn {
            self.rcv_nxt = seq_add(pkt.seq, 1);
            self.established = true;
            self.ooo.clear();
            return self.ack();
        }
        if pkt.size == 0 {
            return self.ack();
        }
        if pkt.seq == self.rcv_nxt {
            self.deliver(pkt.size as u64);
            self.rcv_nxt = seq_add(self.rcv_nxt, pkt.size);
            self.drain_contiguous();
        } else if seq_lt(self.rcv_nxt, pkt.seq) {
            // out of order: hold the range (duplicates collapse by key)
            self.ooo.entry(pkt.seq).or_insert(pkt.size);
        }
        // below rcv_nxt: duplicate, nothing to track
        self.ack()
    }

    fn drain_contiguous(&mut self) {
        loop {
            let Some((&start, &len)) = self.ooo.iter().next() else {
                break;
            };
            if start == self.rcv_nxt {
                self.ooo.remove(&start);
                self.deliver(len as u64);
                self.rcv_nxt = seq_add(self.rcv_nxt, len);
            } else if seq_lt(start, self.rcv_nxt) {
                // stale range the in-order point has passed
                self.ooo.remove(&start);
            } else {
                break;
            }
        }
    }

    fn deliver(&mut self, bytes: u64) {
        self.delivered_bytes += bytes;
        self.interval_bytes += bytes;
    }

    /// Cumulative point plus coalesced out-of-order ranges, lowest first.
    fn ack(&self) -> AckInfo {
        let mut sack: Vec<(u32, u32)> = Vec::new();
        for (&start, &len) in &self.ooo {
            match sack.last_mut() {
                Some((s, l)) if seq_add(*s, *l) == start => *l += len,
                _ => {
                    if sack.len() == MAX_SACK_RANGES {
                        break;
                    }
                    sack.push((start, len));
                }
            }
        }
        AckInfo {
            cumulative: self.rcv_nxt,
            sack,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn established_sender() -> (TcpSender, SenderOutput) {
        let mut s = TcpSender::new(FlowId(0), 1448, SimTime::from_secs(30.0));
        let syn_out = s.on_start(SimTime::ZERO);
        let out = s.on_ack(AckInfo::plain(1), SimTime::from_ms(50.0));
        assert_eq!(syn_out.to_send.len(), 1);
        (s, out)
    }

    #[test]
    fn handshake_then_initial_window() {
        let (s, out) = established_sender();
        assert!(s.established());
        assert_eq!(out.to_send.len(), 10, "initial window of 10 segments");
        assert_eq!(out.to_send[0].seq, 1);
        assert_eq!(out.to_send[9].seq, 1 + 9 * 1448);
    }

    #[test]
    fn slow_start_grows_one_mss_per_ack() {
        let (mut s, _) = established_sender();
        let cwnd0 = s.cwnd;
        s.on_ack(AckInfo::plain(1 + 1448), SimTime::from_ms(100.0));
        assert_eq!(s.cwnd, cwnd0 + 1448.0);
    }

    #[test]
    fn congestion_avoidance_grows_one_mss_per_rtt() {
        let (mut s, _) = established_sender();
        s.ssthresh = s.cwnd; // force CA
        let cwnd0 = s.cwnd;
        let per_ack = 1448.0 * 1448.0 / cwnd0;
        s.on_ack(AckInfo::plain(1 + 1448), SimTime::from_ms(100.0));
        assert!((s.cwnd - (cwnd0 + per_ack)).abs() < 1.0);
    }

    #[test]
    fn three_dupacks_halve_and_fast_retransmit() {
        let (mut s, _) = established_sender();
        let pipe_before = s.pipe_bytes();
        assert!(pipe_before > 0);
        let mut retransmitted = Vec::new();
        for i in 0u32..3 {
            // segment 1 lost; 2.. arriving out of order
            let sack = vec![(1 + 1448, (i + 1) * 1448)];
            let out = s.on_ack(
                AckInfo {
                    cumulative: 1,
                    sack,
                },
                SimTime::from_ms(100.0 + i as f64),
            );
            retransmitted.extend(out.to_send.into_iter().filter(|p| p.retransmit));
        }
        assert_eq!(retransmitted.len(), 1, "exactly one fast retransmit");
        assert_eq!(retransmitted[0].seq, 1);
        assert!(s.in_recovery);
        // cwnd halves the in-flight data (plus limited transmit's couple
        // of segments sent on the first two duplicates)
        assert!(s.cwnd <= (pipe_before as f64 + 3.0 * 1448.0) / 2.0 + 1.0);
        assert_eq!(s.cwnd, s.ssthresh);
    }

    #[test]
    fn recovery_retransmits_holes_bottom_up() {
        let (mut s, _) = established_sender();
        // segments 1 and 2 lost, everything above arrives; the second hole
        // goes out as soon as the pipe estimate opens room, without
        // waiting for the first retransmission's round trip
        let lost_second = 1 + 1448;
        let sacked_from = 1 + 2 * 1448;
        let mut resent = Vec::new();
        for i in 0u32..6 {
            let sacked_segs = (i + 3).min(8); // 8 segments above the holes
            let out = s.on_ack(
                AckInfo {
                    cumulative: 1,
                    sack: vec![(sacked_from, sacked_segs * 1448)],
                },
                SimTime::from_ms(100.0 + i as f64),
            );
            resent.extend(out.to_send.into_iter().filter(|p| p.retransmit));
        }
        assert!(resent.iter().any(|p| p.seq == 1));
        assert!(
            resent.iter().any(|p| p.seq == lost_second),
            "second hole resent within the episode: {resent:?}"
        );
    }

    #[test]
    fn partial_ack_keeps_recovery_open() {
        let (mut s, _) = established_sender();
        for i in 0u32..3 {
            s.on_ack(
                AckInfo {
                    cumulative: 1,
                    sack: vec![(1 + 2 * 1448, (i + 1) * 1448)],
                },
                SimTime::from_ms(100.0),
            );
        }
        assert!(s.in_recovery);
        // first hole fills; the second is still missing
        s.on_ack(AckInfo::plain(1 + 1448), SimTime::from_ms(110.0));
        assert!(s.in_recovery, "partial ACK must not end recovery");
        // everything up to the recovery point fills
        let recover = s.recover;
        s.on_ack(AckInfo::plain(recover), SimTime::from_ms(120.0));
        assert!(!s.in_recovery);
        assert_eq!(s.cwnd, s.ssthresh.max(1448.0));
    }

    #[test]
    fn timeout_collapses_to_one_segment() {
        let (mut s, _) = established_sender();
        let out = s.on_timeout(SimTime::from_secs(1.2));
        assert_eq!(s.cwnd, 1448.0);
        assert_eq!(out.to_send.len(), 1);
        assert!(out.to_send[0].retransmit);
        assert!(out.arm_timer.is_some());
    }

    #[test]
    fn rto_backs_off_exponentially() {
        let (mut s, _) = established_sender();
        let r0 = s.rto;
        s.on_timeout(SimTime::from_secs(1.2));
        assert_eq!(s.rto.0, r0.0 * 2);
        s.on_timeout(SimTime::from_secs(3.0));
        assert_eq!(s.rto.0, r0.0 * 4);
    }

    #[test]
    fn pipe_discounts_sacked_bytes() {
        let (mut s, _) = established_sender();
        let outstanding = s.outstanding();
        s.on_ack(
            AckInfo {
                cumulative: 1,
                sack: vec![(1 + 1448, 2 * 1448)],
            },
            SimTime::from_ms(100.0),
        );
        assert_eq!(s.sacked_total, 2 * 1448);
        let _ = outstanding;
        assert_eq!(s.pipe_bytes(), s.outstanding() - 2 * 1448);
    }

    #[test]
    fn receiver_acks_track_in_order_point() {
        let mut r = TcpReceiver::new(FlowId(0));
        let syn = Packet::syn(FlowId(0), 0, SimTime::ZERO);
        assert_eq!(r.on_segment(&syn).cumulative, 1);
        let a = r.on_segment(&Packet::data(FlowId(0), 1, 1448, SimTime::ZERO));
        assert_eq!(a.cumulative, 1449);
        // gap: next segment out of order
        let a = r.on_segment(&Packet::data(FlowId(0), 2897, 1448, SimTime::ZERO));
        assert_eq!(a.cumulative, 1449, "duplicate ACK");
        assert_eq!(a.sack, vec![(2897, 1448)]);
        // hole fills: cumulative jumps over the buffered range
        let a = r.on_segment(&Packet::data(FlowId(0), 1449, 1448, SimTime::ZERO));
        assert_eq!(a.cumulative, 4345);
        assert!(a.sack.is_empty());
        assert_eq!(r.delivered_bytes, 3 * 1448);
    }

    #[test]
    fn receiver_coalesces_adjacent_sack_ranges() {
        let mut r = TcpReceiver::new(FlowId(0));
        r.on_segment(&Packet::syn(FlowId(0), 0, SimTime::ZERO));
        r.on_segment(&Packet::data(FlowId(0), 2897, 1448, SimTime::ZERO));
        let a = r.on_segment(&Packet::data(FlowId(0), 4345, 1448, SimTime::ZERO));
        assert_eq!(a.sack, vec![(2897, 2 * 1448)]);
    }

    #[test]
    fn receiver_ignores_duplicates_for_goodput() {
        let mut r = TcpReceiver::new(FlowId(0));
        r.on_segment(&Packet::syn(FlowId(0), 0, SimTime::ZERO));
        let seg = Packet::data(FlowId(0), 1, 1448, SimTime::ZERO);
        r.on_segment(&seg);
        r.on_segment(&seg);
        assert_eq!(r.delivered_bytes, 1448);
    }
}
