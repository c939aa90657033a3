//! Simulated datagrams. One `Packet` models either a data segment, a SYN,
//! or a (possibly duplicate) cumulative acknowledgement.

use crate::time::SimTime;
use serde::{Deserialize, Serialize};

/// Identifies a flow within a scenario. Flows are numbered in declaration
/// order by the scenario loader.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct FlowId(pub u32);

impl std::fmt::Display for FlowId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// Cumulative acknowledgement carried by a reverse-direction packet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckInfo {
    /// Next sequence number the receiver expects (cumulative ACK).
    pub cumulative: u32,
    /// Out-of-order byte ranges held above the cumulative point,
    /// `(start, len)` sorted ascending — selective-acknowledgement blocks.
    pub sack: Vec<(u32, u32)>,
}

impl AckInfo {
    pub fn plain(cumulative: u32) -> Self {
        AckInfo {
            cumulative,
            sack: Vec::new(),
        }
    }

    pub fn sacked_bytes(&self) -> u64 {
        self.sack.iter().map(|(_, len)| *len as u64).sum()
    }
}

/// A simulated datagram.
///
/// `seq`/`size` live in the sender's byte-sequence space: a data segment
/// occupies `[seq, seq + size)`, a SYN occupies one sequence unit, and a
/// pure ACK occupies none. Sequence arithmetic wraps modulo 2^32; use
/// [`seq_lt`]/[`seq_add`] rather than plain comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub flow: FlowId,
    pub seq: u32,
    /// Sequence-consuming payload bytes (0 for SYN and pure ACKs).
    pub size: u32,
    pub syn: bool,
    pub ack: Option<AckInfo>,
    pub send_time: SimTime,
    pub arrival_time: SimTime,
    /// Index of the plan path the packet was scheduled on, when multipath
    /// forwarding applies.
    pub path_taken: Option<usize>,
    /// Set on retransmissions so RTT sampling can skip them.
    pub retransmit: bool,
}

impl Packet {
    pub fn data(flow: FlowId, seq: u32, size: u32, now: SimTime) -> Self {
        Packet {
            flow,
            seq,
            size,
            syn: false,
            ack: None,
            send_time: now,
            arrival_time: SimTime::ZERO,
            path_taken: None,
            retransmit: false,
        }
    }

    pub fn syn(flow: FlowId, seq: u32, now: SimTime) -> Self {
        Packet {
            syn: true,
            ..Packet::data(flow, seq, 0, now)
        }
    }

    pub fn ack(flow: FlowId, info: AckInfo, now: SimTime) -> Self {
        Packet {
            ack: Some(info),
            ..Packet::data(flow, 0, 0, now)
        }
    }

    pub fn is_pure_ack(&self) -> bool {
        self.ack.is_some() && self.size == 0 && !self.syn
    }

    /// Sequence units consumed by this packet: SYNs take one, data takes
    /// `size`, pure ACKs take none.
    pub fn seq_units(&self) -> u32 {
        if self.syn {
            1
        } else {
            self.size
        }
    }

    /// On-wire size in bytes (payload plus link/IP/TCP framing overhead).
    pub fn wire_size(&self) -> u32 {
        self.size + WIRE_OVERHEAD_BYTES
    }
}

/// Framing overhead added to every packet on the wire. 1448-byte payloads
/// become 1500-byte packets, so goodput tops out at `capacity * 1448/1500`.
pub const WIRE_OVERHEAD_BYTES: u32 = 52;

/// Serial-number "less than" over a 32-bit wrapping sequence space.
pub fn seq_lt(a: u32, b: u32) -> bool {
    a != b && b.wrapping_sub(a) < (1 << 31)
}

/// Serial-number "less than or equal".
pub fn seq_le(a: u32, b: u32) -> bool {
    b.wrapping_sub(a) < (1 << 31)
}

/// Wrapping advance of a sequence number.
pub fn seq_add(a: u32, n: u32) -> u32 {
    a.wrapping_add(n)
}

/// Serial-number maximum.
pub fn seq_max(a: u32, b: u32) -> u32 {
    if seq_lt(a, b) {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_comparison_wraps() {
        assert!(seq_lt(u32::MAX - 10, 5)); // across the wrap point
        assert!(seq_lt(0, 1));
        assert!(!seq_lt(1, 0));
        assert!(!seq_lt(7, 7));
        assert!(seq_le(7, 7));
        assert_eq!(seq_max(u32::MAX, 3), 3);
    }

    #[test]
    fn syn_consumes_one_unit() {
        let p = Packet::syn(FlowId(0), 0, SimTime::ZERO);
        assert_eq!(p.seq_units(), 1);
        assert_eq!(p.size, 0);
    }
}
