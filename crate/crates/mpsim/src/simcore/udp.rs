//! Constant-bit-rate UDP source, used as cross traffic. Packet spacing
//! carries +/-10% uniform jitter from the seeded generator so runs with
//! different seeds decorrelate.

use crate::packet::{FlowId, Packet};
use crate::time::SimTime;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug)]
pub struct UdpSource {
    pub flow: FlowId,
    /// Target payload rate, bits per second.
    target_rate: f64,
    payload: u32,
    next_seq: u32,
    pub stop: SimTime,
    pub sent_packets: u64,
}

impl UdpSource {
    pub fn new(flow: FlowId, target_rate: f64, payload: u32, stop: SimTime) -> Self {
        UdpSource {
            flow,
            target_rate,
            payload,
            next_seq: 0,
            stop,
            sent_packets: 0,
        }
    }

    /// Emits the next packet and the time to send the one after it, or
    /// `None` once the stop time has passed.
    pub fn on_send(&mut self, now: SimTime, rng: &mut ChaCha8Rng) -> Option<(Packet, SimTime)> {
        if now >= self.stop {
            return None;
        }
        let pkt = Packet::data(self.flow, self.next_seq, self.payload, now);
        self.next_seq = self.next_seq.wrapping_add(self.payload);
        self.sent_packets += 1;
        let base_interval_s = self.payload as f64 * 8.0 / self.target_rate;
        let jitter: f64 = rng.gen_range(0.9..1.1);
        let next = now + SimTime::from_secs(base_interval_s * jitter);
        Some((pkt, next))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn rate_is_respected_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut src = UdpSource::new(FlowId(0), 10e6, 1448, SimTime::from_secs(10.0));
        let mut now = SimTime::ZERO;
        let mut sent_bits = 0u64;
        while let Some((pkt, next)) = src.on_send(now, &mut rng) {
            sent_bits += pkt.size as u64 * 8;
            now = next;
        }
        let rate = sent_bits as f64 / 10.0;
        assert!((rate - 10e6).abs() < 0.05 * 10e6, "rate {rate}");
    }

    #[test]
    fn stops_at_stop_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut src = UdpSource::new(FlowId(0), 1e6, 1448, SimTime::from_secs(1.0));
        assert!(src.on_send(SimTime::from_secs(1.0), &mut rng).is_none());
        assert!(src.on_send(SimTime::from_ms(999.0), &mut rng).is_some());
    }
}
