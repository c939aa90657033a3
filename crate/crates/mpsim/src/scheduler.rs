//! Sending-edge Weighted Round-Robin scheduler. Packets go out in
//! per-path bursts sized in proportion to the path weights; rounding
//! remainders carry across rounds so long-run assignment fractions
//! converge to the weights exactly.

use crate::controller::MultipathPlan;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WrrState {
    weights: Vec<f64>,
    round_size: u32,
    /// Remaining packet budget per path for the current round.
    burst_quota: Vec<u32>,
    /// Fractional quota owed to (or borrowed from) each path.
    carry: Vec<f64>,
    current_path: usize,
}

pub const DEFAULT_ROUND_SIZE: u32 = 16;

impl WrrState {
    pub fn new(weights: Vec<f64>, round_size: u32) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("scheduler needs >= 1 path".into()));
        }
        if weights.iter().any(|w| *w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "scheduler weights must be positive".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "scheduler weights must sum to 1 (got {sum})"
            )));
        }
        if (round_size as usize) < weights.len() {
            return Err(Error::InvalidArgument(
                "round size must be at least the number of paths".into(),
            ));
        }
        let carry = vec![0.0; weights.len()];
        let mut state = WrrState {
            weights,
            round_size,
            burst_quota: Vec::new(),
            carry,
            current_path: 0,
        };
        state.refill();
        Ok(state)
    }

    pub fn from_plan(plan: &MultipathPlan, round_size: u32) -> Result<Self> {
        WrrState::new(plan.weights.clone(), round_size)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn round_size(&self) -> u32 {
        self.round_size
    }

    pub fn burst_quota(&self) -> &[u32] {
        &self.burst_quota
    }

    /// Path index for the next outgoing packet; advances the schedule.
    pub fn next_path(&mut self) -> usize {
        debug_assert!(self.burst_quota.iter().any(|q| *q > 0));
        while self.burst_quota[self.current_path] == 0 {
            self.advance();
        }
        let chosen = self.current_path;
        self.burst_quota[chosen] -= 1;
        if self.burst_quota.iter().all(|q| *q == 0) {
            self.refill();
        } else if self.burst_quota[chosen] == 0 {
            self.advance();
        }
        chosen
    }

    /// Installs a new weight vector; quotas and carried remainders reset,
    /// packets already in flight are unaffected.
    pub fn reconfigure(&mut self, plan: &MultipathPlan) -> Result<()> {
        let next = WrrState::new(plan.weights.clone(), self.round_size)?;
        *self = next;
        Ok(())
    }

    fn advance(&mut self) {
        self.current_path = (self.current_path + 1) % self.weights.len();
    }

    /// Largest-remainder apportionment of `round_size` packets, with the
    /// leftover fraction of each path carried into the next round. Every
    /// path is guaranteed at least one packet per round.
    fn refill(&mut self) {
        let n = self.weights.len();
        let r = self.round_size as f64;
        let exact: Vec<f64> = (0..n)
            .map(|j| self.weights[j] * r + self.carry[j])
            .collect();
        let mut quota: Vec<u32> = exact.iter().map(|e| e.max(0.0).floor() as u32).collect();
        let assigned: u32 = quota.iter().sum();

        // distribute what floor() left over, largest remainder first
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - quota[a] as f64;
            let rb = exact[b] - quota[b] as f64;
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        let mut leftover = self.round_size.saturating_sub(assigned);
        if assigned > self.round_size {
            // carried credit overflowed the round; trim from the end of
            // the remainder order (smallest remainders give back first)
            let mut excess = assigned - self.round_size;
            for &j in order.iter().rev() {
                while excess > 0 && quota[j] > 0 {
                    quota[j] -= 1;
                    excess -= 1;
                }
                if excess == 0 {
                    break;
                }
            }
        }
        for &j in &order {
            if leftover == 0 {
                break;
            }
            quota[j] += 1;
            leftover -= 1;
        }

        // no starvation: every active path sends at least once per round
        for j in 0..n {
            if quota[j] == 0 {
                let donor = (0..n).max_by_key(|&i| quota[i]).expect("nonempty");
                debug_assert!(quota[donor] > 1);
                quota[donor] -= 1;
                quota[j] += 1;
            }
        }

        for j in 0..n {
            self.carry[j] = (exact[j] - quota[j] as f64).clamp(-1.5, 1.5);
        }
        self.burst_quota = quota;
        self.current_path = 0;
    }
}
