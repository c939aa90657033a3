//! Delay-imbalance sweep: two equal-capacity paths, the second path's
//! latency derived from the target imbalance, each point run with the
//! resequencing buffer available and disabled.

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::simcore::{run_scenario, RunOptions};
use serde::{Deserialize, Serialize};

/// One sweep point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub mdi: f64,
    pub second_path_latency_ms: f64,
    pub goodput_buffered_bps: f64,
    pub goodput_unbuffered_bps: f64,
}

#[derive(Debug, Clone)]
pub struct SweepParams {
    pub base_latency_ms: f64,
    pub capacity_mbps: f64,
    pub duration_s: f64,
    pub seed: u64,
    /// Reordering threshold for the buffered arm; the unbuffered arm
    /// disables the buffer outright.
    pub reorder_threshold: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            base_latency_ms: 25.0,
            capacity_mbps: 10.0,
            duration_s: 15.0,
            seed: 1,
            reorder_threshold: 0.15,
        }
    }
}

/// Inverts the imbalance formula: the slower path's delay that produces
/// `mdi` against `d1`.
pub fn second_path_latency(d1_ms: f64, mdi: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&mdi) {
        return Err(Error::InvalidArgument(format!(
            "imbalance {mdi} outside [0, 0.5)"
        )));
    }
    Ok(d1_ms * (0.5 + mdi) / (0.5 - mdi))
}

/// Runs the sweep. Aggregation fallback is disabled throughout (the sweep
/// exists to show where aggregation stops paying off), reordering is
/// threshold-gated in the buffered arm and off in the unbuffered arm.
pub fn mdi_sweep(params: &SweepParams, mdi_points: &[f64]) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &mdi in mdi_points {
        let d2 = second_path_latency(params.base_latency_ms, mdi)?;
        let buffered = run_arm(params, d2, params.reorder_threshold)?;
        let unbuffered = run_arm(params, d2, 0.5)?; // threshold never reached
        out.push(SweepPoint {
            mdi,
            second_path_latency_ms: d2,
            goodput_buffered_bps: buffered,
            goodput_unbuffered_bps: unbuffered,
        });
    }
    Ok(out)
}

fn run_arm(params: &SweepParams, d2_ms: f64, reorder_threshold: f64) -> Result<f64> {
    let mut cfg = ScenarioConfig::two_path(
        "mdi-sweep",
        params.capacity_mbps,
        params.capacity_mbps,
        params.base_latency_ms,
        d2_ms,
        0.0,
    );
    cfg.sim.duration = crate::time::SimTime::from_secs(params.duration_s);
    cfg.sim.seed = params.seed;
    cfg.controller.reorder_threshold = reorder_threshold;
    cfg.controller.aggregation_cutoff = 0.5; // no fallback inside the sweep
    cfg.add_tcp_flow("SRC", "DST", 0.0, params.duration_s);
    let result = run_scenario(&cfg, &RunOptions::default())?;
    Ok(result.aggregate_tcp_goodput())
}

/// CSV rendering of sweep results.
pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("mdi,second_path_latency_ms,goodput_buffered_bps,goodput_unbuffered_bps\n");
    for p in points {
        out.push_str(&format!(
            "{:.4},{:.3},{:.0},{:.0}\n",
            p.mdi, p.second_path_latency_ms, p.goodput_buffered_bps, p.goodput_unbuffered_bps
        ));
    }
    out
}
