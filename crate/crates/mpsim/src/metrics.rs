//! Per-interval measurement records, their CSV encoding, and the fairness
//! index computed over them.

use crate::error::{Error, Result};
use crate::packet::FlowId;
use serde::{Deserialize, Serialize};

/// Version tag for the metrics CSV column layout; recorded in run
/// summaries so downstream tooling can detect drift.
pub const METRICS_SCHEMA_VERSION: &str = "v1";

/// One measurement row: a time bucket and one flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// End of the measurement bucket, seconds.
    pub time_s: f64,
    pub flow: FlowId,
    /// Application-layer in-order throughput over the bucket.
    pub goodput_bps: f64,
    /// Payload delivered per plan path over the bucket.
    pub path_throughput_bps: Vec<f64>,
    /// Congestion window sample at the bucket boundary (TCP flows).
    pub cwnd_bytes: Option<f64>,
    /// Resequencer occupancy sample at the bucket boundary.
    pub reseq_occupancy: Option<usize>,
    /// Packets of this flow dropped during the bucket (queue + loss).
    pub drops: u64,
}

/// Renders records in the fixed v1 column layout. Numeric formatting is
/// pinned so identical runs produce byte-identical files.
pub fn to_csv(records: &[MetricsRecord]) -> String {
    let max_paths = records
        .iter()
        .map(|r| r.path_throughput_bps.len())
        .max()
        .unwrap_or(0);
    let mut out = String::from("time_s,flow,goodput_bps");
    for i in 0..max_paths {
        out.push_str(&format!(",path{i}_bps"));
    }
    out.push_str(",cwnd_bytes,reseq_occupancy,drops\n");
    for r in records {
        out.push_str(&format!("{:.3},{},{:.0}", r.time_s, r.flow.0, r.goodput_bps));
        for i in 0..max_paths {
            match r.path_throughput_bps.get(i) {
                Some(v) => out.push_str(&format!(",{v:.0}")),
                None => out.push(','),
            }
        }
        match r.cwnd_bytes {
            Some(c) => out.push_str(&format!(",{c:.0}")),
            None => out.push(','),
        }
        match r.reseq_occupancy {
            Some(o) => out.push_str(&format!(",{o}")),
            None => out.push(','),
        }
        out.push_str(&format!(",{}\n", r.drops));
    }
    out
}

/// Jain's fairness index, `(sum x)^2 / (n * sum x^2)`: 1 when all shares
/// are equal, `1/n` when one flow takes everything.
pub fn jain_index(throughputs: &[f64]) -> Result<f64> {
    if throughputs.is_empty() {
        return Err(Error::InvalidArgument(
            "fairness index needs at least one value".into(),
        ));
    }
    if throughputs.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "fairness index values must be non-negative".into(),
        ));
    }
    let sum: f64 = throughputs.iter().sum();
    if sum == 0.0 {
        return Err(Error::InvalidArgument(
            "fairness index needs at least one positive value".into(),
        ));
    }
    let sum_sq: f64 = throughputs.iter().map(|x| x * x).sum();
    Ok(sum * sum / (throughputs.len() as f64 * sum_sq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_shares_are_perfectly_fair() {
        assert_eq!(jain_index(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn one_winner_scores_one_over_n() {
        assert_eq!(jain_index(&[10.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn rejects_empty_all_zero_and_negative() {
        assert!(jain_index(&[]).is_err());
        assert!(jain_index(&[0.0, 0.0]).is_err());
        assert!(jain_index(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn result_is_in_unit_interval() {
        let v = jain_index(&[1.0, 3.0, 9.0]).unwrap();
        assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn csv_layout_is_stable() {
        let rows = vec![MetricsRecord {
            time_s: 1.0,
            flow: FlowId(0),
            goodput_bps: 9_650_000.0,
            path_throughput_bps: vec![4_800_000.0, 4_850_000.0],
            cwnd_bytes: Some(43_440.0),
            reseq_occupancy: Some(12),
            drops: 3,
        }];
        let csv = to_csv(&rows);
        assert_eq!(
            csv,
            "time_s,flow,goodput_bps,path0_bps,path1_bps,cwnd_bytes,reseq_occupancy,drops\n\
             1.000,0,9650000,4800000,4850000,43440,12,3\n"
        );
    }

    #[test]
    fn csv_fills_missing_optionals_with_empty_cells() {
        let rows = vec![MetricsRecord {
            time_s: 2.0,
            flow: FlowId(1),
            goodput_bps: 0.0,
            path_throughput_bps: vec![],
            cwnd_bytes: None,
            reseq_occupancy: None,
            drops: 0,
        }];
        let csv = to_csv(&rows);
        assert!(csv.ends_with("2.000,1,0,,,0\n"), "{csv}");
    }
}
