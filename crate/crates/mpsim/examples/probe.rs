use mpsim::harness::{self, sweep};
use mpsim::RunOptions;

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let all = which.is_empty();
    let has = |n: &str| all || which.iter().any(|w| w == n);

    for name in ["minimal", "table2-bej-haw", "table2-tok-syd"] {
        if !has(name) { continue; }
        let e = harness::run_experiment(name, &Default::default(), &RunOptions::default(), None).unwrap();
        println!("== {name}: aggregate {:.2} Mbit/s", e.summary.aggregate_goodput_bps / 1e6);
        for b in &e.summary.baselines {
            println!("   baseline[{}] {:.2} Mbit/s  ({:?})", b.path_index, b.goodput_bps / 1e6,
                b.hops.iter().map(|h| h.as_str()).collect::<Vec<_>>());
        }
        if let Some(r) = e.summary.ratio_over_best_single { println!("   ratio/best {r:.2}"); }
        if let Some(r) = e.summary.ratio_over_sum_singles { println!("   ratio/sum  {r:.2}"); }
    }

    if has("fairness") {
        let cfg = harness::load_scenario("fairness").unwrap();
        let res = mpsim::run_scenario(&cfg, &RunOptions::default()).unwrap();
        let mut per_interval = std::collections::BTreeMap::<u64, Vec<f64>>::new();
        for r in &res.metrics {
            per_interval.entry((r.time_s * 1000.0) as u64).or_default().push(r.goodput_bps);
        }
        let mut indices = vec![];
        for (t, xs) in &per_interval {
            if *t >= 2000 && *t <= 30000 && xs.iter().any(|x| *x > 0.0) {
                indices.push(mpsim::jain_index(xs).unwrap());
            }
        }
        let mean = indices.iter().sum::<f64>() / indices.len() as f64;
        println!("== fairness: mean Jain {mean:.3} over {} intervals, agg {:.2} Mbit/s",
            indices.len(), res.aggregate_tcp_goodput() / 1e6);
    }

    if has("congestion") {
        let e = harness::run_experiment("congestion", &Default::default(), &RunOptions::default(), None).unwrap();
        println!("== congestion: tcp {:.2} Mbit/s", e.result.flows[0].goodput_bps / 1e6);
        for d in &e.result.decisions {
            println!("   t={:.1}s {:?} paths={:?} degraded={}", d.time_ms / 1000.0, d.reason,
                d.plan.paths.iter().map(|p| p.hops.iter().map(|h| h.as_str()).collect::<Vec<_>>()).collect::<Vec<_>>(), d.plan.degraded);
        }
        for b in &e.summary.baselines {
            println!("   baseline[{}] {:.2} Mbit/s ({:?})", b.path_index, b.goodput_bps / 1e6,
                b.hops.iter().map(|h| h.as_str()).collect::<Vec<_>>());
        }
        for r in &e.result.metrics {
            if r.flow.0 == 0 && (r.time_s as u64) % 2 == 0 {
                println!("   t={:>2.0} goodput={:>6.2} cwnd={:>8.0}", r.time_s, r.goodput_bps / 1e6, r.cwnd_bytes.unwrap_or(0.0));
            }
        }
    }

    if has("sweep") {
        let points = sweep::mdi_sweep(&sweep::SweepParams::default(), &[0.0, 0.05, 0.15, 0.25, 0.35, 0.45]).unwrap();
        println!("== mdi sweep");
        print!("{}", sweep::sweep_to_csv(&points));
    }
}
