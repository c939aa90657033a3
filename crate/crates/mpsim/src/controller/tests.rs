use super::*;
use crate::netmodel::{Link, Topology, DEFAULT_QUEUE_LIMIT};

fn mbps(m: f64) -> f64 {
    m * 1e6
}

pub(crate) fn add_link(t: &mut Topology, src: &str, dst: &str, cap_mbps: f64, latency_ms: f64) {
    t.add_node(src.into());
    t.add_node(dst.into());
    t.add_link(Link {
        src: src.into(),
        dst: dst.into(),
        capacity: mbps(cap_mbps),
        latency_ms,
        queue_limit: DEFAULT_QUEUE_LIMIT,
        loss_rate: 0.0,
    })
    .unwrap();
}

fn two_disjoint_paths() -> Topology {
    let mut t = Topology::new();
    add_link(&mut t, "S", "A", 10.0, 10.0);
    add_link(&mut t, "A", "D", 10.0, 15.0);
    add_link(&mut t, "S", "B", 10.0, 20.0);
    add_link(&mut t, "B", "D", 10.0, 30.0);
    t
}

mod mdi_metric {
    use super::*;

    #[test]
    fn balanced_paths_give_zero() {
        assert_eq!(mdi(&[25.0, 25.0]).unwrap(), 0.0);
    }

    #[test]
    fn quarter_split() {
        // 100/(100+25) - 0.5 = 0.3
        let v = mdi(&[25.0, 100.0]).unwrap();
        assert!((v - 0.3).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn one_in_six() {
        let v = mdi(&[25.0, 50.0]).unwrap();
        assert!((v - (50.0 / 75.0 - 0.5)).abs() < 1e-12);
        assert!((v - 0.1667).abs() < 1e-3); // commonly quoted as 0.17
    }

    #[test]
    fn rejects_empty_and_nonpositive() {
        assert!(mdi(&[]).is_err());
        assert!(mdi(&[25.0, 0.0]).is_err());
        assert!(mdi(&[-1.0]).is_err());
    }

    #[test]
    fn monotone_in_d_max() {
        let mut prev = -1.0;
        for d_max in [25.0, 30.0, 50.0, 120.0, 400.0] {
            let v = mdi(&[25.0, d_max]).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn power_of_two_scaling_is_bit_exact() {
        for k in [0.25f64, 0.5, 2.0, 4.0, 1024.0] {
            let base = [13.0, 77.5];
            let scaled = [base[0] * k, base[1] * k];
            assert_eq!(mdi(&base).unwrap(), mdi(&scaled).unwrap());
        }
    }
}

mod max_flow {
    use super::*;

    #[test]
    fn two_disjoint_paths_saturate() {
        let t = two_disjoint_paths();
        let paths = max_flow_paths(&t, &"S".into(), &"D".into(), 2).unwrap();
        assert_eq!(paths.len(), 2);
        let total: f64 = paths.iter().map(|p| p.allocated_rate).sum();
        assert!((total - mbps(20.0)).abs() < 1.0);
        // shortest latency first
        assert_eq!(paths[0].hops, vec!["S".into(), "A".into(), "D".into()]);
        assert!((paths[0].path_delay_ms - 25.0).abs() < 1e-9);
        assert_eq!(paths[1].hops, vec!["S".into(), "B".into(), "D".into()]);
        assert!((paths[1].path_delay_ms - 50.0).abs() < 1e-9);
    }

    #[test]
    fn max_paths_keeps_lowest_delay() {
        let t = two_disjoint_paths();
        let paths = max_flow_paths(&t, &"S".into(), &"D".into(), 1).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].hops[1], "A".into());
    }

    #[test]
    fn unreachable_sink_errors() {
        let mut t = two_disjoint_paths();
        t.add_node("Z".into());
        let err = max_flow_paths(&t, &"S".into(), &"Z".into(), 2).unwrap_err();
        assert!(matches!(err, Error::NoPath { .. }));
    }

    #[test]
    fn shared_bottleneck_needs_reverse_edges() {
        // Classic trap: greedy shortest-path routing without residual
        // (reverse) edges picks S-A-B-D first and then finds nothing,
        // yielding 1 unit instead of the true max flow of 2.
        let mut t = Topology::new();
        add_link(&mut t, "S", "A", 1.0, 1.0);
        add_link(&mut t, "A", "B", 1.0, 1.0);
        add_link(&mut t, "B", "D", 1.0, 1.0);
        add_link(&mut t, "S", "B", 1.0, 10.0);
        add_link(&mut t, "A", "D", 1.0, 10.0);
        let paths = max_flow_paths(&t, &"S".into(), &"D".into(), 8).unwrap();
        let total: f64 = paths.iter().map(|p| p.allocated_rate).sum();
        assert!((total - mbps(2.0)).abs() < 1.0, "total {total}");
    }

    #[test]
    fn decomposed_rates_respect_link_capacities() {
        let mut t = Topology::new();
        add_link(&mut t, "S", "A", 3.0, 1.0);
        add_link(&mut t, "A", "D", 2.0, 1.0);
        add_link(&mut t, "A", "B", 2.0, 2.0);
        add_link(&mut t, "B", "D", 2.0, 2.0);
        let paths = max_flow_paths(&t, &"S".into(), &"D".into(), 8).unwrap();
        // joint usage per link must not exceed its capacity
        let mut usage: std::collections::BTreeMap<(NodeId, NodeId), f64> = Default::default();
        for p in &paths {
            for (a, b) in p.segments() {
                *usage.entry((a.clone(), b.clone())).or_insert(0.0) += p.allocated_rate;
            }
        }
        for (key, used) in usage {
            let cap = t.links[&key].capacity;
            assert!(used <= cap + 1e-6, "{key:?} used {used} of {cap}");
        }
        let total: f64 = paths.iter().map(|p| p.allocated_rate).sum();
        assert!((total - mbps(3.0)).abs() < 1.0);
    }
}

mod plans {
    use super::*;

    fn path(hops: &[&str], rate_mbps: f64, delay: f64) -> CandidatePath {
        CandidatePath {
            hops: hops.iter().map(|h| NodeId::new(*h)).collect(),
            allocated_rate: mbps(rate_mbps),
            path_delay_ms: delay,
        }
    }

    #[test]
    fn symmetric_paths_split_evenly_without_buffer() {
        let plan = build_plan(
            vec![path(&["S", "A", "D"], 10.0, 25.0), path(&["S", "B", "D"], 10.0, 25.0)],
            &ControllerConfig::default(),
        )
        .unwrap();
        assert_eq!(plan.weights, vec![0.5, 0.5]);
        assert!(!plan.reorder_buffer_enabled);
        assert!(!plan.single_path_fallback());
        assert_eq!(plan.mdi, 0.0);
    }

    #[test]
    fn imbalance_above_threshold_enables_buffer() {
        let plan = build_plan(
            vec![path(&["S", "A", "D"], 10.0, 25.0), path(&["S", "B", "D"], 10.0, 100.0)],
            &ControllerConfig::default(),
        )
        .unwrap();
        assert!((plan.mdi - 0.3).abs() < 1e-12);
        assert!(plan.reorder_buffer_enabled);
        assert_eq!(plan.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn extreme_imbalance_falls_back_to_fastest_path() {
        let plan = build_plan(
            vec![path(&["S", "A", "D"], 10.0, 25.0), path(&["S", "B", "D"], 10.0, 500.0)],
            &ControllerConfig::default(),
        )
        .unwrap();
        assert!(plan.single_path_fallback());
        assert_eq!(plan.paths.len(), 1);
        assert_eq!(plan.paths[0].path_delay_ms, 25.0);
        assert_eq!(plan.weights, vec![1.0]);
        assert!(!plan.reorder_buffer_enabled);
        let gating = plan.fallback_mdi.unwrap();
        assert!((gating - (500.0 / 525.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn weights_proportional_to_rates() {
        let plan = build_plan(
            vec![path(&["S", "A", "D"], 20.0, 60.0), path(&["S", "B", "D"], 10.0, 60.0)],
            &ControllerConfig::default(),
        )
        .unwrap();
        assert!((plan.weights[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((plan.weights[1] - 1.0 / 3.0).abs() < 1e-12);
        let sum: f64 = plan.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn config_orders_thresholds() {
        let bad = ControllerConfig {
            reorder_threshold: 0.45,
            aggregation_cutoff: 0.40,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

mod polling {
    use super::*;
    use crate::packet::FlowId;

    fn stats_for(
        topo: &Topology,
        window_s: f64,
        loads: &[(&str, &str, f64)], // (src, dst, mbit sent by foreign flow)
    ) -> BTreeMap<(NodeId, NodeId), PortStats> {
        let mut stats = BTreeMap::new();
        let win = SimTime::from_secs(window_s);
        for key in topo.links.keys() {
            let mut ps = PortStats::new(win);
            for (s, d, mbit) in loads {
                if key.0.as_str() == *s && key.1.as_str() == *d {
                    let bytes = (mbit * 1e6 / 8.0) as u32;
                    ps.record_transmission(bytes, SimTime::ZERO, FlowId(99));
                }
            }
            ps.roll_to(win);
            stats.insert(key.clone(), ps);
        }
        stats
    }

    fn controller_with_plan(topo: &Topology) -> Controller {
        let demand = Demand {
            src: "S".into(),
            dst: "D".into(),
            flows: [FlowId(0)].into_iter().collect(),
        };
        let mut c = Controller::new(ControllerConfig::default(), vec![demand]);
        c.initial_plans(topo).unwrap();
        c
    }

    #[test]
    fn no_cross_traffic_is_a_fixpoint() {
        let topo = two_disjoint_paths();
        let mut c = controller_with_plan(&topo);
        let initial = c.plan_for(0).unwrap().clone();
        let stats = stats_for(&topo, 2.0, &[]);
        let changed = c.recompute_on_poll(&topo, &stats, SimTime::from_secs(2.0));
        assert!(changed.is_empty(), "plan should be unchanged");
        assert_eq!(c.plan_for(0).unwrap(), &initial);
    }

    #[test]
    fn own_traffic_does_not_starve_paths() {
        // The demand's own flow saturating both paths must not drop them.
        let topo = two_disjoint_paths();
        let mut c = controller_with_plan(&topo);
        let win = SimTime::from_secs(2.0);
        let mut stats = BTreeMap::new();
        for key in topo.links.keys() {
            let mut ps = PortStats::new(win);
            ps.record_transmission(2_500_000, SimTime::ZERO, FlowId(0)); // 20 Mbit over 2 s = full
            ps.roll_to(win);
            stats.insert(key.clone(), ps);
        }
        let changed = c.recompute_on_poll(&topo, &stats, SimTime::from_secs(2.0));
        assert!(changed.is_empty());
        assert_eq!(c.plan_for(0).unwrap().paths.len(), 2);
    }

    #[test]
    fn saturated_path_is_dropped() {
        let topo = two_disjoint_paths();
        let mut c = controller_with_plan(&topo);
        // foreign traffic fills B->D completely for the whole window
        let stats = stats_for(&topo, 2.0, &[("B", "D", 20.0)]);
        let changed = c.recompute_on_poll(&topo, &stats, SimTime::from_secs(2.0));
        assert_eq!(changed.len(), 1);
        let plan = c.plan_for(0).unwrap();
        assert_eq!(plan.paths.len(), 1);
        assert_eq!(plan.paths[0].hops[1], NodeId::new("A"));
        assert!(!plan.degraded);
        assert!(matches!(
            c.decisions.last().unwrap().reason,
            PlanReason::PathDropped { .. }
        ));
    }

    #[test]
    fn all_paths_saturated_keeps_previous_plan_degraded() {
        let topo = two_disjoint_paths();
        let mut c = controller_with_plan(&topo);
        let initial = c.plan_for(0).unwrap().clone();
        let stats = stats_for(&topo, 2.0, &[("S", "A", 20.0), ("S", "B", 20.0)]);
        c.recompute_on_poll(&topo, &stats, SimTime::from_secs(2.0));
        let plan = c.plan_for(0).unwrap();
        assert!(plan.degraded);
        assert_eq!(plan.paths, initial.paths);
        assert!(matches!(
            c.decisions.last().unwrap().reason,
            PlanReason::Degraded
        ));
    }

    #[test]
    fn dropped_path_readmitted_after_two_clean_polls() {
        let topo = two_disjoint_paths();
        let mut c = controller_with_plan(&topo);
        let congested = stats_for(&topo, 2.0, &[("B", "D", 20.0)]);
        c.recompute_on_poll(&topo, &congested, SimTime::from_secs(2.0));
        assert_eq!(c.plan_for(0).unwrap().paths.len(), 1);

        let clean = stats_for(&topo, 2.0, &[]);
        // first clean poll: still banned (hysteresis)
        c.recompute_on_poll(&topo, &clean, SimTime::from_secs(4.0));
        assert_eq!(c.plan_for(0).unwrap().paths.len(), 1);
        // second clean poll: re-admitted
        c.recompute_on_poll(&topo, &clean, SimTime::from_secs(6.0));
        assert_eq!(c.plan_for(0).unwrap().paths.len(), 2);
        assert!(c
            .decisions
            .iter()
            .any(|d| matches!(d.reason, PlanReason::PathRestored { .. })));
    }

    #[test]
    fn recomputation_is_deterministic() {
        let topo = two_disjoint_paths();
        let run = || {
            let mut c = controller_with_plan(&topo);
            let stats = stats_for(&topo, 2.0, &[("B", "D", 12.0)]);
            c.recompute_on_poll(&topo, &stats, SimTime::from_secs(2.0));
            format!("{:?}", c.plan_for(0).unwrap())
        };
        assert_eq!(run(), run());
    }
}
