//! Maximum-flow path computation.
//!
//! Augments along latency-shortest paths (Dijkstra with a min-priority
//! queue over a residual graph, using potentials so reverse edges stay
//! non-negative) until no augmenting path remains, then decomposes the
//! resulting flow into forwardable paths, shortest latency first.
//! Decomposition is what lets a `max_paths` cut keep the lowest-delay
//! paths while the total still matches the true maximum flow.

use crate::netmodel::{NodeId, Topology};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: f64,
    flow: f64,
    cost: f64, // latency in ms; reverse edges carry the negation
    is_forward: bool,
}

impl Edge {
    fn residual(&self) -> f64 {
        self.cap - self.flow
    }
}

pub(crate) struct FlowGraph {
    pub nodes: Vec<NodeId>,
    adj: Vec<Vec<usize>>, // node -> edge indices
    edges: Vec<Edge>,     // paired: edge 2k and 2k+1 are mutual reverses
}

/// A single decomposed path with its share of the maximum flow.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FlowPath {
    pub hops: Vec<NodeId>,
    pub rate: f64,
    pub delay_ms: f64,
}

impl FlowGraph {
    /// Node order is lexicographic so index-based tie-breaking matches the
    /// documented NodeId tie-breaking rule.
    pub fn from_topology(topo: &Topology) -> Self {
        let nodes: Vec<NodeId> = topo.nodes.iter().cloned().collect();
        let mut g = FlowGraph {
            adj: vec![Vec::new(); nodes.len()],
            nodes,
            edges: Vec::new(),
        };
        for link in topo.links.values() {
            if link.capacity <= EPS {
                continue;
            }
            let u = g.nodes.binary_search(&link.src).expect("node in topology");
            let v = g.nodes.binary_search(&link.dst).expect("node in topology");
            g.add_edge(u, v, link.capacity, link.latency_ms);
        }
        g
    }

    fn add_edge(&mut self, u: usize, v: usize, cap: f64, cost: f64) {
        self.adj[u].push(self.edges.len());
        self.edges.push(Edge {
            to: v,
            cap,
            flow: 0.0,
            cost,
            is_forward: true,
        });
        self.adj[v].push(self.edges.len());
        self.edges.push(Edge {
            to: u,
            cap: 0.0,
            flow: 0.0,
            cost: -cost,
            is_forward: false,
        });
    }

    /// Runs successive shortest-path augmentation to a maximum flow, then
    /// decomposes it. Returns paths ordered by (delay, hops).
    pub fn max_flow_decomposed(&mut self, src: usize, dst: usize) -> Vec<FlowPath> {
        let mut potential = vec![0.0f64; self.nodes.len()];
        loop {
            let Some((dist, prev_edge)) = self.dijkstra_residual(src, dst, &potential) else {
                break;
            };
            // bottleneck along the augmenting path
            let mut bottleneck = f64::INFINITY;
            let mut v = dst;
            while v != src {
                let e = prev_edge[v].expect("path edge");
                bottleneck = bottleneck.min(self.edges[e].residual());
                v = self.other_end(e);
            }
            if bottleneck <= EPS {
                break;
            }
            let mut v = dst;
            while v != src {
                let e = prev_edge[v].expect("path edge");
                self.edges[e].flow += bottleneck;
                self.edges[e ^ 1].flow -= bottleneck;
                v = self.other_end(e);
            }
            for (i, p) in potential.iter_mut().enumerate() {
                if dist[i].is_finite() {
                    *p += dist[i];
                }
            }
        }
        self.decompose(src, dst)
    }

    fn other_end(&self, edge: usize) -> usize {
        self.edges[edge ^ 1].to
    }

    /// Dijkstra over residual edges with reduced costs. Ties broken toward
    /// the lexicographically smaller predecessor node.
    fn dijkstra_residual(
        &self,
        src: usize,
        dst: usize,
        potential: &[f64],
    ) -> Option<(Vec<f64>, Vec<Option<usize>>)> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev_edge: Vec<Option<usize>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapEntry {
            dist: 0.0,
            node: src,
        });
        while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
            if d > dist[u] + EPS {
                continue;
            }
            for &ei in &self.adj[u] {
                let e = &self.edges[ei];
                if e.residual() <= EPS {
                    continue;
                }
                let reduced = e.cost + potential[u] - potential[e.to];
                let nd = dist[u] + reduced.max(0.0);
                let better = nd < dist[e.to] - EPS;
                let tie = (nd - dist[e.to]).abs() <= EPS
                    && prev_edge[e.to].is_some_and(|pe| u < self.other_end_of(pe));
                if better || tie {
                    dist[e.to] = nd;
                    prev_edge[e.to] = Some(ei);
                    heap.push(HeapEntry {
                        dist: nd,
                        node: e.to,
                    });
                }
            }
        }
        if dist[dst].is_finite() {
            Some((dist, prev_edge))
        } else {
            None
        }
    }

    fn other_end_of(&self, edge: usize) -> usize {
        self.edges[edge ^ 1].to
    }

    /// Peels latency-shortest paths off the flow-carrying subgraph. Flow
    /// produced by successive shortest paths is cycle-free for positive
    /// latencies, so this terminates with the full flow accounted for.
    fn decompose(&mut self, src: usize, dst: usize) -> Vec<FlowPath> {
        let mut paths = Vec::new();
        loop {
            let Some(route) = self.shortest_flow_path(src, dst) else {
                break;
            };
            let mut bottleneck = f64::INFINITY;
            for &ei in &route {
                bottleneck = bottleneck.min(self.edges[ei].flow);
            }
            if bottleneck <= EPS {
                break;
            }
            let mut hops = vec![self.nodes[src].clone()];
            let mut delay = 0.0;
            for &ei in &route {
                self.edges[ei].flow -= bottleneck;
                delay += self.edges[ei].cost;
                hops.push(self.nodes[self.edges[ei].to].clone());
            }
            paths.push(FlowPath {
                hops,
                rate: bottleneck,
                delay_ms: delay,
            });
        }
        paths
    }

    /// Dijkstra restricted to forward edges still carrying flow.
    fn shortest_flow_path(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev_edge: Vec<Option<usize>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapEntry {
            dist: 0.0,
            node: src,
        });
        while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
            if d > dist[u] + EPS {
                continue;
            }
            for &ei in &self.adj[u] {
                let e = &self.edges[ei];
                if !e.is_forward || e.flow <= EPS {
                    continue;
                }
                let nd = dist[u] + e.cost;
                let better = nd < dist[e.to] - EPS;
                let tie = (nd - dist[e.to]).abs() <= EPS
                    && prev_edge[e.to].is_some_and(|pe| u < self.other_end_of(pe));
                if better || tie {
                    dist[e.to] = nd;
                    prev_edge[e.to] = Some(ei);
                    heap.push(HeapEntry {
                        dist: nd,
                        node: e.to,
                    });
                }
            }
        }
        if !dist[dst].is_finite() {
            return None;
        }
        let mut route = Vec::new();
        let mut v = dst;
        while v != src {
            let e = prev_edge[v].expect("path edge");
            route.push(e);
            v = self.other_end_of(e);
        }
        route.reverse();
        Some(route)
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
