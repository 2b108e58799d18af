//! Shared test utilities, most importantly an independent reference solver
//! for the flow LPs.
//!
//! The reference reduces a deactivation-pattern LP to a single-commodity
//! min-cost-flow problem — source to centers bounded by capacity, centers
//! to (zone, item) sinks at the edge cost when the pair is active — and
//! solves it with successive shortest paths using Bellman-Ford on the
//! residual network. Nothing here touches the simplex implementation, so
//! agreement between the two is meaningful evidence of correctness.

use sparseflow::model::{Instance, SparsePattern};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefOutcome {
    Optimal(f64),
    Infeasible,
}

struct Arc {
    to: usize,
    rev: usize,
    capacity: f64,
    cost: f64,
}

struct Network {
    arcs: Vec<Vec<Arc>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Network {
            arcs: (0..nodes).map(|_| Vec::new()).collect(),
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, capacity: f64, cost: f64) {
        let rev_from = self.arcs[to].len();
        let rev_to = self.arcs[from].len();
        self.arcs[from].push(Arc {
            to,
            rev: rev_from,
            capacity,
            cost,
        });
        self.arcs[to].push(Arc {
            to: from,
            rev: rev_to,
            capacity: 0.0,
            cost: -cost,
        });
    }

    /// Sends as much flow as possible from `source` to `sink` along
    /// successively cheapest augmenting paths. Returns (flow, cost).
    fn min_cost_max_flow(&mut self, source: usize, sink: usize) -> (f64, f64) {
        let n = self.arcs.len();
        let mut total_flow = 0.0;
        let mut total_cost = 0.0;
        loop {
            // Bellman-Ford over the residual network.
            let mut dist = vec![f64::INFINITY; n];
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
            dist[source] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for from in 0..n {
                    if !dist[from].is_finite() {
                        continue;
                    }
                    for (k, arc) in self.arcs[from].iter().enumerate() {
                        if arc.capacity > EPS && dist[from] + arc.cost < dist[arc.to] - 1e-12 {
                            dist[arc.to] = dist[from] + arc.cost;
                            parent[arc.to] = Some((from, k));
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if !dist[sink].is_finite() {
                break;
            }
            // Bottleneck along the path.
            let mut push = f64::INFINITY;
            let mut node = sink;
            while let Some((from, k)) = parent[node] {
                push = push.min(self.arcs[from][k].capacity);
                node = from;
            }
            if push <= EPS || !push.is_finite() {
                break;
            }
            let mut node = sink;
            while let Some((from, k)) = parent[node] {
                let rev = self.arcs[from][k].rev;
                self.arcs[from][k].capacity -= push;
                self.arcs[node][rev].capacity += push;
                node = from;
            }
            total_flow += push;
            total_cost += push * dist[sink];
        }
        (total_flow, total_cost)
    }
}

/// Optimal objective of the LP of `inst` restricted to `pattern`, computed
/// by min-cost flow. `Infeasible` when the network cannot carry all demand.
pub fn reference_lp_objective(inst: &Instance, pattern: &SparsePattern) -> RefOutcome {
    let nu = inst.num_centers();
    let nv = inst.num_zones();
    let ni = inst.num_items();

    // Node layout: source, centers, (zone, item) sinks, sink.
    let source = 0;
    let center0 = 1;
    let pair0 = center0 + nu;
    let sink = pair0 + nv * ni;
    let mut net = Network::new(sink + 1);

    let total_demand = inst.total_demand();
    for u in 0..nu {
        net.add_arc(source, center0 + u, inst.capacity(u), 0.0);
    }
    for v in 0..nv {
        for i in 0..ni {
            let demand = inst.demand(v, i);
            if demand > 0.0 {
                net.add_arc(pair0 + v * ni + i, sink, demand, 0.0);
            }
        }
    }
    for u in 0..nu {
        for i in 0..ni {
            if pattern.is_inactive(u, i) {
                continue;
            }
            for v in 0..nv {
                net.add_arc(
                    center0 + u,
                    pair0 + v * ni + i,
                    total_demand,
                    inst.cost(u, v),
                );
            }
        }
    }

    let (flow, cost) = net.min_cost_max_flow(source, sink);
    if (flow - total_demand).abs() > 1e-6 * (1.0 + total_demand) {
        RefOutcome::Infeasible
    } else {
        RefOutcome::Optimal(cost)
    }
}

/// Convenience: reference objective of the fully relaxed problem.
#[allow(dead_code)]
pub fn reference_relaxed_objective(inst: &Instance) -> RefOutcome {
    reference_lp_objective(
        inst,
        &SparsePattern::all_active(inst.num_centers(), inst.num_items()),
    )
}

/// Draws a uniformly random pattern with `inactive_per_item` deactivations
/// per item, using the shared SplitMix64 generator.
#[allow(dead_code)]
pub fn random_pattern(
    rng: &mut sparseflow::gen::SplitMix64,
    num_centers: usize,
    num_items: usize,
    inactive_per_item: usize,
) -> SparsePattern {
    let mut pattern = SparsePattern::all_active(num_centers, num_items);
    for i in 0..num_items {
        let mut remaining: Vec<usize> = (0..num_centers).collect();
        for _ in 0..inactive_per_item.min(num_centers) {
            let pick = rng.next_range(0, remaining.len() as u64 - 1) as usize;
            pattern.deactivate(remaining.swap_remove(pick), i);
        }
    }
    pattern
}
