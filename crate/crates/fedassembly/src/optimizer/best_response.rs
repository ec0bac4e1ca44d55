//! Exact integer best response: the ex-post-feasible canonical assignment
//! minimizing a linearized loss.
//!
//! Depth-first branch and bound over per-(node, class) seat counts, nodes in
//! bottom-up order so a federation's prefix-inheritance caps and overlap
//! floors are decided the moment it completes. Overlap gradient coefficients
//! are nonpositive by construction of the loss, which buys two things: the
//! overlap of a column is the per-class minimum against its best child, and
//! each edge term is bounded below by an effective per-slot gradient
//! (overlap_e never exceeds the federation's seats in classes the child
//! holds), so the greedy per-node relaxation already accounts for the edge
//! terms. Floor feasibility is propagated per edge while a federation's
//! slots are assigned, which keeps infeasible branches shallow.

use super::{LossGradient, OptimizerError};
use crate::instance::{CanonicalAssignment, Instance, NodeId};
use crate::rational::{floor_u64, rat_u64};

/// Expansion budget: beyond this many slot expansions the search reports
/// failure instead of running unbounded, mirroring how the hardest
/// instances in a sweep are recorded as non-terminating rather than
/// blocking it.
pub const SEARCH_BUDGET: u64 = 200_000_000;

struct Search<'a> {
    instance: &'a Instance,
    n: u64,
    order: Vec<NodeId>,
    /// gradient per (node, slot)
    g: Vec<Vec<f64>>,
    /// effective gradient: g plus the overlap gradients of every child edge
    /// whose child holds the slot's class
    g_eff: Vec<Vec<f64>>,
    /// overlap gradient and floor per (federation, child), grouped by fed
    fed_edges: Vec<Vec<(NodeId, f64, u64)>>,
    /// static slot caps min(class size, n)
    caps: Vec<Vec<u64>>,
    /// greedy node bound on the effective gradients, summed over the
    /// remaining order suffix
    node_bound_suffix: Vec<f64>,
    /// per node: slot indices ordered by ascending effective gradient, so
    /// the first dive of the search is the greedy completion
    slot_order: Vec<Vec<usize>>,
    /// per node, per traversal position: min effective gradient from here on
    min_g_suffix: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
    best_value: f64,
    best_counts: Option<Vec<Vec<u64>>>,
    expansions: u64,
    exhausted: bool,
}

pub fn best_response(
    gradient: &LossGradient,
    instance: &Instance,
    n: u64,
) -> Result<CanonicalAssignment, OptimizerError> {
    debug_assert!(
        gradient.overlap_coord.iter().all(|&h| h <= 1e-9),
        "overlap coefficients must be nonpositive"
    );
    let mut search = Search::new(gradient, instance, n)?;
    search.descend(0, 0.0);
    if search.exhausted {
        return Err(OptimizerError::SearchBudget { expansions: search.expansions });
    }
    match search.best_counts {
        Some(counts) => Ok(CanonicalAssignment { n, counts }),
        None => Err(OptimizerError::ExPostInfeasible),
    }
}

/// Every ex-post-feasible canonical assignment, up to `cap` of them.
pub(crate) fn enumerate_feasible(
    instance: &Instance,
    n: u64,
    cap: usize,
) -> Result<Vec<CanonicalAssignment>, OptimizerError> {
    let coord_count: usize = instance.nodes().map(|v| instance.classes_of(v).len()).sum();
    let zero = LossGradient {
        class_coord: vec![0.0; coord_count],
        overlap_coord: vec![0.0; instance.edges().len()],
    };
    let mut search = Search::new(&zero, instance, n)?;
    let mut out: Vec<CanonicalAssignment> = Vec::new();
    search.enumerate(0, &mut |counts| {
        if out.len() > cap {
            return false;
        }
        out.push(CanonicalAssignment { n, counts: counts.to_vec() });
        true
    });
    if out.len() > cap {
        return Err(OptimizerError::EnumerationCap { cap });
    }
    Ok(out)
}

impl<'a> Search<'a> {
    fn new(
        gradient: &LossGradient,
        instance: &'a Instance,
        n: u64,
    ) -> Result<Self, OptimizerError> {
        let order: Vec<NodeId> = instance.topo_bottom_up().to_vec();
        let mut g: Vec<Vec<f64>> = vec![Vec::new(); instance.node_count()];
        let mut coord = 0usize;
        for v in instance.nodes() {
            g[v.0] = gradient.class_coord[coord..coord + instance.classes_of(v).len()].to_vec();
            coord += instance.classes_of(v).len();
        }
        let edges = instance.edges();
        let mut fed_edges: Vec<Vec<(NodeId, f64, u64)>> =
            vec![Vec::new(); instance.node_count()];
        for (idx, &(f, c)) in edges.iter().enumerate() {
            let quota = instance.quota(f, c).expect("edge quota");
            let floor = floor_u64(&(rat_u64(n) * quota));
            fed_edges[f.0].push((c, gradient.overlap_coord[idx], floor));
        }
        let caps: Vec<Vec<u64>> = instance
            .nodes()
            .map(|v| {
                instance
                    .classes_of(v)
                    .iter()
                    .map(|&c| instance.class(c).size.min(n))
                    .collect()
            })
            .collect();
        for v in instance.nodes() {
            if caps[v.0].iter().sum::<u64>() < n {
                return Err(OptimizerError::ExPostInfeasible);
            }
        }

        // an edge's term h * overlap is at least h times the federation's
        // seats in classes the child holds, so it folds into the slot
        // gradients as a valid lower bound
        let g_eff: Vec<Vec<f64>> = instance
            .nodes()
            .map(|v| {
                instance
                    .classes_of(v)
                    .iter()
                    .enumerate()
                    .map(|(slot, &class)| {
                        let edge_sum: f64 = fed_edges[v.0]
                            .iter()
                            .filter(|(child, _, _)| instance.contains_class(*child, class))
                            .map(|&(_, h, _)| h)
                            .sum();
                        g[v.0][slot] + edge_sum
                    })
                    .collect()
            })
            .collect();

        // greedy relaxation per node: cheapest slots first up to their caps
        let node_bound = |v: NodeId| -> f64 {
            let mut slots: Vec<usize> = (0..g_eff[v.0].len()).collect();
            slots.sort_by(|&a, &b| {
                g_eff[v.0][a].partial_cmp(&g_eff[v.0][b]).expect("finite")
            });
            let mut remaining = n;
            let mut total = 0.0;
            for slot in slots {
                let take = remaining.min(caps[v.0][slot]);
                total += take as f64 * g_eff[v.0][slot];
                remaining -= take;
                if remaining == 0 {
                    break;
                }
            }
            total
        };
        let mut node_bound_suffix = vec![0f64; order.len() + 1];
        for pos in (0..order.len()).rev() {
            let v = order[pos];
            node_bound_suffix[pos] = node_bound_suffix[pos + 1] + node_bound(v);
        }
        let slot_order: Vec<Vec<usize>> = g_eff
            .iter()
            .map(|row| {
                let mut order: Vec<usize> = (0..row.len()).collect();
                order.sort_by(|&a, &b| row[a].partial_cmp(&row[b]).expect("finite"));
                order
            })
            .collect();
        // ascending traversal order makes the suffix minimum the current slot
        let min_g_suffix: Vec<Vec<f64>> = g_eff
            .iter()
            .zip(&slot_order)
            .map(|(row, order)| {
                let mut suffix = vec![f64::INFINITY; row.len() + 1];
                for (i, &phys) in order.iter().enumerate() {
                    suffix[i] = row[phys];
                }
                suffix
            })
            .collect();
        let counts = instance
            .nodes()
            .map(|v| vec![0u64; instance.classes_of(v).len()])
            .collect();
        Ok(Search {
            instance,
            n,
            order,
            g,
            g_eff,
            fed_edges,
            caps,
            node_bound_suffix,
            min_g_suffix,
            counts,
            slot_order,
            best_value: f64::INFINITY,
            best_counts: None,
            expansions: 0,
            exhausted: false,
        })
    }

    /// Per-node search state, rebuilt each time the search enters a node:
    /// inheritance caps per slot, their suffix sums, and per-edge overlap
    /// tracking against the already-fixed children.
    /// Per-node search state, rebuilt each time the search enters the node.
    /// All arrays are indexed by traversal position (ascending effective
    /// gradient), not by physical slot.
    fn expand(&self, v: NodeId) -> NodeExpansion {
        let order = &self.slot_order[v.0];
        let num_slots = order.len();
        let slot_caps: Vec<u64> = order
            .iter()
            .map(|&phys| {
                let static_cap = self.caps[v.0][phys];
                if self.instance.is_leaf(v) {
                    return static_cap;
                }
                // prefix inheritance: a federation's seats in a class cannot
                // exceed the best already-assigned child count for it
                let class = self.instance.classes_of(v)[phys];
                let max_child = self
                    .instance
                    .children(v)
                    .iter()
                    .filter_map(|&c| {
                        self.instance.class_slot(c, class).map(|s| self.counts[c.0][s])
                    })
                    .max()
                    .unwrap_or(0);
                static_cap.min(max_child)
            })
            .collect();
        let mut cap_suffix = vec![0u64; num_slots + 1];
        for slot in (0..num_slots).rev() {
            cap_suffix[slot] = cap_suffix[slot + 1] + slot_caps[slot];
        }
        let edges = self.fed_edges[v.0]
            .iter()
            .map(|&(child, h, floor)| {
                let child_counts: Vec<u64> = order
                    .iter()
                    .map(|&phys| {
                        let class = self.instance.classes_of(v)[phys];
                        self.instance
                            .class_slot(child, class)
                            .map(|s| self.counts[child.0][s])
                            .unwrap_or(0)
                    })
                    .collect();
                let mut suffix = vec![0u64; num_slots + 1];
                for slot in (0..num_slots).rev() {
                    suffix[slot] = suffix[slot + 1] + child_counts[slot];
                }
                EdgeState { h, floor, child_counts, suffix }
            })
            .collect();
        NodeExpansion { slot_caps, cap_suffix, edges }
    }

    fn descend(&mut self, pos: usize, value: f64) {
        if pos == self.order.len() {
            if value < self.best_value - 1e-12 {
                self.best_value = value;
                self.best_counts = Some(self.counts.clone());
            }
            return;
        }
        let expansion = self.expand(self.order[pos]);
        let mut overlaps = vec![0u64; expansion.edges.len()];
        self.descend_slots(pos, 0, self.n, value, 0.0, &expansion, &mut overlaps);
    }

    /// `value` carries the exact objective of everything completed so far;
    /// `edge_lb` underestimates the current node's eventual edge terms for
    /// the slots already assigned, so `value + edge_lb` plus the effective
    /// suffix relaxations is a valid lower bound.
    #[allow(clippy::too_many_arguments)]
    fn descend_slots(
        &mut self,
        pos: usize,
        slot: usize,
        remaining: u64,
        value: f64,
        edge_lb: f64,
        expansion: &NodeExpansion,
        overlaps: &mut Vec<u64>,
    ) {
        self.expansions += 1;
        if self.expansions > SEARCH_BUDGET {
            self.exhausted = true;
        }
        if self.exhausted {
            return;
        }
        let v = self.order[pos];
        let num_slots = self.g[v.0].len();
        if slot == num_slots {
            if remaining != 0 {
                return;
            }
            let mut edge_value = 0.0;
            for (overlap, edge) in overlaps.iter().zip(&expansion.edges) {
                if *overlap < edge.floor {
                    return;
                }
                edge_value += edge.h * *overlap as f64;
            }
            self.descend(pos + 1, value + edge_value);
            return;
        }

        // bound: seats left at this node each cost at least the cheapest
        // remaining effective gradient; later nodes contribute their greedy
        // relaxations, which already cover their edge terms
        let min_g = self.min_g_suffix[v.0][slot];
        let local_bound = if remaining == 0 {
            0.0
        } else if min_g.is_infinite() {
            return; // seats left but no slots left
        } else {
            remaining as f64 * min_g
        };
        let bound = value + edge_lb + local_bound + self.node_bound_suffix[pos + 1];
        if bound >= self.best_value - 1e-12 {
            return;
        }

        let phys = self.slot_order[v.0][slot];
        let cap = expansion.slot_caps[slot].min(remaining);
        let later_cap = expansion.cap_suffix[slot + 1];
        let g = self.g[v.0][phys];
        let g_eff = self.g_eff[v.0][phys];
        // larger counts first unless the effective gradient genuinely prefers
        // small ones: overlap floors are easiest to satisfy from above
        let ascending = g_eff > 0.0;
        let mut c = if ascending { 0 } else { cap };
        loop {
            let feasible_sum = remaining - c <= later_cap;
            let mut feasible_floors = feasible_sum;
            if feasible_floors {
                for (current, edge) in overlaps.iter().zip(&expansion.edges) {
                    let gain = c.min(edge.child_counts[slot]);
                    let future = (remaining - c).min(edge.suffix[slot + 1]);
                    if current + gain + future < edge.floor {
                        feasible_floors = false;
                        break;
                    }
                }
            }
            if feasible_floors {
                for (current, edge) in overlaps.iter_mut().zip(&expansion.edges) {
                    *current += c.min(edge.child_counts[slot]);
                }
                self.counts[v.0][phys] = c;
                self.descend_slots(
                    pos,
                    slot + 1,
                    remaining - c,
                    value + c as f64 * g,
                    edge_lb + c as f64 * (g_eff - g),
                    expansion,
                    overlaps,
                );
                for (current, edge) in overlaps.iter_mut().zip(&expansion.edges) {
                    *current -= c.min(edge.child_counts[slot]);
                }
            }
            if ascending {
                if c == cap {
                    break;
                }
                c += 1;
            } else {
                if c == 0 {
                    break;
                }
                c -= 1;
            }
        }
        self.counts[v.0][phys] = 0;
    }

    /// Plain feasibility enumeration; the visitor returns false to stop.
    fn enumerate(
        &mut self,
        pos: usize,
        visit: &mut dyn FnMut(&[Vec<u64>]) -> bool,
    ) -> bool {
        if pos == self.order.len() {
            return visit(&self.counts);
        }
        let expansion = self.expand(self.order[pos]);
        let mut overlaps = vec![0u64; expansion.edges.len()];
        self.enumerate_slots(pos, 0, self.n, &expansion, &mut overlaps, visit)
    }

    fn enumerate_slots(
        &mut self,
        pos: usize,
        slot: usize,
        remaining: u64,
        expansion: &NodeExpansion,
        overlaps: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[Vec<u64>]) -> bool,
    ) -> bool {
        let v = self.order[pos];
        let num_slots = self.g[v.0].len();
        if slot == num_slots {
            if remaining != 0 {
                return true;
            }
            if overlaps.iter().zip(&expansion.edges).any(|(o, e)| *o < e.floor) {
                return true;
            }
            return self.enumerate(pos + 1, visit);
        }
        let phys = self.slot_order[v.0][slot];
        let cap = expansion.slot_caps[slot].min(remaining);
        let later_cap = expansion.cap_suffix[slot + 1];
        for c in 0..=cap {
            if remaining - c > later_cap {
                continue;
            }
            let floors_reachable =
                overlaps.iter().zip(&expansion.edges).all(|(current, edge)| {
                    let gain = c.min(edge.child_counts[slot]);
                    let future = (remaining - c).min(edge.suffix[slot + 1]);
                    current + gain + future >= edge.floor
                });
            if !floors_reachable {
                continue;
            }
            for (current, edge) in overlaps.iter_mut().zip(&expansion.edges) {
                *current += c.min(edge.child_counts[slot]);
            }
            self.counts[v.0][phys] = c;
            let keep_going =
                self.enumerate_slots(pos, slot + 1, remaining - c, expansion, overlaps, visit);
            for (current, edge) in overlaps.iter_mut().zip(&expansion.edges) {
                *current -= c.min(edge.child_counts[slot]);
            }
            if !keep_going {
                self.counts[v.0][phys] = 0;
                return false;
            }
        }
        self.counts[v.0][phys] = 0;
        true
    }
}

/// Per-edge overlap tracking for one federation under expansion.
struct EdgeState {
    h: f64,
    floor: u64,
    child_counts: Vec<u64>,
    suffix: Vec<u64>,
}

struct NodeExpansion {
    slot_caps: Vec<u64>,
    cap_suffix: Vec<u64>,
    edges: Vec<EdgeState>,
}
