//! Ground-truth solvers at small scale.
//!
//! [`solve_exact_enum`] walks every way of choosing exactly `s_i` active
//! centers per item, solves the LP of each pattern, and keeps the best;
//! smaller supports are contained in some full-size support, so this
//! enumeration is exhaustive. [`solve_exact_bnb`] branches on individual
//! (center, item) activation decisions instead, bounding each node by the
//! LP of its inactive fixings (valid because adding fixings never lowers
//! the optimum) and seeding the incumbent with the two-stage heuristic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::{Duration, Instant};

use crate::heuristic::{self, SolveError, SolverParams};
use crate::lp::{build_lp, default_iter_limit, solve_lp_warm, Basis, LpStatus};
use crate::model::{
    check_solution, pattern_of, validate_instance, FeasibilityReport, FlowSolution, Instance,
    SparsePattern, Tolerances,
};

/// A proven (or budget-limited) exact solution.
#[derive(Debug, Clone)]
pub struct ExactResult {
    pub objective: f64,
    pub pattern: SparsePattern,
    pub solution: FlowSolution,
    /// Patterns enumerated, or branch-and-bound nodes expanded.
    pub node_count: u64,
    /// False when a node or time budget cut the search short.
    pub proven_optimal: bool,
}

#[derive(Debug, Clone)]
pub enum ExactError {
    InvalidInstance(FeasibilityReport),
    /// The enumeration pre-check failed; carries the computed pattern count.
    PatternLimitExceeded { count: u128 },
    /// No deactivation pattern admits a feasible flow.
    Infeasible,
    /// The budget ran out before any feasible solution was found.
    NoSolution,
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::InvalidInstance(report) => write!(f, "invalid instance: {report}"),
            ExactError::PatternLimitExceeded { count } => {
                write!(f, "{count} patterns exceed the enumeration limit")
            }
            ExactError::Infeasible => write!(f, "no sparse pattern is feasible"),
            ExactError::NoSolution => write!(f, "search budget exhausted with no solution"),
        }
    }
}

impl std::error::Error for ExactError {}

/// Node and wall-clock budgets for branch-and-bound.
#[derive(Debug, Clone, Default)]
pub struct BnbBudget {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

/// Binomial coefficient, saturating at `u128::MAX`.
fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for step in 0..k {
        result = match result.checked_mul((n - step) as u128) {
            Some(v) => v / (step as u128 + 1),
            None => return u128::MAX,
        };
    }
    result
}

/// Number of patterns [`solve_exact_enum`] would visit.
pub fn enumeration_size(inst: &Instance) -> u128 {
    (0..inst.num_items()).fold(1u128, |acc, i| {
        acc.saturating_mul(binomial(
            inst.num_centers(),
            inst.sparsity(i).min(inst.num_centers()),
        ))
    })
}

/// Lexicographic walk over k-subsets of 0..n.
struct Combinations {
    n: usize,
    indices: Vec<usize>,
    started: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            indices: (0..k).collect(),
            started: false,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if !self.started {
            self.started = true;
            return Some(&self.indices);
        }
        let k = self.indices.len();
        if k == 0 {
            return None;
        }
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if self.indices[pos] < self.n - (k - pos) {
                self.indices[pos] += 1;
                for later in pos + 1..k {
                    self.indices[later] = self.indices[later - 1] + 1;
                }
                return Some(&self.indices);
            }
        }
        None
    }
}

/// Exhaustive minimum over all full-size active sets.
///
/// Refuses to run when the pattern count exceeds `pattern_limit`.
pub fn solve_exact_enum(inst: &Instance, pattern_limit: u64) -> Result<ExactResult, ExactError> {
    let report = validate_instance(inst);
    if !report.feasible() {
        return Err(ExactError::InvalidInstance(report));
    }
    let count = enumeration_size(inst);
    if count > pattern_limit as u128 {
        return Err(ExactError::PatternLimitExceeded { count });
    }

    let tol = Tolerances::default();
    let ni = inst.num_items();
    let nu = inst.num_centers();

    // Materialize each item's active-set choices once, then run an
    // odometer over them.
    let mut choices: Vec<Vec<Vec<usize>>> = Vec::with_capacity(ni);
    for i in 0..ni {
        let k = inst.sparsity(i).min(nu);
        let mut sets = Vec::new();
        let mut combos = Combinations::new(nu, k);
        while let Some(active) = combos.next() {
            sets.push(active.to_vec());
        }
        choices.push(sets);
    }

    let mut pick = vec![0usize; ni];
    let mut best: Option<(f64, SparsePattern, FlowSolution)> = None;
    let mut enumerated: u64 = 0;
    let mut warm: Option<std::sync::Arc<Basis>> = None;

    loop {
        let mut pattern = SparsePattern::all_active(nu, ni);
        for (i, &choice) in pick.iter().enumerate() {
            let active = &choices[i][choice];
            for u in 0..nu {
                if !active.contains(&u) {
                    pattern.deactivate(u, i);
                }
            }
        }
        enumerated += 1;

        let problem = build_lp(inst, pattern.clone()).expect("pattern shaped for instance");
        let sol = solve_lp_warm(
            &problem,
            &tol,
            default_iter_limit(problem.num_rows()),
            warm.as_deref(),
        );
        if sol.status == LpStatus::Optimal {
            warm = sol.basis();
            let is_better = match &best {
                None => true,
                Some((obj, _, _)) => sol.objective < *obj,
            };
            if is_better {
                best = Some((sol.objective, pattern, sol.to_flow_solution()));
            }
        }

        // Advance the odometer, last item fastest.
        let mut slot = ni;
        loop {
            if slot == 0 {
                match best {
                    Some((objective, pattern, solution)) => {
                        debug_assert!(check_solution(inst, &solution, &tol)
                            .map(|r| r.feasible())
                            .unwrap_or(false));
                        return Ok(ExactResult {
                            objective,
                            pattern,
                            solution,
                            node_count: enumerated,
                            proven_optimal: true,
                        });
                    }
                    None => return Err(ExactError::Infeasible),
                }
            }
            slot -= 1;
            pick[slot] += 1;
            if pick[slot] < choices[slot].len() {
                break;
            }
            pick[slot] = 0;
        }
    }
}

/// Total strict ordering for bound values in the node queue.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Bound(f64);

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Node {
    inactive: SparsePattern,
    /// Pairs that may no longer be deactivated, flattened `u * ni + i`.
    locked: Vec<bool>,
    bound: f64,
    /// Inbound flows of the node LP when already known (a locked-active
    /// child shares its parent's LP, so re-solving would be wasted work).
    known_lp: Option<KnownLp>,
}

struct KnownLp {
    objective: f64,
    y: Vec<f64>,
}

/// Cheapest way to serve one item from at most `budget` of its allowed
/// centers, ignoring capacities: the item-wise enumeration of size-budget
/// subsets. Returns the bound and a subset attaining it (lexicographically
/// first on ties), or an unbounded cost when the item cannot be served.
/// Gives up (returning zero and no subset) when the enumeration would be
/// larger than `limit` subsets.
fn item_subset_bound(
    inst: &Instance,
    item: usize,
    active: &[usize],
    limit: u128,
) -> (f64, Option<Vec<usize>>) {
    let demand_total = inst.item_demand(item);
    if demand_total <= 0.0 {
        return (0.0, Some(Vec::new()));
    }
    if active.is_empty() {
        return (f64::INFINITY, None);
    }
    let k = inst.sparsity(item).min(active.len());
    if binomial(active.len(), k) > limit {
        return (0.0, None);
    }
    let nv = inst.num_zones();
    let mut best_cost = f64::INFINITY;
    let mut best_subset: Option<Vec<usize>> = None;
    let mut combos = Combinations::new(active.len(), k);
    while let Some(picked) = combos.next() {
        let mut cost = 0.0;
        for v in 0..nv {
            let z = inst.demand(v, item);
            if z > 0.0 {
                let cheapest = picked
                    .iter()
                    .map(|&slot| inst.cost(active[slot], v))
                    .fold(f64::INFINITY, f64::min);
                cost += z * cheapest;
            }
        }
        if cost < best_cost {
            best_cost = cost;
            best_subset = Some(picked.iter().map(|&slot| active[slot]).collect());
        }
    }
    (best_cost, best_subset)
}

/// Sum over items of the cheapest budget-sized supplier subset, capacities
/// ignored: a valid lower bound on the optimum under any pattern that
/// extends `pattern`. Returns `None` when some item's enumeration exceeds
/// `limit` subsets.
pub fn subset_assignment_bound(inst: &Instance, limit: u128) -> Option<f64> {
    let mut total = 0.0;
    let all: Vec<usize> = (0..inst.num_centers()).collect();
    for i in 0..inst.num_items() {
        if binomial(inst.num_centers(), inst.sparsity(i).min(inst.num_centers())) > limit {
            return None;
        }
        let (bound, _) = item_subset_bound(inst, i, &all, limit);
        if !bound.is_finite() {
            return None;
        }
        total += bound;
    }
    Some(total)
}

/// Sum of per-item subset bounds under a deactivation pattern; a valid
/// lower bound on every completion of the pattern, independent of the LP.
fn assignment_bound(
    inst: &Instance,
    pattern: &SparsePattern,
    cache: &mut std::collections::HashMap<(usize, Vec<usize>), f64>,
) -> f64 {
    let mut total = 0.0;
    for i in 0..inst.num_items() {
        let active: Vec<usize> = (0..inst.num_centers())
            .filter(|&u| !pattern.is_inactive(u, i))
            .collect();
        let key = (i, active.clone());
        let bound = match cache.get(&key) {
            Some(&b) => b,
            None => {
                let (b, _) = item_subset_bound(inst, i, &active, 100_000);
                cache.insert(key, b);
                b
            }
        };
        if !bound.is_finite() {
            return f64::INFINITY;
        }
        total += bound;
    }
    total
}

/// Branch-and-bound over activation decisions, best bound first.
///
/// Every node is bounded below by the LP of its inactive fixings; a node
/// whose LP support already satisfies every budget is a feasible solution.
/// Branching picks, within the most over-budget item, the undecided
/// flowing pair whose share of the item's largest inbound flow is closest
/// to one half.
pub fn solve_exact_bnb(inst: &Instance, budget: &BnbBudget) -> Result<ExactResult, ExactError> {
    let started = Instant::now();
    let report = validate_instance(inst);
    if !report.feasible() {
        return Err(ExactError::InvalidInstance(report));
    }
    let tol = Tolerances::default();
    let nu = inst.num_centers();
    let ni = inst.num_items();

    // Incumbent from the heuristic; a relaxed-infeasible instance has no
    // feasible pattern at all.
    let mut incumbent: Option<(f64, SparsePattern, FlowSolution)> =
        match heuristic::solve(inst, &SolverParams::default_for(inst)) {
            Ok(result) => Some((
                result.solution.objective,
                pattern_of(&result.solution, &tol),
                result.solution,
            )),
            Err(SolveError::RelaxedInfeasible { .. }) => return Err(ExactError::Infeasible),
            Err(SolveError::InvalidInstance(report)) => {
                return Err(ExactError::InvalidInstance(report))
            }
            Err(_) => None,
        };

    let root_pattern = SparsePattern::all_active(nu, ni);
    let root_problem = build_lp(inst, root_pattern.clone()).expect("valid root");
    let root_sol = solve_lp_warm(
        &root_problem,
        &tol,
        default_iter_limit(root_problem.num_rows()),
        None,
    );
    if root_sol.status == LpStatus::Infeasible {
        return Err(ExactError::Infeasible);
    }
    // A sparse relaxed optimum is the global optimum outright.
    if root_sol.status == LpStatus::Optimal {
        let support = pattern_of(&root_sol.to_flow_solution(), &tol);
        if support.is_sparse(inst) {
            let solution = root_sol.to_flow_solution();
            return Ok(ExactResult {
                objective: root_sol.objective,
                pattern: support,
                solution,
                node_count: 0,
                proven_optimal: true,
            });
        }
    }
    let root_basis = root_sol.basis();

    // Per-item subset bounds double as a second valid node bound and, at
    // the root, as a high-quality incumbent candidate: the union of the
    // per-item minimizers is optimal whenever capacity never binds.
    let mut bound_cache: std::collections::HashMap<(usize, Vec<usize>), f64> =
        std::collections::HashMap::new();
    {
        let all: Vec<usize> = (0..nu).collect();
        let mut candidate = SparsePattern::all_active(nu, ni);
        let mut complete = true;
        for i in 0..ni {
            match item_subset_bound(inst, i, &all, 100_000) {
                (_, Some(subset)) => {
                    for u in 0..nu {
                        if !subset.contains(&u) {
                            candidate.deactivate(u, i);
                        }
                    }
                }
                _ => {
                    complete = false;
                    break;
                }
            }
        }
        if complete && candidate.is_sparse(inst) {
            let problem = build_lp(inst, candidate).expect("valid candidate pattern");
            let sol = solve_lp_warm(
                &problem,
                &tol,
                default_iter_limit(problem.num_rows()),
                root_basis.as_deref(),
            );
            if sol.status == LpStatus::Optimal {
                let better = incumbent
                    .as_ref()
                    .map(|(best, _, _)| sol.objective < *best)
                    .unwrap_or(true);
                if better {
                    let support = pattern_of(&sol.to_flow_solution(), &tol);
                    incumbent = Some((sol.objective, support, sol.to_flow_solution()));
                }
            }
        }
    }

    let mut queue: BinaryHeap<Reverse<(Bound, u64)>> = BinaryHeap::new();
    let mut nodes: Vec<Option<Node>> = Vec::new();

    // A child never enters the queue when some item's remaining centers
    // cannot carry that item's demand on their own; the LP would only
    // discover the same thing at a higher price.
    let item_demand: Vec<f64> = (0..ni).map(|i| inst.item_demand(i)).collect();
    let capacity_plausible = |pattern: &SparsePattern| -> bool {
        (0..ni).all(|i| {
            let reachable: f64 = (0..nu)
                .filter(|&u| !pattern.is_inactive(u, i))
                .map(|u| inst.capacity(u))
                .sum();
            reachable + 1e-9 >= item_demand[i]
        })
    };

    let push = |queue: &mut BinaryHeap<Reverse<(Bound, u64)>>,
                nodes: &mut Vec<Option<Node>>,
                node: Node| {
        let id = nodes.len() as u64;
        queue.push(Reverse((Bound(node.bound), id)));
        nodes.push(Some(node));
    };
    let root_bound = root_sol
        .objective
        .max(assignment_bound(inst, &root_pattern, &mut bound_cache));
    push(
        &mut queue,
        &mut nodes,
        Node {
            inactive: root_pattern,
            locked: vec![false; nu * ni],
            bound: root_bound,
            known_lp: Some(KnownLp {
                objective: root_sol.objective,
                y: root_sol.y.clone(),
            }),
        },
    );

    let mut expanded: u64 = 0;
    let mut proven_optimal = true;

    while let Some(Reverse((Bound(bound), id))) = queue.pop() {
        if let Some(limit) = budget.node_limit {
            if expanded >= limit {
                proven_optimal = false;
                break;
            }
        }
        if let Some(limit) = budget.time_limit {
            if started.elapsed() >= limit {
                proven_optimal = false;
                break;
            }
        }
        // Best-bound order: once the smallest bound cannot beat the
        // incumbent, nothing can.
        if let Some((best_obj, _, _)) = &incumbent {
            if bound >= best_obj - tol.improvement_at(*best_obj) {
                break;
            }
        }
        let mut node = nodes[id as usize].take().expect("node placed at push");
        expanded += 1;

        // Expansion may restart after domain reductions; each pass either
        // fixes at least one more pair or branches, so the loop is bounded.
        let mut restarts = 0usize;
        'expand: loop {
            restarts += 1;
            if restarts > nu * ni + 2 {
                break 'expand;
            }

            let (objective, y, node_basis) = match node.known_lp.take() {
                Some(KnownLp { objective, y }) => (objective, y, root_basis.clone()),
                None => {
                    let problem =
                        build_lp(inst, node.inactive.clone()).expect("valid node pattern");
                    let sol = solve_lp_warm(
                        &problem,
                        &tol,
                        default_iter_limit(problem.num_rows()),
                        root_basis.as_deref(),
                    );
                    if sol.status != LpStatus::Optimal {
                        break 'expand;
                    }
                    // A within-budget support solves this whole subtree:
                    // further deactivation only costs more.
                    let support = pattern_of(&sol.to_flow_solution(), &tol);
                    if support.is_sparse(inst) {
                        let better = incumbent
                            .as_ref()
                            .map(|(best, _, _)| sol.objective < *best)
                            .unwrap_or(true);
                        if better {
                            incumbent = Some((sol.objective, support, sol.to_flow_solution()));
                        }
                        break 'expand;
                    }
                    (sol.objective, sol.y.clone(), sol.basis())
                }
            };
            if let Some((best_obj, _, _)) = &incumbent {
                if objective >= best_obj - tol.improvement_at(*best_obj) {
                    break 'expand;
                }
            }

            let flowing = |u: usize, i: usize| -> bool { y[u * ni + i] > tol.zero_tol };

            // Most over-budget item by flow support.
            let (item, excess) = (0..ni)
                .map(|i| {
                    let used = (0..nu).filter(|&u| flowing(u, i)).count();
                    (i, used.saturating_sub(inst.sparsity(i)))
                })
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("at least one item");
            if excess == 0 {
                // Cached LPs always had an over-budget support when cached;
                // kept for safety.
                break 'expand;
            }

            // Evaluate the one-pair-inactive child of every undecided
            // flowing pair of the item. Children that are infeasible,
            // already beaten by the incumbent, or capacity-implausible
            // force their pair active; children whose own support is
            // within budget are solved subtrees and also force the pair
            // active once recorded.
            let mut forced: Vec<usize> = Vec::new();
            let mut scan: Vec<(f64, f64, Vec<f64>, usize)> = Vec::new();
            for u in 0..nu {
                if !flowing(u, item)
                    || node.inactive.is_inactive(u, item)
                    || node.locked[u * ni + item]
                {
                    continue;
                }
                let mut child = node.inactive.clone();
                child.deactivate(u, item);
                if !capacity_plausible(&child) {
                    forced.push(u);
                    continue;
                }
                let subset_bound = assignment_bound(inst, &child, &mut bound_cache);
                let threshold = incumbent
                    .as_ref()
                    .map(|(best, _, _)| best - tol.improvement_at(*best))
                    .unwrap_or(f64::INFINITY);
                if subset_bound >= threshold {
                    forced.push(u);
                    continue;
                }
                let problem = build_lp(inst, child).expect("valid child pattern");
                let child_sol = solve_lp_warm(
                    &problem,
                    &tol,
                    default_iter_limit(problem.num_rows()),
                    node_basis.as_deref(),
                );
                match child_sol.status {
                    LpStatus::Infeasible => forced.push(u),
                    LpStatus::Optimal => {
                        let strengthened = child_sol.objective.max(subset_bound);
                        if strengthened >= threshold {
                            forced.push(u);
                            continue;
                        }
                        let support = pattern_of(&child_sol.to_flow_solution(), &tol);
                        if support.is_sparse(inst) {
                            incumbent = Some((
                                child_sol.objective,
                                support,
                                child_sol.to_flow_solution(),
                            ));
                            forced.push(u);
                            continue;
                        }
                        scan.push((strengthened, child_sol.objective, child_sol.y.clone(), u));
                    }
                    // A stalled child keeps the parent bound and gets
                    // solved properly if it is ever popped.
                    _ => scan.push((objective.max(subset_bound), objective, Vec::new(), u)),
                }
            }

            if !forced.is_empty() {
                for &u in &forced {
                    node.locked[u * ni + item] = true;
                }
                let locked_count = (0..nu).filter(|&u| node.locked[u * ni + item]).count();
                if locked_count > inst.sparsity(item) {
                    // More forced-active centers than the budget allows: no
                    // sparse completion exists below this node.
                    break 'expand;
                }
                if locked_count == inst.sparsity(item) {
                    // Budget exhausted: the rest of the item goes inactive.
                    for u in 0..nu {
                        if !node.locked[u * ni + item] && !node.inactive.is_inactive(u, item) {
                            node.inactive.deactivate(u, item);
                        }
                    }
                    if !capacity_plausible(&node.inactive) {
                        break 'expand;
                    }
                    node.known_lp = None;
                } else {
                    // The LP itself did not change, only the lock set.
                    node.known_lp = Some(KnownLp {
                        objective,
                        y: y.clone(),
                    });
                }
                continue 'expand;
            }

            if scan.is_empty() {
                // Every flowing pair of the item is locked; with more
                // flowing pairs than budget this subtree is hopeless.
                break 'expand;
            }

            // Branch on the strongest dichotomy: the candidate whose
            // inactive child carries the largest bound.
            let mut best = 0usize;
            for k in 1..scan.len() {
                if scan[k].0 > scan[best].0 {
                    best = k;
                }
            }
            let (child_bound, child_lp_obj, child_y, branch_u) = scan.swap_remove(best);

            let mut child_inactive = node.inactive.clone();
            child_inactive.deactivate(branch_u, item);
            push(
                &mut queue,
                &mut nodes,
                Node {
                    inactive: child_inactive,
                    locked: node.locked.clone(),
                    bound: child_bound,
                    known_lp: if child_y.is_empty() {
                        None
                    } else {
                        Some(KnownLp {
                            objective: child_lp_obj,
                            y: child_y,
                        })
                    },
                },
            );

            // The locked-active child keeps the parent LP; locking the
            // budget-th center decides the whole item.
            let locked_count = (0..nu).filter(|&u| node.locked[u * ni + item]).count();
            if locked_count < inst.sparsity(item) {
                let mut child_locked = node.locked;
                child_locked[branch_u * ni + item] = true;
                let mut child_inactive = node.inactive;
                let mut propagated = false;
                if locked_count + 1 == inst.sparsity(item) {
                    for u in 0..nu {
                        if !child_locked[u * ni + item] && !child_inactive.is_inactive(u, item) {
                            child_inactive.deactivate(u, item);
                            propagated = true;
                        }
                    }
                }
                if capacity_plausible(&child_inactive) {
                    let strengthened =
                        objective.max(assignment_bound(inst, &child_inactive, &mut bound_cache));
                    push(
                        &mut queue,
                        &mut nodes,
                        Node {
                            inactive: child_inactive,
                            locked: child_locked,
                            bound: strengthened,
                            known_lp: if propagated {
                                None
                            } else {
                                Some(KnownLp { objective, y })
                            },
                        },
                    );
                }
            }
            break 'expand;
        }
    }

    match incumbent {
        Some((objective, pattern, solution)) => {
            debug_assert!(check_solution(inst, &solution, &tol)
                .map(|r| r.feasible())
                .unwrap_or(false));
            Ok(ExactResult {
                objective,
                pattern,
                solution,
                node_count: expanded,
                proven_optimal,
            })
        }
        None => {
            if proven_optimal {
                Err(ExactError::Infeasible)
            } else {
                Err(ExactError::NoSolution)
            }
        }
    }
}
