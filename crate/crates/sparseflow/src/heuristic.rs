//! The two-stage solver: progressive deactivation down to the per-item
//! budgets, then a dual-guided swap search.
//!
//! The *sparsify* stage starts from the relaxed problem and repeatedly
//! deactivates the smallest-flow inbound pairs of items that are still
//! over budget, re-solving after each batch. A batch that turns the LP
//! infeasible is rolled back and replayed one pair at a time; pairs whose
//! single deactivation is infeasible are pinned and never tried again.
//!
//! The *improve* stage ranks the fixed pairs by the reduced cost of their
//! fixing and, for each promising pair in turn, activates it, deactivates
//! the same item's smallest-flow center, and accepts the first swap that
//! strictly lowers the objective. It stops when a full candidate pass
//! yields no improvement.

use std::fmt;
use std::time::{Duration, Instant};

use crate::lp::{
    build_lp, default_iter_limit, reduced_cost_ranking, solve_lp_warm, LpSolution, LpStatus,
};
use crate::model::{
    check_solution, validate_instance, FeasibilityReport, FlowSolution, Instance, SparsePattern,
    Tolerances,
};

/// Knobs of the two-stage solver.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Deactivations attempted per sparsify batch.
    pub k1: usize,
    /// Fixed pairs examined per improve iteration.
    pub k2: usize,
    /// Safety cap on improve iterations.
    pub max_improve_iters: usize,
    pub tol: Tolerances,
}

impl SolverParams {
    /// Scale-aware defaults: `k1 = ceil(sqrt(num_items))`, `k2 = 20`.
    pub fn default_for(inst: &Instance) -> Self {
        let k1 = (inst.num_items() as f64).sqrt().ceil() as usize;
        SolverParams {
            k1: k1.max(1),
            k2: 20,
            max_improve_iters: 10_000,
            tol: Tolerances::default(),
        }
    }
}

/// Why the solver could not produce a sparse solution.
#[derive(Debug, Clone)]
pub enum SolveError {
    /// The instance data fails structural validation.
    InvalidInstance(FeasibilityReport),
    /// Even the relaxed problem has no feasible flow.
    RelaxedInfeasible { stats: SolveStats },
    /// Every deactivation candidate of some over-budget item is pinned.
    SparsifyFailed {
        stats: SolveStats,
        pinned: Vec<(usize, usize)>,
    },
    /// An LP solve stalled before reaching a certified optimum.
    SolverStalled { stats: SolveStats },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::InvalidInstance(report) => write!(f, "invalid instance: {report}"),
            SolveError::RelaxedInfeasible { .. } => {
                write!(f, "the relaxed problem is infeasible")
            }
            SolveError::SparsifyFailed { pinned, .. } => write!(
                f,
                "sparsify failed: {} pinned pair(s) block every remaining deactivation",
                pinned.len()
            ),
            SolveError::SolverStalled { .. } => write!(f, "an LP solve stalled"),
        }
    }
}

impl std::error::Error for SolveError {}

/// Counters and traces collected across the pipeline.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub sparsify_iters: usize,
    pub improve_iters: usize,
    pub lp_solve_count: usize,
    pub wall_time: Duration,
    /// Objective after the relaxed solve and after each sparsify batch.
    pub sparsify_trace: Vec<f64>,
    /// Objective entering improve and after each accepted swap.
    pub improve_trace: Vec<f64>,
}

/// A sparse solution together with the bound and counters that produced it.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: FlowSolution,
    pub pattern: SparsePattern,
    /// Objective of the relaxed problem, a lower bound on the optimum.
    pub relaxed_bound: f64,
    pub stats: SolveStats,
}

/// Result of the sparsify stage.
#[derive(Debug, Clone)]
pub struct SparsifyOutcome {
    pub pattern: SparsePattern,
    pub lp: LpSolution,
    pub relaxed_objective: f64,
    pub iterations: usize,
    pub lp_solves: usize,
    /// Objective after the relaxed solve and after each batch.
    pub trace: Vec<f64>,
    pub pinned: Vec<(usize, usize)>,
}

/// Result of the improve stage.
#[derive(Debug, Clone)]
pub struct ImproveOutcome {
    pub pattern: SparsePattern,
    pub lp: LpSolution,
    pub iterations: usize,
    pub lp_solves: usize,
    /// Objective entering the stage and after each accepted swap.
    pub trace: Vec<f64>,
}

fn solve_pattern(
    inst: &Instance,
    pattern: &SparsePattern,
    params: &SolverParams,
    warm: Option<&crate::lp::Basis>,
) -> LpSolution {
    let problem = build_lp(inst, pattern.clone()).expect("pattern shaped for instance");
    let limit = default_iter_limit(problem.num_rows());
    solve_lp_warm(&problem, &params.tol, limit, warm)
}

/// Progressively deactivates smallest-flow pairs of over-budget items until
/// every item is within budget.
pub fn sparsify(inst: &Instance, params: &SolverParams) -> Result<SparsifyOutcome, SolveError> {
    assert!(params.k1 >= 1, "k1 must be at least 1");
    let report = validate_instance(inst);
    if !report.feasible() {
        return Err(SolveError::InvalidInstance(report));
    }

    let mut lp_solves = 0usize;
    let mut pattern = SparsePattern::all_active(inst.num_centers(), inst.num_items());
    let relaxed = solve_pattern(inst, &pattern, params, None);
    lp_solves += 1;
    match relaxed.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(SolveError::RelaxedInfeasible {
                stats: stats_of_sparsify(0, lp_solves, &[]),
            })
        }
        _ => {
            return Err(SolveError::SolverStalled {
                stats: stats_of_sparsify(0, lp_solves, &[]),
            })
        }
    }
    let relaxed_objective = relaxed.objective;
    let mut current = relaxed;
    let mut trace = vec![relaxed_objective];
    let mut pinned: Vec<(usize, usize)> = Vec::new();
    let mut iterations = 0usize;

    loop {
        let over_budget: Vec<usize> = (0..inst.num_items())
            .filter(|&i| pattern.active_count(i) > inst.sparsity(i))
            .collect();
        if over_budget.is_empty() {
            return Ok(SparsifyOutcome {
                pattern,
                lp: current,
                relaxed_objective,
                iterations,
                lp_solves,
                trace,
                pinned,
            });
        }

        // Candidates come only from over-budget items; pinned pairs are off
        // limits. An over-budget item with nothing left to deactivate is a
        // dead end.
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for &i in &over_budget {
            let mut available = 0usize;
            for u in 0..inst.num_centers() {
                if pattern.is_inactive(u, i) || pinned.contains(&(u, i)) {
                    continue;
                }
                available += 1;
                candidates.push((current.y_at(u, i), i, u));
            }
            if available == 0 {
                return Err(SolveError::SparsifyFailed {
                    stats: stats_of_sparsify(iterations, lp_solves, &trace),
                    pinned,
                });
            }
        }
        candidates.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("flows are finite")
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        // Up to k1 smallest flows, never driving an item below budget
        // within one batch.
        let mut allowance: Vec<usize> = (0..inst.num_items())
            .map(|i| pattern.active_count(i).saturating_sub(inst.sparsity(i)))
            .collect();
        let mut batch: Vec<(usize, usize)> = Vec::new();
        for &(_, i, u) in &candidates {
            if batch.len() == params.k1 {
                break;
            }
            if allowance[i] > 0 {
                allowance[i] -= 1;
                batch.push((u, i));
            }
        }
        iterations += 1;

        let mut trial_pattern = pattern.clone();
        for &(u, i) in &batch {
            trial_pattern.deactivate(u, i);
        }
        let trial = solve_pattern(inst, &trial_pattern, params, current.basis().as_deref());
        lp_solves += 1;
        if trial.is_optimal() {
            pattern = trial_pattern;
            current = trial;
        } else {
            // Roll the batch back and replay it pair by pair, pinning the
            // pairs that cannot be deactivated on their own.
            for &(u, i) in &batch {
                let mut single = pattern.clone();
                single.deactivate(u, i);
                let trial = solve_pattern(inst, &single, params, current.basis().as_deref());
                lp_solves += 1;
                if trial.is_optimal() {
                    pattern = single;
                    current = trial;
                } else {
                    pinned.push((u, i));
                }
            }
        }
        trace.push(current.objective);
    }
}

fn stats_of_sparsify(iterations: usize, lp_solves: usize, trace: &[f64]) -> SolveStats {
    SolveStats {
        sparsify_iters: iterations,
        lp_solve_count: lp_solves,
        sparsify_trace: trace.to_vec(),
        ..SolveStats::default()
    }
}

/// Picks the deactivation partner for a swap: the active pair of `item`
/// with the smallest inbound flow. On exact flow ties the just-activated
/// center loses, then the smaller center index wins.
fn deactivation_target(
    sol: &LpSolution,
    pattern: &SparsePattern,
    item: usize,
    activated: usize,
) -> usize {
    let mut best: Option<(f64, bool, usize)> = None;
    for u in 0..pattern.num_centers() {
        if pattern.is_inactive(u, item) {
            continue;
        }
        let key = (sol.y_at(u, item), u == activated, u);
        match &best {
            None => best = Some(key),
            Some(current) => {
                let better = key.0 < current.0
                    || (key.0 == current.0
                        && (!key.1 && current.1 || (key.1 == current.1 && key.2 < current.2)));
                if better {
                    best = Some(key);
                }
            }
        }
    }
    best.expect("item keeps at least one active center").2
}

/// Dual-guided swap search from a sparse starting point.
///
/// # Panics
///
/// Panics when the starting pattern is not sparse or its LP solution is
/// not optimal; both are contract violations.
pub fn improve(
    inst: &Instance,
    start: (SparsePattern, LpSolution),
    params: &SolverParams,
) -> ImproveOutcome {
    assert!(params.k2 >= 1, "k2 must be at least 1");
    let (mut pattern, mut current) = start;
    assert!(pattern.is_sparse(inst), "improve requires a sparse start");
    assert!(current.is_optimal(), "improve requires an optimal start");

    let mut trace = vec![current.objective];
    let mut lp_solves = 0usize;
    let mut iterations = 0usize;

    while iterations < params.max_improve_iters {
        iterations += 1;
        let candidates = reduced_cost_ranking(&current, params.k2);
        let threshold = current.objective - params.tol.improvement_at(current.objective);
        let mut improved = false;

        for (u, i) in candidates {
            // Activate the candidate and re-solve the one-pair relaxation.
            let mut relaxed_pattern = pattern.clone();
            relaxed_pattern.activate(u, i);
            let relaxed = solve_pattern(inst, &relaxed_pattern, params, current.basis().as_deref());
            lp_solves += 1;
            if !relaxed.is_optimal() {
                continue;
            }

            let target = deactivation_target(&relaxed, &relaxed_pattern, i, u);
            if target == u {
                // Deactivating the pair we just activated is a no-op.
                continue;
            }
            let mut swapped_pattern = relaxed_pattern;
            swapped_pattern.deactivate(target, i);
            let swapped =
                solve_pattern(inst, &swapped_pattern, params, relaxed.basis().as_deref());
            lp_solves += 1;
            if !swapped.is_optimal() {
                continue;
            }
            if swapped.objective < threshold {
                pattern = swapped_pattern;
                current = swapped;
                trace.push(current.objective);
                improved = true;
                break;
            }
        }

        if !improved {
            break;
        }
    }

    ImproveOutcome {
        pattern,
        lp: current,
        iterations,
        lp_solves,
        trace,
    }
}

/// Full pipeline: relaxed solve, sparsify, improve.
pub fn solve(inst: &Instance, params: &SolverParams) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let sparsified = sparsify(inst, params).map_err(|mut err| {
        if let SolveError::RelaxedInfeasible { stats }
        | SolveError::SparsifyFailed { stats, .. }
        | SolveError::SolverStalled { stats } = &mut err
        {
            stats.wall_time = started.elapsed();
        }
        err
    })?;
    let SparsifyOutcome {
        pattern,
        lp,
        relaxed_objective,
        iterations: sparsify_iters,
        lp_solves: sparsify_solves,
        trace: sparsify_trace,
        pinned: _,
    } = sparsified;

    let improved = improve(inst, (pattern, lp), params);

    let stats = SolveStats {
        sparsify_iters,
        improve_iters: improved.iterations,
        lp_solve_count: sparsify_solves + improved.lp_solves,
        wall_time: started.elapsed(),
        sparsify_trace,
        improve_trace: improved.trace,
    };

    let solution = improved.lp.to_flow_solution();
    debug_assert!(
        check_solution(inst, &solution, &params.tol)
            .map(|report| report.feasible())
            .unwrap_or(false),
        "pipeline produced an infeasible solution"
    );

    Ok(SolveResult {
        solution,
        pattern: improved.pattern,
        relaxed_bound: relaxed_objective,
        stats,
    })
}
