//! Linear programs over a deactivation pattern.
//!
//! [`build_lp`] assembles the flow LP of an instance restricted to a
//! [`SparsePattern`]: inbound and outbound conservation as equality rows,
//! capacity as inequality rows, and every deactivated (center, item) pair
//! fixed to zero through variable bounds rather than extra rows. An empty
//! pattern yields the fully relaxed problem. [`solve_lp`] runs the simplex
//! engine and reports, besides the primal flows, a reduced cost for every
//! fixed inbound variable; [`reduced_cost_ranking`] orders those by how
//! promising it looks to undo the fixing.

mod simplex;

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::model::{FlowSolution, Instance, ModelError, SparsePattern, Tolerances};
use simplex::{Engine, RawStatus};

pub use simplex::Basis;

/// Outcome classification of an LP solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration_limit",
        };
        f.write_str(name)
    }
}

/// The flow LP of an instance under a deactivation pattern.
#[derive(Debug, Clone)]
pub struct LpProblem<'a> {
    inst: &'a Instance,
    pattern: SparsePattern,
}

/// Builds the LP of `inst` with every pair deactivated by `pattern` fixed
/// to zero. Fixing an inbound variable also fixes the edge flows of the
/// same (center, item) pair, which conservation would force to zero anyway.
pub fn build_lp<'a>(
    inst: &'a Instance,
    pattern: SparsePattern,
) -> Result<LpProblem<'a>, ModelError> {
    if pattern.num_centers() != inst.num_centers() {
        return Err(ModelError::ShapeMismatch {
            what: "pattern centers",
            expected: inst.num_centers(),
            got: pattern.num_centers(),
        });
    }
    if pattern.num_items() != inst.num_items() {
        return Err(ModelError::ShapeMismatch {
            what: "pattern items",
            expected: inst.num_items(),
            got: pattern.num_items(),
        });
    }
    Ok(LpProblem { inst, pattern })
}

impl<'a> LpProblem<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn pattern(&self) -> &SparsePattern {
        &self.pattern
    }

    /// True when no variable is fixed, i.e. the fully relaxed problem.
    pub fn is_relaxed(&self) -> bool {
        self.pattern.is_empty()
    }

    /// Number of structural variables: one edge flow per (center, zone,
    /// item) plus one inbound flow per (center, item).
    pub fn num_vars(&self) -> usize {
        let u = self.inst.num_centers();
        let v = self.inst.num_zones();
        let i = self.inst.num_items();
        u * v * i + u * i
    }

    /// Number of constraint rows: inbound and outbound conservation plus
    /// one capacity row per center.
    pub fn num_rows(&self) -> usize {
        let u = self.inst.num_centers();
        let v = self.inst.num_zones();
        let i = self.inst.num_items();
        u * i + v * i + u
    }

    pub(crate) fn layout(&self) -> LpLayout<'_> {
        LpLayout::new(self.inst, &self.pattern)
    }
}

/// Primal and dual information returned by the simplex engine.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Edge flows, same flattening as [`FlowSolution`].
    pub x: Vec<f64>,
    /// Inbound flows, same flattening as [`FlowSolution`].
    pub y: Vec<f64>,
    /// Minimal shipping cost; `+inf` when infeasible, `-inf` when unbounded.
    pub objective: f64,
    /// Reduced cost of each fixed inbound variable at the optimal basis,
    /// keyed by (center, item). Negative means undoing the fixing could
    /// reduce cost. Populated only for optimal solves.
    pub fixed_reduced_cost: BTreeMap<(usize, usize), f64>,
    /// Row duals at the final basis: inbound conservation rows first, then
    /// outbound conservation rows, then capacity rows.
    pub duals: Vec<f64>,
    /// Whether the final basis was re-verified feasible and priced out.
    pub certified: bool,
    pub iterations: usize,
    /// Feasibility tolerance the problem was solved with.
    pub feas_tol: f64,
    num_centers: usize,
    num_zones: usize,
    num_items: usize,
    pub(crate) basis: Option<Arc<Basis>>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn y_at(&self, u: usize, i: usize) -> f64 {
        self.y[u * self.num_items + i]
    }

    /// Copies the primal values into a standalone flow solution.
    pub fn to_flow_solution(&self) -> FlowSolution {
        FlowSolution::new(
            self.num_centers,
            self.num_zones,
            self.num_items,
            self.x.clone(),
            self.y.clone(),
            self.objective,
        )
        .expect("LP solution dimensions are consistent")
    }

    /// Shares the final basis for warm-starting related solves.
    pub fn basis(&self) -> Option<Arc<Basis>> {
        self.basis.clone()
    }
}

/// Reasonable pivot budget for a problem of the given size.
pub fn default_iter_limit(num_rows: usize) -> usize {
    100_000 + 100 * num_rows
}

/// Solves the LP from a cold start.
pub fn solve_lp(problem: &LpProblem, tol: &Tolerances, iter_limit: usize) -> LpSolution {
    solve_lp_warm(problem, tol, iter_limit, None)
}

/// Solves the LP, reusing a basis from a related solve when one is given.
///
/// A warm basis is valid whenever it comes from the same instance, no
/// matter how the two patterns differ: deactivation only moves variable
/// bounds, so the basis matrix itself stays nonsingular.
pub fn solve_lp_warm(
    problem: &LpProblem,
    tol: &Tolerances,
    iter_limit: usize,
    warm: Option<&Basis>,
) -> LpSolution {
    let layout = problem.layout();
    let engine = Engine::new(&layout, tol.feas_tol, iter_limit, warm);
    let raw = engine.solve();

    let status = match raw.status {
        RawStatus::Optimal => LpStatus::Optimal,
        RawStatus::Infeasible => LpStatus::Infeasible,
        RawStatus::Unbounded => LpStatus::Unbounded,
        RawStatus::IterationLimit => LpStatus::IterationLimit,
    };

    let inst = problem.inst;
    let (nu, nv, ni) = (inst.num_centers(), inst.num_zones(), inst.num_items());
    let nx = nu * nv * ni;
    let ny = nu * ni;

    let (x, y, objective) = match status {
        LpStatus::Optimal | LpStatus::IterationLimit => {
            let x = raw.values[..nx].to_vec();
            let y = raw.values[nx..nx + ny].to_vec();
            (x, y, raw.objective)
        }
        LpStatus::Infeasible => (vec![0.0; nx], vec![0.0; ny], f64::INFINITY),
        LpStatus::Unbounded => (vec![0.0; nx], vec![0.0; ny], f64::NEG_INFINITY),
    };

    let fixed_reduced_cost = if status == LpStatus::Optimal {
        fixed_pair_reduced_costs(inst, &problem.pattern, &layout, &raw.duals)
    } else {
        BTreeMap::new()
    };

    LpSolution {
        status,
        x,
        y,
        objective,
        fixed_reduced_cost,
        duals: raw.duals,
        certified: raw.certified,
        iterations: raw.iterations,
        feas_tol: tol.feas_tol,
        num_centers: nu,
        num_zones: nv,
        num_items: ni,
        basis: Some(Arc::new(raw.basis)),
    }
}

/// Reduced cost of each fixed inbound variable at the optimal duals.
///
/// Undoing the fixing of (u, i) lets one unit of item i enter center u and
/// ship to the cheapest zone net of that zone's dual value, paying the
/// capacity dual of u on the way in:
/// `min_v (c_uv - dual_out(v, i)) - dual_cap(u)`.
fn fixed_pair_reduced_costs(
    inst: &Instance,
    pattern: &SparsePattern,
    layout: &LpLayout<'_>,
    duals: &[f64],
) -> BTreeMap<(usize, usize), f64> {
    let mut map = BTreeMap::new();
    for (u, i) in pattern.iter_inactive() {
        let best_edge = (0..inst.num_zones())
            .map(|v| inst.cost(u, v) - duals[layout.row_out(v, i)])
            .fold(f64::INFINITY, f64::min);
        let rc = best_edge - duals[layout.row_cap(u)];
        map.insert((u, i), rc);
    }
    map
}

/// Up to `k` fixed pairs whose reduced costs promise the largest cost
/// decrease if activated, most promising first. Pairs whose reduced cost
/// is not negative beyond the solve's feasibility tolerance are excluded;
/// ties break on (item, center) ascending.
///
/// # Panics
///
/// Panics when called on a non-optimal solution.
pub fn reduced_cost_ranking(sol: &LpSolution, k: usize) -> Vec<(usize, usize)> {
    assert!(
        sol.is_optimal(),
        "reduced_cost_ranking requires an optimal LP solution, got {}",
        sol.status
    );
    let mut candidates: Vec<((usize, usize), f64)> = sol
        .fixed_reduced_cost
        .iter()
        .filter(|(_, &rc)| rc < -sol.feas_tol)
        .map(|(&pair, &rc)| (pair, rc))
        .collect();
    candidates.sort_by(|((ua, ia), rca), ((ub, ib), rcb)| {
        rca.partial_cmp(rcb)
            .expect("reduced costs are finite")
            .then(ia.cmp(ib))
            .then(ua.cmp(ub))
    });
    candidates.truncate(k);
    candidates.into_iter().map(|(pair, _)| pair).collect()
}

/// Structural description of the LP consumed by the simplex engine.
///
/// Rows are ordered: inbound conservation (center-major), outbound
/// conservation (zone-major), capacity. Columns are ordered: edge flows,
/// inbound flows, then one logical column per row. Every column carries at
/// most two matrix entries, all of them unit magnitude.
pub(crate) struct LpLayout<'a> {
    nu: usize,
    nv: usize,
    ni: usize,
    nx: usize,
    ny: usize,
    nrows: usize,
    ncols: usize,
    cost: Vec<f64>,
    fixed: Vec<bool>,
    rhs: Vec<f64>,
    cost_scale: f64,
    _marker: std::marker::PhantomData<&'a Instance>,
}

#[derive(Clone, Copy)]
pub(crate) struct ColEntries {
    pub rows: [usize; 2],
    pub vals: [f64; 2],
    pub len: usize,
}

impl<'a> LpLayout<'a> {
    pub(crate) fn new(inst: &'a Instance, pattern: &SparsePattern) -> Self {
        let (nu, nv, ni) = (inst.num_centers(), inst.num_zones(), inst.num_items());
        let nx = nu * nv * ni;
        let ny = nu * ni;
        let nrows = nu * ni + nv * ni + nu;
        let ncols = nx + ny + nrows;

        let mut cost = vec![0.0; ncols];
        let mut fixed = vec![false; ncols];
        for u in 0..nu {
            for v in 0..nv {
                let c = inst.cost(u, v);
                for i in 0..ni {
                    cost[(u * nv + v) * ni + i] = c;
                }
            }
        }
        for u in 0..nu {
            for i in 0..ni {
                if pattern.is_inactive(u, i) {
                    fixed[nx + u * ni + i] = true;
                    for v in 0..nv {
                        fixed[(u * nv + v) * ni + i] = true;
                    }
                }
            }
        }
        // Logical columns: equality rows carry a column fixed at zero, the
        // capacity rows carry a free slack.
        for r in 0..nu * ni + nv * ni {
            fixed[nx + ny + r] = true;
        }

        let mut rhs = vec![0.0; nrows];
        for v in 0..nv {
            for i in 0..ni {
                rhs[nu * ni + v * ni + i] = inst.demand(v, i);
            }
        }
        for u in 0..nu {
            rhs[nu * ni + nv * ni + u] = inst.capacity(u);
        }

        let cost_scale = 1.0 + cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));

        LpLayout {
            nu,
            nv,
            ni,
            nx,
            ny,
            nrows,
            ncols,
            cost,
            fixed,
            rhs,
            cost_scale,
            _marker: std::marker::PhantomData,
        }
    }

    pub(crate) fn nrows(&self) -> usize {
        self.nrows
    }

    pub(crate) fn ncols(&self) -> usize {
        self.ncols
    }

    pub(crate) fn cost(&self, j: usize) -> f64 {
        self.cost[j]
    }

    pub(crate) fn is_fixed(&self, j: usize) -> bool {
        self.fixed[j]
    }

    pub(crate) fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub(crate) fn cost_scale(&self) -> f64 {
        self.cost_scale
    }

    pub(crate) fn row_in(&self, u: usize, i: usize) -> usize {
        u * self.ni + i
    }

    pub(crate) fn row_out(&self, v: usize, i: usize) -> usize {
        self.nu * self.ni + v * self.ni + i
    }

    pub(crate) fn row_cap(&self, u: usize) -> usize {
        self.nu * self.ni + self.nv * self.ni + u
    }

    pub(crate) fn col(&self, j: usize) -> ColEntries {
        if j < self.nx {
            let i = j % self.ni;
            let rest = j / self.ni;
            let v = rest % self.nv;
            let u = rest / self.nv;
            ColEntries {
                rows: [self.row_in(u, i), self.row_out(v, i)],
                vals: [-1.0, 1.0],
                len: 2,
            }
        } else if j < self.nx + self.ny {
            let p = j - self.nx;
            let i = p % self.ni;
            let u = p / self.ni;
            ColEntries {
                rows: [self.row_in(u, i), self.row_cap(u)],
                vals: [1.0, 1.0],
                len: 2,
            }
        } else {
            let r = j - self.nx - self.ny;
            ColEntries {
                rows: [r, 0],
                vals: [1.0, 0.0],
                len: 1,
            }
        }
    }
}
