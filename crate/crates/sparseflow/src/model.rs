//! Problem data and solution representations.
//!
//! An [`Instance`] describes a complete bipartite fulfillment network: a set
//! of centers that receive inbound stock and ship it out, a set of demand
//! zones, per-item demands at each zone, per-center capacities, and a
//! per-item budget on how many centers the item may flow through. A
//! [`FlowSolution`] holds the per-item edge flows together with the inbound
//! flows implied by them, and [`check_solution`] verifies every constraint
//! family of the model against configurable [`Tolerances`].

use std::fmt;

/// Numerical thresholds shared by all solvers and checkers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// A flow at or below this value counts as zero when deciding which
    /// centers an item actually uses.
    pub zero_tol: f64,
    /// Maximum constraint violation accepted as feasible.
    pub feas_tol: f64,
    /// Minimum absolute objective decrease for a swap to count as an
    /// improvement. A relative component of `1e-9 * |objective|` is added
    /// on top wherever improvement is tested.
    pub improve_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero_tol: 1e-7,
            feas_tol: 1e-6,
            improve_tol: 1e-7,
        }
    }
}

impl Tolerances {
    /// Improvement threshold at the given objective scale.
    pub fn improvement_at(&self, objective: f64) -> f64 {
        self.improve_tol + 1e-9 * objective.abs()
    }
}

/// Errors raised when constructing or combining model data of the wrong shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    /// A data vector or matrix does not match the declared dimensions.
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A value that must be finite was NaN or infinite.
    NotFinite { what: &'static str },
    /// An index referred to a center, zone, or item that does not exist.
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    /// A dimension that must be positive was zero.
    EmptyDimension { what: &'static str },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ShapeMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected {expected} entries, got {got}"),
            ModelError::NotFinite { what } => write!(f, "{what} contains a non-finite value"),
            ModelError::IndexOutOfRange { what, index, limit } => {
                write!(f, "{what} index {index} out of range (limit {limit})")
            }
            ModelError::EmptyDimension { what } => write!(f, "{what} must be positive"),
        }
    }
}

impl std::error::Error for ModelError {}

/// A sparse-inbound transportation instance on a complete bipartite network.
///
/// The edge set is always the full product of centers and zones; partial
/// topologies are intentionally not representable.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    num_centers: usize,
    num_zones: usize,
    num_items: usize,
    /// Unit shipping cost per (center, zone) edge, row-major `[u][v]`.
    cost: Vec<f64>,
    /// Maximum total inbound flow per center.
    capacity: Vec<f64>,
    /// Required outbound flow per (zone, item), row-major `[v][i]`.
    demand: Vec<f64>,
    /// Maximum number of centers each item may flow through.
    sparsity: Vec<usize>,
}

impl Instance {
    /// Builds an instance from flat row-major data, validating shapes and
    /// finiteness. Value-level checks (negative data, budgets out of range)
    /// are reported by [`validate_instance`] rather than rejected here.
    pub fn new(
        num_centers: usize,
        num_zones: usize,
        num_items: usize,
        cost: Vec<f64>,
        capacity: Vec<f64>,
        demand: Vec<f64>,
        sparsity: Vec<usize>,
    ) -> Result<Self, ModelError> {
        if num_centers == 0 {
            return Err(ModelError::EmptyDimension { what: "num_centers" });
        }
        if num_zones == 0 {
            return Err(ModelError::EmptyDimension { what: "num_zones" });
        }
        if num_items == 0 {
            return Err(ModelError::EmptyDimension { what: "num_items" });
        }
        check_len("cost", &cost, num_centers * num_zones)?;
        check_len("capacity", &capacity, num_centers)?;
        check_len("demand", &demand, num_zones * num_items)?;
        if sparsity.len() != num_items {
            return Err(ModelError::ShapeMismatch {
                what: "sparsity",
                expected: num_items,
                got: sparsity.len(),
            });
        }
        Ok(Instance {
            num_centers,
            num_zones,
            num_items,
            cost,
            capacity,
            demand,
            sparsity,
        })
    }

    pub fn num_centers(&self) -> usize {
        self.num_centers
    }

    pub fn num_zones(&self) -> usize {
        self.num_zones
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Unit cost on edge (u, v).
    pub fn cost(&self, u: usize, v: usize) -> f64 {
        self.cost[u * self.num_zones + v]
    }

    pub fn capacity(&self, u: usize) -> f64 {
        self.capacity[u]
    }

    /// Demand of item i at zone v.
    pub fn demand(&self, v: usize, i: usize) -> f64 {
        self.demand[v * self.num_items + i]
    }

    /// Center budget of item i.
    pub fn sparsity(&self, i: usize) -> usize {
        self.sparsity[i]
    }

    pub fn cost_rows(&self) -> &[f64] {
        &self.cost
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacity
    }

    pub fn demand_rows(&self) -> &[f64] {
        &self.demand
    }

    pub fn sparsities(&self) -> &[usize] {
        &self.sparsity
    }

    /// Total demand over all items and zones.
    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }

    /// Total demand of a single item across zones.
    pub fn item_demand(&self, i: usize) -> f64 {
        (0..self.num_zones).map(|v| self.demand(v, i)).sum()
    }
}

fn check_len(what: &'static str, data: &[f64], expected: usize) -> Result<(), ModelError> {
    if data.len() != expected {
        return Err(ModelError::ShapeMismatch {
            what,
            expected,
            got: data.len(),
        });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::NotFinite { what });
    }
    Ok(())
}

/// Per-item sets of deactivated centers.
///
/// A center is *inactive* for an item when the solver forbids any inbound
/// flow of that item at that center. The pattern is *sparse* for item `i`
/// when at most `s_i` centers remain active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePattern {
    num_centers: usize,
    num_items: usize,
    /// Deactivation flags, `[i][u]` flattened as `i * num_centers + u`.
    inactive: Vec<bool>,
    /// Active-center count per item.
    active_count: Vec<usize>,
}

impl SparsePattern {
    /// A pattern with every center active for every item.
    pub fn all_active(num_centers: usize, num_items: usize) -> Self {
        SparsePattern {
            num_centers,
            num_items,
            inactive: vec![false; num_centers * num_items],
            active_count: vec![num_centers; num_items],
        }
    }

    /// Builds a pattern from explicit per-item inactive sets.
    pub fn from_inactive_sets(
        num_centers: usize,
        sets: &[Vec<usize>],
    ) -> Result<Self, ModelError> {
        let mut pattern = SparsePattern::all_active(num_centers, sets.len());
        for (i, set) in sets.iter().enumerate() {
            for &u in set {
                if u >= num_centers {
                    return Err(ModelError::IndexOutOfRange {
                        what: "inactive center",
                        index: u,
                        limit: num_centers,
                    });
                }
                pattern.deactivate(u, i);
            }
        }
        Ok(pattern)
    }

    pub fn num_centers(&self) -> usize {
        self.num_centers
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn is_inactive(&self, u: usize, i: usize) -> bool {
        self.inactive[i * self.num_centers + u]
    }

    /// Marks (u, i) inactive. Idempotent.
    pub fn deactivate(&mut self, u: usize, i: usize) {
        let slot = &mut self.inactive[i * self.num_centers + u];
        if !*slot {
            *slot = true;
            self.active_count[i] -= 1;
        }
    }

    /// Re-activates (u, i). Idempotent.
    pub fn activate(&mut self, u: usize, i: usize) {
        let slot = &mut self.inactive[i * self.num_centers + u];
        if *slot {
            *slot = false;
            self.active_count[i] += 1;
        }
    }

    pub fn active_count(&self, i: usize) -> usize {
        self.active_count[i]
    }

    pub fn inactive_count(&self, i: usize) -> usize {
        self.num_centers - self.active_count[i]
    }

    /// True when no center is deactivated for any item.
    pub fn is_empty(&self) -> bool {
        self.inactive.iter().all(|&b| !b)
    }

    /// True when every item keeps at most its budget of active centers.
    pub fn is_sparse(&self, inst: &Instance) -> bool {
        (0..self.num_items).all(|i| self.active_count[i] <= inst.sparsity(i))
    }

    /// Inactive center indices of one item, ascending.
    pub fn inactive_set(&self, i: usize) -> Vec<usize> {
        (0..self.num_centers)
            .filter(|&u| self.is_inactive(u, i))
            .collect()
    }

    /// All inactive pairs in (item, center) ascending order.
    pub fn iter_inactive(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_items).flat_map(move |i| {
            (0..self.num_centers)
                .filter(move |&u| self.is_inactive(u, i))
                .map(move |u| (u, i))
        })
    }

    /// True when the two patterns agree except that `self` may fix more.
    pub fn contains(&self, other: &SparsePattern) -> bool {
        self.num_centers == other.num_centers
            && self.num_items == other.num_items
            && other.iter_inactive().all(|(u, i)| self.is_inactive(u, i))
    }
}

/// Per-item edge flows plus the inbound flows implied by them.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    num_centers: usize,
    num_zones: usize,
    num_items: usize,
    /// Edge flows, `[u][v][i]` flattened as `(u * num_zones + v) * num_items + i`.
    pub x: Vec<f64>,
    /// Inbound flows, `[u][i]` flattened as `u * num_items + i`.
    pub y: Vec<f64>,
    /// Total shipping cost claimed for these flows.
    pub objective: f64,
}

impl FlowSolution {
    pub fn new(
        num_centers: usize,
        num_zones: usize,
        num_items: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        objective: f64,
    ) -> Result<Self, ModelError> {
        check_len("x", &x, num_centers * num_zones * num_items)?;
        check_len("y", &y, num_centers * num_items)?;
        if !objective.is_finite() {
            return Err(ModelError::NotFinite { what: "objective" });
        }
        Ok(FlowSolution {
            num_centers,
            num_zones,
            num_items,
            x,
            y,
            objective,
        })
    }

    /// The all-zero solution.
    pub fn zeros(num_centers: usize, num_zones: usize, num_items: usize) -> Self {
        FlowSolution {
            num_centers,
            num_zones,
            num_items,
            x: vec![0.0; num_centers * num_zones * num_items],
            y: vec![0.0; num_centers * num_items],
            objective: 0.0,
        }
    }

    pub fn num_centers(&self) -> usize {
        self.num_centers
    }

    pub fn num_zones(&self) -> usize {
        self.num_zones
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn x_at(&self, u: usize, v: usize, i: usize) -> f64 {
        self.x[(u * self.num_zones + v) * self.num_items + i]
    }

    pub fn y_at(&self, u: usize, i: usize) -> f64 {
        self.y[u * self.num_items + i]
    }

    pub fn set_x(&mut self, u: usize, v: usize, i: usize, value: f64) {
        self.x[(u * self.num_zones + v) * self.num_items + i] = value;
    }

    pub fn set_y(&mut self, u: usize, i: usize, value: f64) {
        self.y[u * self.num_items + i] = value;
    }

    fn shape_matches(&self, inst: &Instance) -> bool {
        self.num_centers == inst.num_centers()
            && self.num_zones == inst.num_zones()
            && self.num_items == inst.num_items()
    }
}

/// The constraint family a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// An item flows through more centers than its budget allows.
    Sparsity,
    /// A center receives more inbound flow than its capacity (or, for
    /// instance validation, aggregate capacity falls short of demand).
    Capacity,
    /// Inbound flow of an item at a center does not equal the outbound
    /// edge flows of that item from the center.
    ConservationIn,
    /// Demand of an item at a zone is not met exactly by the edge flows.
    ConservationOut,
    /// A flow or data value is negative (or a budget is out of range).
    Nonneg,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ConstraintKind::Sparsity => "sparsity",
            ConstraintKind::Capacity => "capacity",
            ConstraintKind::ConservationIn => "conservation_in",
            ConstraintKind::ConservationOut => "conservation_out",
            ConstraintKind::Nonneg => "nonneg",
        };
        f.write_str(name)
    }
}

/// One constraint violation: which family, which indices, and by how much.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ConstraintKind,
    /// Identifying indices; empty for aggregate checks.
    pub index: Vec<usize>,
    pub magnitude: f64,
}

/// Outcome of validating an instance or checking a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.feasible() {
            return write!(f, "feasible");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for violation in &self.violations {
            writeln!(
                f,
                "  {} at {:?}: {:.6e}",
                violation.kind, violation.index, violation.magnitude
            )?;
        }
        Ok(())
    }
}

/// Checks instance data for structural defects and the aggregate capacity
/// requirement (total capacity at least total demand).
///
/// A clean report does not imply that a sparse solution exists; capacity can
/// still be too fragmented for some deactivation patterns.
pub fn validate_instance(inst: &Instance) -> FeasibilityReport {
    let mut violations = Vec::new();
    for u in 0..inst.num_centers() {
        for v in 0..inst.num_zones() {
            let c = inst.cost(u, v);
            if c < 0.0 {
                violations.push(Violation {
                    kind: ConstraintKind::Nonneg,
                    index: vec![u, v],
                    magnitude: -c,
                });
            }
        }
    }
    for u in 0..inst.num_centers() {
        let l = inst.capacity(u);
        if l < 0.0 {
            violations.push(Violation {
                kind: ConstraintKind::Nonneg,
                index: vec![u],
                magnitude: -l,
            });
        }
    }
    for v in 0..inst.num_zones() {
        for i in 0..inst.num_items() {
            let z = inst.demand(v, i);
            if z < 0.0 {
                violations.push(Violation {
                    kind: ConstraintKind::Nonneg,
                    index: vec![v, i],
                    magnitude: -z,
                });
            }
        }
    }
    for i in 0..inst.num_items() {
        let s = inst.sparsity(i);
        if s < 1 || s > inst.num_centers() {
            violations.push(Violation {
                kind: ConstraintKind::Sparsity,
                index: vec![i],
                magnitude: if s < 1 {
                    1.0
                } else {
                    (s - inst.num_centers()) as f64
                },
            });
        }
    }
    let total_capacity: f64 = inst.capacities().iter().sum();
    let total_demand = inst.total_demand();
    if total_capacity < total_demand {
        violations.push(Violation {
            kind: ConstraintKind::Capacity,
            index: vec![],
            magnitude: total_demand - total_capacity,
        });
    }
    FeasibilityReport { violations }
}

/// Verifies a solution against every constraint family of the model.
///
/// Inbound sparsity counts a center as used by an item when its inbound
/// flow exceeds `tol.zero_tol`; all other families are checked to within
/// `tol.feas_tol`.
pub fn check_solution(
    inst: &Instance,
    sol: &FlowSolution,
    tol: &Tolerances,
) -> Result<FeasibilityReport, ModelError> {
    if !sol.shape_matches(inst) {
        return Err(ModelError::ShapeMismatch {
            what: "solution",
            expected: inst.num_centers() * inst.num_zones() * inst.num_items(),
            got: sol.x.len(),
        });
    }
    let mut violations = Vec::new();

    // inbound flow sparsity
    for i in 0..inst.num_items() {
        let used = (0..inst.num_centers())
            .filter(|&u| sol.y_at(u, i) > tol.zero_tol)
            .count();
        if used > inst.sparsity(i) {
            violations.push(Violation {
                kind: ConstraintKind::Sparsity,
                index: vec![i],
                magnitude: (used - inst.sparsity(i)) as f64,
            });
        }
    }

    // inbound capacity
    for u in 0..inst.num_centers() {
        let inbound: f64 = (0..inst.num_items()).map(|i| sol.y_at(u, i)).sum();
        let excess = inbound - inst.capacity(u);
        if excess > tol.feas_tol {
            violations.push(Violation {
                kind: ConstraintKind::Capacity,
                index: vec![u],
                magnitude: excess,
            });
        }
    }

    // inbound flow conservation
    for u in 0..inst.num_centers() {
        for i in 0..inst.num_items() {
            let outgoing: f64 = (0..inst.num_zones()).map(|v| sol.x_at(u, v, i)).sum();
            let gap = (sol.y_at(u, i) - outgoing).abs();
            if gap > tol.feas_tol {
                violations.push(Violation {
                    kind: ConstraintKind::ConservationIn,
                    index: vec![u, i],
                    magnitude: gap,
                });
            }
        }
    }

    // outbound flow conservation
    for v in 0..inst.num_zones() {
        for i in 0..inst.num_items() {
            let arriving: f64 = (0..inst.num_centers()).map(|u| sol.x_at(u, v, i)).sum();
            let gap = (inst.demand(v, i) - arriving).abs();
            if gap > tol.feas_tol {
                violations.push(Violation {
                    kind: ConstraintKind::ConservationOut,
                    index: vec![v, i],
                    magnitude: gap,
                });
            }
        }
    }

    // nonnegativity of edge and inbound flows
    for u in 0..inst.num_centers() {
        for v in 0..inst.num_zones() {
            for i in 0..inst.num_items() {
                let x = sol.x_at(u, v, i);
                if x < -tol.feas_tol {
                    violations.push(Violation {
                        kind: ConstraintKind::Nonneg,
                        index: vec![u, v, i],
                        magnitude: -x,
                    });
                }
            }
        }
    }
    for u in 0..inst.num_centers() {
        for i in 0..inst.num_items() {
            let y = sol.y_at(u, i);
            if y < -tol.feas_tol {
                violations.push(Violation {
                    kind: ConstraintKind::Nonneg,
                    index: vec![u, i],
                    magnitude: -y,
                });
            }
        }
    }

    Ok(FeasibilityReport { violations })
}

/// Total shipping cost of the edge flows.
pub fn evaluate_objective(inst: &Instance, sol: &FlowSolution) -> Result<f64, ModelError> {
    if !sol.shape_matches(inst) {
        return Err(ModelError::ShapeMismatch {
            what: "solution",
            expected: inst.num_centers() * inst.num_zones() * inst.num_items(),
            got: sol.x.len(),
        });
    }
    let mut total = 0.0;
    for u in 0..inst.num_centers() {
        for v in 0..inst.num_zones() {
            let item_sum: f64 = (0..inst.num_items()).map(|i| sol.x_at(u, v, i)).sum();
            total += inst.cost(u, v) * item_sum;
        }
    }
    Ok(total)
}

/// Reads the deactivation pattern off a solution: a center is inactive for
/// an item when its inbound flow is at or below `tol.zero_tol`.
pub fn pattern_of(sol: &FlowSolution, tol: &Tolerances) -> SparsePattern {
    let mut pattern = SparsePattern::all_active(sol.num_centers(), sol.num_items());
    for u in 0..sol.num_centers() {
        for i in 0..sol.num_items() {
            if sol.y_at(u, i) <= tol.zero_tol {
                pattern.deactivate(u, i);
            }
        }
    }
    pattern
}
