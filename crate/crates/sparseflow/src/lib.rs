//! Solvers for the sparse-inbound transportation problem: route per-item
//! demand from fulfillment centers to demand zones at minimum shipping
//! cost while each item is stocked in at most a budgeted number of centers.
//!
//! The crate provides:
//!
//! * [`model`] — instance and solution types, feasibility checking, and
//!   objective evaluation.
//! * [`lp`] — a bounded-variable revised simplex over deactivation
//!   patterns, including the reduced costs of fixed inbound variables.
//! * [`heuristic`] — the two-stage solver: progressive deactivation down
//!   to the per-item budgets, then dual-guided swap search.
//! * [`exact`] — ground-truth solvers at small scale: exhaustive pattern
//!   enumeration and branch-and-bound over activation decisions.
//! * [`mps`] — fixed-format MPS export of the mixed-integer formulation
//!   (and of any single LP) for interchange with external solvers.
//! * [`gen`] — a seeded synthetic instance generator.
//! * [`io`] — the JSON schema for instances and solutions.
//! * [`mod@bench`] — a benchmark harness comparing the heuristic against the
//!   exact solvers across instance grids.

pub mod bench;
pub mod exact;
pub mod gen;
pub mod heuristic;
pub mod io;
pub mod lp;
pub mod model;
pub mod mps;
