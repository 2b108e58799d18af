//! Benchmark harness: heuristic versus exact solvers across a seeded grid
//! of generated instances.
//!
//! Each grid cell is one (item count, seed) pair. The harness times each
//! solver call alone (no file handling, no generation), records the
//! objectives and bounds, and derives two gaps: against the exact optimum
//! when one was computed, `100 * (heuristic - exact) / exact`, and against
//! the relaxed bound, `100 * (heuristic - bound) / bound`. Failures of
//! individual cells become status entries instead of aborting the grid.
//! Aggregates are arithmetic means per item count over the cells where the
//! quantity exists.

use std::time::Instant;

use serde::Serialize;

use crate::exact::{solve_exact_bnb, solve_exact_enum, BnbBudget, ExactError};
use crate::gen::{generate, GenConfig};
use crate::heuristic::{self, SolverParams};
use crate::model::Tolerances;

/// Which exact solver, if any, runs beside the heuristic.
#[derive(Debug, Clone)]
pub enum ExactMode {
    None,
    Enumeration { pattern_limit: u64 },
    BranchAndBound { budget: BnbBudget },
}

/// Grid specification for [`run_benchmark`].
#[derive(Debug, Clone)]
pub struct BenchGrid {
    pub num_centers: usize,
    pub num_zones: usize,
    /// Item counts, one block of cells per entry.
    pub item_counts: Vec<usize>,
    /// Seeds applied to every item count.
    pub seeds: Vec<u64>,
    pub sparsity_budget: usize,
    pub demand_min: u64,
    pub demand_max: u64,
    pub capacity_factor: f64,
    /// `None` picks the scale-aware defaults per instance.
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub tol: Tolerances,
    pub exact: ExactMode,
}

impl BenchGrid {
    pub fn new(num_centers: usize, num_zones: usize, item_counts: Vec<usize>, seeds: Vec<u64>) -> Self {
        BenchGrid {
            num_centers,
            num_zones,
            item_counts,
            seeds,
            sparsity_budget: 5,
            demand_min: 10,
            demand_max: 1000,
            capacity_factor: 2.0,
            k1: None,
            k2: None,
            tol: Tolerances::default(),
            exact: ExactMode::None,
        }
    }

    fn gen_config(&self, items: usize, seed: u64) -> GenConfig {
        GenConfig::new(self.num_centers, self.num_zones, items, seed)
            .with_sparsity(self.sparsity_budget)
            .with_demand_range(self.demand_min, self.demand_max)
            .with_capacity_factor(self.capacity_factor)
    }
}

/// One grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub num_items: usize,
    pub seed: u64,
    pub heuristic_time_s: Option<f64>,
    pub exact_time_s: Option<f64>,
    pub heuristic_objective: Option<f64>,
    pub exact_objective: Option<f64>,
    pub relaxed_bound: Option<f64>,
    pub gap_vs_exact_percent: Option<f64>,
    pub gap_vs_bound_percent: Option<f64>,
    pub status: String,
}

/// Per-item-count means over the cells where each quantity exists.
#[derive(Debug, Clone, Serialize)]
pub struct BenchAggregate {
    pub num_items: usize,
    pub instances: usize,
    pub solved: usize,
    pub mean_heuristic_time_s: Option<f64>,
    pub mean_exact_time_s: Option<f64>,
    pub mean_gap_vs_exact_percent: Option<f64>,
    pub mean_gap_vs_bound_percent: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let collected: Vec<f64> = values.collect();
    if collected.is_empty() {
        None
    } else {
        Some(collected.iter().sum::<f64>() / collected.len() as f64)
    }
}

/// Percentage of `value` above `base`, with the denominator floored away
/// from zero so degenerate zero-cost bounds stay finite.
fn gap_percent(value: f64, base: f64) -> f64 {
    100.0 * (value - base) / base.abs().max(1e-9)
}

pub fn run_benchmark(grid: &BenchGrid) -> BenchmarkReport {
    let mut rows = Vec::new();
    for &items in &grid.item_counts {
        for &seed in &grid.seeds {
            rows.push(run_cell(grid, items, seed));
        }
    }

    let aggregates = grid
        .item_counts
        .iter()
        .map(|&items| {
            let cell_rows: Vec<&BenchRow> =
                rows.iter().filter(|r| r.num_items == items).collect();
            BenchAggregate {
                num_items: items,
                instances: cell_rows.len(),
                solved: cell_rows
                    .iter()
                    .filter(|r| r.heuristic_objective.is_some())
                    .count(),
                mean_heuristic_time_s: mean(
                    cell_rows.iter().filter_map(|r| r.heuristic_time_s),
                ),
                mean_exact_time_s: mean(cell_rows.iter().filter_map(|r| r.exact_time_s)),
                mean_gap_vs_exact_percent: mean(
                    cell_rows.iter().filter_map(|r| r.gap_vs_exact_percent),
                ),
                mean_gap_vs_bound_percent: mean(
                    cell_rows.iter().filter_map(|r| r.gap_vs_bound_percent),
                ),
            }
        })
        .collect();

    BenchmarkReport { rows, aggregates }
}

fn run_cell(grid: &BenchGrid, items: usize, seed: u64) -> BenchRow {
    let instance_id = format!(
        "u{}_v{}_i{}_s{}_seed{}",
        grid.num_centers, grid.num_zones, items, grid.sparsity_budget, seed
    );
    let mut row = BenchRow {
        instance_id,
        num_items: items,
        seed,
        heuristic_time_s: None,
        exact_time_s: None,
        heuristic_objective: None,
        exact_objective: None,
        relaxed_bound: None,
        gap_vs_exact_percent: None,
        gap_vs_bound_percent: None,
        status: String::new(),
    };

    let inst = match generate(&grid.gen_config(items, seed)) {
        Ok(inst) => inst,
        Err(err) => {
            row.status = format!("generation_failed: {err}");
            return row;
        }
    };

    let mut params = SolverParams::default_for(&inst);
    if let Some(k1) = grid.k1 {
        params.k1 = k1;
    }
    if let Some(k2) = grid.k2 {
        params.k2 = k2;
    }
    params.tol = grid.tol;

    let started = Instant::now();
    let solved = heuristic::solve(&inst, &params);
    let heuristic_time = started.elapsed().as_secs_f64();
    let result = match solved {
        Ok(result) => result,
        Err(err) => {
            row.status = format!("heuristic_failed: {err}");
            return row;
        }
    };
    row.heuristic_time_s = Some(heuristic_time);
    row.heuristic_objective = Some(result.solution.objective);
    row.relaxed_bound = Some(result.relaxed_bound);
    row.gap_vs_bound_percent = Some(gap_percent(
        result.solution.objective,
        result.relaxed_bound,
    ));
    row.status = "solved".to_string();

    let exact = match &grid.exact {
        ExactMode::None => None,
        ExactMode::Enumeration { pattern_limit } => {
            let started = Instant::now();
            let outcome = solve_exact_enum(&inst, *pattern_limit);
            Some((outcome, started.elapsed().as_secs_f64()))
        }
        ExactMode::BranchAndBound { budget } => {
            let started = Instant::now();
            let outcome = solve_exact_bnb(&inst, budget);
            Some((outcome, started.elapsed().as_secs_f64()))
        }
    };
    match exact {
        None => {}
        Some((Ok(exact_result), secs)) => {
            row.exact_time_s = Some(secs);
            row.exact_objective = Some(exact_result.objective);
            row.gap_vs_exact_percent = Some(gap_percent(
                result.solution.objective,
                exact_result.objective,
            ));
            if !exact_result.proven_optimal {
                row.status = "solved_exact_budget_exhausted".to_string();
            }
        }
        Some((Err(ExactError::PatternLimitExceeded { count }), _)) => {
            row.status = format!("solved_exact_skipped: {count} patterns over limit");
        }
        Some((Err(err), _)) => {
            row.status = format!("solved_exact_failed: {err}");
        }
    }
    row
}

fn csv_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

/// Per-cell rows as CSV (one header line, decimal points, no locale).
pub fn report_to_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(
        "instance_id,num_items,seed,heuristic_time_s,exact_time_s,heuristic_objective,exact_objective,relaxed_bound,gap_vs_exact_percent,gap_vs_bound_percent,status\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.instance_id,
            row.num_items,
            row.seed,
            csv_opt(row.heuristic_time_s),
            csv_opt(row.exact_time_s),
            csv_opt(row.heuristic_objective),
            csv_opt(row.exact_objective),
            csv_opt(row.relaxed_bound),
            csv_opt(row.gap_vs_exact_percent),
            csv_opt(row.gap_vs_bound_percent),
            row.status,
        ));
    }
    out
}

/// Per-item-count aggregate rows as CSV.
pub fn aggregates_to_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from(
        "num_items,instances,solved,mean_heuristic_time_s,mean_exact_time_s,mean_gap_vs_exact_percent,mean_gap_vs_bound_percent\n",
    );
    for agg in &report.aggregates {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            agg.num_items,
            agg.instances,
            agg.solved,
            csv_opt(agg.mean_heuristic_time_s),
            csv_opt(agg.mean_exact_time_s),
            csv_opt(agg.mean_gap_vs_exact_percent),
            csv_opt(agg.mean_gap_vs_bound_percent),
        ));
    }
    out
}

pub fn report_to_json(report: &BenchmarkReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Mean solve time against item count, one series per solver, item counts
/// strictly increasing within each series. The exact series skips item
/// counts that never produced an exact run.
pub fn emit_plot_data(report: &BenchmarkReport) -> String {
    let mut aggregates: Vec<&BenchAggregate> = report.aggregates.iter().collect();
    aggregates.sort_by_key(|a| a.num_items);
    let mut out = String::from("series,num_items,mean_time_s\n");
    for agg in &aggregates {
        if let Some(t) = agg.mean_heuristic_time_s {
            out.push_str(&format!("heuristic,{},{}\n", agg.num_items, t));
        }
    }
    for agg in &aggregates {
        if let Some(t) = agg.mean_exact_time_s {
            out.push_str(&format!("exact,{},{}\n", agg.num_items, t));
        }
    }
    out
}
