//! Command-line front end: generate instances, run the heuristic and the
//! exact solvers, validate solutions, export MPS models, and drive
//! benchmark grids.
//!
//! Exit codes: 0 on success (and for `validate`, a feasible solution),
//! 1 when a solver fails or a solution is infeasible, 2 on usage errors
//! or malformed files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use sparseflow::bench::{
    aggregates_to_csv, emit_plot_data, report_to_csv, report_to_json, run_benchmark, BenchGrid,
    ExactMode,
};
use sparseflow::exact::{solve_exact_bnb, solve_exact_enum, BnbBudget, ExactError};
use sparseflow::gen::{generate, GenConfig};
use sparseflow::heuristic::{solve, SolveError, SolverParams};
use sparseflow::io::{instance_from_json, instance_to_json, solution_from_json, solution_to_json};
use sparseflow::model::{check_solution, validate_instance, Instance, Tolerances};
use sparseflow::mps::export_mip;

const USAGE: &str = "\
sparseflow: solvers for the sparse-inbound transportation problem

USAGE:
  sparseflow gen --centers N --zones N --items N --out FILE
                 [--sparsity N] [--seed N] [--demand-min N] [--demand-max N]
                 [--capacity-factor X]
  sparseflow solve INSTANCE [--k1 N] [--k2 N] [--zero-tol X] [--feas-tol X]
                 [--out FILE]
  sparseflow exact INSTANCE --method enum|bnb [--pattern-limit N]
                 [--node-limit N] [--time-limit SECONDS] [--out FILE]
  sparseflow validate INSTANCE SOLUTION [--zero-tol X] [--feas-tol X]
  sparseflow export-mip INSTANCE [--out FILE]
  sparseflow bench --centers N --zones N --items N,N,... --seeds N --out PREFIX
                 [--seed-start N] [--sparsity N] [--k1 N] [--k2 N]
                 [--exact none|enum|bnb] [--pattern-limit N] [--node-limit N]
                 [--time-limit SECONDS] [--demand-min N] [--demand-max N]
                 [--capacity-factor X]

EXIT CODES:
  0  success / feasible
  1  solver failure / infeasible
  2  usage error / malformed file
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    ExitCode::from(run(&args))
}

fn run(args: &[String]) -> u8 {
    if args.is_empty() {
        eprint!("{USAGE}");
        return 2;
    }
    if args[0] == "--help" || args[0] == "-h" || args[0] == "help" {
        print!("{USAGE}");
        return 0;
    }
    let parsed = match Args::parse(&args[1..]) {
        Ok(parsed) => parsed,
        Err(msg) => return usage_error(&msg),
    };
    match args[0].as_str() {
        "gen" => cmd_gen(parsed),
        "solve" => cmd_solve(parsed),
        "exact" => cmd_exact(parsed),
        "validate" => cmd_validate(parsed),
        "export-mip" => cmd_export_mip(parsed),
        "bench" => cmd_bench(parsed),
        other => usage_error(&format!("unknown subcommand `{other}`")),
    }
}

fn usage_error(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    eprintln!("run `sparseflow --help` for usage");
    2
}

struct Args {
    positional: Vec<String>,
    flags: BTreeMap<String, String>,
}

impl Args {
    fn parse(raw: &[String]) -> Result<Self, String> {
        let mut positional = Vec::new();
        let mut flags = BTreeMap::new();
        let mut iter = raw.iter();
        while let Some(arg) = iter.next() {
            if let Some(name) = arg.strip_prefix("--") {
                let value = iter
                    .next()
                    .ok_or_else(|| format!("flag --{name} needs a value"))?;
                if flags.insert(name.to_string(), value.clone()).is_some() {
                    return Err(format!("flag --{name} given twice"));
                }
            } else {
                positional.push(arg.clone());
            }
        }
        Ok(Args { positional, flags })
    }

    fn positional(&self, index: usize, what: &str) -> Result<&str, String> {
        self.positional
            .get(index)
            .map(String::as_str)
            .ok_or_else(|| format!("missing {what}"))
    }

    fn take<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, String> {
        match self.flags.get(name) {
            None => Ok(None),
            Some(value) => value
                .parse()
                .map(Some)
                .map_err(|_| format!("invalid value `{value}` for --{name}")),
        }
    }

    fn require<T: std::str::FromStr>(&self, name: &str) -> Result<T, String> {
        self.take(name)?
            .ok_or_else(|| format!("missing required flag --{name}"))
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<(), String> {
        for key in self.flags.keys() {
            if !known.contains(&key.as_str()) {
                return Err(format!("unknown flag --{key}"));
            }
        }
        Ok(())
    }
}

fn tolerances_from(args: &Args) -> Result<Tolerances, String> {
    let mut tol = Tolerances::default();
    if let Some(zero_tol) = args.take::<f64>("zero-tol")? {
        tol.zero_tol = zero_tol;
    }
    if let Some(feas_tol) = args.take::<f64>("feas-tol")? {
        tol.feas_tol = feas_tol;
    }
    if tol.zero_tol <= 0.0 || tol.feas_tol <= 0.0 {
        return Err("tolerances must be positive".to_string());
    }
    Ok(tol)
}

fn read_instance(path: &str) -> Result<Instance, u8> {
    let text = fs::read_to_string(path).map_err(|err| {
        eprintln!("error: cannot read {path}: {err}");
        2u8
    })?;
    instance_from_json(&text)
        .map(|(inst, _)| inst)
        .map_err(|err| {
            eprintln!("error: {path}: {err}");
            2u8
        })
}

fn write_file(path: &Path, contents: &str) -> Result<(), u8> {
    fs::write(path, contents).map_err(|err| {
        eprintln!("error: cannot write {}: {err}", path.display());
        1u8
    })
}

fn cmd_gen(args: Args) -> u8 {
    if let Err(msg) = args.reject_unknown(&[
        "centers",
        "zones",
        "items",
        "sparsity",
        "seed",
        "demand-min",
        "demand-max",
        "capacity-factor",
        "out",
    ]) {
        return usage_error(&msg);
    }
    let built = (|| -> Result<(GenConfig, PathBuf), String> {
        let mut cfg = GenConfig::new(
            args.require("centers")?,
            args.require("zones")?,
            args.require("items")?,
            args.take("seed")?.unwrap_or(0),
        );
        if let Some(s) = args.take("sparsity")? {
            cfg.sparsity_budget = s;
        }
        if let Some(min) = args.take("demand-min")? {
            cfg.demand_min = min;
        }
        if let Some(max) = args.take("demand-max")? {
            cfg.demand_max = max;
        }
        if let Some(f) = args.take("capacity-factor")? {
            cfg.capacity_factor = f;
        }
        let out: String = args.require("out")?;
        Ok((cfg, PathBuf::from(out)))
    })();
    let (cfg, out) = match built {
        Ok(pair) => pair,
        Err(msg) => return usage_error(&msg),
    };
    let inst = match generate(&cfg) {
        Ok(inst) => inst,
        Err(err) => return usage_error(&format!("invalid generator config: {err}")),
    };
    let json = match instance_to_json(&inst, Some(&cfg)) {
        Ok(json) => json,
        Err(err) => {
            eprintln!("error: {err}");
            return 1;
        }
    };
    if write_file(&out, &json).is_err() {
        return 1;
    }
    println!("wrote {}", out.display());
    0
}

fn solver_params(args: &Args, inst: &Instance) -> Result<SolverParams, String> {
    let mut params = SolverParams::default_for(inst);
    if let Some(k1) = args.take("k1")? {
        params.k1 = k1;
    }
    if let Some(k2) = args.take("k2")? {
        params.k2 = k2;
    }
    if params.k1 == 0 || params.k2 == 0 {
        return Err("k1 and k2 must be at least 1".to_string());
    }
    params.tol = tolerances_from(args)?;
    Ok(params)
}

fn cmd_solve(args: Args) -> u8 {
    if let Err(msg) = args.reject_unknown(&["k1", "k2", "zero-tol", "feas-tol", "out"]) {
        return usage_error(&msg);
    }
    let path = match args.positional(0, "instance file") {
        Ok(path) => path.to_string(),
        Err(msg) => return usage_error(&msg),
    };
    let inst = match read_instance(&path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let params = match solver_params(&args, &inst) {
        Ok(params) => params,
        Err(msg) => return usage_error(&msg),
    };
    match solve(&inst, &params) {
        Ok(result) => {
            println!("status solved");
            println!("objective {}", result.solution.objective);
            println!("relaxed_bound {}", result.relaxed_bound);
            println!("sparsify_iters {}", result.stats.sparsify_iters);
            println!("improve_iters {}", result.stats.improve_iters);
            println!("lp_solves {}", result.stats.lp_solve_count);
            println!("wall_time_s {}", result.stats.wall_time.as_secs_f64());
            for (step, objective) in result.stats.improve_trace.iter().enumerate() {
                println!("improve_trace {step} {objective}");
            }
            if let Some(out) = args.flags.get("out") {
                match solution_to_json(&result.solution) {
                    Ok(json) => {
                        if write_file(Path::new(out), &json).is_err() {
                            return 1;
                        }
                        println!("wrote {out}");
                    }
                    Err(err) => {
                        eprintln!("error: {err}");
                        return 1;
                    }
                }
            }
            0
        }
        Err(err) => {
            let status = match &err {
                SolveError::InvalidInstance(_) => "invalid_instance",
                SolveError::RelaxedInfeasible { .. } => "relaxed_infeasible",
                SolveError::SparsifyFailed { .. } => "sparsify_failed",
                SolveError::SolverStalled { .. } => "solver_stalled",
            };
            println!("status {status}");
            eprintln!("error: {err}");
            1
        }
    }
}

fn cmd_exact(args: Args) -> u8 {
    if let Err(msg) =
        args.reject_unknown(&["method", "pattern-limit", "node-limit", "time-limit", "out"])
    {
        return usage_error(&msg);
    }
    let path = match args.positional(0, "instance file") {
        Ok(path) => path.to_string(),
        Err(msg) => return usage_error(&msg),
    };
    let method: String = match args.require("method") {
        Ok(method) => method,
        Err(msg) => return usage_error(&msg),
    };
    let inst = match read_instance(&path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let outcome = match method.as_str() {
        "enum" => {
            let limit = match args.take("pattern-limit") {
                Ok(limit) => limit.unwrap_or(200_000),
                Err(msg) => return usage_error(&msg),
            };
            solve_exact_enum(&inst, limit)
        }
        "bnb" => {
            let budget = match bnb_budget(&args) {
                Ok(budget) => budget,
                Err(msg) => return usage_error(&msg),
            };
            solve_exact_bnb(&inst, &budget)
        }
        other => return usage_error(&format!("unknown method `{other}` (enum|bnb)")),
    };
    match outcome {
        Ok(result) => {
            println!("status optimal");
            println!("objective {}", result.objective);
            println!("nodes {}", result.node_count);
            println!("proven_optimal {}", result.proven_optimal);
            if let Some(out) = args.flags.get("out") {
                match solution_to_json(&result.solution) {
                    Ok(json) => {
                        if write_file(Path::new(out), &json).is_err() {
                            return 1;
                        }
                        println!("wrote {out}");
                    }
                    Err(err) => {
                        eprintln!("error: {err}");
                        return 1;
                    }
                }
            }
            0
        }
        Err(ExactError::PatternLimitExceeded { count }) => {
            eprintln!("error: enumeration refused: {count} patterns exceed the limit");
            1
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn bnb_budget(args: &Args) -> Result<BnbBudget, String> {
    Ok(BnbBudget {
        node_limit: args.take("node-limit")?,
        time_limit: args
            .take::<f64>("time-limit")?
            .map(Duration::from_secs_f64),
    })
}

fn cmd_validate(args: Args) -> u8 {
    if let Err(msg) = args.reject_unknown(&["zero-tol", "feas-tol"]) {
        return usage_error(&msg);
    }
    let inst_path = match args.positional(0, "instance file") {
        Ok(path) => path.to_string(),
        Err(msg) => return usage_error(&msg),
    };
    let sol_path = match args.positional(1, "solution file") {
        Ok(path) => path.to_string(),
        Err(msg) => return usage_error(&msg),
    };
    let tol = match tolerances_from(&args) {
        Ok(tol) => tol,
        Err(msg) => return usage_error(&msg),
    };
    let inst = match read_instance(&inst_path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let sol_text = match fs::read_to_string(&sol_path) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: cannot read {sol_path}: {err}");
            return 2;
        }
    };
    let sol = match solution_from_json(&sol_text) {
        Ok(sol) => sol,
        Err(err) => {
            eprintln!("error: {sol_path}: {err}");
            return 2;
        }
    };
    let instance_report = validate_instance(&inst);
    if !instance_report.feasible() {
        println!("instance: {instance_report}");
    }
    match check_solution(&inst, &sol, &tol) {
        Ok(report) => {
            println!("{report}");
            if report.feasible() && instance_report.feasible() {
                0
            } else {
                1
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn cmd_export_mip(args: Args) -> u8 {
    if let Err(msg) = args.reject_unknown(&["out"]) {
        return usage_error(&msg);
    }
    let path = match args.positional(0, "instance file") {
        Ok(path) => path.to_string(),
        Err(msg) => return usage_error(&msg),
    };
    let inst = match read_instance(&path) {
        Ok(inst) => inst,
        Err(code) => return code,
    };
    let out = match args.flags.get("out") {
        Some(out) => PathBuf::from(out),
        None => PathBuf::from(&path).with_extension("mps"),
    };
    let export = export_mip(&inst);
    if write_file(&out, &export.text).is_err() {
        return 1;
    }
    println!("wrote {} (big_M {})", out.display(), export.big_m);
    0
}

fn cmd_bench(args: Args) -> u8 {
    if let Err(msg) = args.reject_unknown(&[
        "centers",
        "zones",
        "items",
        "seeds",
        "seed-start",
        "sparsity",
        "k1",
        "k2",
        "zero-tol",
        "feas-tol",
        "exact",
        "pattern-limit",
        "node-limit",
        "time-limit",
        "demand-min",
        "demand-max",
        "capacity-factor",
        "out",
    ]) {
        return usage_error(&msg);
    }
    let built = (|| -> Result<(BenchGrid, String), String> {
        let items_raw: String = args.require("items")?;
        let item_counts: Vec<usize> = items_raw
            .split(',')
            .map(|piece| {
                piece
                    .trim()
                    .parse()
                    .map_err(|_| format!("invalid item count `{piece}`"))
            })
            .collect::<Result<_, _>>()?;
        if item_counts.is_empty() {
            return Err("item list is empty".to_string());
        }
        let num_seeds: u64 = args.require("seeds")?;
        if num_seeds == 0 {
            return Err("--seeds must be at least 1".to_string());
        }
        let seed_start: u64 = args.take("seed-start")?.unwrap_or(0);
        let seeds: Vec<u64> = (seed_start..seed_start + num_seeds).collect();

        let mut grid = BenchGrid::new(
            args.require("centers")?,
            args.require("zones")?,
            item_counts,
            seeds,
        );
        if let Some(s) = args.take("sparsity")? {
            grid.sparsity_budget = s;
        }
        if let Some(min) = args.take("demand-min")? {
            grid.demand_min = min;
        }
        if let Some(max) = args.take("demand-max")? {
            grid.demand_max = max;
        }
        if let Some(f) = args.take("capacity-factor")? {
            grid.capacity_factor = f;
        }
        grid.k1 = args.take("k1")?;
        grid.k2 = args.take("k2")?;
        grid.tol = tolerances_from(&args)?;
        grid.exact = match args
            .take::<String>("exact")?
            .unwrap_or_else(|| "none".to_string())
            .as_str()
        {
            "none" => ExactMode::None,
            "enum" => ExactMode::Enumeration {
                pattern_limit: args.take("pattern-limit")?.unwrap_or(200_000),
            },
            "bnb" => ExactMode::BranchAndBound {
                budget: bnb_budget(&args)?,
            },
            other => return Err(format!("unknown exact mode `{other}` (none|enum|bnb)")),
        };
        let out: String = args.require("out")?;
        Ok((grid, out))
    })();
    let (grid, prefix) = match built {
        Ok(pair) => pair,
        Err(msg) => return usage_error(&msg),
    };

    let report = run_benchmark(&grid);
    let failures = report
        .rows
        .iter()
        .filter(|r| !r.status.starts_with("solved"))
        .count();

    let writes = [
        (format!("{prefix}.csv"), report_to_csv(&report)),
        (format!("{prefix}_aggregates.csv"), aggregates_to_csv(&report)),
        (format!("{prefix}.json"), report_to_json(&report)),
        (format!("{prefix}_plot.csv"), emit_plot_data(&report)),
    ];
    for (path, contents) in &writes {
        if write_file(Path::new(path), contents).is_err() {
            return 1;
        }
        println!("wrote {path}");
    }
    println!(
        "rows {} aggregates {} failures {failures}",
        report.rows.len(),
        report.aggregates.len()
    );
    if failures == 0 {
        0
    } else {
        1
    }
}
