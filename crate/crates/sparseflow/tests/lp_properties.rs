//! Property checks of the LP engine against the independent min-cost-flow
//! reference and against its own optimality conditions.

mod common;

use common::{random_pattern, reference_lp_objective, RefOutcome};
use sparseflow::gen::{generate, GenConfig, SplitMix64};
use sparseflow::lp::{build_lp, default_iter_limit, solve_lp, LpSolution, LpStatus};
use sparseflow::model::{check_solution, Instance, SparsePattern, Tolerances};

fn solve(inst: &Instance, pattern: SparsePattern) -> LpSolution {
    let problem = build_lp(inst, pattern).unwrap();
    solve_lp(
        &problem,
        &Tolerances::default(),
        default_iter_limit(problem.num_rows()),
    )
}

fn random_instance(rng: &mut SplitMix64, max_centers: u64) -> Instance {
    let nu = rng.next_range(2, max_centers) as usize;
    let nv = rng.next_range(2, 6) as usize;
    let ni = rng.next_range(1, 3) as usize;
    let budget = rng.next_range(1, nu as u64) as usize;
    let cfg = GenConfig::new(nu, nv, ni, rng.next_u64())
        .with_sparsity(budget)
        .with_demand_range(0, 40)
        .with_capacity_factor(1.0 + rng.next_f64() * 2.0);
    generate(&cfg).unwrap()
}

#[test]
fn objectives_match_min_cost_flow_reference() {
    let mut rng = SplitMix64::new(0xC0FFEE);
    let mut optimal = 0;
    let mut infeasible = 0;
    for round in 0..120 {
        let inst = random_instance(&mut rng, 5);
        let inactive = rng.next_range(0, inst.num_centers() as u64 - 1) as usize;
        let pattern = random_pattern(&mut rng, inst.num_centers(), inst.num_items(), inactive);
        let sol = solve(&inst, pattern.clone());
        match reference_lp_objective(&inst, &pattern) {
            RefOutcome::Optimal(want) => {
                optimal += 1;
                assert_eq!(
                    sol.status,
                    LpStatus::Optimal,
                    "round {round}: reference solved ({want}) but simplex returned {}",
                    sol.status
                );
                let scale = 1.0 + want.abs();
                assert!(
                    (sol.objective - want).abs() <= 1e-6 * scale,
                    "round {round}: simplex {} vs reference {want}",
                    sol.objective
                );
            }
            RefOutcome::Infeasible => {
                infeasible += 1;
                assert_eq!(
                    sol.status,
                    LpStatus::Infeasible,
                    "round {round}: reference infeasible but simplex returned {}",
                    sol.status
                );
            }
        }
    }
    // The mix should exercise both outcomes.
    assert!(optimal >= 40, "only {optimal} optimal rounds");
    assert!(infeasible >= 5, "only {infeasible} infeasible rounds");
}

#[test]
fn optimal_solutions_satisfy_certificates() {
    let tol = Tolerances::default();
    let mut rng = SplitMix64::new(0xBADA55);
    let mut checked = 0;
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 4);
        let inactive = rng.next_range(0, inst.num_centers() as u64 - 1) as usize;
        let pattern = random_pattern(&mut rng, inst.num_centers(), inst.num_items(), inactive);
        let sol = solve(&inst, pattern.clone());
        if sol.status != LpStatus::Optimal {
            continue;
        }
        checked += 1;
        assert!(sol.certified);

        // Primal feasibility of the LP rows (flow constraints) and of the
        // fixings.
        let flow = sol.to_flow_solution();
        let report = check_solution(&inst, &flow, &tol).unwrap();
        for violation in &report.violations {
            assert!(
                matches!(violation.kind, sparseflow::model::ConstraintKind::Sparsity),
                "unexpected violation {violation:?}"
            );
        }
        for (u, i) in pattern.iter_inactive() {
            assert!(sol.y_at(u, i).abs() <= tol.feas_tol);
        }

        // Dual feasibility and complementary slackness, recomputed here
        // from the duals alone.
        let (nu, nv, ni) = (inst.num_centers(), inst.num_zones(), inst.num_items());
        let row_in = |u: usize, i: usize| u * ni + i;
        let row_out = |v: usize, i: usize| nu * ni + v * ni + i;
        let row_cap = |u: usize| nu * ni + nv * ni + u;
        let dtol = 1e-6 * (1.0 + inst.cost_rows().iter().fold(0.0f64, |a, &c| a.max(c.abs())));

        for u in 0..nu {
            // Capacity rows: dual nonpositive, zero when slack.
            let cap_dual = sol.duals[row_cap(u)];
            assert!(cap_dual <= dtol, "capacity dual {cap_dual} > 0");
            let inbound: f64 = (0..ni).map(|i| sol.y_at(u, i)).sum();
            if inst.capacity(u) - inbound > 1e-4 {
                assert!(cap_dual.abs() <= dtol, "slack capacity with dual {cap_dual}");
            }
            for i in 0..ni {
                if pattern.is_inactive(u, i) {
                    continue;
                }
                // Inbound variable: reduced cost -pi_in - pi_cap.
                let rc = -sol.duals[row_in(u, i)] - cap_dual;
                assert!(rc >= -dtol, "inbound reduced cost {rc}");
                if sol.y_at(u, i) > 1e-4 {
                    assert!(rc.abs() <= dtol, "flowing inbound with reduced cost {rc}");
                }
                for v in 0..nv {
                    let rc = inst.cost(u, v) + sol.duals[row_in(u, i)] - sol.duals[row_out(v, i)];
                    assert!(rc >= -dtol, "edge reduced cost {rc}");
                    if flow.x_at(u, v, i) > 1e-4 {
                        assert!(rc.abs() <= dtol, "flowing edge with reduced cost {rc}");
                    }
                }
            }
        }
    }
    assert!(checked >= 30, "only {checked} optimal instances checked");
}

#[test]
fn objective_is_monotone_under_nested_fixings() {
    let mut rng = SplitMix64::new(77);
    for _ in 0..40 {
        let inst = random_instance(&mut rng, 4);
        let mut pattern = SparsePattern::all_active(inst.num_centers(), inst.num_items());
        let mut last = solve(&inst, pattern.clone());
        let mut prev_obj = match last.status {
            LpStatus::Optimal => last.objective,
            _ => continue,
        };
        // Deactivate pairs one at a time; each solve bounds the next from
        // below.
        for _ in 0..inst.num_centers() {
            let u = rng.next_range(0, inst.num_centers() as u64 - 1) as usize;
            let i = rng.next_range(0, inst.num_items() as u64 - 1) as usize;
            pattern.deactivate(u, i);
            last = solve(&inst, pattern.clone());
            match last.status {
                LpStatus::Optimal => {
                    assert!(
                        last.objective >= prev_obj - 1e-6 * (1.0 + prev_obj.abs()),
                        "fixing decreased objective: {prev_obj} -> {}",
                        last.objective
                    );
                    prev_obj = last.objective;
                }
                LpStatus::Infeasible => break,
                other => panic!("unexpected status {other}"),
            }
        }
    }
}

#[test]
fn relaxed_objective_lower_bounds_every_pattern() {
    let mut rng = SplitMix64::new(2025);
    for _ in 0..30 {
        let inst = random_instance(&mut rng, 4);
        let relaxed = solve(
            &inst,
            SparsePattern::all_active(inst.num_centers(), inst.num_items()),
        );
        assert_eq!(relaxed.status, LpStatus::Optimal);
        for trial in 0..4 {
            let pattern = random_pattern(
                &mut rng,
                inst.num_centers(),
                inst.num_items(),
                1 + trial % inst.num_centers(),
            );
            let sol = solve(&inst, pattern);
            if sol.status == LpStatus::Optimal {
                assert!(sol.objective >= relaxed.objective - 1e-6 * (1.0 + sol.objective.abs()));
            }
        }
    }
}

/// Tie-heavy data: few distinct costs, many zero demands, capacity exactly
/// matching total demand. Hunts cycling and degenerate-pivot trouble.
#[test]
fn degenerate_instances_agree_with_reference() {
    let mut rng = SplitMix64::new(0xDE9E);
    let mut optimal = 0;
    for round in 0..80 {
        let nu = rng.next_range(2, 4) as usize;
        let nv = rng.next_range(2, 5) as usize;
        let ni = rng.next_range(1, 2) as usize;
        let cost: Vec<f64> = (0..nu * nv)
            .map(|_| rng.next_range(0, 2) as f64) // costs from {0, 1, 2}
            .collect();
        let demand: Vec<f64> = (0..nv * ni)
            .map(|_| (rng.next_range(0, 3) * 5) as f64) // {0, 5, 10, 15}
            .collect();
        let total: f64 = demand.iter().sum();
        // Split total demand exactly across centers: capacity binds tight.
        let capacity: Vec<f64> = (0..nu).map(|_| total / nu as f64).collect();
        let inst = Instance::new(
            nu,
            nv,
            ni,
            cost,
            capacity,
            demand,
            vec![nu.min(2); ni],
        )
        .unwrap();
        let inactive = rng.next_range(0, nu as u64 - 1) as usize;
        let pattern = random_pattern(&mut rng, nu, ni, inactive);
        let sol = solve(&inst, pattern.clone());
        match reference_lp_objective(&inst, &pattern) {
            RefOutcome::Optimal(want) => {
                optimal += 1;
                assert_eq!(sol.status, LpStatus::Optimal, "round {round}");
                assert!(
                    (sol.objective - want).abs() <= 1e-6 * (1.0 + want.abs()),
                    "round {round}: {} vs {want}",
                    sol.objective
                );
                assert!(sol.certified);
            }
            RefOutcome::Infeasible => {
                assert_eq!(sol.status, LpStatus::Infeasible, "round {round}");
            }
        }
    }
    assert!(optimal >= 30, "only {optimal} optimal degenerate rounds");
}

/// Warm starts must land on the same optimum as cold starts no matter
/// which direction the fixings moved.
#[test]
fn warm_starts_match_cold_starts_across_pattern_changes() {
    let mut rng = SplitMix64::new(0x3A3A);
    for _ in 0..25 {
        let inst = random_instance(&mut rng, 5);
        let a = random_pattern(&mut rng, inst.num_centers(), inst.num_items(), 1);
        let b = random_pattern(&mut rng, inst.num_centers(), inst.num_items(), 2);
        let tol = Tolerances::default();

        let cold_a = solve(&inst, a.clone());
        let cold_b = solve(&inst, b.clone());

        let problem_b = build_lp(&inst, b.clone()).unwrap();
        let warm_b = sparseflow::lp::solve_lp_warm(
            &problem_b,
            &tol,
            default_iter_limit(problem_b.num_rows()),
            cold_a.basis().as_deref(),
        );
        assert_eq!(warm_b.status, cold_b.status);
        if warm_b.status == LpStatus::Optimal {
            assert!(
                (warm_b.objective - cold_b.objective).abs()
                    <= 1e-6 * (1.0 + cold_b.objective.abs()),
                "warm {} vs cold {}",
                warm_b.objective,
                cold_b.objective
            );
        }

        let problem_a = build_lp(&inst, a).unwrap();
        let warm_a = sparseflow::lp::solve_lp_warm(
            &problem_a,
            &tol,
            default_iter_limit(problem_a.num_rows()),
            warm_b.basis().as_deref(),
        );
        assert_eq!(warm_a.status, cold_a.status);
        if warm_a.status == LpStatus::Optimal {
            assert!(
                (warm_a.objective - cold_a.objective).abs()
                    <= 1e-6 * (1.0 + cold_a.objective.abs())
            );
        }
    }
}

#[test]
fn iteration_limit_is_reported_not_certified() {
    let inst = generate(&GenConfig::new(6, 10, 3, 5).with_sparsity(3)).unwrap();
    let pattern = SparsePattern::all_active(6, 3);
    let problem = build_lp(&inst, pattern).unwrap();
    let sol = sparseflow::lp::solve_lp(&problem, &Tolerances::default(), 3);
    assert_eq!(sol.status, LpStatus::IterationLimit);
    assert!(!sol.certified);
    assert!(sol.iterations <= 3 + 1);
}

#[test]
fn solves_are_deterministic() {
    let mut rng = SplitMix64::new(31337);
    for _ in 0..10 {
        let inst = random_instance(&mut rng, 4);
        let pattern = random_pattern(&mut rng, inst.num_centers(), inst.num_items(), 1);
        let a = solve(&inst, pattern.clone());
        let b = solve(&inst, pattern);
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.x, b.x);
        assert_eq!(a.duals, b.duals);
    }
}
