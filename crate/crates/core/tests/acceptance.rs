//! Acceptance runner: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use planlab::csp::{decode_plan, encode, min_conflicts, plan_bounded, solve_at, CspSolver, Family, LocalSearchOutcome, VarKind};
use planlab::fixtures::{classical, corpus, fixture};
use planlab::ground::{build_problem, ground_schema, instance_count, ClassicalProblem, GroundError, GroundOptions};
use planlab::htn::{parse_htn, seek_plan, HtnConfig};
use planlab::oracle::{build_state_graph, diameter, shortest_solving_trajectory, GraphMode};
use planlab::pddl::{load, parse_domain, parse_problem, print_domain, print_problem};
use planlab::search::{backward_search, forward_search, Outcome, SearchConfig};
use planlab::validate::{validate_htn_solution, validate_plan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn keys() -> ClassicalProblem {
    fixture("keys-p1").unwrap().classical()
}

fn plan_is_valid(p: &ClassicalProblem, outcome: &Outcome) -> bool {
    outcome.plan().is_none_or(|plan| validate_plan(p, plan, false).is_ok_and(|v| v.valid))
}

const KEYS_PLAN: [&str; 3] = ["(get_keys)", "(open_door)", "(leave)"];

fn keys_dfs() -> Check {
    let p = keys();
    let started = Instant::now();
    let r = forward_search(&p, &SearchConfig::dfs());
    let elapsed = started.elapsed();
    let names = r.plan().map(|plan| plan.names()).unwrap_or_default();
    ensure(names == KEYS_PLAN, || format!("dfs returned {names:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("dfs plan {} in {elapsed:?}", names.join(" ")))
}

fn bfs_optimality() -> Check {
    let mut parts = Vec::new();
    for (name, expected) in [("keys-p1", 3), ("keys-p2", 4)] {
        let p = fixture(name).unwrap().classical();
        let bfs = forward_search(&p, &SearchConfig::bfs()).plan().map(|plan| plan.len());
        let g = build_state_graph(&p, GraphMode::Full).map_err(|e| e.to_string())?;
        let oracle = shortest_solving_trajectory(&g);
        ensure(bfs == Some(expected) && oracle == Some(expected), || {
            format!("{name}: bfs {bfs:?}, oracle {oracle:?}, expected {expected}")
        })?;
        parts.push(format!("{name} bfs={expected} oracle={expected}"));
    }
    Ok(parts.join(", "))
}

fn csp_horizon() -> Check {
    let p = keys();
    let solver = CspSolver::default();
    let (at2, _) = solve_at(&p, 2, solver).map_err(|e| e.to_string())?;
    ensure(at2.is_none(), || format!("k=2 satisfiable: {at2:?}"))?;
    let (at3, _) = solve_at(&p, 3, solver).map_err(|e| e.to_string())?;
    let plan = at3.ok_or("k=3 unsatisfiable")?;
    ensure(validate_plan(&p, &plan, false).is_ok_and(|v| v.valid), || format!("k=3 plan {plan:?} invalid"))?;
    let c = encode(&p, 4);
    let vars = c.variables().len();
    let states = c.variables().iter().filter(|v| matches!(v.kind, VarKind::State { .. })).count();
    let init = c.constraints_of(Family::Init).count();
    let goal = c.constraints_of(Family::Goal).count();
    ensure(vars == 19 && states == 15 && init == 3 && goal == 2, || {
        format!("k=4: {vars} variables ({states} state), {init} init, {goal} goal constraints")
    })?;
    Ok(format!("unsat at 2, sat at 3 with {plan}; k=4 has {vars} variables, {init} init, {goal} goal constraints"))
}

fn engine_equivalence() -> Check {
    let mut checked = 0;
    for f in classical() {
        let p = f.classical();
        if p.fluents().len() > 8 {
            continue;
        }
        let g = build_state_graph(&p, GraphMode::Full).map_err(|e| e.to_string())?;
        let optimal = shortest_solving_trajectory(&g);
        let bound = diameter(&g) + 1;
        let bfs = forward_search(&p, &SearchConfig::bfs());
        let back = backward_search(&p, &SearchConfig::bfs());
        let csp = plan_bounded(&p, bound, CspSolver::default()).map_err(|e| e.to_string())?;
        for (engine, r) in [("forward-bfs", &bfs), ("backward", &back), ("csp", &csp)] {
            ensure(plan_is_valid(&p, &r.outcome), || format!("{}: {engine} plan invalid", f.name))?;
            match optimal {
                Some(_) => ensure(r.plan().is_some(), || format!("{}: {engine} found no plan", f.name))?,
                None => ensure(r.outcome == Outcome::Unsolvable, || {
                    format!("{}: {engine} said {}", f.name, r.outcome.label())
                })?,
            }
        }
        for (engine, r) in [("forward-bfs", &bfs), ("csp", &csp)] {
            let len = r.plan().map(|plan| plan.len());
            ensure(len == optimal, || format!("{}: {engine} length {len:?}, optimal {optimal:?}", f.name))?;
        }
        checked += 1;
    }
    ensure(checked >= 4, || format!("only {checked} fixtures checked"))?;
    Ok(format!("{checked} fixtures agree"))
}

fn duality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut sampled, mut entailed) = (0, 0);
    while sampled < 1000 {
        let (atoms, actions) = common::random_actions(&mut rng, 6, 12);
        for _ in 0..10 {
            let action = &actions[rng.gen_range(0..actions.len())];
            let goal = common::random_goal(&mut rng, &atoms);
            if !planlab::relevant(action, &goal) {
                continue;
            }
            let Ok(sub) = planlab::regress(&goal, action) else {
                continue;
            };
            // Half the time pick a state that satisfies the regressed goal.
            let mut s = common::random_state(&mut rng, &atoms);
            if rng.gen_bool(0.5) {
                s = s.atoms().iter().filter(|a| !sub.negative().contains(*a)).chain(sub.positive()).cloned().collect();
            }
            if planlab::satisfies(&s, &sub) {
                entailed += 1;
                let next = planlab::apply(&s, action).map_err(|e| format!("{e} at {s:?} {action:?} {goal:?}"))?;
                ensure(planlab::satisfies(&next, &goal), || format!("violated at {s:?} {action:?} {goal:?}"))?;
            }
            if let Some(bad) = common::duality_violation(&atoms, action, &goal) {
                return Err(format!("violated at {bad:?} {action:?} {goal:?}"));
            }
            sampled += 1;
        }
    }
    Ok(format!("{sampled} triples with a relevant action ({entailed} states entail the regressed goal), 0 violations"))
}

fn round_trip() -> Check {
    let mut files = 0;
    for f in corpus() {
        let d = parse_domain(f.domain).map_err(|e| format!("{}: {e}", f.domain_file))?.value;
        let again = parse_domain(&print_domain(&d)).map_err(|e| format!("{}: {e}", f.domain_file))?.value;
        ensure(d == again, || format!("{} changed", f.domain_file))?;
        let p = parse_problem(f.problem).map_err(|e| format!("{}: {e}", f.problem_file))?.value;
        let again = parse_problem(&print_problem(&p)).map_err(|e| format!("{}: {e}", f.problem_file))?.value;
        ensure(p == again, || format!("{} changed", f.problem_file))?;
        files += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for i in 0..200 {
        let d = common::random_domain(&mut rng, i);
        let text = print_domain(&d);
        let parsed = parse_domain(&text).map_err(|e| format!("generated domain {i}: {e}\n{text}"))?.value;
        ensure(parsed == d, || format!("generated domain {i} changed"))?;
        let again = parse_domain(&print_domain(&parsed)).map_err(|e| e.to_string())?.value;
        ensure(again == parsed, || format!("generated domain {i} is not stable"))?;
    }
    Ok(format!("{files} corpus domain/problem pairs and 200 generated domains, 0 mismatches"))
}

fn htn_soundness() -> Check {
    let f = fixture("keys-htn-p1").unwrap();
    let p = parse_htn(f.domain, f.problem).map_err(|e| e.to_string())?.value;
    let r = seek_plan(&p, &HtnConfig::default());
    let names = r.result.plan().map(|plan| plan.names()).unwrap_or_default();
    ensure(names == KEYS_PLAN, || format!("htn keys plan {names:?}"))?;

    let f = fixture("keys-htn-loop-p1").unwrap();
    let lp = parse_htn(f.domain, f.problem).map_err(|e| e.to_string())?.value;
    let started = Instant::now();
    let looped = seek_plan(&lp, &HtnConfig::default());
    ensure(looped.result.outcome == Outcome::BudgetExhausted, || {
        format!("recursive fixture ended with {}", looped.result.outcome.label())
    })?;

    let mut validated = 0;
    for f in corpus().iter().filter(|f| f.hierarchical) {
        let p = parse_htn(f.domain, f.problem).map_err(|e| e.to_string())?.value;
        let r = seek_plan(&p, &HtnConfig::default());
        if let Some(plan) = r.result.plan() {
            let v = validate_htn_solution(&p, plan, r.trace.as_ref()).map_err(|e| e.to_string())?;
            ensure(v.valid, || format!("{}: {:?}", f.name, v.failure))?;
            validated += 1;
        }
    }
    Ok(format!(
        "keys plan {}; recursion stopped after {:?} at depth {}; {validated} plans validated",
        names.join(" "),
        started.elapsed(),
        lp.default_depth_bound()
    ))
}

fn grounding_count() -> Check {
    let linked = fixture("logistics-mini").unwrap().linked();
    let load_schema = linked.domain.actions.iter().find(|a| a.name.as_str() == "load").ok_or("no load schema")?;
    let n = ground_schema(load_schema, &linked).len();
    ensure(n == 12, || format!("logistics-mini load grounds to {n}"))?;

    let names = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ");
    let problem = format!(
        "(define (problem big) (:domain logistics) (:objects {} - truck {} - container {} - location) (:init) (:goal (and)))",
        names("truck", 250),
        names("box", 250),
        names("site", 720)
    );
    let big = load(fixture("logistics-mini").unwrap().domain, &problem).map_err(|e| e.to_string())?.value;
    let load_schema = big.domain.actions.iter().find(|a| a.name.as_str() == "load").unwrap();
    let count = instance_count(load_schema, &big);
    ensure(count == 45_000_000, || format!("symbolic count {count}"))?;
    match build_problem(&big, &GroundOptions::default()) {
        Err(GroundError::TooManyInstances { .. }) => {}
        _ => return Err("grounding 45M instances was not refused".into()),
    }
    Ok(format!("load grounds to {n}; 250*250*720 = {count} counted without grounding"))
}

fn min_conflicts_soundness() -> Check {
    let p = keys();
    let c = encode(&p, 3);
    let mut solved = 0;
    for seed in 0..50 {
        if let LocalSearchOutcome::Solved(a) = min_conflicts(&c, 10_000, seed) {
            let plan = decode_plan(&c, &a, &p).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(validate_plan(&p, &plan, false).is_ok_and(|v| v.valid), || format!("seed {seed}: {plan:?} invalid"))?;
            solved += 1;
        }
    }
    Ok(format!("{solved}/50 seeded runs solved, all decoded plans valid"))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("keys forward dfs plan", keys_dfs),
        ("bfs optimality vs oracle", bfs_optimality),
        ("csp horizon semantics", csp_horizon),
        ("engine equivalence", engine_equivalence),
        ("regression/progression duality", duality),
        ("parser round-trip", round_trip),
        ("htn soundness", htn_soundness),
        ("grounding count", grounding_count),
        ("min-conflicts soundness", min_conflicts_soundness),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
