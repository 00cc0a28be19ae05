//! Random generators shared by the property tests and the acceptance runner.
#![allow(dead_code)]

use planlab::pddl::{ActionSchema, AtomExpr, DomainAst, Literal, MethodDecl, PredicateDecl, TaskDecl, Term, TypeHierarchy, TypedName};
use planlab::{sym, AtomSet, Goal, GroundAction, GroundAtom, State, Symbol};
use rand::seq::SliceRandom;
use rand::Rng;

fn typed(name: String, ty: &Symbol) -> TypedName {
    TypedName::new(sym(&name), ty.clone())
}

/// Arguments for `params` drawn from `scope`, respecting subtyping.
fn pick_args(rng: &mut impl Rng, params: &[TypedName], scope: &[TypedName], types: &TypeHierarchy) -> Option<Vec<Term>> {
    params
        .iter()
        .map(|p| {
            let fits: Vec<_> = scope.iter().filter(|v| types.is_subtype(&v.ty, &p.ty)).collect();
            fits.choose(rng).map(|v| Term::Var(v.name.clone()))
        })
        .collect()
}

/// A well-formed typed STRIPS domain, sometimes with HTN tasks and methods.
pub fn random_domain<R: Rng>(rng: &mut R, index: usize) -> DomainAst {
    let mut d = DomainAst::new(sym(&format!("gen-{index}")));
    if rng.gen_bool(0.5) {
        d.requirements = vec![":strips".into(), ":typing".into()];
    }
    let mut type_names = vec![sym("object")];
    for i in 0..rng.gen_range(0..4) {
        let parent = type_names.choose(rng).unwrap().clone();
        d.types.push(typed(format!("ty{i}"), &parent));
        type_names.push(sym(&format!("ty{i}")));
    }
    let (types, _) = TypeHierarchy::from_declarations(&d.types);
    for i in 0..rng.gen_range(0..3) {
        let ty = type_names.choose(rng).unwrap();
        d.constants.push(typed(format!("c{i}"), ty));
    }
    for i in 0..rng.gen_range(0..5) {
        let params = (0..rng.gen_range(0..3))
            .map(|j| typed(format!("x{j}"), type_names.choose(rng).unwrap()))
            .collect();
        d.predicates.push(PredicateDecl {
            name: sym(&format!("pred-{i}")),
            params,
            span: Default::default(),
        });
    }
    for i in 0..rng.gen_range(0..4) {
        let params: Vec<_> = (0..rng.gen_range(0..4))
            .map(|j| typed(format!("v{j}"), type_names.choose(rng).unwrap()))
            .collect();
        let literal = |rng: &mut R| -> Option<Literal> {
            let p = d.predicates.choose(rng)?;
            let args = pick_args(rng, &p.params, &params, &types)?;
            let atom = AtomExpr::new(p.name.clone(), args);
            Some(if rng.gen_bool(0.6) { Literal::pos(atom) } else { Literal::neg(atom) })
        };
        let mut precondition: Vec<Literal> = Vec::new();
        let mut effect: Vec<Literal> = Vec::new();
        for _ in 0..rng.gen_range(0..4) {
            if let Some(l) = literal(rng) {
                if !precondition.contains(&l) {
                    precondition.push(l);
                }
            }
        }
        for _ in 0..rng.gen_range(0..4) {
            if let Some(l) = literal(rng) {
                if !effect.iter().any(|e| e.atom == l.atom) {
                    effect.push(l);
                }
            }
        }
        d.actions.push(ActionSchema {
            name: sym(&format!("act_{i}")),
            params,
            precondition,
            effect,
            span: Default::default(),
        });
    }
    if rng.gen_bool(0.3) {
        for i in 0..rng.gen_range(1..3) {
            let params = (0..rng.gen_range(0..3))
                .map(|j| typed(format!("t{j}"), type_names.choose(rng).unwrap()))
                .collect();
            d.tasks.push(TaskDecl {
                name: sym(&format!("task-{i}")),
                params,
                span: Default::default(),
            });
        }
        for i in 0..rng.gen_range(0..4) {
            let task = d.tasks.choose(rng).unwrap().clone();
            let params: Vec<_> = task.params.iter().enumerate().map(|(j, p)| typed(format!("m{j}"), &p.ty)).collect();
            let head = AtomExpr::new(task.name.clone(), params.iter().map(|p| Term::Var(p.name.clone())).collect());
            let mut subtasks = Vec::new();
            for _ in 0..rng.gen_range(0..3) {
                let (name, wanted) = if rng.gen_bool(0.7) || d.tasks.is_empty() {
                    match d.actions.choose(rng) {
                        Some(a) => (a.name.clone(), a.params.clone()),
                        None => continue,
                    }
                } else {
                    let t = d.tasks.choose(rng).unwrap();
                    (t.name.clone(), t.params.clone())
                };
                if let Some(args) = pick_args(rng, &wanted, &params, &types) {
                    subtasks.push(AtomExpr::new(name, args));
                }
            }
            let mut precondition = Vec::new();
            if let Some(p) = d.predicates.choose(rng) {
                if let Some(args) = pick_args(rng, &p.params, &params, &types) {
                    precondition.push(Literal::pos(AtomExpr::new(p.name.clone(), args)));
                }
            }
            d.methods.push(MethodDecl {
                name: sym(&format!("method-{i}")),
                params,
                task: head,
                precondition,
                subtasks,
                span: Default::default(),
            });
        }
    }
    d
}

/// Propositional fluents `(f0)`, `(f1)`, ...
pub fn fluents(n: usize) -> Vec<GroundAtom> {
    (0..n).map(|i| GroundAtom::new(sym(&format!("f{i}")), vec![])).collect()
}

pub fn random_subset(rng: &mut impl Rng, atoms: &[GroundAtom], p: f64) -> AtomSet {
    atoms.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

pub fn random_state(rng: &mut impl Rng, atoms: &[GroundAtom]) -> State {
    State::new(random_subset(rng, atoms, 0.5))
}

/// Each atom independently positive, negative or absent.
pub fn random_goal(rng: &mut impl Rng, atoms: &[GroundAtom]) -> Goal {
    let (mut pos, mut neg) = (AtomSet::new(), AtomSet::new());
    for a in atoms {
        match rng.gen_range(0..3) {
            0 => {
                pos.insert(a.clone());
            }
            1 => {
                neg.insert(a.clone());
            }
            _ => {}
        }
    }
    Goal::new(pos, neg).unwrap()
}

pub fn random_action(rng: &mut impl Rng, atoms: &[GroundAtom], index: usize) -> GroundAction {
    let (mut pre_pos, mut pre_neg, mut add, mut del) = (AtomSet::new(), AtomSet::new(), AtomSet::new(), AtomSet::new());
    for a in atoms {
        match rng.gen_range(0..4) {
            0 => pre_pos.insert(a.clone()),
            1 => pre_neg.insert(a.clone()),
            _ => false,
        };
        match rng.gen_range(0..4) {
            0 => add.insert(a.clone()),
            1 => del.insert(a.clone()),
            _ => false,
        };
    }
    GroundAction::new(sym(&format!("op{index}")), vec![], pre_pos, pre_neg, add, del).unwrap()
}

/// Up to `max_fluents` fluents and `max_actions` actions.
pub fn random_actions(rng: &mut impl Rng, max_fluents: usize, max_actions: usize) -> (Vec<GroundAtom>, Vec<GroundAction>) {
    let atoms = fluents(rng.gen_range(1..=max_fluents));
    let actions = (0..rng.gen_range(1..=max_actions)).map(|i| random_action(rng, &atoms, i)).collect();
    (atoms, actions)
}

/// Every subset of `atoms`.
pub fn all_states(atoms: &[GroundAtom]) -> Vec<State> {
    (0u32..1 << atoms.len())
        .map(|mask| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a.clone())
                .collect()
        })
        .collect()
}

/// The duality invariant between regression and progression, checked over
/// every state. Returns the first counterexample.
pub fn duality_violation(atoms: &[GroundAtom], action: &GroundAction, goal: &Goal) -> Option<State> {
    if !planlab::relevant(action, goal) {
        return None;
    }
    let Ok(sub) = planlab::regress(goal, action) else {
        return None;
    };
    all_states(atoms).into_iter().find(|s| {
        planlab::satisfies(s, &sub)
            && !(planlab::applicable(s, action) && planlab::satisfies(&planlab::apply(s, action).unwrap(), goal))
    })
}
