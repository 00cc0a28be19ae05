//! Instantiation of typed schemas into a ground problem ⟨F, O, I, G⟩.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{AtomSet, Goal, GroundAction, GroundAtom, ModelError, State, Symbol};
use crate::pddl::{substitute, ActionSchema, Binding, LinkedProblem, Literal, TypedName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("grounding would create {count} action instances, above the budget of {budget} (schema `{schema}`)")]
    TooManyInstances { schema: String, count: u128, budget: u128 },
    #[error("goal mentions {atom}, which uses an object outside the problem's fluents")]
    GoalUsesUnknownObject { atom: String },
    #[error("{atom} is not one of the problem's fluents")]
    UnknownFluent { atom: String },
    #[error("ground action {action} appears twice")]
    DuplicateAction { action: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundOptions {
    pub instance_budget: u128,
    pub prune_statics: bool,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions {
            instance_budget: 1_000_000,
            prune_statics: true,
        }
    }
}

/// A ground classical planning problem. Fluents and actions are kept in
/// canonical order; indices into both are stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalProblem {
    fluents: Vec<GroundAtom>,
    fluent_index: BTreeMap<GroundAtom, usize>,
    actions: Vec<GroundAction>,
    init: State,
    goal: Goal,
}

impl ClassicalProblem {
    /// Checks that every atom mentioned by the init state, the goal and the
    /// actions is a fluent, and that action calls are unique.
    pub fn new(fluents: Vec<GroundAtom>, actions: Vec<GroundAction>, init: State, goal: Goal) -> Result<Self, GroundError> {
        let fluent_index: BTreeMap<GroundAtom, usize> =
            fluents.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        let known = |atom: &GroundAtom| {
            if fluent_index.contains_key(atom) {
                Ok(())
            } else {
                Err(GroundError::UnknownFluent { atom: atom.to_string() })
            }
        };
        for atom in init.atoms() {
            known(atom)?;
        }
        for atom in goal.positive().iter().chain(goal.negative()) {
            if !fluent_index.contains_key(atom) {
                return Err(GroundError::GoalUsesUnknownObject { atom: atom.to_string() });
            }
        }
        let mut calls = std::collections::BTreeSet::new();
        for a in &actions {
            for atom in a.pre_pos().iter().chain(a.pre_neg()).chain(a.add()).chain(a.del()) {
                known(atom)?;
            }
            if !calls.insert((a.name().clone(), a.args().to_vec())) {
                return Err(GroundError::DuplicateAction { action: a.to_string() });
            }
        }
        Ok(ClassicalProblem {
            fluents,
            fluent_index,
            actions,
            init,
            goal,
        })
    }

    pub fn fluents(&self) -> &[GroundAtom] {
        &self.fluents
    }

    pub fn fluent_index(&self, atom: &GroundAtom) -> Option<usize> {
        self.fluent_index.get(atom).copied()
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal(&self) -> &Goal {
        &self.goal
    }

    /// Same fluents and actions, different goal.
    pub fn with_goal(&self, goal: Goal) -> Result<Self, GroundError> {
        ClassicalProblem::new(self.fluents.clone(), self.actions.clone(), self.init.clone(), goal)
    }

    /// Looks up a ground action by name and arguments.
    pub fn find_action(&self, name: &Symbol, args: &[Symbol]) -> Option<&GroundAction> {
        self.actions.iter().find(|a| a.is_call(name, args))
    }

    pub fn action_position(&self, action: &GroundAction) -> Option<usize> {
        self.actions.iter().position(|a| a.is_call(action.name(), action.args()))
    }
}

pub fn objects_of_type(ty: &Symbol, linked: &LinkedProblem) -> Vec<Symbol> {
    linked.objects.objects_of_type(ty, &linked.types)
}

fn candidates(params: &[TypedName], linked: &LinkedProblem) -> Vec<Vec<Symbol>> {
    params.iter().map(|p| objects_of_type(&p.ty, linked)).collect()
}

/// Number of instances [`ground_schema`] enumerates, computed without
/// enumerating them.
pub fn instance_count(schema: &ActionSchema, linked: &LinkedProblem) -> u128 {
    candidates(&schema.params, linked).iter().map(|c| c.len() as u128).product()
}

/// Calls `visit` once per element of the Cartesian product of `lists`, in
/// odometer order (last position varies fastest).
pub(crate) fn for_each_tuple(lists: &[Vec<Symbol>], mut visit: impl FnMut(&[Symbol])) {
    if lists.iter().any(|l| l.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; lists.len()];
    let mut tuple: Vec<Symbol> = lists.iter().map(|l| l[0].clone()).collect();
    loop {
        visit(&tuple);
        let mut pos = lists.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < lists[pos].len() {
                tuple[pos] = lists[pos][idx[pos]].clone();
                break;
            }
            idx[pos] = 0;
            tuple[pos] = lists[pos][0].clone();
        }
    }
}

fn instantiate(literals: &[Literal], binding: &Binding, positive: bool) -> AtomSet {
    literals
        .iter()
        .filter(|l| l.positive == positive)
        .map(|l| substitute(&l.atom, binding).expect("schema variables are bound by its parameters"))
        .collect()
}

/// All ground instances of a schema in canonical order. Instances where
/// parameter aliasing makes an atom both added and deleted, or both
/// required and forbidden, are skipped.
pub fn ground_schema(schema: &ActionSchema, linked: &LinkedProblem) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for_each_tuple(&candidates(&schema.params, linked), |args| {
        let binding: Binding = schema.params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
        let action = GroundAction::new(
            schema.name.clone(),
            args.to_vec(),
            instantiate(&schema.precondition, &binding, true),
            instantiate(&schema.precondition, &binding, false),
            instantiate(&schema.effect, &binding, true),
            instantiate(&schema.effect, &binding, false),
        );
        if let Ok(action) = action {
            out.push(action);
        }
    });
    out
}

/// Every atom constructible from the predicate declarations and typed
/// objects, predicate by predicate.
pub fn all_fluents(linked: &LinkedProblem) -> Vec<GroundAtom> {
    let mut out = Vec::new();
    for p in &linked.domain.predicates {
        for_each_tuple(&candidates(&p.params, linked), |args| {
            out.push(GroundAtom::new(p.name.clone(), args.to_vec()));
        });
    }
    out
}

pub fn build_problem(linked: &LinkedProblem, options: &GroundOptions) -> Result<ClassicalProblem, GroundError> {
    let mut total: u128 = 0;
    for schema in &linked.domain.actions {
        total = total.saturating_add(instance_count(schema, linked));
        if total > options.instance_budget {
            return Err(GroundError::TooManyInstances {
                schema: schema.name.to_string(),
                count: total,
                budget: options.instance_budget,
            });
        }
    }
    let actions = linked.domain.actions.iter().flat_map(|s| ground_schema(s, linked)).collect();
    let goal = Goal::new(
        linked.goal_positive.iter().cloned().collect(),
        linked.goal_negative.iter().cloned().collect(),
    )?;
    let problem = ClassicalProblem::new(all_fluents(linked), actions, State::new(linked.init.iter().cloned()), goal)?;
    Ok(if options.prune_statics { prune_statics(&problem) } else { problem })
}

/// Fluents that no action adds or deletes.
pub fn static_fluents(p: &ClassicalProblem) -> AtomSet {
    let mut dynamic = AtomSet::new();
    for a in p.actions() {
        dynamic.extend(a.add().iter().cloned());
        dynamic.extend(a.del().iter().cloned());
    }
    p.fluents().iter().filter(|f| !dynamic.contains(*f)).cloned().collect()
}

/// Drops actions whose static preconditions fail in the initial state and
/// strips static literals from the rest. Reachable states are unchanged.
pub fn prune_statics(p: &ClassicalProblem) -> ClassicalProblem {
    let statics = static_fluents(p);
    if statics.is_empty() {
        return p.clone();
    }
    let init = p.init();
    let actions = p
        .actions()
        .iter()
        .filter(|a| {
            a.pre_pos().iter().filter(|f| statics.contains(*f)).all(|f| init.contains(f))
                && a.pre_neg().iter().filter(|f| statics.contains(*f)).all(|f| !init.contains(f))
        })
        .map(|a| {
            let keep = |set: &AtomSet| set.iter().filter(|f| !statics.contains(*f)).cloned().collect();
            a.with_preconditions(keep(a.pre_pos()), keep(a.pre_neg()))
        })
        .collect();
    ClassicalProblem {
        actions,
        ..p.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sym;
    use crate::pddl::load;

    const HOME: &str = "(define (domain smart-home)
        (:types key door room agent - object digital-key yale-key car-key - key)
        (:predicates (in ?a - agent ?r - room) (owns ?a - agent ?k - key) (opened ?d - door)
                     (adjacent ?r1 ?r2 - room))
        (:action open-door :parameters (?d - door) :precondition (not (opened ?d)) :effect (opened ?d))
        (:action move :parameters (?a - agent ?from ?to - room)
            :precondition (and (in ?a ?from) (adjacent ?from ?to))
            :effect (and (in ?a ?to) (not (in ?a ?from)))))";

    const INSTANCE: &str = "(define (problem instance1) (:domain smart-home)
        (:objects livingroom hallway bathroom - room d1 d2 d3 - door
                  k1 - digital-key k2 k3 - yale-key k4 - car-key a1 - agent)
        (:init (in a1 hallway) (owns a1 k1) (adjacent hallway livingroom))
        (:goal (and (in a1 livingroom) (opened d1))))";

    fn linked() -> LinkedProblem {
        load(HOME, INSTANCE).unwrap().value
    }

    #[test]
    fn typed_object_lists() {
        let l = linked();
        let keys: Vec<_> = objects_of_type(&sym("key"), &l).iter().map(|s| s.to_string()).collect();
        assert_eq!(keys, ["k1", "k2", "k3", "k4"]);
        assert_eq!(objects_of_type(&sym("object"), &l).len(), 11);
        assert!(objects_of_type(&sym("car-key"), &l).len() == 1);
    }

    #[test]
    fn schema_counts() {
        let l = linked();
        let open = l.domain.action(&sym("open-door")).unwrap();
        assert_eq!(ground_schema(open, &l).len(), 3);
        assert_eq!(instance_count(open, &l), 3);
        let moves = l.domain.action(&sym("move")).unwrap();
        assert_eq!(instance_count(moves, &l), 9);
        // from = to would add and delete the same atom.
        assert_eq!(ground_schema(moves, &l).len(), 6);
    }

    #[test]
    fn fluent_count_matches_product_sum() {
        let l = linked();
        // in: 1*3, owns: 1*4, opened: 3, adjacent: 3*3
        assert_eq!(all_fluents(&l).len(), 3 + 4 + 3 + 9);
    }

    #[test]
    fn static_pruning_removes_non_adjacent_moves() {
        let l = linked();
        let full = build_problem(&l, &GroundOptions { prune_statics: false, ..Default::default() }).unwrap();
        let pruned = prune_statics(&full);
        assert_eq!(full.actions().len(), 9);
        // 3 door openings and the single adjacent move survive.
        assert_eq!(pruned.actions().len(), 4);
        let mv = pruned.find_action(&sym("move"), &[sym("a1"), sym("hallway"), sym("livingroom")]).unwrap();
        assert_eq!(mv.pre_pos().len(), 1);
        assert_eq!(pruned.fluents(), full.fluents());
    }

    #[test]
    fn zero_parameter_schema_and_budget() {
        let domain = "(define (domain z) (:predicates (p)) (:action a :effect (p)))";
        let problem = "(define (problem z1) (:domain z) (:init))";
        let l = load(domain, problem).unwrap().value;
        let p = build_problem(&l, &GroundOptions::default()).unwrap();
        assert_eq!(p.actions().len(), 1);
        assert!(p.goal().is_empty());
        let err = build_problem(&linked(), &GroundOptions { instance_budget: 5, prune_statics: true }).unwrap_err();
        assert!(matches!(err, GroundError::TooManyInstances { .. }));
    }

    #[test]
    fn tuple_enumeration_handles_empty_inputs() {
        let mut n = 0;
        for_each_tuple(&[], |t| {
            assert!(t.is_empty());
            n += 1;
        });
        assert_eq!(n, 1);
        for_each_tuple(&[vec![sym("a")], vec![]], |_| panic!("no tuples expected"));
    }
}
