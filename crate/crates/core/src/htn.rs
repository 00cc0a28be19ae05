//! Totally ordered HTN planning in the state-based style: always refine the
//! first task of the network, applying primitive tasks as they come.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::time::Instant;

use crate::ground::{build_problem, for_each_tuple, objects_of_type, ClassicalProblem, GroundError, GroundOptions};
use crate::model::{applicable, progress, GroundAction, GroundAtom, Plan, State, Symbol};
use crate::pddl::{
    link, parse_domain, parse_problem, substitute, unify, AtomExpr, Binding, Checked, Diagnostic, DiagnosticCode,
    Diagnostics, LinkedProblem, MethodDecl, Span,
};
use crate::search::{Outcome, SearchResult, SearchStats};

/// A ground task: a primitive (action) or compound task name with constant
/// arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Task {
    pub name: Symbol,
    pub args: Vec<Symbol>,
}

impl Task {
    pub fn new(name: Symbol, args: Vec<Symbol>) -> Self {
        Task { name, args }
    }

    fn as_atom(&self) -> GroundAtom {
        GroundAtom::new(self.name.clone(), self.args.clone())
    }

    fn from_atom(atom: GroundAtom) -> Self {
        Task {
            name: atom.predicate,
            args: atom.args,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_atom().fmt(f)
    }
}

impl fmt::Debug for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Primitive,
    Compound,
}

/// An ordered task network; list order is execution order.
pub type TaskNetwork = Vec<Task>;

#[derive(Debug, Clone)]
pub struct HtnProblem {
    pub linked: LinkedProblem,
    /// Ground operators for the primitive tasks. Not statically pruned.
    pub operators: ClassicalProblem,
    pub methods: Vec<MethodDecl>,
    pub initial_network: TaskNetwork,
}

impl HtnProblem {
    pub fn from_linked(linked: LinkedProblem) -> Result<Self, GroundError> {
        let operators = build_problem(
            &linked,
            &GroundOptions {
                prune_statics: false,
                ..Default::default()
            },
        )?;
        let initial_network = linked
            .problem
            .htn
            .iter()
            .flatten()
            .map(|t| Task::from_atom(t.to_ground().expect("initial tasks are ground")))
            .collect();
        Ok(HtnProblem {
            methods: linked.domain.methods.clone(),
            linked,
            operators,
            initial_network,
        })
    }

    pub fn init(&self) -> &State {
        self.operators.init()
    }

    pub fn kind(&self, name: &Symbol) -> Option<TaskKind> {
        if self.linked.domain.action(name).is_some() {
            Some(TaskKind::Primitive)
        } else if self.linked.domain.task(name).is_some() {
            Some(TaskKind::Compound)
        } else {
            None
        }
    }

    /// The ground operator for a primitive task, if its arguments fit.
    pub fn operator(&self, task: &Task) -> Option<&GroundAction> {
        self.operators.find_action(&task.name, &task.args)
    }

    /// Default depth bound: ten decompositions per operator schema and method.
    pub fn default_depth_bound(&self) -> usize {
        10 * (self.linked.domain.actions.len() + self.methods.len())
    }
}

/// Parses and links an HTN domain/problem pair and grounds its operators.
pub fn parse_htn(domain_text: &str, problem_text: &str) -> Result<Checked<HtnProblem>, Diagnostics> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text)?;
    let linked = link(&domain.value, &problem.value)?;
    let mut diags = Diagnostics::default();
    for task in problem.value.htn.iter().flatten() {
        let arity = domain
            .value
            .action(&task.predicate)
            .map(|a| a.params.len())
            .or_else(|| domain.value.task(&task.predicate).map(|t| t.params.len()));
        match arity {
            None => diags.push(Diagnostic::error(
                DiagnosticCode::UnknownTask,
                task.span,
                format!("initial network uses unknown task `{}`", task.predicate),
            )),
            Some(n) if n != task.args.len() => diags.push(Diagnostic::error(
                DiagnosticCode::ArityMismatch,
                task.span,
                format!("task `{}` takes {n} argument(s), got {}", task.predicate, task.args.len()),
            )),
            Some(_) => {}
        }
    }
    if diags.has_errors() {
        return Err(diags);
    }
    let htn = HtnProblem::from_linked(linked.value).map_err(|e| {
        let mut d = Diagnostics::default();
        d.push(Diagnostic::error(DiagnosticCode::Unsupported, Span::default(), e.to_string()));
        d
    })?;
    let mut warnings = domain.warnings;
    warnings.extend(problem.warnings);
    warnings.extend(linked.warnings);
    Ok(Checked { value: htn, warnings })
}

/// Methods whose task pattern matches `task` and whose precondition holds
/// in `s`, with every parameter bound. Method declaration order, then
/// binding order.
pub fn applicable_methods<'p>(task: &Task, s: &State, p: &'p HtnProblem) -> Vec<(&'p MethodDecl, Binding)> {
    let mut out = Vec::new();
    let atom = task.as_atom();
    let linked = &p.linked;
    for m in &p.methods {
        let Some(binding) = unify(&m.task, &atom) else {
            continue;
        };
        let well_typed = m.params.iter().all(|param| match binding.get(&param.name) {
            Some(obj) => linked
                .objects
                .type_of(obj)
                .is_some_and(|t| linked.types.is_subtype(t, &param.ty)),
            None => true,
        });
        if !well_typed {
            continue;
        }
        let free: Vec<_> = m.params.iter().filter(|param| !binding.contains_key(&param.name)).collect();
        let lists: Vec<Vec<Symbol>> = free.iter().map(|param| objects_of_type(&param.ty, linked)).collect();
        for_each_tuple(&lists, |values| {
            let mut full = binding.clone();
            for (param, value) in free.iter().zip(values) {
                full.insert(param.name.clone(), value.clone());
            }
            let holds = m.precondition.iter().all(|lit| {
                let atom = substitute(&lit.atom, &full).expect("method variables are bound");
                s.contains(&atom) == lit.positive
            });
            if holds {
                out.push((m, full));
            }
        });
    }
    out
}

fn instantiate(tasks: &[AtomExpr], binding: &Binding) -> Vec<Task> {
    tasks
        .iter()
        .map(|t| Task::from_atom(substitute(t, binding).expect("subtask variables are bound")))
        .collect()
}

/// What one decomposition step did to the first task of the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepRecord {
    Primitive { task: Task, action: GroundAction },
    Method { task: Task, method: Symbol, binding: Binding, subtasks: usize },
}

#[derive(Debug, Clone)]
pub struct Successor {
    pub network: TaskNetwork,
    pub state: State,
    pub action: Option<GroundAction>,
    pub record: StepRecord,
}

/// Successors of refining the first task of `tn` in state `s`.
///
/// # Panics
/// If `tn` is empty.
pub fn decompose_step(tn: &[Task], s: &State, p: &HtnProblem) -> Vec<Successor> {
    let (first, rest) = tn.split_first().expect("decompose_step needs a non-empty network");
    match p.kind(&first.name) {
        Some(TaskKind::Primitive) => match p.operator(first) {
            Some(op) if applicable(s, op) => vec![Successor {
                network: rest.to_vec(),
                state: progress(s, op),
                action: Some(op.clone()),
                record: StepRecord::Primitive {
                    task: first.clone(),
                    action: op.clone(),
                },
            }],
            _ => Vec::new(),
        },
        Some(TaskKind::Compound) => applicable_methods(first, s, p)
            .into_iter()
            .map(|(m, binding)| {
                let mut network = instantiate(&m.subtasks, &binding);
                let subtasks = network.len();
                network.extend_from_slice(rest);
                Successor {
                    network,
                    state: s.clone(),
                    action: None,
                    record: StepRecord::Method {
                        task: first.clone(),
                        method: m.name.clone(),
                        binding,
                        subtasks,
                    },
                }
            })
            .collect(),
        None => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HtnConfig {
    /// Maximum decomposition steps along one branch; `None` uses
    /// [`HtnProblem::default_depth_bound`].
    pub depth_bound: Option<usize>,
    pub node_budget: usize,
}

impl Default for HtnConfig {
    fn default() -> Self {
        HtnConfig {
            depth_bound: None,
            node_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceNode {
    Primitive {
        task: Task,
        action: GroundAction,
    },
    Method {
        task: Task,
        method: Symbol,
        binding: Binding,
        children: Vec<TraceNode>,
    },
}

impl TraceNode {
    pub fn task(&self) -> &Task {
        match self {
            TraceNode::Primitive { task, .. } | TraceNode::Method { task, .. } => task,
        }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a GroundAction>) {
        match self {
            TraceNode::Primitive { action, .. } => out.push(action),
            TraceNode::Method { children, .. } => children.iter().for_each(|c| c.leaves(out)),
        }
    }
}

/// The decomposition tree behind a plan, one root per initial task.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecompositionTrace {
    pub roots: Vec<TraceNode>,
}

impl DecompositionTrace {
    /// Rebuilds the tree from step records in the order they were taken.
    /// Total ordering makes that a pre-order walk.
    pub fn from_records(records: &[StepRecord], roots: usize) -> Option<Self> {
        fn build(it: &mut std::slice::Iter<'_, StepRecord>) -> Option<TraceNode> {
            Some(match it.next()? {
                StepRecord::Primitive { task, action } => TraceNode::Primitive {
                    task: task.clone(),
                    action: action.clone(),
                },
                StepRecord::Method {
                    task,
                    method,
                    binding,
                    subtasks,
                } => TraceNode::Method {
                    task: task.clone(),
                    method: method.clone(),
                    binding: binding.clone(),
                    children: (0..*subtasks).map(|_| build(it)).collect::<Option<_>>()?,
                },
            })
        }
        let mut it = records.iter();
        let roots = (0..roots).map(|_| build(&mut it)).collect::<Option<_>>()?;
        it.next().is_none().then_some(DecompositionTrace { roots })
    }

    /// Primitive leaves, left to right.
    pub fn leaves(&self) -> Vec<&GroundAction> {
        let mut out = Vec::new();
        self.roots.iter().for_each(|r| r.leaves(&mut out));
        out
    }

    /// Indented text rendering.
    pub fn render(&self) -> String {
        fn walk(node: &TraceNode, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match node {
                TraceNode::Primitive { action, .. } => {
                    let _ = writeln!(out, "{pad}{action}");
                }
                TraceNode::Method {
                    task, method, children, ..
                } => {
                    let _ = writeln!(out, "{pad}{task} by {method}");
                    children.iter().for_each(|c| walk(c, depth + 1, out));
                }
            }
        }
        let mut out = String::new();
        self.roots.iter().for_each(|r| walk(r, 0, &mut out));
        out
    }
}

#[derive(Debug, Clone)]
pub struct HtnResult {
    pub result: SearchResult,
    pub trace: Option<DecompositionTrace>,
}

struct Node {
    network: TaskNetwork,
    state: State,
    depth: usize,
    parent: Option<usize>,
    record: Option<StepRecord>,
}

/// Depth-first search over decomposition choices from the initial network.
pub fn seek_plan(p: &HtnProblem, config: &HtnConfig) -> HtnResult {
    let started = Instant::now();
    let bound = config.depth_bound.unwrap_or_else(|| p.default_depth_bound());
    let mut stats = SearchStats::default();
    let mut nodes = vec![Node {
        network: p.initial_network.clone(),
        state: p.init().clone(),
        depth: 0,
        parent: None,
        record: None,
    }];
    let mut stack = vec![0usize];
    let mut cut = false;
    stats.max_frontier = 1;
    let done = |outcome, trace, mut stats: SearchStats| {
        stats.duration = started.elapsed();
        HtnResult {
            result: SearchResult { outcome, stats },
            trace,
        }
    };
    while let Some(id) = stack.pop() {
        if nodes[id].network.is_empty() {
            let mut records = Vec::new();
            let mut cursor = id;
            while let Some(parent) = nodes[cursor].parent {
                records.push(nodes[cursor].record.clone().expect("non-root nodes carry a record"));
                cursor = parent;
            }
            records.reverse();
            let trace = DecompositionTrace::from_records(&records, p.initial_network.len());
            let plan = Plan::new(
                records
                    .into_iter()
                    .filter_map(|r| match r {
                        StepRecord::Primitive { action, .. } => Some(action),
                        StepRecord::Method { .. } => None,
                    })
                    .collect(),
            );
            return done(Outcome::Plan(plan), trace, stats);
        }
        if nodes[id].depth >= bound {
            cut = true;
            continue;
        }
        if stats.nodes_expanded >= config.node_budget {
            return done(Outcome::BudgetExhausted, None, stats);
        }
        stats.nodes_expanded += 1;
        let successors = decompose_step(&nodes[id].network, &nodes[id].state, p);
        let depth = nodes[id].depth + 1;
        for s in successors.into_iter().rev() {
            stats.nodes_generated += 1;
            nodes.push(Node {
                network: s.network,
                state: s.state,
                depth,
                parent: Some(id),
                record: Some(s.record),
            });
            stack.push(nodes.len() - 1);
        }
        stats.max_frontier = stats.max_frontier.max(stack.len());
    }
    let outcome = if cut { Outcome::BudgetExhausted } else { Outcome::Unsolvable };
    done(outcome, None, stats)
}

/// Bindings rendered as `?x=a ?y=b` in variable order.
pub fn format_binding(binding: &Binding) -> String {
    let parts: Vec<String> = binding.iter().map(|(k, v)| format!("?{k}={v}")).collect();
    parts.join(" ")
}

/// Task-name → method-count table, handy for reporting.
pub fn method_counts(p: &HtnProblem) -> BTreeMap<Symbol, usize> {
    let mut out = BTreeMap::new();
    for m in &p.methods {
        *out.entry(m.task.predicate.clone()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;
    use crate::model::{apply_sequence, sym};

    fn htn(name: &str) -> HtnProblem {
        let f = fixture(name).unwrap();
        parse_htn(f.domain, f.problem).unwrap().value
    }

    #[test]
    fn keys_fixture_shape() {
        let p = htn("keys-htn-p1");
        assert_eq!(p.linked.domain.tasks.len(), 1);
        assert_eq!(p.methods.len(), 1);
        assert_eq!(p.methods[0].subtasks.len(), 3);
        assert_eq!(p.initial_network, vec![Task::new(sym("leave-home"), vec![])]);
    }

    #[test]
    fn one_step_of_decomposition() {
        let p = htn("keys-htn-p1");
        let methods = applicable_methods(&p.initial_network[0], p.init(), &p);
        assert_eq!(methods.len(), 1);
        assert!(methods[0].1.is_empty());
        let next = decompose_step(&p.initial_network, p.init(), &p);
        assert_eq!(next.len(), 1);
        let names: Vec<String> = next[0].network.iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["(get_keys)", "(open_door)", "(leave)"]);
        assert_eq!(&next[0].state, p.init());
        let after = decompose_step(&next[0].network, &next[0].state, &p);
        assert_eq!(after.len(), 1);
        assert_eq!(after[0].network.len(), 2);
        assert!(after[0].action.is_some());
        assert!(after[0].state.contains(&GroundAtom::parse("(keys)")));
    }

    #[test]
    fn keys_plan_and_trace() {
        let p = htn("keys-htn-p1");
        let r = seek_plan(&p, &HtnConfig::default());
        let plan = r.result.plan().unwrap();
        assert_eq!(plan.names(), ["(get_keys)", "(open_door)", "(leave)"]);
        let trace = r.trace.unwrap();
        let leaves: Vec<_> = trace.leaves().into_iter().cloned().collect();
        assert_eq!(leaves, plan.steps());
        assert!(trace.render().starts_with("(leave-home) by leave-with-keys\n  (get_keys)"));
    }

    #[test]
    fn recursion_hits_the_depth_bound() {
        let p = htn("keys-htn-loop-p1");
        let r = seek_plan(&p, &HtnConfig::default());
        assert_eq!(r.result.outcome, Outcome::BudgetExhausted);
    }

    #[test]
    fn backtracks_over_methods() {
        let p = htn("keys-htn-choice-p1");
        let r = seek_plan(&p, &HtnConfig::default());
        assert_eq!(r.result.plan().unwrap().names(), ["(get_keys)", "(open_door)", "(leave)"]);
        match &r.trace.unwrap().roots[0] {
            TraceNode::Method { method, .. } => assert_eq!(method.as_str(), "fetch-keys-first"),
            other => panic!("unexpected root {other:?}"),
        }
    }

    #[test]
    fn typed_methods_enumerate_free_parameters() {
        let p = htn("home-htn-p1");
        let r = seek_plan(&p, &HtnConfig::default());
        let plan = r.result.plan().unwrap();
        assert_eq!(
            plan.names(),
            [
                "(unlock a1 d1 k1)",
                "(open-door d1)",
                "(walk a1 livingroom hallway d1)",
                "(open-door d3)",
                "(walk a1 hallway bathroom d3)"
            ]
        );
        apply_sequence(p.init(), plan).unwrap();
    }

    #[test]
    fn method_preconditions_filter_bindings() {
        let domain = "(define (domain h)
            (:types key agent)
            (:predicates (owns ?a - agent ?k - key) (happy))
            (:task cheer :parameters ())
            (:action smile :effect (happy))
            (:method with-k1 :parameters (?a - agent) :task (cheer) :precondition (owns ?a k1) :ordered-subtasks (smile))
            (:method with-k4 :parameters (?a - agent) :task (cheer) :precondition (owns ?a k4) :ordered-subtasks (smile)))";
        let problem = "(define (problem h1) (:domain h) (:objects a1 - agent k1 k4 - key)
            (:init (owns a1 k1)) (:htn :ordered-subtasks (and (cheer))))";
        let p = parse_htn(domain, problem).unwrap().value;
        let found = applicable_methods(&p.initial_network[0], p.init(), &p);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].0.name.as_str(), "with-k1");
        assert_eq!(found[0].1[&sym("a")], sym("a1"));
    }

    #[test]
    fn empty_network_and_dead_ends() {
        let domain = "(define (domain e) (:predicates (p)) (:task t :parameters ()) (:action a :precondition (p) :effect (not (p))))";
        let problem = "(define (problem e1) (:domain e) (:init))";
        let parsed = parse_htn(domain, problem).unwrap();
        assert!(parsed.warnings.codes().contains(&DiagnosticCode::Undecomposable));
        let p = parsed.value;
        let r = seek_plan(&p, &HtnConfig::default());
        assert!(r.result.plan().unwrap().is_empty());
        let t = Task::new(sym("t"), vec![]);
        assert!(applicable_methods(&t, p.init(), &p).is_empty());
        assert!(decompose_step(&[t], p.init(), &p).is_empty());
        let problem = "(define (problem e2) (:domain e) (:init) (:htn :ordered-subtasks (and (a))))";
        let p = parse_htn(domain, problem).unwrap().value;
        assert_eq!(seek_plan(&p, &HtnConfig::default()).result.outcome, Outcome::Unsolvable);
    }

    #[test]
    fn unbound_method_variable_is_an_error() {
        let domain = "(define (domain u)
            (:predicates (p ?x))
            (:task t :parameters ())
            (:action a :parameters (?x) :effect (p ?x))
            (:method m :parameters () :task (t)
              :ordered-subtasks (a ?y)))";
        let problem = "(define (problem u1) (:domain u) (:init))";
        let err = parse_htn(domain, problem).unwrap_err();
        assert!(err.codes().contains(&DiagnosticCode::UnboundVariable));
    }

    #[test]
    fn unknown_initial_task() {
        let domain = "(define (domain e) (:predicates (p)) (:action a :effect (p)))";
        let problem = "(define (problem e1) (:domain e) (:init) (:htn :ordered-subtasks (and (fly))))";
        assert!(parse_htn(domain, problem).unwrap_err().codes().contains(&DiagnosticCode::UnknownTask));
    }
}
