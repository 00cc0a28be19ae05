//! Plan checking by replay from the initial state.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ground::ClassicalProblem;
use crate::htn::{DecompositionTrace, HtnProblem, TraceNode};
use crate::model::{apply, applicable, satisfies, GroundAction, GroundAtom, Plan, State, Symbol};
use crate::pddl::{read_sexps, tokenize, Diagnostic, DiagnosticCode, Sexp, Span, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Failure {
    NotApplicableAt {
        index: usize,
        action: GroundAction,
        missing: Vec<GroundAtom>,
        violated: Vec<GroundAtom>,
    },
    GoalUnsatisfied {
        missing: Vec<GroundAtom>,
        violated: Vec<GroundAtom>,
    },
    TraceMismatch {
        reason: String,
    },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atoms(label: &str, xs: &[GroundAtom], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if !xs.is_empty() {
                let parts: Vec<String> = xs.iter().map(|a| a.to_string()).collect();
                write!(f, "; {label} {}", parts.join(" "))?;
            }
            Ok(())
        }
        match self {
            Failure::NotApplicableAt {
                index,
                action,
                missing,
                violated,
            } => {
                write!(f, "step {index} {action} is not applicable")?;
                atoms("missing", missing, f)?;
                atoms("violated", violated, f)
            }
            Failure::GoalUnsatisfied { missing, violated } => {
                f.write_str("goal not satisfied")?;
                atoms("missing", missing, f)?;
                atoms("violated", violated, f)
            }
            Failure::TraceMismatch { reason } => write!(f, "decomposition trace mismatch: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub valid: bool,
    pub failure: Option<Failure>,
    /// One state per prefix of the plan, starting with the initial state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_trace: Option<Vec<State>>,
}

impl Verdict {
    fn ok(state_trace: Option<Vec<State>>) -> Self {
        Verdict {
            valid: true,
            failure: None,
            state_trace,
        }
    }

    fn fail(failure: Failure, state_trace: Option<Vec<State>>) -> Self {
        Verdict {
            valid: false,
            failure: Some(failure),
            state_trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidateError {
    #[error("step {index}: `{step}` is not a ground action of this problem")]
    UnknownAction { index: usize, step: String },
}

fn missing_and_violated<'a>(
    s: &State,
    positive: impl IntoIterator<Item = &'a GroundAtom>,
    negative: impl IntoIterator<Item = &'a GroundAtom>,
) -> (Vec<GroundAtom>, Vec<GroundAtom>) {
    let missing = positive.into_iter().filter(|a| !s.contains(a)).cloned().collect();
    let violated = negative.into_iter().filter(|a| s.contains(a)).cloned().collect();
    (missing, violated)
}

/// Replays `plan` from the initial state. Returns the final state, or the
/// failure at the first blocked step.
fn replay<'p>(
    operators: &'p ClassicalProblem,
    plan: &Plan,
    trace: &mut Option<Vec<State>>,
) -> Result<Result<State, Failure>, ValidateError> {
    let resolved = plan
        .iter()
        .enumerate()
        .map(|(index, step)| {
            operators
                .find_action(step.name(), step.args())
                .ok_or_else(|| ValidateError::UnknownAction {
                    index,
                    step: step.to_string(),
                })
        })
        .collect::<Result<Vec<&'p GroundAction>, _>>()?;
    let mut state = operators.init().clone();
    if let Some(t) = trace.as_mut() {
        t.push(state.clone());
    }
    for (index, action) in resolved.into_iter().enumerate() {
        if !applicable(&state, action) {
            let (missing, violated) = missing_and_violated(&state, action.pre_pos(), action.pre_neg());
            return Ok(Err(Failure::NotApplicableAt {
                index,
                action: action.clone(),
                missing,
                violated,
            }));
        }
        state = apply(&state, action).expect("applicability checked above");
        if let Some(t) = trace.as_mut() {
            t.push(state.clone());
        }
    }
    Ok(Ok(state))
}

/// Checks that `plan` is applicable from the initial state and reaches the
/// goal. Steps are matched to the problem's actions by name and arguments.
pub fn validate_plan(p: &ClassicalProblem, plan: &Plan, with_trace: bool) -> Result<Verdict, ValidateError> {
    let mut trace = with_trace.then(Vec::new);
    match replay(p, plan, &mut trace)? {
        Err(failure) => Ok(Verdict::fail(failure, trace)),
        Ok(end) if satisfies(&end, p.goal()) => Ok(Verdict::ok(trace)),
        Ok(end) => {
            let (missing, violated) = missing_and_violated(&end, p.goal().positive(), p.goal().negative());
            Ok(Verdict::fail(Failure::GoalUnsatisfied { missing, violated }, trace))
        }
    }
}

/// Checks that an HTN plan is executable from the initial state. There is no
/// goal. With a trace, also checks that it decomposes the initial network
/// using declared methods and that its leaves are exactly the plan.
pub fn validate_htn_solution(
    p: &HtnProblem,
    plan: &Plan,
    trace: Option<&DecompositionTrace>,
) -> Result<Verdict, ValidateError> {
    let mut states = None;
    if let Err(failure) = replay(&p.operators, plan, &mut states)? {
        return Ok(Verdict::fail(failure, None));
    }
    if let Some(trace) = trace {
        if let Err(reason) = check_trace(p, plan, trace) {
            return Ok(Verdict::fail(Failure::TraceMismatch { reason }, None));
        }
    }
    Ok(Verdict::ok(None))
}

fn check_trace(p: &HtnProblem, plan: &Plan, trace: &DecompositionTrace) -> Result<(), String> {
    let roots: Vec<_> = trace.roots.iter().map(|r| r.task().clone()).collect();
    if roots != p.initial_network {
        return Err("roots differ from the initial task network".into());
    }
    let leaves: Vec<_> = trace.leaves().into_iter().cloned().collect();
    if leaves != plan.steps() {
        return Err("primitive leaves differ from the plan".into());
    }
    trace.roots.iter().try_for_each(|r| check_node(p, r))
}

fn check_node(p: &HtnProblem, node: &TraceNode) -> Result<(), String> {
    match node {
        TraceNode::Primitive { task, action } => {
            if !action.is_call(&task.name, &task.args) {
                return Err(format!("leaf {task} carries action {action}"));
            }
            Ok(())
        }
        TraceNode::Method {
            task,
            method,
            binding,
            children,
        } => {
            let m = p
                .methods
                .iter()
                .find(|m| &m.name == method)
                .ok_or_else(|| format!("unknown method {method}"))?;
            let head = crate::pddl::substitute(&m.task, binding).ok_or("method head is not fully bound")?;
            if head.predicate != task.name || head.args != task.args {
                return Err(format!("method {method} does not decompose {task}"));
            }
            if m.subtasks.len() != children.len() {
                return Err(format!("method {method} has {} subtasks, trace has {}", m.subtasks.len(), children.len()));
            }
            for (pattern, child) in m.subtasks.iter().zip(children) {
                let expected = crate::pddl::substitute(pattern, binding).ok_or("subtask is not fully bound")?;
                let got = child.task();
                if expected.predicate != got.name || expected.args != got.args {
                    return Err(format!("method {method} expects {expected}, trace has {got}"));
                }
                check_node(p, child)?;
            }
            Ok(())
        }
    }
}

/// A step read from a plan file, not yet matched to a ground action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub name: Symbol,
    pub args: Vec<Symbol>,
    pub span: Span,
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        GroundAtom::new(self.name.clone(), self.args.clone()).fmt(f)
    }
}

/// Reads a plan file: one `(action arg ...)` per step, `;` comments allowed.
pub fn parse_plan(text: &str) -> Result<Vec<PlanStep>, Diagnostic> {
    let tokens = tokenize(text)?;
    let mut steps = Vec::new();
    for sexp in read_sexps(tokens)? {
        let bad = |span| Diagnostic::error(DiagnosticCode::Syntax, span, "expected a step `(action arg ...)`");
        let Sexp::List { items, span } = &sexp else {
            return Err(bad(sexp.span()));
        };
        let mut words = Vec::with_capacity(items.len());
        for item in items {
            match item.token_of(TokenKind::Ident) {
                Some(w) => words.push(Symbol::new(w).map_err(|_| bad(item.span()))?),
                None => return Err(bad(item.span())),
            }
        }
        let Some((name, args)) = words.split_first() else {
            return Err(bad(*span));
        };
        steps.push(PlanStep {
            name: name.clone(),
            args: args.to_vec(),
            span: *span,
        });
    }
    Ok(steps)
}

/// Matches plan-file steps to the problem's ground actions.
pub fn resolve_plan(steps: &[PlanStep], p: &ClassicalProblem) -> Result<Plan, ValidateError> {
    steps
        .iter()
        .enumerate()
        .map(|(index, step)| {
            p.find_action(&step.name, &step.args)
                .cloned()
                .ok_or_else(|| ValidateError::UnknownAction {
                    index,
                    step: step.to_string(),
                })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Plan::new)
}

/// Renders a plan in the format [`parse_plan`] reads.
pub fn format_plan(plan: &Plan) -> String {
    plan.iter().map(|a| format!("{a}\n")).collect()
}
