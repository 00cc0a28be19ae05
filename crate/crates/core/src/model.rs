//! Ground vocabulary, states, actions and the transition semantics shared by
//! every engine.
//!
//! States are sets of ground atoms under the closed-world assumption: an atom
//! that is not in the set is false. All values here are immutable once built;
//! [`apply`] returns a fresh [`State`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// A case-insensitive identifier, stored in lowercase.
///
/// Two symbols compare equal iff their normalized text is equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid identifier `{0}`")]
pub struct InvalidSymbol(pub String);

impl Symbol {
    /// Builds a symbol from identifier text: a leading letter followed by
    /// letters, digits, `-` or `_`.
    pub fn new(text: &str) -> Result<Self, InvalidSymbol> {
        if is_identifier(text) {
            Ok(Symbol(Arc::from(text.to_ascii_lowercase())))
        } else {
            Err(InvalidSymbol(text.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(is_identifier_char)
}

pub(crate) fn is_identifier_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

/// Shorthand used throughout tests and fixtures. Panics on invalid text.
pub fn sym(text: &str) -> Symbol {
    Symbol::new(text).unwrap_or_else(|e| panic!("{e}"))
}

/// A predicate applied to constant arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: Symbol,
    pub args: Vec<Symbol>,
}

impl GroundAtom {
    pub fn new(predicate: Symbol, args: Vec<Symbol>) -> Self {
        GroundAtom { predicate, args }
    }

    /// Parses the textual form `(pred a b)` or a bare `pred` for 0-ary atoms.
    /// Intended for tests and fixtures; panics on malformed text.
    pub fn parse(text: &str) -> Self {
        let trimmed = text.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = trimmed.split_whitespace();
        let predicate = sym(parts.next().expect("atom needs a predicate"));
        GroundAtom::new(predicate, parts.map(sym).collect())
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for GroundAtom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub type AtomSet = BTreeSet<GroundAtom>;

/// The set of atoms that are true; everything else is false.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct State {
    atoms: AtomSet,
}

impl State {
    pub fn new(atoms: impl IntoIterator<Item = GroundAtom>) -> Self {
        State {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn atoms(&self) -> &AtomSet {
        &self.atoms
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl FromIterator<GroundAtom> for State {
    fn from_iter<T: IntoIterator<Item = GroundAtom>>(iter: T) -> Self {
        State::new(iter)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Conjunction of atoms that must hold and atoms that must not.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Goal {
    positive: AtomSet,
    negative: AtomSet,
}

impl Goal {
    pub fn new(positive: AtomSet, negative: AtomSet) -> Result<Self, ModelError> {
        let overlap: Vec<_> = positive.intersection(&negative).cloned().collect();
        if !overlap.is_empty() {
            return Err(ModelError::InconsistentGoal { atoms: overlap });
        }
        Ok(Goal { positive, negative })
    }

    pub fn empty() -> Self {
        Goal::default()
    }

    pub fn positive(&self) -> &AtomSet {
        &self.positive
    }

    pub fn negative(&self) -> &AtomSet {
        &self.negative
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for atom in &self.positive {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{atom}")?;
        }
        for atom in &self.negative {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "(not {atom})")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A fully instantiated operator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAction {
    name: Symbol,
    args: Vec<Symbol>,
    pre_pos: AtomSet,
    pre_neg: AtomSet,
    add: AtomSet,
    del: AtomSet,
}

impl GroundAction {
    /// Rejects actions that both add and delete an atom, or that require an
    /// atom to be simultaneously true and false.
    pub fn new(
        name: Symbol,
        args: Vec<Symbol>,
        pre_pos: AtomSet,
        pre_neg: AtomSet,
        add: AtomSet,
        del: AtomSet,
    ) -> Result<Self, ModelError> {
        let label = format_call(&name, &args);
        let clash: Vec<_> = add.intersection(&del).cloned().collect();
        if !clash.is_empty() {
            return Err(ModelError::ConflictingEffects {
                action: label,
                atoms: clash,
            });
        }
        let clash: Vec<_> = pre_pos.intersection(&pre_neg).cloned().collect();
        if !clash.is_empty() {
            return Err(ModelError::ContradictoryPrecondition {
                action: label,
                atoms: clash,
            });
        }
        Ok(GroundAction {
            name,
            args,
            pre_pos,
            pre_neg,
            add,
            del,
        })
    }

    pub fn name(&self) -> &Symbol {
        &self.name
    }

    pub fn args(&self) -> &[Symbol] {
        &self.args
    }

    pub fn pre_pos(&self) -> &AtomSet {
        &self.pre_pos
    }

    pub fn pre_neg(&self) -> &AtomSet {
        &self.pre_neg
    }

    pub fn add(&self) -> &AtomSet {
        &self.add
    }

    pub fn del(&self) -> &AtomSet {
        &self.del
    }

    /// True when this action has the given name and arguments.
    pub fn is_call(&self, name: &Symbol, args: &[Symbol]) -> bool {
        &self.name == name && self.args == args
    }

    /// Same action with a different precondition set. Used by static pruning.
    pub(crate) fn with_preconditions(&self, pre_pos: AtomSet, pre_neg: AtomSet) -> Self {
        GroundAction {
            pre_pos,
            pre_neg,
            ..self.clone()
        }
    }
}

fn format_call(name: &Symbol, args: &[Symbol]) -> String {
    let mut out = format!("({name}");
    for arg in args {
        out.push(' ');
        out.push_str(arg.as_str());
    }
    out.push(')');
    out
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_call(&self.name, &self.args))
    }
}

impl fmt::Debug for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for GroundAction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A sequence of ground actions. May be empty.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Plan {
    steps: Vec<GroundAction>,
}

impl Plan {
    pub fn new(steps: Vec<GroundAction>) -> Self {
        Plan { steps }
    }

    pub fn steps(&self) -> &[GroundAction] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroundAction> {
        self.steps.iter()
    }

    pub fn into_steps(self) -> Vec<GroundAction> {
        self.steps
    }

    /// Action names, handy for assertions.
    pub fn names(&self) -> Vec<String> {
        self.steps.iter().map(|a| a.to_string()).collect()
    }
}

impl From<Vec<GroundAction>> for Plan {
    fn from(steps: Vec<GroundAction>) -> Self {
        Plan { steps }
    }
}

impl<'a> IntoIterator for &'a Plan {
    type Item = &'a GroundAction;
    type IntoIter = std::slice::Iter<'a, GroundAction>;

    fn into_iter(self) -> Self::IntoIter {
        self.steps.iter()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("action {action} is not applicable")]
    NotApplicable { action: String },
    #[error("plan step {index} is not applicable")]
    NotApplicableAt { index: usize },
    #[error("goal requires atoms to be both true and false: {atoms:?}")]
    InconsistentGoal { atoms: Vec<GroundAtom> },
    #[error("action {action} both adds and deletes {atoms:?}")]
    ConflictingEffects {
        action: String,
        atoms: Vec<GroundAtom>,
    },
    #[error("action {action} requires {atoms:?} to be both true and false")]
    ContradictoryPrecondition {
        action: String,
        atoms: Vec<GroundAtom>,
    },
}

/// `pre+ ⊆ s` and `pre- ∩ s = ∅`.
pub fn applicable(state: &State, action: &GroundAction) -> bool {
    action.pre_pos.is_subset(&state.atoms) && action.pre_neg.is_disjoint(&state.atoms)
}

/// Progression: `(s ∪ add) ∖ del`.
pub fn apply(state: &State, action: &GroundAction) -> Result<State, ModelError> {
    if !applicable(state, action) {
        return Err(ModelError::NotApplicable {
            action: action.to_string(),
        });
    }
    Ok(progress(state, action))
}

/// Progression without the applicability check.
pub(crate) fn progress(state: &State, action: &GroundAction) -> State {
    let mut atoms = state.atoms.clone();
    atoms.extend(action.add.iter().cloned());
    for atom in &action.del {
        atoms.remove(atom);
    }
    State { atoms }
}

/// Left fold of [`apply`]; reports the index of the first inapplicable step.
pub fn apply_sequence(state: &State, plan: &Plan) -> Result<State, ModelError> {
    plan.steps
        .iter()
        .enumerate()
        .try_fold(state.clone(), |s, (index, action)| {
            apply(&s, action).map_err(|_| ModelError::NotApplicableAt { index })
        })
}

pub fn satisfies(state: &State, goal: &Goal) -> bool {
    goal.positive.is_subset(&state.atoms) && goal.negative.is_disjoint(&state.atoms)
}

/// An action is relevant when it achieves part of the goal (adds a positive
/// goal atom or deletes a negative one) and undoes none of it.
pub fn relevant(action: &GroundAction, goal: &Goal) -> bool {
    let contributes = !action.add.is_disjoint(&goal.positive)
        || !action.del.is_disjoint(&goal.negative);
    contributes
        && action.del.is_disjoint(&goal.positive)
        && action.add.is_disjoint(&goal.negative)
}

/// Regression of `goal` through `action`.
pub fn regress(goal: &Goal, action: &GroundAction) -> Result<Goal, ModelError> {
    let positive: AtomSet = goal
        .positive
        .difference(&action.add)
        .chain(action.pre_pos.iter())
        .cloned()
        .collect();
    let negative: AtomSet = goal
        .negative
        .difference(&action.del)
        .chain(action.pre_neg.iter())
        .cloned()
        .collect();
    Goal::new(positive, negative)
}
