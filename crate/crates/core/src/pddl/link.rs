//! Combines a domain with a problem: builds the object table, normalizes the
//! two object-declaration styles, and arity/type-checks every ground atom.

use std::collections::BTreeMap;

use super::ast::*;
use super::diagnostic::{Checked, Diagnostic, DiagnosticCode, Diagnostics, Span};
use super::types::TypeHierarchy;
use crate::model::{GroundAtom, Symbol};

use DiagnosticCode as Code;

/// Objects and constants with their most specific known type, in
/// declaration order (domain constants first).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectTable {
    entries: Vec<(Symbol, Symbol)>,
    index: BTreeMap<Symbol, usize>,
}

impl ObjectTable {
    pub fn new(entries: impl IntoIterator<Item = (Symbol, Symbol)>) -> Self {
        let mut table = ObjectTable::default();
        for (name, ty) in entries {
            table.insert(name, ty);
        }
        table
    }

    fn insert(&mut self, name: Symbol, ty: Symbol) {
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, ty));
    }

    pub fn type_of(&self, name: &Symbol) -> Option<&Symbol> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    /// Declaration position, used for canonical argument ordering.
    pub fn position(&self, name: &Symbol) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &Symbol) -> bool {
        self.index.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Symbol)> {
        self.entries.iter().map(|(n, t)| (n, t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every object whose type is `ty` or a descendant, in declaration order.
    pub fn objects_of_type(&self, ty: &Symbol, types: &TypeHierarchy) -> Vec<Symbol> {
        self.entries
            .iter()
            .filter(|(_, t)| types.is_subtype(t, ty))
            .map(|(n, _)| n.clone())
            .collect()
    }
}

/// A domain and problem that have been checked against each other.
#[derive(Debug, Clone)]
pub struct LinkedProblem {
    pub domain: DomainAst,
    pub problem: ProblemAst,
    pub types: TypeHierarchy,
    pub objects: ObjectTable,
    /// Initial atoms with unary type assertions such as `(room hallway)`
    /// removed when `room` is a type and not a predicate.
    pub init: Vec<GroundAtom>,
    pub goal_positive: Vec<GroundAtom>,
    pub goal_negative: Vec<GroundAtom>,
    /// Set when any precondition or goal uses `(not ...)`.
    pub negative_preconditions: bool,
}

pub fn link(domain: &DomainAst, problem: &ProblemAst) -> Result<Checked<LinkedProblem>, Diagnostics> {
    let mut diags = Diagnostics::default();
    if domain.name != problem.domain_name {
        diags.push(Diagnostic::error(
            Code::DomainNameMismatch,
            Span::default(),
            format!("problem `{}` is for domain `{}`, not `{}`", problem.name, problem.domain_name, domain.name),
        ));
    }
    let (types, _) = TypeHierarchy::from_declarations(&domain.types);
    let predicates: BTreeMap<&Symbol, &PredicateDecl> =
        domain.predicates.iter().map(|p| (&p.name, p)).collect();

    let mut objects = ObjectBuilder::new(&types);
    for c in &domain.constants {
        objects.declare(&c.name, &c.ty, c.span, &mut diags);
    }
    for o in problem.objects.iter().flatten() {
        if !types.is_declared(&o.ty) {
            diags.push(Diagnostic::error(Code::UnknownType, o.span, format!("object `{}` has undeclared type `{}`", o.name, o.ty)));
            continue;
        }
        objects.declare(&o.name, &o.ty, o.span, &mut diags);
    }

    // Unary atoms naming a type are object declarations.
    let mut init = Vec::new();
    for atom in &problem.init {
        let is_type = atom.args.len() == 1 && types.is_declared(&atom.predicate) && atom.predicate != object_type();
        if is_type {
            if let Some(Term::Const(obj)) = atom.args.first() {
                objects.declare(obj, &atom.predicate, atom.span, &mut diags);
            }
            if !predicates.contains_key(&atom.predicate) {
                continue;
            }
        }
        init.push(atom);
    }

    // Without an :objects section, remaining init arguments are implicit objects.
    let implicit = problem.objects.is_none();
    if implicit {
        for atom in &init {
            for arg in atom.args.iter() {
                if let Term::Const(c) = arg {
                    if !objects.table.contains(c) {
                        objects.declare(c, &object_type(), atom.span, &mut diags);
                    }
                }
            }
        }
    }

    let table = objects.table;
    let checker = AtomChecker {
        predicates: &predicates,
        types: &types,
        objects: &table,
    };
    let init: Vec<GroundAtom> = init
        .into_iter()
        .filter_map(|a| checker.check(a, ":init", &mut diags))
        .collect();
    let mut goal_positive = Vec::new();
    let mut goal_negative = Vec::new();
    for lit in &problem.goal {
        if let Some(atom) = checker.check(&lit.atom, ":goal", &mut diags) {
            if lit.positive {
                goal_positive.push(atom);
            } else {
                goal_negative.push(atom);
            }
        }
    }
    for pos in &goal_positive {
        if goal_negative.contains(pos) {
            diags.push(Diagnostic::error(Code::TypeMismatch, Span::default(), format!("goal requires {pos} to be both true and false")));
        }
    }

    // Constants named inside action and method bodies must exist.
    let bodies = domain
        .actions
        .iter()
        .flat_map(|a| a.precondition.iter().chain(&a.effect).map(|l| &l.atom))
        .chain(domain.methods.iter().flat_map(|m| {
            m.precondition
                .iter()
                .map(|l| &l.atom)
                .chain(&m.subtasks)
                .chain(std::iter::once(&m.task))
        }))
        .chain(problem.htn.iter().flatten());
    for atom in bodies {
        for arg in &atom.args {
            if let Term::Const(c) = arg {
                if !table.contains(c) {
                    diags.push(Diagnostic::error(Code::UnknownObject, atom.span, format!("unknown object `{c}` in {atom}")));
                }
            }
        }
    }

    if diags.has_errors() {
        return Err(diags);
    }
    let negative_preconditions = !goal_negative.is_empty()
        || domain
            .actions
            .iter()
            .flat_map(|a| &a.precondition)
            .chain(domain.methods.iter().flat_map(|m| &m.precondition))
            .any(|l| !l.positive);
    Ok(Checked {
        value: LinkedProblem {
            domain: domain.clone(),
            problem: problem.clone(),
            types,
            objects: table,
            init,
            goal_positive,
            goal_negative,
            negative_preconditions,
        },
        warnings: diags,
    })
}

struct ObjectBuilder<'a> {
    types: &'a TypeHierarchy,
    table: ObjectTable,
    spans: BTreeMap<Symbol, Span>,
}

impl<'a> ObjectBuilder<'a> {
    fn new(types: &'a TypeHierarchy) -> Self {
        ObjectBuilder {
            types,
            table: ObjectTable::default(),
            spans: BTreeMap::new(),
        }
    }

    /// Declares an object, refining its type when the new one is more
    /// specific.
    fn declare(&mut self, name: &Symbol, ty: &Symbol, span: Span, diags: &mut Diagnostics) {
        match self.table.index.get(name) {
            None => {
                self.table.insert(name.clone(), ty.clone());
                self.spans.insert(name.clone(), span);
            }
            Some(&i) => {
                let existing = self.table.entries[i].1.clone();
                if self.types.is_subtype(ty, &existing) {
                    self.table.entries[i].1 = ty.clone();
                } else if !self.types.is_subtype(&existing, ty) {
                    diags.push(
                        Diagnostic::error(
                            Code::TypeMismatch,
                            span,
                            format!("object `{name}` declared as both `{existing}` and `{ty}`"),
                        )
                        .with_related(self.spans[name]),
                    );
                }
            }
        }
    }
}

struct AtomChecker<'a> {
    predicates: &'a BTreeMap<&'a Symbol, &'a PredicateDecl>,
    types: &'a TypeHierarchy,
    objects: &'a ObjectTable,
}

impl AtomChecker<'_> {
    fn check(&self, atom: &AtomExpr, section: &str, diags: &mut Diagnostics) -> Option<GroundAtom> {
        let Some(decl) = self.predicates.get(&atom.predicate) else {
            diags.push(Diagnostic::error(Code::UnknownPredicate, atom.span, format!("unknown predicate `{}` in `{section}`", atom.predicate)));
            return None;
        };
        if decl.params.len() != atom.args.len() {
            diags.push(Diagnostic::error(
                Code::ArityMismatch,
                atom.span,
                format!("`{}` takes {} argument(s), got {} in `{section}`", atom.predicate, decl.params.len(), atom.args.len()),
            ));
            return None;
        }
        let mut ok = true;
        for (arg, param) in atom.args.iter().zip(&decl.params) {
            let Term::Const(obj) = arg else {
                ok = false;
                continue;
            };
            match self.objects.type_of(obj) {
                None => {
                    diags.push(Diagnostic::error(Code::UnknownObject, atom.span, format!("unknown object `{obj}` in {atom}")));
                    ok = false;
                }
                Some(ty) if !self.types.is_subtype(ty, &param.ty) => {
                    diags.push(Diagnostic::error(
                        Code::TypeMismatch,
                        atom.span,
                        format!("`{obj}` of type `{ty}` cannot fill a `{}` slot of `{}`", param.ty, atom.predicate),
                    ));
                    ok = false;
                }
                Some(_) => {}
            }
        }
        if ok {
            atom.to_ground()
        } else {
            None
        }
    }
}

/// Variable binding produced by [`unify`].
pub type Binding = BTreeMap<Symbol, Symbol>;

/// Matches a pattern against a ground atom position by position. Constants
/// must match exactly and repeated variables must bind consistently.
pub fn unify(pattern: &AtomExpr, atom: &GroundAtom) -> Option<Binding> {
    unify_extending(pattern, atom, Binding::new())
}

pub fn unify_extending(pattern: &AtomExpr, atom: &GroundAtom, mut binding: Binding) -> Option<Binding> {
    if pattern.predicate != atom.predicate || pattern.args.len() != atom.args.len() {
        return None;
    }
    for (term, value) in pattern.args.iter().zip(&atom.args) {
        match term {
            Term::Const(c) if c != value => return None,
            Term::Const(_) => {}
            Term::Var(v) => match binding.get(v) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    binding.insert(v.clone(), value.clone());
                }
            },
        }
    }
    Some(binding)
}

/// Applies a binding to a pattern; `None` if a variable is left unbound.
pub fn substitute(pattern: &AtomExpr, binding: &Binding) -> Option<GroundAtom> {
    let args = pattern
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Some(c.clone()),
            Term::Var(v) => binding.get(v).cloned(),
        })
        .collect::<Option<Vec<_>>>()?;
    Some(GroundAtom::new(pattern.predicate.clone(), args))
}
