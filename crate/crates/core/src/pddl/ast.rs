//! Syntax trees for domain and problem descriptions.
//!
//! Variable names are stored without the leading `?`; spans are carried for
//! diagnostics but ignored by equality (see [`Span`]).

use std::fmt;

use super::diagnostic::Span;
use crate::model::{sym, GroundAtom, Symbol};

/// Built-in root of every type hierarchy.
pub fn object_type() -> Symbol {
    sym("object")
}

/// A name with its declared type: a typed parameter, object, constant or
/// type declaration (where `ty` is the parent type).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypedName {
    pub name: Symbol,
    pub ty: Symbol,
    pub span: Span,
}

impl TypedName {
    pub fn new(name: Symbol, ty: Symbol) -> Self {
        TypedName {
            name,
            ty,
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Symbol),
    Const(Symbol),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// A predicate (or task) applied to terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomExpr {
    pub predicate: Symbol,
    pub args: Vec<Term>,
    pub span: Span,
}

impl AtomExpr {
    pub fn new(predicate: Symbol, args: Vec<Term>) -> Self {
        AtomExpr {
            predicate,
            args,
            span: Span::default(),
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
    }

    pub fn is_ground(&self) -> bool {
        self.variables().next().is_none()
    }

    /// The ground atom for a variable-free expression.
    pub fn to_ground(&self) -> Option<GroundAtom> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom::new(self.predicate.clone(), args))
    }
}

impl From<&GroundAtom> for AtomExpr {
    fn from(atom: &GroundAtom) -> Self {
        AtomExpr::new(
            atom.predicate.clone(),
            atom.args.iter().cloned().map(Term::Const).collect(),
        )
    }
}

impl fmt::Display for AtomExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: AtomExpr,
}

impl Literal {
    pub fn pos(atom: AtomExpr) -> Self {
        Literal {
            positive: true,
            atom,
        }
    }

    pub fn neg(atom: AtomExpr) -> Self {
        Literal {
            positive: false,
            atom,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredicateDecl {
    pub name: Symbol,
    pub params: Vec<TypedName>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionSchema {
    pub name: Symbol,
    pub params: Vec<TypedName>,
    /// Conjunction of literals; empty means always applicable.
    pub precondition: Vec<Literal>,
    /// Conjunction of literals: positive ones add, negative ones delete.
    pub effect: Vec<Literal>,
    pub span: Span,
}

/// Declaration of a compound task in the HTN extension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskDecl {
    pub name: Symbol,
    pub params: Vec<TypedName>,
    pub span: Span,
}

/// Totally ordered decomposition rule for a compound task.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MethodDecl {
    pub name: Symbol,
    pub params: Vec<TypedName>,
    pub task: AtomExpr,
    pub precondition: Vec<Literal>,
    pub subtasks: Vec<AtomExpr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DomainAst {
    pub name: Symbol,
    /// Requirement flags as written, e.g. `:strips`. Not enforced.
    pub requirements: Vec<String>,
    pub types: Vec<TypedName>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
    pub tasks: Vec<TaskDecl>,
    pub methods: Vec<MethodDecl>,
}

impl DomainAst {
    pub fn new(name: Symbol) -> Self {
        DomainAst {
            name,
            requirements: Vec::new(),
            types: Vec::new(),
            constants: Vec::new(),
            predicates: Vec::new(),
            actions: Vec::new(),
            tasks: Vec::new(),
            methods: Vec::new(),
        }
    }

    pub fn predicate(&self, name: &Symbol) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| &p.name == name)
    }

    pub fn action(&self, name: &Symbol) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| &a.name == name)
    }

    pub fn task(&self, name: &Symbol) -> Option<&TaskDecl> {
        self.tasks.iter().find(|t| &t.name == name)
    }

    pub fn is_hierarchical(&self) -> bool {
        !self.tasks.is_empty() || !self.methods.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProblemAst {
    pub name: Symbol,
    pub domain_name: Symbol,
    pub requirements: Vec<String>,
    /// `None` when the problem has no `:objects` section.
    pub objects: Option<Vec<TypedName>>,
    /// Ground atoms, kept as expressions so spans survive for diagnostics.
    pub init: Vec<AtomExpr>,
    /// Conjunction of ground literals.
    pub goal: Vec<Literal>,
    /// Initial task network of the HTN extension, in execution order.
    pub htn: Option<Vec<AtomExpr>>,
}

impl ProblemAst {
    pub fn new(name: Symbol, domain_name: Symbol) -> Self {
        ProblemAst {
            name,
            domain_name,
            requirements: Vec::new(),
            objects: None,
            init: Vec::new(),
            goal: Vec::new(),
            htn: None,
        }
    }
}
