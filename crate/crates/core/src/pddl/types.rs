use std::collections::BTreeMap;

use super::ast::{object_type, TypedName};
use super::diagnostic::{Diagnostic, DiagnosticCode, Diagnostics, Span};
use crate::model::Symbol;

/// Single-inheritance type tree rooted at `object`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeHierarchy {
    parent: BTreeMap<Symbol, Symbol>,
    order: Vec<Symbol>,
}

impl Default for TypeHierarchy {
    fn default() -> Self {
        TypeHierarchy {
            parent: BTreeMap::new(),
            order: vec![object_type()],
        }
    }
}

impl TypeHierarchy {
    /// Builds the tree from `(:types ...)` entries. Parents that are used but
    /// never declared become children of `object` with a warning; cycles and
    /// conflicting parents are errors.
    pub fn from_declarations(decls: &[TypedName]) -> (Self, Diagnostics) {
        let mut diags = Diagnostics::default();
        let mut h = TypeHierarchy::default();
        let root = object_type();
        let mut spans: BTreeMap<Symbol, Span> = BTreeMap::new();
        for decl in decls {
            if decl.name == root {
                if decl.ty != root {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::TypeMismatch,
                        decl.span,
                        "`object` is the root type and cannot have a parent",
                    ));
                }
                continue;
            }
            match h.parent.get(&decl.name) {
                Some(existing) if existing != &decl.ty => diags.push(
                    Diagnostic::error(
                        DiagnosticCode::Duplicate,
                        decl.span,
                        format!("type `{}` declared with parents `{existing}` and `{}`", decl.name, decl.ty),
                    )
                    .with_related(spans[&decl.name]),
                ),
                Some(_) => {}
                None => {
                    h.parent.insert(decl.name.clone(), decl.ty.clone());
                    h.order.push(decl.name.clone());
                    spans.insert(decl.name.clone(), decl.span);
                }
            }
        }
        for decl in decls {
            if decl.ty != root && !h.parent.contains_key(&decl.ty) {
                diags.push(Diagnostic::warning(
                    DiagnosticCode::UnknownType,
                    decl.span,
                    format!("parent type `{}` is not declared; treating it as a subtype of `object`", decl.ty),
                ));
                h.parent.insert(decl.ty.clone(), root.clone());
                h.order.push(decl.ty.clone());
            }
        }
        let names: Vec<Symbol> = h.parent.keys().cloned().collect();
        for name in names {
            if !h.reaches_root(&name) {
                diags.push(Diagnostic::error(
                    DiagnosticCode::TypeMismatch,
                    spans.get(&name).copied().unwrap_or_default(),
                    format!("type `{name}` is part of a cycle"),
                ));
                h.parent.insert(name, root.clone());
            }
        }
        (h, diags)
    }

    fn reaches_root(&self, ty: &Symbol) -> bool {
        let mut current = ty;
        for _ in 0..=self.parent.len() {
            match self.parent.get(current) {
                Some(p) => current = p,
                None => return *current == object_type(),
            }
        }
        false
    }

    pub fn is_declared(&self, ty: &Symbol) -> bool {
        *ty == object_type() || self.parent.contains_key(ty)
    }

    pub fn parent(&self, ty: &Symbol) -> Option<&Symbol> {
        self.parent.get(ty)
    }

    /// Reflexive, transitive subtype test.
    pub fn is_subtype(&self, sub: &Symbol, sup: &Symbol) -> bool {
        let mut current = sub;
        loop {
            if current == sup {
                return true;
            }
            match self.parent.get(current) {
                Some(p) => current = p,
                None => return false,
            }
        }
    }

    /// All types in declaration order, `object` first.
    pub fn types(&self) -> &[Symbol] {
        &self.order
    }
}
