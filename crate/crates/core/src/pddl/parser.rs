//! Domain and problem parsing.
//!
//! The grammar is the STRIPS subset with typing: preconditions, effects and
//! goals are conjunctions of literals. `or`, `imply`, `forall`, `exists` and
//! `when` are recognized and rejected with an `Unsupported` diagnostic. The
//! HTN extension adds `:task` and `:method` to domains and `:htn` to problems.
//!
//! Each top-level section is parsed independently so that one malformed
//! section does not hide errors in the others.

use std::collections::BTreeMap;

use super::ast::*;
use super::diagnostic::{Checked, Diagnostic, DiagnosticCode, Diagnostics, Span};
use super::lexer::{read_sexps, tokenize, Sexp, TokenKind};
use super::types::TypeHierarchy;
use crate::model::{sym, Symbol};

use DiagnosticCode as Code;

const UNSUPPORTED_CONNECTIVES: &[&str] = &["or", "imply", "forall", "exists", "when", "either"];

pub fn parse_domain(text: &str) -> Result<Checked<DomainAst>, Diagnostics> {
    let mut p = Parser::default();
    let mut domain = p.domain(text);
    if let Some(domain) = &mut domain {
        check_domain(domain, &mut p.diags);
        // Identical redeclarations were reported as warnings; keep the first.
        let mut seen = Vec::new();
        domain.predicates.retain(|d| {
            let fresh = !seen.contains(&d.name);
            seen.push(d.name.clone());
            fresh
        });
    }
    p.finish(domain)
}

pub fn parse_problem(text: &str) -> Result<Checked<ProblemAst>, Diagnostics> {
    let mut p = Parser::default();
    let problem = p.problem(text);
    p.finish(problem)
}

/// Which kind of description a text holds, judged from its `define` header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptionKind {
    Domain,
    Problem,
}

pub fn sniff_kind(text: &str) -> Option<DescriptionKind> {
    let tokens = tokenize(text).ok()?;
    let mut words = tokens
        .iter()
        .filter(|t| t.kind != TokenKind::LParen)
        .map(|t| t.text.as_str());
    if words.next()? != "define" {
        return None;
    }
    match words.next()? {
        "domain" => Some(DescriptionKind::Domain),
        "problem" => Some(DescriptionKind::Problem),
        _ => None,
    }
}

#[derive(Default)]
struct Parser {
    diags: Diagnostics,
}

impl Parser {
    fn finish<T>(self, value: Option<T>) -> Result<Checked<T>, Diagnostics> {
        match value {
            Some(value) if !self.diags.has_errors() => Ok(Checked {
                value,
                warnings: self.diags,
            }),
            _ => {
                let mut diags = self.diags;
                if !diags.has_errors() {
                    diags.push(Diagnostic::error(Code::Syntax, Span::default(), "no description found"));
                }
                Err(diags)
            }
        }
    }

    fn error(&mut self, code: Code, span: Span, message: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, message));
    }

    /// Reads the single `(define ...)` form and returns its header name and
    /// remaining sections.
    fn define(&mut self, text: &str, kind: &str) -> Option<(Symbol, Span, Vec<Sexp>)> {
        let tokens = match tokenize(text) {
            Ok(t) => t,
            Err(e) => {
                self.diags.push(e.into());
                return None;
            }
        };
        let forms = match read_sexps(tokens) {
            Ok(f) => f,
            Err(d) => {
                self.diags.push(d);
                return None;
            }
        };
        let mut forms = forms.into_iter();
        let Some(form) = forms.next() else {
            self.error(Code::Syntax, Span::default(), format!("expected `(define ({kind} ...) ...)`, found empty input"));
            return None;
        };
        if let Some(extra) = forms.next() {
            self.error(Code::Syntax, extra.span(), "unexpected text after the description");
        }
        let span = form.span();
        let items = match form {
            Sexp::List { items, .. } if items.first().and_then(|i| i.token_of(TokenKind::Ident)) == Some("define") => items,
            other => {
                self.error(Code::Syntax, other.span(), format!("expected `(define ({kind} ...) ...)`"));
                return None;
            }
        };
        let mut items = items.into_iter().skip(1);
        let header = items.next();
        let name = match header.as_ref().and_then(Sexp::as_list) {
            Some([head, name]) if head.token_of(TokenKind::Ident) == Some(kind) => self.name(name),
            _ => {
                let at = header.as_ref().map_or(span, Sexp::span);
                self.error(Code::Syntax, at, format!("expected `({kind} <name>)` header"));
                None
            }
        }?;
        Some((name, span, items.collect()))
    }

    fn name(&mut self, sexp: &Sexp) -> Option<Symbol> {
        match sexp.token_of(TokenKind::Ident) {
            Some(text) => Some(sym(text)),
            None => {
                self.error(Code::Syntax, sexp.span(), "expected a name");
                None
            }
        }
    }

    fn domain(&mut self, text: &str) -> Option<DomainAst> {
        let (name, _, sections) = self.define(text, "domain")?;
        let mut domain = DomainAst::new(name);
        let mut seen: BTreeMap<String, Span> = BTreeMap::new();
        for section in &sections {
            let Some((keyword, rest)) = self.section(section) else { continue };
            let once = matches!(keyword, ":requirements" | ":types" | ":constants" | ":predicates");
            if once && !self.first_occurrence(&mut seen, keyword, section.span()) {
                continue;
            }
            match keyword {
                ":requirements" => domain.requirements = self.requirements(rest, section.span()),
                ":types" => {
                    if let Some(types) = self.typed_list(rest, TokenKind::Ident) {
                        domain.types = types;
                    }
                }
                ":constants" => {
                    if let Some(constants) = self.typed_list(rest, TokenKind::Ident) {
                        domain.constants = constants;
                    }
                }
                ":predicates" => domain.predicates = self.predicates(rest),
                ":action" => domain.actions.extend(self.action(rest, section.span())),
                ":task" => domain.tasks.extend(self.task_decl(rest, section.span())),
                ":method" => domain.methods.extend(self.method(rest, section.span())),
                ":functions" | ":derived" | ":durative-action" | ":constraints" => {
                    self.error(Code::Unsupported, section.span(), format!("unsupported construct `{keyword}`"))
                }
                other => self.error(Code::Syntax, section.span(), format!("unknown domain section `{other}`")),
            }
        }
        Some(domain)
    }

    fn problem(&mut self, text: &str) -> Option<ProblemAst> {
        let (name, span, sections) = self.define(text, "problem")?;
        let mut domain_name = None;
        let mut problem = ProblemAst::new(name, sym("unknown"));
        let mut seen: BTreeMap<String, Span> = BTreeMap::new();
        for section in &sections {
            let Some((keyword, rest)) = self.section(section) else { continue };
            if !self.first_occurrence(&mut seen, keyword, section.span()) {
                continue;
            }
            match keyword {
                ":domain" => match rest {
                    [name] => domain_name = self.name(name),
                    _ => self.error(Code::Syntax, section.span(), "expected `(:domain <name>)`"),
                },
                ":requirements" => problem.requirements = self.requirements(rest, section.span()),
                ":objects" => problem.objects = self.typed_list(rest, TokenKind::Ident),
                ":init" => problem.init = self.init(rest),
                ":goal" => match rest {
                    [formula] => {
                        if let Some(goal) = self.conjunction(formula) {
                            self.require_ground(goal.iter().map(|l| &l.atom), ":goal");
                            problem.goal = goal;
                        }
                    }
                    [] => {}
                    _ => self.error(Code::Syntax, section.span(), "`:goal` takes a single formula"),
                },
                ":htn" => problem.htn = self.htn_block(rest, section.span()),
                ":metric" | ":constraints" => {
                    self.error(Code::Unsupported, section.span(), format!("unsupported construct `{keyword}`"))
                }
                other => self.error(Code::Syntax, section.span(), format!("unknown problem section `{other}`")),
            }
        }
        match domain_name {
            Some(d) => problem.domain_name = d,
            None if !seen.contains_key(":domain") => {
                self.error(Code::Syntax, span, "problem is missing `(:domain <name>)`")
            }
            None => {}
        }
        Some(problem)
    }

    fn first_occurrence(&mut self, seen: &mut BTreeMap<String, Span>, keyword: &str, span: Span) -> bool {
        if let Some(first) = seen.get(keyword) {
            let first = *first;
            self.diags.push(
                Diagnostic::error(Code::Duplicate, span, format!("duplicate `{keyword}` section (first at {first})"))
                    .with_related(first),
            );
            return false;
        }
        seen.insert(keyword.to_string(), span);
        true
    }

    /// Splits `(:keyword rest...)`.
    fn section<'s>(&mut self, sexp: &'s Sexp) -> Option<(&'s str, &'s [Sexp])> {
        match sexp.as_list() {
            Some([head, rest @ ..]) => match head.token_of(TokenKind::Keyword) {
                Some(k) => Some((k, rest)),
                None => {
                    self.error(Code::Syntax, head.span(), "expected a section keyword such as `:action`");
                    None
                }
            },
            _ => {
                self.error(Code::Syntax, sexp.span(), "expected a `(:keyword ...)` section");
                None
            }
        }
    }

    fn requirements(&mut self, rest: &[Sexp], span: Span) -> Vec<String> {
        let mut out = Vec::new();
        for item in rest {
            match item.token_of(TokenKind::Keyword) {
                Some(k) => out.push(k.to_string()),
                None => self.error(Code::Syntax, item.span(), "requirements must be keywords"),
            }
        }
        self.diags.push(Diagnostic::warning(
            Code::IgnoredRequirements,
            span,
            "`:requirements` parsed but not enforced",
        ));
        out
    }

    /// `a b - t c` style list. `kind` selects identifiers or variables for
    /// the named items; types are always identifiers. Untyped names default
    /// to `object`.
    fn typed_list(&mut self, items: &[Sexp], kind: TokenKind) -> Option<Vec<TypedName>> {
        let mut out = Vec::new();
        let mut pending: Vec<(Symbol, Span)> = Vec::new();
        let mut ok = true;
        let mut iter = items.iter();
        while let Some(item) = iter.next() {
            if item.token_of(TokenKind::Dash).is_some() {
                let ty = match iter.next() {
                    Some(t) if t.token_of(TokenKind::Ident).is_some() => sym(t.token_of(TokenKind::Ident).unwrap_or_default()),
                    Some(t) if t.head() == Some("either") => {
                        self.error(Code::Unsupported, t.span(), "unsupported construct `either`");
                        ok = false;
                        continue;
                    }
                    Some(t) => {
                        self.error(Code::Syntax, t.span(), "expected a type name after `-`");
                        ok = false;
                        continue;
                    }
                    None => {
                        self.error(Code::Syntax, item.span(), "expected a type name after `-`");
                        ok = false;
                        break;
                    }
                };
                if pending.is_empty() {
                    self.error(Code::Syntax, item.span(), "`-` must follow at least one name");
                    ok = false;
                }
                out.extend(pending.drain(..).map(|(name, span)| TypedName {
                    name,
                    ty: ty.clone(),
                    span,
                }));
                continue;
            }
            match item.as_token() {
                Some(t) if t.kind == kind => {
                    let text = t.text.trim_start_matches('?');
                    pending.push((sym(text), t.span));
                }
                _ => {
                    let expected = if kind == TokenKind::Variable { "a `?variable`" } else { "a name" };
                    self.error(Code::Syntax, item.span(), format!("expected {expected}"));
                    ok = false;
                }
            }
        }
        out.extend(pending.into_iter().map(|(name, span)| TypedName {
            name,
            ty: object_type(),
            span,
        }));
        ok.then_some(out)
    }

    fn predicates(&mut self, rest: &[Sexp]) -> Vec<PredicateDecl> {
        let mut out = Vec::new();
        for item in rest {
            match item.as_list() {
                Some([head, params @ ..]) if head.token_of(TokenKind::Ident).is_some() => {
                    if let Some(params) = self.typed_list(params, TokenKind::Variable) {
                        out.push(PredicateDecl {
                            name: sym(head.token_of(TokenKind::Ident).unwrap_or_default()),
                            params,
                            span: item.span(),
                        });
                    }
                }
                _ => self.error(Code::Syntax, item.span(), "expected a predicate declaration `(name ?x ...)`"),
            }
        }
        out
    }

    /// Parses `name :key value ...` and returns the name plus key/value map.
    fn keyed<'s>(
        &mut self,
        what: &str,
        rest: &'s [Sexp],
        span: Span,
        allowed: &[&str],
    ) -> Option<(Symbol, BTreeMap<&'s str, &'s Sexp>)> {
        let Some((name, pairs)) = rest.split_first() else {
            self.error(Code::Syntax, span, format!("{what} needs a name"));
            return None;
        };
        let name = self.name(name)?;
        let mut map = BTreeMap::new();
        let mut ok = true;
        let mut iter = pairs.iter();
        while let Some(key) = iter.next() {
            let Some(k) = key.token_of(TokenKind::Keyword) else {
                self.error(Code::Syntax, key.span(), format!("expected a keyword in {what} `{name}`"));
                ok = false;
                continue;
            };
            if !allowed.contains(&k) {
                self.error(Code::Syntax, key.span(), format!("unexpected `{k}` in {what} `{name}`"));
                ok = false;
                iter.next();
                continue;
            }
            let Some(value) = iter.next() else {
                self.error(Code::Syntax, key.span(), format!("`{k}` needs a value"));
                ok = false;
                break;
            };
            if map.insert(k, value).is_some() {
                self.error(Code::Duplicate, key.span(), format!("duplicate `{k}` in {what} `{name}`"));
                ok = false;
            }
        }
        ok.then_some((name, map))
    }

    fn params(&mut self, value: Option<&&Sexp>) -> Option<Vec<TypedName>> {
        match value {
            None => Some(Vec::new()),
            Some(sexp) => match sexp.as_list() {
                Some(items) => self.typed_list(items, TokenKind::Variable),
                None => {
                    self.error(Code::Syntax, sexp.span(), "`:parameters` expects a list");
                    None
                }
            },
        }
    }

    fn formula(&mut self, value: Option<&&Sexp>) -> Option<Vec<Literal>> {
        match value {
            None => Some(Vec::new()),
            Some(sexp) => self.conjunction(sexp),
        }
    }

    fn action(&mut self, rest: &[Sexp], span: Span) -> Option<ActionSchema> {
        let (name, map) = self.keyed("action", rest, span, &[":parameters", ":precondition", ":effect"])?;
        let params = self.params(map.get(":parameters"));
        let precondition = self.formula(map.get(":precondition"));
        let effect = self.formula(map.get(":effect"));
        Some(ActionSchema {
            name,
            params: params?,
            precondition: precondition?,
            effect: effect?,
            span,
        })
    }

    fn task_decl(&mut self, rest: &[Sexp], span: Span) -> Option<TaskDecl> {
        let (name, map) = self.keyed("task", rest, span, &[":parameters"])?;
        Some(TaskDecl {
            name,
            params: self.params(map.get(":parameters"))?,
            span,
        })
    }

    fn method(&mut self, rest: &[Sexp], span: Span) -> Option<MethodDecl> {
        let allowed = [":parameters", ":task", ":precondition", ":ordered-subtasks", ":ordered-tasks"];
        let (name, map) = self.keyed("method", rest, span, &allowed)?;
        let params = self.params(map.get(":parameters"));
        let task = match map.get(":task") {
            Some(t) => self.atom_expr(t),
            None => {
                self.error(Code::Syntax, span, format!("method `{name}` needs a `:task`"));
                None
            }
        };
        let precondition = self.formula(map.get(":precondition"));
        let subtasks = match (map.get(":ordered-subtasks"), map.get(":ordered-tasks")) {
            (Some(_), Some(t)) => {
                self.error(Code::Duplicate, t.span(), "give either `:ordered-subtasks` or `:ordered-tasks`");
                None
            }
            (Some(n), None) | (None, Some(n)) => self.network(n),
            (None, None) => Some(Vec::new()),
        };
        Some(MethodDecl {
            name,
            params: params?,
            task: task?,
            precondition: precondition?,
            subtasks: subtasks?,
            span,
        })
    }

    /// `()`, a single task, or `(and t1 t2 ...)` in execution order.
    fn network(&mut self, sexp: &Sexp) -> Option<Vec<AtomExpr>> {
        match sexp.as_list() {
            Some([]) => Some(Vec::new()),
            Some([head, rest @ ..]) if head.token_of(TokenKind::Ident) == Some("and") => {
                let tasks: Vec<_> = rest.iter().map(|t| self.atom_expr(t)).collect();
                tasks.into_iter().collect()
            }
            _ => self.atom_expr(sexp).map(|t| vec![t]),
        }
    }

    fn htn_block(&mut self, rest: &[Sexp], span: Span) -> Option<Vec<AtomExpr>> {
        let mut network = None;
        let mut iter = rest.iter();
        while let Some(key) = iter.next() {
            let value = iter.next();
            match (key.token_of(TokenKind::Keyword), value) {
                (Some(":ordered-subtasks" | ":ordered-tasks"), Some(v)) => {
                    if network.is_some() {
                        self.error(Code::Duplicate, key.span(), "duplicate task network in `:htn`");
                    }
                    network = self.network(v);
                }
                (Some(":parameters"), Some(v)) if v.as_list().is_some_and(|l| l.is_empty()) => {}
                _ => self.error(Code::Syntax, key.span(), "expected `:ordered-subtasks <network>` in `:htn`"),
            }
        }
        let network = network.unwrap_or_default();
        self.require_ground(network.iter(), ":htn");
        if rest.is_empty() {
            self.error(Code::Syntax, span, "`:htn` needs `:ordered-subtasks`");
        }
        Some(network)
    }

    fn init(&mut self, rest: &[Sexp]) -> Vec<AtomExpr> {
        let mut out = Vec::new();
        for item in rest {
            if item.head() == Some("not") {
                self.error(Code::Syntax, item.span(), "`:init` lists true atoms only; omit false ones");
                continue;
            }
            if let Some(atom) = self.atom_expr(item) {
                out.push(atom);
            }
        }
        self.require_ground(out.iter(), ":init");
        out
    }

    fn require_ground<'a>(&mut self, atoms: impl Iterator<Item = &'a AtomExpr>, section: &str) {
        let bad: Vec<_> = atoms.filter(|a| !a.is_ground()).map(|a| (a.span, a.to_string())).collect();
        for (span, text) in bad {
            self.error(Code::Syntax, span, format!("{text} in `{section}` must not contain variables"));
        }
    }

    /// A conjunction of literals, flattening nested `and`.
    fn conjunction(&mut self, sexp: &Sexp) -> Option<Vec<Literal>> {
        let items = match sexp.as_list() {
            Some(items) => items,
            None => {
                self.error(Code::Syntax, sexp.span(), "expected a parenthesized formula");
                return None;
            }
        };
        let Some(head) = items.first() else {
            return Some(Vec::new());
        };
        match head.as_token().map(|t| (t.kind, t.text.as_str())) {
            Some((TokenKind::Ident, "and")) => {
                let parts: Vec<_> = items[1..].iter().map(|i| self.conjunction(i)).collect();
                let parts: Option<Vec<_>> = parts.into_iter().collect();
                Some(parts?.into_iter().flatten().collect())
            }
            Some((TokenKind::Ident, "not")) => match &items[1..] {
                [inner] => {
                    if let Some(h) = inner.head().filter(|h| *h == "not" || *h == "and" || UNSUPPORTED_CONNECTIVES.contains(h)) {
                        self.error(Code::Unsupported, inner.span(), format!("unsupported construct `(not ({h} ...))`: negate single atoms only"));
                        return None;
                    }
                    self.atom_expr(inner).map(|a| vec![Literal::neg(a)])
                }
                _ => {
                    self.error(Code::Syntax, sexp.span(), "`not` takes exactly one atom");
                    None
                }
            },
            Some((TokenKind::Ident, c)) if UNSUPPORTED_CONNECTIVES.contains(&c) => {
                self.error(
                    Code::Unsupported,
                    sexp.span(),
                    format!("unsupported construct `{c}`: only conjunctions of literals are supported"),
                );
                None
            }
            _ => self.atom_expr(sexp).map(|a| vec![Literal::pos(a)]),
        }
    }

    fn atom_expr(&mut self, sexp: &Sexp) -> Option<AtomExpr> {
        let Some([head, args @ ..]) = sexp.as_list() else {
            self.error(Code::Syntax, sexp.span(), "expected an atom `(name args...)`");
            return None;
        };
        let Some(predicate) = head.token_of(TokenKind::Ident) else {
            self.error(Code::Syntax, head.span(), "expected a predicate or task name");
            return None;
        };
        let mut terms = Vec::with_capacity(args.len());
        for arg in args {
            match arg.as_token() {
                Some(t) if t.kind == TokenKind::Ident => terms.push(Term::Const(sym(&t.text))),
                Some(t) if t.kind == TokenKind::Variable => terms.push(Term::Var(sym(&t.text[1..]))),
                _ => {
                    self.error(Code::Syntax, arg.span(), "arguments must be names or `?variables`");
                    return None;
                }
            }
        }
        Some(AtomExpr {
            predicate: sym(predicate),
            args: terms,
            span: sexp.span(),
        })
    }
}

/// Domain-level consistency: unique names, declared types, bound variables,
/// known predicates with matching arity.
fn check_domain(domain: &DomainAst, diags: &mut Diagnostics) {
    let (types, type_diags) = TypeHierarchy::from_declarations(&domain.types);
    diags.extend(type_diags);

    let mut constants: BTreeMap<&Symbol, Span> = BTreeMap::new();
    for c in &domain.constants {
        check_type_known(&types, c, diags);
        if let Some(first) = constants.insert(&c.name, c.span) {
            diags.push(duplicate("constant", &c.name, c.span, first));
        }
    }

    let mut predicates: BTreeMap<&Symbol, &PredicateDecl> = BTreeMap::new();
    for p in &domain.predicates {
        check_params(&types, &p.params, diags);
        match predicates.get(&p.name) {
            Some(first) if first.params == p.params => diags.push(
                Diagnostic::warning(Code::Duplicate, p.span, format!("predicate `{}` declared twice (first at {})", p.name, first.span))
                    .with_related(first.span),
            ),
            Some(first) => diags.push(duplicate("predicate", &p.name, p.span, first.span)),
            None => {
                predicates.insert(&p.name, p);
            }
        }
    }

    let mut actions: BTreeMap<&Symbol, Span> = BTreeMap::new();
    for a in &domain.actions {
        if let Some(first) = actions.insert(&a.name, a.span) {
            diags.push(duplicate("action", &a.name, a.span, first));
        }
        check_params(&types, &a.params, diags);
        let scope = a.params.iter().map(|p| (&p.name, &p.ty)).collect();
        for lit in a.precondition.iter().chain(&a.effect) {
            check_atom(&lit.atom, &scope, &predicates, &types, &format!("action `{}`", a.name), diags);
        }
        let adds: Vec<_> = a.effect.iter().filter(|l| l.positive).map(|l| &l.atom).collect();
        for del in a.effect.iter().filter(|l| !l.positive) {
            if adds.contains(&&del.atom) {
                diags.push(Diagnostic::error(
                    Code::ConflictingEffects,
                    del.atom.span,
                    format!("action `{}` both adds and deletes {}", a.name, del.atom),
                ));
            }
        }
    }

    let mut tasks: BTreeMap<&Symbol, &TaskDecl> = BTreeMap::new();
    for t in &domain.tasks {
        check_params(&types, &t.params, diags);
        if let Some(first) = tasks.insert(&t.name, t) {
            diags.push(duplicate("task", &t.name, t.span, first.span));
        }
        if let Some(action) = actions.get(&t.name) {
            diags.push(duplicate("task/action name", &t.name, t.span, *action));
        }
    }

    let mut methods: BTreeMap<&Symbol, Span> = BTreeMap::new();
    for m in &domain.methods {
        if let Some(first) = methods.insert(&m.name, m.span) {
            diags.push(duplicate("method", &m.name, m.span, first));
        }
        check_params(&types, &m.params, diags);
        let context = format!("method `{}`", m.name);
        let mut scope: BTreeMap<&Symbol, &Symbol> = m.params.iter().map(|p| (&p.name, &p.ty)).collect();
        match tasks.get(&m.task.predicate) {
            Some(decl) => {
                check_arity(&m.task, decl.params.len(), &context, diags);
                for (term, param) in m.task.args.iter().zip(&decl.params) {
                    if let Term::Var(v) = term {
                        scope.entry(v).or_insert(&param.ty);
                    }
                }
            }
            None => diags.push(Diagnostic::error(
                Code::UnknownTask,
                m.task.span,
                format!("{context} refines undeclared compound task `{}`", m.task.predicate),
            )),
        }
        for lit in &m.precondition {
            check_atom(&lit.atom, &scope, &predicates, &types, &context, diags);
        }
        for sub in &m.subtasks {
            check_bound(sub, &scope, &context, diags);
            let arity = domain
                .action(&sub.predicate)
                .map(|a| a.params.len())
                .or_else(|| tasks.get(&sub.predicate).map(|t| t.params.len()));
            match arity {
                Some(n) => check_arity(sub, n, &context, diags),
                None => diags.push(Diagnostic::error(
                    Code::UnknownTask,
                    sub.span,
                    format!("{context} uses unknown task `{}`", sub.predicate),
                )),
            }
        }
    }
    for t in &domain.tasks {
        if !domain.methods.iter().any(|m| m.task.predicate == t.name) {
            diags.push(Diagnostic::warning(
                Code::Undecomposable,
                t.span,
                format!("compound task `{}` has no methods and can never be decomposed", t.name),
            ));
        }
    }
}

fn duplicate(what: &str, name: &Symbol, span: Span, first: Span) -> Diagnostic {
    Diagnostic::error(Code::Duplicate, span, format!("duplicate {what} `{name}` at {span} (first declared at {first})"))
        .with_related(first)
}

fn check_type_known(types: &TypeHierarchy, item: &TypedName, diags: &mut Diagnostics) {
    if !types.is_declared(&item.ty) {
        diags.push(Diagnostic::error(
            Code::UnknownType,
            item.span,
            format!("`{}` has undeclared type `{}`", item.name, item.ty),
        ));
    }
}

fn check_params(types: &TypeHierarchy, params: &[TypedName], diags: &mut Diagnostics) {
    let mut seen = BTreeMap::new();
    for p in params {
        check_type_known(types, p, diags);
        if let Some(first) = seen.insert(&p.name, p.span) {
            diags.push(duplicate("parameter", &p.name, p.span, first));
        }
    }
}

fn check_arity(atom: &AtomExpr, expected: usize, context: &str, diags: &mut Diagnostics) {
    if atom.args.len() != expected {
        diags.push(Diagnostic::error(
            Code::ArityMismatch,
            atom.span,
            format!("{context}: `{}` takes {expected} argument(s), got {}", atom.predicate, atom.args.len()),
        ));
    }
}

fn check_bound(atom: &AtomExpr, scope: &BTreeMap<&Symbol, &Symbol>, context: &str, diags: &mut Diagnostics) {
    for v in atom.variables() {
        if !scope.contains_key(v) {
            diags.push(Diagnostic::error(
                Code::UnboundVariable,
                atom.span,
                format!("{context}: variable `?{v}` in {atom} is not a parameter"),
            ));
        }
    }
}

fn check_atom(
    atom: &AtomExpr,
    scope: &BTreeMap<&Symbol, &Symbol>,
    predicates: &BTreeMap<&Symbol, &PredicateDecl>,
    types: &TypeHierarchy,
    context: &str,
    diags: &mut Diagnostics,
) {
    check_bound(atom, scope, context, diags);
    let Some(decl) = predicates.get(&atom.predicate) else {
        diags.push(Diagnostic::error(
            Code::UnknownPredicate,
            atom.span,
            format!("{context}: unknown predicate `{}`", atom.predicate),
        ));
        return;
    };
    check_arity(atom, decl.params.len(), context, diags);
    for (term, param) in atom.args.iter().zip(&decl.params) {
        if let Term::Var(v) = term {
            if let Some(ty) = scope.get(v) {
                if !types.is_subtype(ty, &param.ty) && !types.is_subtype(&param.ty, ty) {
                    diags.push(Diagnostic::error(
                        Code::TypeMismatch,
                        atom.span,
                        format!("{context}: `?{v}` of type `{ty}` cannot fill a `{}` slot of `{}`", param.ty, atom.predicate),
                    ));
                }
            }
        }
    }
}
