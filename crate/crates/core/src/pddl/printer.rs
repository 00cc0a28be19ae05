//! Canonical text rendering. Output re-parses to a structurally identical tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_domain(domain: &DomainAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", domain.name);
    if !domain.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", domain.requirements.join(" "));
    }
    if !domain.types.is_empty() {
        let _ = writeln!(out, "  (:types {})", typed_list(&domain.types, ""));
    }
    if !domain.constants.is_empty() {
        let _ = writeln!(out, "  (:constants {})", typed_list(&domain.constants, ""));
    }
    if domain.predicates.is_empty() {
        out.push_str("  (:predicates)\n");
    } else {
        out.push_str("  (:predicates\n");
        for p in &domain.predicates {
            let _ = writeln!(out, "    ({}{})", p.name, prefixed(&typed_list(&p.params, "?")));
        }
        out.push_str("  )\n");
    }
    for t in &domain.tasks {
        let _ = writeln!(out, "  (:task {} :parameters ({}))", t.name, typed_list(&t.params, "?"));
    }
    for a in &domain.actions {
        let _ = writeln!(out, "  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", typed_list(&a.params, "?"));
        let _ = writeln!(out, "    :precondition {}", conjunction(&a.precondition));
        let _ = writeln!(out, "    :effect {}", conjunction(&a.effect));
        out.push_str("  )\n");
    }
    for m in &domain.methods {
        let _ = writeln!(out, "  (:method {}", m.name);
        let _ = writeln!(out, "    :parameters ({})", typed_list(&m.params, "?"));
        let _ = writeln!(out, "    :task {}", m.task);
        let _ = writeln!(out, "    :precondition {}", conjunction(&m.precondition));
        let _ = writeln!(out, "    :ordered-subtasks {}", network(&m.subtasks));
        out.push_str("  )\n");
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(problem: &ProblemAst) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", problem.name);
    let _ = writeln!(out, "  (:domain {})", problem.domain_name);
    if !problem.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", problem.requirements.join(" "));
    }
    if let Some(objects) = &problem.objects {
        let _ = writeln!(out, "  (:objects{})", prefixed(&typed_list(objects, "")));
    }
    if let Some(htn) = &problem.htn {
        let _ = writeln!(out, "  (:htn :ordered-subtasks {})", network(htn));
    }
    out.push_str("  (:init\n");
    for atom in &problem.init {
        let _ = writeln!(out, "    {atom}");
    }
    out.push_str("  )\n");
    let _ = writeln!(out, "  (:goal {})", conjunction(&problem.goal));
    out.push_str(")\n");
    out
}

fn prefixed(list: &str) -> String {
    if list.is_empty() {
        String::new()
    } else {
        format!(" {list}")
    }
}

/// Groups consecutive names sharing a type: `a b - t c - u`.
fn typed_list(items: &[TypedName], sigil: &str) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{sigil}{}", item.name);
        let last_of_group = items.get(i + 1).is_none_or(|next| next.ty != item.ty);
        if last_of_group {
            let _ = write!(out, " - {}", item.ty);
        }
    }
    out
}

fn conjunction(literals: &[Literal]) -> String {
    let mut out = String::from("(and");
    for lit in literals {
        let _ = write!(out, " {lit}");
    }
    out.push(')');
    out
}

fn network(tasks: &[AtomExpr]) -> String {
    let mut out = String::from("(and");
    for t in tasks {
        let _ = write!(out, " {t}");
    }
    out.push(')');
    out
}
