//! PDDL front end: STRIPS subset with typing, plus a small ordered-HTN
//! extension (`:task`, `:method`, `:htn`).

mod ast;
mod diagnostic;
mod lexer;
mod link;
mod parser;
mod printer;
mod types;

pub use ast::*;
pub use diagnostic::{Checked, Diagnostic, DiagnosticCode, Diagnostics, Severity, Span};
pub use lexer::{read_sexps, tokenize, LexError, Sexp, Token, TokenKind};
pub use link::{link, substitute, unify, unify_extending, Binding, LinkedProblem, ObjectTable};
pub use parser::{parse_domain, parse_problem, sniff_kind, DescriptionKind};
pub use printer::{print_domain, print_problem};
pub use types::TypeHierarchy;

/// Parses and links a domain/problem pair, concatenating warnings.
pub fn load(domain_text: &str, problem_text: &str) -> Result<Checked<LinkedProblem>, Diagnostics> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text)?;
    let mut linked = link(&domain.value, &problem.value)?;
    let mut warnings = domain.warnings;
    warnings.extend(problem.warnings);
    warnings.extend(linked.warnings);
    linked.warnings = warnings;
    Ok(linked)
}
