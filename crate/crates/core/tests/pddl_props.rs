mod common;

use planlab::fixtures::corpus;
use planlab::pddl::{parse_domain, parse_problem, print_domain, print_problem, tokenize, TokenKind, TypeHierarchy, TypedName};
use planlab::sym;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn corpus_round_trips() {
    for f in corpus() {
        let domain = parse_domain(f.domain).unwrap().value;
        let again = parse_domain(&print_domain(&domain)).unwrap().value;
        assert_eq!(domain, again, "{}", f.domain_file);
        let problem = parse_problem(f.problem).unwrap().value;
        let again = parse_problem(&print_problem(&problem)).unwrap().value;
        assert_eq!(problem, again, "{}", f.problem_file);
    }
}

#[test]
fn printing_is_idempotent() {
    for f in corpus() {
        let once = print_domain(&parse_domain(f.domain).unwrap().value);
        let twice = print_domain(&parse_domain(&once).unwrap().value);
        assert_eq!(once, twice, "{}", f.domain_file);
    }
}

proptest! {
    #[test]
    fn random_domains_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let domain = common::random_domain(&mut rng, 0);
        let text = print_domain(&domain);
        let parsed = parse_domain(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?.value;
        prop_assert_eq!(&parsed, &domain);
        prop_assert_eq!(parse_domain(&print_domain(&parsed)).unwrap().value, parsed);
    }

    #[test]
    fn tokenizer_is_total_on_its_alphabet(
        words in prop::collection::vec(
            prop_oneof![
                Just("(".to_string()),
                Just(")".to_string()),
                Just("-".to_string()),
                "[a-zA-Z][a-zA-Z0-9_-]{0,6}",
                ":[a-zA-Z][a-zA-Z0-9_-]{0,6}",
                "\\?[a-zA-Z][a-zA-Z0-9_-]{0,6}",
                "; [ -~]{0,10}\n",
            ],
            0..30,
        ),
        sep in prop_oneof![Just(" "), Just("\n"), Just("\t")],
    ) {
        let text = words.join(sep);
        let tokens = tokenize(&text).map_err(|e| TestCaseError::fail(format!("{e} in {text:?}")))?;
        let rejoined: Vec<_> = tokens.iter().map(|t| t.text.as_str()).collect();
        let again = tokenize(&rejoined.join(" ")).unwrap();
        let kinds = |ts: &[planlab::pddl::Token]| ts.iter().map(|t| t.kind).collect::<Vec<TokenKind>>();
        prop_assert_eq!(kinds(&tokens), kinds(&again));
        for t in &tokens {
            prop_assert!(t.span.offset + t.span.len <= text.len());
        }
    }

    #[test]
    fn type_closure(parents in prop::collection::vec(0usize..8, 0..8)) {
        let decls: Vec<_> = parents
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let parent = if p >= i { sym("object") } else { sym(&format!("t{p}")) };
                TypedName::new(sym(&format!("t{i}")), parent)
            })
            .collect();
        let (h, diags) = TypeHierarchy::from_declarations(&decls);
        prop_assert!(!diags.has_errors());
        let all = h.types().to_vec();
        for a in &all {
            prop_assert!(h.is_subtype(a, a));
            prop_assert!(h.is_subtype(a, &sym("object")));
            for b in &all {
                if a != b && h.is_subtype(a, b) {
                    prop_assert!(!h.is_subtype(b, a));
                }
                for c in &all {
                    if h.is_subtype(a, b) && h.is_subtype(b, c) {
                        prop_assert!(h.is_subtype(a, c));
                    }
                }
            }
        }
    }
}

#[test]
fn diagnostic_spans_stay_inside_the_input() {
    let broken = [
        "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (q ?x)))",
        "(define (domain d) (:action a :effect (and (p) (not (p)))))",
        "(define (domain d)",
        "(define (domain d)))",
        "(define (domain d) (:types a - b b - a))",
        "(define (domain d) (:predicates (p)) (:action a :precondition (or (p) (p))))",
        "(define (domain d) #)",
    ];
    for text in broken {
        let diags = parse_domain(text).unwrap_err();
        for d in &diags.0 {
            assert!(d.span.offset + d.span.len <= text.len(), "{text}: {d}");
            assert!(d.span.line >= 1, "{text}: {d}");
        }
    }
}
