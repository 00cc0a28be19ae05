//! The bundled fixture corpus and the oracle's cached verdicts on it.
//!
//! `fixtures/oracle.txt` is generated; regenerate it with
//! `planlab oracle --write crates/core/fixtures/oracle.txt`.

use std::fmt::Write;

use crate::ground::{build_problem, ClassicalProblem, GroundOptions};
use crate::oracle::{build_state_graph, diameter, reachable_count, shortest_solving_trajectory, GraphMode, OracleError};
use crate::pddl::{load, LinkedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixture {
    pub name: &'static str,
    pub domain_file: &'static str,
    pub problem_file: &'static str,
    pub domain: &'static str,
    pub problem: &'static str,
    pub hierarchical: bool,
}

macro_rules! fixture {
    ($name:literal, $domain:literal, $problem:literal, $htn:literal) => {
        Fixture {
            name: $name,
            domain_file: $domain,
            problem_file: $problem,
            domain: include_str!(concat!("../fixtures/", $domain)),
            problem: include_str!(concat!("../fixtures/", $problem)),
            hierarchical: $htn,
        }
    };
}

static CORPUS: &[Fixture] = &[
    fixture!("keys-p1", "keys.pddl", "keys-p1.pddl", false),
    fixture!("keys-p2", "keys.pddl", "keys-p2.pddl", false),
    fixture!("keys-nokey-p1", "keys-nokey.pddl", "keys-nokey-p1.pddl", false),
    fixture!("keys-strips-p1", "keys-strips.pddl", "keys-strips-p1.pddl", false),
    fixture!("logistics-tiny", "logistics.pddl", "logistics-tiny.pddl", false),
    fixture!("logistics-mini", "logistics.pddl", "logistics-mini.pddl", false),
    fixture!("smart-home-instance1", "smart-home.pddl", "smart-home-instance1.pddl", false),
    fixture!("smart-home-untyped-instance1", "smart-home-untyped.pddl", "smart-home-untyped-instance1.pddl", false),
    fixture!("keys-htn-p1", "keys-htn.pddl", "keys-htn-p1.pddl", true),
    fixture!("keys-htn-loop-p1", "keys-htn-loop.pddl", "keys-htn-loop-p1.pddl", true),
    fixture!("keys-htn-choice-p1", "keys-htn-choice.pddl", "keys-htn-choice-p1.pddl", true),
    fixture!("home-htn-p1", "home-htn.pddl", "home-htn-p1.pddl", true),
];

pub const CACHED_ORACLE: &str = include_str!("../fixtures/oracle.txt");

pub fn corpus() -> &'static [Fixture] {
    CORPUS
}

pub fn classical() -> impl Iterator<Item = &'static Fixture> {
    CORPUS.iter().filter(|f| !f.hierarchical)
}

pub fn hierarchical() -> impl Iterator<Item = &'static Fixture> {
    CORPUS.iter().filter(|f| f.hierarchical)
}

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    CORPUS.iter().find(|f| f.name == name)
}

impl Fixture {
    /// Panics if the fixture does not parse; the corpus is checked by tests.
    pub fn linked(&self) -> LinkedProblem {
        match load(self.domain, self.problem) {
            Ok(linked) => linked.value,
            Err(diags) => panic!("fixture {} does not load:\n{diags}", self.name),
        }
    }

    pub fn classical(&self) -> ClassicalProblem {
        self.ground(&GroundOptions::default())
    }

    pub fn ground(&self, options: &GroundOptions) -> ClassicalProblem {
        build_problem(&self.linked(), options).unwrap_or_else(|e| panic!("fixture {} does not ground: {e}", self.name))
    }
}

/// Oracle facts about one classical fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleFacts {
    pub name: String,
    pub fluents: usize,
    pub actions: usize,
    pub reachable: usize,
    pub diameter: usize,
    /// Shortest plan length; `None` when unsolvable.
    pub optimal: Option<usize>,
}

impl OracleFacts {
    pub fn compute(fixture: &Fixture) -> Result<Self, OracleError> {
        let p = fixture.classical();
        let g = build_state_graph(&p, GraphMode::Reachable)?;
        Ok(OracleFacts {
            name: fixture.name.to_string(),
            fluents: p.fluents().len(),
            actions: p.actions().len(),
            reachable: reachable_count(&g),
            diameter: diameter(&g),
            optimal: shortest_solving_trajectory(&g),
        })
    }

    fn parse_line(line: &str) -> Option<Self> {
        let mut cols = line.split_whitespace();
        let name = cols.next()?.to_string();
        let mut num = || cols.next().and_then(|c| c.parse::<usize>().ok());
        let (fluents, actions, reachable, diameter) = (num()?, num()?, num()?, num()?);
        let optimal = num();
        Some(OracleFacts {
            name,
            fluents,
            actions,
            reachable,
            diameter,
            optimal,
        })
    }
}

/// Recomputes the oracle table for every classical fixture.
pub fn oracle_table() -> Result<String, OracleError> {
    let mut out = String::from(
        "# Generated by `planlab oracle --write crates/core/fixtures/oracle.txt`. Do not edit.\n\
         # fixture fluents actions reachable diameter optimal\n",
    );
    for f in classical() {
        let facts = OracleFacts::compute(f)?;
        let optimal = facts.optimal.map_or("unsolvable".to_string(), |n| n.to_string());
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            facts.name, facts.fluents, facts.actions, facts.reachable, facts.diameter, optimal
        );
    }
    Ok(out)
}

/// Facts recorded in the cached table.
pub fn cached_facts() -> Vec<OracleFacts> {
    CACHED_ORACLE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(OracleFacts::parse_line)
        .collect()
}

pub fn cached(name: &str) -> Option<OracleFacts> {
    cached_facts().into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_loads() {
        for f in corpus() {
            let linked = f.linked();
            assert!(!linked.domain.actions.is_empty(), "{}", f.name);
            assert_eq!(linked.domain.is_hierarchical(), f.hierarchical, "{}", f.name);
        }
    }

    #[test]
    fn cached_table_matches_oracle() {
        let fresh = oracle_table().unwrap();
        assert_eq!(CACHED_ORACLE, fresh, "fixtures/oracle.txt is stale; regenerate it");
    }

    #[test]
    fn cached_table_parses() {
        let facts = cached_facts();
        assert_eq!(facts.len(), classical().count());
    }
}
