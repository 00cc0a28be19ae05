//! Blind forward (progression) and backward (regression) search.
//!
//! Both engines turn the textbook "choose an action" step into ordered
//! backtracking over the canonical action order, so results are
//! reproducible.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::ground::ClassicalProblem;
use crate::model::{applicable, progress, regress, relevant, satisfies, Goal, GroundAction, Plan, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dfs,
    #[default]
    Bfs,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Dfs => "dfs",
            Strategy::Bfs => "bfs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Nodes deeper than this are not expanded.
    pub max_depth: Option<usize>,
    /// Maximum number of node expansions.
    pub node_budget: usize,
    pub cycle_checking: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::Bfs,
            max_depth: None,
            node_budget: 1_000_000,
            cycle_checking: true,
        }
    }
}

impl SearchConfig {
    pub fn dfs() -> Self {
        SearchConfig {
            strategy: Strategy::Dfs,
            ..Default::default()
        }
    }

    pub fn bfs() -> Self {
        SearchConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Plan(Plan),
    Unsolvable,
    /// A node or depth budget cut the search short before it found a plan.
    BudgetExhausted,
}

impl Outcome {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            Outcome::Plan(p) => Some(p),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Plan(_) => "plan",
            Outcome::Unsolvable => "unsolvable",
            Outcome::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_expanded: usize,
    pub nodes_generated: usize,
    pub max_frontier: usize,
    #[serde(skip)]
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub outcome: Outcome,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn plan(&self) -> Option<&Plan> {
        self.outcome.plan()
    }
}

/// Actions applicable in `s`, in canonical order.
pub fn applicable_actions<'p>(s: &State, p: &'p ClassicalProblem) -> Vec<&'p GroundAction> {
    p.actions().iter().filter(|a| applicable(s, a)).collect()
}

/// Actions relevant for `g`, in canonical order.
pub fn relevant_actions<'p>(g: &Goal, p: &'p ClassicalProblem) -> Vec<&'p GroundAction> {
    p.actions().iter().filter(|a| relevant(a, g)).collect()
}

struct Node<T> {
    item: T,
    parent: Option<usize>,
    action: usize,
    depth: usize,
}

/// Generic tree search shared by both directions. `successors` yields
/// `(action index, child)` pairs in the order they should be tried.
fn tree_search<T: Clone + Eq + Hash>(
    root: T,
    config: &SearchConfig,
    is_goal: impl Fn(&T) -> bool,
    successors: impl Fn(&T) -> Vec<(usize, T)>,
) -> (Option<Vec<usize>>, bool, SearchStats) {
    let started = Instant::now();
    let mut stats = SearchStats::default();
    let mut nodes = vec![Node {
        item: root.clone(),
        parent: None,
        action: 0,
        depth: 0,
    }];
    let mut frontier = VecDeque::from([0usize]);
    let mut seen: HashSet<T> = HashSet::new();
    if config.cycle_checking && config.strategy == Strategy::Bfs {
        seen.insert(root);
    }
    let mut cut = false;
    stats.max_frontier = 1;

    let finish = |stats: &mut SearchStats| stats.duration = started.elapsed();
    while let Some(id) = match config.strategy {
        Strategy::Bfs => frontier.pop_front(),
        Strategy::Dfs => frontier.pop_back(),
    } {
        if config.cycle_checking && config.strategy == Strategy::Dfs && !seen.insert(nodes[id].item.clone()) {
            continue;
        }
        if is_goal(&nodes[id].item) {
            let mut path = Vec::new();
            let mut cursor = id;
            while let Some(parent) = nodes[cursor].parent {
                path.push(nodes[cursor].action);
                cursor = parent;
            }
            finish(&mut stats);
            return (Some(path), false, stats);
        }
        if config.max_depth.is_some_and(|d| nodes[id].depth >= d) {
            cut = true;
            continue;
        }
        if stats.nodes_expanded >= config.node_budget {
            finish(&mut stats);
            return (None, true, stats);
        }
        stats.nodes_expanded += 1;
        let depth = nodes[id].depth + 1;
        let mut children = successors(&nodes[id].item);
        if config.strategy == Strategy::Dfs {
            // The stack pops the last push first.
            children.reverse();
        }
        for (action, child) in children {
            if config.cycle_checking {
                let fresh = match config.strategy {
                    Strategy::Bfs => seen.insert(child.clone()),
                    Strategy::Dfs => !seen.contains(&child),
                };
                if !fresh {
                    continue;
                }
            }
            stats.nodes_generated += 1;
            nodes.push(Node {
                item: child,
                parent: Some(id),
                action,
                depth,
            });
            frontier.push_back(nodes.len() - 1);
        }
        stats.max_frontier = stats.max_frontier.max(frontier.len());
    }
    finish(&mut stats);
    (None, cut, stats)
}

fn result(p: &ClassicalProblem, found: (Option<Vec<usize>>, bool, SearchStats), forward: bool) -> SearchResult {
    let (path, cut, stats) = found;
    let outcome = match path {
        Some(mut indices) => {
            // The path is collected leaf to root.
            if forward {
                indices.reverse();
            }
            Outcome::Plan(Plan::new(indices.into_iter().map(|i| p.actions()[i].clone()).collect()))
        }
        None if cut => Outcome::BudgetExhausted,
        None => Outcome::Unsolvable,
    };
    SearchResult { outcome, stats }
}

/// Progression search from the initial state.
pub fn forward_search(p: &ClassicalProblem, config: &SearchConfig) -> SearchResult {
    let found = tree_search(
        p.init().clone(),
        config,
        |s| satisfies(s, p.goal()),
        |s| {
            p.actions()
                .iter()
                .enumerate()
                .filter(|(_, a)| applicable(s, a))
                .map(|(i, a)| (i, progress(s, a)))
                .collect()
        },
    );
    result(p, found, true)
}

/// Regression search from the goal. Each step prepends the chosen action
/// to the plan.
pub fn backward_search(p: &ClassicalProblem, config: &SearchConfig) -> SearchResult {
    let found = tree_search(
        p.goal().clone(),
        config,
        |g| satisfies(p.init(), g),
        |g| {
            p.actions()
                .iter()
                .enumerate()
                .filter(|(_, a)| relevant(a, g))
                .filter_map(|(i, a)| regress(g, a).ok().map(|r| (i, r)))
                .collect()
        },
    );
    result(p, found, false)
}
