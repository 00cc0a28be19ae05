//! Brute-force state graph for small problems. Used to check the engines,
//! never by them.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::ground::ClassicalProblem;
use crate::model::{applicable, progress, satisfies, State};

/// Largest fluent count for full enumeration, and the vertex cap for
/// reachable-only construction (`2^MAX_FLUENTS`).
pub const MAX_FLUENTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{fluents} fluents is too many to enumerate (limit {limit})")]
    TooLarge { fluents: usize, limit: usize },
    #[error("more than {limit} reachable states")]
    TooManyStates { limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    /// Every subset of the fluents.
    Full,
    /// States reachable from the initial state.
    Reachable,
}

/// An edge `(from, action, to)`; the action is an index into the problem's
/// action list.
pub type Edge = (usize, usize, usize);

#[derive(Debug, Clone)]
pub struct StateGraph {
    states: Vec<State>,
    index: HashMap<State, usize>,
    edges: Vec<Edge>,
    successors: Vec<Vec<(usize, usize)>>,
    initial: usize,
    goals: Vec<bool>,
    mode: GraphMode,
}

impl StateGraph {
    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn vertex_of(&self, state: &State) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn is_goal(&self, vertex: usize) -> bool {
        self.goals[vertex]
    }

    pub fn goal_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&v| self.goals[v])
    }

    /// `(action, to)` pairs leaving `vertex`, in action order.
    pub fn successors(&self, vertex: usize) -> &[(usize, usize)] {
        &self.successors[vertex]
    }

    pub fn has_edge(&self, from: &State, to: &State) -> bool {
        match (self.vertex_of(from), self.vertex_of(to)) {
            (Some(f), Some(t)) => self.successors[f].iter().any(|&(_, v)| v == t),
            _ => false,
        }
    }

    /// BFS distances from the initial vertex; `None` for unreachable ones.
    pub fn distances(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.states.len()];
        dist[self.initial] = Some(0);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or_default();
            for &(_, w) in &self.successors[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

pub fn build_state_graph(p: &ClassicalProblem, mode: GraphMode) -> Result<StateGraph, OracleError> {
    let mut graph = StateGraph {
        states: Vec::new(),
        index: HashMap::new(),
        edges: Vec::new(),
        successors: Vec::new(),
        initial: 0,
        goals: Vec::new(),
        mode,
    };
    let n = p.fluents().len();
    match mode {
        GraphMode::Full => {
            if n > MAX_FLUENTS {
                return Err(OracleError::TooLarge { fluents: n, limit: MAX_FLUENTS });
            }
            for mask in 0u32..(1u32 << n) {
                let state = p
                    .fluents()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, f)| f.clone())
                    .collect();
                intern(&mut graph, p, state);
            }
            graph.initial = graph.index[p.init()];
            for v in 0..graph.states.len() {
                expand(&mut graph, p, v);
            }
        }
        GraphMode::Reachable => {
            let limit = 1usize << MAX_FLUENTS;
            graph.initial = intern(&mut graph, p, p.init().clone());
            let mut v = 0;
            while v < graph.states.len() {
                expand(&mut graph, p, v);
                if graph.states.len() > limit {
                    return Err(OracleError::TooManyStates { limit });
                }
                v += 1;
            }
        }
    }
    Ok(graph)
}

fn intern(graph: &mut StateGraph, p: &ClassicalProblem, state: State) -> usize {
    if let Some(&v) = graph.index.get(&state) {
        return v;
    }
    let v = graph.states.len();
    graph.goals.push(satisfies(&state, p.goal()));
    graph.index.insert(state.clone(), v);
    graph.states.push(state);
    graph.successors.push(Vec::new());
    v
}

fn expand(graph: &mut StateGraph, p: &ClassicalProblem, v: usize) {
    for (ai, action) in p.actions().iter().enumerate() {
        let state = &graph.states[v];
        if applicable(state, action) {
            let next = progress(state, action);
            let w = intern(graph, p, next);
            graph.edges.push((v, ai, w));
            graph.successors[v].push((ai, w));
        }
    }
}

/// Length of the shortest path from the initial vertex to a goal vertex.
pub fn shortest_solving_trajectory(g: &StateGraph) -> Option<usize> {
    g.distances()
        .into_iter()
        .enumerate()
        .filter(|&(v, _)| g.is_goal(v))
        .filter_map(|(_, d)| d)
        .min()
}

/// Eccentricity of the initial vertex: the largest BFS distance to any
/// reachable state. A plan, if one exists, is never longer than this.
pub fn diameter(g: &StateGraph) -> usize {
    g.distances().into_iter().flatten().max().unwrap_or(0)
}

/// `result[k]` is true when some walk of exactly `k` edges leads from the
/// initial vertex to a goal vertex.
pub fn exact_length_solvable(g: &StateGraph, k_max: usize) -> Vec<bool> {
    let mut layer = vec![false; g.states.len()];
    layer[g.initial] = true;
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        out.push((0..layer.len()).any(|v| layer[v] && g.is_goal(v)));
        if k == k_max {
            break;
        }
        let mut next = vec![false; layer.len()];
        for v in (0..layer.len()).filter(|&v| layer[v]) {
            for &(_, w) in &g.successors[v] {
                next[w] = true;
            }
        }
        layer = next;
    }
    out
}

/// Number of states reachable from the initial one.
pub fn reachable_count(g: &StateGraph) -> usize {
    g.distances().into_iter().flatten().count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Goal, GroundAtom};

    fn empty_problem() -> ClassicalProblem {
        ClassicalProblem::new(vec![], vec![], State::default(), Goal::empty()).unwrap()
    }

    #[test]
    fn empty_fluent_set_gives_one_vertex() {
        let g = build_state_graph(&empty_problem(), GraphMode::Full).unwrap();
        assert_eq!(g.states().len(), 1);
        assert!(g.edges().is_empty());
        assert_eq!(shortest_solving_trajectory(&g), Some(0));
        assert_eq!(diameter(&g), 0);
        assert_eq!(exact_length_solvable(&g, 2), vec![true, false, false]);
    }

    #[test]
    fn too_many_fluents() {
        let fluents: Vec<_> = (0..17).map(|i| GroundAtom::parse(&format!("(f x{i})"))).collect();
        let p = ClassicalProblem::new(fluents, vec![], State::default(), Goal::empty()).unwrap();
        assert!(matches!(build_state_graph(&p, GraphMode::Full), Err(OracleError::TooLarge { .. })));
        let g = build_state_graph(&p, GraphMode::Reachable).unwrap();
        assert_eq!(g.states().len(), 1);
    }
}
