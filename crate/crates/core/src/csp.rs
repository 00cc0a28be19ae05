//! Bounded planning as constraint satisfaction.
//!
//! For horizon `k` and fluents `f`, there is a boolean variable `x_f[i]` for
//! every step `0..=k` and an action variable `a[i]` for every step `0..k`
//! whose values are the ground actions. Each step must take an action, so a
//! solution at horizon `k` is a plan of exactly `k` steps; [`plan_bounded`]
//! deepens `k` to find the shortest one.

use std::fmt::{self, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ground::ClassicalProblem;
use crate::model::{apply_sequence, satisfies, Plan};
use crate::search::{Outcome, SearchResult, SearchStats};

pub type VarId = usize;
/// Index into a variable's domain. State variables use `0 = false`,
/// `1 = true`; action variables use the action's canonical index.
pub type Value = usize;

pub const FALSE: Value = 0;
pub const TRUE: Value = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    State { fluent: usize, step: usize },
    Action { step: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspVariable {
    pub id: VarId,
    pub kind: VarKind,
    pub domain: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Init,
    Goal,
    Precondition,
    Effect,
    Frame,
    Other,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Init => "init",
            Family::Goal => "goal",
            Family::Precondition => "pre",
            Family::Effect => "eff",
            Family::Frame => "frame",
            Family::Other => "table",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Relation {
    /// The single scoped variable must take this value.
    Unary(Value),
    /// When the first scoped variable equals `action`, the remaining ones
    /// must form one of `allowed`; otherwise anything goes.
    ActionImplies { action: Value, allowed: Vec<Vec<Value>> },
    /// Explicit allowed tuples over the whole scope.
    Table(Vec<Vec<Value>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub scope: Vec<VarId>,
    pub relation: Relation,
    pub family: Family,
}

impl Constraint {
    pub fn table(scope: Vec<VarId>, allowed: Vec<Vec<Value>>) -> Self {
        Constraint {
            scope,
            relation: Relation::Table(allowed),
            family: Family::Other,
        }
    }

    /// Whether a full tuple of values (in scope order) is allowed.
    pub fn allows(&self, values: &[Value]) -> bool {
        match &self.relation {
            Relation::Unary(v) => values[0] == *v,
            Relation::ActionImplies { action, allowed } => {
                values[0] != *action || allowed.iter().any(|t| t[..] == values[1..])
            }
            Relation::Table(allowed) => allowed.iter().any(|t| t[..] == values[..]),
        }
    }

    fn holds_in(&self, values: &[Option<Value>]) -> Option<bool> {
        let mut tuple = Vec::with_capacity(self.scope.len());
        for &v in &self.scope {
            tuple.push(values[v]?);
        }
        Some(self.allows(&tuple))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspInstance {
    variables: Vec<CspVariable>,
    constraints: Vec<Constraint>,
    /// Constraint indices touching each variable.
    watches: Vec<Vec<usize>>,
    horizon: usize,
    fluents: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CspError {
    #[error("constraint {index} refers to an undeclared variable")]
    UnknownVariable { index: usize },
    #[error("constraint {index} has a tuple of the wrong arity or out-of-domain values")]
    MalformedTuple { index: usize },
    #[error("decoded plan does not solve the problem: {reason}")]
    DecodeMismatch { reason: String },
}

impl CspInstance {
    /// Builds a general instance; variables must have ids `0..n` in order.
    pub fn new(variables: Vec<CspVariable>, constraints: Vec<Constraint>) -> Result<Self, CspError> {
        let mut watches = vec![Vec::new(); variables.len()];
        for (index, c) in constraints.iter().enumerate() {
            if c.scope.iter().any(|&v| v >= variables.len()) {
                return Err(CspError::UnknownVariable { index });
            }
            let in_domain = |offset: usize, tuple: &[Value]| {
                tuple.len() + offset == c.scope.len()
                    && tuple.iter().zip(&c.scope[offset..]).all(|(x, &v)| variables[v].domain.contains(x))
            };
            let ok = match &c.relation {
                Relation::Unary(v) => c.scope.len() == 1 && in_domain(0, &[*v]),
                Relation::ActionImplies { action, allowed } => {
                    !c.scope.is_empty()
                        && variables[c.scope[0]].domain.contains(action)
                        && allowed.iter().all(|t| in_domain(1, t))
                }
                Relation::Table(allowed) => allowed.iter().all(|t| in_domain(0, t)),
            };
            if !ok {
                return Err(CspError::MalformedTuple { index });
            }
            for &v in &c.scope {
                if watches[v].last() != Some(&index) {
                    watches[v].push(index);
                }
            }
        }
        Ok(CspInstance {
            variables,
            constraints,
            watches,
            horizon: 0,
            fluents: 0,
        })
    }

    pub fn variables(&self) -> &[CspVariable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn constraints_of(&self, family: Family) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(move |c| c.family == family)
    }

    /// Id of `x_f[step]`.
    pub fn state_var(&self, fluent: usize, step: usize) -> VarId {
        step * (self.fluents + 1) + fluent
    }

    /// Id of `a[step]`.
    pub fn action_var(&self, step: usize) -> VarId {
        step * (self.fluents + 1) + self.fluents
    }

    /// Number of constraints violated by a complete assignment.
    pub fn conflicts(&self, a: &Assignment) -> usize {
        self.constraints.iter().filter(|c| c.holds_in(&a.values) == Some(false)).count()
    }

    /// Complete and violating nothing.
    pub fn is_solution(&self, a: &Assignment) -> bool {
        a.is_complete() && self.conflicts(a) == 0
    }
}

pub fn encode(p: &ClassicalProblem, k: usize) -> CspInstance {
    let n = p.fluents().len();
    let state_var = |f: usize, i: usize| i * (n + 1) + f;
    let action_var = |i: usize| i * (n + 1) + n;
    let action_domain: Vec<Value> = (0..p.actions().len()).collect();

    let mut variables = Vec::with_capacity((k + 1) * n + k);
    for i in 0..=k {
        for f in 0..n {
            variables.push(CspVariable {
                id: variables.len(),
                kind: VarKind::State { fluent: f, step: i },
                domain: vec![FALSE, TRUE],
            });
        }
        if i < k {
            variables.push(CspVariable {
                id: variables.len(),
                kind: VarKind::Action { step: i },
                domain: action_domain.clone(),
            });
        }
    }

    let mut constraints = Vec::new();
    let unary = |var, value, family| Constraint {
        scope: vec![var],
        relation: Relation::Unary(value),
        family,
    };
    for (f, atom) in p.fluents().iter().enumerate() {
        let value = if p.init().contains(atom) { TRUE } else { FALSE };
        constraints.push(unary(state_var(f, 0), value, Family::Init));
    }
    let index = |atom| p.fluent_index(atom).expect("goal atoms are fluents");
    for atom in p.goal().positive() {
        constraints.push(unary(state_var(index(atom), k), TRUE, Family::Goal));
    }
    for atom in p.goal().negative() {
        constraints.push(unary(state_var(index(atom), k), FALSE, Family::Goal));
    }

    for i in 0..k {
        for (ai, action) in p.actions().iter().enumerate() {
            let when = |scope: Vec<VarId>, allowed: Vec<Vec<Value>>, family| Constraint {
                scope,
                relation: Relation::ActionImplies { action: ai, allowed },
                family,
            };
            for (atoms, value) in [(action.pre_pos(), TRUE), (action.pre_neg(), FALSE)] {
                for atom in atoms {
                    constraints.push(when(vec![action_var(i), state_var(index(atom), i)], vec![vec![value]], Family::Precondition));
                }
            }
            for (atoms, value) in [(action.add(), TRUE), (action.del(), FALSE)] {
                for atom in atoms {
                    constraints.push(when(vec![action_var(i), state_var(index(atom), i + 1)], vec![vec![value]], Family::Effect));
                }
            }
            for (f, atom) in p.fluents().iter().enumerate() {
                if !action.add().contains(atom) && !action.del().contains(atom) {
                    constraints.push(when(
                        vec![action_var(i), state_var(f, i), state_var(f, i + 1)],
                        vec![vec![FALSE, FALSE], vec![TRUE, TRUE]],
                        Family::Frame,
                    ));
                }
            }
        }
    }

    let mut instance = CspInstance::new(variables, constraints).expect("encoder emits well-formed constraints");
    instance.horizon = k;
    instance.fluents = n;
    instance
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<Value>>,
}

impl Assignment {
    pub fn empty(c: &CspInstance) -> Self {
        Assignment {
            values: vec![None; c.variables.len()],
        }
    }

    pub fn get(&self, var: VarId) -> Option<Value> {
        self.values[var]
    }

    pub fn set(&mut self, var: VarId, value: Value) {
        self.values[var] = Some(value);
    }

    pub fn unset(&mut self, var: VarId) {
        self.values[var] = None;
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Current domains during search. Values are removed by marking and
/// restored in reverse order from a trail.
#[derive(Debug, Clone)]
pub struct Domains {
    alive: Vec<Vec<bool>>,
    size: Vec<usize>,
    trail: Vec<(VarId, usize)>,
}

impl Domains {
    pub fn full(c: &CspInstance) -> Self {
        Domains {
            alive: c.variables.iter().map(|v| vec![true; v.domain.len()]).collect(),
            size: c.variables.iter().map(|v| v.domain.len()).collect(),
            trail: Vec::new(),
        }
    }

    /// Domains restricted by every unary constraint.
    pub fn node_consistent(c: &CspInstance) -> Self {
        let mut d = Domains::full(c);
        for con in &c.constraints {
            if con.scope.len() == 1 {
                let var = con.scope[0];
                for (pos, &value) in c.variables[var].domain.iter().enumerate() {
                    if d.alive[var][pos] && !con.allows(&[value]) {
                        d.remove(var, pos);
                    }
                }
            }
        }
        d.trail.clear();
        d
    }

    /// Remaining values of `var`, in domain order.
    pub fn values<'a>(&'a self, c: &'a CspInstance, var: VarId) -> impl Iterator<Item = Value> + 'a {
        c.variables[var]
            .domain
            .iter()
            .enumerate()
            .filter(move |(pos, _)| self.alive[var][*pos])
            .map(|(_, &v)| v)
    }

    pub fn size(&self, var: VarId) -> usize {
        self.size[var]
    }

    fn remove(&mut self, var: VarId, pos: usize) {
        self.alive[var][pos] = false;
        self.size[var] -= 1;
        self.trail.push((var, pos));
    }

    fn mark(&self) -> usize {
        self.trail.len()
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (var, pos) = self.trail.pop().expect("trail longer than mark");
            self.alive[var][pos] = true;
            self.size[var] += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForwardCheck {
    /// `(variable, value)` pairs removed.
    Pruned(Vec<(VarId, Value)>),
    Wipeout(VarId),
}

/// Prunes, for every constraint on `just_assigned` with exactly one
/// unassigned variable left, the values of that variable the constraint
/// rules out.
pub fn forward_check(c: &CspInstance, partial: &Assignment, just_assigned: VarId, domains: &mut Domains) -> ForwardCheck {
    let mut pruned = Vec::new();
    let mut values = partial.values.clone();
    for &ci in &c.watches[just_assigned] {
        let con = &c.constraints[ci];
        let mut open = con.scope.iter().filter(|&&v| values[v].is_none());
        let (Some(&u), None) = (open.next(), open.next()) else {
            continue;
        };
        for (pos, &value) in c.variables[u].domain.iter().enumerate() {
            if !domains.alive[u][pos] {
                continue;
            }
            values[u] = Some(value);
            if con.holds_in(&values) == Some(false) {
                domains.remove(u, pos);
                pruned.push((u, value));
            }
        }
        values[u] = None;
        if domains.size[u] == 0 {
            return ForwardCheck::Wipeout(u);
        }
    }
    ForwardCheck::Pruned(pruned)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes: usize,
    pub backtracks: usize,
    pub wipeouts: usize,
}

/// Chronological backtracking over variables in id order, which is the
/// time-layered order `x[0], a[0], x[1], a[1], …`.
pub fn solve_backtracking(c: &CspInstance, use_forward_checking: bool) -> (Option<Assignment>, SolveStats) {
    let mut stats = SolveStats::default();
    let mut assignment = Assignment::empty(c);
    let mut domains = if use_forward_checking {
        Domains::node_consistent(c)
    } else {
        Domains::full(c)
    };
    if use_forward_checking && (0..c.variables.len()).any(|v| domains.size(v) == 0) {
        return (None, stats);
    }
    let found = backtrack(c, 0, &mut assignment, &mut domains, use_forward_checking, &mut stats);
    (found.then_some(assignment), stats)
}

fn backtrack(
    c: &CspInstance,
    var: VarId,
    a: &mut Assignment,
    domains: &mut Domains,
    fc: bool,
    stats: &mut SolveStats,
) -> bool {
    if var == c.variables.len() {
        return true;
    }
    let candidates: Vec<Value> = domains.values(c, var).collect();
    for value in candidates {
        stats.nodes += 1;
        a.set(var, value);
        let consistent = c.watches[var]
            .iter()
            .all(|&ci| c.constraints[ci].holds_in(&a.values) != Some(false));
        if consistent {
            let mark = domains.mark();
            let alive = !fc || match forward_check(c, a, var, domains) {
                ForwardCheck::Pruned(_) => true,
                ForwardCheck::Wipeout(_) => {
                    stats.wipeouts += 1;
                    false
                }
            };
            if alive && backtrack(c, var + 1, a, domains, fc, stats) {
                return true;
            }
            domains.undo_to(mark);
        }
        stats.backtracks += 1;
    }
    a.unset(var);
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalSearchOutcome {
    Solved(Assignment),
    /// Step budget spent; carries the fewest conflicts seen.
    Timeout { best_conflicts: usize },
}

/// Min-conflicts local search from a random node-consistent assignment.
/// Each step picks a random variable from a violated constraint and moves
/// it to a value with the fewest conflicts. Seeded and reproducible.
pub fn min_conflicts(c: &CspInstance, max_steps: usize, seed: u64) -> LocalSearchOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domains = Domains::node_consistent(c);
    let mut a = Assignment::empty(c);
    for var in 0..c.variables.len() {
        let values: Vec<Value> = domains.values(c, var).collect();
        let Some(&value) = values.choose(&mut rng) else {
            return LocalSearchOutcome::Timeout { best_conflicts: usize::MAX };
        };
        a.set(var, value);
    }
    let mut violated: Vec<bool> = c.constraints.iter().map(|con| con.holds_in(&a.values) == Some(false)).collect();
    let mut total = violated.iter().filter(|&&v| v).count();
    let mut best = total;
    for _ in 0..max_steps {
        if total == 0 {
            return LocalSearchOutcome::Solved(a);
        }
        // Conflicted variables in id order, so the seeded pick is stable.
        let mut conflicted: Vec<VarId> = violated
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .flat_map(|(ci, _)| c.constraints[ci].scope.iter().copied())
            .filter(|&v| domains.size(v) > 1)
            .collect();
        conflicted.sort_unstable();
        conflicted.dedup();
        let Some(&var) = conflicted.choose(&mut rng) else {
            break;
        };
        let mut best_values = Vec::new();
        let mut fewest = usize::MAX;
        for value in domains.values(c, var) {
            a.set(var, value);
            let n = c.watches[var]
                .iter()
                .filter(|&&ci| c.constraints[ci].holds_in(&a.values) == Some(false))
                .count();
            if n < fewest {
                fewest = n;
                best_values.clear();
            }
            if n == fewest {
                best_values.push(value);
            }
        }
        let value = best_values[rng.gen_range(0..best_values.len())];
        a.set(var, value);
        for &ci in &c.watches[var] {
            let now = c.constraints[ci].holds_in(&a.values) == Some(false);
            if now != violated[ci] {
                violated[ci] = now;
                if now {
                    total += 1;
                } else {
                    total -= 1;
                }
            }
        }
        best = best.min(total);
    }
    if total == 0 {
        LocalSearchOutcome::Solved(a)
    } else {
        LocalSearchOutcome::Timeout { best_conflicts: best }
    }
}

/// Reads the action variables in step order and checks the result against
/// the problem.
pub fn decode_plan(c: &CspInstance, a: &Assignment, p: &ClassicalProblem) -> Result<Plan, CspError> {
    let mismatch = |reason: String| CspError::DecodeMismatch { reason };
    let mut steps = Vec::with_capacity(c.horizon);
    for i in 0..c.horizon {
        let value = a
            .get(c.action_var(i))
            .ok_or_else(|| mismatch(format!("a[{i}] is unassigned")))?;
        let action = p
            .actions()
            .get(value)
            .ok_or_else(|| mismatch(format!("a[{i}] = {value} names no action")))?;
        steps.push(action.clone());
    }
    let plan = Plan::new(steps);
    let end = apply_sequence(p.init(), &plan).map_err(|e| mismatch(e.to_string()))?;
    if !satisfies(&end, p.goal()) {
        return Err(mismatch("final state misses the goal".to_string()));
    }
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CspSolver {
    Backtracking { forward_checking: bool },
    MinConflicts { max_steps: usize, seed: u64 },
}

impl Default for CspSolver {
    fn default() -> Self {
        CspSolver::Backtracking { forward_checking: true }
    }
}

/// Solves at exactly horizon `k`. `Ok(None)` means unsatisfiable (or, for
/// min-conflicts, not solved within its step budget).
pub fn solve_at(p: &ClassicalProblem, k: usize, solver: CspSolver) -> Result<(Option<Plan>, usize), CspError> {
    let c = encode(p, k);
    let (assignment, work) = match solver {
        CspSolver::Backtracking { forward_checking } => {
            let (a, stats) = solve_backtracking(&c, forward_checking);
            (a, stats.nodes)
        }
        CspSolver::MinConflicts { max_steps, seed } => match min_conflicts(&c, max_steps, seed) {
            LocalSearchOutcome::Solved(a) => (Some(a), max_steps),
            LocalSearchOutcome::Timeout { .. } => (None, max_steps),
        },
    };
    match assignment {
        Some(a) => Ok((Some(decode_plan(&c, &a, p)?), work)),
        None => Ok((None, work)),
    }
}

/// Iterative deepening over `k = 0..=k_max`; the first satisfiable horizon
/// gives a shortest plan.
pub fn plan_bounded(p: &ClassicalProblem, k_max: usize, solver: CspSolver) -> Result<SearchResult, CspError> {
    let started = Instant::now();
    let mut stats = SearchStats::default();
    for k in 0..=k_max {
        let (plan, work) = solve_at(p, k, solver)?;
        stats.nodes_expanded += work;
        if let Some(plan) = plan {
            stats.duration = started.elapsed();
            return Ok(SearchResult {
                outcome: Outcome::Plan(plan),
                stats,
            });
        }
    }
    stats.duration = started.elapsed();
    let outcome = match solver {
        CspSolver::Backtracking { .. } => Outcome::Unsolvable,
        // Local search failing proves nothing.
        CspSolver::MinConflicts { .. } => Outcome::BudgetExhausted,
    };
    Ok(SearchResult { outcome, stats })
}

/// Plain-text listing of an encoded instance.
pub fn export(c: &CspInstance, p: &ClassicalProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "csp horizon {} fluents {} actions {} variables {} constraints {}",
        c.horizon,
        c.fluents,
        p.actions().len(),
        c.variables.len(),
        c.constraints.len()
    );
    let value_name = |var: VarId, value: Value| match c.variables[var].kind {
        VarKind::State { .. } => if value == TRUE { "true" } else { "false" }.to_string(),
        VarKind::Action { .. } => p.actions()[value].to_string(),
    };
    for v in &c.variables {
        let (kind, name) = match v.kind {
            VarKind::State { fluent, step } => ("state", format!("{}[{step}]", p.fluents()[fluent])),
            VarKind::Action { step } => ("action", format!("a[{step}]")),
        };
        let domain: Vec<String> = v.domain.iter().map(|&x| value_name(v.id, x)).collect();
        let _ = writeln!(out, "var {} {kind} {name} {{{}}}", v.id, domain.join(" "));
    }
    let tuple = |vars: &[VarId], values: &[Value]| {
        let names: Vec<String> = vars.iter().zip(values).map(|(&v, &x)| value_name(v, x)).collect();
        format!("({})", names.join(" "))
    };
    for con in &c.constraints {
        let scope: Vec<String> = con.scope.iter().map(|v| v.to_string()).collect();
        let _ = write!(out, "con {} ({})", con.family, scope.join(" "));
        match &con.relation {
            Relation::Unary(value) => {
                let _ = writeln!(out, " allow {{{}}}", tuple(&con.scope, &[*value]));
            }
            Relation::ActionImplies { action, allowed } => {
                let rows: Vec<String> = allowed.iter().map(|t| tuple(&con.scope[1..], t)).collect();
                let _ = writeln!(
                    out,
                    " when {} allow {{{}}} else any",
                    value_name(con.scope[0], *action),
                    rows.join(" ")
                );
            }
            Relation::Table(allowed) => {
                let rows: Vec<String> = allowed.iter().map(|t| tuple(&con.scope, t)).collect();
                let _ = writeln!(out, " allow {{{}}}", rows.join(" "));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;
    use crate::model::GroundAtom;

    fn keys() -> ClassicalProblem {
        fixture("keys-p1").unwrap().classical()
    }

    fn fluent(p: &ClassicalProblem, text: &str) -> usize {
        p.fluent_index(&GroundAtom::parse(text)).unwrap()
    }

    #[test]
    fn encoding_sizes_at_k4() {
        let p = keys();
        let c = encode(&p, 4);
        assert_eq!(c.variables().len(), 19);
        assert_eq!(c.constraints_of(Family::Init).count(), 3);
        assert_eq!(c.constraints_of(Family::Goal).count(), 2);
        let init_in = c.constraints_of(Family::Init).find(|con| con.scope == [c.state_var(fluent(&p, "(in)"), 0)]).unwrap();
        assert_eq!(init_in.relation, Relation::Unary(TRUE));
        let goals: Vec<_> = c.constraints_of(Family::Goal).map(|con| (con.scope[0], con.relation.clone())).collect();
        assert!(goals.contains(&(c.state_var(fluent(&p, "(in)"), 4), Relation::Unary(FALSE))));
        assert!(goals.contains(&(c.state_var(fluent(&p, "(keys)"), 4), Relation::Unary(TRUE))));
    }

    #[test]
    fn get_keys_constraints() {
        let p = keys();
        let c = encode(&p, 1);
        let get_keys = 0;
        let mine: Vec<_> = c
            .constraints()
            .iter()
            .filter(|con| matches!(con.relation, Relation::ActionImplies { action, .. } if action == get_keys))
            .collect();
        let keys_f = fluent(&p, "(keys)");
        let pre: Vec<_> = mine.iter().filter(|con| con.family == Family::Precondition).collect();
        assert_eq!(pre.len(), 1);
        assert_eq!(pre[0].scope, [c.action_var(0), c.state_var(keys_f, 0)]);
        assert!(pre[0].allows(&[get_keys, FALSE]));
        assert!(!pre[0].allows(&[get_keys, TRUE]));
        let eff: Vec<_> = mine.iter().filter(|con| con.family == Family::Effect).collect();
        assert_eq!(eff[0].scope, [c.action_var(0), c.state_var(keys_f, 1)]);
        // in and open are framed.
        assert_eq!(mine.iter().filter(|con| con.family == Family::Frame).count(), 2);
        // Other actions are unconstrained by get_keys' tables.
        assert!(pre[0].allows(&[3, TRUE]));
    }

    #[test]
    fn horizon_semantics() {
        let p = keys();
        for fc in [true, false] {
            assert!(solve_backtracking(&encode(&p, 2), fc).0.is_none());
            let c = encode(&p, 3);
            let a = solve_backtracking(&c, fc).0.unwrap();
            assert!(c.is_solution(&a));
            assert_eq!(decode_plan(&c, &a, &p).unwrap().names(), ["(get_keys)", "(open_door)", "(leave)"]);
        }
    }

    #[test]
    fn horizon_zero() {
        let p = keys();
        let c = encode(&p, 0);
        assert_eq!(c.variables().len(), 3);
        assert!(solve_backtracking(&c, true).0.is_none());
        let trivial = p.with_goal(Default::default()).unwrap();
        let c = encode(&trivial, 0);
        let a = solve_backtracking(&c, true).0.unwrap();
        assert!(decode_plan(&c, &a, &trivial).unwrap().is_empty());
    }

    #[test]
    fn empty_instance() {
        let c = CspInstance::new(vec![], vec![]).unwrap();
        let a = solve_backtracking(&c, true).0.unwrap();
        assert!(a.is_empty() && a.is_complete());
        assert!(matches!(min_conflicts(&c, 10, 1), LocalSearchOutcome::Solved(_)));
    }

    #[test]
    fn forward_checking_prunes_effects() {
        let p = keys();
        // At k=1 the goal already fixes keys[1].
        let c = encode(&p, 2);
        let mut d = Domains::node_consistent(&c);
        let mut a = Assignment::empty(&c);
        let a0 = c.action_var(0);
        a.set(a0, 0);
        let result = forward_check(&c, &a, a0, &mut d);
        let keys1 = c.state_var(fluent(&p, "(keys)"), 1);
        assert!(matches!(result, ForwardCheck::Pruned(ref v) if v.contains(&(keys1, FALSE))));
        assert_eq!(d.values(&c, keys1).collect::<Vec<_>>(), [TRUE]);
    }

    #[test]
    fn forward_checking_wipeout() {
        let p = keys();
        let c = encode(&p, 1);
        // keys[0] is forced false by the initial state.
        let mut d = Domains::node_consistent(&c);
        let mut a = Assignment::empty(&c);
        let a0 = c.action_var(0);
        a.set(a0, 1);
        assert_eq!(forward_check(&c, &a, a0, &mut d), ForwardCheck::Wipeout(c.state_var(fluent(&p, "(keys)"), 0)));
    }

    #[test]
    fn forward_checking_is_quiet_when_nothing_conflicts() {
        let vars = (0..2)
            .map(|id| CspVariable {
                id,
                kind: VarKind::Action { step: id },
                domain: vec![0, 1],
            })
            .collect();
        let c = CspInstance::new(vars, vec![Constraint::table(vec![0, 1], vec![vec![0, 0], vec![0, 1]])]).unwrap();
        let mut d = Domains::full(&c);
        let mut a = Assignment::empty(&c);
        a.set(0, 0);
        assert_eq!(forward_check(&c, &a, 0, &mut d), ForwardCheck::Pruned(vec![]));
    }

    #[test]
    fn min_conflicts_is_sound_and_seeded() {
        let p = keys();
        let c = encode(&p, 3);
        let first = min_conflicts(&c, 5_000, 7);
        assert_eq!(first, min_conflicts(&c, 5_000, 7));
        if let LocalSearchOutcome::Solved(a) = first {
            assert!(c.is_solution(&a));
            decode_plan(&c, &a, &p).unwrap();
        }
        match min_conflicts(&encode(&p, 2), 2_000, 3) {
            LocalSearchOutcome::Timeout { best_conflicts } => assert!(best_conflicts > 0),
            LocalSearchOutcome::Solved(_) => panic!("k=2 has no solution"),
        }
    }

    #[test]
    fn iterative_deepening() {
        let p = keys();
        let r = plan_bounded(&p, 5, CspSolver::default()).unwrap();
        assert_eq!(r.plan().unwrap().len(), 3);
        let p2 = fixture("keys-p2").unwrap().classical();
        assert_eq!(plan_bounded(&p2, 3, CspSolver::default()).unwrap().outcome, Outcome::Unsolvable);
        assert_eq!(plan_bounded(&p2, 4, CspSolver::default()).unwrap().plan().unwrap().len(), 4);
        let trivial = p.with_goal(Default::default()).unwrap();
        assert!(plan_bounded(&trivial, 3, CspSolver::default()).unwrap().plan().unwrap().is_empty());
    }

    #[test]
    fn decode_rejects_bad_assignments() {
        let p = keys();
        let c = encode(&p, 1);
        let mut a = Assignment::empty(&c);
        a.set(c.action_var(0), 2);
        assert!(matches!(decode_plan(&c, &a, &p), Err(CspError::DecodeMismatch { .. })));
    }

    #[test]
    fn export_lists_everything() {
        let p = keys();
        let c = encode(&p, 1);
        let text = export(&c, &p);
        assert!(text.starts_with("csp horizon 1 fluents 3 actions 8 variables 7"));
        assert_eq!(text.lines().filter(|l| l.starts_with("var ")).count(), 7);
        assert_eq!(text.lines().filter(|l| l.starts_with("con ")).count(), c.constraints().len());
        assert!(text.contains("var 3 action a[0] {(get_keys) (open_door)"));
        assert!(text.contains("con init (0) allow {(true)}"));
        assert!(text.contains("con pre (3 1) when (get_keys) allow {(false)} else any"));
    }

    #[test]
    fn malformed_constraints_are_rejected() {
        let vars = vec![CspVariable {
            id: 0,
            kind: VarKind::State { fluent: 0, step: 0 },
            domain: vec![FALSE, TRUE],
        }];
        assert!(CspInstance::new(vars.clone(), vec![Constraint::table(vec![1], vec![])]).is_err());
        assert!(CspInstance::new(vars, vec![Constraint::table(vec![0], vec![vec![2]])]).is_err());
    }
}
