//! `planlab`: parse, ground, solve and validate PDDL planning problems.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use planlab::csp::{encode, export, plan_bounded, solve_at, CspSolver};
use planlab::fixtures::oracle_table;
use planlab::ground::{build_problem, ClassicalProblem, GroundError, GroundOptions};
use planlab::htn::{parse_htn, seek_plan, HtnConfig};
use planlab::pddl::{load, parse_domain, parse_problem, sniff_kind, Checked, DescriptionKind, Diagnostic, Diagnostics, LinkedProblem};
use planlab::search::{backward_search, forward_search, Outcome, SearchConfig, SearchResult, Strategy};
use planlab::validate::{parse_plan, resolve_plan, validate_htn_solution, validate_plan, Verdict};
use serde::Serialize;

const FORMAT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "planlab", version, about = "STRIPS/PDDL planning toolkit")]
struct Cli {
    /// Output format for reports.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Syntax- and type-check domain and problem files.
    Parse {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Ground a problem and report the number of fluents and actions.
    Ground {
        #[command(flatten)]
        input: Input,
        /// List every fluent and ground action.
        #[arg(long)]
        dump: bool,
        /// Print only the counts.
        #[arg(long, conflicts_with = "dump")]
        count: bool,
    },
    /// Solve a problem.
    Plan {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Check a plan file against a problem.
    Validate {
        #[command(flatten)]
        input: Input,
        plan: PathBuf,
        /// Include the state after every step.
        #[arg(long)]
        trace: bool,
    },
    /// Inspect the bounded CSP encoding.
    Csp {
        #[command(subcommand)]
        command: CspCommand,
    },
    /// Recompute the brute-force oracle table for the bundled fixtures.
    Oracle {
        /// Write the table to this file instead of stdout.
        #[arg(long, value_name = "PATH")]
        write: Option<PathBuf>,
        /// Compare the table with this file; exit 1 if it differs.
        #[arg(long, value_name = "PATH", conflicts_with = "write")]
        check: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CspCommand {
    /// Print the CSP instance for horizon K.
    Export {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_name = "K")]
        bound: usize,
    },
}

#[derive(Args)]
struct Input {
    domain: PathBuf,
    problem: PathBuf,
    /// Keep actions and preconditions over fluents no action changes.
    #[arg(long)]
    no_static_pruning: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Defaults to htn for domains with tasks, forward otherwise.
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Bfs)]
    strategy: StrategyArg,
    /// Solve the CSP at exactly this horizon.
    #[arg(long, value_name = "K", conflicts_with = "max_bound")]
    bound: Option<usize>,
    /// Largest horizon tried by iterative deepening.
    #[arg(long, value_name = "K", default_value_t = 32)]
    max_bound: usize,
    #[arg(long, value_enum, default_value_t = SolverArg::Backtracking)]
    solver: SolverArg,
    /// Disable forward checking in the backtracking CSP solver.
    #[arg(long)]
    no_forward_checking: bool,
    /// Seed for min-conflicts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step limit for each min-conflicts run.
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, value_name = "N", default_value_t = 1_000_000)]
    node_budget: usize,
    /// Search depth limit; for htn, the decomposition depth bound.
    #[arg(long, value_name = "N")]
    depth_budget: Option<usize>,
    /// For htn, print the decomposition tree.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    no_cycle_check: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Engine {
    Forward,
    Backward,
    Csp,
    Htn,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Dfs,
    Bfs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Backtracking,
    MinConflicts,
}

/// Exit codes.
const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const USAGE: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Serialize, Default)]
struct Stats {
    nodes_expanded: usize,
    nodes_generated: usize,
    max_frontier: usize,
}

#[derive(Serialize)]
struct GroundSummary {
    fluents: usize,
    actions: usize,
    init: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    fluent_list: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    action_list: Option<Vec<String>>,
}

#[derive(Serialize, Default)]
struct Report {
    format_version: u32,
    command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    problem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    engine: Option<Engine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<String>,
    outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    statistics: Option<Stats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grounding: Option<GroundSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    listing: Option<String>,
    diagnostics: Vec<FileDiagnostic>,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct FileDiagnostic {
    file: String,
    #[serde(flatten)]
    diagnostic: Diagnostic,
}

impl Report {
    fn render_text(&self) -> String {
        if let Some(listing) = &self.listing {
            return listing.clone();
        }
        let mut out = String::new();
        if let (Some(d), Some(p)) = (&self.domain, &self.problem) {
            let _ = writeln!(out, "domain {d}, problem {p}");
        }
        if let Some(engine) = self.engine {
            let name = serde_json::to_value(engine).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            match &self.strategy {
                Some(s) => {
                    let _ = writeln!(out, "engine {name} ({s})");
                }
                None => {
                    let _ = writeln!(out, "engine {name}");
                }
            }
        }
        if let Some(g) = &self.grounding {
            let _ = writeln!(out, "fluents {}, actions {}, initial atoms {}", g.fluents, g.actions, g.init);
            for f in g.fluent_list.iter().flatten() {
                let _ = writeln!(out, "fluent {f}");
            }
            for a in g.action_list.iter().flatten() {
                let _ = writeln!(out, "action {a}");
            }
        }
        match &self.plan {
            Some(plan) => {
                let _ = writeln!(out, "outcome {} ({} steps)", self.outcome, plan.len());
                for (i, step) in plan.iter().enumerate() {
                    let _ = writeln!(out, "  {} {step}", i + 1);
                }
            }
            None => {
                let _ = writeln!(out, "outcome {}", self.outcome);
            }
        }
        if let Some(Some(failure)) = self.verdict.as_ref().map(|v| &v.failure) {
            let _ = writeln!(out, "reason {failure}");
        }
        if let Some(states) = self.verdict.as_ref().and_then(|v| v.state_trace.as_ref()) {
            for (i, s) in states.iter().enumerate() {
                let _ = writeln!(out, "state {i} {s}");
            }
        }
        for line in self.trace.iter().flatten() {
            let _ = writeln!(out, "{line}");
        }
        if let Some(s) = &self.statistics {
            let _ = writeln!(
                out,
                "nodes expanded {}, generated {}, max frontier {}",
                s.nodes_expanded, s.nodes_generated, s.max_frontier
            );
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "{}:{}", d.file, d.diagnostic);
        }
        let _ = writeln!(out, "time {:.3} ms", self.wall_time_ms);
        out
    }
}

/// A failure that ends the command with a report and an exit code.
struct Stop(u8);

struct Ctx {
    report: Report,
}

impl Ctx {
    fn diagnostics(&mut self, file: &Path, diags: &Diagnostics) {
        for d in diags.iter() {
            self.report.diagnostics.push(FileDiagnostic {
                file: file.display().to_string(),
                diagnostic: d.clone(),
            });
        }
    }

    fn error(&mut self, file: &Path, message: String) -> Stop {
        self.report.outcome = "error".into();
        self.report.diagnostics.push(FileDiagnostic {
            file: file.display().to_string(),
            diagnostic: Diagnostic::error(planlab::pddl::DiagnosticCode::Syntax, Default::default(), message),
        });
        Stop(USAGE)
    }

    fn read(&mut self, path: &Path) -> Result<String, Stop> {
        std::fs::read_to_string(path).map_err(|e| self.error(path, format!("cannot read file: {e}")))
    }

    fn checked<T>(&mut self, file: &Path, result: Result<Checked<T>, Diagnostics>) -> Result<T, Stop> {
        match result {
            Ok(c) => {
                self.diagnostics(file, &c.warnings);
                Ok(c.value)
            }
            Err(diags) => {
                self.diagnostics(file, &diags);
                self.report.outcome = "error".into();
                Err(Stop(USAGE))
            }
        }
    }

    fn linked(&mut self, input: &Input) -> Result<LinkedProblem, Stop> {
        let domain = self.read(&input.domain)?;
        let problem = self.read(&input.problem)?;
        // Report syntax errors against the file they occur in.
        self.checked(&input.domain, parse_domain(&domain))?;
        self.checked(&input.problem, parse_problem(&problem))?;
        self.report.diagnostics.clear();
        let linked = self.checked(&input.problem, load(&domain, &problem))?;
        self.report.domain = Some(linked.domain.name.to_string());
        self.report.problem = Some(linked.problem.name.to_string());
        Ok(linked)
    }

    fn ground(&mut self, input: &Input, linked: &LinkedProblem) -> Result<ClassicalProblem, Stop> {
        let options = GroundOptions {
            prune_statics: !input.no_static_pruning,
            ..Default::default()
        };
        build_problem(linked, &options).map_err(|e| {
            let budget = matches!(e, GroundError::TooManyInstances { .. });
            let stop = self.error(&input.problem, e.to_string());
            if budget {
                self.report.outcome = "budget-exhausted".into();
                Stop(BUDGET)
            } else {
                stop
            }
        })
    }

    fn search_result(&mut self, r: &SearchResult) -> u8 {
        self.report.outcome = r.outcome.label().into();
        self.report.plan = r.plan().map(|p| p.names());
        self.report.statistics = Some(Stats {
            nodes_expanded: r.stats.nodes_expanded,
            nodes_generated: r.stats.nodes_generated,
            max_frontier: r.stats.max_frontier,
        });
        match r.outcome {
            Outcome::Plan(_) => OK,
            Outcome::Unsolvable => NEGATIVE,
            Outcome::BudgetExhausted => BUDGET,
        }
    }
}

fn run_parse(ctx: &mut Ctx, files: &[PathBuf]) -> Result<u8, Stop> {
    let mut domains = Vec::new();
    let mut problems = Vec::new();
    for file in files {
        let text = ctx.read(file)?;
        match sniff_kind(&text) {
            Some(DescriptionKind::Problem) => {
                ctx.checked(file, parse_problem(&text))?;
                problems.push((file, text));
            }
            _ => {
                ctx.checked(file, parse_domain(&text))?;
                domains.push(text);
            }
        }
    }
    if let [domain] = domains.as_slice() {
        for (file, problem) in &problems {
            let linked = load(domain, problem);
            ctx.checked(file, linked.map(|c| Checked { value: (), warnings: c.warnings }))?;
        }
    }
    ctx.report.outcome = "ok".into();
    Ok(OK)
}

fn run_ground(ctx: &mut Ctx, input: &Input, dump: bool) -> Result<u8, Stop> {
    let linked = ctx.linked(input)?;
    let p = ctx.ground(input, &linked)?;
    let describe = |a: &planlab::GroundAction| {
        let list = |xs: &planlab::AtomSet| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        format!(
            "{a} pre+ [{}] pre- [{}] add [{}] del [{}]",
            list(a.pre_pos()),
            list(a.pre_neg()),
            list(a.add()),
            list(a.del())
        )
    };
    ctx.report.grounding = Some(GroundSummary {
        fluents: p.fluents().len(),
        actions: p.actions().len(),
        init: p.init().len(),
        fluent_list: dump.then(|| p.fluents().iter().map(|f| f.to_string()).collect()),
        action_list: dump.then(|| p.actions().iter().map(describe).collect()),
    });
    ctx.report.outcome = "ok".into();
    Ok(OK)
}

fn is_hierarchical(path: &Path) -> bool {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|t| parse_domain(&t).ok())
        .is_some_and(|d| d.value.is_hierarchical())
}

fn run_plan(ctx: &mut Ctx, input: &Input, args: &SolveArgs) -> Result<u8, Stop> {
    let engine = args
        .engine
        .unwrap_or_else(|| if is_hierarchical(&input.domain) { Engine::Htn } else { Engine::Forward });
    ctx.report.engine = Some(engine);
    if engine == Engine::Htn {
        return run_htn(ctx, input, args);
    }
    let linked = ctx.linked(input)?;
    let p = ctx.ground(input, &linked)?;
    let config = SearchConfig {
        strategy: match args.strategy {
            StrategyArg::Dfs => Strategy::Dfs,
            StrategyArg::Bfs => Strategy::Bfs,
        },
        max_depth: args.depth_budget,
        node_budget: args.node_budget,
        cycle_checking: !args.no_cycle_check,
    };
    let result = match engine {
        Engine::Forward | Engine::Backward => {
            ctx.report.strategy = Some(config.strategy.to_string());
            if engine == Engine::Forward {
                forward_search(&p, &config)
            } else {
                backward_search(&p, &config)
            }
        }
        _ => {
            let solver = match args.solver {
                SolverArg::Backtracking => CspSolver::Backtracking {
                    forward_checking: !args.no_forward_checking,
                },
                SolverArg::MinConflicts => CspSolver::MinConflicts {
                    max_steps: args.max_steps,
                    seed: args.seed,
                },
            };
            ctx.report.strategy = Some(match solver {
                CspSolver::Backtracking { forward_checking: true } => "backtracking+fc".into(),
                CspSolver::Backtracking { forward_checking: false } => "backtracking".into(),
                CspSolver::MinConflicts { seed, .. } => format!("min-conflicts seed {seed}"),
            });
            let solved = match args.bound {
                Some(k) => solve_at(&p, k, solver).map(|(plan, work)| {
                    let outcome = match (plan, solver) {
                        (Some(plan), _) => Outcome::Plan(plan),
                        (None, CspSolver::Backtracking { .. }) => Outcome::Unsolvable,
                        (None, CspSolver::MinConflicts { .. }) => Outcome::BudgetExhausted,
                    };
                    SearchResult {
                        outcome,
                        stats: planlab::search::SearchStats {
                            nodes_expanded: work,
                            ..Default::default()
                        },
                    }
                }),
                None => plan_bounded(&p, args.max_bound, solver),
            };
            solved.map_err(|e| ctx.error(&input.problem, e.to_string()))?
        }
    };
    Ok(ctx.search_result(&result))
}

fn run_htn(ctx: &mut Ctx, input: &Input, args: &SolveArgs) -> Result<u8, Stop> {
    let domain = ctx.read(&input.domain)?;
    let problem = ctx.read(&input.problem)?;
    ctx.checked(&input.domain, parse_domain(&domain))?;
    ctx.report.diagnostics.clear();
    let p = ctx.checked(&input.problem, parse_htn(&domain, &problem))?;
    ctx.report.domain = Some(p.linked.domain.name.to_string());
    ctx.report.problem = Some(p.linked.problem.name.to_string());
    let config = HtnConfig {
        depth_bound: args.depth_budget,
        node_budget: args.node_budget,
    };
    let r = seek_plan(&p, &config);
    if args.trace {
        if let Some(trace) = &r.trace {
            ctx.report.trace = Some(trace.render().lines().map(String::from).collect());
        }
    }
    Ok(ctx.search_result(&r.result))
}

fn run_validate(ctx: &mut Ctx, input: &Input, plan_file: &Path, trace: bool) -> Result<u8, Stop> {
    let plan_text = ctx.read(plan_file)?;
    let steps = parse_plan(&plan_text).map_err(|d| {
        ctx.diagnostics(plan_file, &Diagnostics(vec![d]));
        ctx.report.outcome = "error".into();
        Stop(USAGE)
    })?;
    let hierarchical = is_hierarchical(&input.domain);
    let verdict = if hierarchical {
        let domain = ctx.read(&input.domain)?;
        let problem = ctx.read(&input.problem)?;
        let p = ctx.checked(&input.problem, parse_htn(&domain, &problem))?;
        ctx.report.domain = Some(p.linked.domain.name.to_string());
        ctx.report.problem = Some(p.linked.problem.name.to_string());
        let plan = resolve_plan(&steps, &p.operators);
        plan.and_then(|plan| validate_htn_solution(&p, &plan, None))
    } else {
        let linked = ctx.linked(input)?;
        let full = Input {
            domain: input.domain.clone(),
            problem: input.problem.clone(),
            no_static_pruning: true,
        };
        let p = ctx.ground(&full, &linked)?;
        resolve_plan(&steps, &p).and_then(|plan| validate_plan(&p, &plan, trace))
    };
    ctx.report.plan = Some(steps.iter().map(|s| s.to_string()).collect());
    match verdict {
        Ok(v) => {
            let code = if v.valid { OK } else { NEGATIVE };
            ctx.report.outcome = if v.valid { "valid" } else { "invalid" }.into();
            ctx.report.verdict = Some(v);
            Ok(code)
        }
        Err(e) => {
            ctx.report.outcome = "invalid".into();
            ctx.report.diagnostics.push(FileDiagnostic {
                file: plan_file.display().to_string(),
                diagnostic: Diagnostic::error(planlab::pddl::DiagnosticCode::UnknownObject, Default::default(), e.to_string()),
            });
            Ok(NEGATIVE)
        }
    }
}

fn run_csp_export(ctx: &mut Ctx, input: &Input, bound: usize) -> Result<u8, Stop> {
    let linked = ctx.linked(input)?;
    let p = ctx.ground(input, &linked)?;
    ctx.report.engine = Some(Engine::Csp);
    ctx.report.listing = Some(export(&encode(&p, bound), &p));
    ctx.report.outcome = "ok".into();
    Ok(OK)
}

fn run_oracle(ctx: &mut Ctx, write: Option<&Path>, check: Option<&Path>) -> Result<u8, Stop> {
    let table = oracle_table().map_err(|e| ctx.error(Path::new("-"), e.to_string()))?;
    if let Some(path) = write {
        std::fs::write(path, &table).map_err(|e| ctx.error(path, format!("cannot write file: {e}")))?;
        ctx.report.outcome = "written".into();
        return Ok(OK);
    }
    if let Some(path) = check {
        let cached = ctx.read(path)?;
        let same = cached == table;
        ctx.report.outcome = if same { "up-to-date" } else { "stale" }.into();
        return Ok(if same { OK } else { NEGATIVE });
    }
    ctx.report.outcome = "ok".into();
    ctx.report.listing = Some(table);
    Ok(OK)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let started = Instant::now();
    let mut ctx = Ctx {
        report: Report {
            format_version: FORMAT_VERSION,
            command: argv.into_iter().skip(1).collect(),
            ..Default::default()
        },
    };
    let result = match &cli.command {
        Command::Parse { files } => run_parse(&mut ctx, files),
        Command::Ground { input, dump, .. } => run_ground(&mut ctx, input, *dump),
        Command::Plan { input, solve } => run_plan(&mut ctx, input, solve),
        Command::Validate { input, plan, trace } => run_validate(&mut ctx, input, plan, *trace),
        Command::Csp {
            command: CspCommand::Export { input, bound },
        } => run_csp_export(&mut ctx, input, *bound),
        Command::Oracle { write, check } => run_oracle(&mut ctx, write.as_deref(), check.as_deref()),
    };
    let code = result.unwrap_or_else(|Stop(code)| code);
    ctx.report.wall_time_ms = started.elapsed().as_secs_f64() * 1000.0;
    let rendered = match cli.format {
        Format::Json => serde_json::to_string_pretty(&ctx.report).map(|s| s + "\n").unwrap_or_default(),
        Format::Text => ctx.report.render_text(),
    };
    if code == USAGE && cli.format == Format::Text {
        eprint!("{rendered}");
    } else {
        print!("{rendered}");
    }
    ExitCode::from(code)
}
