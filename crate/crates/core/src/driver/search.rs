//! Depth-first search combining the arithmetic engine with the membership
//! procedure.
//!
//! Every node propagates both to a common fixpoint and then solves the
//! relaxation. Branching prefers unfixed 0/1 variables, then fractional
//! values, then a data-driven split of a membership that the integral
//! model violates. Backtracking is chronological.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::ast::Direction;
use crate::decompose::{DecomposedProblem, VarKind};
use crate::lia::simplex::Rat;
use crate::lia::{
    branch_select_int, reify, BoundsStore, EngineMark, LiaEngine, LinearConstraint, LinearError, LpResult, VarId,
    VarRegistry,
};
use crate::membership::{AtomId, Membership, MembershipBranch, MembershipEvent, MembershipMark, Relation};

pub const DEFAULT_BOUND: i64 = 1 << 30;

#[derive(Clone, Debug)]
pub struct Limits {
    pub max_nodes: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Magnitude of the bounds given to open sides of declared variables.
    pub default_bound: i64,
    pub cancel: Option<Arc<AtomicBool>>,
    pub trace: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: None,
            time_limit: None,
            default_bound: DEFAULT_BOUND,
            cancel: None,
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Sat,
    Unsat,
    Optimal,
    Infeasible,
    ResourceLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Sat => "sat",
            Status::Unsat => "unsat",
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::ResourceLimit => "resource-limit",
        }
    }

    /// Whether a model is known.
    pub fn is_feasible(self) -> bool {
        matches!(self, Status::Sat | Status::Optimal)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: u64,
    /// Nodes at which the search branched.
    pub branch_points: u64,
    /// Alternatives tried, over all branch points.
    pub decisions: u64,
    pub propagations: u64,
    pub equality_splits: u64,
    pub conflicts: u64,
    pub lp_calls: u64,
    pub pivots: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Lia,
    Membership,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Bounds {
        var: String,
        lb: Option<i64>,
        ub: Option<i64>,
        source: Source,
    },
    UniqueCandidate {
        constraint: usize,
        table: String,
        row: usize,
    },
    GuardDisabled {
        constraint: usize,
    },
    Decision {
        depth: usize,
        decision: String,
    },
    Conflict {
        depth: usize,
    },
    Incumbent {
        objective: i128,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: Status,
    /// Values of the declared variables.
    pub model: Option<BTreeMap<String, i64>>,
    pub objective: Option<i128>,
    pub stats: Stats,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("arithmetic encoding failed: {0}")]
    Encoding(#[from] LinearError),
}

#[derive(Clone, Debug)]
enum Alt {
    Bounds { var: VarId, lb: Option<i64>, ub: Option<i64> },
    Relation { atom: AtomId, rel: Relation },
}

struct Frame {
    lia: EngineMark,
    mem: MembershipMark,
    alts: Vec<Alt>,
    next: usize,
}

enum NodeOutcome {
    Conflict,
    Branch(Vec<Alt>),
    Leaf(Vec<i64>),
}

struct Search<'a> {
    problem: &'a DecomposedProblem,
    lia: LiaEngine,
    mem: Membership,
    limits: &'a Limits,
    /// Maximization direction of the objective over engine variables.
    objective: Option<Vec<(VarId, i64)>>,
    stats: Stats,
    trace: Vec<TraceEvent>,
    start: Instant,
}

/// Build the engines for `p`: declared, witness, guard and auxiliary
/// variables first, in the order of `p.vars`, then reification indicators.
pub fn build_engines(p: &DecomposedProblem, default_bound: i64) -> Result<(LiaEngine, Membership), SolveError> {
    let mut reg = VarRegistry::new();
    let mut bounds = BoundsStore::new();
    for (v, (lo, hi)) in p.vars.iter().zip(p.finite_bounds(default_bound)) {
        reg.add(&v.name, v.kind);
        bounds.add_var(Some(lo), Some(hi));
    }
    let cs = reify(&p.qflia, &mut reg, &mut bounds)?;
    let mem = Membership::new(p, &reg);
    Ok((LiaEngine::new(reg, bounds, cs), mem))
}

impl<'a> Search<'a> {
    fn new(p: &'a DecomposedProblem, limits: &'a Limits, optimize: bool) -> Result<Self, SolveError> {
        let (lia, mem) = build_engines(p, limits.default_bound)?;
        let objective = match (&p.objective, optimize) {
            (Some((dir, t)), true) => {
                let sign = if *dir == Direction::Maximize { 1 } else { -1 };
                let lin = LinearConstraint::from_le(t, &crate::qf::LinTerm::constant(0), &lia.registry)?;
                Some(lin.terms.iter().map(|&(v, a)| (v, sign * a)).collect())
            }
            _ => None,
        };
        Ok(Search {
            problem: p,
            lia,
            mem,
            limits,
            objective,
            stats: Stats::default(),
            trace: Vec::new(),
            start: Instant::now(),
        })
    }

    fn out_of_resources(&self) -> bool {
        self.limits.max_nodes.is_some_and(|n| self.stats.nodes >= n)
            || self.limits.time_limit.is_some_and(|t| self.start.elapsed() >= t)
            || self
                .limits
                .cancel
                .as_ref()
                .is_some_and(|c| c.load(Ordering::Relaxed))
    }

    fn trace_bounds(&mut self, from: usize, source: Source) {
        if !self.limits.trace {
            return;
        }
        let mut steps = self.lia.bounds.history_since(from);
        steps.dedup_by(|b, a| {
            if a.0 == b.0 {
                *a = *b;
                true
            } else {
                false
            }
        });
        for (v, lb, ub) in steps {
            self.trace.push(TraceEvent::Bounds {
                var: self.lia.registry.name(v).to_string(),
                lb,
                ub,
                source,
            });
        }
    }

    fn propagate(&mut self) -> bool {
        loop {
            let pos = self.lia.bounds.trail_len();
            let lia = self.lia.propagate();
            self.trace_bounds(pos, Source::Lia);
            if lia.is_err() {
                return false;
            }
            let pos = self.lia.bounds.trail_len();
            let out = self.mem.propagate(&mut self.lia);
            if self.limits.trace {
                if let Ok(out) = &out {
                    for e in &out.events {
                        self.trace.push(match *e {
                            MembershipEvent::UniqueCandidate { constraint, row } => TraceEvent::UniqueCandidate {
                                constraint,
                                table: self.mem.constraints[constraint].table.name.clone(),
                                row,
                            },
                            MembershipEvent::Disabled { constraint } => TraceEvent::GuardDisabled { constraint },
                        });
                    }
                }
            }
            self.trace_bounds(pos, Source::Membership);
            match out {
                Err(_) => return false,
                Ok(o) if !o.changed => return true,
                Ok(_) => {}
            }
        }
    }

    fn node(&mut self) -> NodeOutcome {
        if !self.propagate() {
            return NodeOutcome::Conflict;
        }
        let model = match self.lia.lp_check(self.objective.as_deref()) {
            LpResult::Infeasible => return NodeOutcome::Conflict,
            LpResult::Feasible(m) => m,
        };
        let half = Rat::new(1.into(), 2.into());
        for v in self.lia.registry.ids() {
            if self.lia.registry.kind(v).is_boolean() && self.lia.bounds.fixed_value(v).is_none() {
                let (one, zero) = (
                    Alt::Bounds { var: v, lb: Some(1), ub: None },
                    Alt::Bounds { var: v, lb: None, ub: Some(0) },
                );
                return NodeOutcome::Branch(if model.values[v.index()] >= half {
                    vec![one, zero]
                } else {
                    vec![zero, one]
                });
            }
        }
        if let Some(b) = branch_select_int(&model) {
            return NodeOutcome::Branch(vec![
                Alt::Bounds { var: b.var, lb: None, ub: Some(b.floor) },
                Alt::Bounds { var: b.var, lb: Some(b.floor + 1), ub: None },
            ]);
        }
        let mut values: Vec<i64> = model
            .values
            .iter()
            .map(|q| q.to_integer().to_i64().expect("bounded integral value"))
            .collect();
        for c in 0..self.mem.len() {
            if self.mem.is_active(c, &self.lia.bounds) != Some(true)
                || self.mem.constraints[c].holds(&|v: VarId| values[v.index()])
                || self.repair(c, &mut values)
            {
                continue;
            }
            return match self.mem.suggest_branch(c, &self.lia.bounds) {
                Some(MembershipBranch::Split { var, at }) => NodeOutcome::Branch(vec![
                    Alt::Bounds { var, lb: None, ub: Some(at - 1) },
                    Alt::Bounds { var, lb: Some(at), ub: None },
                ]),
                Some(MembershipBranch::Equality { atom }) => {
                    self.stats.equality_splits += 1;
                    NodeOutcome::Branch(
                        [Relation::Less, Relation::Greater, Relation::Equal]
                            .into_iter()
                            .map(|rel| Alt::Relation { atom, rel })
                            .collect(),
                    )
                }
                None => self.residual_split(c),
            };
        }
        debug_assert!(self.lia.satisfied_by(&|v: VarId| values[v.index()]));
        NodeOutcome::Leaf(values)
    }

    /// Move witnesses of constraint `c` that no enforced constraint or
    /// objective mentions onto a candidate row that agrees with `values` on
    /// every other column.
    fn repair(&self, c: usize, values: &mut [i64]) -> bool {
        let m = &self.mem.constraints[c];
        let movable: Vec<bool> = m
            .witness
            .iter()
            .map(|&x| {
                self.lia.is_unconstrained(x)
                    && !self.objective.as_ref().is_some_and(|o| o.iter().any(|&(v, _)| v == x))
            })
            .collect();
        if !movable.contains(&true) {
            return false;
        }
        let bounds = &self.lia.bounds;
        let mut moves = Vec::new();
        'rows: for r in m.candidate_rows() {
            moves.clear();
            for (i, (&x, &cell)) in m.witness.iter().zip(&m.rows[r]).enumerate() {
                let want = cell.value(&|v: VarId| values[v.index()]);
                if want == values[x.index()] as i128 {
                    continue;
                }
                let inside = bounds.lb(x).is_none_or(|l| want >= l as i128) && bounds.ub(x).is_none_or(|u| want <= u as i128);
                if !movable[i] || !inside {
                    continue 'rows;
                }
                moves.push((x, want as i64));
            }
            for &(x, v) in &moves {
                values[x.index()] = v;
            }
            return true;
        }
        false
    }

    /// A split on some unfixed witness of constraint `c`. Only reached if
    /// no candidate offers an undetermined atom, which the candidate
    /// invariants rule out; kept so the search stays complete regardless.
    fn residual_split(&self, c: usize) -> NodeOutcome {
        for &x in &self.mem.constraints[c].witness {
            if let (Some(l), Some(u)) = (self.lia.bounds.lb(x), self.lia.bounds.ub(x)) {
                if l < u {
                    let mid = l + (u - l) / 2;
                    return NodeOutcome::Branch(vec![
                        Alt::Bounds { var: x, lb: None, ub: Some(mid) },
                        Alt::Bounds { var: x, lb: Some(mid + 1), ub: None },
                    ]);
                }
            }
        }
        NodeOutcome::Conflict
    }

    fn describe(&self, alt: &Alt) -> String {
        match alt {
            Alt::Bounds { var, lb, ub } => {
                let n = self.lia.registry.name(*var);
                match (lb, ub) {
                    (Some(l), None) => format!("{n} >= {l}"),
                    (None, Some(u)) => format!("{n} <= {u}"),
                    _ => format!("{n} in [{lb:?}, {ub:?}]"),
                }
            }
            Alt::Relation { atom, rel } => {
                let m = &self.mem.constraints[atom.constraint];
                let x = self.lia.registry.name(m.witness[atom.col]);
                let cell = match m.rows[atom.row][atom.col] {
                    crate::membership::CellRef::Const(k) => k.to_string(),
                    crate::membership::CellRef::Var(v, 0) => self.lia.registry.name(v).to_string(),
                    crate::membership::CellRef::Var(v, k) => format!("{} + {k}", self.lia.registry.name(v)),
                };
                let op = match rel {
                    Relation::Less => "<",
                    Relation::Equal => "=",
                    Relation::Greater => ">",
                };
                format!("{x} {op} {cell}")
            }
        }
    }

    fn apply(&mut self, alt: &Alt, depth: usize) -> bool {
        self.stats.decisions += 1;
        if self.limits.trace {
            let decision = self.describe(alt);
            self.trace.push(TraceEvent::Decision { depth, decision });
        }
        match *alt {
            Alt::Bounds { var, lb, ub } => {
                lb.is_none_or(|l| self.lia.bounds.set_lb(var, l).is_ok())
                    && ub.is_none_or(|u| self.lia.bounds.set_ub(var, u).is_ok())
            }
            Alt::Relation { atom, rel } => self.mem.apply_relation(atom, rel, &mut self.lia),
        }
    }

    fn objective_value(&self, values: &[i64]) -> i128 {
        self.objective
            .as_ref()
            .map_or(0, |o| o.iter().map(|&(v, a)| a as i128 * values[v.index()] as i128).sum())
    }

    fn user_model(&self, values: &[i64]) -> BTreeMap<String, i64> {
        self.problem
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::User)
            .map(|v| {
                let id = self.lia.registry.get(&v.name).expect("registered");
                (v.name.clone(), values[id.index()])
            })
            .collect()
    }

    fn reported_objective(&self, values: &[i64]) -> Option<i128> {
        let (_, t) = self.problem.objective.as_ref()?;
        let model = self.user_model(values);
        let ids = |n: &str| {
            model
                .get(n)
                .copied()
                .or_else(|| self.lia.registry.get(n).map(|id| values[id.index()]))
        };
        t.eval(&ids)
    }

    fn run(mut self) -> SolveResult {
        let optimizing = self.objective.is_some();
        let mut stack: Vec<Frame> = Vec::new();
        let mut incumbent: Option<Vec<i64>> = None;
        let mut exhausted = false;
        'search: loop {
            if self.out_of_resources() {
                break;
            }
            self.stats.nodes += 1;
            let mut backtrack = match self.node() {
                NodeOutcome::Conflict => {
                    self.stats.conflicts += 1;
                    if self.limits.trace {
                        self.trace.push(TraceEvent::Conflict { depth: stack.len() });
                    }
                    true
                }
                NodeOutcome::Leaf(values) => {
                    if !optimizing {
                        incumbent = Some(values);
                        break;
                    }
                    let v = self.objective_value(&values);
                    if self.limits.trace {
                        self.trace.push(TraceEvent::Incumbent { objective: v });
                    }
                    let bound = (-(v + 1)).clamp(i64::MIN as i128, i64::MAX as i128) as i64;
                    let terms = self.objective.as_ref().expect("objective").iter().map(|&(x, a)| (x, -a));
                    incumbent = Some(values);
                    match LinearConstraint::new(terms, bound) {
                        Ok(cut) => self.lia.set_cut(cut),
                        Err(_) => {
                            exhausted = true;
                            break;
                        }
                    }
                    true
                }
                NodeOutcome::Branch(alts) => {
                    self.stats.branch_points += 1;
                    stack.push(Frame {
                        lia: self.lia.mark(),
                        mem: self.mem.mark(),
                        alts,
                        next: 0,
                    });
                    false
                }
            };
            loop {
                if backtrack {
                    let Some(top) = stack.last() else {
                        exhausted = true;
                        break 'search;
                    };
                    let (lm, mm) = (top.lia, top.mem);
                    self.lia.backtrack(lm);
                    self.mem.backtrack(mm);
                }
                let depth = stack.len();
                let Some(top) = stack.last_mut() else {
                    exhausted = true;
                    break 'search;
                };
                if top.next >= top.alts.len() {
                    stack.pop();
                    backtrack = true;
                    continue;
                }
                let alt = top.alts[top.next].clone();
                top.next += 1;
                if self.apply(&alt, depth) {
                    break;
                }
                backtrack = true;
            }
        }
        let lia_stats = self.lia.stats;
        self.stats.propagations = lia_stats.propagations;
        self.stats.lp_calls = lia_stats.lp_calls;
        self.stats.pivots = lia_stats.pivots;
        let status = match (optimizing, exhausted, incumbent.is_some()) {
            (false, _, true) => Status::Sat,
            (false, true, false) => Status::Unsat,
            (true, true, true) => Status::Optimal,
            (true, true, false) => Status::Infeasible,
            (_, false, _) => Status::ResourceLimit,
        };
        SolveResult {
            status,
            model: incumbent.as_deref().map(|v| self.user_model(v)),
            objective: if optimizing {
                incumbent.as_deref().and_then(|v| self.reported_objective(v))
            } else {
                None
            },
            stats: self.stats,
            trace: self.trace,
        }
    }
}

/// Decide satisfiability of `p`, ignoring any objective.
pub fn solve(p: &DecomposedProblem, limits: &Limits) -> Result<SolveResult, SolveError> {
    Ok(Search::new(p, limits, false)?.run())
}

/// Optimize the objective of `p` by branch and bound. Without an
/// objective this is [`solve`].
pub fn optimize(p: &DecomposedProblem, limits: &Limits) -> Result<SolveResult, SolveError> {
    if p.objective.is_none() {
        return solve(p, limits);
    }
    Ok(Search::new(p, limits, true)?.run())
}

/// Dispatch on the presence of an objective.
pub fn run(p: &DecomposedProblem, limits: &Limits) -> Result<SolveResult, SolveError> {
    if p.objective.is_some() {
        optimize(p, limits)
    } else {
        solve(p, limits)
    }
}
