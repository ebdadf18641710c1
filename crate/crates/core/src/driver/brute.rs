//! Exhaustive enumeration over a decomposed problem, used as an oracle.
//!
//! Declared variables range over their bounds. Auxiliary variables take the
//! value of their definition, witness variables range over the values of
//! the cells in their column, and a guard is 1 exactly when its membership
//! holds. Every complete assignment is checked against the expanded formula.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::search::{SolveResult, Stats, Status};
use crate::ast::Direction;
use crate::decompose::{cell_term, DecomposedProblem, VarKind};
use crate::qf::Qf;

pub const DEFAULT_MAX_SPACE: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BruteForceError {
    #[error("search space of {0} assignments exceeds the limit")]
    TooLarge(u128),
    #[error("variable `{0}` has no finite bounds")]
    Unbounded(String),
    #[error("variable `{0}` could not be evaluated")]
    Unevaluable(String),
}

struct Enumerator<'a> {
    p: &'a DecomposedProblem,
    formula: Qf,
    /// Enumerated variables; the flag marks declared ones.
    users: Vec<(String, i64, i64, bool)>,
    witnesses: Vec<String>,
    /// Per witness: (membership, column) pairs containing it.
    occurrences: HashMap<String, Vec<(usize, usize)>>,
    guarded: Vec<(String, usize)>,
    values: HashMap<String, i64>,
    best: Option<(i128, BTreeMap<String, i64>)>,
    checked: u64,
    stop: bool,
}

impl Enumerator<'_> {
    fn lookup(&self, n: &str) -> Option<i64> {
        self.values.get(n).copied()
    }

    fn users(&mut self, i: usize) -> Result<(), BruteForceError> {
        if self.stop {
            return Ok(());
        }
        if i == self.users.len() {
            for (a, t) in &self.p.definitions {
                let v = t
                    .eval(&|n| self.values.get(n).copied())
                    .and_then(|v| i64::try_from(v).ok())
                    .ok_or_else(|| BruteForceError::Unevaluable(a.clone()))?;
                self.values.insert(a.clone(), v);
            }
            return self.witness(0);
        }
        let (name, lo, hi, _) = self.users[i].clone();
        for v in lo..=hi {
            self.values.insert(name.clone(), v);
            self.users(i + 1)?;
            if self.stop {
                break;
            }
        }
        Ok(())
    }

    fn witness(&mut self, i: usize) -> Result<(), BruteForceError> {
        if self.stop {
            return Ok(());
        }
        if i == self.witnesses.len() {
            self.leaf();
            return Ok(());
        }
        let name = self.witnesses[i].clone();
        let mut domain: Vec<i64> = Vec::new();
        for &(m, col) in &self.occurrences[&name] {
            for row in &self.p.memberships[m].table.rows {
                if let Some(v) = cell_term(&row[col]).eval(&|n| self.lookup(n)) {
                    if let Ok(v) = i64::try_from(v) {
                        domain.push(v);
                    }
                }
            }
        }
        domain.sort_unstable();
        domain.dedup();
        if domain.is_empty() {
            domain.push(0);
        }
        for v in domain {
            self.values.insert(name.clone(), v);
            self.witness(i + 1)?;
            if self.stop {
                break;
            }
        }
        Ok(())
    }

    fn leaf(&mut self) {
        self.guards(0);
    }

    /// A guard may be 0 always, and 1 only when its membership holds.
    fn guards(&mut self, i: usize) {
        if self.stop {
            return;
        }
        let Some((g, m)) = self.guarded.get(i).cloned() else {
            self.check();
            return;
        };
        let holds = crate::decompose::membership_to_disjunction(&self.p.memberships[m])
            .eval(&|n| self.lookup(n))
            .unwrap_or(false);
        for v in if holds { &[1, 0][..] } else { &[0][..] } {
            self.values.insert(g.clone(), *v);
            self.guards(i + 1);
            if self.stop {
                break;
            }
        }
    }

    fn check(&mut self) {
        self.checked += 1;
        if self.formula.eval(&|n| self.lookup(n)) != Some(true) {
            return;
        }
        let model: BTreeMap<String, i64> = self
            .users
            .iter()
            .filter(|u| u.3)
            .map(|(n, _, _, _)| (n.clone(), self.values[n]))
            .collect();
        match &self.p.objective {
            None => {
                self.best = Some((0, model));
                self.stop = true;
            }
            Some((dir, t)) => {
                let Some(v) = t.eval(&|n| self.lookup(n)) else { return };
                let better = match (&self.best, dir) {
                    (None, _) => true,
                    (Some((b, _)), Direction::Maximize) => v > *b,
                    (Some((b, _)), Direction::Minimize) => v < *b,
                };
                if better {
                    self.best = Some((v, model));
                }
            }
        }
    }
}

/// Enumerate all assignments of `p`. With an objective the optimum is
/// returned (ties keep the first assignment found); otherwise the first
/// satisfying assignment.
pub fn solve_bruteforce(p: &DecomposedProblem, max_space: u128) -> Result<SolveResult, BruteForceError> {
    let mut users = Vec::new();
    let mut witnesses = Vec::new();
    let mut space: u128 = 1;
    let mut occurrences: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
    for (m, mc) in p.memberships.iter().enumerate() {
        for (col, x) in mc.witness.iter().enumerate() {
            occurrences.entry(x.clone()).or_default().push((m, col));
        }
    }
    let guarded: Vec<(String, usize)> = p
        .memberships
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.guard.clone().map(|g| (g, i)))
        .collect();
    space = space.saturating_mul(1u128 << guarded.len().min(127));
    for v in &p.vars {
        let is_guard = guarded.iter().any(|(g, _)| *g == v.name);
        let free = match v.kind {
            VarKind::Witness => !occurrences.contains_key(&v.name),
            VarKind::Guard | VarKind::Indicator => !is_guard,
            VarKind::User => true,
            VarKind::Aux => false,
        };
        if free {
            let (lo, hi) = match (v.lb, v.ub, v.kind.is_boolean()) {
                (Some(lo), Some(hi), _) => (lo, hi),
                (_, _, true) => (0, 1),
                _ => return Err(BruteForceError::Unbounded(v.name.clone())),
            };
            let n = (hi as i128 - lo as i128 + 1).max(0) as u128;
            space = space.saturating_mul(n);
            users.push((v.name.clone(), lo, hi, v.kind == VarKind::User));
        } else if v.kind == VarKind::Witness {
            let n: usize = occurrences[&v.name].iter().map(|&(m, _)| p.memberships[m].table.len()).sum();
            space = space.saturating_mul(n.max(1) as u128);
            witnesses.push(v.name.clone());
        }
        if space > max_space {
            return Err(BruteForceError::TooLarge(space));
        }
    }
    let mut e = Enumerator {
        p,
        formula: p.expand(),
        users,
        witnesses,
        occurrences,
        guarded,
        values: HashMap::new(),
        best: None,
        checked: 0,
        stop: false,
    };
    e.users(0)?;
    let optimizing = p.objective.is_some();
    let status = match (optimizing, e.best.is_some()) {
        (false, true) => Status::Sat,
        (false, false) => Status::Unsat,
        (true, true) => Status::Optimal,
        (true, false) => Status::Infeasible,
    };
    let (objective, model) = match e.best {
        Some((v, m)) => (optimizing.then_some(v), Some(m)),
        None => (None, None),
    };
    Ok(SolveResult {
        status,
        model,
        objective,
        stats: Stats {
            nodes: e.checked,
            ..Stats::default()
        },
        trace: Vec::new(),
    })
}
