//! The stateful arithmetic engine used by the search.
//!
//! Constraints come in three groups: the static reified problem, dynamic
//! unguarded constraints added during search (removed again on backtrack),
//! and one objective cut that only ever tightens. Propagation is driven by
//! the bounds trail: every bound change after the last processed trail
//! position wakes the constraints watching that variable.

use std::collections::VecDeque;

use super::bounds::{BoundsStore, Mark, VarId, VarRegistry};
use super::linear::{GuardedLinearConstraint, LinearConstraint};
use super::propagate::{is_violated, propagate_constraint};
use super::simplex::{solve_loaded, LpResult, Simplex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CRef {
    Static(usize),
    Dynamic(usize),
    Cut,
}

/// A propagation conflict; `var` is the variable whose interval emptied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiaConflict {
    pub var: Option<VarId>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LiaStats {
    pub propagations: u64,
    pub lp_calls: u64,
    pub pivots: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineMark {
    bounds: Mark,
    dynamic: usize,
}

/// Constraint visits allowed per call to [`LiaEngine::propagate`], on top
/// of a per-constraint allowance.
const BASE_BUDGET: usize = 20_000;

pub struct LiaEngine {
    pub registry: VarRegistry,
    pub bounds: BoundsStore,
    statics: Vec<GuardedLinearConstraint>,
    dynamic: Vec<LinearConstraint>,
    cut: Option<LinearConstraint>,
    watches: Vec<Vec<CRef>>,
    queue: VecDeque<CRef>,
    cursor: usize,
    simplex: Simplex,
    trivially_false: bool,
    pub stats: LiaStats,
}

impl LiaEngine {
    pub fn new(registry: VarRegistry, bounds: BoundsStore, constraints: Vec<GuardedLinearConstraint>) -> Self {
        let n = bounds.len();
        let mut watches = vec![Vec::new(); n];
        let mut trivially_false = false;
        for (i, c) in constraints.iter().enumerate() {
            if c.guard.is_none() && c.lin.constant_truth() == Some(false) {
                trivially_false = true;
            }
            for &(v, _) in &c.lin.terms {
                watches[v.index()].push(CRef::Static(i));
            }
            if let Some(g) = c.guard {
                watches[g.index()].push(CRef::Static(i));
            }
        }
        let queue = (0..constraints.len()).map(CRef::Static).collect();
        LiaEngine {
            registry,
            simplex: Simplex::new(n),
            bounds,
            statics: constraints,
            dynamic: Vec::new(),
            cut: None,
            watches,
            queue,
            cursor: 0,
            trivially_false,
            stats: LiaStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn constraints(&self) -> &[GuardedLinearConstraint] {
        &self.statics
    }

    pub fn mark(&self) -> EngineMark {
        EngineMark {
            bounds: self.bounds.mark(),
            dynamic: self.dynamic.len(),
        }
    }

    pub fn backtrack(&mut self, mark: EngineMark) {
        self.bounds.backtrack(mark.bounds);
        self.dynamic.truncate(mark.dynamic);
        self.cursor = self.cursor.min(self.bounds.trail_len());
        self.queue.clear();
        if self.cut.is_some() {
            self.queue.push_back(CRef::Cut);
        }
    }

    /// Add an unconditional constraint that lives until the next backtrack
    /// past the current mark.
    pub fn add_dynamic(&mut self, lin: LinearConstraint) {
        let i = self.dynamic.len();
        for &(v, _) in &lin.terms {
            self.watches[v.index()].push(CRef::Dynamic(i));
        }
        self.dynamic.push(lin);
        self.queue.push_back(CRef::Dynamic(i));
    }

    /// Replace the objective cut. The cut survives backtracking.
    pub fn set_cut(&mut self, lin: LinearConstraint) {
        if self.cut.is_none() {
            for &(v, _) in &lin.terms {
                self.watches[v.index()].push(CRef::Cut);
            }
        }
        self.cut = Some(lin);
        self.queue.push_back(CRef::Cut);
    }

    fn guard_state(&self, g: Option<VarId>) -> Option<bool> {
        match g {
            None => Some(true),
            Some(g) if self.bounds.lb(g).is_some_and(|l| l >= 1) => Some(true),
            Some(g) if self.bounds.ub(g).is_some_and(|u| u <= 0) => Some(false),
            Some(_) => None,
        }
    }

    fn wake_changed(&mut self) {
        let end = self.bounds.trail_len();
        if self.cursor >= end {
            return;
        }
        let changed: Vec<VarId> = self.bounds.changed_since(self.cursor).collect();
        self.cursor = end;
        for v in changed {
            for &c in &self.watches[v.index()] {
                if let CRef::Dynamic(i) = c {
                    if i >= self.dynamic.len() {
                        continue;
                    }
                }
                self.queue.push_back(c);
            }
        }
    }

    fn visit(&mut self, c: CRef) -> Result<usize, LiaConflict> {
        let conflict = |e: super::bounds::BoundConflict| LiaConflict {
            var: (e.var.0 != u32::MAX).then_some(e.var),
        };
        match c {
            CRef::Static(i) => {
                let guard = self.statics[i].guard;
                match self.guard_state(guard) {
                    Some(true) => propagate_constraint(&self.statics[i].lin, &mut self.bounds).map_err(conflict),
                    Some(false) => Ok(0),
                    None => {
                        if is_violated(&self.statics[i].lin, &self.bounds) {
                            let g = guard.expect("guarded");
                            self.bounds.set_ub(g, 0).map_err(conflict)?;
                            Ok(1)
                        } else {
                            Ok(0)
                        }
                    }
                }
            }
            CRef::Dynamic(i) => match self.dynamic.get(i) {
                Some(lin) => propagate_constraint(lin, &mut self.bounds).map_err(conflict),
                None => Ok(0),
            },
            CRef::Cut => match &self.cut {
                Some(lin) => propagate_constraint(lin, &mut self.bounds).map_err(conflict),
                None => Ok(0),
            },
        }
    }

    /// Propagate until no queued constraint changes a bound, or until the
    /// visit budget runs out. Returns whether a fixpoint was reached.
    pub fn propagate(&mut self) -> Result<bool, LiaConflict> {
        if self.trivially_false {
            return Err(LiaConflict { var: None });
        }
        let mut budget = BASE_BUDGET + 4 * (self.statics.len() + self.dynamic.len());
        self.wake_changed();
        while let Some(c) = self.queue.pop_front() {
            if budget == 0 {
                self.queue.push_front(c);
                return Ok(false);
            }
            budget -= 1;
            match self.visit(c) {
                Ok(n) => self.stats.propagations += n as u64,
                Err(e) => {
                    self.queue.clear();
                    self.cursor = self.bounds.trail_len();
                    return Err(e);
                }
            }
            self.wake_changed();
        }
        Ok(true)
    }

    /// Constraints currently enforced: statics whose guard is fixed to 1,
    /// dynamic constraints and the cut.
    pub fn active(&self) -> impl Iterator<Item = &LinearConstraint> + '_ {
        self.statics
            .iter()
            .filter(|c| self.guard_state(c.guard) == Some(true))
            .map(|c| &c.lin)
            .chain(self.dynamic.iter())
            .chain(self.cut.iter())
    }

    /// Solve the relaxation under the current bounds, warm-starting from the
    /// previous call.
    pub fn lp_check(&mut self, objective: Option<&[(VarId, i64)]>) -> LpResult {
        self.stats.lp_calls += 1;
        let before = self.simplex.pivots;
        let active: Vec<LinearConstraint> = self.active().cloned().collect();
        let r = solve_loaded(&mut self.simplex, &self.bounds, active.iter(), objective);
        self.stats.pivots += self.simplex.pivots - before;
        r
    }

    /// Whether no enforced constraint mentions `v`.
    pub fn is_unconstrained(&self, v: VarId) -> bool {
        let mentions = |lin: &LinearConstraint| lin.terms.iter().any(|&(x, _)| x == v);
        self.watches[v.index()].iter().all(|&c| match c {
            CRef::Static(i) => self.guard_state(self.statics[i].guard) == Some(false) || !mentions(&self.statics[i].lin),
            CRef::Dynamic(i) => self.dynamic.get(i).is_none_or(|lin| !mentions(lin)),
            CRef::Cut => false,
        })
    }

    /// Whether every active constraint holds when each variable takes the
    /// given integer value.
    pub fn satisfied_by(&self, value: &dyn Fn(VarId) -> i64) -> bool {
        self.active().all(|c| c.holds(value))
    }
}
