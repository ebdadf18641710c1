//! Theory procedure for conditional membership constraints.
//!
//! For every constraint `g ⇒ (x₁, …, x_k) ∈ T` the module keeps the set of
//! candidate rows whose cells could still equal the witness, and the truth
//! of the equality atoms `x_i = y_{j,i}` decided so far. Both are trailed.
//! Propagation tightens the witness to the hull of the candidate cells,
//! deduces equalities when a single candidate is left, and reports a
//! conflict when none is.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::ast::CellLiteral;
use crate::decompose::{DecomposedProblem, MembershipTable};
use crate::lia::{BoundsStore, LiaEngine, LinearConstraint, VarId, VarRegistry};

/// A table cell over engine variables: a constant or `var + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellRef {
    Const(i64),
    Var(VarId, i64),
}

impl CellRef {
    pub fn interval(self, bounds: &BoundsStore) -> (Option<i64>, Option<i64>) {
        match self {
            CellRef::Const(c) => (Some(c), Some(c)),
            CellRef::Var(v, off) => (
                bounds.lb(v).and_then(|l| l.checked_add(off)),
                bounds.ub(v).and_then(|u| u.checked_add(off)),
            ),
        }
    }

    pub fn value(self, model: &dyn Fn(VarId) -> i64) -> i128 {
        match self {
            CellRef::Const(c) => c as i128,
            CellRef::Var(v, off) => model(v) as i128 + off as i128,
        }
    }
}

/// Whether the intervals `[a₀, a₁]` and `[b₀, b₁]` share a point.
fn intersects(a: (Option<i64>, Option<i64>), b: (Option<i64>, Option<i64>)) -> bool {
    let below = matches!((a.1, b.0), (Some(u), Some(l)) if u < l);
    let above = matches!((a.0, b.1), (Some(l), Some(u)) if l > u);
    !below && !above
}

/// The candidate criterion: every column's witness interval intersects the
/// cell interval.
pub fn row_matches(witness: &[VarId], row: &[CellRef], bounds: &BoundsStore) -> bool {
    witness
        .iter()
        .zip(row)
        .all(|(&x, &cell)| intersects((bounds.lb(x), bounds.ub(x)), cell.interval(bounds)))
}

/// Some row has all its column equalities true under `truth(row, col)`.
pub fn check_consistent(rows: usize, cols: usize, truth: impl Fn(usize, usize) -> bool) -> bool {
    (0..rows).any(|j| (0..cols).all(|i| truth(j, i)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId {
    pub constraint: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Less,
    Equal,
    Greater,
}

/// A data-driven branching suggestion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MembershipBranch {
    /// `var < at` or `var ≥ at`.
    Split { var: VarId, at: i64 },
    /// `x < cell`, `x = cell` or `x > cell` for the atom's witness `x`.
    Equality { atom: AtomId },
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("membership constraint {constraint} has no candidate row")]
pub struct MembershipConflict {
    pub constraint: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MembershipEvent {
    UniqueCandidate { constraint: usize, row: usize },
    Disabled { constraint: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PropagationOutcome {
    /// Bounds tightened, guards disabled or equalities deduced.
    pub changed: bool,
    pub events: Vec<MembershipEvent>,
}

/// Rows in a reversible sparse set: the first `size` entries of `dense`.
/// The arrays are only allocated on the first removal; before that the set
/// is all of `0..size`.
#[derive(Clone, Debug)]
struct Candidates {
    dense: Vec<u32>,
    pos: Vec<u32>,
    size: usize,
}

impl Candidates {
    fn full(n: usize) -> Self {
        Candidates {
            dense: Vec::new(),
            pos: Vec::new(),
            size: n,
        }
    }

    fn get(&self, i: usize) -> u32 {
        if self.dense.is_empty() {
            i as u32
        } else {
            self.dense[i]
        }
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.size).map(|i| self.get(i))
    }

    fn remove(&mut self, row: usize) {
        if self.dense.is_empty() {
            self.dense = (0..self.size as u32).collect();
            self.pos = self.dense.clone();
        }
        let p = self.pos[row] as usize;
        debug_assert!(p < self.size);
        let last = self.size - 1;
        let other = self.dense[last];
        self.dense.swap(p, last);
        self.pos[other as usize] = p as u32;
        self.pos[row] = last as u32;
        self.size = last;
    }

    fn contains(&self, row: usize) -> bool {
        if self.pos.is_empty() {
            row < self.size
        } else {
            (self.pos[row] as usize) < self.size
        }
    }
}

/// Facts about a whole table, shared by every constraint over it.
#[derive(Debug)]
struct TableIndex {
    /// Per column, the range of its cells when they are all constants.
    hull: Vec<Option<(i64, i64)>>,
    /// All rows, when every cell is a constant.
    constant_rows: Option<HashSet<Vec<i64>>>,
    cell_vars: Vec<VarId>,
}

impl TableIndex {
    fn new(rows: &[Vec<CellRef>], arity: usize) -> Self {
        let hull = (0..arity)
            .map(|i| {
                rows.iter().try_fold((i64::MAX, i64::MIN), |(lo, hi), row| match row[i] {
                    CellRef::Const(k) => Some((lo.min(k), hi.max(k))),
                    CellRef::Var(..) => None,
                })
            })
            .collect();
        let constant_rows = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        CellRef::Const(k) => Some(*k),
                        CellRef::Var(..) => None,
                    })
                    .collect::<Option<Vec<i64>>>()
            })
            .collect::<Option<HashSet<Vec<i64>>>>();
        let mut cell_vars: Vec<VarId> = rows
            .iter()
            .flatten()
            .filter_map(|c| match c {
                CellRef::Var(v, _) => Some(*v),
                CellRef::Const(_) => None,
            })
            .collect();
        cell_vars.sort_unstable();
        cell_vars.dedup();
        TableIndex {
            hull,
            constant_rows,
            cell_vars,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ActiveMembership {
    pub witness: Vec<VarId>,
    pub guard: Option<VarId>,
    pub table: Arc<MembershipTable>,
    pub rows: Arc<Vec<Vec<CellRef>>>,
    candidates: Candidates,
    atoms: HashMap<(u32, u32), bool>,
    index: Arc<TableIndex>,
    /// Guard, witness and cell variables.
    watched: Arc<Vec<VarId>>,
    /// Bounds of `watched` when the constraint was last propagated.
    seen: Option<Vec<(Option<i64>, Option<i64>)>>,
}

impl ActiveMembership {
    pub fn arity(&self) -> usize {
        self.witness.len()
    }

    /// Candidate rows in ascending order.
    pub fn candidates(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.candidates.iter().map(|r| r as usize)
            .collect();
        c.sort_unstable();
        c
    }

    /// Candidate rows in internal order.
    pub fn candidate_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates.iter().map(|r| r as usize)
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates.size
    }

    pub fn atom_truth(&self, row: usize, col: usize) -> Option<bool> {
        self.atoms.get(&(row as u32, col as u32)).copied()
    }

    /// Recorded truth, or the truth forced by the current bounds.
    pub fn determined(&self, row: usize, col: usize, bounds: &BoundsStore) -> Option<bool> {
        if let Some(t) = self.atom_truth(row, col) {
            return Some(t);
        }
        let x = self.witness[col];
        let xi = (bounds.lb(x), bounds.ub(x));
        let ci = self.rows[row][col].interval(bounds);
        if !intersects(xi, ci) {
            return Some(false);
        }
        match (xi, ci) {
            ((Some(a), Some(b)), (Some(c), Some(d))) if a == b && c == d && a == c => Some(true),
            _ => None,
        }
    }

    /// Column hulls, when every row is still a candidate and every cell is
    /// a constant.
    fn full_constant_hull(&self) -> Option<Vec<(i64, i64)>> {
        if self.candidates.size != self.rows.len() || !self.atoms.is_empty() {
            return None;
        }
        self.index.hull.iter().copied().collect()
    }

    fn snapshot(&self, bounds: &BoundsStore) -> Vec<(Option<i64>, Option<i64>)> {
        self.watched.iter().map(|&v| (bounds.lb(v), bounds.ub(v))).collect()
    }

    fn unchanged(&self, bounds: &BoundsStore) -> bool {
        self.seen.as_ref().is_some_and(|seen| {
            seen.iter()
                .zip(self.watched.iter())
                .all(|(&(l, u), &v)| bounds.lb(v) == l && bounds.ub(v) == u)
        })
    }

    fn matches(&self, row: usize, bounds: &BoundsStore) -> bool {
        row_matches(&self.witness, &self.rows[row], bounds)
            && (0..self.arity()).all(|i| self.atom_truth(row, i) != Some(false))
    }

    /// Whether the integer assignment `model` puts the witness in the table.
    pub fn holds(&self, model: &dyn Fn(VarId) -> i64) -> bool {
        if let Some(set) = &self.index.constant_rows {
            let key: Vec<i64> = self.witness.iter().map(|&x| model(x)).collect();
            return set.contains(&key);
        }
        self.rows.iter().any(|row| {
            self.witness
                .iter()
                .zip(row)
                .all(|(&x, &cell)| model(x) as i128 == cell.value(model))
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum TrailItem {
    Removed { constraint: u32, row: u32 },
    Atom { constraint: u32, row: u32, col: u32 },
}

type ResolvedTable = (Arc<Vec<Vec<CellRef>>>, Arc<TableIndex>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MembershipMark(usize);

#[derive(Clone, Debug, Default)]
pub struct Membership {
    pub constraints: Vec<ActiveMembership>,
    trail: Vec<TrailItem>,
}

impl Membership {
    /// Resolve the memberships of `p` against the engine's variables. Rows
    /// of a table shared by several constraints are resolved once.
    pub fn new(p: &DecomposedProblem, reg: &VarRegistry) -> Self {
        let mut cache: HashMap<*const MembershipTable, ResolvedTable> = HashMap::new();
        let id = |n: &str| reg.get(n).unwrap_or_else(|| panic!("unregistered variable `{n}`"));
        let constraints = p
            .memberships
            .iter()
            .map(|m| {
                let (rows, index) = cache
                    .entry(Arc::as_ptr(&m.table))
                    .or_insert_with(|| {
                        let rows: Vec<Vec<CellRef>> = m
                            .table
                            .rows
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .map(|c| match c {
                                        CellLiteral::Const(k) => CellRef::Const(*k),
                                        CellLiteral::Var(v) => CellRef::Var(id(v), 0),
                                        CellLiteral::Offset(v, k) => CellRef::Var(id(v), *k),
                                    })
                                    .collect()
                            })
                            .collect();
                        let index = TableIndex::new(&rows, m.table.arity());
                        (Arc::new(rows), Arc::new(index))
                    })
                    .clone();
                let witness: Vec<VarId> = m.witness.iter().map(|x| id(x)).collect();
                let guard = m.guard.as_deref().map(id);
                let watched = guard.iter().chain(&witness).chain(&index.cell_vars).copied().collect();
                ActiveMembership {
                    witness,
                    guard,
                    table: m.table.clone(),
                    candidates: Candidates::full(rows.len()),
                    rows,
                    atoms: HashMap::new(),
                    index,
                    watched: Arc::new(watched),
                    seen: None,
                }
            })
            .collect();
        Membership {
            constraints,
            trail: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn mark(&self) -> MembershipMark {
        MembershipMark(self.trail.len())
    }

    pub fn backtrack(&mut self, mark: MembershipMark) {
        for m in &mut self.constraints {
            m.seen = None;
        }
        while self.trail.len() > mark.0 {
            match self.trail.pop().expect("nonempty trail") {
                TrailItem::Removed { constraint, row } => {
                    // Removal swapped the row just past the end; undo in order.
                    let cands = &mut self.constraints[constraint as usize].candidates;
                    cands.size += 1;
                    debug_assert_eq!(cands.get(cands.size - 1), row);
                }
                TrailItem::Atom { constraint, row, col } => {
                    self.constraints[constraint as usize].atoms.remove(&(row, col));
                }
            }
        }
    }

    fn remove_candidate(&mut self, c: usize, row: usize) {
        self.constraints[c].candidates.remove(row);
        self.trail.push(TrailItem::Removed {
            constraint: c as u32,
            row: row as u32,
        });
    }

    /// Active means the guard is fixed to 1 or absent; `None` is unknown.
    pub fn is_active(&self, c: usize, bounds: &BoundsStore) -> Option<bool> {
        match self.constraints[c].guard {
            None => Some(true),
            Some(g) if bounds.lb(g).is_some_and(|l| l >= 1) => Some(true),
            Some(g) if bounds.ub(g).is_some_and(|u| u <= 0) => Some(false),
            Some(_) => None,
        }
    }

    /// Record the truth of an equality atom and drop its row from the
    /// candidates when it is false. Returns `false` on a contradiction
    /// with an earlier record.
    pub fn assert_equality(&mut self, atom: AtomId, truth: bool) -> bool {
        let m = &mut self.constraints[atom.constraint];
        let key = (atom.row as u32, atom.col as u32);
        if let Some(&t) = m.atoms.get(&key) {
            return t == truth;
        }
        m.atoms.insert(key, truth);
        m.seen = None;
        self.trail.push(TrailItem::Atom {
            constraint: atom.constraint as u32,
            row: atom.row as u32,
            col: atom.col as u32,
        });
        if !truth && self.constraints[atom.constraint].candidates.contains(atom.row) {
            self.remove_candidate(atom.constraint, atom.row);
        }
        true
    }

    /// `x_i − cell ⋈ 0` as linear constraints.
    pub fn relation_constraints(&self, atom: AtomId, rel: Relation) -> Vec<LinearConstraint> {
        let m = &self.constraints[atom.constraint];
        let x = m.witness[atom.col];
        let (terms, off): (Vec<(VarId, i64)>, i64) = match m.rows[atom.row][atom.col] {
            CellRef::Const(c) => (vec![(x, 1)], c),
            CellRef::Var(v, off) => (vec![(x, 1), (v, -1)], off),
        };
        let neg: Vec<(VarId, i64)> = terms.iter().map(|&(v, a)| (v, -a)).collect();
        let mk = |t: &[(VarId, i64)], b: i64| LinearConstraint::new(t.iter().copied(), b).expect("unit coefficients");
        match rel {
            Relation::Equal => vec![mk(&terms, off), mk(&neg, -off)],
            Relation::Less => vec![mk(&terms, off.saturating_sub(1))],
            Relation::Greater => vec![mk(&neg, (-off).saturating_sub(1))],
        }
    }

    /// Apply one side of an equality split: record the atom and add the
    /// corresponding linear constraints to `lia`.
    pub fn apply_relation(&mut self, atom: AtomId, rel: Relation, lia: &mut LiaEngine) -> bool {
        let ok = self.assert_equality(atom, rel == Relation::Equal);
        for c in self.relation_constraints(atom, rel) {
            lia.add_dynamic(c);
        }
        ok
    }

    /// Filter candidates of every constraint, then apply the interval
    /// rules and unique-candidate deduction to active constraints.
    pub fn propagate(&mut self, lia: &mut LiaEngine) -> Result<PropagationOutcome, MembershipConflict> {
        let mut out = PropagationOutcome::default();
        for c in 0..self.constraints.len() {
            let active = self.is_active(c, &lia.bounds);
            if active == Some(false) || self.constraints[c].unchanged(&lia.bounds) {
                continue;
            }
            let changed = self.propagate_one(c, active, lia, &mut out)?;
            out.changed |= changed;
            if !changed {
                self.constraints[c].seen = Some(self.constraints[c].snapshot(&lia.bounds));
            }
        }
        Ok(out)
    }

    fn propagate_one(
        &mut self,
        c: usize,
        active: Option<bool>,
        lia: &mut LiaEngine,
        out: &mut PropagationOutcome,
    ) -> Result<bool, MembershipConflict> {
        {
            self.filter(c, &lia.bounds);
            let n = self.constraints[c].candidates.size;
            if active.is_none() {
                if n == 0 {
                    let g = self.constraints[c].guard.expect("guarded");
                    lia.bounds
                        .set_ub(g, 0)
                        .map_err(|_| MembershipConflict { constraint: c })?;
                    out.events.push(MembershipEvent::Disabled { constraint: c });
                    return Ok(true);
                }
                return Ok(false);
            }
            if n == 0 {
                return Err(MembershipConflict { constraint: c });
            }
            if n == 1 {
                let row = self.constraints[c].candidates.get(0) as usize;
                let changed = self.unique_candidate(c, row, lia)?;
                if changed {
                    out.events.push(MembershipEvent::UniqueCandidate { constraint: c, row });
                }
                return Ok(changed);
            }
            self.tighten(c, &mut lia.bounds)
        }
    }

    fn filter(&mut self, c: usize, bounds: &BoundsStore) {
        let m = &self.constraints[c];
        if m.full_constant_hull().is_some_and(|hull| {
            m.witness.iter().zip(hull).all(|(&x, (lo, hi))| {
                bounds.lb(x).is_none_or(|l| l <= lo) && bounds.ub(x).is_none_or(|u| u >= hi)
            })
        }) {
            return;
        }
        let dead: Vec<usize> = m
            .candidates
            .iter()
            .map(|r| r as usize)
            .filter(|&r| !m.matches(r, bounds))
            .collect();
        for r in dead {
            self.remove_candidate(c, r);
        }
    }

    /// Each witness column lies within the hull of its candidate cells.
    fn tighten(&mut self, c: usize, bounds: &mut BoundsStore) -> Result<bool, MembershipConflict> {
        let m = &self.constraints[c];
        let mut changed = false;
        let full = m.full_constant_hull();
        for (i, &x) in m.witness.iter().enumerate() {
            let (mut lo, mut hi) = match &full {
                Some(h) => (Some(h[i].0), Some(h[i].1)),
                None => (Some(i64::MAX), Some(i64::MIN)),
            };
            for r in m.candidates.iter().take(if full.is_some() { 0 } else { usize::MAX }) {
                let (l, u) = m.rows[r as usize][i].interval(bounds);
                lo = lo.zip(l).map(|(a, b)| a.min(b));
                hi = hi.zip(u).map(|(a, b)| a.max(b));
            }
            let conflict = |_| MembershipConflict { constraint: c };
            if let Some(l) = lo {
                changed |= bounds.set_lb(x, l).map_err(conflict)?;
            }
            if let Some(u) = hi {
                changed |= bounds.set_ub(x, u).map_err(conflict)?;
            }
        }
        Ok(changed)
    }

    fn unique_candidate(&mut self, c: usize, row: usize, lia: &mut LiaEngine) -> Result<bool, MembershipConflict> {
        let mut changed = false;
        for i in 0..self.constraints[c].arity() {
            let x = self.constraints[c].witness[i];
            match self.constraints[c].rows[row][i] {
                CellRef::Const(k) => {
                    let conflict = |_| MembershipConflict { constraint: c };
                    changed |= lia.bounds.set_lb(x, k).map_err(conflict)?;
                    changed |= lia.bounds.set_ub(x, k).map_err(conflict)?;
                }
                CellRef::Var(..) => {
                    if self.constraints[c].atom_truth(row, i) == Some(true) {
                        continue;
                    }
                    let atom = AtomId { constraint: c, row, col: i };
                    self.apply_relation(atom, Relation::Equal, lia);
                    changed = true;
                }
            }
        }
        Ok(changed)
    }

    /// A branching decision that splits the candidates of constraint `c`.
    pub fn suggest_branch(&self, c: usize, bounds: &BoundsStore) -> Option<MembershipBranch> {
        let m = &self.constraints[c];
        if m.candidates.size <= 1 {
            return None;
        }
        let cands = m.candidates();
        let mut best: Option<(usize, Vec<i64>)> = None;
        for i in 0..m.arity() {
            let mut consts: Vec<i64> = cands
                .iter()
                .filter_map(|&r| match m.rows[r][i] {
                    CellRef::Const(k) => Some(k),
                    CellRef::Var(..) => None,
                })
                .collect();
            consts.sort_unstable();
            consts.dedup();
            if best.as_ref().is_none_or(|(_, b)| consts.len() > b.len()) {
                best = Some((i, consts));
            }
        }
        if let Some((i, consts)) = best.filter(|(_, b)| !b.is_empty()) {
            let median = consts[(consts.len() - 1) / 2];
            let x = m.witness[i];
            let nontrivial = bounds.lb(x).is_none_or(|l| l < median) && bounds.ub(x).is_none_or(|u| median <= u);
            if nontrivial {
                return Some(MembershipBranch::Split { var: x, at: median });
            }
        }
        let undetermined = |symbolic: bool| {
            cands.iter().find_map(|&r| {
                (0..m.arity()).find_map(|i| {
                    let is_var = matches!(m.rows[r][i], CellRef::Var(..));
                    (is_var == symbolic && m.determined(r, i, bounds).is_none()).then_some(AtomId {
                        constraint: c,
                        row: r,
                        col: i,
                    })
                })
            })
        };
        undetermined(true)
            .or_else(|| undetermined(false))
            .map(|atom| MembershipBranch::Equality { atom })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{MembershipConstraint, VarKind};
    use crate::lia::reify;
    use crate::qf::Qf;

    fn c(k: i64) -> CellLiteral {
        CellLiteral::Const(k)
    }

    fn v(n: &str) -> CellLiteral {
        CellLiteral::Var(n.into())
    }

    fn setup(vars: &[(&str, i64, i64)], rows: Vec<Vec<CellLiteral>>, witness: &[&str]) -> (LiaEngine, Membership) {
        let mut p = DecomposedProblem::empty();
        for &(n, l, u) in vars {
            p.add_var(n, VarKind::User, Some(l), Some(u));
        }
        p.memberships.push(MembershipConstraint {
            witness: witness.iter().map(|s| s.to_string()).collect(),
            table: Arc::new(MembershipTable::new("T", rows)),
            guard: None,
        });
        let mut reg = VarRegistry::new();
        let mut b = BoundsStore::new();
        for d in &p.vars {
            reg.add(&d.name, d.kind);
            b.add_var(d.lb, d.ub);
        }
        let cs = reify(&Qf::Bool(true), &mut reg, &mut b).unwrap();
        let mem = Membership::new(&p, &reg);
        (LiaEngine::new(reg, b, cs), mem)
    }

    fn symbolic_row() -> (LiaEngine, Membership) {
        setup(
            &[("x1", -100, 100), ("x2", -100, 100), ("y1", -100, 100), ("y2", -100, 100)],
            vec![vec![c(1), c(2)], vec![c(2), c(3)], vec![c(3), c(2)], vec![v("y1"), v("y2")]],
            &["x1", "x2"],
        )
    }

    fn interval(e: &LiaEngine, v: u32) -> (Option<i64>, Option<i64>) {
        (e.bounds.lb(VarId(v)), e.bounds.ub(VarId(v)))
    }

    #[test]
    fn doubling_table_initial_bounds() {
        let (mut lia, mut mem) = setup(
            &[("x", -100, 100), ("y", -100, 100)],
            vec![vec![c(1), c(2)], vec![c(2), c(4)], vec![c(4), c(8)]],
            &["x", "y"],
        );
        mem.propagate(&mut lia).unwrap();
        assert_eq!(interval(&lia, 0), (Some(1), Some(4)));
        assert_eq!(interval(&lia, 1), (Some(2), Some(8)));
        lia.bounds.set_lb(VarId(0), 2).unwrap();
        lia.bounds.set_ub(VarId(1), 4).unwrap();
        let out = mem.propagate(&mut lia).unwrap();
        assert_eq!(mem.constraints[0].candidates(), vec![1]);
        assert_eq!(out.events, vec![MembershipEvent::UniqueCandidate { constraint: 0, row: 1 }]);
        assert_eq!(interval(&lia, 0), (Some(2), Some(2)));
        assert_eq!(interval(&lia, 1), (Some(4), Some(4)));
    }

    #[test]
    fn match_examples() {
        let mut b = BoundsStore::new();
        let x = b.add_var(Some(0), Some(1));
        let y = b.add_var(None, None);
        assert!(!row_matches(&[x], &[CellRef::Const(5)], &b));
        assert!(row_matches(&[x], &[CellRef::Var(y, 3)], &b));
    }

    #[test]
    fn symbolic_row_root_splits_on_the_median() {
        let (mut lia, mut mem) = symbolic_row();
        mem.propagate(&mut lia).unwrap();
        assert_eq!(
            mem.suggest_branch(0, &lia.bounds),
            Some(MembershipBranch::Split { var: VarId(0), at: 2 })
        );
        lia.bounds.set_lb(VarId(0), 2).unwrap();
        mem.propagate(&mut lia).unwrap();
        assert_eq!(mem.constraints[0].candidates(), vec![1, 2, 3]);
        let atom = AtomId { constraint: 0, row: 3, col: 0 };
        assert_eq!(mem.suggest_branch(0, &lia.bounds), Some(MembershipBranch::Equality { atom }));
        let before = mem.mark();
        let lia_before = lia.mark();
        assert!(mem.assert_equality(atom, false));
        mem.propagate(&mut lia).unwrap();
        assert_eq!(mem.constraints[0].candidates(), vec![1, 2]);
        assert_eq!(interval(&lia, 0), (Some(2), Some(3)));
        assert_eq!(interval(&lia, 1), (Some(2), Some(3)));
        mem.backtrack(before);
        lia.backtrack(lia_before);
        assert!(mem.assert_equality(atom, true));
        mem.propagate(&mut lia).unwrap();
        assert_eq!(mem.constraints[0].candidates(), vec![1, 2, 3]);
    }

    #[test]
    fn all_rows_false_is_a_conflict() {
        let (mut lia, mut mem) = symbolic_row();
        for row in 0..4 {
            mem.assert_equality(AtomId { constraint: 0, row, col: 1 }, false);
        }
        assert_eq!(mem.propagate(&mut lia), Err(MembershipConflict { constraint: 0 }));
    }

    #[test]
    fn backtracking_restores_candidates() {
        let (mut lia, mut mem) = symbolic_row();
        let m0 = mem.mark();
        lia.bounds.set_ub(VarId(0), 1).unwrap();
        lia.bounds.set_lb(VarId(2), 50).unwrap();
        mem.propagate(&mut lia).unwrap();
        assert_eq!(mem.constraints[0].num_candidates(), 1);
        mem.backtrack(m0);
        assert_eq!(mem.constraints[0].candidates(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn consistency_is_some_row_all_true() {
        assert!(check_consistent(2, 2, |j, _| j == 0));
        assert!(!check_consistent(2, 2, |j, i| j != i));
        assert!(!check_consistent(0, 2, |_, _| true));
    }
}
