//! Variable registry and trailed integer bounds.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::decompose::VarKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VarRegistry {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    index: HashMap<String, VarId>,
}

impl VarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a variable, or return the existing id for the name.
    pub fn add(&mut self, name: &str, kind: VarKind) -> VarId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = VarId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn kind(&self, v: VarId) -> VarKind {
        self.kinds[v.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.names.len() as u32).map(VarId)
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("bounds of {var} became empty")]
pub struct BoundConflict {
    pub var: VarId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct TrailEntry {
    var: VarId,
    old_lb: Option<i64>,
    old_ub: Option<i64>,
}

/// Position in the trail to return to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mark(usize);

impl Mark {
    pub fn position(self) -> usize {
        self.0
    }
}

/// Per-variable bounds, `None` standing for an infinite side.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundsStore {
    lb: Vec<Option<i64>>,
    ub: Vec<Option<i64>>,
    trail: Vec<TrailEntry>,
}

impl BoundsStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lb: Option<i64>, ub: Option<i64>) -> VarId {
        self.lb.push(lb);
        self.ub.push(ub);
        VarId(self.lb.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.lb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lb.is_empty()
    }

    pub fn lb(&self, v: VarId) -> Option<i64> {
        self.lb[v.index()]
    }

    pub fn ub(&self, v: VarId) -> Option<i64> {
        self.ub[v.index()]
    }

    pub fn fixed_value(&self, v: VarId) -> Option<i64> {
        match (self.lb(v), self.ub(v)) {
            (Some(l), Some(u)) if l == u => Some(l),
            _ => None,
        }
    }

    /// Raise the lower bound. Returns whether it changed; on conflict the
    /// store is left untouched.
    pub fn set_lb(&mut self, v: VarId, value: i64) -> Result<bool, BoundConflict> {
        if self.lb(v).is_some_and(|l| l >= value) {
            return Ok(false);
        }
        if self.ub(v).is_some_and(|u| u < value) {
            return Err(BoundConflict { var: v });
        }
        self.record(v);
        self.lb[v.index()] = Some(value);
        Ok(true)
    }

    /// Lower the upper bound, symmetric to [`BoundsStore::set_lb`].
    pub fn set_ub(&mut self, v: VarId, value: i64) -> Result<bool, BoundConflict> {
        if self.ub(v).is_some_and(|u| u <= value) {
            return Ok(false);
        }
        if self.lb(v).is_some_and(|l| l > value) {
            return Err(BoundConflict { var: v });
        }
        self.record(v);
        self.ub[v.index()] = Some(value);
        Ok(true)
    }

    fn record(&mut self, v: VarId) {
        self.trail.push(TrailEntry {
            var: v,
            old_lb: self.lb(v),
            old_ub: self.ub(v),
        });
    }

    pub fn mark(&self) -> Mark {
        Mark(self.trail.len())
    }

    pub fn backtrack(&mut self, mark: Mark) {
        while self.trail.len() > mark.0 {
            let e = self.trail.pop().expect("nonempty trail");
            self.lb[e.var.index()] = e.old_lb;
            self.ub[e.var.index()] = e.old_ub;
        }
    }

    pub fn trail_len(&self) -> usize {
        self.trail.len()
    }

    /// Each change at trail positions `from..` with the bounds it produced.
    pub fn history_since(&self, from: usize) -> Vec<(VarId, Option<i64>, Option<i64>)> {
        let from = from.min(self.trail.len());
        let mut next: Vec<(VarId, Option<i64>, Option<i64>)> = Vec::new();
        let mut latest: std::collections::HashMap<VarId, (Option<i64>, Option<i64>)> = std::collections::HashMap::new();
        for e in self.trail[from..].iter().rev() {
            let after = latest.get(&e.var).copied().unwrap_or((self.lb(e.var), self.ub(e.var)));
            next.push((e.var, after.0, after.1));
            latest.insert(e.var, (e.old_lb, e.old_ub));
        }
        next.reverse();
        next
    }

    /// Variables changed at trail positions `from..`.
    pub fn changed_since(&self, from: usize) -> impl Iterator<Item = VarId> + '_ {
        self.trail[from.min(self.trail.len())..].iter().map(|e| e.var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tightening_and_conflict() {
        let mut s = BoundsStore::new();
        let x = s.add_var(Some(0), Some(10));
        assert_eq!(s.set_lb(x, 3), Ok(true));
        assert_eq!(s.set_lb(x, 2), Ok(false));
        assert_eq!(s.set_ub(x, 2), Err(BoundConflict { var: x }));
        assert_eq!((s.lb(x), s.ub(x)), (Some(3), Some(10)));
    }

    #[test]
    fn backtrack_restores_exactly() {
        let mut s = BoundsStore::new();
        let x = s.add_var(None, Some(10));
        let before = s.clone();
        let m = s.mark();
        s.set_lb(x, -4).unwrap();
        s.set_ub(x, 5).unwrap();
        s.set_lb(x, 0).unwrap();
        s.backtrack(m);
        assert_eq!(s, before);
    }

    #[test]
    fn registry_deduplicates_names() {
        let mut r = VarRegistry::new();
        let a = r.add("a", VarKind::User);
        assert_eq!(r.add("a", VarKind::User), a);
        assert_eq!(r.get("a"), Some(a));
        assert_eq!(r.name(a), "a");
    }
}
