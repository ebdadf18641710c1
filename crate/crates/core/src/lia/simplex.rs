//! Exact rational simplex over bounded variables.
//!
//! Each distinct linear form gets a slack variable defined by a tableau row;
//! constraints become bounds on slacks. Feasibility uses the general simplex
//! with Bland's rule, and optimization a primal phase with bound flips.
//! The tableau persists between calls so successive checks warm-start.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::bounds::{BoundsStore, VarId};
use super::linear::LinearConstraint;

pub type Rat = BigRational;

pub fn rat(x: i64) -> Rat {
    Rat::from_integer(BigInt::from(x))
}

#[derive(Clone, Debug)]
struct Row {
    basic: usize,
    /// `basic = Σ coeff·x` over nonbasic `x`.
    coeffs: BTreeMap<usize, Rat>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Optimum {
    Bounded(Rat),
    Unbounded,
    /// The iteration cap was reached.
    Unknown,
}

#[derive(Clone, Debug, Default)]
pub struct Simplex {
    structural: usize,
    lb: Vec<Option<Rat>>,
    ub: Vec<Option<Rat>>,
    val: Vec<Rat>,
    row_of: Vec<Option<usize>>,
    rows: Vec<Row>,
    forms: HashMap<Vec<(usize, i64)>, usize>,
    /// Nonbasic values moved since basic values were last recomputed.
    stale: bool,
    pub pivots: u64,
}

const MAX_OPT_ITERATIONS: usize = 200_000;

impl Simplex {
    pub fn new(structural: usize) -> Self {
        let mut s = Simplex::default();
        s.ensure_structural(structural);
        s
    }

    /// Grow the number of structural variables.
    pub fn ensure_structural(&mut self, n: usize) {
        if n > self.structural {
            assert!(self.lb.len() == self.structural, "structural variables precede slacks");
        }
        while self.structural < n {
            self.lb.push(None);
            self.ub.push(None);
            self.val.push(Rat::zero());
            self.row_of.push(None);
            self.structural += 1;
        }
    }

    pub fn structural(&self) -> usize {
        self.structural
    }

    pub fn value(&self, var: usize) -> &Rat {
        &self.val[var]
    }

    pub fn values(&self) -> &[Rat] {
        &self.val[..self.structural]
    }

    /// The slack variable standing for `form`, created on first use.
    /// Only structural variables may appear in `form`.
    pub fn slack_for(&mut self, form: &[(usize, i64)]) -> usize {
        self.refresh();
        if let Some(&s) = self.forms.get(form) {
            return s;
        }
        if self.structural < self.lb.len() {
            // Slacks exist already; structural count is frozen.
            assert!(form.iter().all(|&(v, _)| v < self.structural));
        }
        let s = self.lb.len();
        let mut coeffs: BTreeMap<usize, Rat> = BTreeMap::new();
        let mut value = Rat::zero();
        for &(v, a) in form {
            let a = rat(a);
            value += &a * &self.val[v];
            match self.row_of[v] {
                None => add_to(&mut coeffs, v, a),
                Some(r) => {
                    for (k, c) in &self.rows[r].coeffs {
                        add_to(&mut coeffs, *k, &a * c);
                    }
                }
            }
        }
        self.lb.push(None);
        self.ub.push(None);
        self.val.push(value);
        self.row_of.push(Some(self.rows.len()));
        self.rows.push(Row { basic: s, coeffs });
        self.forms.insert(form.to_vec(), s);
        s
    }

    pub fn num_vars(&self) -> usize {
        self.lb.len()
    }

    pub fn set_bounds(&mut self, var: usize, lb: Option<Rat>, ub: Option<Rat>) {
        if self.lb[var] != lb {
            self.lb[var] = lb;
        }
        if self.ub[var] != ub {
            self.ub[var] = ub;
        }
        if self.row_of[var].is_none() {
            let target = if self.lb[var].as_ref().is_some_and(|l| &self.val[var] < l) {
                self.lb[var].clone()
            } else if self.ub[var].as_ref().is_some_and(|u| &self.val[var] > u) {
                self.ub[var].clone()
            } else {
                None
            };
            if let Some(t) = target {
                self.val[var] = t;
                self.stale = true;
            }
        }
    }

    fn refresh(&mut self) {
        if !self.stale {
            return;
        }
        for row in &self.rows {
            let mut v = Rat::zero();
            for (k, c) in &row.coeffs {
                v += c * &self.val[*k];
            }
            self.val[row.basic] = v;
        }
        self.stale = false;
    }

    fn update(&mut self, var: usize, v: Rat) {
        let delta = &v - &self.val[var];
        if delta.is_zero() {
            return;
        }
        for row in &self.rows {
            if let Some(a) = row.coeffs.get(&var) {
                self.val[row.basic] += a * &delta;
            }
        }
        self.val[var] = v;
    }

    fn pivot(&mut self, r: usize, entering: usize) {
        self.pivots += 1;
        let row = std::mem::take(&mut self.rows[r].coeffs);
        let leaving = self.rows[r].basic;
        let a = row[&entering].clone();
        // entering = (leaving − Σ_{k≠entering} a_k x_k) / a
        let inv = a.recip();
        let mut new_row: BTreeMap<usize, Rat> = BTreeMap::new();
        new_row.insert(leaving, inv.clone());
        for (k, c) in &row {
            if *k != entering {
                new_row.insert(*k, -(c * &inv));
            }
        }
        for (i, other) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            if let Some(c) = other.coeffs.remove(&entering) {
                for (k, d) in &new_row {
                    add_to(&mut other.coeffs, *k, &c * d);
                }
            }
        }
        self.rows[r] = Row {
            basic: entering,
            coeffs: new_row,
        };
        self.row_of[leaving] = None;
        self.row_of[entering] = Some(r);
    }

    fn pivot_and_update(&mut self, r: usize, entering: usize, target: Rat) {
        let basic = self.rows[r].basic;
        let a = self.rows[r].coeffs[&entering].clone();
        let theta = (&target - &self.val[basic]) / &a;
        self.val[basic] = target;
        self.val[entering] += &theta;
        for (i, row) in self.rows.iter().enumerate() {
            if i != r {
                if let Some(c) = row.coeffs.get(&entering) {
                    self.val[row.basic] += c * &theta;
                }
            }
        }
        self.pivot(r, entering);
    }

    fn below_ub(&self, v: usize) -> bool {
        self.ub[v].as_ref().is_none_or(|u| &self.val[v] < u)
    }

    fn above_lb(&self, v: usize) -> bool {
        self.lb[v].as_ref().is_none_or(|l| &self.val[v] > l)
    }

    /// Restore feasibility. Returns `false` when the bounds are infeasible.
    pub fn check(&mut self) -> bool {
        self.refresh();
        loop {
            let mut pick: Option<(usize, usize, bool)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let b = row.basic;
                let low = self.lb[b].as_ref().is_some_and(|l| &self.val[b] < l);
                let high = self.ub[b].as_ref().is_some_and(|u| &self.val[b] > u);
                if (low || high) && pick.is_none_or(|(_, pb, _)| b < pb) {
                    pick = Some((r, b, low));
                }
            }
            let Some((r, b, low)) = pick else {
                return true;
            };
            let entering = self.rows[r]
                .coeffs
                .iter()
                .filter(|(k, a)| {
                    let up = a.is_positive() == low;
                    if up {
                        self.below_ub(**k)
                    } else {
                        self.above_lb(**k)
                    }
                })
                .map(|(k, _)| *k)
                .min();
            let Some(j) = entering else {
                return false;
            };
            let target = if low { self.lb[b].clone() } else { self.ub[b].clone() }.expect("violated bound exists");
            self.pivot_and_update(r, j, target);
        }
    }

    /// Maximize `Σ c·x` from a feasible state (call [`Simplex::check`] first).
    pub fn maximize(&mut self, objective: &[(usize, i64)]) -> Optimum {
        self.refresh();
        for _ in 0..MAX_OPT_ITERATIONS {
            let mut d: BTreeMap<usize, Rat> = BTreeMap::new();
            for &(v, c) in objective {
                let c = rat(c);
                match self.row_of[v] {
                    None => add_to(&mut d, v, c),
                    Some(r) => {
                        for (k, a) in &self.rows[r].coeffs {
                            add_to(&mut d, *k, &c * a);
                        }
                    }
                }
            }
            let entering = d
                .iter()
                .find(|(k, c)| if c.is_positive() { self.below_ub(**k) } else { self.above_lb(**k) })
                .map(|(k, c)| (*k, c.is_positive()));
            let Some((j, up)) = entering else {
                let value = objective
                    .iter()
                    .fold(Rat::zero(), |acc, &(v, c)| acc + rat(c) * &self.val[v]);
                return Optimum::Bounded(value);
            };
            // Ratio test; ties go to the smallest variable index.
            let mut best: Option<(Rat, usize, Option<usize>)> = None;
            let own = if up {
                self.ub[j].as_ref().map(|u| u - &self.val[j])
            } else {
                self.lb[j].as_ref().map(|l| &self.val[j] - l)
            };
            if let Some(t) = own {
                best = Some((t, j, None));
            }
            for (r, row) in self.rows.iter().enumerate() {
                let Some(a) = row.coeffs.get(&j) else { continue };
                let b = row.basic;
                let increases = a.is_positive() == up;
                let room = if increases {
                    self.ub[b].as_ref().map(|u| u - &self.val[b])
                } else {
                    self.lb[b].as_ref().map(|l| &self.val[b] - l)
                };
                let Some(room) = room else { continue };
                let t = room / a.abs();
                let better = match &best {
                    None => true,
                    Some((bt, bv, _)) => t < *bt || (t == *bt && b < *bv),
                };
                if better {
                    best = Some((t, b, Some(r)));
                }
            }
            match best {
                None => return Optimum::Unbounded,
                Some((t, _, None)) => {
                    let v = if up { &self.val[j] + t } else { &self.val[j] - t };
                    self.update(j, v);
                }
                Some((_, b, Some(r))) => {
                    let a = &self.rows[r].coeffs[&j];
                    let increases = a.is_positive() == up;
                    let target = if increases { self.ub[b].clone() } else { self.lb[b].clone() }.expect("bounded");
                    self.pivot_and_update(r, j, target);
                }
            }
        }
        Optimum::Unknown
    }
}

fn add_to(map: &mut BTreeMap<usize, Rat>, k: usize, v: Rat) {
    if v.is_zero() {
        return;
    }
    match map.get_mut(&k) {
        Some(e) => {
            *e += v;
            if e.is_zero() {
                map.remove(&k);
            }
        }
        None => {
            map.insert(k, v);
        }
    }
}

/// A rational solution of the relaxation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalModel {
    pub values: Vec<Rat>,
    pub objective: Option<Optimum>,
}

impl RationalModel {
    pub fn value(&self, v: VarId) -> &Rat {
        &self.values[v.index()]
    }

    pub fn is_integral(&self) -> bool {
        self.values.iter().all(|q| q.is_integer())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpResult {
    Infeasible,
    Feasible(RationalModel),
}

/// Load current bounds and constraint bounds into `simplex`.
///
/// Single-variable constraints tighten variable bounds directly; every other
/// constraint bounds the slack of its form, scaled so that the coefficients
/// are coprime with a positive leading one. Bounds stay rational, so the
/// relaxation is exact for the constraints as given. Forms seen before but
/// absent now are left unbounded. Returns `false` when some bounds already
/// cross.
pub fn load<'a>(
    simplex: &mut Simplex,
    bounds: &BoundsStore,
    constraints: impl IntoIterator<Item = &'a LinearConstraint>,
) -> bool {
    let n = bounds.len();
    simplex.ensure_structural(n);
    let mut lo: Vec<Option<Rat>> = (0..n).map(|i| bounds.lb(VarId(i as u32)).map(rat)).collect();
    let mut hi: Vec<Option<Rat>> = (0..n).map(|i| bounds.ub(VarId(i as u32)).map(rat)).collect();
    let mut slack_bounds: HashMap<usize, (Option<Rat>, Option<Rat>)> = HashMap::new();
    fn tighten(slot: &mut Option<Rat>, b: Rat, upper: bool) {
        let better = slot.as_ref().is_none_or(|x| if upper { &b < x } else { &b > x });
        if better {
            *slot = Some(b);
        }
    }
    for c in constraints {
        if c.terms.is_empty() {
            if c.bound < 0 {
                return false;
            }
            continue;
        }
        let g = c.terms.iter().fold(0i64, |g, &(_, a)| g.gcd(&a));
        let lead = c.terms[0].1;
        let scale = if lead < 0 { -g } else { g };
        // form ≤ bound/scale when scale > 0, form ≥ bound/scale otherwise.
        let b = Rat::new(BigInt::from(c.bound), BigInt::from(scale));
        let upper = scale > 0;
        if let [(v, _)] = c.terms[..] {
            let i = v.index();
            if upper {
                tighten(&mut hi[i], b, true);
            } else {
                tighten(&mut lo[i], b, false);
            }
            continue;
        }
        let form: Vec<(usize, i64)> = c.terms.iter().map(|&(v, a)| (v.index(), a / scale)).collect();
        let s = simplex.slack_for(&form);
        let e = slack_bounds.entry(s).or_insert((None, None));
        if upper {
            tighten(&mut e.1, b, true);
        } else {
            tighten(&mut e.0, b, false);
        }
    }
    let mut crossed = false;
    for i in 0..n {
        let (l, u) = (lo[i].take(), hi[i].take());
        crossed |= matches!((&l, &u), (Some(l), Some(u)) if l > u);
        simplex.set_bounds(i, l, u);
    }
    for s in n..simplex.num_vars() {
        let (l, u) = slack_bounds.remove(&s).unwrap_or((None, None));
        crossed |= matches!((&l, &u), (Some(l), Some(u)) if l > u);
        simplex.set_bounds(s, l, u);
    }
    !crossed
}

/// Solve the relaxation of `constraints` within `bounds`, maximizing
/// `objective` when given.
pub fn lp_check(
    constraints: &[LinearConstraint],
    bounds: &BoundsStore,
    objective: Option<&[(VarId, i64)]>,
) -> LpResult {
    let mut s = Simplex::new(bounds.len());
    solve_loaded(&mut s, bounds, constraints.iter(), objective)
}

pub(crate) fn solve_loaded<'a>(
    s: &mut Simplex,
    bounds: &BoundsStore,
    constraints: impl IntoIterator<Item = &'a LinearConstraint>,
    objective: Option<&[(VarId, i64)]>,
) -> LpResult {
    if !load(s, bounds, constraints) || !s.check() {
        return LpResult::Infeasible;
    }
    let objective = objective.map(|obj| {
        let obj: Vec<(usize, i64)> = obj.iter().map(|&(v, c)| (v.index(), c)).collect();
        s.maximize(&obj)
    });
    LpResult::Feasible(RationalModel {
        values: s.values().to_vec(),
        objective,
    })
}

pub fn is_one(q: &Rat) -> bool {
    q.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(terms: &[(u32, i64)], bound: i64) -> LinearConstraint {
        LinearConstraint::new(terms.iter().map(|&(v, a)| (VarId(v), a)), bound).unwrap()
    }

    fn store(bs: &[(Option<i64>, Option<i64>)]) -> BoundsStore {
        let mut s = BoundsStore::new();
        for &(l, u) in bs {
            s.add_var(l, u);
        }
        s
    }

    #[test]
    fn empty_box_is_infeasible() {
        let s = store(&[(None, None)]);
        let cs = [lin(&[(0, -1)], 0), lin(&[(0, 1)], -1)];
        assert_eq!(lp_check(&cs, &s, None), LpResult::Infeasible);
    }

    #[test]
    fn maximize_to_the_bound() {
        let s = store(&[(None, None)]);
        match lp_check(&[lin(&[(0, 1)], 7)], &s, Some(&[(VarId(0), 1)])) {
            LpResult::Feasible(m) => assert_eq!(m.objective, Some(Optimum::Bounded(rat(7)))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parity_gives_a_fractional_vertex() {
        let s = store(&[(Some(0), Some(1))]);
        let cs = [lin(&[(0, 2)], 1), lin(&[(0, -2)], -1)];
        match lp_check(&cs, &s, None) {
            LpResult::Feasible(m) => {
                assert_eq!(m.values[0], Rat::new(BigInt::from(1), BigInt::from(2)));
                assert!(!m.is_integral());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_dimensional_optimum() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0 -> (8/5, 6/5), value 14/5.
        let s = store(&[(Some(0), None), (Some(0), None)]);
        let cs = [lin(&[(0, 1), (1, 2)], 4), lin(&[(0, 3), (1, 1)], 6)];
        match lp_check(&cs, &s, Some(&[(VarId(0), 1), (VarId(1), 1)])) {
            LpResult::Feasible(m) => {
                assert_eq!(m.objective, Some(Optimum::Bounded(Rat::new(BigInt::from(14), BigInt::from(5)))));
                for c in &cs {
                    let act: Rat = c.terms.iter().map(|&(v, a)| rat(a) * &m.values[v.index()]).sum();
                    assert!(act <= rat(c.bound));
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_objective() {
        let s = store(&[(Some(0), None), (Some(0), None)]);
        match lp_check(&[lin(&[(0, 1), (1, -1)], 1)], &s, Some(&[(VarId(0), 1)])) {
            LpResult::Feasible(m) => assert_eq!(m.objective, Some(Optimum::Unbounded)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn warm_start_after_bound_changes() {
        let mut st = store(&[(Some(0), Some(10)), (Some(0), Some(10))]);
        let cs = [lin(&[(0, 1), (1, 1)], 12), lin(&[(0, -1), (1, -1)], -8)];
        let mut sx = Simplex::new(2);
        assert!(matches!(solve_loaded(&mut sx, &st, cs.iter(), None), LpResult::Feasible(_)));
        st.set_ub(VarId(0), 3).unwrap();
        st.set_ub(VarId(1), 4).unwrap();
        assert_eq!(solve_loaded(&mut sx, &st, cs.iter(), None), LpResult::Infeasible);
        st.set_ub(VarId(1), 5).unwrap();
        let mut st2 = store(&[(Some(0), Some(3)), (Some(0), Some(5))]);
        assert!(matches!(solve_loaded(&mut sx, &st2, cs.iter(), None), LpResult::Feasible(_)));
        st2.set_lb(VarId(0), 3).unwrap();
        match solve_loaded(&mut sx, &st2, cs.iter(), Some(&[(VarId(1), -1)])) {
            LpResult::Feasible(m) => assert_eq!(m.values, vec![rat(3), rat(5)]),
            other => panic!("{other:?}"),
        }
    }
}
