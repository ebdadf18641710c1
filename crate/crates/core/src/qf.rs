//! Quantifier-free linear integer arithmetic: linear terms and Boolean
//! combinations of linear atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("integer overflow in linear arithmetic")]
pub struct Overflow;

/// `Σ coeff·var + constant` with no zero coefficients stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinTerm {
    pub coeffs: BTreeMap<String, i64>,
    pub constant: i64,
}

impl LinTerm {
    pub fn constant(c: i64) -> Self {
        LinTerm {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.into(), 1);
        LinTerm {
            coeffs,
            constant: 0,
        }
    }

    /// `v + c`.
    pub fn offset(name: impl Into<String>, c: i64) -> Self {
        let mut t = LinTerm::var(name);
        t.constant = c;
        t
    }

    pub fn as_constant(&self) -> Option<i64> {
        self.coeffs.is_empty().then_some(self.constant)
    }

    /// `Some((v, c))` when the term is exactly `v + c`.
    pub fn as_offset(&self) -> Option<(&str, i64)> {
        match self.coeffs.iter().next() {
            Some((v, 1)) if self.coeffs.len() == 1 => Some((v.as_str(), self.constant)),
            _ => None,
        }
    }

    pub fn checked_add(&self, other: &LinTerm) -> Result<LinTerm, Overflow> {
        let mut out = self.clone();
        for (v, &a) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert(0);
            *e = e.checked_add(a).ok_or(Overflow)?;
            if *e == 0 {
                out.coeffs.remove(v);
            }
        }
        out.constant = out.constant.checked_add(other.constant).ok_or(Overflow)?;
        Ok(out)
    }

    pub fn checked_scale(&self, k: i64) -> Result<LinTerm, Overflow> {
        if k == 0 {
            return Ok(LinTerm::constant(0));
        }
        let mut coeffs = BTreeMap::new();
        for (v, &a) in &self.coeffs {
            coeffs.insert(v.clone(), a.checked_mul(k).ok_or(Overflow)?);
        }
        Ok(LinTerm {
            coeffs,
            constant: self.constant.checked_mul(k).ok_or(Overflow)?,
        })
    }

    pub fn checked_sub(&self, other: &LinTerm) -> Result<LinTerm, Overflow> {
        self.checked_add(&other.checked_scale(-1)?)
    }

    /// Value under an assignment, or `None` if a variable is unassigned.
    pub fn eval(&self, value: &dyn Fn(&str) -> Option<i64>) -> Option<i128> {
        let mut acc = self.constant as i128;
        for (v, &a) in &self.coeffs {
            acc += a as i128 * value(v)? as i128;
        }
        Some(acc)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(String::as_str)
    }

    /// Rename variables.
    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> LinTerm {
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, &a)| (f(v), a)).collect(),
            constant: self.constant,
        }
    }
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, &a) in &self.coeffs {
            let (sign, mag) = if a < 0 { ("-", a.unsigned_abs()) } else { ("+", a as u64) };
            if first {
                if a < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag != 1 {
                write!(f, "{mag}*")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", self.constant.unsigned_abs())
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

/// A quantifier-free formula over linear atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qf {
    Bool(bool),
    Le(LinTerm, LinTerm),
    Eq(LinTerm, LinTerm),
    Not(Box<Qf>),
    And(Vec<Qf>),
    Or(Vec<Qf>),
}

impl Qf {
    /// `a <= b`, folded to a constant when both sides are.
    pub fn le(a: LinTerm, b: LinTerm) -> Qf {
        match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Qf::Bool(x <= y),
            _ => Qf::Le(a, b),
        }
    }

    pub fn eq(a: LinTerm, b: LinTerm) -> Qf {
        match (a.as_constant(), b.as_constant()) {
            (Some(x), Some(y)) => Qf::Bool(x == y),
            _ if a == b => Qf::Bool(true),
            _ => Qf::Eq(a, b),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Qf) -> Qf {
        match f {
            Qf::Bool(b) => Qf::Bool(!b),
            Qf::Not(g) => *g,
            g => Qf::Not(Box::new(g)),
        }
    }

    pub fn and(fs: impl IntoIterator<Item = Qf>) -> Qf {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Qf::Bool(true) => {}
                Qf::Bool(false) => return Qf::Bool(false),
                Qf::And(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Qf::Bool(true),
            1 => out.pop().expect("one element"),
            _ => Qf::And(out),
        }
    }

    pub fn or(fs: impl IntoIterator<Item = Qf>) -> Qf {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Qf::Bool(false) => {}
                Qf::Bool(true) => return Qf::Bool(true),
                Qf::Or(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Qf::Bool(false),
            1 => out.pop().expect("one element"),
            _ => Qf::Or(out),
        }
    }

    /// Truth value under an assignment; `None` if a variable is unassigned.
    pub fn eval(&self, value: &dyn Fn(&str) -> Option<i64>) -> Option<bool> {
        Some(match self {
            Qf::Bool(b) => *b,
            Qf::Le(a, b) => a.eval(value)? <= b.eval(value)?,
            Qf::Eq(a, b) => a.eval(value)? == b.eval(value)?,
            Qf::Not(g) => !g.eval(value)?,
            Qf::And(gs) => {
                for g in gs {
                    if !g.eval(value)? {
                        return Some(false);
                    }
                }
                true
            }
            Qf::Or(gs) => {
                for g in gs {
                    if g.eval(value)? {
                        return Some(true);
                    }
                }
                false
            }
        })
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Qf::Bool(_) => {}
            Qf::Le(a, b) | Qf::Eq(a, b) => {
                out.extend(a.vars().map(str::to_string));
                out.extend(b.vars().map(str::to_string));
            }
            Qf::Not(g) => g.collect_vars(out),
            Qf::And(gs) | Qf::Or(gs) => gs.iter().for_each(|g| g.collect_vars(out)),
        }
    }

    /// Negation normal form: negations only directly above atoms.
    pub fn nnf(&self) -> Qf {
        self.nnf_signed(true)
    }

    fn nnf_signed(&self, positive: bool) -> Qf {
        match self {
            Qf::Bool(b) => Qf::Bool(*b == positive),
            Qf::Le(..) | Qf::Eq(..) => {
                if positive {
                    self.clone()
                } else {
                    Qf::not(self.clone())
                }
            }
            Qf::Not(g) => g.nnf_signed(!positive),
            Qf::And(gs) | Qf::Or(gs) => {
                let is_and = matches!(self, Qf::And(_)) == positive;
                let parts = gs.iter().map(|g| g.nnf_signed(positive));
                if is_and {
                    Qf::and(parts)
                } else {
                    Qf::or(parts)
                }
            }
        }
    }

    /// Recover conjunctions and equalities from their desugared forms.
    ///
    /// `¬(¬a ∨ ¬b)` becomes `a ∧ b`, and a conjunction containing both
    /// `a <= b` and `b <= a` gets the pair replaced by `a = b`.
    pub fn simplify(&self) -> Qf {
        match self {
            Qf::Bool(_) | Qf::Le(..) | Qf::Eq(..) => self.clone(),
            Qf::Not(g) => match g.simplify() {
                Qf::Or(gs) if gs.iter().all(|h| matches!(h, Qf::Not(_))) => {
                    let conj = gs.into_iter().map(|h| match h {
                        Qf::Not(inner) => *inner,
                        _ => unreachable!(),
                    });
                    merge_equalities(Qf::and(conj))
                }
                Qf::And(gs) if gs.iter().all(|h| matches!(h, Qf::Not(_))) => Qf::or(gs.into_iter().map(|h| match h {
                    Qf::Not(inner) => *inner,
                    _ => unreachable!(),
                })),
                other => Qf::not(other),
            },
            Qf::And(gs) => merge_equalities(Qf::and(gs.iter().map(Qf::simplify))),
            Qf::Or(gs) => Qf::or(gs.iter().map(Qf::simplify)),
        }
    }

    /// Number of nodes, for size measurements.
    pub fn size(&self) -> usize {
        match self {
            Qf::Bool(_) | Qf::Le(..) | Qf::Eq(..) => 1,
            Qf::Not(g) => 1 + g.size(),
            Qf::And(gs) | Qf::Or(gs) => 1 + gs.iter().map(Qf::size).sum::<usize>(),
        }
    }
}

fn merge_equalities(f: Qf) -> Qf {
    let Qf::And(gs) = f else { return f };
    let mut used = vec![false; gs.len()];
    let mut out = Vec::with_capacity(gs.len());
    for i in 0..gs.len() {
        if used[i] {
            continue;
        }
        if let Qf::Le(a, b) = &gs[i] {
            let partner = (i + 1..gs.len())
                .find(|&j| !used[j] && matches!(&gs[j], Qf::Le(c, d) if c == b && d == a));
            if let Some(j) = partner {
                used[j] = true;
                out.push(Qf::eq(a.clone(), b.clone()));
                continue;
            }
        }
        out.push(gs[i].clone());
    }
    Qf::and(out)
}

impl fmt::Display for Qf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, gs: &[Qf], sep: &str) -> fmt::Result {
            write!(f, "(")?;
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{g}")?;
            }
            write!(f, ")")
        }
        match self {
            Qf::Bool(b) => write!(f, "{b}"),
            Qf::Le(a, b) => write!(f, "{a} <= {b}"),
            Qf::Eq(a, b) => write!(f, "{a} = {b}"),
            Qf::Not(g) => write!(f, "!({g})"),
            Qf::And(gs) => join(f, gs, "&&"),
            Qf::Or(gs) => join(f, gs, "||"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> LinTerm {
        LinTerm::var(n)
    }

    #[test]
    fn linear_arithmetic_cancels_and_checks_overflow() {
        let t = v("x").checked_add(&v("y")).unwrap();
        let z = t.checked_sub(&v("x")).unwrap();
        assert_eq!(z, v("y"));
        assert_eq!(LinTerm::constant(i64::MAX).checked_add(&LinTerm::constant(1)), Err(Overflow));
        assert_eq!(v("x").checked_scale(i64::MIN).unwrap().checked_scale(-1), Err(Overflow));
    }

    #[test]
    fn display() {
        let t = v("x").checked_scale(-2).unwrap().checked_add(&LinTerm::offset("y", -3)).unwrap();
        assert_eq!(t.to_string(), "-2*x + y - 3");
        assert_eq!(LinTerm::constant(-4).to_string(), "-4");
    }

    #[test]
    fn constructors_fold_constants() {
        assert_eq!(Qf::le(LinTerm::constant(1), LinTerm::constant(0)), Qf::Bool(false));
        assert_eq!(Qf::and([Qf::Bool(true), Qf::Bool(true)]), Qf::Bool(true));
        assert_eq!(Qf::or([Qf::Bool(false), Qf::Le(v("x"), v("y"))]), Qf::Le(v("x"), v("y")));
        assert_eq!(Qf::not(Qf::not(Qf::Le(v("x"), v("y")))), Qf::Le(v("x"), v("y")));
    }

    #[test]
    fn simplify_recovers_equality_and_conjunction() {
        let le = |a: &str, b: &str| Qf::Le(v(a), v(b));
        let desugared = Qf::not(Qf::or([Qf::not(le("x", "y")), Qf::not(le("y", "x"))]));
        assert_eq!(desugared.simplify(), Qf::Eq(v("x"), v("y")));
    }

    #[test]
    fn nnf_pushes_negation_to_atoms() {
        let a = Qf::Le(v("x"), v("y"));
        let f = Qf::not(Qf::And(vec![a.clone(), Qf::Not(Box::new(a.clone()))]));
        assert_eq!(f.nnf(), Qf::Or(vec![Qf::Not(Box::new(a.clone())), a]));
    }

    #[test]
    fn eval() {
        let f = Qf::Or(vec![Qf::Eq(v("x"), LinTerm::constant(2)), Qf::Le(v("y"), LinTerm::constant(0))]);
        let val = |n: &str| match n {
            "x" => Some(2),
            "y" => Some(5),
            _ => None,
        };
        assert_eq!(f.eval(&val), Some(true));
        assert_eq!(Qf::Le(v("z"), LinTerm::constant(0)).eval(&val), None);
    }
}
