//! Linear constraints `Σ aᵢ·xᵢ ≤ c` over registered variables.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;

use super::bounds::{VarId, VarRegistry};
use crate::qf::{LinTerm, Overflow};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearConstraint {
    /// Sorted by variable, no zero coefficients, no repeated variables.
    pub terms: Vec<(VarId, i64)>,
    pub bound: i64,
}

impl LinearConstraint {
    /// Merge repeated variables and drop zero coefficients.
    pub fn new(terms: impl IntoIterator<Item = (VarId, i64)>, bound: i64) -> Result<Self, Overflow> {
        let mut merged: BTreeMap<VarId, i64> = BTreeMap::new();
        for (v, a) in terms {
            let e = merged.entry(v).or_insert(0);
            *e = e.checked_add(a).ok_or(Overflow)?;
        }
        Ok(LinearConstraint {
            terms: merged.into_iter().filter(|&(_, a)| a != 0).collect(),
            bound,
        })
    }

    /// `a <= b` for linear terms whose variables are all registered.
    pub fn from_le(a: &LinTerm, b: &LinTerm, reg: &VarRegistry) -> Result<Self, LinearError> {
        let diff = a.checked_sub(b)?;
        let mut terms = Vec::with_capacity(diff.coeffs.len());
        for (v, &c) in &diff.coeffs {
            let id = reg.get(v).ok_or_else(|| LinearError::UnknownVariable(v.clone()))?;
            terms.push((id, c));
        }
        let bound = diff.constant.checked_neg().ok_or(Overflow)?;
        Ok(LinearConstraint::new(terms, bound)?)
    }

    /// Divide by the gcd of the coefficients, rounding the bound down.
    pub fn normalize(&self) -> LinearConstraint {
        let g = self
            .terms
            .iter()
            .fold(0i64, |g, &(_, a)| g.gcd(&a));
        if g <= 1 {
            return self.clone();
        }
        LinearConstraint {
            terms: self.terms.iter().map(|&(v, a)| (v, a / g)).collect(),
            bound: Integer::div_floor(&self.bound, &g),
        }
    }

    /// The integer complement `Σ -aᵢ·xᵢ ≤ -c - 1`.
    pub fn negate(&self) -> Result<LinearConstraint, Overflow> {
        let terms = self
            .terms
            .iter()
            .map(|&(v, a)| a.checked_neg().map(|n| (v, n)).ok_or(Overflow))
            .collect::<Result<Vec<_>, _>>()?;
        let bound = self
            .bound
            .checked_neg()
            .and_then(|b| b.checked_sub(1))
            .ok_or(Overflow)?;
        Ok(LinearConstraint { terms, bound })
    }

    /// `Some(truth)` when there are no variables.
    pub fn constant_truth(&self) -> Option<bool> {
        self.terms.is_empty().then_some(0 <= self.bound)
    }

    pub fn activity(&self, value: &dyn Fn(VarId) -> i64) -> i128 {
        self.terms
            .iter()
            .map(|&(v, a)| a as i128 * value(v) as i128)
            .sum()
    }

    pub fn holds(&self, value: &dyn Fn(VarId) -> i64) -> bool {
        self.activity(value) <= self.bound as i128
    }

    pub fn display<'a>(&'a self, reg: &'a VarRegistry) -> impl fmt::Display + 'a {
        DisplayWith { c: self, reg }
    }
}

struct DisplayWith<'a> {
    c: &'a LinearConstraint,
    reg: &'a VarRegistry,
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, &(v, a)) in self.c.terms.iter().enumerate() {
            let name = self.reg.name(v);
            match (i, a) {
                (0, 1) => write!(f, "{name}")?,
                (0, -1) => write!(f, "-{name}")?,
                (0, a) => write!(f, "{a}*{name}")?,
                (_, 1) => write!(f, " + {name}")?,
                (_, -1) => write!(f, " - {name}")?,
                (_, a) if a < 0 => write!(f, " - {}*{name}", a.unsigned_abs())?,
                (_, a) => write!(f, " + {a}*{name}")?,
            }
        }
        write!(f, " <= {}", self.c.bound)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LinearError {
    #[error(transparent)]
    Overflow(#[from] Overflow),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// `guard = 1 ⇒ lin`, or `lin` unconditionally.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GuardedLinearConstraint {
    pub guard: Option<VarId>,
    pub lin: LinearConstraint,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::VarKind;

    #[test]
    fn negation_is_integer_tight() {
        let mut reg = VarRegistry::new();
        reg.add("x", VarKind::User);
        let c = LinearConstraint::from_le(&LinTerm::var("x"), &LinTerm::constant(5), &reg).unwrap();
        let n = c.negate().unwrap();
        assert_eq!(n.display(&reg).to_string(), "-x <= -6");
    }

    #[test]
    fn normalization_divides_by_gcd_and_floors() {
        let c = LinearConstraint::new([(VarId(0), 2), (VarId(1), -4)], 5).unwrap();
        let n = c.normalize();
        assert_eq!(n.terms, vec![(VarId(0), 1), (VarId(1), -2)]);
        assert_eq!(n.bound, 2);
        let c = LinearConstraint::new([(VarId(0), 2)], -1).unwrap();
        assert_eq!(c.normalize().bound, -1);
    }

    #[test]
    fn merging() {
        let c = LinearConstraint::new([(VarId(1), 2), (VarId(0), 1), (VarId(1), -2)], 0).unwrap();
        assert_eq!(c.terms, vec![(VarId(0), 1)]);
        assert_eq!(LinearConstraint::new([], -1).unwrap().constant_truth(), Some(false));
    }
}
