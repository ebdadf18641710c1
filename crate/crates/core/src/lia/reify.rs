//! Polarity-based reification of a negation-normal-form formula into
//! guarded linear constraints over 0/1 indicators.
//!
//! Only the implication from an indicator to its subformula is encoded. A
//! disjunction `F₁ ∨ … ∨ Fₙ` in context `g` becomes `Σ bᵢ ≥ g` (or `≥ 1`
//! at top level) with each `Fᵢ` reified under `bᵢ`. A disjunct that is
//! already a literal `v ≥ 1` over a 0/1 variable serves as its own
//! indicator.

use super::bounds::{BoundsStore, VarId, VarRegistry};
use super::linear::{GuardedLinearConstraint, LinearConstraint, LinearError};
use crate::decompose::VarKind;
use crate::qf::{LinTerm, Qf};

pub struct Reifier<'a> {
    reg: &'a mut VarRegistry,
    bounds: &'a mut BoundsStore,
    out: Vec<GuardedLinearConstraint>,
    next_indicator: usize,
}

/// Reify `f` (converted to negation normal form first). New indicator
/// variables are added to `reg` and `bounds` with domain `[0, 1]`.
pub fn reify(
    f: &Qf,
    reg: &mut VarRegistry,
    bounds: &mut BoundsStore,
) -> Result<Vec<GuardedLinearConstraint>, LinearError> {
    let mut r = Reifier {
        reg,
        bounds,
        out: Vec::new(),
        next_indicator: 0,
    };
    r.node(&f.nnf(), None)?;
    Ok(r.out)
}

enum Literal {
    Lin(LinearConstraint),
    Formula(Qf),
}

impl Reifier<'_> {
    fn is_boolean(&self, v: VarId) -> bool {
        self.bounds.lb(v).is_some_and(|l| l >= 0) && self.bounds.ub(v).is_some_and(|u| u <= 1)
    }

    /// `Some(v)` when `lin` is exactly `v ≥ 1` over a 0/1 variable.
    fn positive_literal(&self, lin: &LinearConstraint) -> Option<VarId> {
        match lin.normalize() {
            LinearConstraint { terms, bound: -1 } if terms.len() == 1 && terms[0].1 == -1 => {
                let v = terms[0].0;
                self.is_boolean(v).then_some(v)
            }
            _ => None,
        }
    }

    fn fresh_indicator(&mut self) -> VarId {
        loop {
            let name = format!("i!{}", self.next_indicator);
            self.next_indicator += 1;
            if self.reg.get(&name).is_none() {
                let id = self.reg.add(&name, VarKind::Indicator);
                let b = self.bounds.add_var(Some(0), Some(1));
                debug_assert_eq!(id, b);
                return id;
            }
        }
    }

    fn le(&self, a: &LinTerm, b: &LinTerm) -> Result<LinearConstraint, LinearError> {
        LinearConstraint::from_le(a, b, self.reg)
    }

    fn emit(&mut self, lin: LinearConstraint, ctx: Option<VarId>) -> Result<(), LinearError> {
        let lin = lin.normalize();
        if lin.constant_truth() == Some(true) {
            return Ok(());
        }
        let Some(g) = ctx else {
            self.out.push(GuardedLinearConstraint { guard: None, lin });
            return Ok(());
        };
        if lin.constant_truth() == Some(false) {
            self.out.push(GuardedLinearConstraint {
                guard: None,
                lin: LinearConstraint::new([(g, 1)], 0)?,
            });
            return Ok(());
        }
        if let [(v, a)] = lin.terms[..] {
            if self.is_boolean(v) {
                // g ⇒ v ≥ 1 is g − v ≤ 0, and g ⇒ v ≤ 0 is g + v ≤ 1.
                if a == -1 && lin.bound == -1 {
                    self.out.push(GuardedLinearConstraint {
                        guard: None,
                        lin: LinearConstraint::new([(g, 1), (v, -1)], 0)?,
                    });
                    return Ok(());
                }
                if a == 1 && lin.bound == 0 {
                    self.out.push(GuardedLinearConstraint {
                        guard: None,
                        lin: LinearConstraint::new([(g, 1), (v, 1)], 1)?,
                    });
                    return Ok(());
                }
            }
        }
        self.out.push(GuardedLinearConstraint { guard: Some(g), lin });
        Ok(())
    }

    fn node(&mut self, f: &Qf, ctx: Option<VarId>) -> Result<(), LinearError> {
        match f {
            Qf::Bool(true) => Ok(()),
            Qf::Bool(false) => self.emit(LinearConstraint::new([], -1)?, ctx),
            Qf::Le(a, b) => {
                let lin = self.le(a, b)?;
                self.emit(lin, ctx)
            }
            Qf::Eq(a, b) => {
                let lin = self.le(a, b)?;
                self.emit(lin, ctx)?;
                let lin = self.le(b, a)?;
                self.emit(lin, ctx)
            }
            Qf::Not(inner) => match &**inner {
                Qf::Le(a, b) => {
                    let lin = self.le(a, b)?.negate()?;
                    self.emit(lin, ctx)
                }
                Qf::Eq(a, b) => {
                    let lt = self.le(a, b)?.negate()?;
                    let gt = self.le(b, a)?.negate()?;
                    self.disjunction(vec![Literal::Lin(lt), Literal::Lin(gt)], ctx)
                }
                other => self.node(&Qf::not(other.clone()).nnf(), ctx),
            },
            Qf::And(parts) => parts.iter().try_for_each(|p| self.node(p, ctx)),
            Qf::Or(parts) => {
                let lits = parts.iter().cloned().map(Literal::Formula).collect();
                self.disjunction(lits, ctx)
            }
        }
    }

    fn disjunction(&mut self, parts: Vec<Literal>, ctx: Option<VarId>) -> Result<(), LinearError> {
        let mut indicators = Vec::with_capacity(parts.len());
        for part in parts {
            let lin = match &part {
                Literal::Lin(l) => Some(l.clone()),
                Literal::Formula(Qf::Le(a, b)) => Some(self.le(a, b)?),
                _ => None,
            };
            if let Some(v) = lin.as_ref().and_then(|l| self.positive_literal(l)) {
                indicators.push(v);
                continue;
            }
            let b = self.fresh_indicator();
            indicators.push(b);
            match part {
                Literal::Lin(l) => self.emit(l, Some(b))?,
                Literal::Formula(f) => self.node(&f, Some(b))?,
            }
        }
        // Σ b ≥ ctx, written as ctx − Σ b ≤ 0 (or −Σ b ≤ −1 at top level).
        let mut terms: Vec<(VarId, i64)> = indicators.iter().map(|&b| (b, -1)).collect();
        let bound = match ctx {
            Some(g) => {
                terms.push((g, 1));
                0
            }
            None => -1,
        };
        self.out.push(GuardedLinearConstraint {
            guard: None,
            lin: LinearConstraint::new(terms, bound)?,
        });
        Ok(())
    }
}
