//! Interval propagation over linear constraints.

use super::bounds::{BoundConflict, BoundsStore, VarId};
use super::linear::LinearConstraint;

/// Minimum of `Σ aᵢ·xᵢ` over the current box: the finite part and the
/// number of unbounded contributions, with the last such variable.
struct MinActivity {
    finite: i128,
    infinite: usize,
    infinite_var: Option<VarId>,
}

fn contribution(store: &BoundsStore, v: VarId, a: i64) -> Option<i128> {
    let side = if a > 0 { store.lb(v) } else { store.ub(v) };
    side.map(|b| a as i128 * b as i128)
}

fn min_activity(lin: &LinearConstraint, store: &BoundsStore) -> Option<MinActivity> {
    let mut m = MinActivity {
        finite: 0,
        infinite: 0,
        infinite_var: None,
    };
    for &(v, a) in &lin.terms {
        match contribution(store, v, a) {
            Some(c) => m.finite = m.finite.checked_add(c)?,
            None => {
                m.infinite += 1;
                m.infinite_var = Some(v);
            }
        }
    }
    Some(m)
}

/// True when no point of the current box satisfies `lin`.
pub fn is_violated(lin: &LinearConstraint, store: &BoundsStore) -> bool {
    match min_activity(lin, store) {
        Some(m) => m.infinite == 0 && m.finite > lin.bound as i128,
        None => false,
    }
}

fn clamp(x: i128) -> i64 {
    x.clamp(i64::MIN as i128, i64::MAX as i128) as i64
}

/// Tighten the bounds of every variable of `lin` once, using the extreme
/// values of the others. Returns the number of bounds changed.
pub fn propagate_constraint(lin: &LinearConstraint, store: &mut BoundsStore) -> Result<usize, BoundConflict> {
    if lin.terms.is_empty() {
        return if lin.bound >= 0 {
            Ok(0)
        } else {
            Err(BoundConflict { var: VarId(u32::MAX) })
        };
    }
    let Some(m) = min_activity(lin, store) else {
        return Ok(0);
    };
    if m.infinite == 0 && m.finite > lin.bound as i128 {
        return Err(BoundConflict {
            var: lin.terms[0].0,
        });
    }
    if m.infinite > 1 {
        return Ok(0);
    }
    let mut changed = 0;
    for &(v, a) in &lin.terms {
        let rest = match (m.infinite, contribution(store, v, a)) {
            (0, Some(c)) => m.finite - c,
            (1, None) if m.infinite_var == Some(v) => m.finite,
            _ => continue,
        };
        let Some(slack) = (lin.bound as i128).checked_sub(rest) else {
            continue;
        };
        let did = if a > 0 {
            store.set_ub(v, clamp(slack.div_euclid(a as i128)))?
        } else {
            store.set_lb(v, clamp(-slack.div_euclid(-(a as i128))))?
        };
        if did {
            changed += 1;
        }
    }
    Ok(changed)
}

/// Propagate a set of unconditional constraints to a fixpoint, or until
/// `budget` constraint visits have been spent. Bounds only ever tighten.
pub fn propagate_bounds_with_budget(
    store: &mut BoundsStore,
    constraints: &[LinearConstraint],
    mut budget: usize,
) -> Result<usize, BoundConflict> {
    let mut total = 0;
    loop {
        let mut round = 0;
        for c in constraints {
            if budget == 0 {
                return Ok(total);
            }
            budget -= 1;
            round += propagate_constraint(c, store)?;
        }
        total += round;
        if round == 0 {
            return Ok(total);
        }
    }
}

pub const DEFAULT_PROPAGATION_BUDGET: usize = 100_000;

pub fn propagate_bounds(store: &mut BoundsStore, constraints: &[LinearConstraint]) -> Result<usize, BoundConflict> {
    propagate_bounds_with_budget(store, constraints, DEFAULT_PROPAGATION_BUDGET)
}
