use num_integer::Integer;
use num_traits::ToPrimitive;

use super::bounds::VarId;
use super::simplex::RationalModel;

/// The split `var ≤ floor` / `var ≥ floor + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntBranch {
    pub var: VarId,
    pub floor: i64,
}

/// The lowest-index variable with a fractional value, if any.
pub fn branch_select_int(model: &RationalModel) -> Option<IntBranch> {
    model.values.iter().enumerate().find_map(|(i, q)| {
        if q.is_integer() {
            return None;
        }
        let floor = q.numer().div_floor(q.denom()).to_i64()?;
        Some(IntBranch {
            var: VarId(i as u32),
            floor,
        })
    })
}
