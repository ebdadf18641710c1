//! Linear integer arithmetic: bounds, reification, propagation, an exact
//! rational relaxation and the stateful engine driving them.

pub mod bounds;
pub mod branch;
pub mod engine;
pub mod linear;
pub mod propagate;
pub mod reify;
pub mod simplex;

pub use bounds::{BoundConflict, BoundsStore, Mark, VarId, VarRegistry};
pub use branch::{branch_select_int, IntBranch};
pub use engine::{EngineMark, LiaConflict, LiaEngine, LiaStats};
pub use linear::{GuardedLinearConstraint, LinearConstraint, LinearError};
pub use propagate::{propagate_bounds, propagate_bounds_with_budget};
pub use reify::reify;
pub use simplex::{lp_check, LpResult, Optimum, Rat, RationalModel};
