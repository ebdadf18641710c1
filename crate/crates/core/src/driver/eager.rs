//! The eager path: reduce the whole formula to linear arithmetic and solve
//! it without membership constraints.

use thiserror::Error;

use super::search::{run, Limits, SolveError, SolveResult};
use crate::decompose::{DVar, DecomposedProblem, VarKind};
use crate::lower::{lower_int, Env, LowerError};
use crate::reduce::{reduce_formula_with_limit, ReduceError, DEFAULT_ROW_LIMIT};
use crate::types::TypedProblem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EagerError {
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// The reduced problem: declared variables and the reduced formula.
pub fn eager_problem(problem: &TypedProblem, row_limit: usize) -> Result<DecomposedProblem, EagerError> {
    let p = problem.problem();
    let qflia = reduce_formula_with_limit(&p.assertion, row_limit)?.nnf();
    let objective = match &p.objective {
        Some(o) => Some((o.direction, lower_int(&o.term, &Env::new())?)),
        None => None,
    };
    Ok(DecomposedProblem {
        vars: p
            .declarations
            .iter()
            .map(|d| DVar {
                name: d.name.clone(),
                kind: VarKind::User,
                lb: d.lb,
                ub: d.ub,
            })
            .collect(),
        qflia,
        definitions: Vec::new(),
        memberships: Vec::new(),
        objective,
    })
}

/// Decide (or optimize) any formula through the eager reduction.
pub fn solve_eager(problem: &TypedProblem, limits: &Limits) -> Result<SolveResult, EagerError> {
    solve_eager_with_row_limit(problem, limits, DEFAULT_ROW_LIMIT)
}

pub fn solve_eager_with_row_limit(
    problem: &TypedProblem,
    limits: &Limits,
    row_limit: usize,
) -> Result<SolveResult, EagerError> {
    let p = eager_problem(problem, row_limit)?;
    Ok(run(&p, limits)?)
}
