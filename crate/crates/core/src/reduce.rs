//! Eager reduction of table formulas to plain linear integer arithmetic.
//!
//! A table denotes a list of guarded rows: row values paired with the
//! condition under which the row is present. Nonemptiness becomes the
//! disjunction of the guards.

use thiserror::Error;

use crate::ast::{Formula, Table};
use crate::lower::{lower_int, lower_row, Env, LowerError, RowVal};
use crate::qf::Qf;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("eager reduction exceeds the limit of {limit} guarded rows")]
    TooLarge { limit: usize },
    #[error(transparent)]
    Lower(#[from] LowerError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedRow {
    pub row: RowVal,
    pub guard: Qf,
}

/// Upper limit on the number of guarded rows materialized in total.
pub const DEFAULT_ROW_LIMIT: usize = 5_000_000;

struct Reducer {
    limit: usize,
    produced: usize,
}

impl Reducer {
    fn count(&mut self, n: usize) -> Result<(), ReduceError> {
        self.produced = self.produced.saturating_add(n);
        if self.produced > self.limit {
            return Err(ReduceError::TooLarge { limit: self.limit });
        }
        Ok(())
    }

    fn table(&mut self, d: &Table, env: &mut Env) -> Result<Vec<GuardedRow>, ReduceError> {
        match d {
            Table::Input(t) => {
                self.count(t.len())?;
                t.rows()
                    .iter()
                    .map(|r| {
                        Ok(GuardedRow {
                            row: lower_row(r)?,
                            guard: Qf::Bool(true),
                        })
                    })
                    .collect()
            }
            Table::Sel {
                binder,
                cond,
                table,
            } => {
                let rows = self.table(table, env)?;
                let mut out = Vec::with_capacity(rows.len());
                for GuardedRow { row, guard } in rows {
                    env.push(binder, row.clone());
                    let c = self.formula(cond, env);
                    env.pop();
                    out.push(GuardedRow {
                        row,
                        guard: Qf::and([guard, c?]),
                    });
                }
                Ok(out)
            }
            Table::Prod(a, b) => {
                let left = self.table(a, env)?;
                let right = self.table(b, env)?;
                self.count(left.len().saturating_mul(right.len()))?;
                let mut out = Vec::with_capacity(left.len() * right.len());
                for l in &left {
                    for r in &right {
                        out.push(GuardedRow {
                            row: RowVal::pair(l.row.clone(), r.row.clone()),
                            guard: Qf::and([l.guard.clone(), r.guard.clone()]),
                        });
                    }
                }
                Ok(out)
            }
            Table::Union(a, b) => {
                let mut rows = self.table(a, env)?;
                rows.extend(self.table(b, env)?);
                Ok(rows)
            }
        }
    }

    fn formula(&mut self, f: &Formula, env: &mut Env) -> Result<Qf, ReduceError> {
        Ok(match f {
            Formula::Le(a, b) => Qf::le(lower_int(a, env)?, lower_int(b, env)?),
            Formula::Exists(d) => Qf::or(self.table(d, env)?.into_iter().map(|r| r.guard)),
            Formula::Not(g) => Qf::not(self.formula(g, env)?),
            Formula::Or(g, h) => Qf::or([self.formula(g, env)?, self.formula(h, env)?]),
        })
    }
}

/// Guarded rows of a closed table expression.
pub fn reduce_table(d: &Table) -> Result<Vec<GuardedRow>, ReduceError> {
    reduce_table_with_limit(d, DEFAULT_ROW_LIMIT)
}

pub fn reduce_table_with_limit(d: &Table, limit: usize) -> Result<Vec<GuardedRow>, ReduceError> {
    Reducer { limit, produced: 0 }.table(d, &mut Env::new())
}

/// The equivalent quantifier-free formula, with desugared conjunctions and
/// equalities recovered.
pub fn reduce_formula(f: &Formula) -> Result<Qf, ReduceError> {
    reduce_formula_with_limit(f, DEFAULT_ROW_LIMIT)
}

pub fn reduce_formula_with_limit(f: &Formula, limit: usize) -> Result<Qf, ReduceError> {
    Ok(Reducer { limit, produced: 0 }
        .formula(f, &mut Env::new())?
        .simplify())
}
