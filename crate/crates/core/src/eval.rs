//! Direct relational evaluation of formulas under a total assignment.
//!
//! This evaluator shares no code with the reduction or the solver, so it can
//! serve as an independent check of their answers.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{Cell, CellLiteral, Direction, Formula, SourceProblem, Table, Term};

pub type Assignment = BTreeMap<String, i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("variable `{0}` has no value")]
    Unassigned(String),
    #[error("ill-typed term during evaluation")]
    IllTyped,
    #[error("search space of {0} assignments exceeds the limit")]
    SearchSpaceTooLarge(u128),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i128),
    Pair(Box<Value>, Box<Value>),
}

struct Evaluator<'a> {
    assignment: &'a Assignment,
    binders: Vec<(&'a str, Value)>,
}

impl<'a> Evaluator<'a> {
    fn var(&self, v: &str) -> Result<Value, EvalError> {
        if let Some((_, val)) = self.binders.iter().rev().find(|(n, _)| *n == v) {
            return Ok(val.clone());
        }
        self.assignment
            .get(v)
            .map(|&x| Value::Int(x as i128))
            .ok_or_else(|| EvalError::Unassigned(v.to_string()))
    }

    fn int(&self, t: &'a Term) -> Result<i128, EvalError> {
        match self.term(t)? {
            Value::Int(x) => Ok(x),
            Value::Pair(..) => Err(EvalError::IllTyped),
        }
    }

    fn term(&self, t: &'a Term) -> Result<Value, EvalError> {
        Ok(match t {
            Term::Const(c) => Value::Int(*c as i128),
            Term::Var(v) => self.var(v)?,
            Term::Add(a, b) => Value::Int(self.int(a)? + self.int(b)?),
            Term::Scale(k, a) => Value::Int(*k as i128 * self.int(a)?),
            Term::Pair(a, b) => Value::Pair(Box::new(self.term(a)?), Box::new(self.term(b)?)),
            Term::Fst(a) => match self.term(a)? {
                Value::Pair(l, _) => *l,
                Value::Int(_) => return Err(EvalError::IllTyped),
            },
            Term::Snd(a) => match self.term(a)? {
                Value::Pair(_, r) => *r,
                Value::Int(_) => return Err(EvalError::IllTyped),
            },
        })
    }

    fn cell(&self, c: &'a Cell) -> Result<i128, EvalError> {
        let lookup = |v: &str| {
            self.assignment
                .get(v)
                .map(|&x| x as i128)
                .ok_or_else(|| EvalError::Unassigned(v.to_string()))
        };
        match c {
            Cell::Lit(CellLiteral::Const(c)) => Ok(*c as i128),
            Cell::Lit(CellLiteral::Var(v)) => lookup(v),
            Cell::Lit(CellLiteral::Offset(v, c)) => Ok(lookup(v)? + *c as i128),
            Cell::Expr(t) => {
                let inner = Evaluator {
                    assignment: self.assignment,
                    binders: Vec::new(),
                };
                inner.int(t)
            }
        }
    }

    fn table(&mut self, d: &'a Table) -> Result<Vec<Value>, EvalError> {
        match d {
            Table::Input(t) => t
                .rows()
                .iter()
                .map(|row| {
                    let mut vals = row.iter().map(|c| self.cell(c)).collect::<Result<Vec<_>, _>>()?;
                    let last = Value::Int(vals.pop().expect("nonempty row"));
                    Ok(vals
                        .into_iter()
                        .rev()
                        .fold(last, |acc, v| Value::Pair(Box::new(Value::Int(v)), Box::new(acc))))
                })
                .collect(),
            Table::Sel {
                binder,
                cond,
                table,
            } => {
                let rows = self.table(table)?;
                let mut out = Vec::new();
                for r in rows {
                    self.binders.push((binder.as_str(), r.clone()));
                    let keep = self.formula(cond);
                    self.binders.pop();
                    if keep? {
                        out.push(r);
                    }
                }
                Ok(out)
            }
            Table::Prod(a, b) => {
                let left = self.table(a)?;
                let right = self.table(b)?;
                let mut out = Vec::with_capacity(left.len() * right.len());
                for l in &left {
                    for r in &right {
                        out.push(Value::Pair(Box::new(l.clone()), Box::new(r.clone())));
                    }
                }
                Ok(out)
            }
            Table::Union(a, b) => {
                let mut rows = self.table(a)?;
                rows.extend(self.table(b)?);
                Ok(rows)
            }
        }
    }

    fn formula(&mut self, f: &'a Formula) -> Result<bool, EvalError> {
        Ok(match f {
            Formula::Le(a, b) => self.int(a)? <= self.int(b)?,
            Formula::Exists(d) => !self.table(d)?.is_empty(),
            Formula::Not(g) => !self.formula(g)?,
            Formula::Or(g, h) => self.formula(g)? || self.formula(h)?,
        })
    }
}

pub fn eval_formula(f: &Formula, assignment: &Assignment) -> Result<bool, EvalError> {
    Evaluator {
        assignment,
        binders: Vec::new(),
    }
    .formula(f)
}

pub fn eval_table(d: &Table, assignment: &Assignment) -> Result<Vec<Value>, EvalError> {
    Evaluator {
        assignment,
        binders: Vec::new(),
    }
    .table(d)
}

pub fn eval_term(t: &Term, assignment: &Assignment) -> Result<i128, EvalError> {
    Evaluator {
        assignment,
        binders: Vec::new(),
    }
    .int(t)
}

/// True iff the assignment respects every declared bound and satisfies the
/// assertion.
pub fn check_model(problem: &SourceProblem, model: &Assignment) -> Result<bool, EvalError> {
    for d in &problem.declarations {
        let v = *model
            .get(&d.name)
            .ok_or_else(|| EvalError::Unassigned(d.name.clone()))?;
        if d.lb.is_some_and(|lb| v < lb) || d.ub.is_some_and(|ub| v > ub) {
            return Ok(false);
        }
    }
    eval_formula(&problem.assertion, model)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationOutcome {
    /// A satisfying assignment, the best one when there is an objective.
    pub model: Option<Assignment>,
    pub objective: Option<i128>,
    pub assignments_checked: u64,
}

/// Enumerate every assignment of the declared variables within their
/// bounds, with open sides clamped to `[-default_bound, default_bound]`.
/// Ties in the objective keep the first assignment found.
pub fn enumerate(
    problem: &SourceProblem,
    default_bound: i64,
    max_space: u128,
) -> Result<EnumerationOutcome, EvalError> {
    let ranges: Vec<(String, i64, i64)> = problem
        .declarations
        .iter()
        .map(|d| {
            (
                d.name.clone(),
                d.lb.unwrap_or(-default_bound),
                d.ub.unwrap_or(default_bound),
            )
        })
        .collect();
    let space = ranges
        .iter()
        .map(|(_, lo, hi)| (*hi as i128 - *lo as i128 + 1).max(0) as u128)
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX);
    if space > max_space {
        return Err(EvalError::SearchSpaceTooLarge(space));
    }
    let mut out = EnumerationOutcome {
        model: None,
        objective: None,
        assignments_checked: 0,
    };
    if ranges.iter().any(|(_, lo, hi)| lo > hi) {
        return Ok(out);
    }
    let mut current: Assignment = ranges.iter().map(|(n, lo, _)| (n.clone(), *lo)).collect();
    loop {
        out.assignments_checked += 1;
        if eval_formula(&problem.assertion, &current)? {
            match &problem.objective {
                None => {
                    out.model = Some(current);
                    return Ok(out);
                }
                Some(obj) => {
                    let value = eval_term(&obj.term, &current)?;
                    let better = match (out.objective, obj.direction) {
                        (None, _) => true,
                        (Some(best), Direction::Maximize) => value > best,
                        (Some(best), Direction::Minimize) => value < best,
                    };
                    if better {
                        out.objective = Some(value);
                        out.model = Some(current.clone());
                    }
                }
            }
        }
        // Odometer increment, last variable fastest.
        let mut advanced = false;
        for (name, lo, hi) in ranges.iter().rev() {
            let v = current.get_mut(name).expect("assigned");
            if *v < *hi {
                *v += 1;
                advanced = true;
                break;
            }
            *v = *lo;
        }
        if !advanced {
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{InputTable, Objective, VarDecl};
    use std::sync::Arc;

    fn assign(pairs: &[(&str, i64)]) -> Assignment {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn selection_and_product() {
        let t = Arc::new(InputTable::from_ints("T", &[&[1, 2], &[3, 4]]).unwrap());
        let d = Table::sel(
            "r",
            Formula::le(Term::fst(Term::fst(Term::var("r"))), Term::fst(Term::snd(Term::var("r")))),
            Table::prod(Table::input(&t), Table::input(&t)),
        );
        assert_eq!(eval_table(&d, &Assignment::new()).unwrap().len(), 3);
    }

    #[test]
    fn symbolic_cells_follow_the_assignment() {
        let t = Arc::new(
            InputTable::new("T", vec![vec![Cell::offset("a", 3)], vec![Cell::constant(0)]]).unwrap(),
        );
        let f = Formula::exists(Table::sel(
            "r",
            Formula::eq(Term::var("r"), Term::Const(5)),
            Table::input(&t),
        ));
        assert_eq!(eval_formula(&f, &assign(&[("a", 2)])), Ok(true));
        assert_eq!(eval_formula(&f, &assign(&[("a", 1)])), Ok(false));
        assert_eq!(
            eval_formula(&f, &Assignment::new()),
            Err(EvalError::Unassigned("a".into()))
        );
    }

    #[test]
    fn enumeration_finds_the_optimum() {
        let t = Arc::new(InputTable::from_ints("T", &[&[3], &[7]]).unwrap());
        let p = SourceProblem {
            declarations: vec![VarDecl::bounded("x", 0, 10)],
            tables: vec![t.clone()],
            assertion: Formula::exists(Table::sel(
                "r",
                Formula::eq(Term::var("r"), Term::var("x")),
                Table::input(&t),
            )),
            objective: Some(Objective {
                direction: Direction::Maximize,
                term: Term::var("x"),
            }),
        };
        let out = enumerate(&p, 10, 1000).unwrap();
        assert_eq!(out.objective, Some(7));
        assert_eq!(out.model, Some(assign(&[("x", 7)])));
        assert!(matches!(enumerate(&p, 10, 5), Err(EvalError::SearchSpaceTooLarge(11))));
    }
}
