//! Quantified Boolean formulas and their encoding as closed table formulas
//! quantifying over the table `{0, 1}`.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{Formula, InputTable, SourceProblem, Table, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Qbf {
    Var(String),
    Not(Box<Qbf>),
    And(Box<Qbf>, Box<Qbf>),
    Or(Box<Qbf>, Box<Qbf>),
    Forall(String, Box<Qbf>),
    Exists(String, Box<Qbf>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QbfError {
    #[error("free Boolean variable `{0}`")]
    FreeVariable(String),
}

impl Qbf {
    pub fn var(v: &str) -> Qbf {
        Qbf::Var(v.to_string())
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(q: Qbf) -> Qbf {
        Qbf::Not(Box::new(q))
    }
    pub fn and(a: Qbf, b: Qbf) -> Qbf {
        Qbf::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Qbf, b: Qbf) -> Qbf {
        Qbf::Or(Box::new(a), Box::new(b))
    }
    pub fn forall(v: &str, q: Qbf) -> Qbf {
        Qbf::Forall(v.to_string(), Box::new(q))
    }
    pub fn exists(v: &str, q: Qbf) -> Qbf {
        Qbf::Exists(v.to_string(), Box::new(q))
    }

    /// Truth value by exhaustive expansion of the quantifiers.
    pub fn eval(&self) -> Result<bool, QbfError> {
        self.eval_in(&mut HashMap::new())
    }

    fn eval_in(&self, env: &mut HashMap<String, bool>) -> Result<bool, QbfError> {
        Ok(match self {
            Qbf::Var(v) => *env.get(v).ok_or_else(|| QbfError::FreeVariable(v.clone()))?,
            Qbf::Not(q) => !q.eval_in(env)?,
            Qbf::And(a, b) => a.eval_in(env)? & b.eval_in(env)?,
            Qbf::Or(a, b) => a.eval_in(env)? | b.eval_in(env)?,
            Qbf::Forall(v, q) | Qbf::Exists(v, q) => {
                let saved = env.get(v).copied();
                let mut results = [false; 2];
                for (i, val) in [false, true].into_iter().enumerate() {
                    env.insert(v.clone(), val);
                    results[i] = q.eval_in(env)?;
                }
                match saved {
                    Some(s) => env.insert(v.clone(), s),
                    None => env.remove(v),
                };
                if matches!(self, Qbf::Forall(..)) {
                    results[0] && results[1]
                } else {
                    results[0] || results[1]
                }
            }
        })
    }
}

/// The table `{0, 1}` of Boolean values.
pub fn boolean_table() -> Arc<InputTable> {
    Arc::new(InputTable::from_ints("B", &[&[0], &[1]]).expect("nonempty"))
}

/// Encode a closed QBF: `∀x φ` becomes `¬∃σ(x, ¬φ, B)`, `∃x φ` becomes
/// `∃σ(x, φ, B)`, and literals `x` / `¬x` become `x = 1` / `x = 0`.
pub fn encode_qbf(q: &Qbf, b: &Arc<InputTable>) -> Result<Formula, QbfError> {
    encode(q, b, &mut Vec::new())
}

fn encode(q: &Qbf, b: &Arc<InputTable>, bound: &mut Vec<String>) -> Result<Formula, QbfError> {
    let lit = |v: &String, value: i64, bound: &Vec<String>| {
        if bound.contains(v) {
            Ok(Formula::eq(Term::var(v.as_str()), Term::Const(value)))
        } else {
            Err(QbfError::FreeVariable(v.clone()))
        }
    };
    Ok(match q {
        Qbf::Var(v) => lit(v, 1, bound)?,
        Qbf::Not(inner) => match &**inner {
            Qbf::Var(v) => lit(v, 0, bound)?,
            other => Formula::not(encode(other, b, bound)?),
        },
        Qbf::And(x, y) => Formula::and(encode(x, b, bound)?, encode(y, b, bound)?),
        Qbf::Or(x, y) => Formula::or(encode(x, b, bound)?, encode(y, b, bound)?),
        Qbf::Forall(v, body) | Qbf::Exists(v, body) => {
            bound.push(v.clone());
            let inner = encode(body, b, bound);
            bound.pop();
            let inner = inner?;
            if matches!(q, Qbf::Forall(..)) {
                Formula::not(Formula::exists(Table::sel(
                    v.clone(),
                    Formula::not(inner),
                    Table::input(b),
                )))
            } else {
                Formula::exists(Table::sel(v.clone(), inner, Table::input(b)))
            }
        }
    })
}

/// A closed problem asserting the encoding of `q`.
pub fn qbf_problem(q: &Qbf) -> Result<SourceProblem, QbfError> {
    let b = boolean_table();
    let assertion = encode_qbf(q, &b)?;
    Ok(SourceProblem {
        declarations: Vec::new(),
        tables: vec![b],
        assertion,
        objective: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_by_expansion() {
        let q = Qbf::forall("x", Qbf::exists("y", Qbf::or(Qbf::var("x"), Qbf::not(Qbf::var("y")))));
        assert_eq!(q.eval(), Ok(true));
        assert_eq!(Qbf::forall("x", Qbf::var("x")).eval(), Ok(false));
        assert_eq!(Qbf::var("z").eval(), Err(QbfError::FreeVariable("z".into())));
    }

    #[test]
    fn encoding_matches_the_textbook_shape() {
        let b = boolean_table();
        let q = Qbf::forall("x", Qbf::exists("y", Qbf::or(Qbf::var("x"), Qbf::not(Qbf::var("y")))));
        let inner = Formula::or(
            Formula::eq(Term::var("x"), Term::Const(1)),
            Formula::eq(Term::var("y"), Term::Const(0)),
        );
        let expected = Formula::not(Formula::exists(Table::sel(
            "x",
            Formula::not(Formula::exists(Table::sel("y", inner, Table::input(&b)))),
            Table::input(&b),
        )));
        assert_eq!(encode_qbf(&q, &b), Ok(expected));
    }

    #[test]
    fn free_variables_are_rejected() {
        assert!(encode_qbf(&Qbf::var("x"), &boolean_table()).is_err());
    }
}
