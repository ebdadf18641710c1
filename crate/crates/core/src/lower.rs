//! Lowering of typed terms to linear terms, with pair accessors resolved
//! against explicit row values.

use thiserror::Error;

use crate::ast::{Cell, CellLiteral, Formula, Table, Term};
use crate::qf::{LinTerm, Overflow};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowerError {
    #[error(transparent)]
    Overflow(#[from] Overflow),
    #[error("accessor applied to a term that is not a pair: {0}")]
    OpaqueAccessor(String),
    #[error("arithmetic on a pair-valued term: {0}")]
    PairArithmetic(String),
    #[error("pair-valued term where an integer is required: {0}")]
    PairWhereIntExpected(String),
}

/// The value of a row: an integer, or a pair of row values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RowVal {
    Int(LinTerm),
    Pair(Box<RowVal>, Box<RowVal>),
}

impl RowVal {
    pub fn pair(a: RowVal, b: RowVal) -> RowVal {
        RowVal::Pair(Box::new(a), Box::new(b))
    }

    /// Right-nested tuple of integer leaves.
    pub fn tuple(mut leaves: Vec<LinTerm>) -> RowVal {
        let last = RowVal::Int(leaves.pop().expect("tuples have at least one column"));
        leaves
            .into_iter()
            .rev()
            .fold(last, |acc, l| RowVal::pair(RowVal::Int(l), acc))
    }

    /// Integer leaves, left to right.
    pub fn leaves(&self) -> Vec<&LinTerm> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a LinTerm>) {
        match self {
            RowVal::Int(t) => out.push(t),
            RowVal::Pair(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn as_int(&self) -> Option<&LinTerm> {
        match self {
            RowVal::Int(t) => Some(t),
            RowVal::Pair(..) => None,
        }
    }
}

/// Selection binders in scope, innermost last.
#[derive(Clone, Debug, Default)]
pub struct Env {
    frames: Vec<(String, RowVal)>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, name: &str) -> Option<&RowVal> {
        self.frames.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn push(&mut self, name: &str, value: RowVal) {
        self.frames.push((name.to_string(), value));
    }

    pub fn pop(&mut self) {
        self.frames.pop();
    }
}

pub fn lower_term(t: &Term, env: &Env) -> Result<RowVal, LowerError> {
    Ok(match t {
        Term::Const(c) => RowVal::Int(LinTerm::constant(*c)),
        Term::Var(v) => match env.lookup(v) {
            Some(r) => r.clone(),
            None => RowVal::Int(LinTerm::var(v.as_str())),
        },
        Term::Add(a, b) => {
            let a = lower_int(a, env)?;
            let b = lower_int(b, env)?;
            RowVal::Int(a.checked_add(&b)?)
        }
        Term::Scale(k, a) => RowVal::Int(lower_int(a, env)?.checked_scale(*k)?),
        Term::Pair(a, b) => RowVal::pair(lower_term(a, env)?, lower_term(b, env)?),
        Term::Fst(a) => match lower_term(a, env)? {
            RowVal::Pair(l, _) => *l,
            RowVal::Int(_) => return Err(LowerError::OpaqueAccessor(t.to_string())),
        },
        Term::Snd(a) => match lower_term(a, env)? {
            RowVal::Pair(_, r) => *r,
            RowVal::Int(_) => return Err(LowerError::OpaqueAccessor(t.to_string())),
        },
    })
}

pub fn lower_int(t: &Term, env: &Env) -> Result<LinTerm, LowerError> {
    match lower_term(t, env)? {
        RowVal::Int(l) => Ok(l),
        RowVal::Pair(..) => Err(LowerError::PairArithmetic(t.to_string())),
    }
}

pub fn lower_cell(c: &Cell) -> Result<LinTerm, LowerError> {
    Ok(match c {
        Cell::Lit(CellLiteral::Const(c)) => LinTerm::constant(*c),
        Cell::Lit(CellLiteral::Var(v)) => LinTerm::var(v.as_str()),
        Cell::Lit(CellLiteral::Offset(v, c)) => LinTerm::offset(v.as_str(), *c),
        Cell::Expr(t) => lower_int(t, &Env::new())?,
    })
}

pub fn lower_row(cells: &[Cell]) -> Result<RowVal, LowerError> {
    Ok(RowVal::tuple(cells.iter().map(lower_cell).collect::<Result<_, _>>()?))
}

/// Resolve every accessor applied to a pair constructor. The result of an
/// int-typed term contains no pair nodes.
pub fn eliminate_pairs(t: &Term) -> Result<Term, LowerError> {
    let out = strip(t)?;
    if matches!(out, Term::Pair(..)) {
        return Err(LowerError::PairWhereIntExpected(t.to_string()));
    }
    Ok(out)
}

fn strip(t: &Term) -> Result<Term, LowerError> {
    Ok(match t {
        Term::Const(_) | Term::Var(_) => t.clone(),
        Term::Add(a, b) => Term::add(eliminate_pairs(a)?, eliminate_pairs(b)?),
        Term::Scale(k, a) => Term::scale(*k, eliminate_pairs(a)?),
        Term::Pair(a, b) => Term::pair(strip(a)?, strip(b)?),
        Term::Fst(a) => match strip(a)? {
            Term::Pair(l, _) => *l,
            _ => return Err(LowerError::OpaqueAccessor(t.to_string())),
        },
        Term::Snd(a) => match strip(a)? {
            Term::Pair(_, r) => *r,
            _ => return Err(LowerError::OpaqueAccessor(t.to_string())),
        },
    })
}

/// [`eliminate_pairs`] on every atom of a formula, including atoms inside
/// selection conditions, whose binders must then not be used with accessors.
pub fn eliminate_pairs_formula(f: &Formula) -> Result<Formula, LowerError> {
    Ok(match f {
        Formula::Le(a, b) => Formula::le(eliminate_pairs(a)?, eliminate_pairs(b)?),
        Formula::Exists(d) => Formula::exists(eliminate_pairs_table(d)?),
        Formula::Not(g) => Formula::not(eliminate_pairs_formula(g)?),
        Formula::Or(g, h) => Formula::or(eliminate_pairs_formula(g)?, eliminate_pairs_formula(h)?),
    })
}

fn eliminate_pairs_table(d: &Table) -> Result<Table, LowerError> {
    Ok(match d {
        Table::Input(_) => d.clone(),
        Table::Sel {
            binder,
            cond,
            table,
        } => Table::sel(
            binder.clone(),
            eliminate_pairs_formula(cond)?,
            eliminate_pairs_table(table)?,
        ),
        Table::Prod(a, b) => Table::prod(eliminate_pairs_table(a)?, eliminate_pairs_table(b)?),
        Table::Union(a, b) => Table::union(eliminate_pairs_table(a)?, eliminate_pairs_table(b)?),
    })
}
