//! Typed abstract syntax for formulas over integer terms and input tables.
//!
//! The node set is deliberately small: formulas are built from `<=`, table
//! nonemptiness, negation and disjunction; everything else (conjunction,
//! equality, strict comparisons) is desugared by the helpers at the bottom
//! of this module before any analysis sees it.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Type of a term, or schema of a table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DType {
    Int,
    Pair(Box<DType>, Box<DType>),
}

impl DType {
    pub fn pair(left: DType, right: DType) -> DType {
        DType::Pair(Box::new(left), Box::new(right))
    }

    /// Schema of a flat `k`-tuple: right-nested pairs of `int`.
    pub fn tuple(arity: usize) -> DType {
        assert!(arity >= 1, "tuples have at least one column");
        let mut ty = DType::Int;
        for _ in 1..arity {
            ty = DType::pair(DType::Int, ty);
        }
        ty
    }

    /// Number of integer leaves.
    pub fn width(&self) -> usize {
        match self {
            DType::Int => 1,
            DType::Pair(l, r) => l.width() + r.width(),
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DType::Int => write!(f, "int"),
            DType::Pair(l, r) => {
                if matches!(**l, DType::Pair(..)) {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " * {r}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Const(i64),
    Var(String),
    Add(Box<Term>, Box<Term>),
    /// `k * t` with a literal coefficient.
    Scale(i64, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Fst(Box<Term>),
    Snd(Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn scale(k: i64, t: Term) -> Term {
        Term::Scale(k, Box::new(t))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn fst(t: Term) -> Term {
        Term::Fst(Box::new(t))
    }

    pub fn snd(t: Term) -> Term {
        Term::Snd(Box::new(t))
    }

    /// `a - b` as `a + (-1) * b`.
    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Term, b: Term) -> Term {
        Term::add(a, Term::scale(-1, b))
    }

    /// Accessor path into a right-nested tuple: column `i` of `arity`.
    pub fn column(row: Term, i: usize, arity: usize) -> Term {
        assert!(i < arity);
        let mut t = row;
        for _ in 0..i {
            t = Term::snd(t);
        }
        if i + 1 < arity {
            t = Term::fst(t);
        }
        t
    }
}

/// A symbolic cell in the restricted cell language `c`, `v`, `v + c`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CellLiteral {
    Const(i64),
    Var(String),
    Offset(String, i64),
}

impl CellLiteral {
    pub fn var_name(&self) -> Option<&str> {
        match self {
            CellLiteral::Const(_) => None,
            CellLiteral::Var(v) | CellLiteral::Offset(v, _) => Some(v),
        }
    }
}

/// A cell of an input table: either a literal or an arbitrary integer term
/// (which the decomposition abstracts behind a fresh variable).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Lit(CellLiteral),
    Expr(Term),
}

impl Cell {
    pub fn constant(c: i64) -> Cell {
        Cell::Lit(CellLiteral::Const(c))
    }

    pub fn var(name: impl Into<String>) -> Cell {
        Cell::Lit(CellLiteral::Var(name.into()))
    }

    pub fn offset(name: impl Into<String>, c: i64) -> Cell {
        Cell::Lit(CellLiteral::Offset(name.into(), c))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("table `{0}` has no rows")]
    Empty(String),
    #[error("table `{0}` has a row with no columns")]
    ZeroArity(String),
    #[error("table `{name}`: row {row} has {found} columns, expected {expected}")]
    Ragged {
        name: String,
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// A literal, nonempty table whose rows are flat `k`-tuples.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InputTable {
    name: String,
    arity: usize,
    rows: Vec<Vec<Cell>>,
    term_cells: bool,
}

impl InputTable {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<Cell>>) -> Result<Self, TableError> {
        let name = name.into();
        let arity = match rows.first() {
            None => return Err(TableError::Empty(name)),
            Some(r) => r.len(),
        };
        if arity == 0 {
            return Err(TableError::ZeroArity(name));
        }
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != arity) {
            return Err(TableError::Ragged {
                name,
                row,
                expected: arity,
                found: r.len(),
            });
        }
        let term_cells = rows.iter().flatten().any(|c| matches!(c, Cell::Expr(_)));
        Ok(InputTable {
            name,
            arity,
            rows,
            term_cells,
        })
    }

    /// Table of integer constants.
    pub fn from_ints(name: impl Into<String>, rows: &[&[i64]]) -> Result<Self, TableError> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&c| Cell::constant(c)).collect())
            .collect();
        InputTable::new(name, rows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Whether some cell is an arbitrary term rather than a literal.
    pub fn has_term_cells(&self) -> bool {
        self.term_cells
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn schema(&self) -> DType {
        DType::tuple(self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Table {
    Input(Arc<InputTable>),
    /// Rows of `table` whose binding to `binder` satisfies `cond`. The
    /// binder scopes over `cond` only.
    Sel {
        binder: String,
        cond: Box<Formula>,
        table: Box<Table>,
    },
    Prod(Box<Table>, Box<Table>),
    Union(Box<Table>, Box<Table>),
}

impl Table {
    pub fn input(t: &Arc<InputTable>) -> Table {
        Table::Input(Arc::clone(t))
    }

    pub fn sel(binder: impl Into<String>, cond: Formula, table: Table) -> Table {
        Table::Sel {
            binder: binder.into(),
            cond: Box::new(cond),
            table: Box::new(table),
        }
    }

    pub fn prod(a: Table, b: Table) -> Table {
        Table::Prod(Box::new(a), Box::new(b))
    }

    pub fn union(a: Table, b: Table) -> Table {
        Table::Union(Box::new(a), Box::new(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Le(Term, Term),
    Exists(Box<Table>),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn le(a: Term, b: Term) -> Formula {
        Formula::Le(a, b)
    }

    pub fn exists(t: Table) -> Formula {
        Formula::Exists(Box::new(t))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::or(Formula::not(a), Formula::not(b)))
    }

    /// Conjunction as a balanced tree, so nesting depth stays logarithmic.
    pub fn and_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let fs: Vec<Formula> = fs.into_iter().collect();
        balanced(fs, &Formula::and).unwrap_or_else(Formula::truth)
    }

    pub fn or_all(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let fs: Vec<Formula> = fs.into_iter().collect();
        balanced(fs, &Formula::or).unwrap_or_else(Formula::falsity)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(Formula::not(a), b)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::and(Formula::le(a.clone(), b.clone()), Formula::le(b, a))
    }

    pub fn ne(a: Term, b: Term) -> Formula {
        Formula::not(Formula::eq(a, b))
    }

    /// `a < b` as `a + 1 <= b`.
    pub fn lt(a: Term, b: Term) -> Formula {
        Formula::le(Term::add(a, Term::Const(1)), b)
    }

    pub fn ge(a: Term, b: Term) -> Formula {
        Formula::le(b, a)
    }

    pub fn gt(a: Term, b: Term) -> Formula {
        Formula::lt(b, a)
    }

    /// `0 <= 0`.
    pub fn truth() -> Formula {
        Formula::le(Term::Const(0), Term::Const(0))
    }

    /// `1 <= 0`.
    pub fn falsity() -> Formula {
        Formula::le(Term::Const(1), Term::Const(0))
    }
}

fn balanced(mut fs: Vec<Formula>, join: &dyn Fn(Formula, Formula) -> Formula) -> Option<Formula> {
    if fs.len() <= 1 {
        return fs.pop();
    }
    let right = fs.split_off(fs.len() / 2);
    Some(join(balanced(fs, join)?, balanced(right, join)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub lb: Option<i64>,
    pub ub: Option<i64>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, lb: Option<i64>, ub: Option<i64>) -> Self {
        VarDecl {
            name: name.into(),
            lb,
            ub,
        }
    }

    pub fn bounded(name: impl Into<String>, lb: i64, ub: i64) -> Self {
        VarDecl::new(name, Some(lb), Some(ub))
    }

    pub fn free(name: impl Into<String>) -> Self {
        VarDecl::new(name, None, None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Objective {
    pub direction: Direction,
    pub term: Term,
}

/// A complete problem: declarations, named input tables, one assertion and
/// an optional objective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProblem {
    pub declarations: Vec<VarDecl>,
    pub tables: Vec<Arc<InputTable>>,
    pub assertion: Formula,
    pub objective: Option<Objective>,
}

impl SourceProblem {
    pub fn table(&self, name: &str) -> Option<&Arc<InputTable>> {
        self.tables.iter().find(|t| t.name() == name)
    }

    pub fn declaration(&self, name: &str) -> Option<&VarDecl> {
        self.declarations.iter().find(|d| d.name == name)
    }
}
