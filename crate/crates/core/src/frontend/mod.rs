//! Concrete syntax for problems.
//!
//! Problems are written as a sequence of s-expression commands:
//!
//! ```text
//! (declare-int x)            ; unbounded integer
//! (declare-int y 0 10)       ; integer in [0, 10]; `*` leaves a side open
//! (table T ((1 2) (?y 4)))   ; inline table, cells: 3, ?v, ?v+3, ?v-2, or a term
//! (table S csv "s.csv")      ; table read from a CSV file
//! (assert (exists (sel r (= (fst r) x) T)))
//! (maximize (+ x y))
//! ```
//!
//! Formulas: `(<= t t)`, `(= t t)`, `(< t t)`, `(>= t t)`, `(> t t)`,
//! `(distinct t t)`, `(not F)`, `(or F ...)`, `(and F ...)`, `(=> F F)`,
//! `(exists D)`, `true`, `false`. Tables: `(sel x F D)`, `(prod D ...)`,
//! `(union D ...)`, or a table name. Terms: integer literals, variables,
//! `(+ t ...)`, `(- t ...)`, `(* k t)`, `(pair t t)`, `(fst t)`, `(snd t)`.
//!
//! Everything beyond `<=`, `exists`, `not` and binary `or` is desugared
//! while parsing, so printing a parsed problem yields only core forms.

mod csv_table;
mod parse;
mod print;
pub mod sexpr;

use std::fmt;

use thiserror::Error;

pub use csv_table::{ingest_csv, parse_cell_token};
pub use parse::{parse, parse_file, parse_with_base};
pub use sexpr::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Undeclared,
    Duplicate,
    Table,
    Io,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Option<Pos>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{p}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, pos: Option<Pos>, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            pos,
            message: message.into(),
        }
    }

    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        Self::new(ParseErrorKind::Syntax, Some(pos), message)
    }
}
