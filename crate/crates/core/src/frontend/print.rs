//! Printing in the surface syntax. Output is in core forms only and parses
//! back to the same tree.

use std::fmt;

use crate::ast::{Cell, CellLiteral, Direction, Formula, SourceProblem, Table, Term, VarDecl};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Add(a, b) => write!(f, "(+ {a} {b})"),
            Term::Scale(k, t) => write!(f, "(* {k} {t})"),
            Term::Pair(a, b) => write!(f, "(pair {a} {b})"),
            Term::Fst(t) => write!(f, "(fst {t})"),
            Term::Snd(t) => write!(f, "(snd {t})"),
        }
    }
}

impl fmt::Display for CellLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellLiteral::Const(c) => write!(f, "{c}"),
            CellLiteral::Var(v) => write!(f, "?{v}"),
            CellLiteral::Offset(v, c) if *c < 0 => write!(f, "?{v}{c}"),
            CellLiteral::Offset(v, c) => write!(f, "?{v}+{c}"),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Lit(l) => write!(f, "{l}"),
            Cell::Expr(t) => write!(f, "{t}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Le(a, b) => write!(f, "(<= {a} {b})"),
            Formula::Exists(d) => write!(f, "(exists {d})"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::Or(g, h) => write!(f, "(or {g} {h})"),
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Table::Input(t) => write!(f, "{}", t.name()),
            Table::Sel {
                binder,
                cond,
                table,
            } => write!(f, "(sel {binder} {cond} {table})"),
            Table::Prod(a, b) => write!(f, "(prod {a} {b})"),
            Table::Union(a, b) => write!(f, "(union {a} {b})"),
        }
    }
}

impl fmt::Display for VarDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |b: Option<i64>| b.map_or_else(|| "*".to_string(), |v| v.to_string());
        match (self.lb, self.ub) {
            (None, None) => write!(f, "(declare-int {})", self.name),
            (lb, ub) => write!(f, "(declare-int {} {} {})", self.name, side(lb), side(ub)),
        }
    }
}

impl fmt::Display for SourceProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        for t in &self.tables {
            write!(f, "(table {} (", t.name())?;
            for (i, row) in t.rows().iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "(")?;
                for (j, cell) in row.iter().enumerate() {
                    if j > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{cell}")?;
                }
                write!(f, ")")?;
            }
            writeln!(f, "))")?;
        }
        writeln!(f, "(assert {})", self.assertion)?;
        if let Some(obj) = &self.objective {
            let head = match obj.direction {
                Direction::Minimize => "minimize",
                Direction::Maximize => "maximize",
            };
            writeln!(f, "({head} {})", obj.term)?;
        }
        Ok(())
    }
}
