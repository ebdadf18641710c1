//! Rank and existential-fragment membership.

use crate::ast::{Formula, Table};

/// Maximum number of input tables that can be combined by products or
/// nesting under a table expression.
pub fn table_rank(d: &Table) -> usize {
    match d {
        Table::Input(_) => 1,
        Table::Sel { cond, table, .. } => formula_rank(cond) + table_rank(table),
        Table::Prod(a, b) => table_rank(a) + table_rank(b),
        Table::Union(a, b) => table_rank(a).max(table_rank(b)),
    }
}

pub fn formula_rank(f: &Formula) -> usize {
    match f {
        Formula::Le(..) => 0,
        Formula::Exists(d) => table_rank(d),
        Formula::Not(g) => formula_rank(g),
        Formula::Or(g, h) => formula_rank(g).max(formula_rank(h)),
    }
}

/// True iff every nonemptiness atom sits below an even number of negations,
/// counting negations inside selection conditions on the path.
pub fn is_existential(f: &Formula) -> bool {
    formula_positive(f, false)
}

fn formula_positive(f: &Formula, negated: bool) -> bool {
    match f {
        Formula::Le(..) => true,
        Formula::Exists(d) => !negated && table_positive(d, negated),
        Formula::Not(g) => formula_positive(g, !negated),
        Formula::Or(g, h) => formula_positive(g, negated) && formula_positive(h, negated),
    }
}

fn table_positive(d: &Table, negated: bool) -> bool {
    match d {
        Table::Input(_) => true,
        Table::Sel { cond, table, .. } => {
            formula_positive(cond, negated) && table_positive(table, negated)
        }
        Table::Prod(a, b) | Table::Union(a, b) => {
            table_positive(a, negated) && table_positive(b, negated)
        }
    }
}
