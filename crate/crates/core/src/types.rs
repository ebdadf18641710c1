//! Type and schema checking.

use std::collections::HashSet;

use thiserror::Error;

use crate::ast::{Cell, DType, Formula, InputTable, SourceProblem, Table, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("accessor `{accessor}` applied to a term of type int")]
    AccessorOnInt { accessor: &'static str },
    #[error("arithmetic on a term of pair type {0}")]
    ArithmeticOnPair(DType),
    #[error("union of tables with unequal schemas {left} and {right}")]
    UnionSchemaMismatch { left: DType, right: DType },
    #[error("input table `{table}` has a cell that is not of type int")]
    HeterogeneousRows { table: String },
    #[error("input table `{table}` cell refers to unknown variable `{var}`")]
    UnknownCellVariable { table: String, var: String },
    #[error("objective must be of type int, found {0}")]
    ObjectiveNotInt(DType),
}

/// Scoped types for selection binders. Anything not bound here is an
/// integer variable.
#[derive(Clone, Debug, Default)]
pub struct TypeEnv {
    binders: Vec<(String, DType)>,
}

impl TypeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    fn lookup(&self, name: &str) -> DType {
        self.binders
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
            .unwrap_or(DType::Int)
    }

    fn with<R>(&mut self, name: &str, ty: DType, f: impl FnOnce(&mut Self) -> R) -> R {
        self.binders.push((name.to_string(), ty));
        let r = f(self);
        self.binders.pop();
        r
    }
}

pub fn type_of_term(t: &Term, env: &TypeEnv) -> Result<DType, TypeError> {
    match t {
        Term::Const(_) => Ok(DType::Int),
        Term::Var(v) => Ok(env.lookup(v)),
        Term::Add(a, b) => {
            expect_int(a, env)?;
            expect_int(b, env)?;
            Ok(DType::Int)
        }
        Term::Scale(_, a) => {
            expect_int(a, env)?;
            Ok(DType::Int)
        }
        Term::Pair(a, b) => Ok(DType::pair(type_of_term(a, env)?, type_of_term(b, env)?)),
        Term::Fst(a) => match type_of_term(a, env)? {
            DType::Pair(l, _) => Ok(*l),
            DType::Int => Err(TypeError::AccessorOnInt { accessor: "fst" }),
        },
        Term::Snd(a) => match type_of_term(a, env)? {
            DType::Pair(_, r) => Ok(*r),
            DType::Int => Err(TypeError::AccessorOnInt { accessor: "snd" }),
        },
    }
}

fn expect_int(t: &Term, env: &TypeEnv) -> Result<(), TypeError> {
    match type_of_term(t, env)? {
        DType::Int => Ok(()),
        other => Err(TypeError::ArithmeticOnPair(other)),
    }
}

fn check_input_cells(t: &InputTable) -> Result<(), TypeError> {
    if !t.has_term_cells() {
        return Ok(());
    }
    for cell in t.rows().iter().flatten() {
        if let Cell::Expr(e) = cell {
            // Cells never see selection binders.
            if type_of_term(e, &TypeEnv::new())? != DType::Int {
                return Err(TypeError::HeterogeneousRows {
                    table: t.name().to_string(),
                });
            }
        }
    }
    Ok(())
}

pub fn schema_of(d: &Table, env: &mut TypeEnv) -> Result<DType, TypeError> {
    match d {
        Table::Input(t) => {
            check_input_cells(t)?;
            Ok(t.schema())
        }
        Table::Sel {
            binder,
            cond,
            table,
        } => {
            let schema = schema_of(table, env)?;
            env.with(binder, schema.clone(), |env| check_formula(cond, env))?;
            Ok(schema)
        }
        Table::Prod(a, b) => Ok(DType::pair(schema_of(a, env)?, schema_of(b, env)?)),
        Table::Union(a, b) => {
            let left = schema_of(a, env)?;
            let right = schema_of(b, env)?;
            if left != right {
                return Err(TypeError::UnionSchemaMismatch { left, right });
            }
            Ok(left)
        }
    }
}

pub fn check_formula(f: &Formula, env: &mut TypeEnv) -> Result<(), TypeError> {
    match f {
        Formula::Le(a, b) => {
            expect_int(a, env)?;
            expect_int(b, env)
        }
        Formula::Exists(d) => schema_of(d, env).map(|_| ()),
        Formula::Not(g) => check_formula(g, env),
        Formula::Or(g, h) => {
            check_formula(g, env)?;
            check_formula(h, env)
        }
    }
}

/// A problem that passed [`typecheck`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedProblem {
    problem: SourceProblem,
}

impl TypedProblem {
    pub fn problem(&self) -> &SourceProblem {
        &self.problem
    }

    pub fn into_inner(self) -> SourceProblem {
        self.problem
    }

    /// Schema of a table expression appearing at top level of this problem.
    pub fn schema(&self, d: &Table) -> Result<DType, TypeError> {
        schema_of(d, &mut TypeEnv::new())
    }
}

pub fn typecheck(problem: &SourceProblem) -> Result<TypedProblem, TypeError> {
    let declared: HashSet<&str> = problem.declarations.iter().map(|d| d.name.as_str()).collect();
    for t in &problem.tables {
        for row in t.rows() {
            for cell in row {
                let mut vars = Vec::new();
                match cell {
                    Cell::Lit(l) => vars.extend(l.var_name().map(str::to_string)),
                    Cell::Expr(e) => collect_vars(e, &mut vars),
                }
                if let Some(v) = vars.into_iter().find(|v| !declared.contains(v.as_str())) {
                    return Err(TypeError::UnknownCellVariable {
                        table: t.name().to_string(),
                        var: v,
                    });
                }
            }
        }
        schema_of(&Table::Input(t.clone()), &mut TypeEnv::new())?;
    }
    check_formula(&problem.assertion, &mut TypeEnv::new())?;
    if let Some(obj) = &problem.objective {
        match type_of_term(&obj.term, &TypeEnv::new())? {
            DType::Int => {}
            other => return Err(TypeError::ObjectiveNotInt(other)),
        }
    }
    Ok(TypedProblem {
        problem: problem.clone(),
    })
}

pub(crate) fn collect_vars(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Const(_) => {}
        Term::Var(v) => out.push(v.clone()),
        Term::Add(a, b) | Term::Pair(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Term::Scale(_, a) | Term::Fst(a) | Term::Snd(a) => collect_vars(a, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::InputTable;
    use std::sync::Arc;

    fn t2() -> Arc<InputTable> {
        Arc::new(InputTable::from_ints("T", &[&[1, 2], &[3, 4]]).unwrap())
    }

    #[test]
    fn accessor_on_pair_is_int() {
        let t = Term::fst(Term::pair(Term::Const(1), Term::Const(2)));
        assert_eq!(type_of_term(&t, &TypeEnv::new()), Ok(DType::Int));
    }

    #[test]
    fn accessor_on_int_is_rejected() {
        let t = Term::fst(Term::Const(5));
        assert_eq!(
            type_of_term(&t, &TypeEnv::new()),
            Err(TypeError::AccessorOnInt { accessor: "fst" })
        );
    }

    #[test]
    fn product_schema_pairs_the_operands() {
        let s = Arc::new(InputTable::from_ints("S", &[&[1]]).unwrap());
        let d = Table::prod(Table::input(&t2()), Table::input(&s));
        let schema = schema_of(&d, &mut TypeEnv::new()).unwrap();
        assert_eq!(schema, DType::pair(DType::tuple(2), DType::Int));
    }

    #[test]
    fn union_needs_equal_schemas() {
        let s = Arc::new(InputTable::from_ints("S", &[&[1]]).unwrap());
        let d = Table::union(Table::input(&t2()), Table::input(&s));
        assert!(matches!(
            schema_of(&d, &mut TypeEnv::new()),
            Err(TypeError::UnionSchemaMismatch { .. })
        ));
    }

    #[test]
    fn selection_binder_has_table_schema() {
        let r = Term::var("r");
        let ok = Table::sel("r", Formula::le(Term::fst(r.clone()), Term::Const(1)), Table::input(&t2()));
        assert_eq!(schema_of(&ok, &mut TypeEnv::new()), Ok(DType::tuple(2)));
        let bad = Table::sel("r", Formula::le(r, Term::Const(1)), Table::input(&t2()));
        assert!(matches!(
            schema_of(&bad, &mut TypeEnv::new()),
            Err(TypeError::ArithmeticOnPair(_))
        ));
    }

    #[test]
    fn binder_does_not_scope_over_its_table() {
        // `x` inside the table expression refers to the integer variable.
        let inner = Table::sel("y", Formula::le(Term::var("x"), Term::Const(0)), Table::input(&t2()));
        let outer = Table::sel("x", Formula::le(Term::fst(Term::var("x")), Term::Const(0)), inner);
        assert!(schema_of(&outer, &mut TypeEnv::new()).is_ok());
    }
}
