use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::ast::{
    Cell, Direction, Formula, InputTable, Objective, SourceProblem, Table, Term, VarDecl,
};

use super::csv_table::{ingest_csv, is_identifier, parse_cell_token};
use super::sexpr::{read_all, Pos, SExpr};
use super::{ParseError, ParseErrorKind};

/// Parse a problem. Relative CSV paths resolve against the working directory.
pub fn parse(text: &str) -> Result<SourceProblem, ParseError> {
    parse_with_base(text, None)
}

/// Parse a problem file; relative CSV paths resolve against its directory.
pub fn parse_file(path: &Path) -> Result<SourceProblem, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ParseError::new(
            ParseErrorKind::Io,
            None,
            format!("cannot read `{}`: {e}", path.display()),
        )
    })?;
    parse_with_base(&text, path.parent())
}

pub fn parse_with_base(text: &str, base: Option<&Path>) -> Result<SourceProblem, ParseError> {
    let forms = read_all(text)?;
    let mut p = Parser {
        vars: HashSet::new(),
        tables: HashMap::new(),
        binders: Vec::new(),
        base: base.map(Path::to_path_buf),
    };
    let mut declarations = Vec::new();
    let mut tables = Vec::new();

    // Declarations first, so commands may appear in any order.
    for form in &forms {
        let (head, args, pos) = command(form)?;
        match head {
            "declare-int" => {
                let decl = p.declaration(args, pos)?;
                declarations.push(decl);
            }
            "table" => {
                let t = p.table_decl(args, pos)?;
                tables.push(t);
            }
            "assert" | "minimize" | "maximize" => {}
            other => {
                return Err(ParseError::syntax(pos, format!("unknown command `{other}`")));
            }
        }
    }
    for t in &tables {
        p.check_cells(t)?;
    }

    let mut assertions = Vec::new();
    let mut objective = None;
    for form in &forms {
        let (head, args, pos) = command(form)?;
        match head {
            "assert" => {
                let [f] = args else {
                    return Err(ParseError::syntax(pos, "`assert` takes one formula"));
                };
                assertions.push(p.formula(f)?);
            }
            "minimize" | "maximize" => {
                let [t] = args else {
                    return Err(ParseError::syntax(pos, format!("`{head}` takes one term")));
                };
                if objective.is_some() {
                    return Err(ParseError::new(
                        ParseErrorKind::Duplicate,
                        Some(pos),
                        "more than one objective",
                    ));
                }
                let direction = if head == "minimize" {
                    Direction::Minimize
                } else {
                    Direction::Maximize
                };
                objective = Some(Objective {
                    direction,
                    term: p.term(t)?,
                });
            }
            _ => {}
        }
    }

    Ok(SourceProblem {
        declarations,
        tables,
        assertion: Formula::and_all(assertions),
        objective,
    })
}

fn command(form: &SExpr) -> Result<(&str, &[SExpr], Pos), ParseError> {
    match form {
        SExpr::List(items, pos) => match items.split_first() {
            Some((SExpr::Atom(head, _), args)) => Ok((head.as_str(), args, *pos)),
            _ => Err(ParseError::syntax(*pos, "expected a command")),
        },
        other => Err(ParseError::syntax(other.pos(), "expected a command")),
    }
}

fn int_literal(s: &str) -> Option<Result<i64, String>> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(
        s.parse::<i64>()
            .map_err(|_| format!("integer literal `{s}` does not fit in 64 bits")),
    )
}

fn expect_int(e: &SExpr) -> Result<i64, ParseError> {
    match e.as_atom().and_then(int_literal) {
        Some(Ok(v)) => Ok(v),
        Some(Err(m)) => Err(ParseError::syntax(e.pos(), m)),
        None => Err(ParseError::syntax(e.pos(), "expected an integer literal")),
    }
}

struct Parser {
    vars: HashSet<String>,
    tables: HashMap<String, Arc<InputTable>>,
    binders: Vec<String>,
    base: Option<PathBuf>,
}

impl Parser {
    fn ident(&self, e: &SExpr) -> Result<String, ParseError> {
        match e.as_atom() {
            Some(a) if is_identifier(a) => Ok(a.to_string()),
            _ => Err(ParseError::syntax(e.pos(), "expected an identifier")),
        }
    }

    fn declaration(&mut self, args: &[SExpr], pos: Pos) -> Result<VarDecl, ParseError> {
        let bound = |e: &SExpr| -> Result<Option<i64>, ParseError> {
            if e.as_atom() == Some("*") {
                Ok(None)
            } else {
                expect_int(e).map(Some)
            }
        };
        let decl = match args {
            [name] => VarDecl::free(self.ident(name)?),
            [name, lo, hi] => VarDecl::new(self.ident(name)?, bound(lo)?, bound(hi)?),
            _ => {
                return Err(ParseError::syntax(
                    pos,
                    "`declare-int` takes a name and optionally two bounds",
                ))
            }
        };
        if let (Some(lo), Some(hi)) = (decl.lb, decl.ub) {
            if lo > hi {
                return Err(ParseError::syntax(
                    pos,
                    format!("empty bounds [{lo}, {hi}] for `{}`", decl.name),
                ));
            }
        }
        if !self.vars.insert(decl.name.clone()) {
            return Err(ParseError::new(
                ParseErrorKind::Duplicate,
                Some(pos),
                format!("duplicate declaration of `{}`", decl.name),
            ));
        }
        Ok(decl)
    }

    fn table_decl(&mut self, args: &[SExpr], pos: Pos) -> Result<Arc<InputTable>, ParseError> {
        let table_err = |m: String| ParseError::new(ParseErrorKind::Table, Some(pos), m);
        let (name, table) = match args {
            [name, kw, SExpr::Str(path, _)] if kw.as_atom() == Some("csv") => {
                let name = self.ident(name)?;
                let mut full = PathBuf::from(path);
                if full.is_relative() {
                    if let Some(base) = &self.base {
                        full = base.join(full);
                    }
                }
                let t = ingest_csv(&full, &name).map_err(|e| ParseError { pos: Some(pos), ..e })?;
                (name, t)
            }
            [name, SExpr::List(rows, _)] => {
                let name = self.ident(name)?;
                let rows = rows
                    .iter()
                    .map(|r| match r {
                        SExpr::List(cells, _) => cells.iter().map(|c| self.cell(c)).collect(),
                        other => Err(ParseError::syntax(other.pos(), "expected a row list")),
                    })
                    .collect::<Result<Vec<Vec<Cell>>, _>>()?;
                let t = InputTable::new(name.clone(), rows).map_err(|e| table_err(e.to_string()))?;
                (name, t)
            }
            _ => {
                return Err(ParseError::syntax(
                    pos,
                    "expected `(table NAME ((cells...) ...))` or `(table NAME csv \"path\")`",
                ))
            }
        };
        if self.tables.contains_key(&name) {
            return Err(ParseError::new(
                ParseErrorKind::Duplicate,
                Some(pos),
                format!("duplicate table `{name}`"),
            ));
        }
        let table = Arc::new(table);
        self.tables.insert(name, Arc::clone(&table));
        Ok(table)
    }

    fn cell(&self, e: &SExpr) -> Result<Cell, ParseError> {
        match e {
            SExpr::Atom(tok, pos) => parse_cell_token(tok)
                .map(Cell::Lit)
                .map_err(|m| ParseError::syntax(*pos, m)),
            SExpr::List(..) => Ok(Cell::Expr(self.term(e)?)),
            SExpr::Str(_, pos) => Err(ParseError::syntax(*pos, "unexpected string in table")),
        }
    }

    fn check_cells(&self, t: &InputTable) -> Result<(), ParseError> {
        for row in t.rows() {
            for cell in row {
                if let Cell::Lit(l) = cell {
                    if let Some(v) = l.var_name() {
                        if !self.vars.contains(v) {
                            return Err(ParseError::new(
                                ParseErrorKind::Undeclared,
                                None,
                                format!("table `{}` refers to undeclared variable `{v}`", t.name()),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn term(&self, e: &SExpr) -> Result<Term, ParseError> {
        match e {
            SExpr::Atom(a, pos) => {
                if let Some(v) = int_literal(a) {
                    return v.map(Term::Const).map_err(|m| ParseError::syntax(*pos, m));
                }
                if !is_identifier(a) {
                    return Err(ParseError::syntax(*pos, format!("unexpected `{a}` in term")));
                }
                if self.binders.iter().any(|b| b == a) || self.vars.contains(a) {
                    Ok(Term::Var(a.clone()))
                } else {
                    Err(ParseError::new(
                        ParseErrorKind::Undeclared,
                        Some(*pos),
                        format!("undeclared variable `{a}`"),
                    ))
                }
            }
            SExpr::Str(_, pos) => Err(ParseError::syntax(*pos, "unexpected string in term")),
            SExpr::List(items, pos) => {
                let Some((head, args)) = items.split_first() else {
                    return Err(ParseError::syntax(*pos, "empty term"));
                };
                let head = head
                    .as_atom()
                    .ok_or_else(|| ParseError::syntax(head.pos(), "expected an operator"))?;
                let arity = |n: usize| -> Result<(), ParseError> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(ParseError::syntax(*pos, format!("`{head}` takes {n} argument(s)")))
                    }
                };
                match head {
                    "+" => {
                        if args.len() < 2 {
                            return Err(ParseError::syntax(*pos, "`+` takes at least two arguments"));
                        }
                        let mut it = args.iter().map(|a| self.term(a));
                        let first = it.next().expect("non-empty")?;
                        it.try_fold(first, |acc, t| Ok(Term::add(acc, t?)))
                    }
                    "-" => match args {
                        [a] => Ok(Term::scale(-1, self.term(a)?)),
                        [a, rest @ ..] if !rest.is_empty() => {
                            let mut acc = self.term(a)?;
                            for r in rest {
                                acc = Term::sub(acc, self.term(r)?);
                            }
                            Ok(acc)
                        }
                        _ => Err(ParseError::syntax(*pos, "`-` takes at least one argument")),
                    },
                    "*" => {
                        arity(2)?;
                        if let Some(Ok(k)) = args[0].as_atom().and_then(int_literal) {
                            Ok(Term::scale(k, self.term(&args[1])?))
                        } else if let Some(Ok(k)) = args[1].as_atom().and_then(int_literal) {
                            Ok(Term::scale(k, self.term(&args[0])?))
                        } else {
                            Err(ParseError::syntax(
                                *pos,
                                "`*` needs an integer literal coefficient",
                            ))
                        }
                    }
                    "pair" => {
                        arity(2)?;
                        Ok(Term::pair(self.term(&args[0])?, self.term(&args[1])?))
                    }
                    "fst" => {
                        arity(1)?;
                        Ok(Term::fst(self.term(&args[0])?))
                    }
                    "snd" => {
                        arity(1)?;
                        Ok(Term::snd(self.term(&args[0])?))
                    }
                    other => Err(ParseError::syntax(*pos, format!("unknown term operator `{other}`"))),
                }
            }
        }
    }

    fn formula(&mut self, e: &SExpr) -> Result<Formula, ParseError> {
        match e {
            SExpr::Atom(a, pos) => match a.as_str() {
                "true" => Ok(Formula::truth()),
                "false" => Ok(Formula::falsity()),
                _ => Err(ParseError::syntax(*pos, format!("expected a formula, found `{a}`"))),
            },
            SExpr::Str(_, pos) => Err(ParseError::syntax(*pos, "expected a formula")),
            SExpr::List(items, pos) => {
                let Some((head, args)) = items.split_first() else {
                    return Err(ParseError::syntax(*pos, "empty formula"));
                };
                let head = head
                    .as_atom()
                    .ok_or_else(|| ParseError::syntax(head.pos(), "expected an operator"))?;
                let arity = |n: usize| -> Result<(), ParseError> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(ParseError::syntax(*pos, format!("`{head}` takes {n} argument(s)")))
                    }
                };
                let compare = |p: &Self, build: fn(Term, Term) -> Formula| -> Result<Formula, ParseError> {
                    arity(2)?;
                    Ok(build(p.term(&args[0])?, p.term(&args[1])?))
                };
                match head {
                    "<=" => compare(self, Formula::le),
                    ">=" => compare(self, Formula::ge),
                    "<" => compare(self, Formula::lt),
                    ">" => compare(self, Formula::gt),
                    "=" => compare(self, Formula::eq),
                    "distinct" | "!=" => compare(self, Formula::ne),
                    "not" => {
                        arity(1)?;
                        Ok(Formula::not(self.formula(&args[0])?))
                    }
                    "or" | "and" => {
                        if args.len() < 2 {
                            return Err(ParseError::syntax(*pos, format!("`{head}` takes at least two arguments")));
                        }
                        let fs = args.iter().map(|a| self.formula(a)).collect::<Result<Vec<_>, _>>()?;
                        Ok(if head == "or" {
                            Formula::or_all(fs)
                        } else {
                            Formula::and_all(fs)
                        })
                    }
                    "=>" => {
                        arity(2)?;
                        Ok(Formula::implies(self.formula(&args[0])?, self.formula(&args[1])?))
                    }
                    "exists" => {
                        arity(1)?;
                        Ok(Formula::exists(self.table(&args[0])?))
                    }
                    other => Err(ParseError::syntax(*pos, format!("unknown formula operator `{other}`"))),
                }
            }
        }
    }

    fn table(&mut self, e: &SExpr) -> Result<Table, ParseError> {
        match e {
            SExpr::Atom(a, pos) => match self.tables.get(a) {
                Some(t) => Ok(Table::input(t)),
                None => Err(ParseError::new(
                    ParseErrorKind::Undeclared,
                    Some(*pos),
                    format!("undeclared table `{a}`"),
                )),
            },
            SExpr::Str(_, pos) => Err(ParseError::syntax(*pos, "expected a table")),
            SExpr::List(items, pos) => {
                let Some((head, args)) = items.split_first() else {
                    return Err(ParseError::syntax(*pos, "empty table expression"));
                };
                match head.as_atom() {
                    Some("sel") => {
                        let [binder, cond, table] = args else {
                            return Err(ParseError::syntax(*pos, "`sel` takes a binder, a formula and a table"));
                        };
                        let binder = self.ident(binder)?;
                        // The binder is not in scope in the table operand.
                        let table = self.table(table)?;
                        self.binders.push(binder.clone());
                        let cond = self.formula(cond);
                        self.binders.pop();
                        Ok(Table::sel(binder, cond?, table))
                    }
                    Some(op @ ("prod" | "union")) => {
                        if args.len() < 2 {
                            return Err(ParseError::syntax(*pos, format!("`{op}` takes at least two tables")));
                        }
                        let ts = args.iter().map(|a| self.table(a)).collect::<Result<Vec<_>, _>>()?;
                        let join = if op == "prod" { Table::prod } else { Table::union };
                        Ok(ts.into_iter().reduce(join).expect("at least two"))
                    }
                    _ => Err(ParseError::syntax(head.pos(), "expected `sel`, `prod` or `union`")),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_decls(body: &str) -> Result<SourceProblem, ParseError> {
        parse(&format!(
            "(declare-int x) (declare-int y 0 10) (table T ((1 2) (?y 4))) {body}"
        ))
    }

    #[test]
    fn le_maps_directly() {
        let p = with_decls("(assert (<= x 5))").unwrap();
        assert_eq!(p.assertion, Formula::le(Term::var("x"), Term::Const(5)));
    }

    #[test]
    fn selection_maps_directly() {
        let p = with_decls("(assert (exists (sel r (= (fst r) 1) T)))").unwrap();
        let t = p.table("T").unwrap();
        let expected = Formula::exists(Table::sel(
            "r",
            Formula::eq(Term::fst(Term::var("r")), Term::Const(1)),
            Table::input(t),
        ));
        assert_eq!(p.assertion, expected);
    }

    #[test]
    fn unbalanced_form_errors_at_end_of_input() {
        let err = parse("(assert (<= x").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert!(err.message.contains("end of input"));
    }

    #[test]
    fn undeclared_identifiers() {
        let err = with_decls("(assert (<= z 5))").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Undeclared);
        assert_eq!(err.pos.map(|p| p.line), Some(1));
        let err = with_decls("(assert (exists U))").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Undeclared);
        let err = parse("(table T ((?q)))").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Undeclared);
    }

    #[test]
    fn duplicates() {
        assert_eq!(
            parse("(declare-int x) (declare-int x)").unwrap_err().kind,
            ParseErrorKind::Duplicate
        );
        assert_eq!(
            parse("(table T ((1))) (table T ((2)))").unwrap_err().kind,
            ParseErrorKind::Duplicate
        );
    }

    #[test]
    fn binder_scopes_only_the_condition() {
        // `r` is not visible in the table operand.
        let err = with_decls("(assert (exists (sel r true (sel s (<= r 0) T))))").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Undeclared);
        assert!(with_decls("(assert (exists (sel r (exists (sel s (<= (fst r) (fst s)) T)) T)))").is_ok());
    }

    #[test]
    fn integer_overflow_is_an_error() {
        let err = with_decls("(assert (<= x 9223372036854775808))").unwrap_err();
        assert!(err.message.contains("64 bits"));
        assert!(with_decls("(assert (<= x -9223372036854775808))").is_ok());
    }

    #[test]
    fn multiple_asserts_are_conjoined_and_objective_read() {
        let p = with_decls("(assert (<= x 1)) (assert (<= y 2)) (maximize (+ x (* 2 y)))").unwrap();
        assert_eq!(
            p.assertion,
            Formula::and(
                Formula::le(Term::var("x"), Term::Const(1)),
                Formula::le(Term::var("y"), Term::Const(2))
            )
        );
        let obj = p.objective.unwrap();
        assert_eq!(obj.direction, Direction::Maximize);
        assert_eq!(
            obj.term,
            Term::add(Term::var("x"), Term::scale(2, Term::var("y")))
        );
        assert_eq!(p.declarations[1], VarDecl::bounded("y", 0, 10));
    }

    #[test]
    fn term_cells_in_inline_tables() {
        let p = parse("(declare-int a) (table T ((1 (+ a 2))))").unwrap();
        assert_eq!(
            p.tables[0].rows()[0][1],
            Cell::Expr(Term::add(Term::var("a"), Term::Const(2)))
        );
    }
}
