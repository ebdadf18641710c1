//! Seeded generators for benchmark problems, plus a writer that stores
//! large tables in sibling CSV files.
//!
//! Four application families are provided (portfolio selection, foreign
//! keys, how-to queries over a join, geographic boxes), together with a
//! random generator for small existential problems and the k-fold product
//! family used to measure reduction growth.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{Cell, DType, Direction, Formula, InputTable, Objective, SourceProblem, Table, Term, VarDecl};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Portfolio,
    ForeignKeys,
    HowTo,
    GeoBox,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Portfolio, Family::ForeignKeys, Family::HowTo, Family::GeoBox];

    pub fn name(self) -> &'static str {
        match self {
            Family::Portfolio => "portfolio",
            Family::ForeignKeys => "foreign-keys",
            Family::HowTo => "how-to",
            Family::GeoBox => "geo-box",
        }
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BenchError::Param(format!("unknown family `{s}`")))
    }
}

/// Parameters of one generated instance.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchSpec {
    pub family: Family,
    /// Rows of the main table.
    pub rows: usize,
    /// Number of picks (portfolio stocks, how-to employees, observations).
    pub picks: usize,
    /// Fraction of symbolic cells where the family has a choice.
    pub symbolic: f64,
    pub seed: u64,
    /// Portfolio sector cap as a fraction of the total amount.
    pub sector_cap: (i64, i64),
    /// Geo-box: leave the species of interest out of the data.
    pub absent: bool,
}

impl BenchSpec {
    pub fn new(family: Family, rows: usize, picks: usize, seed: u64) -> Self {
        BenchSpec {
            family,
            rows,
            picks,
            symbolic: 1.0,
            seed,
            sector_cap: (1, 3),
            absent: false,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.rows == 0 {
            return Err(BenchError::Param("rows must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.symbolic) {
            return Err(BenchError::Param("symbolic fraction must lie in [0, 1]".into()));
        }
        let (num, den) = self.sector_cap;
        if num < 0 || den <= 0 {
            return Err(BenchError::Param("sector cap must be a nonnegative fraction".into()));
        }
        let needs_picks = matches!(self.family, Family::Portfolio | Family::GeoBox | Family::HowTo);
        if needs_picks && self.picks == 0 {
            return Err(BenchError::Param("picks must be at least 1".into()));
        }
        if self.family == Family::Portfolio && self.picks > self.rows {
            return Err(BenchError::Param(format!(
                "cannot pick {} distinct stocks from {} rows",
                self.picks, self.rows
            )));
        }
        Ok(())
    }
}

pub fn generate(spec: &BenchSpec) -> Result<SourceProblem, BenchError> {
    spec.validate()?;
    Ok(match spec.family {
        Family::Portfolio => Portfolio::generate(spec)?.to_problem(),
        Family::ForeignKeys => foreign_keys(spec),
        Family::HowTo => how_to(spec),
        Family::GeoBox => geo_box(spec),
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sum(terms: impl IntoIterator<Item = Term>) -> Term {
    terms.into_iter().reduce(Term::add).unwrap_or(Term::Const(0))
}

fn table(name: &str, rows: Vec<Vec<Cell>>) -> Arc<InputTable> {
    Arc::new(InputTable::new(name, rows).expect("generated tables are rectangular and nonempty"))
}

fn col(binder: &str, i: usize, arity: usize) -> Term {
    Term::column(Term::var(binder), i, arity)
}

/// Stocks are `(id, cap, sector)`, quotes are `(id, diff)`. Cap code 0 is
/// a small-cap stock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Portfolio {
    pub stocks: Vec<[i64; 3]>,
    pub quotes: Vec<[i64; 2]>,
    pub amounts: Vec<i64>,
    pub sectors: i64,
    pub sector_cap: (i64, i64),
    pub smallcap_cap: (i64, i64),
}

pub const PORTFOLIO_SECTORS: i64 = 3;

impl Portfolio {
    pub fn generate(spec: &BenchSpec) -> Result<Self, BenchError> {
        spec.validate()?;
        let mut r = rng(spec.seed);
        let stocks: Vec<[i64; 3]> = (1..=spec.rows as i64)
            .map(|id| [id, r.gen_range(0..3), r.gen_range(0..PORTFOLIO_SECTORS)])
            .collect();
        let mut quotes: Vec<[i64; 2]> = stocks.iter().map(|s| [s[0], r.gen_range(-20..=40)]).collect();
        quotes.shuffle(&mut r);
        let amounts = (0..spec.picks).map(|_| r.gen_range(1..=5)).collect();
        Ok(Portfolio {
            stocks,
            quotes,
            amounts,
            sectors: PORTFOLIO_SECTORS,
            sector_cap: spec.sector_cap,
            smallcap_cap: (1, 4),
        })
    }

    pub fn picks(&self) -> usize {
        self.amounts.len()
    }

    pub fn total(&self) -> i64 {
        self.amounts.iter().sum()
    }

    pub fn to_problem(&self) -> SourceProblem {
        let n = self.picks();
        let rows = self.stocks.len() as i64;
        let (dmin, dmax) = self
            .quotes
            .iter()
            .fold((i64::MAX, i64::MIN), |(lo, hi), q| (lo.min(q[1]), hi.max(q[1])));
        let stocks = table(
            "stocks",
            self.stocks.iter().map(|s| s.iter().map(|&c| Cell::constant(c)).collect()).collect(),
        );
        let quotes = table(
            "quotes",
            self.quotes.iter().map(|q| q.iter().map(|&c| Cell::constant(c)).collect()).collect(),
        );

        let mut decls = Vec::new();
        let mut parts = Vec::new();
        let total = self.total();
        for i in 0..n {
            let (id, cap, sector, diff) = (format!("id_{i}"), format!("cap_{i}"), format!("sector_{i}"), format!("diff_{i}"));
            decls.push(VarDecl::bounded(&id, 1, rows));
            decls.push(VarDecl::bounded(&cap, 0, 2));
            decls.push(VarDecl::bounded(&sector, 0, self.sectors - 1));
            decls.push(VarDecl::bounded(&diff, dmin, dmax));
            parts.push(Formula::exists(Table::sel(
                "s",
                Formula::and_all([
                    Formula::eq(col("s", 0, 3), Term::var(&id)),
                    Formula::eq(col("s", 1, 3), Term::var(&cap)),
                    Formula::eq(col("s", 2, 3), Term::var(&sector)),
                ]),
                Table::input(&stocks),
            )));
            parts.push(Formula::exists(Table::sel(
                "q",
                Formula::and(
                    Formula::eq(col("q", 0, 2), Term::var(&id)),
                    Formula::eq(col("q", 1, 2), Term::var(&diff)),
                ),
                Table::input(&quotes),
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                parts.push(Formula::ne(Term::var(format!("id_{i}")), Term::var(format!("id_{j}"))));
            }
        }
        let indicator = |decls: &mut Vec<VarDecl>, parts: &mut Vec<Formula>, name: String, var: String, code: i64| {
            decls.push(VarDecl::bounded(&name, 0, 1));
            let on = Formula::eq(Term::var(&name), Term::Const(1));
            parts.push(Formula::implies(on.clone(), Formula::eq(Term::var(&var), Term::Const(code))));
            parts.push(Formula::implies(Formula::not(on), Formula::ne(Term::var(&var), Term::Const(code))));
            Term::var(name)
        };
        let cap_constraint = |ind: Vec<Term>, (num, den): (i64, i64)| {
            let lhs = sum(ind.into_iter().zip(&self.amounts).map(|(t, &a)| Term::scale(den * a, t)));
            Formula::le(lhs, Term::Const(num * total))
        };
        for s in 0..self.sectors {
            let ind = (0..n)
                .map(|i| indicator(&mut decls, &mut parts, format!("in_sector_{s}_{i}"), format!("sector_{i}"), s))
                .collect();
            parts.push(cap_constraint(ind, self.sector_cap));
        }
        let small = (0..n)
            .map(|i| indicator(&mut decls, &mut parts, format!("is_small_{i}"), format!("cap_{i}"), 0))
            .collect();
        parts.push(cap_constraint(small, self.smallcap_cap));

        let objective = sum(self.amounts.iter().enumerate().map(|(i, &a)| Term::scale(a, Term::var(format!("diff_{i}")))));
        SourceProblem {
            declarations: decls,
            tables: vec![stocks, quotes],
            assertion: Formula::and_all(parts),
            objective: Some(Objective {
                direction: Direction::Maximize,
                term: objective,
            }),
        }
    }
}

/// `employees(id, age)` with scattered ids and `incomes(id, amount)` whose
/// id cells are symbolic for the requested fraction of rows. Every incomes
/// row must reference an employee.
fn foreign_keys(spec: &BenchSpec) -> SourceProblem {
    let mut r = rng(spec.seed);
    let n = spec.rows;
    let mut ids: Vec<i64> = (1..=3 * n as i64).collect();
    ids.shuffle(&mut r);
    ids.truncate(n);
    ids.sort_unstable();
    let employees = table(
        "employees",
        ids.iter().map(|&id| vec![Cell::constant(id), Cell::constant(r.gen_range(18..=70))]).collect(),
    );
    let mut decls = Vec::new();
    let mut keys = Vec::new();
    let mut income_rows = Vec::new();
    for j in 0..n {
        let amount = Cell::constant(r.gen_range(1_000..=9_000));
        if r.gen_bool(spec.symbolic) {
            let v = format!("k_{j}");
            decls.push(VarDecl::free(&v));
            income_rows.push(vec![Cell::var(&v), amount]);
            keys.push(Term::var(v));
        } else {
            let id = *ids.choose(&mut r).expect("nonempty");
            income_rows.push(vec![Cell::constant(id), amount]);
        }
    }
    let incomes = table("incomes", income_rows);
    let parts: Vec<Formula> = keys
        .into_iter()
        .map(|k| Formula::exists(Table::sel("e", Formula::eq(col("e", 0, 2), k), Table::input(&employees))))
        .collect();
    SourceProblem {
        declarations: decls,
        tables: vec![employees, incomes],
        assertion: Formula::and_all(parts),
        objective: None,
    }
}

/// `employees(id, age, level, base)` and `bonus(level, amount)` with
/// symbolic amounts. Asks for `picks` distinct employees under 30 whose
/// base pay plus level bonus reaches a threshold, within a bonus budget.
fn how_to(spec: &BenchSpec) -> SourceProblem {
    const LEVELS: i64 = 4;
    const THRESHOLD: i64 = 60_000;
    let mut r = rng(spec.seed);
    let employees = table(
        "employees",
        (1..=spec.rows as i64)
            .map(|id| {
                vec![
                    Cell::constant(id),
                    Cell::constant(r.gen_range(20..=65)),
                    Cell::constant(r.gen_range(0..LEVELS)),
                    Cell::constant(r.gen_range(30_000..=58_000)),
                ]
            })
            .collect(),
    );
    let mut decls = Vec::new();
    let mut bonus_rows = Vec::new();
    let mut bonus_vars = Vec::new();
    for l in 0..LEVELS {
        let amount = if r.gen_bool(spec.symbolic) {
            let v = format!("bonus_{l}");
            decls.push(VarDecl::bounded(&v, 0, 20_000));
            bonus_vars.push(Term::var(&v));
            Cell::var(v)
        } else {
            Cell::constant(r.gen_range(0..=5_000))
        };
        bonus_rows.push(vec![Cell::constant(l), amount]);
    }
    let bonus = table("bonus", bonus_rows);
    let mut parts = Vec::new();
    for i in 0..spec.picks {
        let e = format!("e_{i}");
        decls.push(VarDecl::bounded(&e, 1, spec.rows as i64));
        let emp = |c| Term::column(Term::fst(Term::var("p")), c, 4);
        let bon = |c| Term::column(Term::snd(Term::var("p")), c, 2);
        parts.push(Formula::exists(Table::sel(
            "p",
            Formula::and_all([
                Formula::eq(emp(0), Term::var(&e)),
                Formula::lt(emp(1), Term::Const(30)),
                Formula::eq(emp(2), bon(0)),
                Formula::ge(Term::add(emp(3), bon(1)), Term::Const(THRESHOLD)),
            ]),
            Table::prod(Table::input(&employees), Table::input(&bonus)),
        )));
        for j in 0..i {
            parts.push(Formula::ne(Term::var(&e), Term::var(format!("e_{j}"))));
        }
    }
    if !bonus_vars.is_empty() {
        parts.push(Formula::le(sum(bonus_vars), Term::Const(25_000)));
    }
    SourceProblem {
        declarations: decls,
        tables: vec![employees, bonus],
        assertion: Formula::and_all(parts),
        objective: None,
    }
}

/// `obs(id, species, x, y)` on a 100 by 100 grid; asks for `picks`
/// distinct sightings of species 0 inside a box of side at most 25.
fn geo_box(spec: &BenchSpec) -> SourceProblem {
    const SIDE: i64 = 100;
    const BOX: i64 = 25;
    let mut r = rng(spec.seed);
    let low_species = if spec.absent { 1 } else { 0 };
    let obs = table(
        "obs",
        (1..=spec.rows as i64)
            .map(|id| {
                vec![
                    Cell::constant(id),
                    Cell::constant(r.gen_range(low_species..4)),
                    Cell::constant(r.gen_range(0..SIDE)),
                    Cell::constant(r.gen_range(0..SIDE)),
                ]
            })
            .collect(),
    );
    let mut decls: Vec<VarDecl> = ["x_lo", "x_hi", "y_lo", "y_hi"]
        .iter()
        .map(|v| VarDecl::bounded(*v, 0, SIDE - 1))
        .collect();
    let v = |name: &str| Term::var(name);
    let mut parts = vec![
        Formula::le(v("x_lo"), v("x_hi")),
        Formula::le(v("y_lo"), v("y_hi")),
        Formula::le(Term::sub(v("x_hi"), v("x_lo")), Term::Const(BOX)),
        Formula::le(Term::sub(v("y_hi"), v("y_lo")), Term::Const(BOX)),
    ];
    for i in 0..spec.picks {
        let o = format!("o_{i}");
        decls.push(VarDecl::bounded(&o, 1, spec.rows as i64));
        parts.push(Formula::exists(Table::sel(
            "b",
            Formula::and_all([
                Formula::eq(col("b", 0, 4), v(&o)),
                Formula::eq(col("b", 1, 4), Term::Const(0)),
                Formula::le(v("x_lo"), col("b", 2, 4)),
                Formula::le(col("b", 2, 4), v("x_hi")),
                Formula::le(v("y_lo"), col("b", 3, 4)),
                Formula::le(col("b", 3, 4), v("y_hi")),
            ]),
            Table::input(&obs),
        )));
        for j in 0..i {
            parts.push(Formula::ne(v(&o), Term::var(format!("o_{j}"))));
        }
    }
    SourceProblem {
        declarations: decls,
        tables: vec![obs],
        assertion: Formula::and_all(parts),
        objective: None,
    }
}

/// The k-fold product of one `n`-row binary table, under a selection that
/// keeps every row.
pub fn kd_product(k: usize, n: usize, seed: u64) -> (SourceProblem, Table) {
    assert!(k >= 1 && n >= 1);
    let mut r = rng(seed);
    let t = table(
        "T",
        (0..n)
            .map(|_| vec![Cell::constant(r.gen_range(-50..=50)), Cell::constant(r.gen_range(-50..=50))])
            .collect(),
    );
    let product = (1..k).fold(Table::input(&t), |acc, _| Table::prod(Table::input(&t), acc));
    let problem = SourceProblem {
        declarations: vec![],
        tables: vec![t],
        assertion: Formula::exists(Table::sel("r", Formula::truth(), product.clone())),
        objective: None,
    };
    (problem, product)
}

/// Size limits for [`random_existential`].
#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    pub max_tables: usize,
    pub max_rows: usize,
    pub max_cols: usize,
    pub users: usize,
    pub bound: i64,
    pub symbolic: f64,
    pub max_memberships: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_tables: 3,
            max_rows: 8,
            max_cols: 3,
            users: 2,
            bound: 10,
            symbolic: 0.3,
            max_memberships: 2,
        }
    }
}

struct RandomGen<'a> {
    r: ChaCha8Rng,
    spec: &'a RandomSpec,
    tables: Vec<Arc<InputTable>>,
    binders: usize,
    memberships: usize,
}

/// Integer leaves of a row of the given schema.
fn leaves(row: Term, ty: &DType) -> Vec<Term> {
    match ty {
        DType::Int => vec![row],
        DType::Pair(l, rt) => {
            let mut out = leaves(Term::fst(row.clone()), l);
            out.extend(leaves(Term::snd(row), rt));
            out
        }
    }
}

impl RandomGen<'_> {
    fn user(&mut self) -> Term {
        Term::var(format!("v{}", self.r.gen_range(0..self.spec.users)))
    }

    fn constant(&mut self) -> Term {
        Term::Const(self.r.gen_range(-self.spec.bound..=self.spec.bound))
    }

    fn operand(&mut self, scope: &[Term]) -> Term {
        match self.r.gen_range(0..10) {
            0..=4 if !scope.is_empty() => scope[self.r.gen_range(0..scope.len())].clone(),
            0..=6 => self.user(),
            _ => self.constant(),
        }
    }

    fn linear(&mut self, scope: &[Term]) -> Term {
        let t = self.operand(scope);
        match self.r.gen_range(0..6) {
            0 => Term::add(t, self.operand(scope)),
            1 => Term::scale(self.r.gen_range(-2..=3), t),
            2 => Term::sub(t, self.constant()),
            _ => t,
        }
    }

    fn comparison(&mut self, scope: &[Term]) -> Formula {
        let a = self.linear(scope);
        let b = self.operand(scope);
        match self.r.gen_range(0..5) {
            0 => Formula::le(a, b),
            1 => Formula::lt(a, b),
            2 => Formula::eq(a, b),
            3 => Formula::ne(a, b),
            _ => Formula::ge(a, b),
        }
    }

    fn input(&mut self) -> (Table, DType) {
        let t = Arc::clone(&self.tables[self.r.gen_range(0..self.tables.len())]);
        let ty = t.schema();
        (Table::input(&t), ty)
    }

    fn fresh_binder(&mut self) -> String {
        self.binders += 1;
        format!("r{}", self.binders)
    }

    fn table_expr(&mut self, depth: usize, scope: &[Term]) -> (Table, DType) {
        if depth == 0 {
            return self.input();
        }
        match self.r.gen_range(0..10) {
            0..=4 => {
                let (inner, ty) = self.table_expr(depth - 1, scope);
                let b = self.fresh_binder();
                let mut inner_scope = scope.to_vec();
                inner_scope.extend(leaves(Term::var(&b), &ty));
                let cond = self.condition(&inner_scope);
                (Table::sel(b, cond, inner), ty)
            }
            5..=6 => {
                let (a, ta) = self.input();
                let (b, tb) = self.input();
                if ta.width() + tb.width() > 4 {
                    return (a, ta);
                }
                (Table::prod(a, b), DType::pair(ta, tb))
            }
            7 => {
                let (a, ta) = self.input();
                let same: Vec<_> = self.tables.iter().filter(|t| t.schema() == ta).cloned().collect();
                let other = Arc::clone(&same[self.r.gen_range(0..same.len())]);
                (Table::union(a, Table::input(&other)), ta)
            }
            _ => self.input(),
        }
    }

    fn condition(&mut self, scope: &[Term]) -> Formula {
        let first = self.comparison(scope);
        match self.r.gen_range(0..6) {
            0 => Formula::and(first, self.comparison(scope)),
            1 => Formula::or(first, self.comparison(scope)),
            2 if self.memberships < self.spec.max_memberships => {
                self.memberships += 1;
                let (t, ty) = self.input();
                let b = self.fresh_binder();
                let mut inner = scope.to_vec();
                let own = leaves(Term::var(&b), &ty);
                inner.extend(own.iter().cloned());
                let link = Formula::eq(own[0].clone(), self.operand(scope));
                Formula::and(first, Formula::exists(Table::sel(b, link, t)))
            }
            _ => first,
        }
    }

    fn formula(&mut self, depth: usize, positive: bool) -> Formula {
        let choice = if depth == 0 { 0 } else { self.r.gen_range(0..8) };
        match choice {
            1..=2 if positive && self.memberships < self.spec.max_memberships => {
                self.memberships += 1;
                let (t, _) = self.table_expr(2, &[]);
                Formula::exists(t)
            }
            3 => Formula::not(self.formula(depth - 1, !positive)),
            4 => Formula::or(self.formula(depth - 1, positive), self.formula(depth - 1, positive)),
            5 => Formula::and(self.formula(depth - 1, positive), self.formula(depth - 1, positive)),
            _ => self.comparison(&[]),
        }
    }
}

/// A random problem in the existential fragment: every `exists` occurs
/// under an even number of negations. User variables `v0, v1, ...` are
/// declared in `[-bound, bound]`; symbolic cells reference them.
pub fn random_existential(spec: &RandomSpec, seed: u64) -> SourceProblem {
    let mut r = rng(seed);
    let users: Vec<String> = (0..spec.users).map(|i| format!("v{i}")).collect();
    let ntables = r.gen_range(1..=spec.max_tables);
    let mut tables = Vec::new();
    for t in 0..ntables {
        let rows = r.gen_range(1..=spec.max_rows);
        let cols = r.gen_range(1..=spec.max_cols);
        let body = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if !users.is_empty() && r.gen_bool(spec.symbolic) {
                            let v = users.choose(&mut r).expect("nonempty");
                            match r.gen_range(-2..=2) {
                                0 => Cell::var(v),
                                c => Cell::offset(v, c),
                            }
                        } else {
                            Cell::constant(r.gen_range(-spec.bound..=spec.bound))
                        }
                    })
                    .collect()
            })
            .collect();
        tables.push(table(&format!("T{t}"), body));
    }
    let mut g = RandomGen {
        r,
        spec,
        tables,
        binders: 0,
        memberships: 0,
    };
    let (t, _) = g.table_expr(2, &[]);
    g.memberships += 1;
    let mut parts = vec![Formula::exists(t)];
    for _ in 0..g.r.gen_range(0..=2) {
        parts.push(g.formula(2, true));
    }
    SourceProblem {
        declarations: users.iter().map(|u| VarDecl::bounded(u, -spec.bound, spec.bound)).collect(),
        tables: g.tables,
        assertion: Formula::and_all(parts),
        objective: None,
    }
}

fn render_cell(c: &Cell) -> String {
    c.to_string()
}

/// Render a problem, moving tables with more than `csv_threshold` rows into
/// CSV files named `<stem>.<table>.csv`. Returns the problem text and the
/// CSV files as `(file name, contents)`.
pub fn render(problem: &SourceProblem, stem: &str, csv_threshold: usize) -> (String, Vec<(String, String)>) {
    let mut text = String::new();
    let mut files = Vec::new();
    for d in &problem.declarations {
        let _ = writeln!(text, "{d}");
    }
    for t in &problem.tables {
        let csv_ok = t.rows().iter().flatten().all(|c| matches!(c, Cell::Lit(_)));
        if t.len() > csv_threshold && csv_ok {
            let file = format!("{stem}.{}.csv", t.name());
            let mut body = String::new();
            for row in t.rows() {
                let cells: Vec<String> = row.iter().map(render_cell).collect();
                body.push_str(&cells.join(","));
                body.push('\n');
            }
            let _ = writeln!(text, "(table {} csv \"{file}\")", t.name());
            files.push((file, body));
        } else {
            let rows: Vec<String> = t
                .rows()
                .iter()
                .map(|row| format!("({})", row.iter().map(render_cell).collect::<Vec<_>>().join(" ")))
                .collect();
            let _ = writeln!(text, "(table {} ({}))", t.name(), rows.join(" "));
        }
    }
    let _ = writeln!(text, "(assert {})", problem.assertion);
    if let Some(obj) = &problem.objective {
        let head = match obj.direction {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        };
        let _ = writeln!(text, "({head} {})", obj.term);
    }
    (text, files)
}

/// Write a problem to `path` (a `.dz` file) plus CSV siblings. Returns all
/// written paths, the problem file first.
pub fn write_problem(problem: &SourceProblem, path: &Path, csv_threshold: usize) -> Result<Vec<PathBuf>, BenchError> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| BenchError::Param(format!("bad output path `{}`", path.display())))?;
    let dir = path.parent().unwrap_or_else(|| Path::new(""));
    let (text, files) = render(problem, stem, csv_threshold);
    let write = |p: &Path, body: &str| {
        std::fs::write(p, body).map_err(|source| BenchError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    write(path, &text)?;
    let mut written = vec![path.to_path_buf()];
    for (name, body) in files {
        let p = dir.join(name);
        write(&p, &body)?;
        written.push(p);
    }
    Ok(written)
}

/// Variables referenced by the cells of a table.
pub fn cell_variables(t: &InputTable) -> BTreeSet<String> {
    t.rows()
        .iter()
        .flatten()
        .filter_map(|c| match c {
            Cell::Lit(l) => l.var_name().map(str::to_string),
            Cell::Expr(_) => None,
        })
        .collect()
}
