//! Decomposition of existential table formulas into a linear part plus
//! (conditional) membership constraints over input tables.
//!
//! Every nonemptiness atom gets a fresh witness row, flattened to integer
//! variables. Memberships in a product split into memberships of the
//! components, a union becomes a disjunction, and a selection conjoins its
//! condition about the witness. Memberships that are not part of the
//! top-level conjunction are switched by a 0/1 guard variable `g`, and the
//! formula refers to them through the literal `g >= 1`. Generated names
//! contain `!`, which user identifiers cannot.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Cell, CellLiteral, DType, Direction, Formula, InputTable, Table};
use crate::fragment::is_existential;
use crate::lower::{lower_cell, lower_int, Env, LowerError, RowVal};
use crate::qf::{LinTerm, Qf};
use crate::types::TypedProblem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("formula is not in the existential fragment: a nonemptiness atom occurs under an odd number of negations")]
    NotExistential,
    #[error(transparent)]
    Lower(#[from] LowerError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    /// Declared by the problem.
    User,
    /// Component of a witness row.
    Witness,
    /// Switch of a conditional membership constraint.
    Guard,
    /// Indicator introduced for a disjunction.
    Indicator,
    /// Stands for a table cell outside the `c`, `v`, `v + c` language.
    Aux,
}

impl VarKind {
    pub fn is_boolean(self) -> bool {
        matches!(self, VarKind::Guard | VarKind::Indicator)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DVar {
    pub name: String,
    pub kind: VarKind,
    pub lb: Option<i64>,
    pub ub: Option<i64>,
}

/// Rows over the restricted cell language, shared between all memberships
/// into the same input table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipTable {
    pub name: String,
    pub rows: Vec<Vec<CellLiteral>>,
}

impl MembershipTable {
    pub fn new(name: impl Into<String>, rows: Vec<Vec<CellLiteral>>) -> Self {
        MembershipTable {
            name: name.into(),
            rows,
        }
    }

    pub fn arity(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `guard = 1 ⇒ witness ∈ table`, or unconditionally when there is no guard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipConstraint {
    pub witness: Vec<String>,
    pub table: Arc<MembershipTable>,
    pub guard: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecomposedProblem {
    pub vars: Vec<DVar>,
    /// Linear part in negation normal form.
    pub qflia: Qf,
    /// `aux = term` for abstracted cells; also conjoined into `qflia`.
    pub definitions: Vec<(String, LinTerm)>,
    pub memberships: Vec<MembershipConstraint>,
    pub objective: Option<(Direction, LinTerm)>,
}

pub fn cell_term(c: &CellLiteral) -> LinTerm {
    match c {
        CellLiteral::Const(c) => LinTerm::constant(*c),
        CellLiteral::Var(v) => LinTerm::var(v.as_str()),
        CellLiteral::Offset(v, c) => LinTerm::offset(v.as_str(), *c),
    }
}

/// `⋁_j ⋀_i x_i = y_{j,i}`, ignoring the guard.
pub fn membership_to_disjunction(m: &MembershipConstraint) -> Qf {
    Qf::or(m.table.rows.iter().map(|row| {
        Qf::and(
            m.witness
                .iter()
                .zip(row)
                .map(|(x, cell)| Qf::eq(LinTerm::var(x.as_str()), cell_term(cell))),
        )
    }))
}

impl DecomposedProblem {
    pub fn empty() -> Self {
        DecomposedProblem {
            vars: Vec::new(),
            qflia: Qf::Bool(true),
            definitions: Vec::new(),
            memberships: Vec::new(),
            objective: None,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lb: Option<i64>, ub: Option<i64>) {
        self.vars.push(DVar {
            name: name.into(),
            kind,
            lb,
            ub,
        });
    }

    pub fn var(&self, name: &str) -> Option<&DVar> {
        self.vars.iter().find(|v| v.name == name)
    }

    /// The whole problem as one formula, memberships expanded.
    pub fn expand(&self) -> Qf {
        let mut parts = vec![self.qflia.clone()];
        for (a, t) in &self.definitions {
            parts.push(Qf::eq(LinTerm::var(a.as_str()), t.clone()));
        }
        for m in &self.memberships {
            let disj = membership_to_disjunction(m);
            parts.push(match &m.guard {
                None => disj,
                Some(g) => Qf::or([Qf::le(LinTerm::var(g.as_str()), LinTerm::constant(0)), disj]),
            });
        }
        Qf::and(parts)
    }

    /// A copy in which open sides of declared variables are `±default_bound`.
    pub fn with_default_bounds(&self, default_bound: i64) -> DecomposedProblem {
        let mut p = self.clone();
        for v in p.vars.iter_mut().filter(|v| v.kind == VarKind::User) {
            v.lb = Some(v.lb.unwrap_or(-default_bound));
            v.ub = Some(v.ub.unwrap_or(default_bound));
        }
        p
    }

    /// Finite bounds for every variable, in the order of `vars`.
    ///
    /// Open sides of declared variables become `±default_bound`. Abstraction
    /// variables get the interval of their definition, and witness variables
    /// the hull of the cells in their columns: an active membership forces a
    /// witness onto some row, and a witness all of whose memberships are
    /// inactive occurs in no active constraint.
    pub fn finite_bounds(&self, default_bound: i64) -> Vec<(i64, i64)> {
        let d = default_bound.max(0);
        let index: HashMap<&str, usize> = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        let mut bounds: Vec<Option<(i64, i64)>> = self
            .vars
            .iter()
            .map(|v| match v.kind {
                VarKind::User => {
                    let lb = v.lb.unwrap_or_else(|| (-d).min(v.ub.unwrap_or(0)));
                    let ub = v.ub.unwrap_or_else(|| d.max(lb));
                    Some((lb, ub))
                }
                VarKind::Guard | VarKind::Indicator => Some((v.lb.unwrap_or(0).max(0), v.ub.unwrap_or(1).min(1))),
                VarKind::Witness | VarKind::Aux => match (v.lb, v.ub) {
                    (Some(lb), Some(ub)) => Some((lb, ub)),
                    _ => None,
                },
            })
            .collect();
        let interval = |t: &LinTerm, bounds: &[Option<(i64, i64)>]| -> Option<(i128, i128)> {
            let mut lo = t.constant as i128;
            let mut hi = lo;
            for (v, &a) in &t.coeffs {
                let (l, u) = bounds[*index.get(v.as_str())?]?;
                let (p, q) = (a as i128 * l as i128, a as i128 * u as i128);
                lo += p.min(q);
                hi += p.max(q);
            }
            Some((lo, hi))
        };
        let clamp = |x: i128| x.clamp(i64::MIN as i128, i64::MAX as i128) as i64;
        for (a, t) in &self.definitions {
            let i = index[a.as_str()];
            if bounds[i].is_none() {
                bounds[i] = Some(
                    interval(t, &bounds).map_or((-d, d), |(lo, hi)| (clamp(lo), clamp(hi))),
                );
            }
        }
        let mut hull: Vec<Option<(i128, i128)>> = vec![None; self.vars.len()];
        let mut column_hulls: HashMap<(*const MembershipTable, usize), Option<(i128, i128)>> = HashMap::new();
        for m in &self.memberships {
            for (col, x) in m.witness.iter().enumerate() {
                let i = index[x.as_str()];
                if bounds[i].is_some() {
                    continue;
                }
                let h = *column_hulls.entry((Arc::as_ptr(&m.table), col)).or_insert_with(|| {
                    m.table
                        .rows
                        .iter()
                        .filter_map(|row| interval(&cell_term(&row[col]), &bounds))
                        .reduce(|(a, b), (lo, hi)| (a.min(lo), b.max(hi)))
                });
                if let Some((lo, hi)) = h {
                    hull[i] = Some(match hull[i] {
                        None => (lo, hi),
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                    });
                }
            }
        }
        bounds
            .into_iter()
            .zip(hull)
            .map(|(b, h)| b.unwrap_or_else(|| h.map_or((-d, d), |(lo, hi)| (clamp(lo), clamp(hi)))))
            .collect()
    }
}

enum Node {
    Lit(Qf),
    Mem(usize),
    And(Vec<Node>),
    Or(Vec<Node>),
}

impl Node {
    fn and(parts: Vec<Node>) -> Node {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Node::And(qs) => out.extend(qs),
                q => out.push(q),
            }
        }
        Node::And(out)
    }

    fn or(parts: Vec<Node>) -> Node {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Node::Or(qs) => out.extend(qs),
                q => out.push(q),
            }
        }
        Node::Or(out)
    }
}

struct Decomposer {
    vars: Vec<DVar>,
    memberships: Vec<MembershipConstraint>,
    definitions: Vec<(String, LinTerm)>,
    tables: HashMap<*const InputTable, Arc<MembershipTable>>,
    witness_count: usize,
    guard_count: usize,
}

fn schema(d: &Table) -> DType {
    match d {
        Table::Input(t) => t.schema(),
        Table::Sel { table, .. } => schema(table),
        Table::Prod(a, b) => DType::pair(schema(a), schema(b)),
        Table::Union(a, _) => schema(a),
    }
}

impl Decomposer {
    fn fresh(&mut self, name: String, kind: VarKind) -> String {
        let (lb, ub) = if kind.is_boolean() { (Some(0), Some(1)) } else { (None, None) };
        self.vars.push(DVar {
            name: name.clone(),
            kind,
            lb,
            ub,
        });
        name
    }

    fn witness_row(&mut self, ty: &DType, k: usize, next: &mut usize) -> RowVal {
        match ty {
            DType::Int => {
                let name = self.fresh(format!("w!{k}.{next}"), VarKind::Witness);
                *next += 1;
                RowVal::Int(LinTerm::var(name))
            }
            DType::Pair(l, r) => {
                let left = self.witness_row(l, k, next);
                let right = self.witness_row(r, k, next);
                RowVal::pair(left, right)
            }
        }
    }

    fn table(&mut self, t: &Arc<InputTable>) -> Result<Arc<MembershipTable>, DecomposeError> {
        let key = Arc::as_ptr(t);
        if let Some(mt) = self.tables.get(&key) {
            return Ok(Arc::clone(mt));
        }
        let tid = self.tables.len();
        let mut rows = Vec::with_capacity(t.len());
        for (j, row) in t.rows().iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (i, cell) in row.iter().enumerate() {
                out.push(match cell {
                    Cell::Lit(l) => l.clone(),
                    Cell::Expr(_) => {
                        let term = lower_cell(cell)?;
                        if let Some(c) = term.as_constant() {
                            CellLiteral::Const(c)
                        } else if let Some((v, c)) = term.as_offset() {
                            if c == 0 {
                                CellLiteral::Var(v.to_string())
                            } else {
                                CellLiteral::Offset(v.to_string(), c)
                            }
                        } else {
                            let a = self.fresh(format!("a!{tid}.{j}.{i}"), VarKind::Aux);
                            self.definitions.push((a.clone(), term));
                            CellLiteral::Var(a)
                        }
                    }
                });
            }
            rows.push(out);
        }
        let mt = Arc::new(MembershipTable::new(t.name(), rows));
        self.tables.insert(key, Arc::clone(&mt));
        Ok(mt)
    }

    fn formula(&mut self, f: &Formula, positive: bool, env: &mut Env) -> Result<Node, DecomposeError> {
        Ok(match f {
            Formula::Le(a, b) => {
                let atom = Qf::le(lower_int(a, env)?, lower_int(b, env)?);
                Node::Lit(if positive { atom } else { Qf::not(atom) })
            }
            Formula::Not(g) => self.formula(g, !positive, env)?,
            Formula::Or(g, h) => {
                let parts = vec![self.formula(g, positive, env)?, self.formula(h, positive, env)?];
                if positive {
                    Node::or(parts)
                } else {
                    Node::and(parts)
                }
            }
            Formula::Exists(d) => {
                if !positive {
                    return Err(DecomposeError::NotExistential);
                }
                let k = self.witness_count;
                self.witness_count += 1;
                let row = self.witness_row(&schema(d), k, &mut 0);
                self.member(&row, d, env)?
            }
        })
    }

    fn member(&mut self, x: &RowVal, d: &Table, env: &mut Env) -> Result<Node, DecomposeError> {
        Ok(match d {
            Table::Input(t) => {
                let table = self.table(t)?;
                let witness = x
                    .leaves()
                    .into_iter()
                    .map(|l| l.as_offset().expect("witness leaves are variables").0.to_string())
                    .collect();
                self.memberships.push(MembershipConstraint {
                    witness,
                    table,
                    guard: None,
                });
                Node::Mem(self.memberships.len() - 1)
            }
            Table::Prod(a, b) => {
                let RowVal::Pair(l, r) = x else {
                    unreachable!("witness rows follow the table schema")
                };
                Node::and(vec![self.member(l, a, env)?, self.member(r, b, env)?])
            }
            Table::Union(a, b) => Node::or(vec![self.member(x, a, env)?, self.member(x, b, env)?]),
            Table::Sel {
                binder,
                cond,
                table,
            } => {
                env.push(binder, x.clone());
                let c = self.formula(cond, true, env);
                env.pop();
                Node::and(vec![c?, self.member(x, table, env)?])
            }
        })
    }

    fn emit(&mut self, n: Node, top: bool) -> Qf {
        match n {
            Node::Lit(q) => q,
            Node::Mem(i) => {
                if top {
                    Qf::Bool(true)
                } else {
                    let g = self.fresh(format!("g!{}", self.guard_count), VarKind::Guard);
                    self.guard_count += 1;
                    self.memberships[i].guard = Some(g.clone());
                    Qf::le(LinTerm::constant(1), LinTerm::var(g))
                }
            }
            Node::And(parts) => {
                let qs: Vec<Qf> = parts.into_iter().map(|p| self.emit(p, top)).collect();
                Qf::and(qs)
            }
            Node::Or(parts) => {
                let qs: Vec<Qf> = parts.into_iter().map(|p| self.emit(p, false)).collect();
                Qf::or(qs)
            }
        }
    }
}

pub fn decompose(problem: &TypedProblem) -> Result<DecomposedProblem, DecomposeError> {
    let p = problem.problem();
    if !is_existential(&p.assertion) {
        return Err(DecomposeError::NotExistential);
    }
    let mut dec = Decomposer {
        vars: p
            .declarations
            .iter()
            .map(|d| DVar {
                name: d.name.clone(),
                kind: VarKind::User,
                lb: d.lb,
                ub: d.ub,
            })
            .collect(),
        memberships: Vec::new(),
        definitions: Vec::new(),
        tables: HashMap::new(),
        witness_count: 0,
        guard_count: 0,
    };
    let tree = dec.formula(&p.assertion, true, &mut Env::new())?;
    let mut qflia = dec.emit(tree, true);
    if !dec.definitions.is_empty() {
        let defs = dec
            .definitions
            .iter()
            .map(|(a, t)| Qf::eq(LinTerm::var(a.as_str()), t.clone()));
        qflia = Qf::and(std::iter::once(qflia).chain(defs));
    }
    let objective = match &p.objective {
        None => None,
        Some(o) => Some((o.direction, lower_int(&o.term, &Env::new())?)),
    };
    Ok(DecomposedProblem {
        vars: dec.vars,
        qflia,
        definitions: dec.definitions,
        memberships: dec.memberships,
        objective,
    })
}
