//! Property checks shared by the proptest suite and the acceptance summary.
//! Each check builds its own deterministic `TestRunner`, so a run is
//! reproducible.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use tabula_core::ast::{CellLiteral, Direction, Formula, Objective, SourceProblem, Table, Term, VarDecl};
use tabula_core::bench::{random_existential, RandomSpec};
use tabula_core::decompose::{
    decompose, membership_to_disjunction, DecomposeError, DecomposedProblem, MembershipConstraint, MembershipTable,
    VarKind,
};
use tabula_core::driver::{build_engines, run, solve_bruteforce, solve_eager, Limits, Status};
use tabula_core::eval::{check_model, enumerate, eval_formula, Assignment};
use tabula_core::fragment::{formula_rank, is_existential};
use tabula_core::frontend::parse;
use tabula_core::lia::bounds::{BoundsStore, VarId};
use tabula_core::lia::linear::LinearConstraint;
use tabula_core::lia::simplex::{lp_check, rat, LpResult, Optimum};
use tabula_core::membership::{check_consistent, row_matches};
use tabula_core::reduce::reduce_formula;
use tabula_core::types::typecheck;

pub const CASES: u32 = 512;

pub struct Property {
    pub name: &'static str,
    pub check: fn(u32) -> Result<(), String>,
}

pub fn all() -> Vec<Property> {
    vec![
        Property { name: "bounds are monotone and the trail restores them", check: bounds_trail },
        Property { name: "candidates are exactly the matching rows", check: membership_candidates },
        Property { name: "check_consistent agrees with the row disjunction", check: consistency },
        Property { name: "LP models satisfy the constraints they came from", check: lp_resubstitution },
        Property { name: "printing then parsing is the identity", check: print_parse },
        Property { name: "rank and fragment laws", check: rank_laws },
        Property { name: "reduction agrees with direct evaluation", check: reduce_vs_eval },
        Property { name: "decomposition is equisatisfiable", check: decompose_equisat },
        Property { name: "LIA search agrees with enumeration", check: lia_vs_enumeration },
    ]
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug)]
enum BoundOp {
    Lb(usize, i64),
    Ub(usize, i64),
    Push,
    Pop,
}

fn bound_op() -> impl Strategy<Value = BoundOp> {
    prop_oneof![
        3 => (0usize..4, -20i64..=20).prop_map(|(v, k)| BoundOp::Lb(v, k)),
        3 => (0usize..4, -20i64..=20).prop_map(|(v, k)| BoundOp::Ub(v, k)),
        1 => Just(BoundOp::Push),
        1 => Just(BoundOp::Pop),
    ]
}

type Interval = (Option<i64>, Option<i64>);

fn snapshot(s: &BoundsStore) -> Vec<Interval> {
    (0..s.len() as u32).map(|i| (s.lb(VarId(i)), s.ub(VarId(i)))).collect()
}

fn bounds_trail(cases: u32) -> Result<(), String> {
    let init = vec(prop::option::of((-10i64..=0, 0i64..=10)), 4);
    check(cases, (init, vec(bound_op(), 1..60)), |(init, ops)| {
        let mut s = BoundsStore::new();
        for b in &init {
            match b {
                Some((l, u)) => s.add_var(Some(*l), Some(*u)),
                None => s.add_var(None, None),
            };
        }
        let mut model = snapshot(&s);
        let mut stack = Vec::new();
        for op in ops {
            match op {
                BoundOp::Lb(v, k) => {
                    let (l, u) = model[v];
                    let expect = if u.is_some_and(|u| u < k) {
                        Err(())
                    } else {
                        Ok(l.is_none_or(|l| l < k))
                    };
                    let got = s.set_lb(VarId(v as u32), k).map_err(|_| ());
                    prop_assert_eq!(got, expect);
                    if expect == Ok(true) {
                        model[v].0 = Some(k);
                    }
                }
                BoundOp::Ub(v, k) => {
                    let (l, u) = model[v];
                    let expect = if l.is_some_and(|l| l > k) {
                        Err(())
                    } else {
                        Ok(u.is_none_or(|u| u > k))
                    };
                    let got = s.set_ub(VarId(v as u32), k).map_err(|_| ());
                    prop_assert_eq!(got, expect);
                    if expect == Ok(true) {
                        model[v].1 = Some(k);
                    }
                }
                BoundOp::Push => stack.push((s.mark(), model.clone())),
                BoundOp::Pop => {
                    if let Some((mark, saved)) = stack.pop() {
                        let mut last = BTreeMap::new();
                        for (v, lb, ub) in s.history_since(mark.position()) {
                            last.insert(v.index(), (lb, ub));
                        }
                        for (v, b) in last {
                            prop_assert_eq!(b, model[v]);
                        }
                        s.backtrack(mark);
                        model = saved;
                    }
                }
            }
            prop_assert_eq!(&snapshot(&s), &model);
        }
        Ok(())
    })
}

fn cell_literal() -> impl Strategy<Value = CellLiteral> {
    prop_oneof![
        3 => (-4i64..=4).prop_map(CellLiteral::Const),
        1 => (0usize..2, -1i64..=1).prop_map(|(y, k)| {
            let name = format!("y{y}");
            if k == 0 {
                CellLiteral::Var(name)
            } else {
                CellLiteral::Offset(name, k)
            }
        }),
    ]
}

/// Every assignment of `store`'s variables within their current bounds.
fn points(store: &BoundsStore) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for i in 0..store.len() as u32 {
        let (l, u) = (store.lb(VarId(i)).unwrap(), store.ub(VarId(i)).unwrap());
        out = out
            .into_iter()
            .flat_map(|p| {
                (l..=u).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

fn membership_candidates(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=3).prop_flat_map(|a| {
        (
            vec(vec(cell_literal(), a), 1..=6),
            vec((-4i64..=4, 0i64..=4), a + 2),
            (0usize..a + 2, any::<bool>(), -4i64..=4),
        )
    });
    check(cases, strategy, |(rows, boxes, extra)| {
        let arity = rows[0].len();
        let mut p = DecomposedProblem::empty();
        let mut names: Vec<String> = (0..arity).map(|i| format!("x{i}")).collect();
        names.extend(["y0".to_string(), "y1".to_string()]);
        for (i, n) in names.iter().enumerate() {
            let kind = if i < arity { VarKind::Witness } else { VarKind::User };
            let (lo, w) = boxes[i];
            p.add_var(n.clone(), kind, Some(lo), Some(lo + w));
        }
        p.memberships.push(MembershipConstraint {
            witness: names[..arity].to_vec(),
            table: Arc::new(MembershipTable::new("T", rows.clone())),
            guard: None,
        });
        let (mut lia, mut mem) = build_engines(&p, 100).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (i, &(lo, w)) in boxes.iter().enumerate() {
            let v = VarId(i as u32);
            if lia.bounds.set_lb(v, lo).is_err() || lia.bounds.set_ub(v, lo + w).is_err() {
                return Ok(());
            }
        }
        let original = lia.bounds.clone();
        let value = |pt: &[i64], c: &CellLiteral| -> i64 {
            match c {
                CellLiteral::Const(k) => *k,
                CellLiteral::Var(y) => pt[names.iter().position(|n| n == y).unwrap()],
                CellLiteral::Offset(y, k) => pt[names.iter().position(|n| n == y).unwrap()] + k,
            }
        };
        let solutions: Vec<(Vec<i64>, Vec<usize>)> = points(&original)
            .into_iter()
            .filter_map(|pt| {
                let hits: Vec<usize> = (0..rows.len())
                    .filter(|&r| (0..arity).all(|i| pt[i] == value(&pt, &rows[r][i])))
                    .collect();
                (!hits.is_empty()).then_some((pt, hits))
            })
            .collect();

        let mut fixpoint = false;
        for _ in 0..100 {
            if lia.propagate().is_err() {
                prop_assert!(solutions.is_empty(), "arithmetic conflict with solutions {:?}", solutions);
                return Ok(());
            }
            match mem.propagate(&mut lia) {
                Err(_) => {
                    prop_assert!(solutions.is_empty(), "membership conflict with solutions {:?}", solutions);
                    return Ok(());
                }
                Ok(out) if !out.changed => {
                    fixpoint = true;
                    break;
                }
                Ok(_) => {}
            }
        }
        prop_assert!(fixpoint);
        let m = &mem.constraints[0];
        let candidates = m.candidates();
        for (pt, hits) in &solutions {
            for (i, &k) in pt.iter().enumerate() {
                let v = VarId(i as u32);
                prop_assert!(lia.bounds.lb(v).is_none_or(|l| l <= k) && lia.bounds.ub(v).is_none_or(|u| u >= k));
            }
            prop_assert!(hits.iter().any(|r| candidates.contains(r)));
        }
        for r in 0..rows.len() {
            let matched = row_matches(&m.witness, &m.rows[r], &lia.bounds);
            prop_assert_eq!(candidates.contains(&r), matched, "row {}", r);
        }

        let before = (snapshot(&lia.bounds), candidates.clone());
        let (lia_mark, mem_mark) = (lia.mark(), mem.mark());
        let (var, upper, k) = extra;
        let v = VarId(var as u32);
        let applied = if upper { lia.bounds.set_ub(v, k) } else { lia.bounds.set_lb(v, k) };
        if applied.is_ok() && lia.propagate().is_ok() {
            let _ = mem.propagate(&mut lia);
        }
        lia.backtrack(lia_mark);
        mem.backtrack(mem_mark);
        prop_assert_eq!(before, (snapshot(&lia.bounds), mem.constraints[0].candidates()));
        Ok(())
    })
}

fn consistency(cases: u32) -> Result<(), String> {
    let strategy = (1usize..=4).prop_flat_map(|cols| (vec(-2i64..=2, cols), vec(vec(-2i64..=2, cols), 0..=5)));
    check(cases, strategy, |(x, cells)| {
        let cols = x.len();
        let witness: Vec<String> = (0..cols).map(|i| format!("x{i}")).collect();
        let rows: Vec<Vec<CellLiteral>> = cells
            .iter()
            .map(|r| r.iter().map(|&k| CellLiteral::Const(k)).collect())
            .collect();
        let m = MembershipConstraint {
            witness: witness.clone(),
            table: Arc::new(MembershipTable::new("T", rows)),
            guard: None,
        };
        let lookup = |n: &str| witness.iter().position(|w| w == n).map(|i| x[i]);
        let expected = membership_to_disjunction(&m).eval(&lookup);
        let got = check_consistent(cells.len(), cols, |j, i| cells[j][i] == x[i]);
        prop_assert_eq!(Some(got), expected);
        Ok(())
    })
}

fn lp_resubstitution(cases: u32) -> Result<(), String> {
    let var_bounds = vec((-5i64..=5, 0i64..=6, 0u8..8), 3);
    let constraint = (vec(-3i64..=3, 3), -8i64..=8);
    let strategy = (var_bounds, vec(constraint, 1..=5), vec(-3i64..=3, 3));
    check(cases, strategy, |(vb, cs, obj)| {
        let mut store = BoundsStore::new();
        let mut finite = true;
        for &(lo, w, open) in &vb {
            match open {
                0 => {
                    finite = false;
                    store.add_var(None, Some(lo + w))
                }
                1 => {
                    finite = false;
                    store.add_var(Some(lo), None)
                }
                _ => store.add_var(Some(lo), Some(lo + w)),
            };
        }
        let lin: Vec<LinearConstraint> = cs
            .iter()
            .map(|(a, b)| LinearConstraint::new(a.iter().enumerate().map(|(i, &c)| (VarId(i as u32), c)), *b).unwrap())
            .collect();
        let objective: Vec<(VarId, i64)> = obj.iter().enumerate().map(|(i, &c)| (VarId(i as u32), c)).collect();
        let integer_points: Option<Vec<Vec<i64>>> = finite.then(|| {
            points(&store)
                .into_iter()
                .filter(|p| lin.iter().all(|c| c.terms.iter().map(|&(v, a)| a * p[v.index()]).sum::<i64>() <= c.bound))
                .collect()
        });
        match lp_check(&lin, &store, Some(&objective)) {
            LpResult::Infeasible => {
                if let Some(pts) = &integer_points {
                    prop_assert!(pts.is_empty(), "LP infeasible but {:?} is feasible", pts[0]);
                }
            }
            LpResult::Feasible(model) => {
                let val = |v: VarId| model.value(v).clone();
                for i in 0..3u32 {
                    let v = VarId(i);
                    prop_assert!(store.lb(v).is_none_or(|l| val(v) >= rat(l)));
                    prop_assert!(store.ub(v).is_none_or(|u| val(v) <= rat(u)));
                }
                for c in &lin {
                    let lhs = c.terms.iter().fold(rat(0), |acc, &(v, a)| acc + rat(a) * val(v));
                    prop_assert!(lhs <= rat(c.bound), "{:?} violated", c);
                }
                let at_model = objective.iter().fold(rat(0), |acc, &(v, a)| acc + rat(a) * val(v));
                match model.objective {
                    Some(Optimum::Bounded(z)) => {
                        prop_assert_eq!(&z, &at_model);
                        if let Some(pts) = &integer_points {
                            for p in pts {
                                let o: i64 = obj.iter().zip(p).map(|(a, b)| a * b).sum();
                                prop_assert!(BigRational::from_integer(o.into()) <= z);
                            }
                        }
                    }
                    Some(Optimum::Unbounded) => prop_assert!(!finite),
                    other => prop_assert!(false, "unexpected optimum {:?}", other),
                }
            }
        }
        Ok(())
    })
}

fn small_spec() -> RandomSpec {
    RandomSpec {
        bound: 3,
        ..RandomSpec::default()
    }
}

fn print_parse(cases: u32) -> Result<(), String> {
    check(cases, any::<u64>(), |seed| {
        let p = random_existential(&RandomSpec::default(), seed);
        let text = p.to_string();
        let q = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&q.to_string(), &text);
        prop_assert_eq!(q, p);
        Ok(())
    })
}

fn contains_exists(f: &Formula) -> bool {
    match f {
        Formula::Le(..) => false,
        Formula::Exists(_) => true,
        Formula::Not(g) => contains_exists(g),
        Formula::Or(g, h) => contains_exists(g) || contains_exists(h),
    }
}

fn first_table(f: &Formula) -> Option<&Table> {
    match f {
        Formula::Le(..) => None,
        Formula::Exists(d) => Some(d),
        Formula::Not(g) => first_table(g),
        Formula::Or(g, h) => first_table(g).or_else(|| first_table(h)),
    }
}

fn rank_laws(cases: u32) -> Result<(), String> {
    check(cases, (any::<u64>(), any::<u64>()), |(s1, s2)| {
        let p = random_existential(&RandomSpec::default(), s1);
        let q = random_existential(&RandomSpec::default(), s2);
        let (f, g) = (&p.assertion, &q.assertion);
        prop_assert!(is_existential(f));
        prop_assert_eq!(formula_rank(f) >= 1, contains_exists(f));
        let nf = Formula::not(f.clone());
        prop_assert_eq!(formula_rank(&nf), formula_rank(f));
        prop_assert_eq!(is_existential(&nf), !contains_exists(f));
        prop_assert_eq!(is_existential(&Formula::not(nf.clone())), true);
        prop_assert_eq!(
            formula_rank(&Formula::or(f.clone(), g.clone())),
            formula_rank(f).max(formula_rank(g))
        );
        if let (Some(a), Some(b)) = (first_table(f), first_table(g)) {
            let prod = Formula::exists(Table::prod(a.clone(), b.clone()));
            prop_assert_eq!(
                formula_rank(&prod),
                formula_rank(&Formula::exists(a.clone())) + formula_rank(&Formula::exists(b.clone()))
            );
        }
        let mut neg = p.clone();
        neg.assertion = nf;
        let t = typecheck(&neg).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let d = decompose(&t);
        prop_assert_eq!(
            matches!(d, Err(DecomposeError::NotExistential)),
            contains_exists(f)
        );
        Ok(())
    })
}

fn user_assignments(p: &SourceProblem, bound: i64) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for d in &p.declarations {
        let (l, u) = (d.lb.unwrap_or(-bound), d.ub.unwrap_or(bound));
        out = out
            .into_iter()
            .flat_map(|a| {
                (l..=u).map(move |k| {
                    let mut b = a.clone();
                    b.insert(d.name.clone(), k);
                    b
                })
            })
            .collect();
    }
    out
}

fn reduce_vs_eval(cases: u32) -> Result<(), String> {
    check(cases, any::<u64>(), |seed| {
        let p = random_existential(&small_spec(), seed);
        let q = reduce_formula(&p.assertion).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for a in user_assignments(&p, 3) {
            let direct = eval_formula(&p.assertion, &a).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let reduced = q.eval(&|n: &str| a.get(n).copied());
            prop_assert_eq!(reduced, Some(direct), "assignment {:?}", a);
        }
        Ok(())
    })
}

fn decompose_equisat(cases: u32) -> Result<(), String> {
    check(cases, any::<u64>(), |seed| {
        let p = random_existential(&small_spec(), seed);
        let t = typecheck(&p).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let d = decompose(&t).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let truth = enumerate(&p, 3, 1 << 20).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let lazy = run(&d, &Limits::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(lazy.status.is_feasible(), truth.model.is_some(), "{}", p);
        if let Some(m) = &lazy.model {
            prop_assert_eq!(check_model(&p, m), Ok(true));
        }
        if let Ok(brute) = solve_bruteforce(&d.with_default_bounds(3), 200_000) {
            prop_assert_eq!(brute.status.is_feasible(), truth.model.is_some(), "{}", p);
        }
        let eager = solve_eager(&t, &Limits::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(eager.status.is_feasible(), truth.model.is_some());
        Ok(())
    })
}

const LIA_VARS: [&str; 3] = ["a", "b", "c"];

fn linear_term(coeffs: &[i64]) -> Term {
    coeffs
        .iter()
        .zip(LIA_VARS)
        .map(|(&k, v)| Term::scale(k, Term::var(v)))
        .reduce(Term::add)
        .expect("three variables")
}

fn lin_formula() -> impl Strategy<Value = Formula> {
    let leaf = (vec(-3i64..=3, 3), -6i64..=6, 0u8..4).prop_map(|(cs, k, rel)| {
        let t = linear_term(&cs);
        let k = Term::Const(k);
        match rel {
            0 => Formula::le(t, k),
            1 => Formula::eq(t, k),
            2 => Formula::lt(t, k),
            _ => Formula::ne(t, k),
        }
    });
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            vec(inner.clone(), 2..=3).prop_map(Formula::and_all),
            vec(inner.clone(), 2..=3).prop_map(Formula::or_all),
            inner.prop_map(Formula::not),
        ]
    })
}

fn lia_vs_enumeration(cases: u32) -> Result<(), String> {
    let objective = prop::option::of((any::<bool>(), vec(-3i64..=3, 3)));
    check(cases, (lin_formula(), objective), |(f, obj)| {
        let p = SourceProblem {
            declarations: LIA_VARS.iter().map(|v| VarDecl::bounded(*v, -4, 4)).collect(),
            tables: Vec::new(),
            assertion: f,
            objective: obj.map(|(max, cs)| Objective {
                direction: if max { Direction::Maximize } else { Direction::Minimize },
                term: linear_term(&cs),
            }),
        };
        let truth = enumerate(&p, 4, 1 << 20).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let t = typecheck(&p).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let d = decompose(&t).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let r = run(&d, &Limits::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(r.status != Status::ResourceLimit);
        prop_assert_eq!(r.status.is_feasible(), truth.model.is_some(), "{}", p);
        if let Some(m) = &r.model {
            prop_assert_eq!(check_model(&p, m), Ok(true));
        }
        if p.objective.is_some() {
            prop_assert_eq!(r.objective, truth.objective, "{}", p);
        }
        Ok(())
    })
}

