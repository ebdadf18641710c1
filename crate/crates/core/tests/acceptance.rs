//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS or FAIL line, and exits nonzero when
//! any criterion fails.

mod common;
mod oracles;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tabula_core::ast::{CellLiteral, Formula, Table};
use tabula_core::bench::{generate, kd_product, random_existential, BenchSpec, Family, Portfolio, RandomSpec};
use tabula_core::decompose::{decompose, DecomposedProblem, MembershipConstraint, MembershipTable, VarKind};
use tabula_core::driver::{
    build_engines, run, solve_bruteforce, solve_eager, BruteForceError, Limits, Source, Status, TraceEvent,
};
use tabula_core::eval::check_model;
use tabula_core::lia::bounds::VarId;
use tabula_core::lia::engine::LiaEngine;
use tabula_core::membership::{AtomId, Membership};
use tabula_core::qbf::{qbf_problem, Qbf};
use tabula_core::qf::{LinTerm, Qf};
use tabula_core::reduce::{reduce_formula, reduce_table};
use tabula_core::types::typecheck;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn text(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn constant_table(name: &str, rows: &[&[i64]]) -> Arc<MembershipTable> {
    Arc::new(MembershipTable::new(
        name,
        rows.iter().map(|r| r.iter().map(|&k| CellLiteral::Const(k)).collect()).collect(),
    ))
}

fn bounds(var: &str, lb: i64, ub: i64, source: Source) -> TraceEvent {
    TraceEvent::Bounds {
        var: var.to_string(),
        lb: Some(lb),
        ub: Some(ub),
        source,
    }
}

fn doubling_table() -> Verdict {
    let mut p = DecomposedProblem::empty();
    p.add_var("x", VarKind::User, None, None);
    p.add_var("y", VarKind::User, None, None);
    p.qflia = Qf::eq(LinTerm::var("x"), LinTerm::var("y"));
    p.memberships.push(MembershipConstraint {
        witness: vec!["x".into(), "y".into()],
        table: constant_table("T", &[&[1, 2], &[2, 4], &[3, 6], &[4, 8]]),
        guard: None,
    });
    let start = Instant::now();
    let r = run(&p, &Limits { trace: true, ..Limits::default() }).map_err(text)?;
    let elapsed = start.elapsed();
    ensure(r.status == Status::Unsat, || format!("status {}", r.status))?;
    ensure(r.stats.decisions == 0 && r.stats.branch_points == 0, || format!("{:?}", r.stats))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    let expected = vec![
        bounds("x", 1, 4, Source::Membership),
        bounds("y", 2, 8, Source::Membership),
        bounds("x", 2, 4, Source::Lia),
        bounds("y", 2, 4, Source::Lia),
        TraceEvent::UniqueCandidate { constraint: 0, table: "T".into(), row: 1 },
        bounds("x", 2, 2, Source::Membership),
        bounds("y", 4, 4, Source::Membership),
        TraceEvent::Conflict { depth: 0 },
    ];
    ensure(r.trace == expected, || format!("trace {:?}", r.trace))?;
    Ok(format!("unsat, 0 decisions, log matches exactly, {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn fixpoint(lia: &mut LiaEngine, mem: &mut Membership) -> Result<(), String> {
    loop {
        lia.propagate().map_err(|_| "arithmetic conflict".to_string())?;
        let out = mem.propagate(lia).map_err(|_| "membership conflict".to_string())?;
        if !out.changed {
            return Ok(());
        }
    }
}

fn symbolic_row_replay() -> Verdict {
    let mut p = DecomposedProblem::empty();
    for v in ["x1", "x2", "y1", "y2"] {
        p.add_var(v, VarKind::User, Some(-100), Some(100));
    }
    let mut rows: Vec<Vec<CellLiteral>> = constant_table("T", &[&[1, 2], &[2, 3], &[3, 2]]).rows.clone();
    rows.push(vec![CellLiteral::Var("y1".into()), CellLiteral::Var("y2".into())]);
    p.memberships.push(MembershipConstraint {
        witness: vec!["x1".into(), "x2".into()],
        table: Arc::new(MembershipTable::new("T", rows)),
        guard: None,
    });
    let (mut lia, mut mem) = build_engines(&p, 100).map_err(text)?;
    let (x1, x2) = (VarId(0), VarId(1));
    fixpoint(&mut lia, &mut mem)?;
    lia.bounds.set_lb(x1, 2).map_err(|_| "x1 >= 2 conflicts")?;
    fixpoint(&mut lia, &mut mem)?;
    ensure(mem.assert_equality(AtomId { constraint: 0, row: 3, col: 0 }, false), || {
        "x1 != y1 rejected".into()
    })?;
    fixpoint(&mut lia, &mut mem)?;
    let candidates = mem.constraints[0].candidates();
    ensure(candidates == vec![1, 2], || format!("candidates {candidates:?}"))?;
    let iv = |v| (lia.bounds.lb(v), lia.bounds.ub(v));
    ensure(iv(x1) == (Some(2), Some(3)), || format!("x1 in {:?}", iv(x1)))?;
    ensure(iv(x2) == (Some(2), Some(3)), || format!("x2 in {:?}", iv(x2)))?;
    Ok("candidates {(2,3), (3,2)}, x1 in [2,3], x2 in [2,3]".into())
}

fn differential() -> Verdict {
    let start = Instant::now();
    let spec = RandomSpec::default();
    let (mut accepted, mut skipped, mut sat) = (0, 0, 0);
    let mut seed = 0u64;
    while accepted < 500 {
        let p = random_existential(&spec, seed);
        seed += 1;
        let t = typecheck(&p).map_err(text)?;
        let d = decompose(&t).map_err(text)?;
        let brute = match solve_bruteforce(&d.with_default_bounds(spec.bound), 200_000) {
            Err(BruteForceError::TooLarge(_)) => {
                skipped += 1;
                continue;
            }
            other => other.map_err(text)?,
        };
        let lazy = run(&d, &Limits::default()).map_err(text)?;
        let eager = solve_eager(&t, &Limits::default()).map_err(text)?;
        ensure(lazy.status == eager.status && lazy.status == brute.status, || {
            format!(
                "seed {}: lazy {}, eager {}, brute force {}",
                seed - 1,
                lazy.status,
                eager.status,
                brute.status
            )
        })?;
        ensure(lazy.objective == eager.objective && lazy.objective == brute.objective, || {
            format!("seed {}: objectives differ", seed - 1)
        })?;
        for (engine, r) in [("lazy", &lazy), ("eager", &eager), ("brute force", &brute)] {
            if let Some(m) = &r.model {
                ensure(check_model(&p, m) == Ok(true), || {
                    format!("seed {}: {engine} model fails the evaluator", seed - 1)
                })?;
            }
        }
        sat += usize::from(lazy.status.is_feasible());
        accepted += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{accepted} instances agree ({sat} sat), {skipped} over the enumeration cap regenerated, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn portfolio() -> Verdict {
    let start = Instant::now();
    let mut optimal = 0;
    let count = 120u64;
    for seed in 0..count {
        let rows = 6 + (seed % 5) as usize;
        let picks = 2 + (seed % 2) as usize;
        let mut pf = Portfolio::generate(&BenchSpec::new(Family::Portfolio, rows, picks, seed)).map_err(text)?;
        pf.sector_cap = match (seed / 2) % 3 {
            0 => pf.sector_cap,
            1 => (picks as i64 - 1, picks as i64),
            _ => (pf.total() - pf.amounts.iter().min().copied().unwrap_or(0), pf.total()),
        };
        let p = pf.to_problem();
        let t = typecheck(&p).map_err(text)?;
        let r = run(&decompose(&t).map_err(text)?, &Limits::default()).map_err(text)?;
        let expected = oracles::portfolio_oracle(&pf);
        ensure(r.objective == expected, || {
            format!("seed {seed}: solver {:?}, enumeration {expected:?}", r.objective)
        })?;
        ensure(r.status == if expected.is_some() { Status::Optimal } else { Status::Infeasible }, || {
            format!("seed {seed}: status {}", r.status)
        })?;
        if let Some(m) = &r.model {
            ensure(check_model(&p, m) == Ok(true), || format!("seed {seed}: model fails the evaluator"))?;
        }
        optimal += usize::from(expected.is_some());
    }
    let elapsed = start.elapsed();
    ensure(optimal * 4 >= count as usize, || format!("only {optimal} feasible instances"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{count} instances match enumeration ({optimal} optimal, {} infeasible), {:.1} s",
        count as usize - optimal,
        elapsed.as_secs_f64()
    ))
}

fn random_qbf(r: &mut ChaCha8Rng) -> Qbf {
    fn body(r: &mut ChaCha8Rng, scope: &mut Vec<String>, free: &mut Vec<String>, depth: usize) -> Qbf {
        if !free.is_empty() && r.gen_bool(0.3) {
            return quantify(r, scope, free, depth);
        }
        if depth == 0 || r.gen_bool(0.25) {
            return Qbf::var(&scope[r.gen_range(0..scope.len())]);
        }
        match r.gen_range(0..3) {
            0 => Qbf::not(body(r, scope, free, depth - 1)),
            1 => Qbf::and(body(r, scope, free, depth - 1), body(r, scope, free, depth - 1)),
            _ => Qbf::or(body(r, scope, free, depth - 1), body(r, scope, free, depth - 1)),
        }
    }
    fn quantify(r: &mut ChaCha8Rng, scope: &mut Vec<String>, free: &mut Vec<String>, depth: usize) -> Qbf {
        let v = free.pop().expect("a variable to bind");
        scope.push(v.clone());
        let inner = body(r, scope, free, depth);
        scope.pop();
        if r.gen_bool(0.5) {
            Qbf::forall(&v, inner)
        } else {
            Qbf::exists(&v, inner)
        }
    }
    let n = r.gen_range(1..=4);
    let mut free: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
    quantify(r, &mut Vec::new(), &mut free, 4)
}

fn qbf() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    let mut truths = 0;
    let count = 250;
    for i in 0..count {
        let q = random_qbf(&mut r);
        let expected = q.eval().map_err(text)?;
        let t = typecheck(&qbf_problem(&q).map_err(text)?).map_err(text)?;
        let got = solve_eager(&t, &Limits::default()).map_err(text)?;
        ensure(got.status == if expected { Status::Sat } else { Status::Unsat }, || {
            format!("instance {i} {q:?}: expected {expected}, got {}", got.status)
        })?;
        truths += usize::from(expected);
    }
    Ok(format!("{count} QBFs agree with expansion ({truths} true)"))
}

fn reduction_size() -> Verdict {
    let mut checked = Vec::new();
    for k in 1..=3u32 {
        for n in [4usize, 8, 16] {
            let (_, table) = kd_product(k as usize, n, u64::from(k) * 100 + n as u64);
            let rows = reduce_table(&table).map_err(text)?.len();
            ensure(rows == n.pow(k), || format!("k = {k}, n = {n}: {rows} rows"))?;
            checked.push(format!("{n}^{k}"));
        }
    }
    Ok(format!("guarded rows = n^k for {}", checked.join(", ")))
}

fn exists_atoms(f: &Formula, out: &mut Vec<Table>) {
    match f {
        Formula::Le(..) => {}
        Formula::Exists(d) => out.push((**d).clone()),
        Formula::Not(g) => exists_atoms(g, out),
        Formula::Or(g, h) => {
            exists_atoms(g, out);
            exists_atoms(h, out);
        }
    }
}

fn foreign_keys() -> Verdict {
    let rows = 10_000;
    let p = generate(&BenchSpec::new(Family::ForeignKeys, rows, 0, 11)).map_err(text)?;
    let t = typecheck(&p).map_err(text)?;
    let d = decompose(&t).map_err(text)?;
    let start = Instant::now();
    let limits = Limits {
        time_limit: Some(Duration::from_secs(60)),
        ..Limits::default()
    };
    let r = run(&d, &limits).map_err(text)?;
    let elapsed = start.elapsed();
    ensure(r.status == Status::Sat, || format!("status {} after {elapsed:?}", r.status))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    let model = r.model.as_ref().expect("sat has a model");
    ensure(check_model(&p, model) == Ok(true), || "model fails the evaluator".into())?;

    let mut atoms = Vec::new();
    exists_atoms(&p.assertion, &mut atoms);
    ensure(atoms.len() == d.memberships.len(), || {
        format!("{} atoms, {} memberships", atoms.len(), d.memberships.len())
    })?;
    let mut smallest = usize::MAX;
    for i in [0, atoms.len() / 2, atoms.len() - 1] {
        let q = reduce_formula(&Formula::exists(atoms[i].clone())).map_err(text)?;
        let disjuncts = match &q {
            Qf::Or(v) => v.len(),
            _ => 1,
        };
        smallest = smallest.min(disjuncts);
    }
    ensure(smallest >= rows, || format!("only {smallest} disjuncts"))?;
    Ok(format!(
        "lazy sat in {:.2} s over {} memberships; eager reduction has at least {smallest} disjuncts per membership",
        elapsed.as_secs_f64(),
        d.memberships.len()
    ))
}

fn invariants() -> Verdict {
    let mut failures = Vec::new();
    for p in common::all() {
        let r = (p.check)(common::CASES);
        println!(
            "    {} ({} cases): {}",
            p.name,
            common::CASES,
            if r.is_ok() { "ok" } else { "FAILED" }
        );
        if let Err(e) = r {
            failures.push(format!("{}: {e}", p.name));
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} property suites, {} cases each, no failures", common::all().len(), common::CASES))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("doubling table end to end", doubling_table),
        ("branching replay on a symbolic row", symbolic_row_replay),
        ("differential correctness", differential),
        ("portfolio optimization oracle", portfolio),
        ("QBF gadget", qbf),
        ("reduction size law", reduction_size),
        ("lazy versus eager scaling", foreign_keys),
        ("invariant suites", invariants),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("acceptance {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("acceptance {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
