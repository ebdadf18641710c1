//! The problem files shipped in `problems/`, checked against independent
//! oracles.

use std::path::{Path, PathBuf};

use tabula_core::bench::{BenchSpec, Family, Portfolio};
use tabula_core::decompose::{decompose, DecomposeError};
use tabula_core::driver::{run, solve_eager, Limits, SolveResult, Status};
use tabula_core::eval::{check_model, enumerate};
use tabula_core::fragment::{formula_rank, is_existential};
use tabula_core::frontend::{parse, parse_file};
use tabula_core::types::{typecheck, TypedProblem};

mod oracles;

fn path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn load(name: &str) -> TypedProblem {
    typecheck(&parse_file(&path(name)).unwrap()).unwrap()
}

fn checked(t: &TypedProblem, r: SolveResult) -> SolveResult {
    if let Some(m) = &r.model {
        assert_eq!(check_model(t.problem(), m), Ok(true));
    }
    r
}

fn lazy(t: &TypedProblem) -> SolveResult {
    checked(t, run(&decompose(t).unwrap(), &Limits::default()).unwrap())
}

fn eager(t: &TypedProblem) -> SolveResult {
    checked(t, solve_eager(t, &Limits::default()).unwrap())
}

#[test]
fn distinct_picks_are_decided_eagerly() {
    let t = load("example1.dz");
    let f = &t.problem().assertion;
    assert!(!is_existential(f));
    assert_eq!(formula_rank(f), 2);
    assert_eq!(decompose(&t), Err(DecomposeError::NotExistential));
    let truth = enumerate(t.problem(), 0, 1 << 20).unwrap();
    assert!(truth.model.is_none());
    assert_eq!(eager(&t).status, Status::Unsat);
}

#[test]
fn distinct_picks_optimum_matches_enumeration() {
    let t = load("example1_ok.dz");
    let truth = enumerate(t.problem(), 0, 1 << 20).unwrap();
    let r = eager(&t);
    assert_eq!(r.status, Status::Optimal);
    assert_eq!(r.objective, truth.objective);
    assert_eq!(r.objective, Some(12));
    let m = r.model.unwrap();
    let mut picks = [m["x1"], m["x2"], m["x3"]];
    picks.sort_unstable();
    assert!(picks.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn doubling_table_on_both_paths() {
    let t = load("example3.dz");
    let l = lazy(&t);
    assert_eq!(l.status, Status::Unsat);
    assert_eq!(l.stats.branch_points, 0);
    assert_eq!(eager(&t).status, Status::Unsat);
}

#[test]
fn small_files_agree_with_enumeration() {
    let symbolic = std::fs::read_to_string(path("symbolic_row.dz")).unwrap().replace("-100 100", "-6 6");
    let symbolic = typecheck(&parse(&symbolic).unwrap()).unwrap();
    for (name, t) in [("symbolic_row.dz", symbolic), ("stocks_quotes.dz", load("stocks_quotes.dz"))] {
        let truth = enumerate(t.problem(), 0, 1 << 22).unwrap();
        for r in [lazy(&t), eager(&t)] {
            assert_eq!(r.status.is_feasible(), truth.model.is_some(), "{name}");
            assert_eq!(r.objective, truth.objective, "{name}");
        }
    }
    assert_eq!(lazy(&load("symbolic_row.dz")).objective, Some(5));
}

#[test]
fn shipped_portfolio_matches_enumeration() {
    let spec = BenchSpec {
        sector_cap: (2, 3),
        ..BenchSpec::new(Family::Portfolio, 8, 3, 1)
    };
    let pf = Portfolio::generate(&spec).unwrap();
    assert_eq!(parse_file(&path("portfolio.dz")).unwrap(), pf.to_problem());
    let r = lazy(&load("portfolio.dz"));
    assert_eq!(r.objective, oracles::portfolio_oracle(&pf));
    assert_eq!(r.objective, Some(240));
}

#[test]
fn generated_files_solve() {
    for name in ["foreign_keys.dz", "geo_box.dz", "how_to.dz"] {
        assert_eq!(lazy(&load(name)).status, Status::Sat, "{name}");
    }
}

#[test]
fn runs_are_deterministic() {
    for name in ["symbolic_row.dz", "portfolio.dz", "geo_box.dz", "how_to.dz"] {
        let t = load(name);
        let a = lazy(&t);
        let b = lazy(&t);
        assert_eq!(a, b, "{name}");
    }
}
