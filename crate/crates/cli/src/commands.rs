use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::Args;
use serde_json::json;
use tabula_core::bench::{self, BenchSpec, Family};
use tabula_core::decompose::{decompose, DecomposeError};
use tabula_core::driver::{eager_problem, run, solve_eager, EagerError, Limits, SolveResult, Status};
use tabula_core::fragment::{formula_rank, is_existential};
use tabula_core::frontend::parse_file;
use tabula_core::reduce::{ReduceError, DEFAULT_ROW_LIMIT};
use tabula_core::smtlib::{emit_smtlib, SmtVar};
use tabula_core::types::{typecheck, TypedProblem};

use crate::report::{self, Outcome};
use crate::{EngineArgs, Format};

pub const EXIT_INPUT: u8 = 3;

pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::Sat | Status::Optimal => 0,
        Status::Unsat | Status::Infeasible => 1,
        Status::ResourceLimit => 2,
    }
}

/// A failure together with the exit status it maps to.
pub struct Failure {
    pub message: String,
    pub code: u8,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
            code: EXIT_INPUT,
        }
    }
}

pub fn load(path: &Path) -> Result<TypedProblem, Failure> {
    let problem = parse_file(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    typecheck(&problem).map_err(|e| Failure::input(format!("{}: type error: {e}", path.display())))
}

fn limits(engine: &EngineArgs) -> Limits {
    Limits {
        max_nodes: engine.node_limit,
        time_limit: engine.time_limit.map(Duration::from_secs_f64),
        default_bound: engine.default_bound,
        cancel: None,
        trace: engine.trace,
    }
}

fn eager_failure(e: EagerError) -> Failure {
    match e {
        EagerError::Reduce(ReduceError::TooLarge { .. }) => Failure {
            message: e.to_string(),
            code: exit_code(Status::ResourceLimit),
        },
        other => Failure::input(other.to_string()),
    }
}

fn solve_one(path: &Path, engine: &EngineArgs, eager: bool) -> Outcome {
    let start = Instant::now();
    let limits = limits(engine);
    let attempt = || -> Result<(&'static str, SolveResult), Failure> {
        let typed = load(path)?;
        if !eager {
            match decompose(&typed) {
                Ok(p) => {
                    let r = run(&p, &limits).map_err(|e| Failure::input(e.to_string()))?;
                    return Ok(("lazy", r));
                }
                Err(DecomposeError::NotExistential) => {}
                Err(e) => return Err(Failure::input(format!("{}: {e}", path.display()))),
            }
        }
        let r = solve_eager(&typed, &limits).map_err(eager_failure)?;
        Ok(("eager", r))
    };
    let result = attempt();
    Outcome {
        file: path.to_path_buf(),
        elapsed: start.elapsed(),
        result,
    }
}

/// Solve every file, `jobs` at a time, and report in input order.
pub fn solve_files(files: &[PathBuf], engine: &EngineArgs, eager: bool, format: Format) -> u8 {
    let jobs = engine
        .jobs
        .map(|j| j as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .min(files.len())
        .max(1);
    let slots: Vec<Mutex<Option<Outcome>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                let outcome = solve_one(path, engine, eager);
                *slots[i].lock().expect("unpoisoned") = Some(outcome);
            });
        }
    });
    let mut code = 0;
    for slot in slots {
        let outcome = slot.into_inner().expect("unpoisoned").expect("every file solved");
        code = code.max(match &outcome.result {
            Ok((_, r)) => exit_code(r.status),
            Err(f) => f.code,
        });
        report::outcome(&outcome, format);
    }
    code
}

pub fn emit_smt(file: &Path, out: Option<&Path>, format: Format) -> u8 {
    let result = (|| -> Result<(usize, String), Failure> {
        let typed = load(file)?;
        let p = eager_problem(&typed, DEFAULT_ROW_LIMIT).map_err(eager_failure)?;
        let vars: Vec<SmtVar> = p
            .vars
            .iter()
            .map(|v| SmtVar {
                name: v.name.clone(),
                lb: v.lb,
                ub: v.ub,
            })
            .collect();
        let mut script = emit_smtlib(&p.qflia, &vars, true);
        if let Some(obj) = &typed.problem().objective {
            let dir = match obj.direction {
                tabula_core::ast::Direction::Maximize => "maximize",
                tabula_core::ast::Direction::Minimize => "minimize",
            };
            script.lines.insert(0, format!("; objective not encoded: {dir} {}", obj.term));
        }
        let text = script.to_string();
        let lines = script.lines.len();
        match out {
            Some(path) => std::fs::write(path, &text)
                .map_err(|e| Failure::input(format!("cannot write `{}`: {e}", path.display())))?,
            None if format == Format::Text => print!("{text}"),
            None => {}
        }
        Ok((lines, text))
    })();
    match result {
        Ok((lines, text)) => {
            if format == Format::JsonLines {
                let mut record = json!({"file": file, "command": "emit-smt", "lines": lines});
                match out {
                    Some(p) => record["out"] = json!(p),
                    None => record["script"] = json!(text),
                }
                println!("{record}");
            } else if let Some(p) = out {
                eprintln!("wrote {} ({lines} lines)", p.display());
            }
            0
        }
        Err(f) => report::failure(file, "emit-smt", &f, format),
    }
}

pub fn rank(file: &Path, format: Format) -> u8 {
    match load(file) {
        Ok(t) => {
            let r = formula_rank(&t.problem().assertion);
            match format {
                Format::Text => println!("{r}"),
                Format::JsonLines => println!("{}", json!({"file": file, "command": "rank", "rank": r})),
            }
            0
        }
        Err(f) => report::failure(file, "rank", &f, format),
    }
}

pub fn check_fragment(file: &Path, format: Format) -> u8 {
    match load(file) {
        Ok(t) => {
            let f = &t.problem().assertion;
            let existential = is_existential(f);
            let r = formula_rank(f);
            match format {
                Format::Text => println!(
                    "{} (rank {r})",
                    if existential { "existential" } else { "not existential" }
                ),
                Format::JsonLines => println!(
                    "{}",
                    json!({"file": file, "command": "check-fragment", "existential": existential, "rank": r})
                ),
            }
            0
        }
        Err(f) => report::failure(file, "check-fragment", &f, format),
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Benchmark family: portfolio, foreign-keys, how-to or geo-box.
    #[arg(long)]
    family: String,
    /// Rows of the main table.
    #[arg(long, default_value_t = 10)]
    rows: usize,
    /// Number of picks (stocks, employees or observations).
    #[arg(long, default_value_t = 2)]
    picks: usize,
    /// Fraction of symbolic cells, where the family has any.
    #[arg(long, default_value_t = 1.0)]
    symbolic: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Portfolio sector cap as a fraction of the total, e.g. `1/3`.
    #[arg(long, default_value = "1/3")]
    sector_cap: String,
    /// Geo-box: leave the species of interest out of the data.
    #[arg(long)]
    absent: bool,
    /// Tables with more rows than this are written to CSV files.
    #[arg(long, default_value_t = 50)]
    csv_threshold: usize,
    /// Output problem file (`.dz`).
    #[arg(long)]
    out: PathBuf,
}

fn fraction(s: &str) -> Option<(i64, i64)> {
    let (a, b) = s.split_once('/')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

pub fn bench_gen(args: &BenchArgs, format: Format) -> u8 {
    let result = (|| -> Result<Vec<PathBuf>, Failure> {
        let family: Family = args.family.parse().map_err(|e: bench::BenchError| Failure::input(e.to_string()))?;
        let sector_cap = fraction(&args.sector_cap)
            .ok_or_else(|| Failure::input(format!("bad fraction `{}`", args.sector_cap)))?;
        let spec = BenchSpec {
            symbolic: args.symbolic,
            sector_cap,
            absent: args.absent,
            ..BenchSpec::new(family, args.rows, args.picks, args.seed)
        };
        let problem = bench::generate(&spec).map_err(|e| Failure::input(e.to_string()))?;
        bench::write_problem(&problem, &args.out, args.csv_threshold).map_err(|e| Failure::input(e.to_string()))
    })();
    match result {
        Ok(paths) => {
            match format {
                Format::Text => {
                    for p in &paths {
                        println!("wrote {}", p.display());
                    }
                }
                Format::JsonLines => println!("{}", json!({"command": "bench-gen", "files": paths})),
            }
            0
        }
        Err(f) => report::failure(&args.out, "bench-gen", &f, format),
    }
}
