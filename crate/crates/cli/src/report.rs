use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::json;
use tabula_core::driver::{SolveResult, TraceEvent};

use crate::commands::Failure;
use crate::Format;

pub struct Outcome {
    pub file: PathBuf,
    pub elapsed: Duration,
    pub result: Result<(&'static str, SolveResult), Failure>,
}

fn objective_json(v: i128) -> serde_json::Value {
    i64::try_from(v).map_or_else(|_| json!(v.to_string()), |x| json!(x))
}

fn trace_line(e: &TraceEvent) -> String {
    match e {
        TraceEvent::Bounds { var, lb, ub, source } => {
            let side = |b: &Option<i64>| b.map_or_else(|| "*".to_string(), |v| v.to_string());
            format!("{var} in [{}, {}] ({})", side(lb), side(ub), serde_json::to_value(source).unwrap_or_default().as_str().unwrap_or(""))
        }
        TraceEvent::UniqueCandidate { constraint, table, row } => {
            format!("membership {constraint}: unique candidate, row {row} of {table}")
        }
        TraceEvent::GuardDisabled { constraint } => format!("membership {constraint}: no candidates, guard set to 0"),
        TraceEvent::Decision { depth, decision } => format!("decide at depth {depth}: {decision}"),
        TraceEvent::Conflict { depth } => format!("conflict at depth {depth}"),
        TraceEvent::Incumbent { objective } => format!("incumbent with objective {objective}"),
    }
}

pub fn outcome(o: &Outcome, format: Format) {
    let (engine, r) = match &o.result {
        Ok(x) => x,
        Err(f) => {
            failure(&o.file, "solve", f, format);
            return;
        }
    };
    match format {
        Format::Text => {
            println!("{}: {}", o.file.display(), r.status);
            for e in &r.trace {
                println!("  trace: {}", trace_line(e));
            }
            if let Some(m) = &r.model {
                for (k, v) in m {
                    println!("  {k} = {v}");
                }
            }
            if let Some(v) = r.objective {
                println!("  objective: {v}");
            }
            let s = &r.stats;
            println!(
                "  engine: {engine}, nodes: {}, branches: {}, decisions: {}, conflicts: {}, propagations: {}, lp-calls: {}, pivots: {}, equality-splits: {}",
                s.nodes, s.branch_points, s.decisions, s.conflicts, s.propagations, s.lp_calls, s.pivots, s.equality_splits
            );
            println!("  time: {:.3} s", o.elapsed.as_secs_f64());
        }
        Format::JsonLines => {
            let mut record = json!({
                "file": o.file,
                "command": "solve",
                "engine": engine,
                "status": r.status,
                "model": r.model,
                "stats": r.stats,
                "time_s": o.elapsed.as_secs_f64(),
            });
            if let Some(v) = r.objective {
                record["objective"] = objective_json(v);
            }
            if !r.trace.is_empty() {
                record["trace"] = json!(r.trace);
            }
            println!("{record}");
        }
    }
}

/// Report a failure and return its exit status.
pub fn failure(file: &Path, command: &str, f: &Failure, format: Format) -> u8 {
    match format {
        Format::Text => eprintln!("error: {}", f.message),
        Format::JsonLines => println!(
            "{}",
            json!({"file": file, "command": command, "status": "error", "error": f.message})
        ),
    }
    f.code
}
