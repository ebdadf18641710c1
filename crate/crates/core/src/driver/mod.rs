//! Search orchestration, the eager path and the brute-force oracle.

pub mod brute;
pub mod eager;
pub mod search;

pub use brute::{solve_bruteforce, BruteForceError, DEFAULT_MAX_SPACE};
pub use eager::{eager_problem, solve_eager, solve_eager_with_row_limit, EagerError};
pub use search::{
    build_engines, optimize, run, solve, Limits, SolveError, SolveResult, Source, Stats, Status, TraceEvent,
    DEFAULT_BOUND,
};
