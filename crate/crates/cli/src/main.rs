mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tabula_core::driver::DEFAULT_BOUND;

#[derive(Parser, Debug)]
#[command(
    name = "tabula",
    version,
    about = "Solve linear integer arithmetic over symbolic tables",
    after_help = "Exit status: 0 sat/optimal, 1 unsat/infeasible, 2 resource limit, 3 input error.\n\
                  With several input files the highest status wins."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    JsonLines,
}

#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Wall-clock limit per problem, in seconds.
    #[arg(long, value_name = "S", value_parser = positive_seconds)]
    pub time_limit: Option<f64>,

    /// Maximum number of search nodes per problem.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub node_limit: Option<u64>,

    /// Magnitude of the bound given to variables declared without one. The
    /// search is only complete relative to these bounds.
    #[arg(long, value_name = "M", default_value_t = DEFAULT_BOUND, value_parser = clap::value_parser!(i64).range(1..))]
    pub default_bound: i64,

    /// Print the propagation and branching log.
    #[arg(long)]
    pub trace: bool,

    /// Worker threads for batches of files (default: available cores).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

fn positive_seconds(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number of seconds")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve problems with the lazy engine (the eager path is used for
    /// formulas outside the existential fragment).
    Solve {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Solve problems by full reduction to linear arithmetic.
    SolveEager {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Write the eager reduction of a problem as SMT-LIB 2.
    EmitSmt {
        file: PathBuf,
        /// Output path; standard output when omitted.
        out: Option<PathBuf>,
    },
    /// Print the rank of a problem's assertion.
    Rank { file: PathBuf },
    /// Report whether a problem lies in the existential fragment.
    CheckFragment { file: PathBuf },
    /// Generate a benchmark problem.
    BenchGen(commands::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve { files, engine } => commands::solve_files(&files, &engine, false, cli.format),
        Command::SolveEager { files, engine } => commands::solve_files(&files, &engine, true, cli.format),
        Command::EmitSmt { file, out } => commands::emit_smt(&file, out.as_deref(), cli.format),
        Command::Rank { file } => commands::rank(&file, cli.format),
        Command::CheckFragment { file } => commands::check_fragment(&file, cli.format),
        Command::BenchGen(args) => commands::bench_gen(&args, cli.format),
    };
    ExitCode::from(code)
}
