use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jacpair::cli::{self, Op, Options};

#[derive(Parser)]
#[command(name = "jacpair", version, about = "Batch runner over the jacpair fixture corpus")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// Truncation depth for series operations.
    #[arg(long, global = true, default_value_t = cli::DEFAULT_DEPTH)]
    depth: u32,
    /// Largest accepted x-denominator N in inputs.
    #[arg(long, global = true, default_value_t = cli::DEFAULT_N_CAP)]
    n_cap: u64,
    /// One JSON report per line (default).
    #[arg(long, global = true, conflicts_with = "text")]
    json: bool,
    /// One short line per report.
    #[arg(long, global = true)]
    text: bool,
    /// Worker threads; JACPAIR_JOBS overrides.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone)]
enum Cmd {
    Bracket { paths: Vec<PathBuf> },
    Newton { paths: Vec<PathBuf> },
    PrimeDegree { paths: Vec<PathBuf> },
    Components { paths: Vec<PathBuf> },
    Expand { paths: Vec<PathBuf> },
    R0 { paths: Vec<PathBuf> },
    Reduce { paths: Vec<PathBuf> },
    Normalize { paths: Vec<PathBuf> },
    Weyl { paths: Vec<PathBuf> },
    /// The three identity-verifier programs.
    Verify,
    /// Every op on every fixture, plus `verify`.
    Corpus { paths: Vec<PathBuf> },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let jobs = std::env::var("JACPAIR_JOBS").ok().and_then(|s| s.parse().ok()).or(args.jobs);
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("jacpair: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = Options { depth: args.depth, n_cap: args.n_cap };
    let (ops, paths): (Vec<Op>, Vec<PathBuf>) = match args.cmd.clone() {
        Cmd::Bracket { paths } => (vec![Op::Bracket], paths),
        Cmd::Newton { paths } => (vec![Op::Newton], paths),
        Cmd::PrimeDegree { paths } => (vec![Op::PrimeDegree], paths),
        Cmd::Components { paths } => (vec![Op::Components], paths),
        Cmd::Expand { paths } => (vec![Op::Expand], paths),
        Cmd::R0 { paths } => (vec![Op::R0], paths),
        Cmd::Reduce { paths } => (vec![Op::Reduce], paths),
        Cmd::Normalize { paths } => (vec![Op::Normalize], paths),
        Cmd::Weyl { paths } => (vec![Op::Weyl], paths),
        Cmd::Verify => (vec![Op::Verify], vec![]),
        Cmd::Corpus { paths } => (Op::ALL.to_vec(), paths),
    };
    let fixtures = if ops == [Op::Verify] {
        vec![]
    } else {
        let paths = if paths.is_empty() { vec![cli::default_fixture_dir()] } else { paths };
        match cli::load_fixtures(&paths, &opts) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("jacpair: malformed input: {e}");
                return ExitCode::from(2);
            }
        }
    };
    let reports = cli::run_all(&ops, &fixtures, &opts);
    let mut out = std::io::stdout().lock();
    for r in &reports {
        let line = if args.text { r.text_line() } else { serde_json::to_string(r).expect("report serializes") };
        if writeln!(out, "{line}").is_err() {
            break;
        }
    }
    ExitCode::from(cli::exit_code(&reports) as u8)
}
