use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use polyeq_core::document::PolytopeDocument;
use polyeq_core::equidecomp::Triangulator;
use polyeq_core::equivalence::Mode;
use polyeq_core::Error;
use serde_json::{json, Value};

mod commands;

/// Exact Ehrhart polynomials, unimodular equivalence and equidecomposability
/// of lattice polytopes.
#[derive(Parser, Debug)]
#[command(name = "polyeq", version)]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ehrhart polynomial, normalized volume and a reciprocity check.
    Ehrhart { file: PathBuf },
    /// Decide unimodular equivalence of two simplices.
    Equiv {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
    },
    /// Match triangulations of kP and kQ for k = 1..=DILATE.
    Equidecomp {
        p: PathBuf,
        q: PathBuf,
        #[arg(long, default_value_t = 1)]
        dilate: u64,
        #[arg(long, value_enum, default_value = "fine")]
        triangulation: TriangulationArg,
    },
    /// Lift a simplex to a pyramid in a higher dimension.
    Pyramid {
        file: PathBuf,
        #[arg(long)]
        target_dim: usize,
    },
    /// Mutate seed polytopes and group them by Ehrhart polynomial.
    Search {
        seeds: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        delta_min: i64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        delta_max: i64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Full,
    EqualVolume,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::EqualVolume => Mode::EqualVolume,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TriangulationArg {
    Fine,
    Pulling,
}

impl From<TriangulationArg> for Triangulator {
    fn from(t: TriangulationArg) -> Triangulator {
        match t {
            TriangulationArg::Fine => Triangulator::Fine,
            TriangulationArg::Pulling => Triangulator::Pulling,
        }
    }
}

/// Failure of a command, carrying the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

/// A command's result: text for the terminal and the JSON `result` object.
pub struct Outcome {
    pub text: String,
    pub json: Value,
}

pub struct Input {
    pub path: PathBuf,
    pub name: String,
    pub document: PolytopeDocument,
}

pub fn read_input(path: &Path) -> Result<Input, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let document = PolytopeDocument::parse(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let name = document.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string())
    });
    Ok(Input {
        path: path.to_path_buf(),
        name,
        document,
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("POLYEQ_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Usage(format!(
                "POLYEQ_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn run(cli: &Cli) -> Result<(Outcome, Vec<Input>), Failure> {
    match &cli.command {
        Command::Ehrhart { file } => commands::ehrhart(read_input(file)?),
        Command::Equiv {
            source,
            target,
            mode,
        } => commands::equiv(read_input(source)?, read_input(target)?, (*mode).into()),
        Command::Equidecomp {
            p,
            q,
            dilate,
            triangulation,
        } => commands::equidecomp(
            read_input(p)?,
            read_input(q)?,
            *dilate,
            (*triangulation).into(),
        ),
        Command::Pyramid { file, target_dim } => commands::pyramid(read_input(file)?, *target_dim),
        Command::Search {
            seeds,
            budget,
            seed,
            delta_min,
            delta_max,
        } => {
            let inputs = seeds
                .iter()
                .map(|p| read_input(p))
                .collect::<Result<Vec<_>, _>>()?;
            commands::search(inputs, *budget, *seed, *delta_min, *delta_max)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ehrhart { .. } => "ehrhart",
        Command::Equiv { .. } => "equiv",
        Command::Equidecomp { .. } => "equidecomp",
        Command::Pyramid { .. } => "pyramid",
        Command::Search { .. } => "search",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let started = Instant::now();
    let result = configure_threads().and_then(|()| run(&cli));
    match result {
        Ok((outcome, inputs)) => {
            if cli.json {
                let report = json!({
                    "command": command_name(&cli.command),
                    "argv": std::env::args().collect::<Vec<_>>(),
                    "inputs": inputs.iter().map(|i| json!({
                        "path": i.path.display().to_string(),
                        "name": i.name,
                        "document": i.document.to_json(),
                    })).collect::<Vec<_>>(),
                    "result": outcome.json,
                    "elapsed_ms": started.elapsed().as_millis() as u64,
                });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("serializable")
                );
            } else {
                print!("{}", outcome.text);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
