//! Command-line surface: parse a system, build its attack graph, compute and
//! report.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::index::{report_for, IndexOptions, DEFAULT_ENUMERATION_CAP};
use crate::io::{emit_report, export_dot, parse_system, IoError};
use crate::linking::{LinkingError, LinkingSolver};
use crate::model::{build_attack_graph, AttackGraph, StructuredSystem, VertexId};
use crate::verify::{verify_structure, VerifyConfig, VerifyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "structsec",
    version,
    about = "Structural actuator security indices of LTI network systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute security indices for all attackable components, or one.
    Index(IndexArgs),
    /// Maximum linking between two vertex sets.
    Linking(LinkingArgs),
    /// Cross-check the structural results against random realizations.
    Verify(VerifyArgs),
    /// Render the attack graph as DOT.
    #[command(name = "export-dot")]
    ExportDot(ExportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// System document (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Only report this component (actuator name or `a_<sensor>`).
    #[arg(long)]
    pub component: Option<String>,
    /// Largest attack set for which subsets are enumerated.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP, value_parser = clap::value_parser!(u32).range(1..=62).map(|v| v as usize))]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct LinkingArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated source vertex names.
    #[arg(long, allow_hyphen_values = true)]
    pub sources: String,
    /// Comma-separated target vertex names; defaults to all sensors.
    #[arg(long)]
    pub targets: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Realizations sampled for the index agreement check.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..).map(|v| v as usize))]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, default_value_t = 1e-9, value_parser = parse_tolerance)]
    pub tol: f64,
    /// Frequencies per realization.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..).map(|v| v as usize))]
    pub freqs: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP, value_parser = clap::value_parser!(u32).range(1..=62).map(|v| v as usize))]
    pub cap: usize,
    /// Minimum rank/linking agreement rate.
    #[arg(long, default_value_t = 1.0, value_parser = parse_rate)]
    pub rank_threshold: f64,
    /// Minimum index agreement rate.
    #[arg(long, default_value_t = 0.98, value_parser = parse_rate)]
    pub index_threshold: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Highlight a maximum linking from these comma-separated sources.
    #[arg(long)]
    pub highlight_sources: Option<String>,
    /// Targets of the highlighted linking; defaults to all sensors.
    #[arg(long)]
    pub targets: Option<String>,
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("tolerance must lie in (0, 1), got {v}"))
    }
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("rate must lie in [0, 1], got {v}"))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: IoError },
    #[error("unknown vertex `{0}`")]
    UnknownName(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("`{0}` is not an attackable component")]
    NotAttackable(String),
    #[error("index computation failed for {0}")]
    Index(String),
    #[error(transparent)]
    Linking(#[from] LinkingError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Io(IoError),
    #[error("verification below threshold")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed => EXIT_VERIFY,
            _ => EXIT_DATA,
        }
    }
}

fn load(path: &Path) -> Result<(StructuredSystem, AttackGraph), CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let system = parse_system(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let graph = build_attack_graph(&system);
    Ok((system, graph))
}

fn names(graph: &AttackGraph, list: &str) -> Result<Vec<VertexId>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|n| {
            graph
                .lookup(n)
                .ok_or_else(|| CliError::UnknownName(n.to_string()))
        })
        .collect()
}

fn targets(graph: &AttackGraph, list: Option<&str>) -> Result<Vec<VertexId>, CliError> {
    match list {
        Some(list) => names(graph, list),
        None => Ok(graph.targets().to_vec()),
    }
}

/// Output of a subcommand and whether it counts as a failure.
struct Outcome {
    text: String,
    failure: Option<CliError>,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Self {
            text,
            failure: None,
        }
    }
}

fn run_index(args: &IndexArgs) -> Result<Outcome, CliError> {
    let (_, graph) = load(&args.common.input)?;
    let components = match &args.component {
        Some(name) => {
            let v = graph
                .lookup(name)
                .ok_or_else(|| CliError::UnknownComponent(name.clone()))?;
            if !graph.attack_set().contains(&v) {
                return Err(CliError::NotAttackable(name.clone()));
            }
            vec![v]
        }
        None => graph.attack_set().to_vec(),
    };
    let options = IndexOptions {
        cap: args.cap,
        parallel: true,
    };
    let report = report_for(&graph, &components, &options);
    let failed: Vec<String> = report
        .results
        .iter()
        .filter(|r| r.outcome.is_err())
        .map(|r| graph.name(r.component).unwrap_or("?").to_string())
        .collect();
    Ok(Outcome {
        text: emit_report(&graph, &report),
        failure: (!failed.is_empty()).then(|| CliError::Index(failed.join(", "))),
    })
}

fn run_linking(args: &LinkingArgs) -> Result<Outcome, CliError> {
    let (_, graph) = load(&args.common.input)?;
    let sources = names(&graph, &args.sources)?;
    let targets = targets(&graph, args.targets.as_deref())?;
    let linking = LinkingSolver::new(&graph).find_max_linking(&sources, &targets)?;
    let mut text = format!("size: {}\n", linking.size());
    for path in &linking.paths {
        let hops: Vec<&str> = path.iter().map(|&v| graph.name(v).unwrap_or("?")).collect();
        text.push_str(&format!("path: {}\n", hops.join(" -> ")));
    }
    Ok(text.into())
}

fn run_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let (system, graph) = load(&args.common.input)?;
    let config = VerifyConfig {
        trials: args.trials,
        frequencies: args.freqs,
        tolerance: args.tol,
        seed: args.seed,
        cap: args.cap,
        rank_threshold: args.rank_threshold,
        index_threshold: args.index_threshold,
        ..VerifyConfig::default()
    };
    let summary = verify_structure(&system, &config)?;
    Ok(Outcome {
        text: summary.render(&graph),
        failure: (!summary.passed()).then_some(CliError::VerificationFailed),
    })
}

fn run_export(args: &ExportArgs) -> Result<Outcome, CliError> {
    let (_, graph) = load(&args.common.input)?;
    let linking = match &args.highlight_sources {
        Some(list) => {
            let sources = names(&graph, list)?;
            let targets = targets(&graph, args.targets.as_deref())?;
            Some(LinkingSolver::new(&graph).find_max_linking(&sources, &targets)?)
        }
        None => None,
    };
    Ok(export_dot(&graph, linking.as_ref())
        .map_err(CliError::Io)?
        .into())
}

fn deliver(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

/// Runs the CLI with explicit streams and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let (result, output) = match &cli.command {
        Command::Index(a) => (run_index(a), a.common.output.as_deref()),
        Command::Linking(a) => (run_linking(a), a.common.output.as_deref()),
        Command::Verify(a) => (run_verify(a), a.common.output.as_deref()),
        Command::ExportDot(a) => (run_export(a), a.common.output.as_deref()),
    };
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = deliver(output, &outcome.text, stdout) {
        let _ = writeln!(stderr, "error: {e}");
        return e.exit_code();
    }
    match outcome.failure {
        Some(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
        None => EXIT_OK,
    }
}
