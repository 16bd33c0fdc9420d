//! The `csr` command line.
//!
//! Failures print one JSON object on a single stderr line, e.g.
//! `{"error":"missing_input","message":"...","path":"schema.json"}`, and exit
//! with 2 for missing or invalid input, 3 for a collapsed scope and 1 for
//! anything else.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::api::{respond, QueryError, QueryRequest};
use crate::artifacts::{load_index, write_index, ArtifactError};
use crate::catalog::{CatalogError, SchemaCatalog};
use crate::contextual::{parse_trace, TraceEntry};
use crate::eval::{
    generate_synthetic, latency_bench, run_sweep, sweep_schedules, write_sweep_csv, EvalError, GeneratorProfile,
    SweepConfig,
};
use crate::pipeline::{default_schedule, IterationSchedule, PipelineConfig, PipelineError, RetrievalIndexes};
use crate::service;

#[derive(Debug, Parser)]
#[command(name = "csr", version, about = "Schema retrieval for text-to-SQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and persist the catalog, chunk index and knowledge graph.
    Index(IndexArgs),
    /// Retrieve schema entities for one question.
    Query(QueryArgs),
    /// Sweep iteration schedules on a synthetic or supplied workload; writes CSV.
    Eval(EvalArgs),
    /// Measure end-to-end retrieval latency; writes a JSON report.
    Bench(BenchArgs),
    /// Serve retrieval over HTTP.
    Serve(ServeArgs),
    /// Write a synthetic catalog and trace.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Pipeline config JSON stored in the manifest.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    question: String,
    /// Pipeline config JSON replacing the one in the manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_entities: Option<usize>,
    /// Print table names, one per line, instead of JSON.
    #[arg(long)]
    tables_only: bool,
    /// Leave `stage_timings_ms` empty so repeated runs print identical bytes.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Debug, Args, Clone)]
struct WorkloadArgs {
    /// Benchmark group (1-4) whose size the synthetic profile takes.
    #[arg(long, default_value_t = 2)]
    group: usize,
    /// Generator profile JSON; overrides --group.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use this catalog instead of a synthetic one (needs --trace).
    #[arg(long, requires = "trace")]
    schema: Option<PathBuf>,
    #[arg(long, requires = "schema")]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Sweep config JSON (group label, holdout fraction, pipeline settings).
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON list of iteration schedules; defaults to a built-in grid.
    #[arg(long)]
    schedules: Option<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Pipeline config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    repetitions: usize,
    /// Report destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    #[arg(long, default_value_t = service::DEFAULT_MAX_CONCURRENCY)]
    max_concurrency: usize,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 2)]
    group: usize,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving catalog.json and trace.jsonl.
    #[arg(long)]
    out: PathBuf,
}

/// A failure ready to be reported on one line.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub path: Option<PathBuf>,
    pub step: Option<usize>,
}

impl CliError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
            path: None,
            step: None,
        }
    }

    fn input(kind: &'static str, message: impl Into<String>) -> Self {
        Self::new(2, kind, message)
    }

    fn at(mut self, path: &Path) -> Self {
        self.path = Some(path.to_path_buf());
        self
    }

    pub fn to_line(&self) -> String {
        let mut v = json!({ "error": self.kind, "message": self.message });
        if let Some(p) = &self.path {
            v["path"] = json!(p.display().to_string());
        }
        if let Some(s) = self.step {
            v["step"] = json!(s);
        }
        v.to_string()
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        match &e {
            CatalogError::Io { path, .. } => {
                let path = path.clone();
                CliError::input("missing_input", e.to_string()).at(Path::new(&path))
            }
            _ => CliError::input("invalid_input", e.to_string()),
        }
    }
}

impl From<ArtifactError> for CliError {
    fn from(e: ArtifactError) -> Self {
        match &e {
            ArtifactError::Io { path, .. } => {
                let path = path.clone();
                CliError::input("missing_input", e.to_string()).at(&path)
            }
            ArtifactError::VersionMismatch { .. } => CliError::input("version_mismatch", e.to_string()),
            ArtifactError::Similarity(_) => CliError::new(1, "embedder", e.to_string()),
            _ => CliError::input("invalid_index", e.to_string()),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::ScopeCollapsed { step } => CliError {
                step: Some(step),
                ..CliError::new(3, "scope_collapsed", e.to_string())
            },
            e if e.is_client_error() => CliError::input(e.kind(), e.to_string()),
            e => CliError::new(1, e.kind(), e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        QueryError::from(e).into()
    }
}

impl From<crate::contextual::ContextualError> for CliError {
    fn from(e: crate::contextual::ContextualError) -> Self {
        match e {
            crate::contextual::ContextualError::Similarity(s) => CliError::new(1, "embedder", s.to_string()),
            e => CliError::input("invalid_input", e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidProfile(_)
            | EvalError::Infeasible(_)
            | EvalError::TraceTooSmall(_)
            | EvalError::TooFewRepetitions { .. }
            | EvalError::NoQuestions => CliError::input("invalid_input", e.to_string()),
            EvalError::Contextual(c) => c.into(),
            EvalError::Pipeline(p) => p.into(),
            e => CliError::new(1, "eval", e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| {
        let kind = if e.kind() == std::io::ErrorKind::NotFound {
            "missing_input"
        } else {
            "unreadable_input"
        };
        CliError::input(kind, format!("{}: {e}", path.display())).at(path)
    })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::input("invalid_input", format!("{}: {e}", path.display())).at(path))
}

fn read_trace(path: &Path) -> Result<Vec<TraceEntry>, CliError> {
    parse_trace(&read_text(path)?)
        .map_err(|e| CliError::input("invalid_input", format!("{}: {e}", path.display())).at(path))
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::new(1, "io", e.to_string());
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| io(e).at(p)),
        None => std::io::stdout().write_all(bytes).map_err(io),
    }
}

fn workload(args: &WorkloadArgs) -> Result<(SchemaCatalog, Vec<TraceEntry>), CliError> {
    if let (Some(schema), Some(trace)) = (&args.schema, &args.trace) {
        return Ok((SchemaCatalog::from_path(schema)?, read_trace(trace)?));
    }
    let mut profile = match &args.profile {
        Some(p) => read_json::<GeneratorProfile>(p)?,
        None if (1..=4).contains(&args.group) => GeneratorProfile::group(args.group),
        None => return Err(CliError::input("invalid_input", format!("--group must be 1-4, got {}", args.group))),
    };
    if let Some(seed) = args.seed {
        profile.seed = seed;
    }
    let w = generate_synthetic(&profile)?;
    Ok((w.catalog, w.trace))
}

fn cmd_index(args: IndexArgs) -> Result<(), CliError> {
    let catalog = SchemaCatalog::from_path(&args.schema)?;
    let trace = read_trace(&args.trace)?;
    let config = match &args.config {
        Some(p) => read_json::<PipelineConfig>(p)?,
        None => PipelineConfig {
            schedule: default_schedule(catalog.table_count()),
            ..PipelineConfig::default()
        },
    };
    config.schedule.validate()?;
    let indexes = RetrievalIndexes::build(catalog, &trace, &config.similarity)?;
    let manifest = write_index(&args.out, &indexes, &config)?;
    let summary = json!({
        "out": args.out.display().to_string(),
        "schema_version": manifest.schema_version,
        "artifacts": manifest.artifacts.iter().map(|a| &a.name).collect::<Vec<_>>(),
    });
    write_out(None, format!("{summary}\n").as_bytes())
}

fn cmd_query(args: QueryArgs) -> Result<(), CliError> {
    let loaded = load_index(&args.index)?;
    let config = match &args.config {
        Some(p) => read_json::<PipelineConfig>(p)?,
        None => loaded.manifest.config.clone(),
    };
    let request = QueryRequest {
        question: args.question,
        schedule_override: None,
        max_entities: args.max_entities,
    };
    let mut response = respond(&loaded.indexes, &config, &loaded.manifest.schema_version, &request)?;
    if args.no_timings {
        response = response.without_timings();
    }
    let text = if args.tables_only {
        response.tables.iter().map(|t| format!("{t}\n")).collect()
    } else {
        format!("{}\n", serde_json::to_string(&response).expect("response serializes"))
    };
    write_out(None, text.as_bytes())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let (catalog, trace) = workload(&args.workload)?;
    let mut config = match &args.config {
        Some(p) => read_json::<SweepConfig>(p)?,
        None => SweepConfig::default(),
    };
    if args.config.is_none() {
        config.group = match (&args.workload.schema, &args.workload.profile) {
            (None, None) => format!("group{}", args.workload.group),
            _ => "custom".into(),
        };
    }
    let schedules: Vec<IterationSchedule> = match &args.schedules {
        Some(p) => read_json(p)?,
        None => sweep_schedules(catalog.table_count()),
    };
    let rows = run_sweep(&catalog, &trace, &schedules, &config)?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    write_out(args.out.as_deref(), &buf)
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let (catalog, trace) = workload(&args.workload)?;
    let config = match &args.config {
        Some(p) => read_json::<PipelineConfig>(p)?,
        None => PipelineConfig {
            schedule: default_schedule(catalog.table_count()),
            ..PipelineConfig::default()
        },
    };
    let questions: Vec<String> = trace.iter().map(|e| e.question.clone()).collect();
    let indexes = RetrievalIndexes::build(catalog, &trace, &config.similarity)?;
    let report = latency_bench(&indexes, &config, &questions, args.repetitions)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_out(args.out.as_deref(), format!("{text}\n").as_bytes())
}

fn cmd_serve(args: ServeArgs) -> Result<(), CliError> {
    let loaded = load_index(&args.index)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::new(1, "runtime", e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&args.bind)
            .await
            .map_err(|e| CliError::input("bind", format!("{}: {e}", args.bind)))?;
        let addr = listener.local_addr().map_err(|e| CliError::new(1, "bind", e.to_string()))?;
        eprintln!("{}", json!({ "listening": addr.to_string() }));
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        service::serve(listener, service::router(loaded, args.max_concurrency), shutdown)
            .await
            .map_err(|e| CliError::new(1, "serve", e.to_string()))
    })
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let (catalog, trace) = workload(&WorkloadArgs {
        group: args.group,
        profile: args.profile,
        seed: args.seed,
        schema: None,
        trace: None,
    })?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::new(1, "io", e.to_string()).at(&args.out))?;
    write_out(Some(&args.out.join("catalog.json")), catalog.to_json().as_bytes())?;
    let lines: String = trace
        .iter()
        .map(|e| format!("{}\n", serde_json::to_string(e).expect("trace serializes")))
        .collect();
    write_out(Some(&args.out.join("trace.jsonl")), lines.as_bytes())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::input("usage", first).to_line());
            return 2;
        }
    };
    let result = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Query(a) => cmd_query(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.code
        }
    }
}
