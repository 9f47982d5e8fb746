//! Subcommands of the `space` binary.

use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use space_core::export::{build_catalog, export_csv, ExportMode, ExportRequest};
use space_core::sessionlog::{write_archive, write_session};
use space_core::studysim::{
    analyze_questions, recovery_experiment, report_csv, report_text, simulate_cohort, CohortConfig,
    Question, StudyDataset,
};
use space_core::taskgen::{default_map, generate_plan_with_map, LandmarkMap, PlanConfig, Week};

use crate::batch::Ingested;
use crate::error::AppError;
use crate::server::{self, ServerConfig};

pub const DEFAULT_PORT: u16 = 8787;
pub const DATASET_FILE: &str = "dataset.json";
pub const ARCHIVE_FILE: &str = "sessions.zip";

#[derive(Debug, Parser)]
#[command(name = "space", version, about = "mini-SPACE task plans, cohorts, parsing, export and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the task plan of one session.
    Gen(GenArgs),
    /// Simulate a cohort: dataset.json plus a zip of session logs.
    Simulate(SimulateArgs),
    /// Validate session logs or zip archives and report per-entry status.
    Parse(ParseArgs),
    /// Export CSV from session logs or zip archives.
    Export(ExportArgs),
    /// Run the Q1-Q6 analysis plan on a dataset.
    Analyze(AnalyzeArgs),
    /// Repeat simulate and analyze to measure effect recovery.
    Recover(RecoverArgs),
    /// Run the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Session week, 1 to 3.
    #[arg(long)]
    pub week: i64,
    #[arg(long)]
    pub seed: u64,
    /// Opposing rotation pairs in weeks 1-2.
    #[arg(long, default_value_t = PlanConfig::default().n_pairs)]
    pub pairs: usize,
    /// Forward distances in metres, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub forward_distances: Option<Vec<f64>>,
    /// Landmark map (same layout as a session log's `map` block).
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    /// Cohort config (TOML). Defaults to the built-in calibration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's participants per age-group and gender cell.
    #[arg(long)]
    pub n_per_cell: Option<usize>,
}

impl CohortArgs {
    fn load(&self) -> Result<CohortConfig, AppError> {
        let mut config = match &self.config {
            Some(path) => CohortConfig::from_toml(&read_text(path)?)?,
            None => CohortConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.n_per_cell {
            config.n_per_cell = n;
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub cohort: CohortArgs,
    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Session log JSON files or zip archives.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Session log JSON files or zip archives.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// `quick_summary` (one row per session) or `detailed` (one row per trial).
    #[arg(long, default_value = "quick_summary")]
    pub mode: String,
    /// Columns to keep, comma separated. Defaults to the whole catalog.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Print the variable catalog as JSON instead of exporting.
    #[arg(long)]
    pub catalog: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Dataset written by `simulate`. Without it a cohort is simulated from
    /// the config options.
    #[arg(long, conflicts_with_all = ["config", "seed", "n_per_cell"])]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub cohort: CohortArgs,
    /// Research questions to run, comma separated. Defaults to all that the
    /// dataset supports.
    #[arg(long, value_delimiter = ',')]
    pub questions: Option<Vec<Question>>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "SPACE_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Directory of static assets served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Seconds an uploaded batch is kept.
    #[arg(long, default_value_t = 3600)]
    pub ttl_secs: u64,
    /// Largest accepted upload in MiB.
    #[arg(long, default_value_t = 256)]
    pub max_upload_mib: usize,
}

fn read_text(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|e| AppError::new("io", format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, AppError> {
    fs::read(path).map_err(|e| AppError::new("io", format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), AppError> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| AppError::new("io", format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(bytes).and_then(|_| out.flush()) {
                // A closed pipe (`| head`) is the reader's choice, not a failure.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("serializable");
    s.push(b'\n');
    s
}

fn ingest(inputs: &[PathBuf]) -> Result<Ingested, AppError> {
    let mut batch = Ingested::default();
    for path in inputs {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        batch.add(&name, &read_bytes(path)?);
    }
    Ok(batch)
}

fn gen(args: &GenArgs) -> Result<(), AppError> {
    let week = Week::new(args.week)?;
    let mut config = PlanConfig {
        n_pairs: args.pairs,
        ..PlanConfig::default()
    };
    if let Some(d) = &args.forward_distances {
        config.forward_distances_m = d.clone();
    }
    let map = match &args.map {
        Some(path) => serde_json::from_str::<LandmarkMap>(&read_text(path)?)
            .map_err(|e| AppError::new("map", format!("{}: {e}", path.display())))?,
        None => default_map(week),
    };
    let plan = generate_plan_with_map(week, args.seed, &config, map)?;
    emit(args.output.as_deref(), &pretty(&plan))
}

fn simulate(args: &SimulateArgs) -> Result<(), AppError> {
    let config = args.cohort.load()?;
    let dataset = simulate_cohort(&config)?;
    fs::create_dir_all(&args.out)?;
    let mut json = dataset.to_json().into_bytes();
    json.push(b'\n');
    fs::write(args.out.join(DATASET_FILE), json)?;
    let entries = dataset
        .logs()
        .map(|log| Ok((log.entry_name(), write_session(log)?)))
        .collect::<Result<Vec<_>, space_core::SessionError>>()
        .map_err(|e| AppError::new("session", e.to_string()))?;
    let n_logs = entries.len();
    let zip = write_archive(entries).map_err(|e| AppError::new("archive", e.to_string()))?;
    fs::write(args.out.join(ARCHIVE_FILE), zip)?;
    let summary = serde_json::json!({
        "seed": dataset.seed,
        "participants": dataset.participants.len(),
        "sessions": n_logs,
        "dataset": args.out.join(DATASET_FILE),
        "archive": args.out.join(ARCHIVE_FILE),
    });
    emit(None, &pretty(&summary))
}

fn parse(args: &ParseArgs) -> Result<(), AppError> {
    let batch = ingest(&args.inputs)?;
    let summary = serde_json::json!({
        "n_ok": batch.sessions.len(),
        "n_error": batch.n_errors(),
        "entries": batch.entries,
    });
    emit(None, &pretty(&summary))?;
    match batch.failure() {
        Some(err) => {
            for entry in batch.entries.iter().filter(|e| e.status != "ok") {
                if entry.violations.is_empty() {
                    eprintln!("{}: {}", entry.name, entry.message.as_deref().unwrap_or("error"));
                } else {
                    eprintln!("{}: {} validation error(s)", entry.name, entry.violations.len());
                    for v in &entry.violations {
                        eprintln!("  {v}");
                    }
                }
            }
            Err(err)
        }
        None => Ok(()),
    }
}

fn export(args: &ExportArgs) -> Result<(), AppError> {
    let mode: ExportMode = args.mode.parse()?;
    let batch = ingest(&args.inputs)?;
    if let Some(err) = batch.failure() {
        return Err(err);
    }
    let catalog = build_catalog(&batch.sessions, mode)?;
    if args.catalog {
        return emit(args.output.as_deref(), &pretty(&catalog));
    }
    let request = match &args.columns {
        Some(columns) => ExportRequest {
            mode,
            selected_columns: columns.clone(),
        },
        None => ExportRequest::all(&catalog),
    };
    let csv = export_csv(&batch.sessions, &request)?;
    emit(args.output.as_deref(), &csv)
}

fn analyze(args: &AnalyzeArgs) -> Result<(), AppError> {
    let dataset = match &args.dataset {
        Some(path) => StudyDataset::from_json(&read_text(path)?)?,
        None => simulate_cohort(&args.cohort.load()?)?,
    };
    let questions = match &args.questions {
        Some(q) => q.clone(),
        None if dataset.supervised().next().is_some() => Question::ALL.to_vec(),
        None => Question::ALL[..4].to_vec(),
    };
    let report = analyze_questions(&dataset, &questions)?;
    let bytes = match args.format {
        ReportFormat::Json => {
            let mut s = report.to_json().into_bytes();
            s.push(b'\n');
            s
        }
        ReportFormat::Csv => report_csv(&report).into_bytes(),
        ReportFormat::Text => report_text(&report).into_bytes(),
    };
    emit(args.output.as_deref(), &bytes)
}

fn recover(args: &RecoverArgs) -> Result<(), AppError> {
    let report = recovery_experiment(&args.cohort.load()?, args.reps)?;
    let mut s = report.to_json().into_bytes();
    s.push(b'\n');
    emit(args.output.as_deref(), &s)
}

fn serve(args: &ServeArgs) -> Result<(), AppError> {
    let config = ServerConfig {
        ttl: Duration::from_secs(args.ttl_secs),
        max_upload_bytes: args.max_upload_mib.saturating_mul(1024 * 1024),
        static_dir: args.static_dir.clone(),
    };
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(server::serve(addr, config))
}

pub fn execute(cli: &Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Simulate(a) => simulate(a),
        Command::Parse(a) => parse(a),
        Command::Export(a) => export(a),
        Command::Analyze(a) => analyze(a),
        Command::Recover(a) => recover(a),
        Command::Serve(a) => serve(a),
    }
}
