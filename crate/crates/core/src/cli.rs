//! The `triage` command line.
//!
//! Exit codes: 0 success, 1 domain failure (invalid matrix, failed
//! evaluation), 2 I/O or usage failure.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::inference::{Answer, Distribution, SelectionPolicy};
use crate::knowledge::{KnowledgeError, KnowledgeMatrix, MatrixFormat, DEFAULT_EPSILON};
use crate::service::{self, AppState, DEFAULT_PORT};
use crate::session::{Session, SessionConfig, DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_MAX_QUESTIONS};
use crate::simulation::{
    self, EvalConfig, MetricsReport, PriorModel, PriorNoiseModel, SessionParams, SyntheticMatrix, VignetteSampler,
    DEFAULT_NOISE, DEFAULT_UNREPORTED_FRACTION,
};

#[derive(Debug, Parser)]
#[command(name = "triage", version, about = "Active diagnosis: prior + information-gain questioning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a knowledge matrix loads and satisfies every invariant.
    Validate {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Run the prior-only / QA-only / combined top-K evaluation.
    Eval(EvalArgs),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
    /// Answer questions in the terminal.
    Interactive(InteractiveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Knowledge matrix (JSON or CSV); omitted means the built-in 9×330 synthetic benchmark.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Evaluate these vignettes instead of sampling synthetic ones (requires --matrix).
    #[arg(long, requires = "matrix")]
    pub vignettes: Option<PathBuf>,
    #[arg(long, default_value_t = 1500)]
    pub episodes: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Target fraction of simulated priors ranking the truth first.
    #[arg(long, default_value_t = DEFAULT_NOISE.target_top1)]
    pub noise_top1: f64,
    /// Sharpness of the simulated classifier softmax.
    #[arg(long, default_value_t = DEFAULT_NOISE.concentration)]
    pub concentration: f64,
    /// Fraction of sampled symptom labels hidden from the answer oracle.
    #[arg(long, default_value_t = DEFAULT_UNREPORTED_FRACTION)]
    pub unreported_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_QUESTIONS)]
    pub max_questions: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE_THRESHOLD)]
    pub threshold: f64,
    /// Smoothing applied to a loaded matrix.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Write the report here instead of stdout; the table is still printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "TRIAGE_MATRIX")]
    pub matrix: PathBuf,
    #[arg(long, env = "TRIAGE_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, env = "TRIAGE_EPSILON", default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, env = "TRIAGE_SESSION_TTL_SECONDS", default_value_t = 3600)]
    pub session_ttl_seconds: u64,
}

#[derive(Debug, Args)]
pub struct InteractiveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// JSON file mapping condition names to prior probabilities; default uniform.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Symptom already reported by the patient (repeatable).
    #[arg(long = "symptom")]
    pub symptoms: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_QUESTIONS)]
    pub max_questions: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "expected_ig")]
    pub policy: SelectionPolicy,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn stdout_error(source: io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source }
}

fn load_matrix(path: &Path, epsilon: f64) -> Result<KnowledgeMatrix, CliError> {
    let file = File::open(path).map_err(io_error(path))?;
    KnowledgeMatrix::load_smoothed(io::BufReader::new(file), MatrixFormat::from_path(path), epsilon).map_err(|e| match e {
        KnowledgeError::Io(source) => CliError::Io { path: path.to_owned(), source },
        KnowledgeError::EpsilonOutOfRange(_) => CliError::Usage(e.to_string()),
        other => CliError::Domain(format!("{}: {other}", path.display())),
    })
}

/// Parse arguments and dispatch; the binary's whole `main`.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdin = io::stdin();
    let result = run(cli, &mut stdin.lock(), &mut io::stdout().lock());
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("triage: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Validate { matrix } => cmd_validate(&matrix, out),
        Command::Eval(args) => cmd_eval(&args, out).map(|()| 0),
        Command::Serve(args) => cmd_serve(&args).map(|()| 0),
        Command::Interactive(args) => cmd_interactive(&args, input, out).map(|()| 0),
    }
}

/// Report dimensions or every violation. Returns the exit code (0 or 1).
pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<u8, CliError> {
    let file = File::open(path).map_err(io_error(path))?;
    let (conditions, symptoms, violations) =
        match KnowledgeMatrix::validate(io::BufReader::new(file), MatrixFormat::from_path(path)) {
            Ok(checked) => checked,
            Err(KnowledgeError::Io(source)) => return Err(CliError::Io { path: path.to_owned(), source }),
            Err(e) => {
                writeln!(out, "{}: invalid\n  {e}", path.display()).map_err(stdout_error)?;
                return Ok(1);
            }
        };
    if violations.is_empty() {
        writeln!(out, "{}: ok, {conditions} conditions, {symptoms} symptoms", path.display()).map_err(stdout_error)?;
        Ok(0)
    } else {
        writeln!(out, "{}: {} violation(s) ({conditions} conditions, {symptoms} symptoms)", path.display(), violations.len())
            .map_err(stdout_error)?;
        for v in &violations {
            writeln!(out, "  {v}").map_err(stdout_error)?;
        }
        Ok(1)
    }
}

/// One report per selection policy, same episodes.
#[derive(Debug, Serialize)]
pub struct EvalOutput {
    pub reports: Vec<MetricsReport>,
}

impl EvalOutput {
    pub fn to_table(&self) -> String {
        self.reports.iter().map(MetricsReport::to_table).collect::<Vec<_>>().join("\n")
    }
}

fn eval_config(args: &EvalArgs) -> Result<EvalConfig, CliError> {
    let noise = PriorNoiseModel::new(args.noise_top1, args.concentration).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = EvalConfig {
        episodes: args.episodes,
        folds: args.folds,
        sampler: VignetteSampler { prior: PriorModel::Noisy(noise), unreported_fraction: args.unreported_fraction },
        session: SessionParams {
            max_questions: args.max_questions,
            confidence_threshold: args.threshold,
            policy: SelectionPolicy::ExpectedIg,
        },
        seed: args.seed,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

/// Evaluate under every policy; flags are fully validated before any episode runs.
pub fn run_eval(args: &EvalArgs) -> Result<EvalOutput, CliError> {
    let config = eval_config(args)?;
    if !(args.epsilon > 0.0 && args.epsilon < 0.5) {
        return Err(CliError::Usage(format!("--epsilon {} must lie in (0, 0.5)", args.epsilon)));
    }
    let matrix = match &args.matrix {
        Some(path) => load_matrix(path, args.epsilon)?,
        None => SyntheticMatrix::default().generate(args.seed).map_err(|e| CliError::Domain(e.to_string()))?,
    };
    let vignettes = match &args.vignettes {
        Some(path) => {
            let file = File::open(path).map_err(io_error(path))?;
            let vs = simulation::read_vignettes(io::BufReader::new(file), &matrix).map_err(|e| CliError::Domain(e.to_string()))?;
            if vs.len() < args.folds {
                return Err(CliError::Usage(format!("{} vignettes is fewer than --folds {}", vs.len(), args.folds)));
            }
            Some(vs)
        }
        None => None,
    };
    let reports = SelectionPolicy::ALL
        .into_iter()
        .map(|policy| {
            let mut config = config.clone();
            config.session.policy = policy;
            match &vignettes {
                Some(vs) => simulation::evaluate_vignettes(&matrix, vs, config.folds, &config.session),
                None => simulation::evaluate(&matrix, &config),
            }
            .map_err(|e| CliError::Domain(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalOutput { reports })
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let output = run_eval(args)?;
    let rendered = match args.format {
        OutputFormat::Json => serde_json::to_string_pretty(&output).expect("report serializes") + "\n",
        OutputFormat::Table => output.to_table(),
    };
    match &args.out {
        Some(path) => {
            std::fs::write(path, rendered).map_err(io_error(path))?;
            out.write_all(output.to_table().as_bytes()).map_err(stdout_error)?;
        }
        None => out.write_all(rendered.as_bytes()).map_err(stdout_error)?,
    }
    Ok(())
}

fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .try_init();
    let matrix = Arc::new(load_matrix(&args.matrix, args.epsilon)?);
    tracing::info!(
        conditions = matrix.condition_count(),
        symptoms = matrix.symptom_count(),
        "loaded knowledge matrix"
    );
    let state = AppState::new(matrix, Duration::from_secs(args.session_ttl_seconds));
    let runtime = tokio::runtime::Runtime::new().map_err(io_error(Path::new("<runtime>")))?;
    runtime.block_on(async {
        let addr = std::net::SocketAddr::from(([0, 0, 0, 0], args.port));
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| CliError::Io {
            path: PathBuf::from(addr.to_string()),
            source,
        })?;
        service::serve(listener, state).await.map_err(|source| CliError::Io { path: PathBuf::from(addr.to_string()), source })
    })
}

fn load_prior_map(path: &Path, matrix: &KnowledgeMatrix) -> Result<Distribution, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let map: BTreeMap<String, f64> =
        serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    let mut weights = vec![0.0; matrix.condition_count()];
    for (name, p) in map {
        let c = matrix
            .condition_index(&name)
            .ok_or_else(|| CliError::Domain(format!("{}: unknown condition {name:?}", path.display())))?;
        weights[c.0] = p;
    }
    Distribution::from_weights(weights).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn print_top(out: &mut dyn Write, session: &Session, matrix: &KnowledgeMatrix, k: usize) -> io::Result<()> {
    for (rank, (c, p)) in session.differential(k).ranked.into_iter().enumerate() {
        writeln!(out, "  {}. {:<24} {:6.2}%", rank + 1, matrix.condition_name(c), p * 100.0)?;
    }
    Ok(())
}

/// Terminal dialog: ask, read y/n/u, show the top three, repeat until a stop rule fires.
pub fn cmd_interactive(args: &InteractiveArgs, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    let matrix = load_matrix(&args.matrix, args.epsilon)?;
    let prior = match &args.prior {
        Some(path) => load_prior_map(path, &matrix)?,
        None => Distribution::uniform(matrix.condition_count()),
    };
    let initial = args
        .symptoms
        .iter()
        .map(|n| matrix.symptom_index(n).ok_or_else(|| CliError::Usage(format!("unknown symptom {n:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let config = SessionConfig::new(prior)
        .with_initial_symptoms(initial)
        .with_max_questions(args.max_questions)
        .with_threshold(args.threshold)
        .with_policy(args.policy);
    let mut session = Session::create(config, &matrix).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = BufWriter::new(out);
    let mut dialog = || -> io::Result<bool> {
        writeln!(out, "{} conditions, {} symptoms", matrix.condition_count(), matrix.symptom_count())?;
        let mut line = String::new();
        while let Some(s) = session.pending() {
            write!(
                out,
                "Question {} of {}: {}? [y/n/u] ",
                session.questions_asked() + 1,
                session.config().max_questions,
                matrix.symptom_name(s)
            )?;
            out.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                writeln!(out, "\ninput closed; stopping early")?;
                return Ok(false);
            }
            let answer: Answer = match line.parse() {
                Ok(a) => a,
                Err(_) => {
                    writeln!(out, "please answer y, n or u")?;
                    continue;
                }
            };
            session
                .submit_answer(&matrix, s, answer)
                .map_err(|e| io::Error::other(e.to_string()))?;
            print_top(&mut out, &session, &matrix, 3)?;
        }
        Ok(true)
    };
    let finished = dialog().map_err(stdout_error)?;
    if finished {
        let reason = session.stop_reason().expect("loop exits only when finished");
        writeln!(out, "Finished: {reason} after {} question(s)", session.questions_asked()).map_err(stdout_error)?;
    }
    writeln!(out, "Differential:").map_err(stdout_error)?;
    print_top(&mut out, &session, &matrix, matrix.condition_count()).map_err(stdout_error)?;
    out.flush().map_err(stdout_error)?;
    Ok(())
}
