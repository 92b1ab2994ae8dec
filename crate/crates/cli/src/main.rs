use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pointwise_core::equilibrium::{analyze, build_stag_game, EquilibriumError, GameDocument};
use pointwise_core::games::PayoffConfig;
use pointwise_core::ledger::{export_report, EventStore, ReportFormat};
use pointwise_core::simulator::{
    compare_mechanisms, reports_to_csv, run_simulation, run_simulation_traced, trace_to_jsonl,
    Mechanism, SimError, SimulationConfig,
};
use pointwise_core::Rational;
use pointwise_service::ApiError;

#[derive(Parser)]
#[command(name = "pointwise", version, about = "Sealed-estimate story pointing: simulate, analyze, serve, report")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an agent-based simulation from a JSON config.
    Simulate(SimulateArgs),
    /// Print the equilibrium analysis of a game.
    Analyze(AnalyzeArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Export a session's leaderboard, velocity and scores.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Comma-separated mechanisms to compare on common random numbers.
    #[arg(long, value_delimiter = ',')]
    mechanisms: Vec<String>,
    /// Per-story JSON Lines trace for offline re-scoring.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "game_source")]
struct GameSource {
    /// Normal-form game document (JSON).
    #[arg(long)]
    game: Option<PathBuf>,
    /// Analyze the n-player team accuracy game instead.
    #[arg(long)]
    stag_n: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: GameSource,
    /// Payoff config (JSON) for --stag-n; defaults apply otherwise.
    #[arg(long, requires = "stag_n")]
    payoff: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "POINTWISE_LISTEN", default_value = "127.0.0.1:8080")]
    listen: String,
    #[arg(long, env = "POINTWISE_DATA", default_value = "data")]
    data: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    session: String,
    #[arg(long, env = "POINTWISE_DATA", default_value = "data")]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also save the report as report.<session>.<ext> in the data directory.
    #[arg(long)]
    save: bool,
}

#[derive(Debug)]
struct Failure {
    code: &'static str,
    message: String,
}

impl Failure {
    fn new(code: &'static str, message: impl fmt::Display) -> Self {
        Failure { code, message: message.to_string() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::new("INVALID_CONFIG", e)
    }
}

impl From<EquilibriumError> for Failure {
    fn from(e: EquilibriumError) -> Self {
        Failure::new("INVALID_GAME", e)
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        let code = pointwise_service::CODES
            .iter()
            .map(|(c, _)| *c)
            .find(|c| *c == e.code)
            .unwrap_or("INTERNAL");
        Failure::new(code, e.message)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new("IO_ERROR", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::new("IO_ERROR", format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, code: &'static str) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::new(code, format!("{}: {e}", path.display())))
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn simulate(args: SimulateArgs) -> Result<String, Failure> {
    let cfg: SimulationConfig = parse_json(&args.config, "INVALID_CONFIG")?;
    let reports = if args.mechanisms.is_empty() {
        let report = match &args.trace {
            Some(path) => {
                let (report, trace) = run_simulation_traced(&cfg)?;
                write(path, &trace_to_jsonl(&trace))?;
                report
            }
            None => run_simulation(&cfg)?,
        };
        vec![report]
    } else {
        if args.trace.is_some() {
            return Err(Failure::new("INVALID_INPUT", "--trace works with a single mechanism only"));
        }
        let mechanisms = args
            .mechanisms
            .iter()
            .map(|m| m.trim().parse::<Mechanism>())
            .collect::<Result<Vec<_>, _>>()?;
        compare_mechanisms(&cfg, &mechanisms)?
    };
    let doc = match (args.format, args.mechanisms.is_empty()) {
        (Format::Csv, _) => reports_to_csv(&reports),
        (Format::Json, true) => pretty(&reports[0]),
        (Format::Json, false) => pretty(&reports),
    };
    match &args.out {
        Some(path) => write(path, &doc).map(|()| String::new()),
        None => Ok(doc),
    }
}

fn analyze_cmd(args: AnalyzeArgs) -> Result<String, Failure> {
    let game = match (args.source.game, args.source.stag_n) {
        (Some(path), _) => parse_json::<GameDocument>(&path, "INVALID_GAME")?.into_game()?,
        (None, Some(n)) => {
            let cfg: PayoffConfig = match &args.payoff {
                Some(path) => parse_json(path, "INVALID_CONFIG")?,
                None => PayoffConfig::default(),
            };
            cfg.validate().map_err(|e| Failure::new("INVALID_CONFIG", e))?;
            build_stag_game::<Rational>(n, &cfg)?
        }
        (None, None) => unreachable!("clap requires one game source"),
    };
    Ok(pretty(&analyze(&game).to_json(&game)))
}

fn report(args: ReportArgs) -> Result<String, Failure> {
    let format = match args.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    if !pointwise_core::session::valid_session_id(&args.session) {
        return Err(Failure::new("INVALID_INPUT", format!("bad session id {:?}", args.session)));
    }
    let store = EventStore::open(&args.data).map_err(ApiError::from)?;
    let session = store.load(&args.session).map_err(ApiError::from)?;
    if args.save {
        let path = store.write_report(&session, format).map_err(ApiError::from)?;
        eprintln!("saved {}", path.display());
    }
    Ok(export_report(&session, format).map_err(ApiError::from)?)
}

fn serve(args: ServeArgs) -> Result<String, Failure> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new("IO_ERROR", e))?;
    runtime
        .block_on(pointwise_service::serve(&args.listen, args.data))
        .map_err(|e| Failure::new("SERVE_FAILED", e))?;
    Ok(String::new())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Serve(a) => serve(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(doc) => {
            let mut out = io::stdout().lock();
            if out.write_all(doc.as_bytes()).and_then(|()| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error[{}]: {}", f.code, f.message);
            ExitCode::from(1)
        }
    }
}
