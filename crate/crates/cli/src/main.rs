//! `vibromix`: run the feedback engine, serve its control surface and
//! analyze recordings.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "vibromix",
    version,
    about = "Vibrotactile feedback engine and analysis toolkit"
)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process recorded or synthetic input through the pipeline offline
    /// (or paced in real time) and write the rendered session.
    Run(RunArgs),
    /// Run the pipeline live and expose /control (WebSocket) and /status.
    Serve(ServeArgs),
    /// Render a scenario script into a session directory with ground truth.
    Synth(SynthArgs),
    /// Placement and fidelity analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Gated RMS/ZCR metrics for one or more trial sessions.
    TrialMetrics(TrialArgs),
    /// Check a pipeline config, scenario script, session directory or
    /// dataset index.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline config (JSON). Flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Session directory to use as input for every channel (raw stream of
    /// the channel's id). Without --config, one channel per recorded tool.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Processing rate, Hz.
    #[arg(long)]
    rate: Option<f64>,
    /// Samples per block (power of two, 16 to 1024).
    #[arg(long)]
    block_size: Option<usize>,
    /// Override every channel's combine mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Override every channel's gain, dB.
    #[arg(long, allow_hyphen_values = true)]
    gain_db: Option<f64>,
    /// Bypass the band-pass on every channel.
    #[arg(long)]
    no_filter: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    F0,
    F1,
    F3,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Pace processing by the wall clock instead of running flat out.
    #[arg(long)]
    realtime: bool,
    /// Real-time run length, seconds (default: input length).
    #[arg(long, requires = "realtime")]
    duration: Option<f64>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Port for /control and /status.
    #[arg(long, env = vibromix_service::PORT_ENV, default_value_t = vibromix_service::DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Directory for sessions started by start_record without a path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop after this many seconds (default: until interrupted).
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario script (JSON).
    #[arg(long)]
    script: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the script's noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the script's rate, Hz.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// SNR per location/action, sensor placement choice and actuator
    /// energy ratios from a dataset index.
    Placement(PlacementArgs),
    /// Cross-correlation delay and correlation between tool-side and
    /// handle-side signals.
    Fidelity(FidelityArgs),
}

#[derive(Args)]
struct PlacementArgs {
    /// Dataset index CSV: path,location,action,trial.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Rotation SNR may exceed contact SNR by at most this much, dB.
    #[arg(
        long,
        default_value_t = 0.0,
        allow_hyphen_values = true,
        conflicts_with = "rotation_ceiling_db"
    )]
    rotation_margin_db: f64,
    /// Absolute rotation SNR ceiling, dB.
    #[arg(long, allow_hyphen_values = true)]
    rotation_ceiling_db: Option<f64>,
}

#[derive(Args)]
struct FidelityArgs {
    /// Session directory or WAV file holding the tool-side signal. With a
    /// session, the raw stream of --channel is used.
    #[arg(long)]
    tool: PathBuf,
    /// Session directory or WAV file holding the handle-side signal. With a
    /// session, the post-chain stream of --channel is used (raw if absent).
    #[arg(long)]
    handle: PathBuf,
    /// Channel ids to compare; repeat for several. Default: left.
    #[arg(long = "channel")]
    channels: Vec<String>,
    /// Largest lag searched, seconds.
    #[arg(long, default_value_t = vibromix::fidelity::DEFAULT_MAX_LAG_S)]
    max_lag: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrialArgs {
    /// Session directories, one per trial.
    #[arg(long = "session", required = true)]
    sessions: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = vibromix::metrics::ACCEL_THRESHOLD)]
    accel_threshold: f64,
    #[arg(long, default_value_t = vibromix::metrics::FORCE_THRESHOLD)]
    force_threshold: f64,
    /// Gate and measure each axis separately instead of the summed signal.
    #[arg(long)]
    per_axis: bool,
    /// Count force crossings on the raw gated magnitude (always 0 unless
    /// the magnitude is shifted).
    #[arg(long)]
    raw_force_zcr: bool,
}

#[derive(Args)]
struct ValidateArgs {
    path: PathBuf,
    /// What the path holds; guessed from its shape when omitted.
    #[arg(long, value_enum)]
    kind: Option<ValidateKind>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ValidateKind {
    Config,
    Script,
    Session,
    Dataset,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Serve(a) => commands::serve(a),
        Command::Synth(a) => commands::synth(a),
        Command::Analyze(AnalyzeCommand::Placement(a)) => commands::placement(a),
        Command::Analyze(AnalyzeCommand::Fidelity(a)) => commands::fidelity(a),
        Command::TrialMetrics(a) => commands::trial_metrics(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
