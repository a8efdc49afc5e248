use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use envlab_cli::config::{dim_guard_from_env, validate, AmplitudeInput, Format};
use envlab_cli::{emit_report, run_scenario, CliError, RawConfig, ScenarioKind};

/// Reproducible experiments on system-environment entanglement: pointer
/// selection, record redundancy, probabilities from symmetry.
#[derive(Parser)]
#[command(name = "envlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Premeasurement then decoherence: reduced-state coherence and
    /// mutual information at each stage.
    Einselect(ScenarioArgs),
    /// Mutual information between system-plus-apparatus and each
    /// environment fragment, and the redundancy ratio.
    Redundancy(ScenarioArgs),
    /// Probabilities by counting equal-amplitude terms, with rational
    /// bounds at M = 100, 1000, 10000.
    Born(ScenarioArgs),
    /// Envariance certificates for Schmidt phases, swaps and a Hadamard.
    Envariance(ScenarioArgs),
    /// Records copied from immediate into distant fragments: pointer and
    /// conjugate-basis information.
    Cascade(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON config document; inline flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Branch amplitudes, comma separated: numbers, a/b, sqrt(...), an
    /// `i` suffix for imaginary parts.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    amplitudes: Option<Vec<String>>,
    /// Environment fragments recording the pointer [default: 8].
    #[arg(long)]
    env_count: Option<i64>,
    /// Overlap between distinct record states, in [0, 1] [default: 0].
    #[arg(long)]
    overlap: Option<f64>,
    /// Largest denominator tried when counting [default: 10000].
    #[arg(long)]
    m_cap: Option<i64>,
    /// Agreement required between counted and squared amplitudes
    /// [default: 1e-10].
    #[arg(long)]
    tolerance: Option<f64>,
    /// Directory for output files; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Born only: a state document to analyse instead of amplitudes.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Born only: system labels within the state document [default: S].
    #[arg(long, value_delimiter = ',')]
    system: Option<Vec<String>>,
}

impl ScenarioArgs {
    fn into_raw(self) -> (Option<PathBuf>, RawConfig) {
        let raw = RawConfig {
            scenario: None,
            amplitudes: self.amplitudes.map(|a| a.into_iter().map(AmplitudeInput::Text).collect()),
            env_count: self.env_count,
            overlap: self.overlap,
            m_cap: self.m_cap,
            tolerance: self.tolerance,
            out: self.out,
            format: self.format,
            state: self.state,
            system: self.system,
        };
        (self.config, raw)
    }
}

fn run(kind: ScenarioKind, args: ScenarioArgs) -> Result<(), CliError> {
    let guard = dim_guard_from_env()?;
    let (config_path, flags) = args.into_raw();
    let raw = match config_path {
        Some(p) => RawConfig::from_file(&p)?.overridden_by(flags),
        None => flags,
    };
    let cfg = validate(kind, raw, guard)?;
    let result = run_scenario(&cfg)?;
    if let Some(text) = emit_report(&result, cfg.format, cfg.out.as_deref())? {
        std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(())
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{:#}", err.to_document());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail(&CliError::field("arguments", first));
        }
    };
    let (kind, args) = match cli.command {
        Command::Einselect(a) => (ScenarioKind::Einselect, a),
        Command::Redundancy(a) => (ScenarioKind::Redundancy, a),
        Command::Born(a) => (ScenarioKind::Born, a),
        Command::Envariance(a) => (ScenarioKind::Envariance, a),
        Command::Cascade(a) => (ScenarioKind::Cascade, a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
