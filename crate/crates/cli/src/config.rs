//! Scenario configuration: a JSON config document merged with inline
//! flags (flags win), then validated field by field before any state is
//! built.

use std::path::{Path, PathBuf};

use envlab::envariance::commensurate_counts;
use envlab::{PureState, SpaceLayout, C64, DEFAULT_DIM_GUARD};
use serde::{Deserialize, Serialize, Serializer};

use crate::amplitude::parse_amplitude;
use crate::error::{CliError, FieldError};

pub const DIM_GUARD_VAR: &str = "ENVLAB_DIM_GUARD";

pub const DEFAULT_ENV_COUNT: usize = 8;
pub const DEFAULT_M_CAP: u64 = 10_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Squared amplitudes below this are treated as absent branches.
const ZERO_BRANCH: f64 = 1e-24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Einselect,
    Redundancy,
    Born,
    Envariance,
    Cascade,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Einselect => "einselect",
            Self::Redundancy => "redundancy",
            Self::Born => "born",
            Self::Envariance => "envariance",
            Self::Cascade => "cascade",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// An amplitude as written in a config document.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum AmplitudeInput {
    Number(f64),
    Pair([f64; 2]),
    Text(String),
}

/// Every setting, each optional, as read from a config document or from
/// the command line.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: Option<ScenarioKind>,
    pub amplitudes: Option<Vec<AmplitudeInput>>,
    pub env_count: Option<i64>,
    pub overlap: Option<f64>,
    pub m_cap: Option<i64>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub state: Option<PathBuf>,
    pub system: Option<Vec<String>>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::field("config", format!("{}: {e}", path.display())))
    }

    /// `self` with every field that `other` sets replaced.
    pub fn overridden_by(self, other: RawConfig) -> RawConfig {
        RawConfig {
            scenario: other.scenario.or(self.scenario),
            amplitudes: other.amplitudes.or(self.amplitudes),
            env_count: other.env_count.or(self.env_count),
            overlap: other.overlap.or(self.overlap),
            m_cap: other.m_cap.or(self.m_cap),
            tolerance: other.tolerance.or(self.tolerance),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
            state: other.state.or(self.state),
            system: other.system.or(self.system),
        }
    }
}

/// A validated scenario, echoed verbatim into structured reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(serialize_with = "complex_pairs")]
    pub amplitudes: Vec<C64>,
    pub env_count: usize,
    pub overlap: f64,
    pub m_cap: u64,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Born scenario only: read the state from this file instead of
    /// preparing it from `amplitudes`.
    pub state: Option<PathBuf>,
    pub system: Vec<String>,
    pub dim_guard: usize,
}

fn complex_pairs<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

impl ScenarioConfig {
    pub fn pointer_dimension(&self) -> usize {
        self.amplitudes.len()
    }

    /// `|a_k|²` of the branches that are present.
    pub fn branch_weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).filter(|w| *w > ZERO_BRANCH).collect()
    }
}

/// The dimension guard from `ENVLAB_DIM_GUARD`, or the library default.
pub fn dim_guard_from_env() -> Result<usize, CliError> {
    match std::env::var(DIM_GUARD_VAR) {
        Err(_) => Ok(DEFAULT_DIM_GUARD),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(g) if g >= 1 => Ok(g),
            _ => Err(CliError::field(DIM_GUARD_VAR, format!("expected a positive integer, found {v:?}"))),
        },
    }
}

fn parse_amplitudes(inputs: &[AmplitudeInput], errors: &mut Vec<FieldError>) -> Vec<C64> {
    let mut out = Vec::with_capacity(inputs.len());
    for (i, a) in inputs.iter().enumerate() {
        let parsed = match a {
            AmplitudeInput::Number(x) => Ok(C64::new(*x, 0.0)),
            AmplitudeInput::Pair([re, im]) => Ok(C64::new(*re, *im)),
            AmplitudeInput::Text(t) => parse_amplitude(t),
        };
        match parsed {
            Ok(z) if z.re.is_finite() && z.im.is_finite() => out.push(z),
            Ok(z) => errors.push(FieldError::new("amplitudes", format!("entry {i} is not finite: {z}"))),
            Err(e) => errors.push(FieldError::new("amplitudes", format!("entry {i}: {e}"))),
        }
    }
    out
}

/// Checks every field against the preconditions of the scenario's
/// pipeline, collecting all problems rather than stopping at the first.
pub fn validate(kind: ScenarioKind, raw: RawConfig, dim_guard: usize) -> Result<ScenarioConfig, CliError> {
    let mut errors = Vec::new();
    if let Some(s) = raw.scenario {
        if s != kind {
            errors.push(FieldError::new(
                "scenario",
                format!("config is for {:?} but the {:?} subcommand was run", s.name(), kind.name()),
            ));
        }
    }

    let from_state = raw.state.is_some();
    if from_state && kind != ScenarioKind::Born {
        errors.push(FieldError::new("state", "only the born scenario reads a state file"));
    }
    if from_state && raw.amplitudes.is_some() {
        errors.push(FieldError::new("amplitudes", "give either amplitudes or a state file, not both"));
    }
    if raw.system.is_some() && !from_state {
        errors.push(FieldError::new("system", "system labels apply only to a state file"));
    }

    let default_amps = || vec![AmplitudeInput::Number(std::f64::consts::FRAC_1_SQRT_2); 2];
    let amplitudes = if from_state { Vec::new() } else { parse_amplitudes(&raw.amplitudes.unwrap_or_else(default_amps), &mut errors) };
    if !from_state && errors.iter().all(|e| e.field != "amplitudes") {
        if amplitudes.len() < 2 {
            errors.push(FieldError::new("amplitudes", format!("need at least 2 amplitudes, found {}", amplitudes.len())));
        } else {
            let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > envlab::NORM_TOLERANCE {
                errors.push(FieldError::new("amplitudes", format!("norm is {norm}, expected 1")));
            }
        }
    }

    let env_count = raw.env_count.unwrap_or(DEFAULT_ENV_COUNT as i64);
    if env_count < 1 {
        errors.push(FieldError::new("env_count", format!("must be at least 1, found {env_count}")));
    }
    let overlap = raw.overlap.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&overlap) {
        errors.push(FieldError::new("overlap", format!("must lie in [0, 1], found {overlap}")));
    } else if kind == ScenarioKind::Born && overlap != 0.0 {
        errors.push(FieldError::new("overlap", "the born scenario uses perfect records; overlap must be 0"));
    }
    let m_cap = raw.m_cap.unwrap_or(DEFAULT_M_CAP as i64);
    if m_cap < 1 {
        errors.push(FieldError::new("m_cap", format!("must be at least 1, found {m_cap}")));
    }
    let tolerance = raw.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance > 0.0 && tolerance < 1.0) {
        errors.push(FieldError::new("tolerance", format!("must lie in (0, 1), found {tolerance}")));
    }
    let system = raw.system.unwrap_or_else(|| vec!["S".to_string()]);
    if system.is_empty() || system.iter().any(|s| s.is_empty()) {
        errors.push(FieldError::new("system", "labels must be non-empty"));
    }

    let cfg = ScenarioConfig {
        scenario: kind,
        amplitudes,
        env_count: env_count.max(0) as usize,
        overlap,
        m_cap: m_cap.max(0) as u64,
        tolerance,
        out: raw.out,
        format: raw.format.unwrap_or_default(),
        state: raw.state,
        system,
        dim_guard,
    };
    if errors.is_empty() && !from_state {
        let branches = cfg.branch_weights().len();
        if kind == ScenarioKind::Redundancy && branches < 2 {
            errors.push(FieldError::new("amplitudes", "redundancy needs at least two non-zero branches"));
        }
        if kind == ScenarioKind::Born && (cfg.m_cap as usize) < branches {
            errors.push(FieldError::new("m_cap", format!("must be at least the number of outcomes, {branches}")));
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Validation(errors))
    }
}

/// `d^n`, saturating.
fn power(d: usize, n: usize) -> u128 {
    if d <= 1 {
        return 1;
    }
    u32::try_from(n).ok().and_then(|e| (d as u128).checked_pow(e)).unwrap_or(u128::MAX)
}

/// Largest total dimension the scenario will allocate.
pub fn predicted_dimension(cfg: &ScenarioConfig) -> u128 {
    let d = cfg.pointer_dimension();
    let n = cfg.env_count;
    match cfg.scenario {
        // S, A, E_1..E_N
        ScenarioKind::Einselect | ScenarioKind::Redundancy => power(d, n.saturating_add(2)),
        // S, A, E_1..E_N, F_1..F_N
        ScenarioKind::Cascade => power(d, n.saturating_mul(2).saturating_add(2)),
        // S, E, plus one record per basis state in the witness
        ScenarioKind::Envariance => power(d, 2),
        ScenarioKind::Born => {
            let mut p = cfg.branch_weights();
            p.sort_by(|a, b| b.total_cmp(a));
            let base = power(d, 2);
            match commensurate_counts(&p, cfg.tolerance, cfg.m_cap) {
                // the environment E is enlarged to hold M states and an M-level ancilla appended
                Some((_, m)) => {
                    let m = m as u128;
                    let ext = if (d as u128) < m { m.div_ceil(d as u128) } else { 1 };
                    base.saturating_mul(ext).saturating_mul(m)
                }
                None => base,
            }
        }
    }
}

pub fn check_dimensions(cfg: &ScenarioConfig) -> Result<(), CliError> {
    if cfg.state.is_some() {
        return Ok(());
    }
    let dim = predicted_dimension(cfg);
    if dim > cfg.dim_guard as u128 {
        return Err(CliError::DimensionGuard { dim, guard: cfg.dim_guard });
    }
    Ok(())
}

#[derive(Deserialize)]
struct LayoutEntry {
    label: String,
    dim: usize,
}

#[derive(Deserialize)]
struct StateDocument {
    layout: Vec<LayoutEntry>,
    amplitudes: Vec<[f64; 2]>,
}

/// Reads a state document under the configured guard; the size is checked
/// from the layout before the amplitudes are used.
pub fn load_state(path: &Path, guard: usize) -> Result<PureState, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |msg: String| CliError::field("state", format!("{}: {msg}", path.display()));
    let doc: StateDocument = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let layout = SpaceLayout::with_guard(doc.layout.iter().map(|e| (e.label.as_str(), e.dim)), guard).map_err(|e| match e {
        envlab::Error::SpaceTooLarge { .. } => CliError::from(e),
        other => bad(other.to_string()),
    })?;
    let amps: Vec<C64> = doc.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    PureState::new(layout, amps).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_amps(a: &[&str]) -> RawConfig {
        RawConfig { amplitudes: Some(a.iter().map(|s| AmplitudeInput::Text(s.to_string())).collect()), ..Default::default() }
    }

    fn fields(e: CliError) -> Vec<String> {
        match e {
            CliError::Validation(f) => f.into_iter().map(|f| f.field).collect(),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn defaults() {
        let cfg = validate(ScenarioKind::Redundancy, RawConfig::default(), 1 << 20).unwrap();
        assert_eq!(cfg.env_count, 8);
        assert_eq!(cfg.overlap, 0.0);
        assert_eq!(cfg.m_cap, 10_000);
        assert_eq!(cfg.tolerance, 1e-10);
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.amplitudes.len(), 2);
    }

    #[test]
    fn collects_every_bad_field() {
        let raw = RawConfig {
            env_count: Some(0),
            overlap: Some(1.5),
            m_cap: Some(-3),
            tolerance: Some(0.0),
            ..raw_amps(&["0.6", "0.6"])
        };
        let f = fields(validate(ScenarioKind::Einselect, raw, 1 << 20).unwrap_err());
        assert_eq!(f, ["amplitudes", "env_count", "overlap", "m_cap", "tolerance"]);
    }

    #[test]
    fn scenario_specific_rules() {
        let single = raw_amps(&["1", "0"]);
        assert_eq!(fields(validate(ScenarioKind::Redundancy, single.clone(), 1 << 20).unwrap_err()), ["amplitudes"]);
        assert!(validate(ScenarioKind::Einselect, single, 1 << 20).is_ok());
        let raw = RawConfig { overlap: Some(0.5), ..Default::default() };
        assert_eq!(fields(validate(ScenarioKind::Born, raw, 1 << 20).unwrap_err()), ["overlap"]);
        let raw = RawConfig { state: Some("x.json".into()), ..Default::default() };
        assert_eq!(fields(validate(ScenarioKind::Cascade, raw, 1 << 20).unwrap_err()), ["state"]);
        let raw = RawConfig { scenario: Some(ScenarioKind::Born), ..Default::default() };
        assert_eq!(fields(validate(ScenarioKind::Cascade, raw, 1 << 20).unwrap_err()), ["scenario"]);
    }

    #[test]
    fn flags_override_file() {
        let file = RawConfig { env_count: Some(3), overlap: Some(0.2), ..Default::default() };
        let flags = RawConfig { env_count: Some(5), ..Default::default() };
        let merged = file.overridden_by(flags);
        assert_eq!((merged.env_count, merged.overlap), (Some(5), Some(0.2)));
    }

    #[test]
    fn dimension_prediction() {
        let cfg = validate(ScenarioKind::Cascade, RawConfig::default(), 1 << 20).unwrap();
        assert_eq!(predicted_dimension(&cfg), 1 << 18);
        let cfg = validate(ScenarioKind::Cascade, RawConfig { env_count: Some(10), ..Default::default() }, 1 << 20).unwrap();
        assert!(matches!(check_dimensions(&cfg), Err(CliError::DimensionGuard { dim: 4194304, guard: 1048576 })));
        // (2/3, 1/3) counts with M = 3: S(2) E(2) ext(2) anc(3)
        let cfg = validate(ScenarioKind::Born, raw_amps(&["sqrt(2/3)", "sqrt(1/3)"]), 1 << 20).unwrap();
        assert_eq!(predicted_dimension(&cfg), 24);
        // a huge environment count saturates instead of overflowing
        let cfg = validate(ScenarioKind::Redundancy, RawConfig { env_count: Some(1 << 40), ..Default::default() }, 1 << 20).unwrap();
        assert_eq!(predicted_dimension(&cfg), u128::MAX);
    }
}
