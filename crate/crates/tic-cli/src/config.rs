//! Run configuration: flat `section.key = value` text with `#` comments, overridden by
//! `--set key=value` pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use tic_fbsde::McConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{key}` ({origin})")]
    UnknownKey { key: String, origin: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("preset `{preset}` is not available for `{command}`")]
    PresetMismatch { preset: String, command: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveLinear,
    SolveHjb,
    ExampleExp,
    ExamplePower,
    FkVerify,
    Norms,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveLinear => "solve-linear",
            Command::SolveHjb => "solve-hjb",
            Command::ExampleExp => "example-exp",
            Command::ExamplePower => "example-power",
            Command::FkVerify => "fk-verify",
            Command::Norms => "norms",
            Command::Check => "check",
        }
    }

    fn default_preset(self) -> Preset {
        match self {
            Command::SolveLinear | Command::Check => Preset::LinearManufactured,
            Command::SolveHjb => Preset::NonlinearManufactured,
            Command::ExampleExp => Preset::ExpUtility,
            Command::ExamplePower => Preset::PowerUtility,
            Command::FkVerify => Preset::FkVerify,
            Command::Norms => Preset::Norms,
        }
    }

    fn accepts(self, p: Preset) -> bool {
        use Preset::*;
        match self {
            Command::SolveLinear => p == LinearManufactured,
            Command::SolveHjb => matches!(p, NonlinearManufactured | LqScalar),
            Command::ExampleExp => p == ExpUtility,
            Command::ExamplePower => p == PowerUtility,
            Command::FkVerify => p == FkVerify,
            Command::Norms => p == Norms,
            Command::Check => !matches!(p, FkVerify | Norms),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    LinearManufactured,
    NonlinearManufactured,
    LqScalar,
    ExpUtility,
    PowerUtility,
    FkVerify,
    Norms,
}

const PRESETS: &[&str] = &[
    "linear-manufactured",
    "nonlinear-manufactured",
    "lq-scalar",
    "exp-utility",
    "power-utility",
    "fk-verify",
    "norms",
];

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::LinearManufactured => "linear-manufactured",
            Preset::NonlinearManufactured => "nonlinear-manufactured",
            Preset::LqScalar => "lq-scalar",
            Preset::ExpUtility => "exp-utility",
            Preset::PowerUtility => "power-utility",
            Preset::FkVerify => "fk-verify",
            Preset::Norms => "norms",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "linear-manufactured" => Preset::LinearManufactured,
            "nonlinear-manufactured" => Preset::NonlinearManufactured,
            "lq-scalar" => Preset::LqScalar,
            "exp-utility" => Preset::ExpUtility,
            "power-utility" => Preset::PowerUtility,
            "fk-verify" => Preset::FkVerify,
            "norms" => Preset::Norms,
            _ => return None,
        })
    }

    /// Values that differ from the common defaults.
    fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Preset::LinearManufactured => &[("grid.N", "64"), ("grid.M", "129")],
            Preset::NonlinearManufactured => &[],
            Preset::LqScalar => &[("grid.T", "0.2"), ("grid.N", "80"), ("grid.M", "201"), ("mc.steps", "80")],
            Preset::ExpUtility => &[("grid.N", "64"), ("grid.M", "201")],
            Preset::PowerUtility => &[("grid.N", "64")],
            Preset::FkVerify => &[("grid.N", "100"), ("grid.M", "401")],
            Preset::Norms => &[("grid.M", "81")],
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// Real in `[lo, hi]`, with `lo` excluded when `open`.
    Real { lo: f64, hi: f64, open: bool },
    Count { min: u64 },
    Seed,
    Choice(&'static [&'static str]),
    Interval,
    Text,
}

const PI: &str = "3.141592653589793";

const POSITIVE: Kind = Kind::Real { lo: 0.0, hi: f64::INFINITY, open: true };
const NONNEGATIVE: Kind = Kind::Real { lo: 0.0, hi: f64::INFINITY, open: false };
const ANY: Kind = Kind::Real { lo: f64::NEG_INFINITY, hi: f64::INFINITY, open: false };

/// Every recognized key with its common default.
const KEYS: &[(&str, &str, Kind)] = &[
    ("problem.preset", "", Kind::Choice(PRESETS)),
    ("grid.T", "1.0", POSITIVE),
    ("grid.N", "32", Kind::Count { min: 2 }),
    ("grid.M", "65", Kind::Count { min: 3 }),
    ("grid.box", "auto", Kind::Interval),
    ("grid.d", "1", Kind::Count { min: 1 }),
    ("solver.mode", "causal", Kind::Choice(&["causal", "picard", "picard-linearized", "continuation"])),
    ("solver.tol", "1e-8", POSITIVE),
    ("solver.max_iter", "50", Kind::Count { min: 1 }),
    ("solver.damping", "1.0", Kind::Real { lo: 0.0, hi: 1.0, open: true }),
    ("solver.theta", "1.0", Kind::Real { lo: 0.5, hi: 1.0, open: false }),
    ("solver.stage_length", "0.25", POSITIVE),
    ("solver.norm_cap", "1e6", POSITIVE),
    ("mc.paths", "10000", Kind::Count { min: 100 }),
    ("mc.steps", "200", Kind::Count { min: 10 }),
    ("mc.seed", "2024", Kind::Seed),
    ("check.lambda", "0.5", NONNEGATIVE),
    ("check.probes", "256", Kind::Count { min: 1 }),
    ("output.dir", "out", Kind::Text),
    ("lq.a1", "1.0", POSITIVE),
    ("lq.a2", "0.5", NONNEGATIVE),
    ("lq.b1", "0.0", ANY),
    ("lq.b2", "1.0", ANY),
    ("lq.c1", "0.0", ANY),
    ("lq.c2", "2.0", POSITIVE),
    ("lq.c2_t", "1.0", NONNEGATIVE),
    ("lq.g_amp", "0.5", ANY),
    ("lq.y0", "0.3", ANY),
    ("lq.shift", "0.5", ANY),
    ("exp.mu", "0.08", ANY),
    ("exp.sigma", "0.2", POSITIVE),
    ("exp.r", "0.02", ANY),
    ("exp.eta", "1.0", POSITIVE),
    ("exp.w3", "0.05", ANY),
    ("exp.w3_tic", "0.05", ANY),
    ("exp.t_slope", "0.5", ANY),
    ("exp.value_range", "1000", Kind::Real { lo: 1.0, hi: f64::INFINITY, open: true }),
    ("power.mu", "0.08", ANY),
    ("power.sigma", "0.2", POSITIVE),
    ("power.r", "0.02", ANY),
    ("power.beta", "0.5", Kind::Real { lo: 0.0, hi: 1.0, open: true }),
    ("power.v", "1.0", POSITIVE),
    ("power.v_decay", "0.0", NONNEGATIVE),
    ("power.w", "0.0", NONNEGATIVE),
    ("power.g", "1.0", POSITIVE),
    ("fk.x0", "0.3", ANY),
    ("fk.shift", "0.1", ANY),
    ("fk.t", "0.0", NONNEGATIVE),
    ("norms.alpha", "0.5", Kind::Real { lo: 0.0, hi: 1.0, open: true }),
    ("norms.rho0", "1.0", POSITIVE),
    ("norms.s", "1.0", POSITIVE),
];

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _, _)| *k == key).map(|&(_, _, kind)| kind)
}

/// One `key = value` assignment and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub key: String,
    pub value: String,
    pub origin: String,
}

fn valid_key(key: &str) -> bool {
    let ident = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    match key.split_once('.') {
        Some((sec, name)) => ident(sec) && ident(name),
        None => false,
    }
}

/// Parses the config text format. Unknown keys are rejected here with their line number.
pub fn parse_text(text: &str) -> Result<Vec<Assignment>, ConfigError> {
    let mut out: Vec<Assignment> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Parse { line, message };
        let (key, value) = body.split_once('=').ok_or_else(|| err("expected `section.key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if !valid_key(key) {
            return Err(err(format!("malformed key `{key}`")));
        }
        if value.is_empty() {
            return Err(err(format!("missing value for `{key}`")));
        }
        if kind_of(key).is_none() {
            return Err(ConfigError::UnknownKey { key: key.into(), origin: format!("line {line}") });
        }
        if out.iter().any(|a| a.key == key) {
            return Err(err(format!("`{key}` assigned twice")));
        }
        out.push(Assignment { key: key.into(), value: value.into(), origin: format!("line {line}") });
    }
    Ok(out)
}

/// Parses one `--set key=value` override.
pub fn parse_override(text: &str) -> Result<Assignment, ConfigError> {
    let invalid = |message: String| ConfigError::Invalid { key: text.into(), message };
    let (key, value) = text.split_once('=').ok_or_else(|| invalid("expected key=value".into()))?;
    let (key, value) = (key.trim(), value.trim());
    if kind_of(key).is_none() {
        return Err(ConfigError::UnknownKey { key: key.into(), origin: "--set".into() });
    }
    if value.is_empty() {
        return Err(ConfigError::Invalid { key: key.into(), message: "empty value".into() });
    }
    Ok(Assignment { key: key.into(), value: value.into(), origin: "--set".into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Causal,
    Picard,
    PicardLinearized,
    Continuation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub t_final: f64,
    pub n: usize,
    pub m_nodes: usize,
    pub lower: f64,
    pub upper: f64,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub theta: f64,
    pub stage_length: f64,
    pub norm_cap: f64,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Preset,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub mc: McConfig,
    pub output_dir: PathBuf,
    /// Every key with its final value, defaults included.
    pub values: BTreeMap<String, String>,
}

fn check_value(key: &str, value: &str, kind: Kind) -> Result<(), ConfigError> {
    let invalid = |message: String| ConfigError::Invalid { key: key.into(), message };
    match kind {
        Kind::Real { lo, hi, open } => {
            let v: f64 = value.parse().map_err(|_| invalid(format!("`{value}` is not a number")))?;
            let below = if open { v <= lo } else { v < lo };
            if !v.is_finite() || below || v > hi {
                let left = if open { '(' } else { '[' };
                return Err(invalid(format!("{v} outside {left}{lo}, {hi}]")));
            }
        }
        Kind::Count { min } => {
            let v: u64 = value.parse().map_err(|_| invalid(format!("`{value}` is not a nonnegative integer")))?;
            if v < min {
                return Err(invalid(format!("{v} < {min}")));
            }
        }
        Kind::Seed => {
            value.parse::<u64>().map_err(|_| invalid(format!("`{value}` is not an unsigned 64-bit integer")))?;
        }
        Kind::Choice(options) => {
            if !options.contains(&value) {
                return Err(invalid(format!("`{value}` is not one of {}", options.join(", "))));
            }
        }
        Kind::Interval => {
            if value != "auto" {
                let (lo, hi) = parse_interval(value).ok_or_else(|| invalid(format!("`{value}` is not `lo,hi`")))?;
                if !(lo < hi) {
                    return Err(invalid(format!("empty interval [{lo}, {hi}]")));
                }
            }
        }
        Kind::Text => {}
    }
    Ok(())
}

fn parse_interval(value: &str) -> Option<(f64, f64)> {
    let (a, b) = value.split_once(',')?;
    let (lo, hi) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
    (lo.is_finite() && hi.is_finite()).then_some((lo, hi))
}

impl RunConfig {
    /// Reads and parses a config file.
    pub fn read_file(path: &std::path::Path) -> Result<Vec<Assignment>, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        parse_text(&text)
    }

    /// Resolves defaults, the file and the overrides, in increasing precedence, and validates.
    pub fn resolve(command: Command, file: &[Assignment], overrides: &[Assignment]) -> Result<Self, ConfigError> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|&(k, v, _)| (k.to_string(), v.to_string())).collect();
        let mut explicit: BTreeMap<String, String> = BTreeMap::new();
        for a in file.iter().chain(overrides) {
            if kind_of(&a.key).is_none() {
                return Err(ConfigError::UnknownKey { key: a.key.clone(), origin: a.origin.clone() });
            }
            explicit.insert(a.key.clone(), a.value.clone());
        }
        let preset = match explicit.get("problem.preset") {
            Some(name) => {
                check_value("problem.preset", name, Kind::Choice(PRESETS))?;
                Preset::parse(name).expect("checked preset")
            }
            None => command.default_preset(),
        };
        if !command.accepts(preset) {
            return Err(ConfigError::PresetMismatch { preset: preset.name().into(), command: command.name().into() });
        }
        values.insert("problem.preset".into(), preset.name().into());
        for &(k, v) in preset.defaults() {
            values.insert(k.into(), v.into());
        }
        values.extend(explicit);
        for (k, v) in &values {
            check_value(k, v, kind_of(k).expect("known key"))?;
        }

        let real = |k: &str| values[k].parse::<f64>().expect("validated");
        let count = |k: &str| values[k].parse::<usize>().expect("validated");
        if count("grid.d") != 1 {
            return Err(ConfigError::Invalid { key: "grid.d".into(), message: "presets are one-dimensional".into() });
        }
        let (lower, upper) = match values["grid.box"].as_str() {
            "auto" => {
                let half = match preset {
                    Preset::LqScalar => 5.0,
                    Preset::ExpUtility => real("exp.value_range").ln() / real("exp.eta"),
                    Preset::FkVerify => 8.0,
                    Preset::Norms => 2.0,
                    _ => PI.parse().expect("constant"),
                };
                (-half, half)
            }
            other => parse_interval(other).expect("validated"),
        };
        let t_final = real("grid.T");
        if preset == Preset::FkVerify && real("fk.t") >= t_final {
            return Err(ConfigError::Invalid { key: "fk.t".into(), message: "must be below grid.T".into() });
        }
        let grid = GridConfig { t_final, n: count("grid.N"), m_nodes: count("grid.M"), lower, upper, d: 1 };
        let mode = match values["solver.mode"].as_str() {
            "causal" => SolverMode::Causal,
            "picard" => SolverMode::Picard,
            "picard-linearized" => SolverMode::PicardLinearized,
            _ => SolverMode::Continuation,
        };
        if preset == Preset::LqScalar && mode != SolverMode::Causal {
            return Err(ConfigError::Invalid {
                key: "solver.mode".into(),
                message: "the equilibrium solve of lq-scalar is causal only".into(),
            });
        }
        let solver = SolverConfig {
            mode,
            tol: real("solver.tol"),
            max_iter: count("solver.max_iter"),
            damping: real("solver.damping"),
            theta: real("solver.theta"),
            stage_length: real("solver.stage_length"),
            norm_cap: real("solver.norm_cap"),
        };
        let mc = McConfig {
            n_paths: count("mc.paths"),
            n_steps: count("mc.steps"),
            seed: values["mc.seed"].parse().expect("validated"),
        };
        let output_dir = PathBuf::from(&values["output.dir"]);
        Ok(Self { command, preset, grid, solver, mc, output_dir, values })
    }

    /// Real-valued parameter; panics on keys that are not real-valued.
    pub fn real(&self, key: &str) -> f64 {
        self.values[key].parse().unwrap_or_else(|_| panic!("`{key}` is not real-valued"))
    }

    pub fn count(&self, key: &str) -> usize {
        self.values[key].parse().unwrap_or_else(|_| panic!("`{key}` is not a count"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(command: Command, text: &str, sets: &[&str]) -> Result<RunConfig, ConfigError> {
        let file = parse_text(text)?;
        let sets: Vec<Assignment> = sets.iter().map(|s| parse_override(s)).collect::<Result<_, _>>()?;
        RunConfig::resolve(command, &file, &sets)
    }

    #[test]
    fn minimal_exp_config_fills_defaults() {
        let cfg = resolve(Command::ExampleExp, "problem.preset = exp-utility\n", &[]).unwrap();
        assert_eq!(cfg.preset, Preset::ExpUtility);
        assert_eq!((cfg.grid.n, cfg.grid.m_nodes), (64, 201));
        assert!((cfg.grid.upper - 1000f64.ln()).abs() < 1e-15 && cfg.grid.lower == -cfg.grid.upper);
        assert_eq!(cfg.real("exp.mu"), 0.08);
        assert_eq!(cfg.solver.mode, SolverMode::Causal);
        assert_eq!(cfg.mc.seed, 2024);
    }

    #[test]
    fn single_time_step_is_rejected() {
        match resolve(Command::SolveLinear, "grid.N = 1", &[]) {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "grid.N"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn override_beats_file() {
        let cfg = resolve(Command::SolveHjb, "solver.tol = 1e-6 # loose\n", &["solver.tol=1e-8"]).unwrap();
        assert_eq!(cfg.solver.tol, 1e-8);
        let cfg = resolve(Command::SolveHjb, "solver.tol = 1e-6\n", &[]).unwrap();
        assert_eq!(cfg.solver.tol, 1e-6);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_text("# header\n\ngrid.N 4\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_text("grid.N = 4\ngrid.bogus = 1\n") {
            Err(ConfigError::UnknownKey { key, origin }) => assert_eq!((key.as_str(), origin.as_str()), ("grid.bogus", "line 2")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_text("grid.N = 4\ngrid.N = 5"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(parse_override("mc.nope=3"), Err(ConfigError::UnknownKey { .. })));
    }

    #[test]
    fn invalid_preset_and_mismatch() {
        assert!(matches!(
            resolve(Command::SolveLinear, "problem.preset = heat", &[]),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            resolve(Command::SolveLinear, "problem.preset = exp-utility", &[]),
            Err(ConfigError::PresetMismatch { .. })
        ));
        assert!(resolve(Command::Check, "problem.preset = power-utility", &[]).is_ok());
    }

    #[test]
    fn value_checks_name_the_key() {
        for (text, key) in [
            ("grid.box = 3,1", "grid.box"),
            ("solver.damping = 0", "solver.damping"),
            ("mc.paths = 10", "mc.paths"),
            ("grid.d = 2", "grid.d"),
            ("exp.sigma = abc", "exp.sigma"),
        ] {
            match resolve(Command::ExampleExp, text, &[]) {
                Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
