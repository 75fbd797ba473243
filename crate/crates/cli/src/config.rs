//! Run configuration: a TOML document with `scenario.`, `design.`, `sweep.`,
//! `quad.`, `mc.` and `output.` keys, optionally overridden from the
//! environment (`BEAMSW_SCENARIO__SIGMA_V=1.5` sets `scenario.sigma_v`).

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use beamswitch_core::{DesignSpec, McConfig, QuadratureConfig, ScenarioParams, Strategy, SweepGrid};
use thiserror::Error;
use toml::Value;

pub const ENV_PREFIX: &str = "BEAMSW_";

const SECTIONS: [&str; 6] = ["scenario", "design", "sweep", "quad", "mc", "output"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config is not valid TOML: {0}")]
    Syntax(#[from] toml::de::Error),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config key `{key}` must be {expected}")]
    Type { key: String, expected: &'static str },

    #[error("config key `{key}`: {msg}")]
    Invalid { key: String, msg: String },

    #[error("{0}")]
    Mode(String),

    #[error(transparent)]
    Core(#[from] beamswitch_core::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Single(DesignSpec),
    Sweep(SweepGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioParams,
    pub mode: Mode,
    pub quad: QuadratureConfig,
    pub mc: McConfig,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn design(&self) -> Result<DesignSpec, ConfigError> {
        match &self.mode {
            Mode::Single(spec) => Ok(*spec),
            Mode::Sweep(_) => Err(ConfigError::Mode(
                "this command needs a [design] section, but the config defines a [sweep]".into(),
            )),
        }
    }

    pub fn sweep(&self) -> Result<&SweepGrid, ConfigError> {
        match &self.mode {
            Mode::Sweep(grid) => Ok(grid),
            Mode::Single(_) => Err(ConfigError::Mode(
                "this command needs a [sweep] section, but the config defines a [design]".into(),
            )),
        }
    }
}

/// Flattens nested tables into dotted keys, recording every table path so
/// that empty sections still count as present. Arrays stay as values.
fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>, sections: &mut BTreeSet<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => {
                sections.insert(key.clone());
                flatten(&key, t, out, sections)
            }
            other => {
                out.insert(key, other);
            }
        }
    }
}

/// Parses an environment value as a TOML value, falling back to a bare string.
fn env_value(raw: &str) -> Value {
    format!("x = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

struct Keys {
    map: BTreeMap<String, Value>,
    sections: BTreeSet<String>,
}

impl Keys {
    fn has_section(&self, section: &str) -> bool {
        let dotted = format!("{section}.");
        self.sections.contains(section) || self.map.keys().any(|k| k.starts_with(&dotted))
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(x)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(_) => Err(type_err(key, "a number")),
        }
    }

    fn uint(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(_) => Err(type_err(key, "a non-negative integer")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(type_err(key, "a string")),
        }
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn set_float(&mut self, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
        if let Some(x) = self.float(key)? {
            *slot = x;
        }
        Ok(())
    }
}

fn type_err(key: &str, expected: &'static str) -> ConfigError {
    ConfigError::Type {
        key: key.to_string(),
        expected,
    }
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn strategy(key: &str, s: &str) -> Result<Strategy, ConfigError> {
    s.parse().map_err(|e: beamswitch_core::Error| invalid(key, e.to_string()))
}

/// Accepts `[1, 2, 5]` or `"1..=60"`.
fn beam_counts(key: &str, v: Value) -> Result<Vec<usize>, ConfigError> {
    match v {
        Value::Array(items) => items
            .into_iter()
            .map(|x| match x {
                Value::Integer(i) if i >= 0 => Ok(i as usize),
                _ => Err(type_err(key, "an array of non-negative integers or a range \"a..=b\"")),
            })
            .collect(),
        Value::Integer(i) if i >= 0 => Ok(vec![i as usize]),
        Value::String(s) => {
            let (a, b) = s
                .split_once("..=")
                .ok_or_else(|| invalid(key, format!("range {s:?} must look like \"1..=60\"")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| invalid(key, format!("bad range bound {t:?}")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(invalid(key, format!("empty range {s:?}")));
            }
            Ok((a..=b).collect())
        }
        _ => Err(type_err(key, "an array of non-negative integers or a range \"a..=b\"")),
    }
}

fn floats(key: &str, v: Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(items) => items
            .into_iter()
            .map(|x| match x {
                Value::Float(f) => Ok(f),
                Value::Integer(i) => Ok(i as f64),
                _ => Err(type_err(key, "an array of numbers")),
            })
            .collect(),
        Value::Float(f) => Ok(vec![f]),
        Value::Integer(i) => Ok(vec![i as f64]),
        _ => Err(type_err(key, "an array of numbers")),
    }
}

fn strategies(key: &str, v: Value) -> Result<Vec<Strategy>, ConfigError> {
    match v {
        Value::Array(items) => items
            .into_iter()
            .map(|x| match x {
                Value::String(s) => strategy(key, &s),
                _ => Err(type_err(key, "an array of strategy names")),
            })
            .collect(),
        Value::String(s) => Ok(vec![strategy(key, &s)?]),
        _ => Err(type_err(key, "an array of strategy names")),
    }
}

/// Parses a config document, applying `env` overrides (pairs of variable
/// name and value; names without the `BEAMSW_` prefix are ignored).
pub fn parse_config<I, K, V>(text: &str, env: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let table: toml::Table = text.parse()?;
    let mut map = BTreeMap::new();
    let mut sections = BTreeSet::new();
    flatten("", table, &mut map, &mut sections);
    for (name, raw) in env {
        if let Some(rest) = name.as_ref().strip_prefix(ENV_PREFIX) {
            let key = rest.to_ascii_lowercase().replace("__", ".");
            map.insert(key, env_value(raw.as_ref()));
        }
    }
    let mut keys = Keys { map, sections };

    let mut sc = ScenarioParams::default();
    keys.set_float("scenario.carrier_freq", &mut sc.carrier_freq)?;
    keys.set_float("scenario.pathloss_exp", &mut sc.pathloss_exp)?;
    keys.set_float("scenario.eirp", &mut sc.eirp_dbm)?;
    keys.set_float("scenario.d_l", &mut sc.d_l)?;
    keys.set_float("scenario.d_0", &mut sc.d_0)?;
    keys.set_float("scenario.h_rsu", &mut sc.h_rsu)?;
    keys.set_float("scenario.h_vehicle", &mut sc.h_vehicle)?;
    keys.set_float("scenario.v", &mut sc.v)?;
    keys.set_float("scenario.noise_figure", &mut sc.noise_figure_db)?;
    keys.set_float("scenario.bandwidth", &mut sc.bandwidth)?;
    keys.set_float("scenario.shadow_margin", &mut sc.shadow_margin_db)?;
    keys.set_float("scenario.lane_width", &mut sc.lane_width)?;
    let sigma_abs = keys.float("scenario.sigma_v")?;
    let sigma_rel = keys.float("scenario.sigma_v_rel")?;
    sc.sigma_v = match (sigma_abs, sigma_rel) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "scenario.sigma_v_rel",
                "set either scenario.sigma_v or scenario.sigma_v_rel, not both",
            ))
        }
        (Some(s), None) => s,
        (None, Some(r)) => r * sc.v,
        (None, None) => sc.sigma_v,
    };
    sc.validate()?;

    let has_design = keys.has_section("design");
    let has_sweep = keys.has_section("sweep");
    let mode = match (has_design, has_sweep) {
        (true, true) => {
            return Err(ConfigError::Mode(
                "config defines both [design] and [sweep]; use exactly one".into(),
            ))
        }
        (false, false) => {
            return Err(ConfigError::Mode(
                "config needs a [design] section (single plan) or a [sweep] section".into(),
            ))
        }
        (true, false) => {
            let st = keys
                .string("design.strategy")?
                .ok_or_else(|| invalid("design.strategy", "missing"))?;
            let strategy = strategy("design.strategy", &st)?;
            let n_beams = keys
                .uint("design.n_beams")?
                .ok_or_else(|| invalid("design.n_beams", "missing"))?;
            let overlap = keys.float("design.overlap")?.unwrap_or(0.0);
            Mode::Single(DesignSpec::new(strategy, n_beams as usize, overlap)?)
        }
        (false, true) => {
            let standard = SweepGrid::standard(sc.sigma_v);
            let grid = SweepGrid {
                n_beams: match keys.take("sweep.n_beams") {
                    Some(v) => beam_counts("sweep.n_beams", v)?,
                    None => standard.n_beams,
                },
                overlaps: match keys.take("sweep.overlaps") {
                    Some(v) => floats("sweep.overlaps", v)?,
                    None => standard.overlaps,
                },
                strategies: match keys.take("sweep.strategies") {
                    Some(v) => strategies("sweep.strategies", v)?,
                    None => standard.strategies,
                },
                sigma_v: sc.sigma_v,
            };
            grid.validate()?;
            Mode::Sweep(grid)
        }
    };

    let mut quad = QuadratureConfig::default();
    keys.set_float("quad.rel_tol", &mut quad.rel_tol)?;
    keys.set_float("quad.abs_tol", &mut quad.abs_tol)?;
    if let Some(d) = keys.uint("quad.max_depth")? {
        quad.max_depth = u32::try_from(d).map_err(|_| invalid("quad.max_depth", "too large"))?;
    }
    if !quad.is_valid() {
        return Err(invalid("quad", "rel_tol and abs_tol must be finite and > 0"));
    }

    let defaults = McConfig::default();
    let mc = McConfig::new(
        keys.uint("mc.n_samples")?.map_or(defaults.n_samples, |n| n as usize),
        keys.float("mc.dt")?.unwrap_or(defaults.dt()),
        keys.uint("mc.seed")?.unwrap_or(defaults.seed),
    )?;

    let output_path = keys.string("output.path")?.map(PathBuf::from);

    if let Some(key) = keys.map.keys().next() {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    if let Some(section) = keys.sections.iter().find(|s| !SECTIONS.contains(&s.as_str())) {
        return Err(ConfigError::UnknownKey(section.clone()));
    }

    Ok(RunConfig {
        scenario: sc,
        mode,
        quad,
        mc,
        output_path,
    })
}

/// Reads and parses a config file, applying overrides from the process environment.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, std::env::vars())
}
