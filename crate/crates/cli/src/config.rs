//! Plain-text run configuration: one `[sweep]` or `[simulate]` section of
//! `key = value` lines. Unknown keys are rejected with their line number,
//! defaults are materialized, and the result is validated by the lab.

use std::collections::BTreeMap;
use std::fmt;

use lwrlab::lab::{RunConfig, SweepConfig};

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug)]
pub enum ParsedConfig {
    Sweep(SweepConfig),
    Single(RunConfig),
}

const SWEEP_KEYS: &[&str] = &[
    "kernel",
    "model",
    "datum",
    "eps_list",
    "ratio",
    "T",
    "snap_times",
    "cfl",
    "tail_tol",
    "delta_exponent",
    "bound_slack",
    "require_eps0",
];
const SIMULATE_KEYS: &[&str] = &[
    "kernel",
    "model",
    "datum",
    "eps",
    "ratio",
    "T",
    "snap_times",
    "cfl",
    "tail_tol",
];

struct Section {
    name: String,
    entries: BTreeMap<String, (String, usize)>,
}

fn split_sections(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(ConfigError::at(lineno, format!("malformed section '{line}'")));
            }
            let name = line[1..line.len() - 1].trim().to_string();
            if name != "sweep" && name != "simulate" {
                return Err(ConfigError::at(
                    lineno,
                    format!("unknown section '[{name}]' (expected [sweep] or [simulate])"),
                ));
            }
            sections.push(Section {
                name,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let Some(section) = sections.last_mut() else {
            return Err(ConfigError::at(
                lineno,
                format!("'{line}' appears before any [sweep] or [simulate] section"),
            ));
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::at(lineno, format!("expected key = value, got '{line}'")));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if let Some((_, first)) = section.entries.get(&key) {
            return Err(ConfigError::at(
                lineno,
                format!("duplicate key '{key}' (first set on line {first})"),
            ));
        }
        section.entries.insert(key, (value, lineno));
    }
    Ok(sections)
}

fn parse_f64(section: &Section, key: &str) -> Result<Option<f64>, ConfigError> {
    match section.entries.get(key) {
        None => Ok(None),
        Some((v, line)) => v
            .parse::<f64>()
            .map(Some)
            .map_err(|_| ConfigError::at(*line, format!("bad number '{v}' for key '{key}'"))),
    }
}

fn parse_f64_list(section: &Section, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    match section.entries.get(key) {
        None => Ok(None),
        Some((v, line)) => v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map(Some)
            .map_err(|_| ConfigError::at(*line, format!("bad number list '{v}' for key '{key}'"))),
    }
}

fn parse_bool(section: &Section, key: &str) -> Result<Option<bool>, ConfigError> {
    match section.entries.get(key) {
        None => Ok(None),
        Some((v, line)) => match v.as_str() {
            "true" => Ok(Some(true)),
            "false" => Ok(Some(false)),
            _ => Err(ConfigError::at(
                *line,
                format!("bad boolean '{v}' for key '{key}' (expected true or false)"),
            )),
        },
    }
}

fn get_string(section: &Section, key: &str) -> Result<String, ConfigError> {
    section
        .entries
        .get(key)
        .map(|(v, _)| v.clone())
        .ok_or_else(|| {
            ConfigError::plain(format!(
                "missing required key '{key}' in [{}]",
                section.name
            ))
        })
}

fn reject_unknown(section: &Section, allowed: &[&str]) -> Result<(), ConfigError> {
    for (key, (_, line)) in &section.entries {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::at(
                *line,
                format!("unknown key '{key}' in [{}]", section.name),
            ));
        }
    }
    Ok(())
}

/// Parse and validate a config. Defaults: cfl = 0.5, ratio = 40,
/// tail_tol = 1e-10, delta_exponent = 0.25, bound_slack = 0.05,
/// eps_list = standard halving 0.4 → 0.025, T = 0.5, snap_times = [T].
pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let sections = split_sections(text)?;
    if sections.len() != 1 {
        return Err(ConfigError::plain(format!(
            "expected exactly one [sweep] or [simulate] section, found {}",
            sections.len()
        )));
    }
    let section = &sections[0];
    let parsed = if section.name == "sweep" {
        reject_unknown(section, SWEEP_KEYS)?;
        let t_end = parse_f64(section, "T")?.unwrap_or(0.5);
        let cfg = SweepConfig {
            kernel: get_string(section, "kernel")?,
            model: get_string(section, "model")?,
            datum: get_string(section, "datum")?,
            eps_list: parse_f64_list(section, "eps_list")?
                .unwrap_or_else(|| vec![0.4, 0.2, 0.1, 0.05, 0.025]),
            ratio: parse_f64(section, "ratio")?.unwrap_or(40.0),
            t_end,
            snap_times: parse_f64_list(section, "snap_times")?.unwrap_or_else(|| vec![t_end]),
            cfl: parse_f64(section, "cfl")?.unwrap_or(0.5),
            tail_tol: parse_f64(section, "tail_tol")?.unwrap_or(1e-10),
            delta_exponent: parse_f64(section, "delta_exponent")?.unwrap_or(0.25),
            bound_slack: parse_f64(section, "bound_slack")?.unwrap_or(0.05),
            require_eps0: parse_bool(section, "require_eps0")?.unwrap_or(false),
            jobs: 0,
        };
        cfg.validate().map_err(|e| ConfigError::plain(e.to_string()))?;
        ParsedConfig::Sweep(cfg)
    } else {
        reject_unknown(section, SIMULATE_KEYS)?;
        let t_end = parse_f64(section, "T")?.unwrap_or(0.5);
        let eps = parse_f64(section, "eps")?
            .ok_or_else(|| ConfigError::plain("missing required key 'eps' in [simulate]"))?;
        let cfg = RunConfig {
            kernel: get_string(section, "kernel")?,
            model: get_string(section, "model")?,
            datum: get_string(section, "datum")?,
            eps,
            ratio: parse_f64(section, "ratio")?.unwrap_or(40.0),
            t_end,
            snap_times: parse_f64_list(section, "snap_times")?.unwrap_or_else(|| vec![t_end]),
            cfl: parse_f64(section, "cfl")?.unwrap_or(0.5),
            tail_tol: parse_f64(section, "tail_tol")?.unwrap_or(1e-10),
        };
        cfg.validate().map_err(|e| ConfigError::plain(e.to_string()))?;
        ParsedConfig::Single(cfg)
    };
    Ok(parsed)
}

/// Built-in configurations selectable by name in --config.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "std_shock" => Some(
            "# standard shock study: hat kernel, Greenshields speed law\n\
             [sweep]\n\
             kernel = hat\n\
             model = greenshields\n\
             datum = riemann:0.2:0.8\n\
             eps_list = 0.4, 0.2, 0.1, 0.05, 0.025\n\
             ratio = 40\n\
             T = 0.5\n\
             snap_times = 0.5\n",
        ),
        "std_rarefaction" => Some(
            "# non-entropic jump relaxing into the rarefaction fan\n\
             [simulate]\n\
             kernel = exp\n\
             model = greenshields\n\
             datum = riemann:0.8:0.2\n\
             eps = 0.05\n\
             ratio = 20\n\
             T = 3.0\n\
             snap_times = 1.0, 2.0, 3.0\n",
        ),
        _ => None,
    }
}

/// Resolve --config: an existing file path wins, then a built-in name.
/// Returns (display name, text).
pub fn load(spec: &str) -> Result<(String, String), ConfigError> {
    let path = std::path::Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::plain(format!("cannot read '{spec}': {e}")))?;
        return Ok((spec.to_string(), text));
    }
    if let Some(text) = builtin(spec) {
        return Ok((spec.to_string(), text.to_string()));
    }
    Err(ConfigError::plain(format!(
        "config '{spec}' is neither a file nor a built-in name (std_shock, std_rarefaction)"
    )))
}
