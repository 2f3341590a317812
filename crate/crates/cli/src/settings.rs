//! Flag values, the key=value config file, and their merge.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use entrecover::optimize::{OutcomePolicy, Scenario};
use entrecover::RepeaterModel;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelArg(pub Scenario);

impl FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "two-way" => Ok(Self(Scenario::Repeater(RepeaterModel::TwoWay))),
            "one-way" => Ok(Self(Scenario::Repeater(RepeaterModel::OneWay))),
            "single" => Ok(Self(Scenario::SinglePair)),
            _ => Err(format!("unknown model '{s}' (expected two-way, one-way or single)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyArg(pub OutcomePolicy);

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "phi" => Ok(Self(OutcomePolicy::PhiOnly)),
            "psi" => Ok(Self(OutcomePolicy::PsiOnly)),
            "all" => Ok(Self(OutcomePolicy::KeepAll)),
            _ => Err(format!("unknown policy '{s}' (expected phi, psi or all)")),
        }
    }
}

/// How the reversing strength is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reversing {
    Fixed(f64),
    Optimal,
    Grid,
}

impl FromStr for Reversing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "optimal" => Ok(Self::Optimal),
            "grid" => Ok(Self::Grid),
            _ => {
                let r = parse_unit(s, "reversing strength")?;
                Ok(Self::Fixed(r))
            }
        }
    }
}

/// Reversing strengths visited by `--reversing grid`.
pub fn reversing_grid() -> Vec<f64> {
    (0..100).map(|k| k as f64 / 100.0).collect()
}

/// `start:stop:step` with `0 <= start <= stop <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FromStr for DRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("damping range '{s}' must look like start:stop:step"));
        };
        let start = parse_unit(a, "range start")?;
        let stop = parse_unit(b, "range stop")?;
        let step: f64 = c.trim().parse().map_err(|_| format!("bad range step '{c}'"))?;
        if start > stop {
            return Err(format!("range start {start} exceeds stop {stop}"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(format!("range step must be positive, got {c}"));
        }
        Ok(Self { start, stop, step })
    }
}

impl DRange {
    pub fn single(d: f64) -> Self {
        Self {
            start: d,
            stop: d,
            step: 1.0,
        }
    }

    /// Grid points in ascending order; the stop value is included when it
    /// lies on the grid.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| (self.start + k as f64 * self.step).min(self.stop))
            .collect()
    }
}

fn parse_unit(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("bad {what} '{s}'"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("{what} {v} outside [0, 1]"));
    }
    Ok(v)
}

pub fn parse_damping(s: &str) -> Result<f64, String> {
    parse_unit(s, "damping strength")
}

/// Range check for damping values read from a config file.
pub fn check_damping(d: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&d) {
        Ok(d)
    } else {
        Err(CliError::usage(format!("damping strength {d} outside [0, 1]")))
    }
}

/// Flat `key = value` file; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
    path: PathBuf,
}

pub const CONFIG_KEYS: [&str; 8] = ["model", "policy", "damping", "damping-range", "reversing", "trials", "seed", "out"];

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::usage(format!("{}:{}: expected key = value", path.display(), n + 1)));
            };
            let key = k.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("{}:{}: unknown key '{}'", path.display(), n + 1, k.trim())));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self {
            entries,
            path: path.to_path_buf(),
        })
    }

    /// Parses the value for `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::usage(format!("{}: {key}: {e}", self.path.display())))
            })
            .transpose()
    }
}

/// Resolves a setting: flag, then config file, then default.
pub fn pick<T: FromStr>(flag: Option<T>, cfg: Option<&ConfigFile>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match cfg {
        Some(c) => c.get(key),
        None => Ok(None),
    }
}
