//! Layered run configuration: preset, then `key=value` file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sirlab::{ModelParams, State, UnscaledParams};

pub const KEYS: &[&str] = &[
    "r", "beta", "a", "K", "s0", "i0", "r0", "transient", "steps", "seed", "out", "param", "lo",
    "hi", "points", "n", "samples", "curve_points", "rho", "c", "beta_tilde", "a_tilde", "mu",
    "gamma", "lambda",
];

const UNSCALED_KEYS: [&str; 7] = ["rho", "c", "beta_tilde", "a_tilde", "mu", "gamma", "lambda"];

/// Errors that map to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

const BASE: &[(&str, &str)] = &[("a", "1"), ("K", "0.5")];

/// Named parameter sets for the standard runs.
pub const PRESETS: &[(&str, &[(&str, &str)])] = &[
    ("ns-r2.2", &[("r", "2.2"), ("beta", "3"), ("s0", "0.5"), ("i0", "0.1"), ("steps", "2000")]),
    ("ns-r2.5", &[("r", "2.5"), ("beta", "3"), ("s0", "0.5"), ("i0", "0.1"), ("steps", "2000")]),
    (
        "cycle10-r3.3",
        &[("r", "3.3"), ("beta", "3"), ("s0", "0.5"), ("i0", "0.1"), ("transient", "10000"), ("steps", "1000")],
    ),
    (
        // just past the tangency, where the 3-cycle is stable
        "three-cycle",
        &[("r", "3.82842712575"), ("beta", "1.1"), ("s0", "0.8"), ("i0", "0.2"), ("transient", "100000"), ("steps", "300")],
    ),
    ("e1-r3.6", &[("r", "3.6"), ("beta", "2.33"), ("s0", "0.5"), ("i0", "0.1"), ("steps", "200")]),
    ("ns-beta2.85", &[("r", "3.6"), ("beta", "2.85"), ("s0", "0.5"), ("i0", "0.1"), ("transient", "10000"), ("steps", "2000")]),
    ("chaos-r4", &[("r", "4"), ("beta", "1.1"), ("s0", "0.3333333333333333"), ("i0", "0.1"), ("steps", "100")]),
    ("chaos-r4-rounded", &[("r", "4"), ("beta", "1.1"), ("s0", "0.3333"), ("i0", "0.1"), ("steps", "100")]),
    ("flip-e0", &[("r", "3"), ("beta", "1.1")]),
    ("ns-boundary", &[("r", "2.1875"), ("beta", "3")]),
    ("stability", &[("r", "2"), ("beta", "1"), ("a", "0.2"), ("K", "0.9"), ("curve_points", "200")]),
    (
        "scan-r-beta1.1",
        &[("param", "r"), ("lo", "2.5"), ("hi", "4"), ("points", "600"), ("r", "2.5"), ("beta", "1.1"), ("s0", "0.4"), ("i0", "0.05")],
    ),
    (
        "scan-r-beta3",
        &[("param", "r"), ("lo", "1.05"), ("hi", "4.18"), ("points", "600"), ("r", "1.05"), ("beta", "3"), ("s0", "0.5"), ("i0", "0.1")],
    ),
    (
        "scan-beta-r3.6",
        &[("param", "beta"), ("lo", "0.5"), ("hi", "4"), ("points", "600"), ("r", "3.6"), ("beta", "0.5"), ("s0", "0.4"), ("i0", "0.1")],
    ),
    (
        "scan-a",
        &[("param", "a"), ("lo", "0"), ("hi", "12"), ("points", "400"), ("r", "2.7"), ("beta", "3"), ("a", "0"), ("K", "0.3"), ("s0", "0.5"), ("i0", "0.1")],
    ),
    (
        "scan-K",
        &[("param", "K"), ("lo", "0.05"), ("hi", "0.95"), ("points", "400"), ("r", "2.7"), ("beta", "3"), ("K", "0.05"), ("s0", "0.5"), ("i0", "0.1")],
    ),
    ("cycles5", &[("n", "5"), ("lo", "3"), ("hi", "4")]),
    ("omega1", &[("r", "2"), ("beta", "1.5"), ("K", "0.25")]),
    ("omega2", &[("r", "2.9"), ("beta", "0.8"), ("a", "0.5"), ("K", "0.25")]),
    ("omega3", &[("r", "3.5"), ("beta", "1.75"), ("K", "0.1")]),
    (
        "lyapunov-beta1.1",
        &[("param", "r"), ("lo", "3.5"), ("hi", "4"), ("points", "200"), ("r", "3.5"), ("beta", "1.1"), ("s0", "0.4"), ("i0", "0.05")],
    ),
    (
        "lyapunov-beta3",
        &[("param", "r"), ("lo", "3.45"), ("hi", "4.18"), ("points", "200"), ("r", "3.45"), ("beta", "3"), ("s0", "0.5"), ("i0", "0.1")],
    ),
    (
        "lyapunov-r3.6",
        &[("param", "beta"), ("lo", "0.5"), ("hi", "4"), ("points", "200"), ("r", "3.6"), ("beta", "0.5"), ("s0", "0.4"), ("i0", "0.1")],
    ),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// The merged key/value view. Later layers overwrite earlier ones.
#[derive(Debug, Default, Clone)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(bad(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<(), ConfigError> {
        let (_, pairs) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            bad(format!("unknown preset `{name}`; available: {}", preset_names().join(", ")))
        })?;
        for (k, v) in BASE.iter().chain(pairs.iter()) {
            self.set(k, *v)?;
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("config line {}: expected key=value", lineno + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| bad(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| bad(format!("invalid value for `{key}`: `{v}`"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?.ok_or_else(|| bad(format!("missing required `{key}`")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(
            self.require("r")?,
            self.require("beta")?,
            self.require("a")?,
            self.require("K")?,
        )
        .map_err(|e| bad(e.to_string()))
    }

    pub fn initial(&self) -> Result<State, ConfigError> {
        let x = State::new(self.get_or("s0", 0.5)?, self.get_or("i0", 0.1)?);
        if !(x.s.is_finite() && x.i.is_finite()) {
            return Err(bad("initial state must be finite"));
        }
        Ok(x)
    }

    pub fn is_unscaled(&self) -> bool {
        UNSCALED_KEYS.iter().any(|k| self.values.contains_key(*k))
    }

    pub fn unscaled(&self) -> Result<UnscaledParams, ConfigError> {
        let u = UnscaledParams {
            rho: self.require("rho")?,
            c: self.require("c")?,
            beta_tilde: self.require("beta_tilde")?,
            a_tilde: self.require("a_tilde")?,
            mu: self.require("mu")?,
            gamma: self.require("gamma")?,
            lambda: self.require("lambda")?,
        };
        u.validate().map_err(|e| bad(e.to_string()))?;
        Ok(u)
    }

    /// `lo` and `hi` with `lo < hi`, both finite.
    pub fn range(&self, default: Option<[f64; 2]>) -> Result<[f64; 2], ConfigError> {
        let lo = match default {
            Some(d) => self.get_or("lo", d[0])?,
            None => self.require("lo")?,
        };
        let hi = match default {
            Some(d) => self.get_or("hi", d[1])?,
            None => self.require("hi")?,
        };
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(bad(format!("invalid range: need lo < hi, got [{lo}, {hi}]")));
        }
        Ok([lo, hi])
    }
}
