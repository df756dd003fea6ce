//! Flat `key = value` configuration files for [`ScoreConfig`].
//!
//! ```text
//! # standard run
//! T = 1000000
//! m = 2
//! alpha = 1000
//! dist = triangular
//! ```
//!
//! Keys accept either the CLI flag names (`T`, `m`, `alpha`, `beta`, `dist`,
//! `seed`, `workers`, `redundancy`, `random_init`, `epsilon`) or the
//! [`ScoreConfig`] field names.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::engine::ScoreConfig;
use crate::error::{Error, Result};

/// Parses `text` and applies every key onto `base`.
pub fn apply_config_text(base: &mut ScoreConfig, text: &str) -> Result<()> {
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value', got '{raw}'", line_no + 1))
        })?;
        set_key(base, key.trim(), value.trim())
            .map_err(|e| Error::Config(format!("line {}: {e}", line_no + 1)))?;
    }
    Ok(())
}

pub fn load_config_file(base: &mut ScoreConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    apply_config_text(base, &text)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

fn set_key(c: &mut ScoreConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "T" | "iterations" => c.iterations = parse(key, value)?,
        "m" | "sample_dims" => c.sample_dims = parse(key, value)?,
        "alpha" | "neighbors" => c.neighbors = parse(key, value)?,
        "beta" | "distance_exponent" => c.distance_exponent = parse(key, value)?,
        "dist" | "kind" => c.kind = value.parse()?,
        "seed" => c.seed = parse(key, value)?,
        "workers" => c.workers = parse(key, value)?,
        "redundancy" | "enable_redundancy" => c.enable_redundancy = parse_bool(key, value)?,
        "random_init" | "enable_random_init" => c.enable_random_init = parse_bool(key, value)?,
        "epsilon" | "distance_epsilon" => c.distance_epsilon = parse(key, value)?,
        other => return Err(Error::Config(format!("unknown key '{other}'"))),
    }
    Ok(())
}
