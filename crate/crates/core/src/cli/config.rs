//! Flat `key = value` run files and list-valued flag parsing.
//!
//! ```text
//! # line topology, 3-stage
//! kind = line
//! n-trusted = 2
//! protocol = 3-stage
//! burst = 200
//! distances = 1:60:1
//! ```
//!
//! Keys are the long flag names without the leading dashes. Flags given on
//! the command line override values from the file.

use std::path::Path;

use crate::error::{Error, Result};

/// Keys accepted in a run file.
pub const KEYS: &[&str] = &[
    "kind",
    "L",
    "k",
    "g",
    "m",
    "leaves",
    "n-trusted",
    "protocol",
    "burst",
    "rounds",
    "seed",
    "alpha",
    "decoherence",
    "bsm",
    "redundancy",
    "bell-redundancy",
    "distances",
    "bursts",
    "max-paths",
    "qber-sample",
    "out",
    "format",
    "recipe",
];

/// Parses a run file into `(key, value)` pairs in file order.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", no + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse(format!("config line {}: unknown key {key:?}", no + 1)));
        }
        if value.is_empty() {
            return Err(Error::Parse(format!("config line {}: empty value for {key}", no + 1)));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Reads a run file and renders it as command-line tokens.
pub fn config_tokens(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text)?
        .into_iter()
        .flat_map(|(k, v)| [format!("--{k}"), v])
        .collect())
}

/// `start:stop:step` (inclusive) or a comma-separated list of distances.
pub fn parse_distances(s: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Parse(format!("distances {s:?}: {what}"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let num = |t: &str| t.parse::<f64>().map_err(|_| bad("not a number"));
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(bad("need step > 0 and stop ≥ start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // index-based so the grid carries no accumulated rounding
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad("not a number")))
            .collect(),
        _ => Err(bad("expected start:stop:step or a comma list")),
    }
}

/// Comma-separated positive integers; scientific notation such as `1e6` is accepted.
pub fn parse_bursts(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<u64>().or_else(|_| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| *v >= 1.0 && v.fract() == 0.0 && *v <= u64::MAX as f64)
                    .map(|v| v as u64)
                    .ok_or_else(|| Error::Parse(format!("burst size {t:?} is not a positive integer")))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let cfg = parse_config("# header\nkind = line   # trailing\n\n  rounds=5000\n").unwrap();
        assert_eq!(cfg, vec![("kind".into(), "line".into()), ("rounds".into(), "5000".into())]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("kind line").is_err());
        assert!(parse_config("kind =").is_err());
    }

    #[test]
    fn distance_grids() {
        assert_eq!(parse_distances("1:5:1").unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_distances("5, 10,20").unwrap(), vec![5.0, 10.0, 20.0]);
        assert_eq!(parse_distances("0.5:1.5:0.5").unwrap(), vec![0.5, 1.0, 1.5]);
        assert_eq!(parse_distances("5:400:5").unwrap().len(), 80);
        assert!(parse_distances("5:1:1").is_err());
        assert!(parse_distances("1:2").is_err());
        assert!(parse_distances("a,b").is_err());
    }

    #[test]
    fn burst_lists() {
        assert_eq!(parse_bursts("10,1e2, 1000,1e6").unwrap(), vec![10, 100, 1000, 1_000_000]);
        assert!(parse_bursts("0.5").is_err());
        assert!(parse_bursts("ten").is_err());
    }
}
