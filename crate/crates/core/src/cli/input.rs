//! Parsing of data files and list-valued flags.

use std::fs;
use std::io::Read;

use super::CliError;

/// Reads `path` (or stdin for `-`) and returns the raw bytes.
pub fn read_input(path: &str) -> Result<Vec<u8>, CliError> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::Usage(format!("cannot read stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))
}

/// Decimal literals separated by newlines and/or commas. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_values(bytes: &[u8]) -> Result<Vec<f64>, CliError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| CliError::Usage(format!("input is not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for token in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let x: f64 = token.parse().map_err(|_| {
                CliError::Usage(format!(
                    "line {}: cannot parse '{token}' as a number",
                    i + 1
                ))
            })?;
            out.push(x);
        }
    }
    Ok(out)
}

/// `4`, `2..6` (inclusive), `2..=6` or `2,3,5`.
pub fn parse_n_spec(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("invalid record-count spec '{spec}'"));
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

pub fn parse_f64_list(spec: &str, what: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid {what} '{}'", t.trim())))
        })
        .collect()
}

pub fn parse_named_list<T: std::str::FromStr>(spec: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    spec.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e: T::Err| CliError::Usage(e.to_string()))
        })
        .collect()
}

/// Log-spaced grid from `lo:hi` with `per_decade` points per factor of ten.
pub fn parse_k_sweep(spec: &str, per_decade: usize) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid k sweep '{spec}', expected LO:HI"));
    let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || per_decade == 0 {
        return Err(bad());
    }
    let steps = ((hi / lo).log10() * per_decade as f64).round() as usize;
    Ok((0..=steps)
        .map(|i| {
            if i == steps {
                hi
            } else {
                lo * 10f64.powf(i as f64 / per_decade as f64)
            }
        })
        .collect())
}
