//! Flat `key = value` config files.
//!
//! Entries become long flags placed right after the subcommand name, ahead of
//! the flags typed on the command line, so the typed flags win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::CliError;

/// Keys that map to switches rather than valued flags.
const SWITCHES: [&str; 1] = ["no-meta"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// `argv` with the file entries spliced in after the subcommand token.
pub fn splice(argv: &[OsString], subcommand: &str, entries: &[(String, String)]) -> Result<Vec<OsString>, CliError> {
    let at = argv
        .iter()
        .skip(1)
        .position(|a| a == subcommand)
        .map(|p| p + 2)
        .ok_or_else(|| CliError::Config(format!("subcommand `{subcommand}` not found in arguments")))?;
    let env_precision = std::env::var_os("PSLAB_PRECISION_BITS").is_some();
    let mut extra: Vec<OsString> = Vec::new();
    for (k, v) in entries {
        match k.as_str() {
            "config" => return Err(CliError::Config("`config` cannot be set from a config file".into())),
            // The environment override beats the file.
            "precision-bits" if env_precision => continue,
            _ => {}
        }
        if SWITCHES.contains(&k.as_str()) {
            match v.as_str() {
                "true" => extra.push(format!("--{k}").into()),
                "false" => {}
                _ => return Err(CliError::Config(format!("`{k}` takes true or false, got `{v}`"))),
            }
        } else {
            extra.push(format!("--{k}").into());
            extra.push(v.into());
        }
    }
    let mut out = argv[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}
