//! `key = value` defaults for command flags.
//!
//! Entries are turned into flags inserted right after the subcommand name,
//! ahead of the user's own flags; since later occurrences of a flag win,
//! anything given on the command line overrides the file.

use std::ffi::OsString;
use std::path::Path;

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Position of the subcommand name.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", i + 1));
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Returns `args` with the config file's entries spliced in.
pub fn expand(args: Vec<OsString>, command: &clap::Command) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
    let entries = parse(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
    let Some(at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let name = args[at].to_string_lossy().into_owned();
    let Some(sub) = command.find_subcommand(&name) else {
        return Ok(args);
    };
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && !a.is_global_set())
            .ok_or_else(|| format!("config {}: unknown key {key:?} for {name}", path.display()))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}={value}").into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => injected.push(format!("--{key}").into()),
                "false" | "no" | "off" | "0" => {}
                _ => return Err(format!("config {}: {key} expects true or false", path.display())),
            }
        }
    }
    let mut out = args;
    out.splice(at + 1..at + 1, injected);
    Ok(out)
}
