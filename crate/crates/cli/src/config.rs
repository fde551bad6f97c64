//! `key = value` configuration files, expanded into command-line tokens
//! placed before the explicit arguments so that the latter win.

use std::ffi::{OsStr, OsString};
use std::path::Path;

use clap::ArgAction;

use crate::error::CliError;

/// Reads `--config FILE` from `args` (subcommand at index 1) and splices the
/// file's settings in after the subcommand name.
pub fn expand(args: Vec<OsString>, root: &clap::Command) -> Result<Vec<OsString>, CliError> {
    let Some(sub_name) = args.get(1).and_then(|a| a.to_str()).map(str::to_string) else {
        return Ok(args);
    };
    let Some(sub) = root.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let Some(path) = config_path(&args[2..]) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let tokens = tokens(&text, &path, sub)?;
    let mut out = args[..2].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

fn config_path(rest: &[OsString]) -> Option<std::path::PathBuf> {
    let mut it = rest.iter();
    while let Some(a) = it.next() {
        let a = a.to_str()?;
        if a == "--config" {
            return it.next().map(Into::into);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Translates each `key = value` line into arguments of `sub`, checking keys
/// and values line by line.
pub fn tokens(text: &str, path: &Path, sub: &clap::Command) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    let mut seen: Vec<String> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let fail = |msg: String| CliError::Usage(format!("{}:{}: {msg}", path.display(), index + 1));
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| fail(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if seen.contains(&key) {
            return Err(fail(format!("duplicate key `{key}`")));
        }
        seen.push(key.clone());
        if key == "command" {
            if value != sub.get_name() {
                return Err(fail(format!("config is for `{value}`, not `{}`", sub.get_name())));
            }
            continue;
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_id().as_str().replace('_', "-") == key && key != "config")
            .ok_or_else(|| fail(format!("unknown key `{key}` for `{}`", sub.get_name())))?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value {
                "true" => out.push(OsString::from(format!("--{key}"))),
                "false" => {}
                _ => return Err(fail(format!("`{key}` takes true or false, got `{value}`"))),
            }
            continue;
        }
        let pieces: Vec<&str> = match arg.get_value_delimiter() {
            Some(d) => value.split(d).map(str::trim).collect(),
            None => vec![value],
        };
        let probe = clap::Command::new("probe")
            .arg(clap::Arg::new("value").long("value").value_parser(arg.get_value_parser().clone()).allow_hyphen_values(true));
        for piece in &pieces {
            probe
                .clone()
                .try_get_matches_from([OsStr::new("probe"), OsStr::new("--value"), OsStr::new(piece)])
                .map_err(|e| fail(format!("invalid value for `{key}`: {}", first_line(&e.to_string()))))?;
        }
        if arg.is_positional() {
            out.extend(pieces.iter().map(OsString::from));
        } else {
            out.push(OsString::from(format!("--{key}")));
            out.push(OsString::from(value));
        }
    }
    Ok(out)
}

fn first_line(s: &str) -> &str {
    let s = s.trim_start_matches("error: ");
    s.lines().next().unwrap_or(s)
}
