//! `--config FILE`: one `key = value` per line, `#` starts a comment. Keys are
//! long flag names. A value is only used when the flag is absent from the
//! command line. Whitespace-separated values repeat the flag.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

use crate::error::CliError;

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected `key = value`", no + 1)));
        };
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", no + 1)));
        }
        out.push((key, v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

/// Value of `--config` in raw arguments, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
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

fn has_flag(args: &[OsString], long: &str) -> bool {
    let bare = format!("--{long}");
    let eq = format!("--{long}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == bare || s.starts_with(&eq)
    })
}

/// Appends config-file values for flags missing from `args`.
pub fn merge_config(cmd: &Command, mut args: Vec<OsString>, path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let entries = parse_config(&text)?;
    let sub = args
        .iter()
        .skip(1)
        .find_map(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()))
        .cloned();
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::Config("`config` cannot be set from a config file".into()));
        }
        let arg = sub
            .as_ref()
            .and_then(|s| s.get_arguments().find(|a| a.get_long() == Some(key.as_str())))
            .or_else(|| cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())));
        let Some(arg) = arg else {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        };
        if has_flag(&args, &key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "yes" | "1" => args.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => return Err(CliError::Config(format!("`{key}` expects true or false, got `{other}`"))),
            },
            _ => {
                for v in value.split_whitespace() {
                    args.push(format!("--{key}").into());
                    args.push(v.into());
                }
            }
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_quotes() {
        let got = parse_config("# defaults\nthreshold = 0.4\n\nname = \"x\" # trailing\n").unwrap();
        assert_eq!(got, vec![("threshold".into(), "0.4".into()), ("name".into(), "x".into())]);
        assert!(parse_config("nonsense").is_err());
    }

    #[test]
    fn finds_config_path() {
        let args: Vec<OsString> = ["bin", "evaluate", "--config=a.cfg"].iter().map(Into::into).collect();
        assert_eq!(config_path(&args), Some("a.cfg".into()));
        let args: Vec<OsString> = ["bin", "--config", "b.cfg", "evaluate"].iter().map(Into::into).collect();
        assert_eq!(config_path(&args), Some("b.cfg".into()));
    }
}
