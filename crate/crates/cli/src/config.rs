//! `key = value` config files. Each key names a long flag of the chosen
//! subcommand (`reg_c` and `reg-c` both mean `--reg-c`). Config values are
//! spliced in right after the subcommand name, so anything given on the
//! command line later overrides them.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Command;

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got `{raw}`", i + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

/// Finds `--config PATH` or `--config=PATH` anywhere in `args`.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Returns `args` with the config entries that apply to the invoked
/// subcommand inserted after its name. Keys that no subcommand accepts are an
/// error; keys belonging to other subcommands are ignored.
pub fn splice(cmd: &Command, args: Vec<OsString>, path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    let entries = parse(&text).with_context(|| format!("in config file {}", path.display()))?;

    let Some((pos, sub)) = args
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| cmd.find_subcommand(a.to_string_lossy().as_ref()).map(|s| (i, s)))
    else {
        return Ok(args);
    };

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        let arg = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            let known = cmd
                .get_subcommands()
                .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
            if known {
                continue;
            }
            bail!("config file {}: unknown key `{key}`", path.display());
        };
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}").into());
            injected.push(value.into());
        } else {
            match value.as_str() {
                "true" | "yes" | "1" | "" => injected.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => bail!("config file {}: `{key}` expects true or false, got `{other}`", path.display()),
            }
        }
    }
    let mut out = args;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let got = parse("# header\nreg_c = 0.5\n\nk-fraction=0.1 # trailing\n").unwrap();
        assert_eq!(
            got,
            vec![("reg-c".into(), "0.5".into()), ("k-fraction".into(), "0.1".into())]
        );
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse("reg_c 0.5").is_err());
    }

    #[test]
    fn finds_config_flag_in_both_forms() {
        let a: Vec<OsString> = ["x", "--config", "c.txt", "propagate"].iter().map(Into::into).collect();
        assert_eq!(config_path(&a), Some("c.txt".into()));
        let b: Vec<OsString> = ["x", "propagate", "--config=d.txt"].iter().map(Into::into).collect();
        assert_eq!(config_path(&b), Some("d.txt".into()));
    }
}
