//! `--config` files: `key = value` lines under `[subcommand]` headers.
//!
//! Each entry becomes a `--key value` argument unless the same option was
//! given on the command line. Keys are checked against the subcommand's
//! options before anything runs.

use std::collections::BTreeMap;

use clap::Command;
use gcrlab::{Error, Result};

/// Entries per section, in file order.
pub type Sections = BTreeMap<String, Vec<(String, String, usize)>>;

pub fn parse(text: &str) -> Result<Sections> {
    let mut out = Sections::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("unterminated section header {line:?}"),
            })?;
            let name = name.trim().to_string();
            out.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let section = current.as_ref().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "entry before any [section] header".into(),
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "empty key".into(),
            });
        }
        let entries = out.get_mut(section).expect("inserted on header");
        if entries.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("duplicate key '{key}' in [{section}]"),
            });
        }
        entries.push((key, value.trim().to_string(), line_no));
    }
    Ok(out)
}

/// Check every section against the subcommands of `root` and return the
/// arguments contributed to `subcommand`, skipping options for which
/// `explicit(id)` holds.
pub fn arguments(
    sections: &Sections,
    root: &Command,
    subcommand: &str,
    explicit: impl Fn(&str) -> bool,
) -> Result<Vec<String>> {
    let mut args = Vec::new();
    for (section, entries) in sections {
        let cmd = root
            .find_subcommand(section)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown config section [{section}]")))?;
        for (key, value, line) in entries {
            let arg = cmd
                .get_arguments()
                .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
                .ok_or_else(|| Error::Parse {
                    line: *line,
                    msg: format!("unknown key '{key}' in [{section}]"),
                })?;
            if section != subcommand || explicit(arg.get_id().as_str()) {
                continue;
            }
            if arg.get_action().takes_values() {
                args.push(format!("--{key}"));
                args.push(value.clone());
            } else {
                match value.as_str() {
                    "true" => args.push(format!("--{key}")),
                    "false" => {}
                    _ => {
                        return Err(Error::Parse {
                            line: *line,
                            msg: format!("'{key}' is a switch and takes true or false"),
                        })
                    }
                }
            }
        }
    }
    Ok(args)
}
