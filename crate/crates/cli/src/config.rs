//! Flat key-value config files.
//!
//! ```text
//! # comment
//! [global]
//! seed = 7
//! workers = 4
//!
//! [sqa]
//! tau = 1000
//! trotter = 64
//! moves = time
//! ```
//!
//! Keys are long flag names without the dashes. Values under `[global]`
//! and under the section named after the subcommand become flags, unless
//! the same flag is already on the command line. `true`/`false` switch
//! boolean flags. Lists are comma-separated, as on the command line.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    sections: BTreeMap<String, Vec<(String, String)>>,
}

/// Flags that take no value.
const SWITCHES: &[&str] = &["desk-scale"];

impl Config {
    pub fn parse(text: &str, origin: &Path) -> CliResult<Self> {
        let err = |n: usize, m: String| CliError::Invalid(format!("{}: line {n}: {m}", origin.display()));
        let mut sections: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let n = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() {
                    return Err(err(n, "empty section name".into()));
                }
                current = Some(name.to_string());
                sections.entry(name.to_string()).or_default();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(n, format!("expected `key = value`, found {line:?}")));
            };
            let Some(section) = &current else {
                return Err(err(n, "key outside of any [section]".into()));
            };
            let key = k.trim();
            if key.is_empty() || key.starts_with('-') {
                return Err(err(n, format!("bad key {key:?}")));
            }
            let entries = sections.get_mut(section).expect("section exists");
            if entries.iter().any(|(k, _)| k == key) {
                return Err(err(n, format!("duplicate key {key:?} in [{section}]")));
            }
            entries.push((key.to_string(), v.trim().to_string()));
        }
        Ok(Config { sections })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Flags to append to `argv` for `subcommand`.
    pub fn flags_for(&self, subcommand: &str, argv: &[String]) -> CliResult<Vec<String>> {
        let present = |key: &str| {
            let flag = format!("--{key}");
            let prefix = format!("--{key}=");
            argv.iter().any(|a| *a == flag || a.starts_with(&prefix))
        };
        let mut out = Vec::new();
        for section in ["global", subcommand] {
            for (k, v) in self.sections.get(section).into_iter().flatten() {
                if present(k) {
                    continue;
                }
                if SWITCHES.contains(&k.as_str()) {
                    match v.as_str() {
                        "true" => out.push(format!("--{k}")),
                        "false" => {}
                        _ => {
                            return Err(CliError::Invalid(format!(
                                "[{section}] {k}: expected true or false, found {v:?}"
                            )))
                        }
                    }
                } else {
                    out.push(format!("--{k}"));
                    out.push(v.clone());
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Config {
        Config::parse(text, Path::new("c.conf")).unwrap()
    }

    #[test]
    fn command_line_wins() {
        let c = cfg("[global]\nseed = 3\n[sqa]\ntau = 100\ntrotter = 8\n");
        let argv: Vec<String> = ["sqa", "--tau", "50"].iter().map(|s| s.to_string()).collect();
        assert_eq!(c.flags_for("sqa", &argv).unwrap(), ["--seed", "3", "--trotter", "8"]);
        let argv: Vec<String> = ["sqa", "--seed=9"].iter().map(|s| s.to_string()).collect();
        assert_eq!(c.flags_for("sqa", &argv).unwrap(), ["--tau", "100", "--trotter", "8"]);
    }

    #[test]
    fn other_sections_are_ignored() {
        let c = cfg("[pimc-eq]\nmcs = 10\n");
        assert!(c.flags_for("sqa", &[]).unwrap().is_empty());
    }

    #[test]
    fn switches_and_comments() {
        let c = cfg("# top\n[global]\ndesk-scale = true # trailing\n");
        assert_eq!(c.flags_for("figure", &[]).unwrap(), ["--desk-scale"]);
        let c = cfg("[global]\ndesk-scale = false\n");
        assert!(c.flags_for("figure", &[]).unwrap().is_empty());
    }

    #[test]
    fn malformed_lines_report_position() {
        let e = Config::parse("[a]\njunk\n", Path::new("c.conf")).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(Config::parse("k = v\n", Path::new("c")).is_err());
        assert!(Config::parse("[a]\nk = 1\nk = 2\n", Path::new("c")).is_err());
    }
}
