//! Parameter set shared by all commands, merged from an optional TOML file
//! (top-level keys, then a table named after the command) and the flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::{invalid, Mode, ParamArgs, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub j: Option<f64>,
    pub r: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub r_step: Option<f64>,
    pub j_list: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub omega: Option<f64>,
    pub mode: Option<Mode>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    /// Phase of `alpha`; config only.
    pub phi: Option<f64>,
    pub normalized: Option<bool>,
    /// Largest j scanned exactly by `minsqueeze`; config only.
    pub exact_j_cap: Option<f64>,
    /// Largest j for the vectorized Liouvillian path; config only.
    pub liouvillian_j_cap: Option<f64>,
}

impl Params {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: Params) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            j,
            r,
            r_min,
            r_max,
            r_step,
            j_list,
            delta,
            gamma,
            omega,
            mode,
            jobs,
            out,
            phi,
            normalized,
            exact_j_cap,
            liouvillian_j_cap
        );
    }
}

impl From<&ParamArgs> for Params {
    fn from(a: &ParamArgs) -> Self {
        Params {
            j: a.j,
            r: a.r,
            r_min: a.r_min,
            r_max: a.r_max,
            r_step: a.r_step,
            j_list: a.j_list.clone(),
            delta: a.delta,
            gamma: a.gamma,
            omega: a.omega,
            mode: a.mode,
            jobs: a.jobs,
            out: a.out.clone(),
            ..Params::default()
        }
    }
}

/// Parses config text. Tables are per-command sections; only the one
/// matching `command` is applied.
pub fn parse_config(text: &str, command: &str) -> Result<Params> {
    let table: toml::Table = text.parse().map_err(|e| crate::LabError::Invalid(format!("config: {e}")))?;
    let mut base = toml::Table::new();
    let mut section = None;
    for (key, value) in table {
        match value {
            toml::Value::Table(t) => {
                if key == command {
                    section = Some(t);
                }
            }
            other => {
                base.insert(key, other);
            }
        }
    }
    let mut params = decode(base)?;
    if let Some(t) = section {
        params.overlay(decode(t)?);
    }
    Ok(params)
}

fn decode(t: toml::Table) -> Result<Params> {
    Params::deserialize(toml::Value::Table(t)).map_err(|e| crate::LabError::Invalid(format!("config: {e}")))
}

pub fn resolve(command: &str, args: &ParamArgs) -> Result<Params> {
    let mut params = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| crate::LabError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text, command)?
        }
        None => Params::default(),
    };
    params.overlay(Params::from(args));
    if let Some(list) = &params.j_list {
        if list.is_empty() {
            return invalid("--j-list is empty");
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_section_overrides_top_level() {
        let p = parse_config("j = 10\nr = 0.5\n[errormap]\nr = 0.7\n[coeffs]\nj = 3\n", "errormap").unwrap();
        assert_eq!(p.j, Some(10.0));
        assert_eq!(p.r, Some(0.7));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config("jj = 1", "coeffs").is_err());
    }

    #[test]
    fn flags_override_config() {
        let mut p = parse_config("j = 10\ngamma = 2.0\nmode = \"ansatz-vs-min\"", "x").unwrap();
        p.overlay(Params { j: Some(4.0), ..Params::default() });
        assert_eq!((p.j, p.gamma, p.mode), (Some(4.0), Some(2.0), Some(Mode::AnsatzVsMin)));
    }
}
