//! Named capacitance tables for enclosed environments.
//!
//! A preset is a base profile plus per-position deltas that are added to
//! it. The shipped tables are illustrative parallel-plate estimates; files
//! in `$HBC_PRESET_DIR` named `<preset>.toml` take precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::Value;

use crate::error::{HbcError, Result};
use crate::model::{CapacitanceProfile, Scenario, ScenarioKind};
use crate::scenario_file::{key_line, parse_profile_table, parse_root, string_key};

pub const PRESET_DIR_ENV: &str = "HBC_PRESET_DIR";

const BUILTIN: &[(&str, &str)] = &[
    ("car", include_str!("../presets/car.toml")),
    ("elevator", include_str!("../presets/elevator.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetTable {
    pub name: String,
    pub kind: ScenarioKind,
    pub base: CapacitanceProfile,
    pub positions: BTreeMap<String, CapacitanceProfile>,
    pub note: String,
}

impl PresetTable {
    pub fn parse(text: &str) -> Result<PresetTable> {
        let root = parse_root(text)?;
        let missing = |key: &str| HbcError::Parse {
            line: None,
            key: Some(key.to_string()),
            message: "missing required key".into(),
        };
        for key in root.keys() {
            if !matches!(key.as_str(), "name" | "kind" | "note" | "base" | "positions") {
                return Err(HbcError::UnknownKey {
                    key: key.clone(),
                    line: key_line(text, None, key),
                });
            }
        }
        let name = string_key(text, &root, "name")?.ok_or_else(|| missing("name"))?;
        let kind_str = string_key(text, &root, "kind")?.ok_or_else(|| missing("kind"))?;
        let kind = ScenarioKind::parse(&kind_str).ok_or_else(|| HbcError::Parse {
            line: key_line(text, None, "kind"),
            key: Some("kind".into()),
            message: format!("unknown scenario kind '{kind_str}'"),
        })?;
        let note = string_key(text, &root, "note")?.unwrap_or_default();

        let base = match root.get("base") {
            Some(Value::Table(t)) => parse_profile_table(text, "base", t)?,
            Some(_) => return Err(table_expected(text, "base")),
            None => return Err(missing("base")),
        };

        let mut positions = BTreeMap::new();
        match root.get("positions") {
            Some(Value::Table(t)) => {
                for (pos, value) in t {
                    let Value::Table(delta) = value else {
                        return Err(table_expected(text, &format!("positions.{pos}")));
                    };
                    let section = format!("positions.{pos}");
                    positions.insert(pos.clone(), parse_profile_table(text, &section, delta)?);
                }
            }
            Some(_) => return Err(table_expected(text, "positions")),
            None => return Err(missing("positions")),
        }
        if positions.is_empty() {
            return Err(missing("positions.*"));
        }

        let table = PresetTable {
            name,
            kind,
            base,
            positions,
            note,
        };
        for pos in table.positions.keys() {
            table.scenario(pos)?.validate().map_err(|e| {
                HbcError::InvalidScenario(format!("preset `{}` position `{pos}`: {e}", table.name))
            })?;
        }
        Ok(table)
    }

    pub fn profile(&self, position: &str) -> Result<CapacitanceProfile> {
        let delta = self
            .positions
            .get(position)
            .ok_or_else(|| HbcError::UnknownPosition {
                preset: self.name.clone(),
                position: position.to_string(),
            })?;
        Ok(self.base.overlay(delta))
    }

    pub fn scenario(&self, position: &str) -> Result<Scenario> {
        Ok(Scenario::new(self.kind, self.profile(position)?))
    }
}

fn table_expected(text: &str, key: &str) -> HbcError {
    HbcError::Parse {
        line: key_line(text, None, key),
        key: Some(key.to_string()),
        message: "expected a table".into(),
    }
}

fn override_dir() -> Option<PathBuf> {
    std::env::var_os(PRESET_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| HbcError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads `name`, preferring `$HBC_PRESET_DIR/<name>.toml` over the
/// built-in copy.
pub fn load_preset(name: &str) -> Result<PresetTable> {
    load_preset_from(name, override_dir().as_deref())
}

pub fn load_preset_from(name: &str, dir: Option<&Path>) -> Result<PresetTable> {
    if let Some(dir) = dir {
        let path = dir.join(format!("{name}.toml"));
        if path.is_file() {
            return PresetTable::parse(&read(&path)?);
        }
    }
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| PresetTable::parse(text))
        .unwrap_or_else(|| Err(HbcError::UnknownPreset(name.to_string())))
}

/// Names of all available presets, sorted.
pub fn list_presets() -> Result<Vec<String>> {
    list_presets_from(override_dir().as_deref())
}

pub fn list_presets_from(dir: Option<&Path>) -> Result<Vec<String>> {
    let mut names: Vec<String> = BUILTIN.iter().map(|(n, _)| n.to_string()).collect();
    if let Some(dir) = dir {
        let entries = std::fs::read_dir(dir).map_err(|source| HbcError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "toml") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    names.push(stem.to_string());
                }
            }
        }
    }
    names.sort();
    names.dedup();
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::PF;

    #[test]
    fn builtins_parse_and_validate() {
        for (name, _) in BUILTIN {
            let t = load_preset_from(name, None).unwrap();
            assert_eq!(&t.name, name);
            assert!(!t.note.is_empty());
        }
        let e = load_preset_from("elevator", None).unwrap();
        assert_eq!(e.positions.len(), 9);
        let a = e.profile("A").unwrap();
        assert!((a.c_bm - 22.1 * PF).abs() < 1e-20);
        assert!((a.c_b - 150.0 * PF).abs() < 1e-20);
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(
            load_preset_from("submarine", None),
            Err(HbcError::UnknownPreset(_))
        ));
        let e = load_preset_from("elevator", None).unwrap();
        assert!(matches!(e.profile("Z"), Err(HbcError::UnknownPosition { .. })));
    }

    #[test]
    fn open_space_preset_with_metal_rejected() {
        let text = r#"
name = "bad"
kind = "open-space"
[base]
c_x_tx_pf = 0.2
c_b_pf = 150
c_x_rx_pf = 0.2
c_l_pf = 5
[positions.X]
c_bm_pf = 3
"#;
        assert!(matches!(
            PresetTable::parse(text),
            Err(HbcError::InvalidScenario(_))
        ));
    }
}
