//! Scenario files: TOML with mandatory unit suffixes on every physical key.
//!
//! ```toml
//! kind = "grounded-metal"        # open-space | grounded-metal | floating-metal
//! interaction = "proximity"      # proximity | touch
//! v_tx_v = 1.0
//!
//! [profile]
//! c_x_tx_pf = 0.2
//! c_b_pf = 150
//! c_x_rx_pf = 0.2
//! c_gb_rx_pf = 3
//! c_l_pf = 2
//! c_gm_tx_pf = 0.8
//!
//! [contact]                      # required iff interaction = "touch"
//! area_cm2 = 10
//! rho_c_ohm_m2 = 0.1             # or r_con_ohm
//! c_bm_pf = 30
//!
//! [termination]
//! kind = "resistive"             # capacitive (default) | resistive
//! r_l_ohm = 50
//! ```
//!
//! Unknown keys, missing suffixes and suffixes of the wrong dimension are
//! rejected with the offending key and line. Omitted capacitances are zero.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{HbcError, Result};
use crate::model::{
    CapName, CapacitanceProfile, ContactInterface, Interaction, Scenario, ScenarioKind,
    Termination,
};

#[derive(Clone, Copy)]
enum Dim {
    Capacitance,
    Resistance,
    Area,
    Voltage,
    Resistivity,
}

impl Dim {
    fn suffixes(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Capacitance => &[
                ("f", 1.0),
                ("uf", 1e-6),
                ("nf", 1e-9),
                ("pf", 1e-12),
                ("ff", 1e-15),
            ],
            Dim::Resistance => &[("ohm", 1.0), ("kohm", 1e3), ("megohm", 1e6)],
            Dim::Area => &[("m2", 1.0), ("cm2", 1e-4), ("mm2", 1e-6)],
            Dim::Voltage => &[("v", 1.0), ("mv", 1e-3)],
            Dim::Resistivity => &[("ohm_m2", 1.0), ("ohm_cm2", 1e-4)],
        }
    }

    fn expected(self) -> &'static str {
        match self {
            Dim::Capacitance => "_f, _uf, _nf, _pf, _ff",
            Dim::Resistance => "_ohm, _kohm, _megohm",
            Dim::Area => "_m2, _cm2, _mm2",
            Dim::Voltage => "_v, _mv",
            Dim::Resistivity => "_ohm_m2, _ohm_cm2",
        }
    }
}

/// Locates `key = ...` inside `[section]` (or the root table) for error
/// context. Returns a 1-based line number.
pub(crate) fn key_line(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.split(']').next().map(|s| s.trim().to_string());
            continue;
        }
        if current.as_deref() != section {
            continue;
        }
        if let Some((lhs, _)) = line.split_once('=') {
            if lhs.trim().trim_matches('"') == key {
                return Some(i + 1);
            }
        }
    }
    None
}

fn byte_to_line(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Reader<'a> {
    text: &'a str,
    section: Option<&'a str>,
    table: &'a Table,
    consumed: Vec<String>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, section: Option<&'a str>, table: &'a Table) -> Self {
        Reader {
            text,
            section,
            table,
            consumed: Vec::new(),
        }
    }

    fn line(&self, key: &str) -> Option<usize> {
        key_line(self.text, self.section, key)
    }

    fn parse_err(&self, key: &str, message: impl Into<String>) -> HbcError {
        HbcError::Parse {
            line: self.line(key),
            key: Some(self.qualified(key)),
            message: message.into(),
        }
    }

    fn qualified(&self, key: &str) -> String {
        match self.section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        }
    }

    fn number(&self, key: &str, value: &Value) -> Result<f64> {
        match value {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.parse_err(key, "expected a number")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => {
                self.consumed.push(key.to_string());
                Ok(Some(s.clone()))
            }
            Some(_) => Err(self.parse_err(key, "expected a string")),
        }
    }

    /// Reads `base_<suffix>` and converts to SI. A key that starts with
    /// `base_` but carries the wrong suffix is a unit mismatch; a bare
    /// `base` is one too.
    fn quantity(&mut self, base: &str, dim: Dim) -> Result<Option<f64>> {
        let mut found: Option<(String, f64)> = None;
        for (key, value) in self.table.iter() {
            let rest = if key == base {
                Some("")
            } else {
                key.strip_prefix(base).and_then(|r| r.strip_prefix('_'))
            };
            let Some(suffix) = rest else { continue };
            if self.is_other_quantity(base, key) {
                continue;
            }
            let Some(&(_, scale)) = dim.suffixes().iter().find(|(s, _)| *s == suffix) else {
                return Err(HbcError::UnitMismatch {
                    key: self.qualified(key),
                    line: self.line(key),
                    expected: dim.expected(),
                });
            };
            if found.is_some() {
                return Err(self.parse_err(key, format!("`{base}` given more than once")));
            }
            let x = self.number(key, value)?;
            if !x.is_finite() && !(x == f64::INFINITY && matches!(dim, Dim::Resistance)) {
                return Err(self.parse_err(key, "value must be finite"));
            }
            if x < 0.0 {
                return Err(self.parse_err(key, "value must be >= 0"));
            }
            found = Some((key.clone(), x * scale));
        }
        Ok(found.map(|(key, si)| {
            self.consumed.push(key);
            si
        }))
    }

    /// `c_gb_rx_pf` must not be claimed by the `c_gb` prefix and so on:
    /// a key belongs to the longest known base that prefixes it.
    fn is_other_quantity(&self, base: &str, key: &str) -> bool {
        KNOWN_BASES
            .iter()
            .any(|other| other.len() > base.len() && other.starts_with(base) && key.starts_with(other))
    }

    fn finish(self) -> Result<()> {
        for key in self.table.keys() {
            if !self.consumed.iter().any(|k| k == key) {
                return Err(HbcError::UnknownKey {
                    key: self.qualified(key),
                    line: self.line(key),
                });
            }
        }
        Ok(())
    }
}

const KNOWN_BASES: &[&str] = &[
    "c_x_tx", "c_x_rx", "c_gm_tx", "c_gm_rx", "c_b", "c_bm", "c_mg", "c_gb_rx", "c_l", "c_c",
    "area", "rho_c", "r_con", "r_l", "v_tx",
];

fn sub_table<'a>(root: &'a Table, text: &str, name: &str) -> Result<Option<&'a Table>> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(HbcError::Parse {
            line: key_line(text, None, name),
            key: Some(name.to_string()),
            message: "expected a table".into(),
        }),
    }
}

/// Reads a table of unit-suffixed capacitances; omitted entries are zero.
pub(crate) fn parse_profile_table(
    text: &str,
    section: &str,
    table: &Table,
) -> Result<CapacitanceProfile> {
    let mut profile = CapacitanceProfile::default();
    let mut r = Reader::new(text, Some(section), table);
    for name in CapName::ALL {
        if let Some(v) = r.quantity(name.key(), Dim::Capacitance)? {
            *profile.get_mut(name) = v;
        }
    }
    r.finish()?;
    Ok(profile)
}

pub(crate) fn parse_root(text: &str) -> Result<Table> {
    toml::from_str(text).map_err(|e| HbcError::Parse {
        line: e.span().map(|s| byte_to_line(text, s.start)),
        key: None,
        message: e.message().to_string(),
    })
}

pub(crate) fn string_key(text: &str, root: &Table, key: &str) -> Result<Option<String>> {
    match root.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(HbcError::Parse {
            line: key_line(text, None, key),
            key: Some(key.to_string()),
            message: "expected a string".into(),
        }),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let root = parse_root(text)?;

    let mut top = Reader::new(text, None, &root);
    let kind_str = top.string("kind")?.ok_or_else(|| HbcError::Parse {
        line: None,
        key: Some("kind".into()),
        message: "missing required key".into(),
    })?;
    let kind = ScenarioKind::parse(&kind_str)
        .ok_or_else(|| top.parse_err("kind", format!("unknown scenario kind '{kind_str}'")))?;
    let interaction = match top.string("interaction")? {
        None => Interaction::Proximity,
        Some(s) => Interaction::parse(&s)
            .ok_or_else(|| top.parse_err("interaction", format!("unknown interaction '{s}'")))?,
    };
    let v_tx = top.quantity("v_tx", Dim::Voltage)?.unwrap_or(1.0);

    let mut profile = CapacitanceProfile::default();
    let profile_table = sub_table(&root, text, "profile")?;
    if profile_table.is_some() {
        top.consumed.push("profile".into());
    }
    if let Some(table) = profile_table {
        profile = parse_profile_table(text, "profile", table)?;
    }

    let mut contact = None;
    if let Some(table) = sub_table(&root, text, "contact")? {
        top.consumed.push("contact".into());
        let mut r = Reader::new(text, Some("contact"), table);
        let area = r.quantity("area", Dim::Area)?;
        let rho_c = r.quantity("rho_c", Dim::Resistivity)?;
        let r_con = r.quantity("r_con", Dim::Resistance)?;
        let c_bm = r.quantity("c_bm", Dim::Capacitance)?;
        r.finish()?;
        let missing = |k: &str| HbcError::Parse {
            line: key_line(text, None, "contact").or_else(|| text.find("[contact]").map(|o| byte_to_line(text, o))),
            key: Some(format!("contact.{k}")),
            message: "missing required key".into(),
        };
        let area = area.ok_or_else(|| missing("area_*"))?;
        let c_bm = c_bm.ok_or_else(|| missing("c_bm_*"))?;
        let c = match (rho_c, r_con) {
            (Some(rho), None) => ContactInterface::new(area, rho, c_bm)?,
            (None, Some(r)) => ContactInterface::from_resistance_and_area(r, c_bm, area)?,
            (Some(rho), Some(r)) => {
                let implied = rho / area;
                if r.is_finite() && ((implied - r).abs() > 1e-9 * r) {
                    return Err(HbcError::InvalidScenario(format!(
                        "contact: r_con = {r} Ω disagrees with rho_c/area = {implied} Ω"
                    )));
                }
                let c = ContactInterface {
                    a_con: area,
                    rho_c: rho,
                    r_con: r,
                    c_bm_touch: c_bm,
                };
                c.validate()?;
                c
            }
            (None, None) => {
                ContactInterface::with_default_resistivity(area, c_bm)?
            }
        };
        contact = Some(c);
    }

    let mut termination = Termination::Capacitive;
    if let Some(table) = sub_table(&root, text, "termination")? {
        top.consumed.push("termination".into());
        let mut r = Reader::new(text, Some("termination"), table);
        let kind = r.string("kind")?.unwrap_or_else(|| "capacitive".into());
        let r_l = r.quantity("r_l", Dim::Resistance)?;
        termination = match (kind.as_str(), r_l) {
            ("capacitive", None) => Termination::Capacitive,
            ("capacitive", Some(_)) => {
                return Err(r.parse_err("kind", "r_l given for a capacitive termination"))
            }
            ("resistive", Some(r_l)) => Termination::Resistive { r_l },
            ("resistive", None) => {
                return Err(r.parse_err("kind", "resistive termination needs r_l_ohm"))
            }
            (other, _) => {
                return Err(r.parse_err("kind", format!("unknown termination '{other}'")))
            }
        };
        r.finish()?;
    }
    top.finish()?;

    let scenario = Scenario {
        kind,
        interaction,
        profile,
        contact,
        termination,
        v_tx,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HbcError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Canonical SI serialization. `parse_scenario(&emit_scenario(s)) == s`
/// for any valid scenario; f64 `Display` is shortest round-trip.
pub fn emit_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let num = |x: f64| -> String {
        if x.is_infinite() {
            "inf".into()
        } else if x == x.trunc() && x.abs() < 1e15 {
            format!("{x:.1}")
        } else {
            format!("{x:e}")
        }
    };
    let _ = writeln!(out, "kind = \"{}\"", s.kind.as_str());
    let _ = writeln!(out, "interaction = \"{}\"", s.interaction.as_str());
    let _ = writeln!(out, "v_tx_v = {}", num(s.v_tx));
    let _ = writeln!(out, "\n[profile]");
    for name in CapName::ALL {
        let _ = writeln!(out, "{}_f = {}", name.key(), num(s.profile.get(name)));
    }
    if let Some(c) = &s.contact {
        let _ = writeln!(out, "\n[contact]");
        let _ = writeln!(out, "area_m2 = {}", num(c.a_con));
        let _ = writeln!(out, "rho_c_ohm_m2 = {}", num(c.rho_c));
        let _ = writeln!(out, "r_con_ohm = {}", num(c.r_con));
        let _ = writeln!(out, "c_bm_f = {}", num(c.c_bm_touch));
    }
    match s.termination {
        Termination::Capacitive => {}
        Termination::Resistive { r_l } => {
            let _ = writeln!(out, "\n[termination]\nkind = \"resistive\"\nr_l_ohm = {}", num(r_l));
        }
    }
    out
}

/// SHA-256 of the canonical serialization, lowercase hex.
pub fn scenario_digest(s: &Scenario) -> String {
    let hash = Sha256::digest(emit_scenario(s).as_bytes());
    hash.iter().fold(String::with_capacity(64), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}
