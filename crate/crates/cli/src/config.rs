//! Loading of scenario configuration files.
//!
//! A file names a built-in scenario and overrides any part of its defaults:
//!
//! ```toml
//! schema_version = 1
//! scenario = "c"
//!
//! [geometry]            # arguments of the scenario builder
//! approach_velocity = -0.4
//!
//! [controller.admittance]
//! mass = 1.0
//! omega = 5.0
//! zeta = 1.0
//! ```
//!
//! Tables are merged key by key over the defaults. A table whose `kind`
//! differs from the default replaces it, and a second-order parameter table
//! switches between the `(mass, damping, stiffness)` and
//! `(mass, omega, zeta)` forms depending on which keys the file sets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use preimpact_core::{build_scenario, MinJerkSpec, ScenarioConfig, ScenarioKind, ScenarioOverrides};
use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: i64 = 1;

/// Environment variable overriding the configured noise seed.
pub const SEED_ENV: &str = "PREIMPACT_SEED";

/// Top-level keys that are not part of the scenario configuration itself.
const META_KEYS: [&str; 2] = ["schema_version", "geometry"];

const MDK: [&str; 3] = ["mass", "damping", "stiffness"];
const NATURAL: [&str; 3] = ["mass", "omega", "zeta"];

/// A `key=value` override from the command line. The value is read as a
/// TOML value and falls back to a plain string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: Value,
}

impl FromStr for Override {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (key, raw) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(format!("invalid key `{key}`"));
        }
        Ok(Override { key: key.to_string(), value: parse_scalar(raw.trim()) })
    }
}

/// Reads `raw` as a TOML value, or as a string if it is not valid TOML.
pub fn parse_scalar(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Geometry {
    approach_velocity: Option<f64>,
    initial_gap: Option<f64>,
    obstacle_position: Option<f64>,
    path: Option<MinJerkSpec>,
}

/// A configuration document with the source lines of its keys.
#[derive(Debug, Clone)]
pub struct ConfigSource {
    origin: String,
    doc: Table,
    lines: BTreeMap<String, usize>,
}

impl ConfigSource {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Defaults of a built-in scenario with no overrides.
    pub fn builtin(kind: ScenarioKind) -> Self {
        let text = format!("schema_version = {SCHEMA_VERSION}\nscenario = \"{}\"\n", kind.name());
        Self::parse(&text, &format!("<built-in scenario {}>", kind.name())).expect("valid built-in document")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(CliError::Config(format!(
                "{origin}: empty configuration; `schema_version` and `scenario` are required"
            )));
        }
        let spanned = toml::de::DeTable::parse(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let mut lines = BTreeMap::new();
        index_lines(text, spanned.get_ref(), "", &mut lines);
        let doc: Table = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        Ok(ConfigSource { origin: origin.to_string(), doc, lines })
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    /// Builds the scenario configuration with `sets` applied on top of the
    /// file and `seed` (if any) replacing the configured seed.
    pub fn resolve(&self, sets: &[Override], seed: Option<u64>) -> Result<ScenarioConfig> {
        let mut doc = self.doc.clone();
        for o in sets {
            set_path(&mut doc, &o.key, o.value.clone()).map_err(|m| CliError::Config(format!("--set {}: {m}", o.key)))?;
        }
        let from_cli: BTreeSet<&str> = sets.iter().map(|o| o.key.as_str()).collect();
        let anchor = |path: &str| self.anchor(path, &from_cli);

        match doc.get("schema_version") {
            Some(Value::Integer(SCHEMA_VERSION)) => {}
            Some(other) => {
                return Err(CliError::Config(format!(
                    "{}: schema_version: unsupported version {other}, expected {SCHEMA_VERSION}",
                    anchor("schema_version")
                )))
            }
            None => {
                return Err(CliError::Config(format!("{}: missing `schema_version = {SCHEMA_VERSION}`", self.origin)))
            }
        }
        let kind = match doc.get("scenario") {
            Some(Value::String(s)) => s
                .parse::<ScenarioKind>()
                .map_err(|e| CliError::Config(format!("{}: scenario: {e}", anchor("scenario"))))?,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "{}: scenario: expected one of \"a\", \"b\", \"c\", \"d\", got {other}",
                    anchor("scenario")
                )))
            }
            None => return Err(CliError::Config(format!("{}: missing `scenario`", self.origin))),
        };

        let geometry: Geometry = match doc.get("geometry") {
            Some(v) => deserialize_at(v.clone(), "geometry").map_err(|(p, m)| CliError::Config(format!("{}: {p}: {m}", anchor(&p))))?,
            None => Geometry::default(),
        };
        let overrides = ScenarioOverrides {
            approach_velocity: geometry.approach_velocity,
            initial_gap: geometry.initial_gap,
            obstacle_position: geometry.obstacle_position,
            path: geometry.path,
        };
        let defaults = build_scenario(kind, &overrides).map_err(|e| CliError::Config(format!("{}: {e}", anchor("geometry"))))?;

        let mut merged = match Value::try_from(&defaults) {
            Ok(Value::Table(t)) => t,
            _ => unreachable!("scenario configuration serialises to a table"),
        };
        for (key, value) in doc {
            if !META_KEYS.contains(&key.as_str()) {
                merge_into(&mut merged, &key, value);
            }
        }
        if let Some(seed) = seed {
            merged.insert("seed".into(), Value::Integer(seed as i64));
        }

        let cfg: ScenarioConfig =
            deserialize_at(Value::Table(merged), "").map_err(|(p, m)| CliError::Config(format!("{}: {p}: {m}", anchor(&p))))?;
        cfg.validate().map_err(|e| match &e {
            preimpact_core::Error::InvalidField { path, .. } => CliError::Config(format!("{}: {e}", anchor(path))),
            _ => CliError::Config(format!("{}: {e}", self.origin)),
        })?;
        Ok(cfg)
    }

    /// Checks that `key` names a configurable field, without validating a
    /// value for it.
    pub fn knows_key(&self, key: &str) -> Result<()> {
        let unknown = || CliError::Config(format!("unknown configuration field `{key}`"));
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["schema_version"] | ["scenario"] | ["seed"] => return Ok(()),
            ["geometry", "approach_velocity" | "initial_gap" | "obstacle_position"] => return Ok(()),
            ["geometry", "path", "x0" | "xf" | "duration" | "t0"] => return Ok(()),
            ["geometry", ..] => return Err(unknown()),
            _ => {}
        }
        let cfg = self.resolve(&[], None)?;
        let Ok(Value::Table(table)) = Value::try_from(&cfg) else { unreachable!() };
        let mut node = &table;
        for (i, part) in parts.iter().enumerate() {
            match node.get(*part) {
                Some(Value::Table(t)) if i + 1 < parts.len() => node = t,
                Some(v) if i + 1 == parts.len() && !v.is_table() => return Ok(()),
                None if i + 1 == parts.len() && is_second_order(node) && NATURAL.contains(part) => return Ok(()),
                _ => return Err(unknown()),
            }
        }
        Err(unknown())
    }

    fn anchor(&self, path: &str, from_cli: &BTreeSet<&str>) -> String {
        if from_cli.contains(path) {
            return format!("--set {path}");
        }
        let mut p = path;
        loop {
            if let Some(line) = self.lines.get(p) {
                return format!("{}:{line}", self.origin);
            }
            match p.rsplit_once('.') {
                Some((head, _)) => p = head,
                None => return self.origin.clone(),
            }
        }
    }
}

fn index_lines(text: &str, table: &toml::de::DeTable<'_>, prefix: &str, out: &mut BTreeMap<String, usize>) {
    for (key, value) in table.iter() {
        let path = if prefix.is_empty() { key.get_ref().to_string() } else { format!("{prefix}.{}", key.get_ref()) };
        let start = key.span().start;
        let line = text[..start.min(text.len())].matches('\n').count() + 1;
        out.entry(path.clone()).or_insert(line);
        if let toml::de::DeValue::Table(t) = value.get_ref() {
            index_lines(text, t, &path, out);
        }
    }
}

/// Deserialises `value`, reporting the dotted path of the first failure
/// relative to `root`.
fn deserialize_at<T: serde::de::DeserializeOwned>(value: Value, root: &str) -> std::result::Result<T, (String, String)> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.inner().to_string();
        let mut path = e.path().to_string();
        if path == "." {
            path.clear();
        }
        // Unknown keys are reported against their parent table.
        if let Some(name) = inner.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
            path = if path.is_empty() { name.to_string() } else { format!("{path}.{name}") };
        }
        let full = match (root.is_empty(), path.is_empty()) {
            (true, _) => path,
            (false, true) => root.to_string(),
            (false, false) => format!("{root}.{path}"),
        };
        (full, inner)
    })
}

fn set_path(doc: &mut Table, key: &str, value: Value) -> std::result::Result<(), String> {
    let mut parts = key.split('.').peekable();
    let mut node = doc;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            node.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = node.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        node = entry.as_table_mut().ok_or_else(|| format!("`{part}` is not a table"))?;
    }
    Ok(())
}

fn is_second_order(t: &Table) -> bool {
    t.len() == 3 && MDK.iter().all(|k| t.get(*k).is_some_and(Value::is_float))
}

/// Rewrites a `(mass, damping, stiffness)` table into `(mass, omega, zeta)`.
fn to_natural(t: &Table) -> Table {
    let f = |k: &str| t[k].as_float().unwrap_or(f64::NAN);
    let (m, d, k) = (f("mass"), f("damping"), f("stiffness"));
    let mut out = Table::new();
    out.insert("mass".into(), Value::Float(m));
    out.insert("omega".into(), Value::Float((k / m).sqrt()));
    out.insert("zeta".into(), Value::Float(d / (2.0 * (m * k).sqrt())));
    out
}

fn merge_into(base: &mut Table, key: &str, value: Value) {
    match (base.get_mut(key), value) {
        (Some(Value::Table(existing)), Value::Table(update)) => {
            let same_kind = match (existing.get("kind"), update.get("kind")) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            };
            if !same_kind {
                *existing = update;
                return;
            }
            if is_second_order(existing) && update.keys().any(|k| k == "omega" || k == "zeta") {
                *existing = to_natural(existing);
            }
            for (k, v) in update {
                merge_into(existing, &k, v);
            }
        }
        (_, value) => {
            base.insert(key.to_string(), value);
        }
    }
}

/// Parses the seed override from the environment, if set.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|e| CliError::Config(format!("{SEED_ENV}={raw}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{SEED_ENV}: {e}"))),
    }
}
