//! Config file schema, parsing with located diagnostics, and the default echo.
//!
//! The file is TOML. Top-level keys mirror [`SimConfig`] (`seed`,
//! `[simulation]`, `[workload]`, `[priority]`, `[[catalog]]`,
//! `[[allocation_bands]]`) plus the CLI-only `[analysis]` and
//! `[replication]` sections. Every key is optional.

use std::fmt;

use bizsched_core::domain::EngineSettings;
use bizsched_core::simulator::ReplicationSettings;
use bizsched_core::{AllocationTable, Mg1Class, PriorityEngineConfig, ResourceCatalogEntry, SimConfig, WorkloadSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Per-class inputs to the M/G/1 model, highest priority first.
    pub classes: Vec<Mg1Class>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self { classes: vec![Mg1Class { arrival_rate: 0.5, mean_service: 1.0, second_moment: 2.0 }] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub simulation: EngineSettings,
    pub workload: WorkloadSpec,
    pub priority: PriorityEngineConfig,
    pub catalog: Vec<ResourceCatalogEntry>,
    pub allocation_bands: AllocationTable,
    pub analysis: AnalysisSettings,
    pub replication: ReplicationSettings,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            seed: sim.seed,
            simulation: sim.simulation,
            workload: sim.workload,
            priority: sim.priority,
            catalog: sim.catalog,
            allocation_bands: sim.allocation_bands,
            analysis: AnalysisSettings::default(),
            replication: ReplicationSettings::default(),
        }
    }
}

impl ConfigFile {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            seed: self.seed,
            simulation: self.simulation.clone(),
            workload: self.workload.clone(),
            priority: self.priority.clone(),
            catalog: self.catalog.clone(),
            allocation_bands: self.allocation_bands.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    fn validate(&self) -> Result<(), (String, String)> {
        self.sim_config().validate().map_err(|v| (v.path, v.message))?;
        if self.analysis.classes.is_empty() {
            return Err(("analysis.classes".into(), "at least one class is required".into()));
        }
        for (i, c) in self.analysis.classes.iter().enumerate() {
            let ok = [c.arrival_rate, c.mean_service, c.second_moment].iter().all(|v| *v >= 0.0 && v.is_finite());
            if !ok {
                return Err((format!("analysis.classes[{i}]"), "rates and moments must be finite and >= 0".into()));
            }
        }
        if self.replication.contended_vms == 0 {
            return Err(("replication.contended_vms".into(), "contended_vms must be >= 1".into()));
        }
        Ok(())
    }
}

/// A config problem located by key path and, when known, 1-based line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "<document>" } else { &self.path };
        match self.line {
            Some(line) => write!(f, "{path} (line {line}): {}", self.message),
            None => write!(f, "{path}: {}", self.message),
        }
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    /// `key = value` for every default the file did not override.
    pub defaults: Vec<String>,
}

/// Parses config text. `seed` overrides the file's seed before validation.
pub fn parse_config(text: &str, seed: Option<u64>) -> Result<LoadedConfig, Diagnostic> {
    let keys = KeyLines::scan(text);
    let user: toml::Table = text.parse().map_err(|e: toml::de::Error| keys.diagnostic(text, &e))?;
    let mut file: ConfigFile = toml::from_str(text).map_err(|e| keys.diagnostic(text, &e))?;
    if let Some(seed) = seed {
        file.seed = seed;
    }
    if let Err((path, message)) = file.validate() {
        let line = keys.locate(&path);
        return Err(Diagnostic { path, line, message });
    }

    let defaults_table = toml::Table::try_from(ConfigFile::default()).expect("defaults serialize");
    let mut defaults = Vec::new();
    collect_defaults(&defaults_table, &user, "", &mut defaults);
    if seed.is_some() {
        defaults.retain(|d| !d.starts_with("seed ="));
    }
    Ok(LoadedConfig { file, defaults })
}

fn collect_defaults(defaults: &toml::Table, user: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in defaults {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match (value, user.get(key)) {
            // Tagged tables such as time distributions are single values.
            (toml::Value::Table(d), Some(toml::Value::Table(u))) if !d.contains_key("kind") => {
                collect_defaults(d, u, &path, out)
            }
            (toml::Value::Table(d), None) if !d.contains_key("kind") => {
                collect_defaults(d, &toml::Table::new(), &path, out)
            }
            (_, Some(_)) => {}
            (toml::Value::Array(items), None) if items.iter().all(toml::Value::is_table) && !items.is_empty() => {
                out.push(format!("{path} = <{} default entries>", items.len()))
            }
            (v, None) => out.push(format!("{path} = {v}")),
        }
    }
}

/// Key path of every `key = value` and section header line.
struct KeyLines {
    entries: Vec<(usize, String)>,
}

impl KeyLines {
    fn scan(text: &str) -> Self {
        let mut entries = Vec::new();
        let mut section = String::new();
        let mut array_counts: std::collections::HashMap<String, usize> = Default::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
                let name = clean_key(name);
                let n = array_counts.entry(name.clone()).or_insert(0);
                section = format!("{name}[{n}]");
                *n += 1;
                entries.push((i + 1, section.clone()));
            } else if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                section = clean_key(name);
                entries.push((i + 1, section.clone()));
            } else if let Some((key, _)) = line.split_once('=') {
                let key = clean_key(key);
                let path = if section.is_empty() { key } else { format!("{section}.{key}") };
                entries.push((i + 1, path));
            }
        }
        Self { entries }
    }

    /// First line that sets `path` or opens it as a section.
    fn locate(&self, path: &str) -> Option<usize> {
        self.entries.iter().find(|(_, p)| p == path).map(|(line, _)| *line)
    }

    /// Path set on `line`, or the section enclosing it.
    fn path_at(&self, line: usize) -> String {
        self.entries.iter().take_while(|(l, _)| *l <= line).last().map(|(_, p)| p.clone()).unwrap_or_default()
    }

    fn diagnostic(&self, text: &str, err: &toml::de::Error) -> Diagnostic {
        let line = err.span().map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1);
        Diagnostic {
            path: line.map(|l| self.path_at(l)).unwrap_or_default(),
            line,
            message: err.message().trim().to_string(),
        }
    }
}

fn clean_key(raw: &str) -> String {
    raw.split('.').map(|part| part.trim().trim_matches('"').trim_matches('\'')).collect::<Vec<_>>().join(".")
}
