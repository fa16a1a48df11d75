//! Command implementations behind the `appraise` binary.
//!
//! Every command resolves its configuration in three layers: built-in
//! defaults, then an optional JSON file (`--config`), then command-line flags.
//! The resolved configuration is written to `run_config.json` next to the
//! command's outputs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub mod args;
mod commands;
mod experiment;

pub use commands::{
    cmd_aggregate, cmd_agreement, cmd_simulate, cmd_stats, cmd_validate, AgreementConfig, IoConfig, SimulateConfig,
    ValidationSummary,
};
pub use experiment::{cmd_experiment, ExperimentConfig, ExperimentSummary, FeatureSource};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Recursively overlays `top` onto `base`. Objects merge key by key; any other
/// value replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults, then the JSON file at `path`, then `flags` (an object holding only
/// the flags actually given).
pub(crate) fn resolve<T: Serialize + DeserializeOwned>(
    defaults: &T,
    path: Option<&Path>,
    flags: Map<String, Value>,
) -> CliResult<T> {
    let mut value = serde_json::to_value(defaults).map_err(anyhow::Error::from)?;
    if let Some(path) = path {
        let file =
            File::open(path).map_err(|e| CliError::Usage(format!("cannot open config {}: {e}", path.display())))?;
        let from_file: Value = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if !from_file.is_object() {
            return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
        }
        merge(&mut value, from_file);
    }
    merge(&mut value, Value::Object(flags));
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

/// Collects `Some` flags into a JSON object, nesting on dotted keys.
pub(crate) struct Flags(Map<String, Value>);

impl Flags {
    pub(crate) fn new() -> Self {
        Flags(Map::new())
    }

    pub(crate) fn set<V: Serialize>(mut self, key: &str, value: Option<V>) -> Self {
        let Some(value) = value else { return self };
        let value = serde_json::to_value(value).expect("flag values serialize");
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().expect("non-empty key");
        let mut slot = &mut self.0;
        for p in parts {
            slot =
                slot.entry(p).or_insert_with(|| Value::Object(Map::new())).as_object_mut().expect("nested flag keys");
        }
        slot.insert(last.to_string(), value);
        self
    }

    pub(crate) fn into_map(self) -> Map<String, Value> {
        self.0
    }
}

pub(crate) fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

pub(crate) fn open_input(path: &Path) -> CliResult<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

/// Writes a set of named files under `dir`, creating it if needed.
pub(crate) struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub(crate) fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(OutputDir { dir: dir.to_path_buf() })
    }

    pub(crate) fn write(
        &self,
        name: &str,
        fill: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
    ) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(file);
        fill(&mut out).with_context(|| format!("writing {}", path.display()))?;
        out.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub(crate) fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        self.write(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            out.write_all(b"\n")?;
            Ok(())
        })
    }
}

#[derive(Serialize)]
pub(crate) struct RunRecord<'a, C> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
}

pub(crate) fn write_run_config<C: Serialize>(out: &OutputDir, command: &str, config: &C) -> CliResult<()> {
    out.write_json("run_config.json", &RunRecord { command, version: env!("CARGO_PKG_VERSION"), config })?;
    Ok(())
}
