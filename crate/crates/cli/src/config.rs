//! Flat TOML configuration with flag overrides, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

/// Reads `path` (if any) as a flat TOML table, lays the serialised `flags`
/// over it and deserialises the result. Unknown keys are rejected by the
/// target type.
pub fn resolve<T, F>(path: Option<&Path>, flags: &F, seed: Option<(&str, u64)>) -> Result<T, CliError>
where
    T: DeserializeOwned,
    F: Serialize,
{
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("cannot read config file {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Validation(format!("invalid config file {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    let overrides = toml::Table::try_from(flags).map_err(|e| CliError::Validation(format!("bad flag value: {e}")))?;
    table.extend(overrides);
    if let Some((key, value)) = seed {
        let v = i64::try_from(value).map_err(|_| CliError::Validation(format!("seed {value} exceeds {}", i64::MAX)))?;
        table.insert(key.to_string(), toml::Value::Integer(v));
    }
    let origin = path.map_or_else(|| "flags".to_string(), |p| p.display().to_string());
    table.try_into().map_err(|e: toml::de::Error| {
        CliError::Validation(format!("invalid configuration ({origin}): {}", e.message()))
    })
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: Option<u64>,
    config: &'a C,
    outputs: &'a [String],
}

/// Output directory of one run.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Path of a new artifact, recorded for the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.file(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))
    }

    /// Writes `config.toml` (loadable with `--config`) and `manifest.json`.
    pub fn finish<C: Serialize>(mut self, subcommand: &str, seed: Option<u64>, config: &C) -> Result<(), CliError> {
        let snapshot =
            toml::to_string(config).map_err(|e| CliError::Validation(format!("cannot serialise config: {e}")))?;
        self.write("config.toml", snapshot.as_bytes())?;
        let manifest = Manifest {
            tool: "levystab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            config,
            outputs: &self.files,
        };
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serialises");
        let path = self.root.join("manifest.json");
        fs::write(&path, json).map_err(|e| io_error(&path, e))
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

/// Rows of a numeric CSV file.
pub fn read_rows(path: &Path, header: bool) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Validation(format!("{} row {}: {e}", path.display(), i + 1)))?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(CliError::Validation(format!(
                    "{} row {} has {} columns, expected {first}",
                    path.display(),
                    i + 1,
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::Validation(format!("{} contains no data", path.display())));
    }
    Ok(rows)
}
