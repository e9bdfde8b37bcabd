//! Output files. Each one carries the config hash and crate versions; no
//! timestamps, so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub command: String,
    pub config_sha256: String,
    pub mosaic_core: String,
    pub mosaic_cli: String,
}

impl Meta {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let canonical = serde_json::to_string(config).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        Meta {
            command: command.to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            mosaic_core: mosaic_core::VERSION.to_string(),
            mosaic_cli: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn header(&self) -> String {
        format!(
            "mosaic {} config-sha256 {} mosaic-core {} mosaic-cli {}",
            self.command, self.config_sha256, self.mosaic_core, self.mosaic_cli
        )
    }
}

pub struct Output {
    dir: PathBuf,
    pub meta: Meta,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, meta: Meta) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    fn write(&mut self, path: PathBuf, body: String) -> Result<(), CliError> {
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# {}\n{body}", self.meta.header());
        self.write(self.dir.join(name), text)
    }

    /// JSON documents are `{"meta": ..., "data": ...}`.
    pub fn json<T: Serialize>(&mut self, path: Option<&Path>, name: &str, data: &T) -> Result<(), CliError> {
        let doc = serde_json::json!({ "meta": self.meta, "data": data });
        let mut text = serde_json::to_string_pretty(&doc).map_err(CliError::numeric)?;
        text.push('\n');
        let target = path.map(Path::to_path_buf).unwrap_or_else(|| self.dir.join(name));
        if let Some(parent) = target.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        self.write(target, text)
    }

    pub fn svg(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("<!-- {} -->\n{body}", self.meta.header());
        self.write(self.dir.join(name), text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Writes rows through the `csv` crate into a string.
pub fn csv_string<I, R>(header: &[&str], rows: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::numeric(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
