use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one run: what was asked, when, and the files it wrote.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub params: serde_json::Value,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Manifest {
    pub fn new(command: &str, params: serde_json::Value, started: String) -> Self {
        Self {
            command: command.into(),
            params,
            version: env!("CARGO_PKG_VERSION").into(),
            started,
            finished: String::new(),
            outputs: Vec::new(),
            error: None,
        }
    }

    /// Write `dir/name` and record its hash.
    pub fn write(&mut self, dir: &Path, name: &str, data: &[u8]) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), data)?;
        self.outputs.push(OutputFile {
            file: name.into(),
            bytes: data.len(),
            sha256: hex::encode(Sha256::digest(data)),
        });
        Ok(())
    }

    /// Write `dir/<stem>_manifest.json`.
    pub fn finish(mut self, dir: &Path, stem: &str, error: Option<&str>) -> io::Result<()> {
        self.finished = now();
        self.error = error.map(String::from);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(dir.join(format!("{stem}_manifest.json")), text + "\n")
    }
}
