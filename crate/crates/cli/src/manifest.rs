//! Input/output bookkeeping and the per-run manifest.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    /// Relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One command invocation: records every file read and written.
pub struct Run {
    command: String,
    out: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    pub fn new(command: &str, out: &Path) -> Result<Run, Failure> {
        std::fs::create_dir_all(out)
            .map_err(|e| Failure::io(anyhow::anyhow!("cannot create {}: {e}", out.display())))?;
        Ok(Run { command: command.to_string(), out: out.to_path_buf(), inputs: Vec::new(), outputs: Vec::new() })
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes =
            std::fs::read(path).map_err(|e| Failure::io(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
        log::info!("read {} ({} bytes)", path.display(), bytes.len());
        let path = path.display().to_string();
        if !self.inputs.iter().any(|d| d.path == path) {
            self.inputs.push(FileDigest { path, sha256: sha256_hex(&bytes), bytes: bytes.len() });
        }
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> Result<String, Failure> {
        String::from_utf8(self.read(path)?)
            .map_err(|_| Failure::input(anyhow::anyhow!("{} is not UTF-8", path.display())))
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        let bytes = bytes.as_ref();
        let path = self.out.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| Failure::io(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
        self.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn finish(mut self, seed: Option<u64>, config: &impl Serialize) -> Result<(), Failure> {
        let manifest = RunManifest {
            command: std::mem::take(&mut self.command),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config: serde_json::to_value(config)?,
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| Failure::io(anyhow::anyhow!("cannot write {}: {e}", path.display())))
    }
}

/// Overlays the non-null fields of `flags` on the JSON object in `config`
/// and deserializes the result. Flags win on conflict.
pub fn resolve<T: DeserializeOwned>(
    run: &mut Run,
    config: Option<&Path>,
    flags: &impl Serialize,
) -> Result<T, Failure> {
    let mut merged = match config {
        Some(path) => match serde_json::from_str(&run.read_text(path)?)
            .map_err(|e| Failure::input(e).context(format!("config {}", path.display())))?
        {
            Value::Object(m) => m,
            _ => return Err(Failure::input(anyhow::anyhow!("config {} is not a JSON object", path.display()))),
        },
        None => Map::new(),
    };
    if let Value::Object(f) = serde_json::to_value(flags)? {
        for (k, v) in f {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::input(e).context("invalid options"))
}
