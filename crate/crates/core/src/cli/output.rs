//! Artifact directory and run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::linalg::C64;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub outputs: Vec<String>,
    pub version: String,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Writes artifacts into one directory and records them in the manifest.
pub struct Outputs {
    dir: PathBuf,
    pub manifest: RunManifest,
    started: Instant,
}

impl Outputs {
    pub fn new(dir: &Path, command: &str) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                inputs: Vec::new(),
                parameters: BTreeMap::new(),
                outputs: Vec::new(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                timings_ms: BTreeMap::new(),
            },
            started: Instant::now(),
        })
    }

    pub fn input(&mut self, path: &str) {
        self.manifest.inputs.push(path.to_string());
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) {
        self.manifest.parameters.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn lap(&mut self, label: &str) {
        self.manifest.timings_ms.insert(label.to_string(), self.started.elapsed().as_secs_f64() * 1e3);
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), body)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| crate::Error::Io(e.to_string()))?;
        s.push('\n');
        self.text(name, &s)
    }

    /// Writes `manifest.json` (listed in itself).
    pub fn finish(mut self) -> Result<PathBuf> {
        self.lap("total");
        self.manifest.outputs.push("manifest.json".into());
        let mut s = serde_json::to_string_pretty(&self.manifest).map_err(|e| crate::Error::Io(e.to_string()))?;
        s.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, s)?;
        Ok(path)
    }
}

pub fn cjson(z: C64) -> Value {
    serde_json::json!([z.re, z.im])
}

pub fn points_json(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|&z| cjson(z)).collect())
}
