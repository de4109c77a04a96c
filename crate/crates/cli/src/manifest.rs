use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

/// Record written after every run, successful or not.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub spec_hash: Option<String>,
    pub parameters: Value,
    pub version: &'static str,
    pub threads: usize,
    /// Seconds; the only field that differs between identical reruns.
    pub wall_clock_s: f64,
    pub status: &'static str,
    pub exit_code: u8,
    pub error: Option<String>,
    pub residuals: Map<String, Value>,
    pub outputs: Vec<PathBuf>,
}

/// What a command reports back while it runs.
#[derive(Debug, Default)]
pub struct Run {
    pub spec_hash: Option<String>,
    pub residuals: Map<String, Value>,
    pub outputs: Vec<PathBuf>,
}

impl Run {
    pub fn residual(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.residuals.insert(key.to_string(), v);
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}

/// `out.json` gets `out.json.manifest.json`, a directory gets `dir/manifest.json`.
pub fn beside(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn inside(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}
