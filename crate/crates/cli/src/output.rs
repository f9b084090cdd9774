//! Run directories, manifests and CSV writing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub verb: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub derived_seeds: Vec<u64>,
    pub threads: usize,
    pub start_unix: u64,
    pub end_unix: Option<u64>,
    pub host: String,
}

impl RunManifest {
    pub fn new(verb: &str, config: serde_json::Value, seed: u64, derived_seeds: Vec<u64>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            verb: verb.to_string(),
            argv: std::env::args().collect(),
            config,
            seed,
            derived_seeds,
            threads: rayon::current_num_threads(),
            start_unix: unix_now(),
            end_unix: None,
            host: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
        }
    }
}

/// `out/<verb>/<tag>/` with the manifest written before any result.
pub struct RunDir {
    pub path: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    pub fn create(root: &Path, tag: &str, manifest: RunManifest) -> std::io::Result<Self> {
        let path = root.join(&manifest.verb).join(tag);
        fs::create_dir_all(&path)?;
        let dir = RunDir { path, manifest };
        dir.write_json("manifest.json", &dir.manifest)?;
        Ok(dir)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        fs::write(self.path.join(name), text + "\n")
    }

    pub fn write_csv(&self, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(self.path.join("report.csv"))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()
    }

    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.manifest.end_unix = Some(unix_now());
        self.write_json("manifest.json", &self.manifest)?;
        Ok(self.path)
    }
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
