use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything that affects the numbers in an output file.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub tolerances: Vec<(String, f64)>,
    pub grid: Option<(f64, f64)>,
    pub tau: Option<String>,
    pub t: Vec<String>,
    pub wall_perturbations: Vec<String>,
    pub outputs: Vec<OutputDigest>,
    pub wall_clock_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> std::io::Result<InputDigest> {
    let bytes = std::fs::read(path)?;
    Ok(InputDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

/// `out.csv` → `out.csv.manifest.toml`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).map_err(|e| std::io::Error::other(e.to_string()))?;
        std::fs::write(path, text)
    }
}
