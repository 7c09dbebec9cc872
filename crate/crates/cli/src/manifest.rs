//! Output manifest: every generated file with its SHA-256, so a run can be
//! audited and regeneration can be byte-compared.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading {} for checksum", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

impl Manifest {
    pub fn new(seed: u64) -> Self {
        Manifest { seed, files: Vec::new() }
    }

    /// Record a file that lives under `root`.
    pub fn push(&mut self, root: &Path, path: &Path) -> Result<()> {
        let rel = path
            .strip_prefix(root)
            .with_context(|| format!("{} outside output root", path.display()))?;
        self.files.push(ManifestEntry {
            path: rel.to_string_lossy().into_owned(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn save(&self, root: &Path) -> Result<PathBuf> {
        let path = root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join("manifest.json");
        let text =
            std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Verify that every listed file exists with a matching checksum.
    /// Returns the number of files checked.
    pub fn check(&self, root: &Path) -> Result<usize> {
        for entry in &self.files {
            let path = root.join(&entry.path);
            let actual = sha256_file(&path)?;
            if actual != entry.sha256 {
                bail!("checksum mismatch for {}: manifest {} actual {actual}", entry.path, entry.sha256);
            }
        }
        Ok(self.files.len())
    }
}
