//! Verb implementations plus the instance-set I/O they share.

pub mod generate;
pub mod pamc;
pub mod reduce;
pub mod report;
pub mod solve;
pub mod verify;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hobo_core::format::{PartMeta, PlantedSidecar};
use hobo_core::planting::PlantedInstance;
use hobo_core::poly::{Configuration, Domain};

/// One on-disk instance: `<stem>.hobo` plus `<stem>.planted.json`.
pub struct StoredInstance {
    pub stem: String,
    pub instance: PlantedInstance,
}

impl StoredInstance {
    /// Identifier used in result rows and resume keys: set directory name
    /// plus file stem.
    pub fn id(&self, set: &str) -> String {
        format!("{set}/{}", self.stem)
    }

    /// Problem size as benchmarked: the generating parts' total spin count,
    /// which for reduced instances is the pre-reduction size.
    pub fn original_n(&self) -> usize {
        let from_parts: usize = self
            .instance
            .meta
            .parts
            .iter()
            .map(|p| match p {
                PartMeta::Tile { rows, cols } => rows * cols,
                PartMeta::Field { size } => *size,
            })
            .sum();
        if from_parts > 0 {
            from_parts
        } else {
            self.instance.poly.num_vars()
        }
    }
}

/// Load every `<stem>.hobo` + sidecar pair in `dir`, sorted by stem.
pub fn load_set(dir: &Path) -> Result<Vec<StoredInstance>> {
    let mut stems = Vec::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading instance directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("hobo") {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .map(str::to_owned)
                .with_context(|| format!("bad file name {}", path.display()))?;
            stems.push(stem);
        }
    }
    stems.sort();
    if stems.is_empty() {
        bail!("no .hobo instances in {}", dir.display());
    }
    let mut out = Vec::with_capacity(stems.len());
    for stem in stems {
        out.push(load_instance(dir, &stem)?);
    }
    Ok(out)
}

pub fn load_instance(dir: &Path, stem: &str) -> Result<StoredInstance> {
    let poly_path = dir.join(format!("{stem}.hobo"));
    let sidecar_path = dir.join(format!("{stem}.planted.json"));
    let poly = hobo_core::format::load_poly(&poly_path)
        .with_context(|| format!("loading {}", poly_path.display()))?;
    let sidecar: PlantedSidecar = hobo_core::format::load_json(&sidecar_path)
        .with_context(|| format!("missing or malformed sidecar {}", sidecar_path.display()))?;
    let planted = Configuration::new(Domain::Spin, sidecar.planted_config)?;
    let energy = poly.evaluate(&planted)?;
    if (energy - sidecar.planted_energy).abs() > 1e-9 * sidecar.planted_energy.abs().max(1.0) {
        bail!(
            "sidecar energy {} does not match polynomial ({energy}) for {stem}",
            sidecar.planted_energy
        );
    }
    Ok(StoredInstance {
        stem: stem.to_string(),
        instance: PlantedInstance {
            poly,
            planted,
            planted_energy: sidecar.planted_energy,
            meta: sidecar.meta,
        },
    })
}

pub fn save_instance(dir: &Path, stem: &str, inst: &PlantedInstance) -> Result<Vec<PathBuf>> {
    let poly_path = dir.join(format!("{stem}.hobo"));
    let sidecar_path = dir.join(format!("{stem}.planted.json"));
    hobo_core::format::save_poly(&poly_path, &inst.poly)?;
    let sidecar = PlantedSidecar {
        planted_config: inst.planted.values().to_vec(),
        planted_energy: inst.planted_energy,
        meta: inst.meta.clone(),
    };
    hobo_core::format::save_json(&sidecar_path, &sidecar)?;
    Ok(vec![poly_path, sidecar_path])
}

/// Directory name of the benchmark cell for locality `k` and size `n`.
pub fn set_dir_name(k: usize, n: usize) -> String {
    format!("k{k}_n{n}")
}

/// The set label a results row refers to: final path component.
pub fn set_label(dir: &Path) -> String {
    dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| ".".into())
}

/// Population mean and standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
