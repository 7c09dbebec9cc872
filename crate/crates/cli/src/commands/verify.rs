//! `verify`: integrity and soundness audit of an output tree. Checks the
//! file manifest (when present) against on-disk checksums, re-validates
//! every planted sidecar, and brute-forces instances small enough to
//! enumerate, requiring the exact planted energy as the true minimum.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use hobo_core::brute::exhaustive_minimum;

use crate::commands::{set_label, StoredInstance};
use crate::manifest::Manifest;

/// Distinguished failure carrying its own exit code (3): the tree is
/// readable but its contents do not check out.
#[derive(Debug)]
pub struct VerifyFailure {
    pub problems: Vec<String>,
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verification failed with {} problem(s):", self.problems.len())?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for VerifyFailure {}

fn has_instances(dir: &Path) -> bool {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries.flatten().any(|e| {
                e.path().extension().map(|x| x == "hobo").unwrap_or(false)
            })
        })
        .unwrap_or(false)
}

fn instance_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if has_instances(root) {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(root)
        .with_context(|| format!("reading {}", root.display()))?
    {
        let path = entry?.path();
        if path.is_dir() && has_instances(&path) {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

pub fn run(root: &Path, max_n: usize) -> Result<()> {
    let mut problems = Vec::new();

    let manifest_path = root.join("manifest.json");
    if manifest_path.exists() {
        match Manifest::load(root) {
            Ok(manifest) => match manifest.check(root) {
                Ok(count) => println!("manifest: {count} files match"),
                Err(err) => problems.push(format!("manifest: {err}")),
            },
            Err(err) => problems.push(format!("manifest: {err}")),
        }
    } else {
        println!("manifest: none at {}, skipping checksum audit", root.display());
    }

    let dirs = instance_dirs(root)?;
    if dirs.is_empty() {
        problems.push(format!("no instance files under {}", root.display()));
    }
    let mut audited = 0usize;
    let mut skipped = 0usize;
    for dir in &dirs {
        let label = set_label(dir);
        // load_set re-evaluates every sidecar energy; a corrupt pair
        // surfaces here rather than in the brute-force pass
        let set = match crate::commands::load_set(dir) {
            Ok(set) => set,
            Err(err) => {
                problems.push(format!("{label}: {err}"));
                continue;
            }
        };
        for stored in &set {
            let StoredInstance { instance, .. } = stored;
            let n = instance.poly.num_vars();
            if n > max_n {
                skipped += 1;
                continue;
            }
            audited += 1;
            match exhaustive_minimum(&instance.poly, max_n) {
                Ok((min, _)) => {
                    // planted energies are dyadic, so exact comparison holds
                    if min != instance.planted_energy {
                        problems.push(format!(
                            "{}: true minimum {min} != planted {}",
                            stored.id(&label),
                            instance.planted_energy
                        ));
                    }
                }
                Err(err) => problems.push(format!("{}: {err}", stored.id(&label))),
            }
        }
    }
    println!("brute-force audit: {audited} instances checked, {skipped} above n={max_n}");

    if problems.is_empty() {
        println!("verify: OK");
        Ok(())
    } else {
        Err(VerifyFailure { problems }.into())
    }
}
