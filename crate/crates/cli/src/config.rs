//! Experiment configuration: defaults, key=value file parsing, and
//! validation. Command-line flags override file values, which override
//! defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hobo_core::quadratize::PenaltyStrategy;

pub const ALLOWED_SIZES: [usize; 5] = [16, 64, 144, 256, 400];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub localities: Vec<usize>,
    pub sizes: Vec<usize>,
    pub instances_per_size: usize,
    pub runs_per_instance: usize,
    pub timeout_s: f64,
    pub timeout_escalation_s: f64,
    pub penalty: PenaltyStrategy,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            localities: vec![3, 4],
            sizes: ALLOWED_SIZES.to_vec(),
            instances_per_size: 30,
            runs_per_instance: 30,
            timeout_s: 100.0,
            timeout_escalation_s: 500.0,
            penalty: PenaltyStrategy::PerTermTight,
            seed: 1,
            out: PathBuf::from("bench-out"),
        }
    }
}

impl ExperimentConfig {
    /// Parse a plain key=value file. Lines starting with '#' and blank
    /// lines are skipped; list values are comma-separated.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {} is not key=value: {raw:?}", lineno + 1);
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "localities" => cfg.localities = parse_list(value)?,
                "sizes" => cfg.sizes = parse_list(value)?,
                "instances_per_size" => cfg.instances_per_size = value.parse()?,
                "runs_per_instance" => cfg.runs_per_instance = value.parse()?,
                "timeout_s" => cfg.timeout_s = value.parse()?,
                "timeout_escalation_s" => cfg.timeout_escalation_s = value.parse()?,
                "penalty" => cfg.penalty = parse_penalty(value)?,
                "seed" => cfg.seed = value.parse()?,
                "out" => cfg.out = PathBuf::from(value),
                other => bail!("unknown config key {other:?} on line {}", lineno + 1),
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.localities.is_empty() || self.localities.iter().any(|k| !(*k == 3 || *k == 4)) {
            bail!("localities must be a nonempty subset of {{3, 4}}, got {:?}", self.localities);
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|n| !ALLOWED_SIZES.contains(n)) {
            bail!("sizes must be a nonempty subset of {ALLOWED_SIZES:?}, got {:?}", self.sizes);
        }
        if self.instances_per_size == 0 || self.runs_per_instance == 0 {
            bail!("instance and run counts must be >= 1");
        }
        if !(self.timeout_s > 0.0) {
            bail!("timeout_s must be positive");
        }
        if self.timeout_escalation_s < self.timeout_s {
            bail!(
                "timeout_escalation_s {} below timeout_s {}",
                self.timeout_escalation_s,
                self.timeout_s
            );
        }
        Ok(())
    }
}

/// Accept the short names used on the command line alongside the canonical
/// strategy identifiers stored in reduction manifests.
pub fn parse_penalty(value: &str) -> Result<PenaltyStrategy> {
    match value {
        "tight" => Ok(PenaltyStrategy::PerTermTight),
        "global" => Ok(PenaltyStrategy::Global),
        other => Ok(PenaltyStrategy::parse(other)?),
    }
}

fn parse_list(value: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(part.parse().with_context(|| format!("bad list entry {part:?}"))?);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_unknown_size() {
        let mut cfg = ExperimentConfig::default();
        cfg.sizes = vec![32];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_escalation_below_base() {
        let mut cfg = ExperimentConfig::default();
        cfg.timeout_escalation_s = 50.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parses_key_value_file() {
        let dir = std::env::temp_dir().join("hobo-cfg-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.txt");
        std::fs::write(
            &path,
            "# comment\nlocalities = 3\nsizes = 16, 64\npenalty = global\nseed = 7\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg.localities, vec![3]);
        assert_eq!(cfg.sizes, vec![16, 64]);
        assert_eq!(cfg.penalty, PenaltyStrategy::Global);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.runs_per_instance, 30);
    }
}
