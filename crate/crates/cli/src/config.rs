use std::fs;
use std::path::Path;

use nehari_core::{GridSpec, Params, Regime, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One JSON document describing a run. Missing blocks and fields take their defaults,
/// and the resolved document is echoed into every JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Params,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    /// Number of random Gaussians checked against the certificate.
    pub samples: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { samples: 100 }
    }
}

/// Inclusive, evenly spaced ranges for `p` and `q`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub p_min: f64,
    pub p_max: f64,
    pub p_steps: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub q_steps: usize,
}

fn axis(name: &str, lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || steps == 0 {
        return Err(CliError::Config(format!(
            "scan range for {name} must satisfy min <= max with steps >= 1 (got {lo}..{hi}, {steps} steps)"
        )));
    }
    if steps == 1 {
        if lo != hi {
            return Err(CliError::Config(format!(
                "a single-step scan over {name} needs min = max (got {lo}..{hi})"
            )));
        }
        return Ok(vec![lo]);
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + i as f64 * h
            }
        })
        .collect())
}

impl ScanConfig {
    pub fn p_values(&self) -> Result<Vec<f64>, CliError> {
        axis("p", self.p_min, self.p_max, self.p_steps)
    }

    pub fn q_values(&self) -> Result<Vec<f64>, CliError> {
        axis("q", self.q_min, self.q_max, self.q_steps)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("malformed config {}: {e}", path.display())))?;
        cfg.solver.validate()?;
        if let Some(scan) = &cfg.scan {
            scan.p_values()?;
            scan.q_values()?;
        }
        Ok(cfg)
    }

    /// Classification of the configured parameters; every command starts here.
    pub fn regime(&self) -> Result<Regime, CliError> {
        Ok(self.params.classify()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_blocks() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"params": {"N": 3, "lambda": 1, "s1": 0, "s2": 1, "p": 5, "q": 3.8}}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.certify.samples, 100);
        assert!(cfg.scan.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"params": {"N": 3, "lambda": 1, "s1": 0, "s2": 1, "p": 5, "q": 3.8},
                       "grid": {"n": 64, "radius": 20, "gama": 2}}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn axis_endpoints_are_exact() {
        let scan = ScanConfig {
            p_min: 3.0,
            p_max: 5.5,
            p_steps: 6,
            q_min: 2.5,
            q_max: 2.5,
            q_steps: 1,
        };
        assert_eq!(scan.p_values().unwrap(), vec![3.0, 3.5, 4.0, 4.5, 5.0, 5.5]);
        assert_eq!(scan.q_values().unwrap(), vec![2.5]);
        let bad = ScanConfig { p_steps: 0, ..scan };
        assert!(bad.p_values().is_err());
        let reversed = ScanConfig {
            p_min: 5.0,
            p_max: 3.0,
            ..scan
        };
        assert!(reversed.p_values().is_err());
    }
}
