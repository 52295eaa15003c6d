use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use cloak_core::field::EPSILON_ORIGIN;
use cloak_core::geometry::{PolarGrid, DOMAIN_RADIUS};
use cloak_core::mode_solver::CloakParams;
use cloak_core::ode_oracle::OracleConfig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { r_min: 0.05, r_max: DOMAIN_RADIUS, n_r: 60, n_theta: 64 }
    }
}

impl GridConfig {
    pub fn polar(&self) -> PolarGrid {
        PolarGrid { r_min: self.r_min, r_max: self.r_max, n_r: self.n_r, n_theta: self.n_theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k_min: u32,
    pub k_max: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { k_min: 4, k_max: 14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub scan_step: f64,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        ResonanceConfig { omega_min: 0.5, omega_max: 20.0, scan_step: 0.01 }
    }
}

/// One run, read from a single JSON file. Everything except κ, ω and N has a
/// default, and the resolved value of every field is echoed into the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kappa: f64,
    pub omega: f64,
    /// Truncation radius; absent selects the ideal limit.
    #[serde(rename = "R", default)]
    pub truncation: Option<f64>,
    #[serde(rename = "N")]
    pub max_mode: u32,
    /// (n, re, im) of pₙ.
    #[serde(default)]
    pub source: Vec<(i32, f64, f64)>,
    /// (n, re, im) of fₙ.
    #[serde(default)]
    pub boundary: Vec<(i32, f64, f64)>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Interior σ_a; λ_a follows from κ² = 1/(σ_a λ_a).
    #[serde(default = "unit")]
    pub sigma_a: f64,
    #[serde(default)]
    pub resonances: ResonanceConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

fn unit() -> f64 {
    1.0
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::config(format!("field `{field}`: {why}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))
    }

    /// serde_json reports the line and column of a schema violation.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("kappa", self.kappa), ("omega", self.omega), ("sigma_a", self.sigma_a)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("{v} must be positive")));
            }
        }
        if self.truncation.is_some() {
            self.params()?;
        }
        for (name, list) in [("source", &self.source), ("boundary", &self.boundary)] {
            let mut seen = BTreeSet::new();
            for &(n, re, im) in list {
                if n.unsigned_abs() > self.max_mode {
                    return Err(invalid(name, format!("mode {n} exceeds N = {}", self.max_mode)));
                }
                if !seen.insert(n) {
                    return Err(invalid(name, format!("mode {n} listed twice")));
                }
                if !(re.is_finite() && im.is_finite()) {
                    return Err(invalid(name, format!("mode {n} has a non-finite coefficient")));
                }
            }
        }
        if self.truncation.is_none() && self.boundary.iter().any(|&(_, re, im)| re != 0.0 || im != 0.0) {
            return Err(invalid("boundary", "the ideal limit (no `R`) is defined for f = 0 only"));
        }
        let g = &self.grid;
        if !(g.r_min >= EPSILON_ORIGIN && g.r_min <= g.r_max && g.r_max <= DOMAIN_RADIUS) {
            return Err(invalid(
                "grid",
                format!("need {EPSILON_ORIGIN} <= r_min <= r_max <= {DOMAIN_RADIUS}, got [{}, {}]", g.r_min, g.r_max),
            ));
        }
        if g.n_r == 0 || g.n_theta == 0 {
            return Err(invalid("grid", "n_r and n_theta must be positive"));
        }
        if self.sweep.k_min == 0 || self.sweep.k_min > self.sweep.k_max {
            return Err(invalid("sweep", format!("need 1 <= k_min <= k_max, got {:?}", self.sweep)));
        }
        let res = &self.resonances;
        if !(res.omega_min > 0.0 && res.omega_min < res.omega_max && res.scan_step > 0.0) {
            return Err(invalid("resonances", format!("need 0 < omega_min < omega_max and scan_step > 0, got {res:?}")));
        }
        self.oracle.validate().map_err(|e| invalid("oracle", e))?;
        Ok(())
    }

    /// Solver parameters; only meaningful when `R` is given.
    pub fn params(&self) -> Result<CloakParams, CliError> {
        let r = self.truncation.ok_or_else(|| invalid("R", "required by this command"))?;
        CloakParams::new(self.kappa, self.omega, r, self.max_mode).map_err(|e| invalid("R", e))
    }

    pub fn lambda_a(&self) -> f64 {
        1.0 / (self.kappa * self.kappa * self.sigma_a)
    }

    pub fn sources(&self) -> Vec<(i32, Complex64)> {
        complex_list(&self.source)
    }

    pub fn boundary_data(&self) -> Vec<(i32, Complex64)> {
        complex_list(&self.boundary)
    }
}

fn complex_list(list: &[(i32, f64, f64)]) -> Vec<(i32, Complex64)> {
    list.iter().map(|&(n, re, im)| (n, Complex64::new(re, im))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::parse(r#"{"kappa": 1, "omega": 1, "N": 2}"#).unwrap();
        assert_eq!(c.truncation, None);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.sweep, SweepConfig::default());
        assert_eq!(c.lambda_a(), 1.0);
    }

    #[test]
    fn diagnostics_name_line_or_field() {
        let err = RunConfig::parse("{\n  \"kappa\": 1,\n  \"omega\": 1,\n  \"N\": 2,\n  \"bogus\": 3\n}").unwrap_err();
        assert!(err.message.contains("bogus") && err.message.contains("line 5"), "{}", err.message);
        let err = RunConfig::parse(r#"{"kappa": 1, "omega": 1, "N": 1, "source": [[2, 1, 0]]}"#).unwrap_err();
        assert!(err.message.contains("`source`"), "{}", err.message);
        let err = RunConfig::parse(r#"{"kappa": 1, "omega": 1, "N": 1, "R": 2.5}"#).unwrap_err();
        assert!(err.message.contains("`R`"), "{}", err.message);
        let err = RunConfig::parse(r#"{"kappa": 1, "omega": 1, "N": 1, "grid": {"r_min": 0, "r_max": 1, "n_r": 2, "n_theta": 2}}"#)
            .unwrap_err();
        assert!(err.message.contains("`grid`"), "{}", err.message);
        assert!(RunConfig::parse(r#"{"kappa": 1, "omega": 1, "N": 1, "boundary": [[0, 1, 0]]}"#).is_err());
        assert_eq!(err.code, 1);
    }
}
