use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circle::check_grid;
use crate::convex::SolverOptions;
use crate::error::{Error, Result};
use crate::factorize::DEFAULT_EPS_ZERO;
use crate::kfunc::TGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200_000,
        }
    }
}

/// Guards checked by the suites. Ratio guards are regression bounds, not
/// known constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Upper bound on `achieved / ambient` for K-closedness suites.
    pub k_ratio: f64,
    /// Residual bound for the K-functional identity suite.
    pub identity: f64,
    /// Residual bound for the factorization suite.
    pub factor: f64,
    /// Reconstruction and membership tolerance for decompositions.
    pub certificate: f64,
    /// Additive slack in the Hölder cross-term check.
    pub holder_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            k_ratio: 20.0,
            identity: 1e-5,
            factor: 1e-8,
            certificate: 1e-6,
            holder_slack: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Epsilon {
    pub zero: f64,
    pub reg: f64,
}

impl Default for Epsilon {
    fn default() -> Self {
        Self {
            zero: DEFAULT_EPS_ZERO,
            reg: 1e-8,
        }
    }
}

/// Everything a suite run depends on. Missing JSON fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub grid_n: usize,
    pub matrix_n: usize,
    pub t_grid: TGrid,
    pub solver: SolverConfig,
    pub thresholds: Thresholds,
    pub epsilon: Epsilon,
    pub instances: usize,
    /// Worker threads for instance-level parallelism (0 = rayon default).
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            grid_n: 32,
            matrix_n: 4,
            t_grid: TGrid {
                t_min: 1e-2,
                t_max: 1e2,
                per_decade: 2,
            },
            solver: SolverConfig::default(),
            thresholds: Thresholds::default(),
            epsilon: Epsilon::default(),
            instances: 10,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        check_grid(self.grid_n)?;
        if self.matrix_n == 0 || self.matrix_n > 16 {
            return Err(Error::InvalidParameter(format!(
                "matrix_n must lie in 1..=16, got {}",
                self.matrix_n
            )));
        }
        TGrid::new(self.t_grid.t_min, self.t_grid.t_max, self.t_grid.per_decade)?;
        let positive = [
            ("solver.tol", self.solver.tol),
            ("thresholds.k_ratio", self.thresholds.k_ratio),
            ("thresholds.identity", self.thresholds.identity),
            ("thresholds.factor", self.thresholds.factor),
            ("thresholds.certificate", self.thresholds.certificate),
            ("thresholds.holder_slack", self.thresholds.holder_slack),
            ("epsilon.zero", self.epsilon.zero),
            ("epsilon.reg", self.epsilon.reg),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.solver.max_iter == 0 || self.instances == 0 {
            return Err(Error::InvalidParameter(
                "solver.max_iter and instances must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            ..SolverOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_uses_defaults() {
        let c = ExperimentConfig::from_json(r#"{"seed": 7, "grid_n": 16}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.grid_n, 16);
        assert_eq!(c.matrix_n, ExperimentConfig::default().matrix_n);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ExperimentConfig::from_json(r#"{"grid_n": 12}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"matrix_n": 17}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"instances": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"solver": {"tol": -1}}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&s).unwrap(), c);
    }
}
