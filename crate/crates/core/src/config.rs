//! Numerical tolerances shared by every check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL_ORTHO: f64 = 1e-10;
pub const DEFAULT_TOL_RANK: f64 = 1e-8;
pub const DEFAULT_TOL_CHECK: f64 = 1e-6;
pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_TAIL_LEN: usize = 5;
pub const DEFAULT_CLUSTER_RADIUS: f64 = 1e-6;
pub const DEFAULT_LOCAL_FINITENESS_THRESHOLD: usize = 4;

/// Relative factor used for the scale-aware frontier defaults.
pub const DEFAULT_FRONTIER_FACTOR: f64 = 1e-2;

/// Tolerance set for a run.
///
/// `eps_touch` and `delta_cover` default to a fixed fraction of the point
/// cloud diameter, so they stay `None` until a stratification is at hand.
/// `r_cc` (single-linkage radius) has no default at all: connected
/// components of a point cloud depend on it and callers must choose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_ortho: f64,
    pub tol_rank: f64,
    pub tol_check: f64,
    pub step: f64,
    pub r_cc: Option<f64>,
    pub eps_touch: Option<f64>,
    pub delta_cover: Option<f64>,
    pub tail_len: usize,
    pub cluster_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_ortho: DEFAULT_TOL_ORTHO,
            tol_rank: DEFAULT_TOL_RANK,
            tol_check: DEFAULT_TOL_CHECK,
            step: DEFAULT_STEP,
            r_cc: None,
            eps_touch: None,
            delta_cover: None,
            tail_len: DEFAULT_TAIL_LEN,
            cluster_radius: DEFAULT_CLUSTER_RADIUS,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_ortho", Some(self.tol_ortho)),
            ("tol_rank", Some(self.tol_rank)),
            ("tol_check", Some(self.tol_check)),
            ("step", Some(self.step)),
            ("r_cc", self.r_cc),
            ("eps_touch", self.eps_touch),
            ("delta_cover", self.delta_cover),
            ("cluster_radius", Some(self.cluster_radius)),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if self.tail_len == 0 {
            return Err(Error::Config("tail_len must be positive".into()));
        }
        Ok(())
    }

    pub fn require_r_cc(&self) -> Result<f64> {
        self.r_cc
            .ok_or_else(|| Error::Config("a clustering radius r_cc is required".into()))
    }
}
