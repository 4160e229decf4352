//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

/// Environment variable that overrides [`Tolerances::slack`].
pub const TOLERANCE_ENV: &str = "OGK_TOLERANCE";

/// Central tolerance record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative bracket width at which bisection stops.
    pub root: f64,
    /// Absolute slack allowed in inequality checks.
    pub slack: f64,
    /// Relative bracket width for golden-section minimization.
    pub golden: f64,
    /// Allowed deviation of the modular from 1 at the computed gauge norm.
    pub gauge_post: f64,
    /// Absolute tolerance for exact Haar invariance on float weights.
    pub haar: f64,
    /// Residual tolerance for subspace membership.
    pub projection: f64,
    /// Set from `OGK_TOLERANCE`; replaces the per-check tolerance of every
    /// inequality check in the suites.
    pub slack_override: Option<f64>,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        root: 1e-12,
        slack: 1e-10,
        golden: 1e-10,
        gauge_post: 1e-9,
        haar: 1e-14,
        projection: 1e-10,
        slack_override: None,
    };

    /// Defaults, with `slack` taken from `OGK_TOLERANCE` when it parses as a positive float.
    pub fn from_env() -> Self {
        let mut tol = Self::DEFAULT;
        if let Some(v) = std::env::var(TOLERANCE_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
        {
            tol.slack = v;
            tol.slack_override = Some(v);
        }
        tol
    }
}

impl Tolerances {
    /// Tolerance for an inequality check whose default is `default`.
    pub fn inequality(&self, default: f64) -> f64 {
        self.slack_override.unwrap_or(default)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
