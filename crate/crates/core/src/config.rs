//! Numerical tolerances and iteration budgets shared across the toolkit.

use serde::{Deserialize, Serialize};

/// Tolerances for polynomial and rational-map numerics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Leading coefficients below this fraction of the largest modulus are dropped.
    pub trim: f64,
    /// Roots of numerator and denominator closer than this are cancelled.
    pub common_root: f64,
    /// Backward-error threshold a root must meet.
    pub root_residual: f64,
    pub root_max_sweeps: usize,
    pub super_attracting: f64,
    pub multiplier: f64,
    /// Largest root-of-unity order considered when testing for parabolic multipliers.
    pub max_root_of_unity_order: u32,
    /// Composition degree cap; beyond it elements are evaluated pointwise.
    pub max_degree: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trim: 1e-12,
            common_root: 1e-9,
            root_residual: 1e-12,
            root_max_sweeps: 500,
            super_attracting: 1e-9,
            multiplier: 1e-7,
            max_root_of_unity_order: 64,
            max_degree: 4096,
        }
    }
}

/// Iteration limits for orbit computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterationBudget {
    pub max_iter: usize,
    /// Budget used when a parabolic fixed point anchors the search.
    pub parabolic_max_iter: usize,
    pub eps_step: f64,
    /// Consecutive confirming iterations before convergence or cycling is declared.
    pub confirm: usize,
    pub escape_radius: f64,
    pub max_period: usize,
    pub anchor_radius: f64,
}

impl Default for IterationBudget {
    fn default() -> Self {
        IterationBudget {
            max_iter: 20_000,
            parabolic_max_iter: 2_000_000,
            eps_step: 1e-10,
            confirm: 10,
            escape_radius: 1e6,
            max_period: 64,
            anchor_radius: 1e-3,
        }
    }
}

/// Tolerances used when deciding and clustering Denjoy-Wolff points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwTolerances {
    /// Two limits closer than this are the same point.
    pub agreement: f64,
    /// Points with `||z| - 1|` below this are on the unit circle.
    pub boundary: f64,
    /// A limit farther than this outside the closed disk is a definitive escape.
    pub escape_margin: f64,
}

impl Default for DwTolerances {
    fn default() -> Self {
        DwTolerances {
            agreement: 1e-6,
            boundary: 1e-6,
            escape_margin: 1e-3,
        }
    }
}
