//! Run configuration: tolerances, optimizer budgets, quadrature resolution,
//! and report options. Everything serializes so reports can embed the exact
//! configuration they were produced with.

use crate::spd::ThetaOpts;
use crate::Tolerances;
use serde::{Deserialize, Serialize};

/// Budgets for the path-based upper-bound machinery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerBudget {
    /// Interior nodes of the field-level piecewise-linear path.
    pub path_nodes: usize,
    /// Iteration cap for the field-level node descent (0 disables it).
    pub path_iters: usize,
    /// Relative improvement that counts as converged.
    pub rel_improvement: f64,
    /// Length evaluations for the three-piece (s, w) tuner.
    pub three_piece_evals: usize,
    /// Search range for `ln s` in the three-piece tuner.
    pub log_s_range: (f64, f64),
    /// Candidate smoothing widths in grid cells.
    pub widths: Vec<usize>,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        OptimizerBudget {
            path_nodes: 8,
            path_iters: 25,
            rel_improvement: 1e-4,
            three_piece_evals: 20,
            log_s_range: ((1e-4_f64).ln(), 0.0),
            widths: vec![1, 2, 4],
        }
    }
}

/// Time-quadrature resolution for path lengths.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureOpts {
    /// Subintervals of the composite Simpson rule in t (≥ 8).
    pub t_nodes: usize,
    /// Refinement levels used for the reported error estimate.
    pub refine_levels: usize,
}

impl Default for QuadratureOpts {
    fn default() -> Self {
        QuadratureOpts { t_nodes: 64, refine_levels: 2 }
    }
}

/// Thresholds for sequence classification and equivalence verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceOpts {
    /// Determinants below this count as collapsed for point classification.
    pub collapse_threshold: f64,
    /// Entrywise tail variation below this counts as converged.
    pub converge_tol: f64,
    /// Tail window: last `max(3, ceil(len/tail_fraction))` terms.
    pub tail_fraction: usize,
    /// Equivalence: final termwise upper bound must drop below this.
    pub equiv_upper_tol: f64,
    /// Inequivalence: termwise lower bounds staying above this margin.
    pub inequiv_lower_margin: f64,
    /// Volume tolerance for limit disagreement; must exceed one grid-line
    /// volume O(1/shape) or line-supported limits misclassify.
    pub limit_vol_tol: f64,
    /// Entrywise tolerance when comparing omega limits nodewise.
    pub limit_entry_tol: f64,
}

impl Default for SequenceOpts {
    fn default() -> Self {
        SequenceOpts {
            collapse_threshold: 1e-2,
            converge_tol: 1e-2,
            tail_fraction: 3,
            equiv_upper_tol: 0.75,
            inequiv_lower_margin: 0.1,
            limit_vol_tol: 0.1,
            limit_entry_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Both,
}

/// Full configuration for a run; embedded verbatim in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub budget: OptimizerBudget,
    #[serde(default)]
    pub quadrature: QuadratureOpts,
    #[serde(default)]
    pub sequence: SequenceOpts,
    #[serde(default)]
    pub theta: ThetaOpts,
    /// Seed of the named RNG (chacha8); always logged in reports.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_format")]
    pub format: ReportFormat,
}

fn default_format() -> ReportFormat {
    ReportFormat::Json
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerances: Tolerances::default(),
            budget: OptimizerBudget::default(),
            quadrature: QuadratureOpts::default(),
            sequence: SequenceOpts::default(),
            theta: ThetaOpts::default(),
            seed: 0,
            format: ReportFormat::Json,
        }
    }
}

impl RunConfig {
    /// Validate documented minimums.
    pub fn validate(&self) -> crate::Result<()> {
        if self.quadrature.t_nodes < 8 {
            return Err(crate::Error::InvalidParameter("t_nodes must be >= 8".into()));
        }
        for (name, v) in [
            ("eps_pd", self.tolerances.eps_pd),
            ("eps_psd", self.tolerances.eps_psd),
            ("eps_lin", self.tolerances.eps_lin),
            ("delta_num", self.tolerances.delta_num),
        ] {
            if !(v > 0.0) {
                return Err(crate::Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.budget.three_piece_evals < 3 {
            return Err(crate::Error::InvalidParameter("three_piece_evals must be >= 3".into()));
        }
        Ok(())
    }
}
