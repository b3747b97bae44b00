//! Numerical geometry of the space of Riemannian metrics on flat tori.
//!
//! The library works at two coupled levels:
//!
//! * **Pointwise** ([`spd`]): the open cone of symmetric positive-definite
//!   n×n tensors (n ≤ 3) under the unweighted scalar product
//!   `tr(g⁻¹ h g⁻¹ k)` and its determinant-weighted companion, with
//!   closed-form geodesics, the distance `d_x`, and the weighted distance
//!   `θ` whose completion glues the whole cone boundary to a single point.
//! * **Global** ([`field`], [`path`], [`distance`], [`omega`]): grid-sampled
//!   tensor fields on flat-torus charts, the L² scalar product and volumes
//!   by midpoint quadrature, constructible path families with a certified
//!   length functional, two-sided distance estimates (upper bounds from
//!   optimized paths, lower bounds from volume-Lipschitz and Θ-inversion
//!   inequalities), and sequence diagnostics that classify degenerating
//!   sequences of metrics.
//!
//! Start with the runnable examples (`cargo run --example spd_cone`, …);
//! each one exercises a single capability end to end. The thin `ebinlab`
//! binary exposes file-based distance estimation, sequence diagnostics,
//! and the built-in reproduction suites.

pub mod cli;
pub mod config;
pub mod distance;
pub mod field;
mod linalg;
pub mod omega;
pub mod path;
pub mod report;
pub mod spd;
pub mod suite;

use thiserror::Error;

/// Crate-wide error type. CLI exit codes are derived from these variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("domain violation at node {node}: {what}")]
    DomainViolation { node: usize, what: String },
    #[error("range error: {0}")]
    RangeError(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("family is not amenable (lambda_min_inf <= 0)")]
    NotAmenable,
    #[error("parse error at byte offset {offset}: {what}")]
    Parse { offset: usize, what: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Numerical tolerances shared by all modules.
///
/// Defaults give double-precision headroom at n ≤ 3; every value can be
/// overridden through [`config::RunConfig`].
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Strict positive-definiteness floor: constructor-checked `λ_min > eps_pd`.
    pub eps_pd: f64,
    /// Semidefiniteness slack: `λ_min ≥ -eps_psd` passes as PSD.
    pub eps_psd: f64,
    /// Exact-linear-algebra tolerance (determinant identities, symmetry).
    pub eps_lin: f64,
    /// Condition-number ceiling beyond which a point counts as degenerate.
    pub cond_max: f64,
    /// Determinant threshold for the deflated-set surrogate.
    pub delta_num: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_pd: 1e-10,
            eps_psd: 1e-8,
            eps_lin: 1e-10,
            cond_max: 1e14,
            delta_num: 1e-6,
        }
    }
}

/// Initialize the global rayon pool, capping threads at `EBINLAB_THREADS`
/// when set. Safe to call more than once; later calls are no-ops.
pub fn init_threads() {
    if let Ok(v) = std::env::var("EBINLAB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Library version string embedded in every report.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
