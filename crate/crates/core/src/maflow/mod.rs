//! Parabolic complex Monge-Ampère flow on flat tori.
//!
//! The potential `φ` on `(R/Z)^{2n}` (n = 1, 2) evolves by
//!
//! ```text
//! φ̇ = log det(g0 + H(φ)) - log Ω          (unnormalized)
//! φ̇ = log det(g0 + H(φ)) - log Ω - φ      (normalized)
//! ```
//!
//! with `H(φ)_{jk̄} = ∂_j∂̄_k φ` computed spectrally and `Ω = det(g0)·e^f`.
//! Time stepping is explicit RK4 under a diffusive step bound.

mod config;
mod diagnostics;
mod matrix;
mod solver;
mod spectral;

use thiserror::Error;

pub use config::{
    read_field, sidecar_path, write_field, AdaptiveTag, DtPolicy, FieldSidecar, FlowConfig,
    MetricEntries, CONFIG_SCHEMA,
};
pub use diagnostics::{
    estimate_report, fit_decay, DecayFit, DiagnosticsRecord, DiagnosticsSeries, EstimateReport,
    Verdict, CSV_HEADER, DIAGNOSTICS_SCHEMA, ESTIMATE_TOL,
};
pub use matrix::{
    diag, gap_bound_exact, gap_constant, matrix_gap_check, trace_inequalities_check, GapCheck,
    TraceCheck,
};
pub use solver::{
    diagnostics, ma_rhs, ma_rhs_field, ricci_and_scalar, run, step, FlowMode, FlowState,
    FourierTerm, RunConfig, RunResult, TorusBackground, DEFAULT_EPS_POS,
};
pub(crate) use solver::fourier_sum;
pub use spectral::{Herm, HermitianField, Spectral};

#[derive(Debug, Error, Clone)]
pub enum FlowError {
    #[error("metric lost positivity at grid point {index} {coords:?}: min eigenvalue {min_eig:e}")]
    Admissibility {
        index: usize,
        coords: Vec<f64>,
        min_eig: f64,
    },
    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    TimeStep { dt: f64, bound: f64 },
    #[error("step from t = {t} failed after repeated halving of dt = {dt:e}: {cause}")]
    StepFailed {
        t: f64,
        dt: f64,
        cause: Box<FlowError>,
        snapshot: Option<Box<DiagnosticsRecord>>,
    },
    #[error("spectral tail fraction {fraction:e} at t = {t} exceeds tolerance; refine the grid")]
    SpectralTail { t: f64, fraction: f64 },
    #[error("invalid background: {0}")]
    InvalidBackground(String),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid matrix input: {0}")]
    InvalidMatrix(String),
    #[error("{0}")]
    Io(String),
}
