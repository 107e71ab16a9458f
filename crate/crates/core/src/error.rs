//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel '{name}': {reason}")]
    MalformedKernel { name: String, reason: String },

    #[error("kernel '{name}' under-resolved: dx = {dx} exceeds eps = {eps}")]
    UnderResolved { name: String, dx: f64, eps: f64 },

    #[error(
        "kernel '{name}': tail tolerance {tail_tol:e} unreachable within {max_cells} cells \
         (residual mass {residual:e})"
    )]
    Truncation {
        name: String,
        tail_tol: f64,
        max_cells: usize,
        residual: f64,
    },

    #[error("kernel '{name}': first moment quadrature does not converge (window {window})")]
    DivergentMoment { name: String, window: f64 },

    #[error("kernel '{name}': quadrature failure at frequency c = {c}: {reason}")]
    SymbolQuadrature { name: String, c: f64, reason: String },

    #[error("kernel '{name}': h vanishes on [{lo}, {hi}] (eta = {eta:e}); kernel inadmissible")]
    InadmissibleKernel {
        name: String,
        lo: f64,
        hi: f64,
        eta: f64,
    },

    #[error("kernel '{name}': derivative not integrable: {reason}")]
    UnsupportedKernel { name: String, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "field does not decay at the boundary (edge {edge:e} vs peak {peak:e}); \
         enlarge the domain padding"
    )]
    Padding { edge: f64, peak: f64 },

    #[error(
        "spectral band |eps*xi| >= {delta} unresolved: cut {cut} exceeds the Nyquist \
         frequency {nyquist}"
    )]
    UnresolvedBand { delta: f64, cut: f64, nyquist: f64 },

    #[error("invariant region violated by {excess:e} at cell {cell} (check the CFL number)")]
    InvariantRegion { cell: usize, excess: f64 },

    #[error("validation: {0}")]
    Validation(String),

    #[error("incomplete bound report: {0}")]
    IncompleteReport(String),

    #[error("rate fit needs at least two points with positive errors, got {0}")]
    DegenerateFit(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
