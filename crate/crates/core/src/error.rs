use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid region: {location}: {reason}")]
    InvalidRegion { location: String, reason: String },

    #[error("ill-conditioned boundary at vertex {vertex} of ring {ring}: turning angle {angle:.4} rad")]
    IllConditionedBoundary { ring: usize, vertex: usize, angle: f64 },

    #[error("offset changes topology: {0}")]
    TopologyChange(String),

    #[error("mesh too coarse: {cells} cells (need at least {min})")]
    ResolutionTooCoarse { cells: usize, min: usize },

    #[error("invalid mesh spacing: {0}")]
    InvalidSpacing(String),

    #[error("kernel assembly failed: {0}")]
    Assembly(String),

    #[error("equilibrium solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverFailure {
        residual: f64,
        iterations: usize,
        best_masses: Vec<f64>,
    },

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nothing to relax: lambda {lambda} does not exceed lambda_omega {lambda_omega}")]
    NothingToRelax { lambda: f64, lambda_omega: f64 },

    #[error("satellite placement infeasible: {0}")]
    Placement(String),

    #[error("unreliable boundary trace: {flagged} of {total} vertices flagged")]
    UnreliableTrace { flagged: usize, total: usize },

    #[error("flow stalled at iteration {}: {reason}", state.iteration)]
    StalledFlow {
        reason: String,
        state: Box<crate::minimizer::FlowState>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
