use thiserror::Error;

use crate::solver::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// `k² = α_j²` for some order `j`: the quasi-periodic Green's function
    /// does not exist (Wood anomaly).
    #[error("non-resonance violated: k² = α_j² at order j = {order} (k = {k}, α = {alpha})")]
    RayleighAnomaly { order: i64, k: f64, alpha: f64 },

    #[error("invalid incident wave: {0}")]
    InvalidWave(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("contrast is not symmetric at ({x1}, {x2}): |Q12 - Q21| = {defect:e}")]
    NonSymmetric { x1: f64, x2: f64, defect: f64 },

    /// λ_j vanished together with j2; impossible under non-resonance.
    #[error("kernel coefficient degenerate with j2 = 0 at j1 = {j1}")]
    DegenerateAtZeroJ2 { j1: i64 },

    #[error("Green's series converges too slowly at |x2| = {x2:e} (tail bound {tail:e})")]
    SlowConvergence { x2: f64, tail: f64 },

    #[error("shape mismatch: expected {expected} values, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("dense assembly of {size} unknowns exceeds the guard of {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("GMRES did not converge after {} iterations (relative residual {:e})", .0.iterations, .0.final_residual())]
    NotConverged(Box<Solution>),

    #[error("Krylov breakdown after {} iterations: the homogeneous equation may have a nontrivial solution", .0.iterations)]
    Breakdown(Box<Solution>),

    #[error("post-processing requires a converged solution")]
    UnconvergedInput,

    #[error("Re(Q) is singular at {} node(s), first at grid index {:?}", .nodes.len(), .nodes.first())]
    SingularReQ { nodes: Vec<(usize, usize)> },

    #[error("domain is not a graph region: {0}")]
    GeometryNotGraph(String),

    #[error("point ({x1}, {x2}) lies between the reference line and the contrast support")]
    EvaluationGap { x1: f64, x2: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::RayleighAnomaly { .. }
                | Error::InvalidWave(_)
                | Error::InvalidGrid(_)
                | Error::Geometry(_)
                | Error::NonSymmetric { .. }
                | Error::Config(_)
                | Error::ShapeMismatch { .. }
        )
    }
}
