use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("material constraint violated: {0}")]
    Constraint(String),

    #[error("coordinate singularity: r = {r} is below the chart floor {floor}")]
    CoordinateSingularity { r: f64, floor: f64 },

    #[error("degenerate ray: spatial speed is zero")]
    DegenerateRay,

    #[error("operation requires a radial static field")]
    NotRadialStatic,

    #[error("n(r)·r has no local maximum in (0, {r_search_max}); no trap is possible")]
    NotFound { r_search_max: f64 },

    #[error("impact invariant {b} lies outside the trapped band ({b_lo}, {b_hi}]")]
    OutOfBand { b: f64, b_lo: f64, b_hi: f64 },

    #[error("insufficient data: {found} radial turning events, at least 3 required")]
    InsufficientData { found: usize },

    #[error("integration failed: {0}")]
    StepFailure(String),

    #[error("infeasible design: {0}")]
    Infeasible(String),
}
