use thiserror::Error;

/// Errors raised by the solvers, the parameter geometry and the exporters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter region error: {0}")]
    Region(String),

    #[error("solver failed to converge: {0}")]
    NonConvergence(String),

    #[error("degenerate endpoint: |U_end| = {u_end} is below 2*nu = {two_nu}")]
    DegenerateEndpoint { u_end: f64, two_nu: f64 },

    #[error(
        "anchor value {u_a} at x = {x_a} is not attainable inside the envelope [{lower}, {upper}]"
    )]
    Bracket {
        x_a: f64,
        u_a: f64,
        lower: f64,
        upper: f64,
    },

    #[error("interior solution changes sign {count} times (at most one allowed)")]
    SignViolation { count: usize },

    #[error("layer/profile mismatch: {0}")]
    Mismatch(String),

    #[error("window {0:?} contains no grid points")]
    EmptyWindow(Vec<(f64, f64)>),

    #[error("rate fit failed: {0}")]
    Fit(String),

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("pole: theta = {theta} is within {theta_min} of the axis")]
    Pole { theta: f64, theta_min: f64 },

    #[error("singular field: P_c(cos theta) = {p} at theta = {theta}")]
    Singular { theta: f64, p: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by a parameter outside the admissible region
    /// or a violated precondition, as opposed to a numerical breakdown.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Region(_)
                | Error::DegenerateEndpoint { .. }
                | Error::Bracket { .. }
                | Error::Mismatch(_)
                | Error::EmptyWindow(_)
                | Error::Pole { .. }
                | Error::Singular { .. }
        )
    }
}
