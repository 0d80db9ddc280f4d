use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("user index {index} out of range for {users} users")]
    UserIndex { index: usize, users: usize },

    #[error("phase coefficient {index} has modulus {modulus} > 1")]
    PhaseModulus { index: usize, modulus: f64 },

    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("value outside the domain: {0}")]
    Domain(String),

    #[error("invalid task profile: {0}")]
    Profile(String),

    #[error("problem rejected as non-convex: {0}")]
    NonConvex(String),

    #[error("subproblem infeasible: {0}")]
    Infeasible(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no feasible starting point found after {restarts} restarts")]
    NoFeasibleStart { restarts: usize },

    #[error("modified Newton step: no backtracking exponent up to {max_backtrack} satisfies the decrease test")]
    Backtrack { max_backtrack: usize },

    #[error("channel file: {0}")]
    Parse(#[from] crate::chanmodel::ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
