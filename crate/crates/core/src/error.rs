use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("ill-conditioned input: {0}")]
    IllConditioned(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("decomposition did not converge: {0}")]
    Decomposition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible power budget: {0}")]
    InfeasibleBudget(String),
    #[error("power constraint violated: {0}")]
    Constraint(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
