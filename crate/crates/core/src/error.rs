use thiserror::Error;

/// Broad classification used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// A hypothesis of the stability theorem does not hold for the input.
    Hypothesis,
    /// A numerical routine failed (non-convergence, degenerate data, failed check).
    Numerical,
    /// The caller supplied an argument outside the documented domain.
    Input,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point lies outside the model chart: |x| = {norm} but the chart radius is {limit}")]
    OutsideModel { norm: f64, limit: f64 },

    #[error("radial function is not positive at direction {direction:?}: rho = {rho}")]
    NonPositiveRadius { direction: Vec<f64>, rho: f64 },

    #[error("surface is not starshaped: support <Z,nu> = {support} at node {node} has the wrong sign (direction {direction:?})")]
    NotStarshaped {
        node: usize,
        direction: Vec<f64>,
        support: f64,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported hypersurface dimension n = {0}")]
    UnsupportedDimension(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotStarshaped { .. }
            | Error::Hypothesis(_)
            | Error::NonPositiveRadius { .. }
            | Error::OutsideModel { .. } => ErrorKind::Hypothesis,
            Error::Numerical(_) => ErrorKind::Numerical,
            Error::InvalidArgument(_) | Error::UnsupportedDimension(_) => ErrorKind::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
