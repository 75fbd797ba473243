use thiserror::Error;

use crate::geometry::Strategy;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function it was passed to.
    #[error("{what} = {value} is outside the valid domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),

    #[error("invalid design: {0}")]
    InvalidSpec(String),

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    /// Adaptive quadrature hit its depth limit without meeting tolerance.
    #[error("quadrature did not converge for beam {beam} ({stage}) on [{lo:.6e}, {hi:.6e}]")]
    Numerical {
        beam: usize,
        stage: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("at grid point ({strategy}, n_beams = {n_beams}, overlap = {overlap}): {source}")]
    AtGridPoint {
        strategy: Strategy,
        n_beams: usize,
        overlap: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("singular BDE calibration: {0}")]
    Calibration(String),

    #[error("invalid Monte Carlo configuration: {0}")]
    McConfig(String),
}

impl Error {
    /// True for failures that originate in numerical integration rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } => true,
            Error::AtGridPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
