use thiserror::Error;

use crate::graph::CutSolution;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (unknown ids, bad costs, bad files).
    #[error("invalid input: {0}")]
    Input(String),

    /// The instance admits no solution meeting its constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A size or memory bound would be exceeded.
    #[error("refused: {0}")]
    Refused(String),

    /// Randomized amplification gave up after the configured number of attempts.
    #[error("retry cap of {attempts} attempts exceeded: {reason}")]
    RetryCapExceeded { attempts: usize, reason: String, best: Option<Box<CutSolution>> },

    /// Cutting-plane iteration stopped without a distribution or a certificate.
    #[error("unresolved after {iterations} separation rounds")]
    Unresolved { iterations: usize },

    #[error("linear program: {0}")]
    Lp(String),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
