use alloc::string::String;

use crate::linsolve::SolveReport;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    Shape {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("density not positive in {context}: min = {min:e}")]
    Positivity { context: &'static str, min: f64 },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("conjugate gradient breakdown after {iterations} iterations: p'Ap = {curvature:e} (operator not SPD?)")]
    Breakdown { iterations: usize, curvature: f64 },

    #[error("{system} solve did not converge: {report}")]
    NotConverged { system: &'static str, report: SolveReport },

    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
