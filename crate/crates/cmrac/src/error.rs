//! Error types shared across the crate.

use thiserror::Error;

/// Which barrier set a breach/guard event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Barrier {
    /// Input magnitude set: u^T M u < U1'^2.
    InputMagnitude,
    /// Input rate set: udot^T M udot < U2'^2.
    InputRate,
    /// Difference-error set: e_d^T P e_d < Ed'^2.
    DifferenceError,
}

impl std::fmt::Display for Barrier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Barrier::InputMagnitude => write!(f, "input magnitude (u'Mu < U1'^2)"),
            Barrier::InputRate => write!(f, "input rate (udot'M udot < U2'^2)"),
            Barrier::DifferenceError => write!(f, "difference error (ed'P ed < Ed'^2)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{context}: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("infeasible model: {0}")]
    InfeasibleModel(String),

    #[error("barrier breach at t = {t:.6}: {barrier} denominator {denominator:.3e} within guard")]
    BarrierBreach {
        barrier: Barrier,
        t: f64,
        denominator: f64,
    },

    #[error("integration step failure at t = {t:.6}: {barrier} still breached at dt = {dt:.3e}")]
    StepFailure { barrier: Barrier, t: f64, dt: f64 },

    #[error("infeasible (C1): gamma = 1 - ||B|| kx_bar / rho = {gamma:.6} <= 0")]
    InfeasibleC1 { gamma: f64 },

    #[error("infeasible (C2): ed_bar selection {ed_bar:.6} <= 0")]
    InfeasibleC2 { ed_bar: f64 },

    #[error(
        "disturbance margin violated: ed_bar = {ed_bar:.6} <= 2 lambda_max(P) d_bar / lambda_min(Q) = {floor:.6}"
    )]
    DisturbanceMargin { ed_bar: f64, floor: f64 },

    #[error("invalid scenario:\n{}", violations.join("\n"))]
    InvalidScenario { violations: Vec<String> },

    #[error("parse error at line {line} ({field}): {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
