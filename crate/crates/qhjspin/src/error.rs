//! Error type shared by every module of the crate.

/// Everything that can go wrong while building or evaluating a scenario.
///
/// Variants are grouped by origin: potential/domain problems, Dirac solver
/// failures, action/Schwarzian singularities, motion-law breakdowns, and
/// scenario plumbing. [`Error::exit_code`] maps them onto the CLI contract
/// (1 = validation, 2 = numerical).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("x = {x} is outside the domain [{min}, {max}]")]
    OutOfDomain { x: f64, min: f64, max: f64 },

    #[error("derivative order {order} is not supported (highest available is {max})")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("invalid physical setup: {0}")]
    InvalidSetup(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("initial spinor states are linearly dependent (cross-current = {cross_current:e})")]
    DependentInitialStates { cross_current: f64 },

    #[error("integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: String },

    #[error("degenerate solution pair at x = {x}: both basis components vanish")]
    DegeneratePair { x: f64 },

    #[error("first derivative vanishes at x = {x}; Schwarzian combination undefined")]
    SingularDerivative { x: f64 },

    #[error("E - V {symbol} m0 c^2 is not positive at x = {x} (value {value:e})")]
    BranchDomain { x: f64, symbol: char, value: f64 },

    #[error("deformation function has a pole at x = {x}")]
    PoleOfF { x: f64 },

    #[error("mass-shell denominator vanishes at x = {x} (turning point)")]
    TurningPoint { x: f64 },

    #[error("node at x = {x}: squared velocity is negative ({value:e})")]
    Node { x: f64, value: f64 },

    #[error("Lagrangian radicand is not positive (f xdot^2/c^2 = {value})")]
    Superluminal { value: f64 },

    #[error("trajectory cannot start at x0 = {x}: {reason}")]
    CannotStart { x: f64, reason: String },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("scenario validation failed at `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 1 for parse/validation/environment problems, 2 for
    /// numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation { .. } | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
