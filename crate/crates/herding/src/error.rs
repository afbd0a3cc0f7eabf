use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("fields live on different grids ({0} vs {1} cells)")]
    GridMismatch(usize, usize),

    #[error("desired followers' density must be strictly positive (min = {min})")]
    NonPositiveTarget { min: f64 },

    #[error("infeasible: minimum required leaders' mass {required} exceeds available {available}")]
    Infeasible { required: f64, available: f64 },

    #[error("infeasible in 2D: no nonnegative constant completes the reference (a2 = {a2})")]
    Infeasible2D { a2: f64 },

    #[error("deconvolution input is not zero-mean (integral = {integral:e})")]
    NonZeroMeanInput { integral: f64 },

    #[error("reference and density masses differ beyond tolerance ({reference} vs {actual})")]
    MassMismatch { reference: f64, actual: f64 },

    #[error("followers' density vanished (min = {min:e}); feedback correction undefined")]
    VanishingFollowerDensity { min: f64 },

    #[error("non-finite value encountered at step {step}")]
    NumericalBlowup { step: usize },

    #[error("density estimation needs at least 2 agents (got {0})")]
    TooFewAgents(usize),

    #[error("config error: {0}")]
    ConfigParse(String),

    #[error("unknown scenario `{name}`{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    UnknownScenario {
        name: String,
        suggestion: Option<String>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
