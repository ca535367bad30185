use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("value {value} outside the range of the auxiliary function (max {max})")]
    Range { value: f64, max: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unstable time step: dt = {dt} exceeds bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("blow-up: max value {max} exceeded threshold at t = {time}")]
    BlowUp { time: f64, max: f64 },

    #[error("non-finite value produced at t = {time}")]
    NonFinite { time: f64 },

    #[error("requested window is not covered by the simulation: {0}")]
    OutOfWindow(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("template {template} does not match the {regime} regime")]
    TemplateMismatch { template: String, regime: String },

    #[error("quadrature unresolved: coarse/fine disagree by {rel_diff:.3e} relative")]
    QuadratureUnresolved { rel_diff: f64 },

    #[error("test function support not covered by the trajectory: {0}")]
    SupportNotCovered(String),

    #[error("doubling hypothesis fails: M(y) dist(y, Γ) = {product} ≤ 2k = {two_k}")]
    HypothesisFails { product: f64, two_k: f64 },

    #[error("doubling search did not terminate within {bound} hops")]
    NonTermination { bound: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
