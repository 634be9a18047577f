use thiserror::Error;

/// Errors raised by the signal model, the solvers and the harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The Fisher information about the target angle vanishes (for example a
    /// single receive antenna, or no transmit power toward the target).
    #[error("degenerate geometry: angle is not identifiable ({0})")]
    DegenerateGeometry(String),

    /// Even with all power steered toward the user the SNR target is missed.
    #[error(
        "infeasible scenario: required SNR {required:.6e} exceeds achievable {achievable:.6e}"
    )]
    Infeasible { required: f64, achievable: f64 },

    #[error(
        "closed-form gain ratio is only defined for an even number of receive antennas (got {0})"
    )]
    OddNrUnsupported(usize),

    /// An effective block coefficient vanished so its phase is undefined.
    #[error("degenerate coefficient |r_{index}| = {magnitude:.3e}")]
    DegenerateCoefficient { index: usize, magnitude: f64 },

    #[error("aperture {aperture} is smaller than the required {required}")]
    ApertureTooSmall { aperture: f64, required: f64 },

    #[error("no boundary of the feasible region admits an aligned solution")]
    NoFeasibleBoundary,

    #[error("iteration cap of {0} reached")]
    IterationCap(usize),

    #[error("active-constraint Gram matrix is singular")]
    SingularActiveGram,

    /// arccos/arcsin argument sits on a domain endpoint where the gradient blows up.
    #[error("gradient undefined: {0}")]
    DegenerateArg(String),

    #[error("grid would contain {estimated} points, above the cap of {cap}")]
    GridTooLarge { estimated: u128, cap: u128 },

    #[error("no feasible configuration on a grid of step {step}")]
    RepairFailed { step: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
