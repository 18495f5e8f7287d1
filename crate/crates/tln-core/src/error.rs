//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by dataset handling, noise application, and training.
///
/// Shape errors inside the tensor engine itself are programmer errors and
/// panic instead; these variants cover conditions reachable from user
/// configuration or data.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dataset class count and noise-spec class count disagree.
    ClassCountMismatch { expected: usize, found: usize },
    /// An operation that needs noisy labels was given a dataset without them.
    MissingNoisyLabels,
    /// An operation that needs clean labels was given a dataset without them.
    MissingCleanLabels,
    /// Two trajectories/matrices with incompatible dimensions.
    DimensionMismatch { what: &'static str, left: (usize, usize), right: (usize, usize) },
    /// Invalid generator or noise specification.
    InvalidSpec(String),
    /// Dataset too small for the requested operation.
    DatasetTooSmall { needed: usize, found: usize },
    /// Split fraction outside (0, 1).
    InvalidFraction(f64),
    /// Empty dataset where at least one sequence is required.
    EmptyDataset,
    /// A gradient became NaN/Inf; carries the parameter name.
    NonFiniteGradient { param: String },
    /// Training diverged: a loss became non-finite.
    Diverged { epoch: usize, lambda: f64, penalty: f64 },
    /// Labels out of the valid range for the dataset's class count.
    LabelOutOfRange { label: u32, classes: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ClassCountMismatch { expected, found } => {
                write!(f, "class count mismatch: expected {expected}, found {found}")
            }
            Error::MissingNoisyLabels => write!(f, "dataset has no noisy labels"),
            Error::MissingCleanLabels => write!(f, "dataset has no clean labels"),
            Error::DimensionMismatch { what, left, right } => write!(
                f,
                "{what}: dimension mismatch {}x{} vs {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            Error::DatasetTooSmall { needed, found } => {
                write!(f, "dataset too small: need at least {needed} sequences, found {found}")
            }
            Error::InvalidFraction(v) => write!(f, "fraction must lie in (0, 1), got {v}"),
            Error::EmptyDataset => write!(f, "empty dataset"),
            Error::NonFiniteGradient { param } => {
                write!(f, "non-finite gradient for parameter `{param}`")
            }
            Error::Diverged { epoch, lambda, penalty } => write!(
                f,
                "training diverged at epoch {epoch} (lambda={lambda}, c={penalty})"
            ),
            Error::LabelOutOfRange { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
