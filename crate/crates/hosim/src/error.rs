//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Configuration or input validation failed before any work started.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A position falls outside the service area.
    #[error("position ({x:.1}, {y:.1}) m is outside the service area")]
    OutOfBounds { x: f64, y: f64 },

    /// A grid bin holds no samples and cannot be queried.
    #[error("bin ({bin_x}, {bin_y}) holds no RSRP samples")]
    UnpopulatedBin { bin_x: usize, bin_y: usize },

    /// Requested more candidate cells than the map contains.
    #[error("k = {k} exceeds the number of cells ({num_cells})")]
    KTooLarge { k: usize, num_cells: usize },

    /// All RSRP samples carry the same value; the [0, 1] map is undefined.
    #[error("degenerate RSRP range: all samples equal {value} dBm")]
    DegenerateRange { value: f64 },

    /// The operation needs at least two waypoints.
    #[error("route has {len} waypoint(s); at least 2 are required")]
    DegenerateRoute { len: usize },

    /// A route crosses bins that hold no samples.
    #[error("route not covered by the radio map at waypoint(s) {waypoints:?}")]
    UncoveredRoute { waypoints: Vec<usize> },

    /// Every route in an experiment was uncovered; nothing to aggregate.
    #[error("no route in the experiment is covered by the radio map")]
    AllRoutesUncovered,

    /// Empty input where at least one value is required.
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),

    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error was raised while validating configuration, as
    /// opposed to failing at runtime. Drives the CLI exit code split.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidConfig(_))
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
