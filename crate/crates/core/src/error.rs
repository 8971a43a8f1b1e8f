//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Operands or buffers whose shapes do not fit together.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("shape mismatch: {0}")]
pub struct ShapeError(pub String);

impl ShapeError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {index} but the mesh has {vertices} vertices")]
    FaceIndexOutOfRange { face: usize, index: usize, vertices: usize },
    #[error("face {face} is degenerate (repeated vertex index)")]
    DegenerateFace { face: usize },
    #[error("mesh edge graph is disconnected: {components} components")]
    Disconnected { components: usize },
    #[error("feature matrix has {found} rows, mesh has {expected} vertices")]
    FeatureCount { expected: usize, found: usize },
    #[error("vertex {vertex} has {neighbors} one-ring neighbors, at least 3 are required")]
    TooFewNeighbors { vertex: usize, neighbors: usize },
    #[error("vertex {vertex} out of range for {vertices} vertices")]
    VertexOutOfRange { vertex: usize, vertices: usize },
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("icosphere level {0} exceeds the supported maximum of 6")]
    LevelTooLarge(u32),
    #[error("cannot place {regions} regions on {vertices} vertices")]
    InvalidRegionCount { regions: usize, vertices: usize },
    #[error("graph and position/frame data disagree: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("pseudo-coordinate {value} in dimension {dim} lies outside [0, 1]")]
    OutOfDomain { dim: usize, value: f64 },
    #[error("invalid B-spline basis: {0}")]
    InvalidBasis(String),
    #[error("vertex {0} has no neighbors and the root path is disabled")]
    IsolatedVertex(usize),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("row {row} of the {which} matrix sums to {sum}, expected a probability vector")]
    NotNormalized { which: &'static str, row: usize, sum: f64 },
    #[error("label {label} at row {row} is outside [0, {classes})")]
    LabelOutOfRange { row: usize, label: usize, classes: usize },
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("subject {subject}: {file}: expected {expected} entries, found {found}")]
    CountMismatch { subject: String, file: PathBuf, expected: usize, found: usize },
    #[error("subject {subject}: label {label} at vertex {vertex} is outside [0, {classes})")]
    LabelOutOfRange { subject: String, vertex: usize, label: usize, classes: usize },
    #[error("subject {subject}: {source}")]
    Mesh { subject: String, source: MeshError },
    #[error("{0}")]
    Invalid(String),
    #[error("{} subject(s) failed to load: {}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Many(Vec<DataError>),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Crate-level error, grouped by the kind of failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

/// Coarse failure category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Mesh(_) | Error::Data(_) => ErrorKind::Data,
            Error::Spline(_) | Error::Loss(_) | Error::Shape(_) | Error::NonFinite(_) => {
                ErrorKind::Numeric
            }
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
