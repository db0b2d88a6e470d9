use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("node {0:?} already exists")]
    DuplicateNode(String),

    #[error("netlist has more than one ground-reference node ({0:?} and {1:?})")]
    DuplicateGround(String, String),

    #[error("unknown node {0:?}")]
    UnknownNode(String),

    #[error("node {0:?} is disconnected: no element touches it")]
    DisconnectedNode(String),

    #[error("singular system: zero pivot near node(s) {}", .nodes.join(", "))]
    Singular { nodes: Vec<String> },

    #[error("at {frequency} Hz: {source}")]
    AtFrequency {
        frequency: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no resistive path between {0:?} and {1:?}")]
    Unreachable(String, String),

    #[error("{what} = {value} is outside the range [{min}, {max}]")]
    OutOfRange {
        what: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("feature {0:?} lies outside the die outline")]
    FeatureOutsideDie(String),

    #[error("degenerate mesh cell: {0}")]
    DegenerateCell(String),

    #[error("port {0:?} is not a node of the mesh")]
    PortNotInMesh(String),

    #[error("element touching internal node {0:?} is not a resistor; keep it as a port")]
    ReactiveInternalNode(String),

    #[error("insufficient span: {0}")]
    InsufficientSpan(String),

    #[error("no transfer function for path {0:?}")]
    MissingTransfer(String),

    #[error("oracle tolerance exceeded: {0}")]
    Tolerance(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn at_frequency(self, frequency: f64) -> Error {
        Error::AtFrequency {
            frequency,
            source: Box::new(self),
        }
    }

    /// True for failures raised by the linear solve rather than by input
    /// validation.
    pub fn is_solver(&self) -> bool {
        match self {
            Error::Singular { .. } | Error::Unreachable(..) => true,
            Error::AtFrequency { source, .. } => source.is_solver(),
            _ => false,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
