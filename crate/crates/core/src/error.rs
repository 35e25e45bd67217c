use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidSpec(String),
    #[error("unknown built-in lattice `{0}`")]
    UnknownLattice(String),
    #[error("lattice is not planar; {0} requires a plane drawing")]
    NonPlanar(&'static str),
    #[error("instance of {requested} vertices exceeds capacity {capacity}")]
    Capacity { requested: usize, capacity: usize },
    #[error("no probability given for class `{0}`")]
    MissingClass(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("instance has no paired dual")]
    MissingDual,
    #[error("configuration length {got} does not match instance ({expected})")]
    ConfigurationMismatch { expected: usize, got: usize },
    #[error("division point Q{index} lies within 1e-9 of an edge crossing")]
    QOnEdge { index: usize },
    #[error("wrapping curve never reaches 1/2 at size {size}")]
    NoCrossing { size: usize },
    #[error("insufficient replicas: {0}")]
    InsufficientReplicas(String),
    #[error("Markov chain did not converge: {0}")]
    NonConvergence(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
