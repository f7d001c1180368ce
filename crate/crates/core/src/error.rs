use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("time {t} precedes the first schedule segment at {start}")]
    BeforeSchedule { t: f64, start: f64 },

    #[error("invalid system: {0}")]
    System(String),

    #[error("reference solver dimension limit: {n} qubits exceeds the dense cap of {cap}")]
    DimensionLimit { n: usize, cap: usize },

    #[error("invalid state: {0}")]
    State(String),

    #[error("malformed derivative request: {0}")]
    Derivative(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("normalization collapse: included weight sum {0:e} is zero")]
    NormalizationCollapse(f64),

    #[error("ensemble exhausted; reduce reset interval")]
    EnsembleExhausted,

    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
