use thiserror::Error;

/// Errors raised by the spectral clustering pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series `{id}` has {len} samples; spectral operations need at least {min}")]
    SeriesTooShort { id: String, len: usize, min: usize },

    #[error("series `{id}` has a non-finite sample at index {index}")]
    NonFiniteSample { id: String, index: usize },

    #[error("sampling frequency must be positive and finite, got {0}")]
    InvalidSamplingFrequency(f64),

    #[error("bandwidth must lie in (0, 1/2), got {0}")]
    BandwidthOutOfRange(f64),

    #[error("spectral density has no positive ordinate (zero-variance series?)")]
    DegenerateSpectrum,

    #[error("spectral density ordinate {index} is negative or non-finite ({value})")]
    InvalidOrdinate { index: usize, value: f64 },

    #[error("frequency grids do not match: {0}")]
    GridMismatch(String),

    #[error("spectral density must be normalized to unit mass")]
    NotNormalized,

    #[error("mixed sampling frequencies: {0} Hz and {1} Hz")]
    MixedSamplingFrequency(f64, f64),

    #[error("need at least {min} items, got {got}")]
    TooFewItems { min: usize, got: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("cepstral order {order} exceeds the {available} available frequencies")]
    CepstralOrder { order: usize, available: usize },

    #[error("malformed dissimilarity matrix: {0}")]
    MalformedMatrix(String),

    #[error("cluster count {k} is outside 1..={n}")]
    ClusterCountOutOfRange { k: usize, n: usize },

    #[error("empty cluster")]
    EmptyCluster,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("partitions cover different sets of items ({0} vs {1})")]
    PartitionMismatch(usize, usize),

    #[error("unknown name `{0}`")]
    UnknownName(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
