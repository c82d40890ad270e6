use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid Markov model: {0}")]
    InvalidModel(String),

    #[error("correlation r = 1 makes every entry of the Toeplitz matrix unity; eigenvectors are not unique")]
    SingularCorrelation,

    #[error("expected {expected} frequency roots in (0, pi), found {found}; brackets: {brackets}")]
    RootCount {
        expected: usize,
        found: usize,
        brackets: String,
    },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("filter size {0} must be odd so the padding (k - 1)/2 is integral")]
    EvenFilterSize(usize),

    #[error("cannot take {requested} filters from a {k}x{k} basis (at most {max})")]
    TooManyFilters { requested: usize, k: usize, max: usize },

    #[error("image {rows}x{cols} is smaller than patch size {k}")]
    ImageTooSmall { rows: usize, cols: usize, k: usize },

    #[error("requested {requested} components but the usable numeric rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cosine distance is undefined for two zero vectors")]
    ZeroVectors,

    #[error("{0}")]
    InvalidInput(String),

    #[error("malformed {kind} file: {message}")]
    Format { kind: &'static str, message: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
