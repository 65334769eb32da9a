use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}; only 1 and 2 are supported")]
    UnsupportedDimension(usize),

    #[error("level count {0} out of range 1..=16")]
    LevelsOutOfRange(u32),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported wavelet order {0}; orders 1..=10 are available")]
    UnsupportedWaveletOrder(usize),

    #[error("kernel width {sigma} covers only {taps} grid point(s); at least 3 are needed")]
    DegenerateKernel { sigma: f64, taps: usize },

    #[error("signal is identically zero")]
    ZeroSignal,

    #[error("chain has zero variance")]
    ConstantChain,

    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },

    #[error("adjoint check failed: |<Mx,y> - <x,M^T y>| = {gap:e} exceeds {bound:e}")]
    AdjointMismatch { gap: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
