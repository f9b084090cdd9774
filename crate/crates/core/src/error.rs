use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDist(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("unsupported convolution: {0}")]
    UnsupportedConvolution(String),
    #[error("degenerate threshold: {0}")]
    DegenerateThreshold(String),
    #[error("degenerate killing: laplace value is 1, the potential never kills")]
    DegenerateKilling,
    #[error("site {0} lies outside the box")]
    OutsideBox(String),
    #[error("iteration limit reached after {sweeps} sweeps (residual {residual:e})")]
    IterationLimit { sweeps: usize, residual: f64 },
    #[error("box radius cap reached; last values e(L={lo_radius})={lo:e}, e(L={hi_radius})={hi:e}")]
    BoxLimit {
        lo_radius: usize,
        lo: f64,
        hi_radius: usize,
        hi: f64,
    },
    #[error("corrupt field: transition weights at {site} sum to {sum}")]
    CorruptField { site: String, sum: f64 },
    #[error("infinite cost: every replica underflowed")]
    InfiniteCost,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
