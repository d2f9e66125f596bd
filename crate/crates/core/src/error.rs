use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("ellipticity failure at {node}: sampled minimum {min_value:.3e} is below {witness:.3e}")]
    Ellipticity { node: String, min_value: f64, witness: f64 },

    #[error("derivative order {0} exceeds the supported maximum of 2")]
    DerivativeOrder(usize),

    #[error("density `{name}` failed validation: {message}")]
    Density { name: String, message: String },

    #[error("Neumann series diverged for {what}: contraction factor {factor:.3e}")]
    NeumannDivergence { what: String, factor: f64 },

    #[error("implicit midpoint iteration did not converge at step {step} (residual {residual:.3e})")]
    Midpoint { step: usize, residual: f64 },

    #[error("linear flow blew up at step {step}: norm ratio {ratio:.3e}")]
    BlowUp { step: usize, ratio: f64 },

    #[error("Picard iteration failed: {0}")]
    Picard(String),

    #[error("dense materialization of {size} modes exceeds the cap {cap}")]
    DenseCap { size: usize, cap: usize },

    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Invalid { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }
}
