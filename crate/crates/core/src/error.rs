use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point fell outside the validity box of a chart.
    #[error("{model}: point outside chart ({bound})")]
    Domain { model: String, bound: String },

    #[error("{op} is not supported for {model}")]
    Unsupported { op: &'static str, model: String },

    /// Coordinate singularity of a chart that is not a geometric singularity (axis, poles).
    #[error("singular coordinates: {0}")]
    SingularCoordinates(String),

    #[error("negative radicand {radicand:e} at x = {x}")]
    TurningPoint { x: f64, radicand: f64 },

    #[error("integration range crosses a root of the radicand near {root}; split the range there")]
    SplitRequired { root: f64 },

    #[error("degenerate constants: {0}")]
    Degenerate(String),

    #[error("root bracketing failed on [{lo}, {hi}]: f(lo) = {flo:e}, f(hi) = {fhi:e}")]
    Bracket { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
