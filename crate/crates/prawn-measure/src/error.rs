use thiserror::Error;

/// Errors produced anywhere in the measurement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed annotation document; `offset` is the byte position of the
    /// first unparseable token when known.
    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    /// Binary payload (PGM, raw depth) does not match the declared shape.
    #[error("format error: {0}")]
    Format(String),

    /// Config document failed validation; `field` names the offending key.
    #[error("config error in `{field}`: {msg}")]
    Config { field: String, msg: String },

    /// Mask or polygon with no interior pixels.
    #[error("empty mask")]
    EmptyMask,

    /// Not enough usable samples to fit or measure.
    #[error("too sparse: {0}")]
    TooSparse(String),

    /// Depth value outside the physically meaningful range.
    #[error("invalid depth {0}")]
    InvalidDepth(f64),

    /// Region kinds cannot be compared (box vs mask, or mask dims differ).
    #[error("region kind mismatch: {0}")]
    Kind(String),

    /// Tracker stepped with a frame index that is not strictly increasing.
    #[error("out-of-order frame: got {got}, last was {last}")]
    Order { got: u64, last: u64 },

    /// Trend fit over points with no spread on the x axis.
    #[error("degenerate x axis: all points share doc {0}")]
    DegenerateX(u32),

    /// Report requested but no accepted measurement exists.
    #[error("empty report: no accepted measurements")]
    EmptyReport,

    /// Synthetic scene specification is unusable.
    #[error("scene spec error: {0}")]
    Spec(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
