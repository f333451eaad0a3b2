use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("trial windows are misaligned: {0}")]
    MisalignedWindows(String),

    #[error("degenerate series: zero variance")]
    DegenerateSeries,

    #[error("series too short: {len} values, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero-magnitude vector")]
    ZeroVector,

    #[error("signature does not cover days [{start}, {end})")]
    CoverageGap { start: u32, end: u32 },

    #[error("window [{start}, {end}) outside signature range [0, {horizon})")]
    OutOfRange { start: u32, end: u32, horizon: u32 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("existing signature is constant over window [{start}, {end})")]
    DegenerateWindow { start: u32, end: u32 },

    #[error("action requested on a verdict that reported no change")]
    ActionOnNegativeVerdict,

    #[error("non-monotone time: day {day} recorded after day {last}")]
    NonMonotoneTime { day: u32, last: u32 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("insufficient data: {rows} rows, need at least {needed}")]
    InsufficientData { rows: usize, needed: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by malformed input files or configuration, as opposed
    /// to well-formed input that violates a domain precondition.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InsufficientData { .. }
                | Error::Config(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
