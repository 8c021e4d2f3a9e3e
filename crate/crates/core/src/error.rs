use crate::field::{Point, XBranch};
use crate::flow::StopEvent;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("step size underflow at t = {t} near ({}, {})", p.x, p.y)]
    StepSizeUnderflow { t: f64, p: Point },

    #[error("field evaluation produced a non-finite value near ({}, {})", p.x, p.y)]
    NonFiniteField { p: Point },

    #[error("time {t} outside trajectory span [{lo}, {hi}]")]
    OutsideSpan { t: f64, lo: f64, hi: f64 },

    #[error("flow line through ({}, {}) terminated without a classifying event: {event:?}", p.x, p.y)]
    Unclassified { p: Point, event: StopEvent },

    #[error("point ({}, {}) does not lie on branch {branch:?}", p.x, p.y)]
    OffBranch { p: Point, branch: XBranch },

    #[error("level must be positive, got {0}")]
    NonpositiveLevel(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gradient evaluation failed at ({}, {}): {reason}", p.x, p.y)]
    GradientFailure { p: Point, reason: String },

    #[error("too many grid evaluation failures: {failed} of {total}")]
    GridFailure { failed: usize, total: usize },

    #[error("trajectory escaped the working region at ({}, {})", p.x, p.y)]
    Escaped { p: Point },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
