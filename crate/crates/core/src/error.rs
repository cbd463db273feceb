use thiserror::Error;

/// Errors produced anywhere in the simulation, perception and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("target foot position is {distance:.1} mm from the hip pivot, beyond reach {reach:.1} mm")]
    UnreachableTarget { distance: f64, reach: f64 },

    #[error("point is not on the supported surface")]
    Unsupported,

    #[error("pin maps to ({x:.1}, {y:.1}) px, outside the {width}x{height} image")]
    OutOfFrame { x: f64, y: f64, width: usize, height: usize },

    #[error("tracking lost: matched {matched} of {expected} reference pins")]
    TrackingLost { matched: usize, expected: usize },

    #[error("feature length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("arc has {0} taps, at least 3 required")]
    DegenerateArc(usize),

    #[error("arc never crossed the edge (deflection range {range:.4} mm below floor {floor:.4} mm)")]
    NoTransition { range: f64, floor: f64 },

    #[error("kernel factorization failed after jitter escalation")]
    SingularKernel,

    #[error("model has not been fitted")]
    Unfitted,

    #[error("insufficient training data: {0} taps, at least 2 required")]
    InsufficientData(usize),

    #[error("edge lost: dissimilarity minimum at arc end (hip angle {hip_angle:.2} deg)")]
    EdgeLost { hip_angle: f64 },

    #[error("edge search exhausted after {sweeps} sweeps")]
    SearchExhausted { sweeps: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
