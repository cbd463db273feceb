//! Online tactile perception: pin-pattern dissimilarity, self-labelling of tap
//! arcs against a reference tap, and GP regression from raw pin coordinates
//! to the hip-angle displacement of the edge.

mod alignment;
mod gp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::TapFrame;

pub use alignment::{align_arc, select_reference, Alignment, ReferenceOptions};
pub use gp::{GpCheckpoint, GpConfig, GpModel, Hyperparameters, Prediction};

/// Flattened `(x1, y1, ..., xN, yN)` pin coordinates in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn pin_count(&self) -> usize {
        self.0.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl From<&TapFrame> for FeatureVector {
    fn from(frame: &TapFrame) -> Self {
        FeatureVector(frame.flattened())
    }
}

/// A tap labelled with its hip-angle displacement from the edge, degrees
/// (0 means the foot is on the edge, positive toward the support).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledTap {
    pub feature: FeatureVector,
    pub label: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapSource {
    pub arc_id: usize,
    pub tap_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTap {
    pub feature: FeatureVector,
    pub source: TapSource,
}

/// Root-mean-square distance between corresponding pins, mm.
pub fn dissimilarity(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.len() != b.len() || a.len() % 2 != 0 {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok((a.squared_distance(b) / a.pin_count() as f64).sqrt())
}
