//! Tactile edge following for a legged robot with a pin-array foot sensor.
//!
//! The crate simulates a quadruped's sensing foot tapping along the edge of
//! a narrow beam or a round table, reads the pin pattern (optionally through
//! a rendered camera image), learns online a Gaussian-process map from pin
//! coordinates to the foot's angular displacement from the edge, and plants
//! footholds a fixed angle inside the located edge.
//!
//! See `examples/` for one runnable program per capability.

pub mod controller;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod perception;
pub mod sensor;
pub mod terrain;
pub mod vision;

pub use controller::{
    control_step, initialize, run, search_edge, ControllerConfig, ControllerState, Scenario,
    StepRecord, TrajectoryLog,
};
pub use error::{Error, Result};
pub use geometry::{ArcSpec, Point2, Pose2D, RobotParams};
pub use perception::{FeatureVector, GpModel};
pub use sensor::{PinLayout, SensorParams, TapFrame};
pub use terrain::Terrain;
