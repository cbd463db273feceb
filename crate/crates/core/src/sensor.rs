//! Synthetic pin-array tactile tip.
//!
//! A hemispherical membrane carries white-tipped pins; pressing it onto a
//! surface bulges the pins outward from the apex where the membrane is
//! supported, and a partially supported tip shears toward the support. The
//! model is closed form:
//!
//! * support factor per pin `w = smoothstep(clamp(s_pin / edge_decay_length, 0, 1))`
//! * radial bulge `gain * depth * w * sqrt(1 - (r / tip_radius)^2)` outward
//! * shear `shear_gain * depth * (1 - w_c) * o` toward the supported side, with
//!   `w_c = clamp(s_0 / edge_decay_length + 0.5, 0, 1)` and `o` rising from
//!   0.9 to 1 while only the rim beyond the outermost pins is past the edge
//! * isotropic Gaussian pin noise
//!
//! where `s_pin` and `s_0` are signed edge distances of the pin's contact
//! point and of the foot centre. The tip is free (no deflection) once
//! `s_0 <= -tip_radius`.

use std::f64::consts::TAU;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{seeded_rng, Point2, Pose2D};
use crate::terrain::Terrain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinLayout {
    /// Rest positions in the sensor plane, mm. +x is the foot's forward axis.
    pub rest_positions: Vec<Point2>,
    pub ring_index: Vec<usize>,
}

impl Default for PinLayout {
    fn default() -> Self {
        Self::concentric(&[(6, 4.5), (10, 8.5), (14, 12.0)])
    }
}

impl PinLayout {
    /// Rings of `(count, radius_mm)`; odd rings are rotated by half a pitch.
    pub fn concentric(rings: &[(usize, f64)]) -> Self {
        let mut rest_positions = Vec::new();
        let mut ring_index = Vec::new();
        for (ring, &(count, radius)) in rings.iter().enumerate() {
            let offset = if ring % 2 == 1 { 0.5 } else { 0.0 };
            for j in 0..count {
                let a = TAU * (j as f64 + offset) / count as f64;
                rest_positions.push(Point2::new(radius * a.cos(), radius * a.sin()));
                ring_index.push(ring);
            }
        }
        Self {
            rest_positions,
            ring_index,
        }
    }

    pub fn len(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rest_positions.is_empty()
    }

    pub fn validate(&self, tip_radius: f64) -> Result<()> {
        if self.len() < 6 || self.ring_index.len() != self.len() {
            return Err(Error::InvalidParameter {
                field: "pin_layout",
                reason: format!("need >= 6 pins with ring indices, got {}", self.len()),
            });
        }
        if self.rest_positions.iter().any(|p| p.norm() >= tip_radius) {
            return Err(Error::InvalidParameter {
                field: "pin_layout",
                reason: "pin outside tip radius".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    pub tip_radius: f64,
    pub indent_depth: f64,
    pub deflection_gain: f64,
    pub edge_decay_length: f64,
    pub shear_gain: f64,
    pub pin_noise_sigma: f64,
    /// Extra indentation per mm of surface height.
    pub height_gain: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            tip_radius: 13.5,
            indent_depth: 2.0,
            deflection_gain: 1.0,
            edge_decay_length: 3.0,
            shear_gain: 0.5,
            pin_noise_sigma: 0.05,
            height_gain: 0.5,
        }
    }
}

impl SensorParams {
    pub fn noise_free() -> Self {
        Self {
            pin_noise_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidParameter {
                field,
                reason: reason.to_owned(),
            })
        };
        if !(self.tip_radius > 0.0) {
            return bad("tip_radius", "must be > 0");
        }
        if !(self.edge_decay_length > 0.0) {
            return bad("edge_decay_length", "must be > 0");
        }
        if !(self.pin_noise_sigma >= 0.0) {
            return bad("pin_noise_sigma", "must be >= 0");
        }
        if !(self.indent_depth >= 0.0) {
            return bad("indent_depth", "must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapMeta {
    pub hip_angle: f64,
    pub world_point: Point2,
    /// Foot yaw in the world frame, degrees.
    pub yaw: f64,
    /// Logical tap counter within a run.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapFrame {
    pub pin_positions: Vec<Point2>,
    pub contact_flag: bool,
    pub meta: TapMeta,
}

impl TapFrame {
    /// Flattened `(x1, y1, ..., xN, yN)`.
    pub fn flattened(&self) -> Vec<f64> {
        self.pin_positions.iter().flat_map(|p| [p.x, p.y]).collect()
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Noise-free pin displacements for a tap, in the sensor frame.
pub fn contact_deflections(
    layout: &PinLayout,
    params: &SensorParams,
    terrain: &Terrain,
    foot_center: Point2,
    foot_yaw: f64,
) -> (Vec<Point2>, bool) {
    let s0 = terrain.signed_edge_distance(foot_center);
    if s0 <= -params.tip_radius {
        return (vec![Point2::ORIGIN; layout.len()], false);
    }
    let depth =
        (params.indent_depth + params.height_gain * terrain.height_offset(foot_center)).max(0.0);
    let w_center = (s0 / params.edge_decay_length + 0.5).clamp(0.0, 1.0);
    // shear grows as the centre leaves the support; with only the rim past
    // the edge (no pin over it) it ramps in across that band
    let reach = layout.rest_positions.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let overlap = 0.9 + 0.1 * smoothstep((s0 + params.tip_radius) / (params.tip_radius - reach));
    let shear_world = terrain.inward_normal(foot_center)
        * (params.shear_gain * depth * (1.0 - w_center) * overlap);
    let shear = shear_world.rotated_deg(-foot_yaw);

    let deflections = layout
        .rest_positions
        .iter()
        .map(|&rest| {
            let world = foot_center + rest.rotated_deg(foot_yaw);
            let w = smoothstep(terrain.signed_edge_distance(world) / params.edge_decay_length);
            let r = rest.norm();
            let bulge = (1.0 - (r / params.tip_radius).powi(2)).max(0.0).sqrt();
            let radial = if r > 0.0 {
                rest * (params.deflection_gain * depth * w * bulge / r)
            } else {
                Point2::ORIGIN
            };
            radial + shear
        })
        .collect();
    (deflections, true)
}

/// One tap with the foot centre at `foot_center` and the tip rotated by
/// `foot_yaw` degrees. `meta.hip_angle` and `meta.timestamp` are left at 0
/// for the caller to fill.
pub fn simulate_tap(
    layout: &PinLayout,
    params: &SensorParams,
    terrain: &Terrain,
    foot_center: Point2,
    foot_yaw: f64,
    seed: u64,
) -> TapFrame {
    let (deflections, contact_flag) =
        contact_deflections(layout, params, terrain, foot_center, foot_yaw);
    let mut pins: Vec<Point2> = layout
        .rest_positions
        .iter()
        .zip(&deflections)
        .map(|(&rest, &d)| rest + d)
        .collect();
    if params.pin_noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.pin_noise_sigma).expect("validated sigma");
        let mut rng = seeded_rng(seed);
        for p in &mut pins {
            p.x += normal.sample(&mut rng);
            p.y += normal.sample(&mut rng);
        }
    }
    TapFrame {
        pin_positions: pins,
        contact_flag,
        meta: TapMeta {
            hip_angle: 0.0,
            world_point: foot_center,
            yaw: foot_yaw,
            timestamp: 0,
        },
    }
}

/// Tap once at every arc point. Each tap gets seed `seed + index`.
pub fn frame_distance_profile(
    layout: &PinLayout,
    params: &SensorParams,
    terrain: &Terrain,
    pose: &Pose2D,
    arc_points: &[(f64, Point2)],
    seed: u64,
) -> Vec<TapFrame> {
    arc_points
        .iter()
        .enumerate()
        .map(|(k, &(hip_angle, point))| {
            let mut frame = simulate_tap(
                layout,
                params,
                terrain,
                point,
                pose.heading + hip_angle,
                seed.wrapping_add(k as u64),
            );
            frame.meta.hip_angle = hip_angle;
            frame.meta.timestamp = k as u64;
            frame
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{arc_points, ArcSpec, RobotParams};

    fn setup() -> (PinLayout, SensorParams, Terrain) {
        (PinLayout::default(), SensorParams::noise_free(), Terrain::beam())
    }

    #[test]
    fn default_layout_valid() {
        let layout = PinLayout::default();
        assert_eq!(layout.len(), 30);
        layout.validate(13.5).unwrap();
    }

    #[test]
    fn full_contact_is_symmetric() {
        let (layout, params, terrain) = setup();
        let frame = simulate_tap(&layout, &params, &terrain, Point2::new(200.0, 1000.0), 0.0, 1);
        assert!(frame.contact_flag);
        // pure radial pattern: every displacement is parallel to its rest vector
        // and depends on radius only
        for (rest, p) in layout.rest_positions.iter().zip(&frame.pin_positions) {
            let d = *p - *rest;
            assert!((d.x * rest.y - d.y * rest.x).abs() < 1e-12);
            let expected = 2.0 * (1.0 - (rest.norm() / 13.5).powi(2)).sqrt();
            assert!((d.norm() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn far_off_edge_is_rest() {
        let (layout, params, terrain) = setup();
        let frame = simulate_tap(&layout, &params, &terrain, Point2::new(200.0, -20.0), 0.0, 1);
        assert!(!frame.contact_flag);
        assert_eq!(frame.pin_positions, layout.rest_positions);
    }

    #[test]
    fn on_edge_displacement_points_to_support() {
        let (layout, params, terrain) = setup();
        for yaw in [0.0, 17.0, -40.0] {
            let (d, contact) =
                contact_deflections(&layout, &params, &terrain, Point2::new(200.0, 0.0), yaw);
            assert!(contact);
            let mean = d.iter().fold(Point2::ORIGIN, |a, &b| a + b) * (1.0 / d.len() as f64);
            // supported side is world +y; express in sensor frame
            let inward = Point2::new(0.0, 1.0).rotated_deg(-yaw);
            assert!(mean.dot(inward) > 0.0);
            // pins whose contact point lies past the edge carry no radial part
            for (rest, di) in layout.rest_positions.iter().zip(&d) {
                let world = Point2::new(200.0, 0.0) + rest.rotated_deg(yaw);
                if world.y < 0.0 {
                    let radial = di.dot(*rest) / rest.norm();
                    let shear_radial = (inward * 0.5).dot(*rest) / rest.norm();
                    assert!((radial - shear_radial).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn profile_batch_contract() {
        let (layout, params, terrain) = setup();
        let robot = RobotParams::noise_free();
        let pose = Pose2D::new(-100.0, 500.0, 0.0);
        let pts = arc_points(&pose, &robot, &ArcSpec::default());
        let frames = frame_distance_profile(&layout, &params, &terrain, &pose, &pts, 0);
        assert_eq!(frames.len(), 31);
        for w in frames.windows(2) {
            assert!(w[1].meta.hip_angle > w[0].meta.hip_angle);
            assert_eq!(w[0].pin_positions, w[1].pin_positions);
        }
    }

    #[test]
    fn profile_across_edge_flags_contact() {
        let (layout, params, terrain) = setup();
        let robot = RobotParams::noise_free();
        let pose = Pose2D::new(-100.0, 0.0, 0.0);
        let pts = arc_points(&pose, &robot, &ArcSpec::default());
        let frames = frame_distance_profile(&layout, &params, &terrain, &pose, &pts, 0);
        for f in &frames {
            let s0 = terrain.signed_edge_distance(f.meta.world_point);
            assert_eq!(f.contact_flag, s0 > -13.5);
        }
        assert!(frames.first().map(|f| !f.contact_flag).unwrap());
        assert!(frames.last().map(|f| f.contact_flag).unwrap());
    }

    #[test]
    fn noise_is_seeded() {
        let (layout, _, terrain) = setup();
        let params = SensorParams::default();
        let a = simulate_tap(&layout, &params, &terrain, Point2::new(50.0, 3.0), 4.0, 7);
        let b = simulate_tap(&layout, &params, &terrain, Point2::new(50.0, 3.0), 4.0, 7);
        let c = simulate_tap(&layout, &params, &terrain, Point2::new(50.0, 3.0), 4.0, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
