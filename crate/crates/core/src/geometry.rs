//! Planar kinematics of the tactile leg.
//!
//! The body pose is expressed at the hip pivot of the tactile (front right)
//! leg. The foot swings on a horizontal circle of radius `hip_radius` around
//! that pivot; hip angle 0 puts the foot straight ahead along the body
//! heading and positive hip angles rotate it counter-clockwise.

use std::ops::{Add, Mul, Neg, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `deg` degrees counter-clockwise from +x.
    pub fn from_angle_deg(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self::new(c, s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Bearing of this vector in degrees, in `[-180, 180)`.
    pub fn bearing_deg(self) -> f64 {
        normalize_deg(self.y.atan2(self.x).to_degrees())
    }

    /// Rotate counter-clockwise by `deg` degrees about the origin.
    pub fn rotated_deg(self, deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Wrap an angle in degrees into `[-180, 180)`.
pub fn normalize_deg(deg: f64) -> f64 {
    let wrapped = (deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Body pose in the world frame. `position` is the tactile leg's hip pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    /// Degrees, counter-clockwise positive, kept in `[-180, 180)`.
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_deg(heading),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    /// Hip pivot to foot centre, mm.
    pub hip_radius: f64,
    /// Distance between adjacent feet, mm.
    pub foot_spacing: f64,
    /// Isotropic foot placement noise, mm.
    pub placement_noise_sigma: f64,
    /// Per-step heading noise, degrees.
    pub heading_drift_sigma: f64,
    /// Body advance per gait cycle, mm.
    pub step_length: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            hip_radius: 115.0,
            foot_spacing: 230.0,
            placement_noise_sigma: 1.5,
            heading_drift_sigma: 1.0,
            step_length: 40.0,
        }
    }
}

impl RobotParams {
    pub fn noise_free() -> Self {
        Self {
            placement_noise_sigma: 0.0,
            heading_drift_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hip_radius > 0.0) {
            return Err(invalid("hip_radius", "must be > 0"));
        }
        if !(self.placement_noise_sigma >= 0.0) {
            return Err(invalid("placement_noise_sigma", "must be >= 0"));
        }
        if !(self.heading_drift_sigma >= 0.0) {
            return Err(invalid("heading_drift_sigma", "must be >= 0"));
        }
        if !(self.step_length > 0.0) {
            return Err(invalid("step_length", "must be > 0"));
        }
        Ok(())
    }
}

fn invalid(field: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.to_owned(),
    }
}

/// A tap arc: `num_taps` evenly spaced hip angles centred on `center_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcSpec {
    pub center_angle: f64,
    pub half_extent: f64,
    pub num_taps: usize,
}

impl Default for ArcSpec {
    fn default() -> Self {
        Self {
            center_angle: 0.0,
            half_extent: 15.0,
            num_taps: 31,
        }
    }
}

impl ArcSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_taps < 3 || self.num_taps % 2 == 0 {
            return Err(invalid("num_taps", "must be odd and >= 3"));
        }
        if !(self.half_extent > 0.0) {
            return Err(invalid("half_extent", "must be > 0"));
        }
        Ok(())
    }

    /// Angular spacing between consecutive taps, degrees.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / (self.num_taps - 1) as f64
    }

    /// Hip angles of the arc in increasing order.
    pub fn angles(&self) -> Vec<f64> {
        let half = (self.num_taps / 2) as i64;
        let spacing = self.spacing();
        (-half..=half)
            .map(|k| self.center_angle + k as f64 * spacing)
            .collect()
    }

    /// An arc with the same spacing and centre, widened to at least `half_extent`.
    pub fn widened(&self, half_extent: f64) -> ArcSpec {
        let spacing = self.spacing();
        let half_steps = (half_extent / spacing - 1e-9).ceil().max(1.0) as usize;
        ArcSpec {
            center_angle: self.center_angle,
            half_extent: half_steps as f64 * spacing,
            num_taps: 2 * half_steps + 1,
        }
    }
}

/// Deterministic RNG for a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// World position of the foot centre at `hip_angle` degrees.
pub fn foot_position(pose: &Pose2D, params: &RobotParams, hip_angle: f64) -> Point2 {
    pose.position() + Point2::from_angle_deg(pose.heading + hip_angle) * params.hip_radius
}

/// Foot positions along a tap arc, paired with their hip angles.
pub fn arc_points(pose: &Pose2D, params: &RobotParams, arc: &ArcSpec) -> Vec<(f64, Point2)> {
    arc.angles()
        .into_iter()
        .map(|a| (a, foot_position(pose, params, a)))
        .collect()
}

pub fn apply_actuation_noise(point: Point2, params: &RobotParams, seed: u64) -> Point2 {
    let sigma = params.placement_noise_sigma;
    if sigma == 0.0 {
        return point;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated non-negative");
    let mut rng = seeded_rng(seed);
    let dx = normal.sample(&mut rng);
    let dy = normal.sample(&mut rng);
    point + Point2::new(dx, dy)
}

/// Turn the body so the heading points from the hip pivot at `target_foot`,
/// then advance `step_length` along the (noisy) new heading.
pub fn turn_and_step(
    pose: &Pose2D,
    params: &RobotParams,
    target_foot: Point2,
    seed: u64,
) -> Result<Pose2D> {
    let offset = target_foot - pose.position();
    let distance = offset.norm();
    let reach = 2.0 * params.hip_radius;
    if distance > reach || distance == 0.0 {
        return Err(Error::UnreachableTarget { distance, reach });
    }
    let mut heading = offset.bearing_deg();
    if params.heading_drift_sigma > 0.0 {
        let normal = Normal::new(0.0, params.heading_drift_sigma).expect("validated sigma");
        heading += normal.sample(&mut seeded_rng(seed));
    }
    let advance = Point2::from_angle_deg(heading) * params.step_length;
    let p = pose.position() + advance;
    Ok(Pose2D::new(p.x, p.y, heading))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    #[test]
    fn zero_angle_is_neutral_foothold() {
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let p = foot_position(&pose, &RobotParams::default(), 0.0);
        assert!((p.x - 115.0).abs() < EPS && p.y.abs() < EPS);
    }

    #[test]
    fn seven_degree_arc_length() {
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let params = RobotParams::default();
        let neutral = foot_position(&pose, &params, 0.0);
        let p = foot_position(&pose, &params, 7.0);
        // numeric rotation of the neutral point about the pivot
        let rotated = neutral.rotated_deg(7.0);
        assert!(p.distance(rotated) < EPS);
        // arc length r * theta
        let arc_len = 115.0 * 7.0_f64.to_radians();
        assert!((arc_len - 14.049_900_478_554_353).abs() < 1e-9);
        let chord = p.distance(neutral);
        let from_chord = 2.0 * 115.0 * (chord / 230.0).asin();
        assert!((from_chord - arc_len).abs() < 1e-9);
    }

    #[test]
    fn opposite_angles_mirror_about_heading_ray() {
        let pose = Pose2D::new(10.0, -4.0, 33.0);
        let params = RobotParams::default();
        let a = foot_position(&pose, &params, 12.0) - pose.position();
        let b = foot_position(&pose, &params, -12.0) - pose.position();
        let axis = Point2::from_angle_deg(33.0);
        assert!((a.dot(axis) - b.dot(axis)).abs() < EPS);
        assert!((a.dot(axis.perp()) + b.dot(axis.perp())).abs() < EPS);
    }

    #[test]
    fn arc_spacing_and_endpoints() {
        let arc = ArcSpec::default();
        assert_eq!(arc.spacing(), 1.0);
        let three = ArcSpec {
            num_taps: 3,
            ..ArcSpec::default()
        };
        assert_eq!(three.angles(), vec![-15.0, 0.0, 15.0]);
    }

    #[test]
    fn arc_points_on_circle() {
        let pose = Pose2D::new(-3.0, 8.0, -71.0);
        let params = RobotParams::default();
        let arc = ArcSpec {
            center_angle: 4.0,
            ..ArcSpec::default()
        };
        let pts = arc_points(&pose, &params, &arc);
        assert_eq!(pts.len(), 31);
        for w in pts.windows(2) {
            assert!(w[1].0 > w[0].0);
            let chord = w[1].1.distance(w[0].1);
            let arc_len = 2.0 * 115.0 * (chord / 230.0).asin();
            assert!((arc_len - 115.0 * 1.0_f64.to_radians()).abs() < 1e-9);
        }
        for (_, p) in &pts {
            assert!((p.distance(pose.position()) - 115.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_arc_rejected() {
        let even = ArcSpec {
            num_taps: 30,
            ..ArcSpec::default()
        };
        assert!(even.validate().is_err());
    }

    #[test]
    fn widened_arc_keeps_spacing() {
        let arc = ArcSpec::default().widened(22.5);
        assert_eq!(arc.spacing(), 1.0);
        assert_eq!(arc.num_taps, 47);
    }

    #[test]
    fn zero_noise_is_identity() {
        let p = Point2::new(1.25, -7.5);
        assert_eq!(apply_actuation_noise(p, &RobotParams::noise_free(), 99), p);
    }

    #[test]
    fn noise_std_and_determinism() {
        let params = RobotParams {
            placement_noise_sigma: 2.0,
            ..RobotParams::default()
        };
        let n = 10_000;
        let (mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0);
        for seed in 0..n {
            let p = apply_actuation_noise(Point2::ORIGIN, &params, seed);
            sx += p.x;
            sy += p.y;
            sxx += p.x * p.x;
            syy += p.y * p.y;
        }
        let n = n as f64;
        let std_x = (sxx / n - (sx / n).powi(2)).sqrt();
        let std_y = (syy / n - (sy / n).powi(2)).sqrt();
        assert!((std_x - 2.0).abs() < 0.1, "{std_x}");
        assert!((std_y - 2.0).abs() < 0.1, "{std_y}");
        let a = apply_actuation_noise(Point2::ORIGIN, &params, 5);
        let b = apply_actuation_noise(Point2::ORIGIN, &params, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn straight_step() {
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let params = RobotParams::noise_free();
        let next = turn_and_step(&pose, &params, Point2::new(115.0, 0.0), 1).unwrap();
        assert_eq!(next.heading, 0.0);
        assert!((next.x - 40.0).abs() < EPS && next.y.abs() < EPS);
    }

    #[test]
    fn left_target_turns_ccw() {
        let pose = Pose2D::new(0.0, 0.0, 10.0);
        let params = RobotParams::noise_free();
        let target = Point2::new(100.0, 40.0);
        let next = turn_and_step(&pose, &params, target, 1).unwrap();
        let expected = 40.0_f64.atan2(100.0).to_degrees();
        assert!((next.heading - expected).abs() < EPS);
        assert!(next.heading > 10.0);
    }

    #[test]
    fn pure_turn_keeps_position() {
        let pose = Pose2D::new(3.0, 4.0, 0.0);
        let params = RobotParams {
            step_length: 0.0,
            ..RobotParams::noise_free()
        };
        let next = turn_and_step(&pose, &params, Point2::new(3.0, 100.0), 1).unwrap();
        assert_eq!((next.x, next.y), (3.0, 4.0));
        assert!((next.heading - 90.0).abs() < EPS);
    }

    #[test]
    fn unreachable_target() {
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let err = turn_and_step(&pose, &RobotParams::default(), Point2::new(500.0, 0.0), 1);
        assert!(matches!(err, Err(Error::UnreachableTarget { .. })));
    }

    #[test]
    fn heading_normalization() {
        assert_eq!(normalize_deg(180.0), -180.0);
        assert_eq!(normalize_deg(-180.0), -180.0);
        assert!((normalize_deg(540.5) - (-179.5)).abs() < EPS);
        assert!((Pose2D::new(0.0, 0.0, 370.0).heading - 10.0).abs() < EPS);
    }
}
