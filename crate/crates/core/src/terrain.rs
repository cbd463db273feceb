//! Support geometry: a narrow beam with one tracked edge, or a round table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Pose2D};

/// Piecewise-linear height offset along the beam axis. Knots are
/// `(axial_mm, height_mm)` sorted by axial position; values are held
/// constant beyond the first and last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightProfile {
    pub knots: Vec<(f64, f64)>,
}

impl HeightProfile {
    pub fn linear_ramp(from_axial: f64, to_axial: f64, rise: f64) -> Self {
        Self {
            knots: vec![(from_axial, 0.0), (to_axial, rise)],
        }
    }

    pub fn eval(&self, axial: f64) -> f64 {
        let knots = &self.knots;
        match knots.len() {
            0 => 0.0,
            1 => knots[0].1,
            _ => {
                if axial <= knots[0].0 {
                    return knots[0].1;
                }
                for w in knots.windows(2) {
                    let ((a0, h0), (a1, h1)) = (w[0], w[1]);
                    if axial <= a1 {
                        if a1 == a0 {
                            return h1;
                        }
                        let t = (axial - a0) / (a1 - a0);
                        return h0 + t * (h1 - h0);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }
}

/// A straight beam. The axis line is the tracked (outer) edge; the beam
/// surface extends `width` mm to the left of `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamTerrain {
    pub width: f64,
    pub origin: Point2,
    /// Axis direction, degrees.
    pub direction: f64,
    pub length: f64,
    pub height_profile: Option<HeightProfile>,
}

impl Default for BeamTerrain {
    fn default() -> Self {
        Self {
            width: 28.0,
            origin: Point2::ORIGIN,
            direction: 0.0,
            length: 500.0,
            height_profile: None,
        }
    }
}

impl BeamTerrain {
    fn axis(&self) -> Point2 {
        Point2::from_angle_deg(self.direction)
    }

    pub fn axial(&self, p: Point2) -> f64 {
        (p - self.origin).dot(self.axis())
    }

    pub fn lateral(&self, p: Point2) -> f64 {
        (p - self.origin).dot(self.axis().perp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableTerrain {
    pub radius: f64,
    pub center: Point2,
    /// Angular interval of the followed edge, degrees `[start, end]`.
    pub active_arc: (f64, f64),
}

impl Default for TableTerrain {
    fn default() -> Self {
        Self {
            radius: 590.0,
            center: Point2::ORIGIN,
            active_arc: (-90.0, 90.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terrain {
    Beam(BeamTerrain),
    Table(TableTerrain),
}

impl Terrain {
    pub fn beam() -> Self {
        Terrain::Beam(BeamTerrain::default())
    }

    pub fn table() -> Self {
        Terrain::Table(TableTerrain::default())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::InvalidParameter {
                field,
                reason: reason.to_owned(),
            })
        };
        match self {
            Terrain::Beam(b) => {
                if !(b.width > 0.0) {
                    return bad("width", "must be > 0");
                }
                if !(b.length > 0.0) {
                    return bad("length", "must be > 0");
                }
            }
            Terrain::Table(t) => {
                if !(t.radius > 0.0) {
                    return bad("radius", "must be > 0");
                }
            }
        }
        Ok(())
    }

    /// Distance to the tracked edge, positive on the supported side.
    pub fn signed_edge_distance(&self, p: Point2) -> f64 {
        match self {
            Terrain::Beam(b) => b.lateral(p),
            Terrain::Table(t) => t.radius - p.distance(t.center),
        }
    }

    /// Unit direction, at `p`, pointing from the tracked edge into the support.
    pub fn inward_normal(&self, p: Point2) -> Point2 {
        match self {
            Terrain::Beam(b) => b.axis().perp(),
            Terrain::Table(t) => {
                let d = t.center - p;
                let n = d.norm();
                if n == 0.0 {
                    Point2::new(1.0, 0.0)
                } else {
                    d * (1.0 / n)
                }
            }
        }
    }

    /// Safety criterion on the foot centre. `foot_radius` is accepted for
    /// stricter variants; the centre alone decides. The boundary counts as
    /// supported.
    pub fn is_supported(&self, foot_center: Point2, _foot_radius: f64) -> bool {
        let d = self.signed_edge_distance(foot_center);
        match self {
            Terrain::Beam(b) => {
                let axial = b.axial(foot_center);
                d >= 0.0 && d <= b.width && axial >= 0.0 && axial <= b.length
            }
            Terrain::Table(_) => d >= 0.0,
        }
    }

    pub fn surface_height(&self, p: Point2) -> Result<f64> {
        if !self.is_supported(p, 0.0) {
            return Err(Error::Unsupported);
        }
        Ok(self.height_offset(p))
    }

    /// Height profile at the point's axial coordinate, without a support check.
    pub fn height_offset(&self, p: Point2) -> f64 {
        match self {
            Terrain::Beam(b) => b
                .height_profile
                .as_ref()
                .map_or(0.0, |h| h.eval(b.axial(p))),
            Terrain::Table(_) => 0.0,
        }
    }

    /// A start pose whose neutral foothold sits on the tracked edge at the
    /// beginning of the followed section, heading along the edge.
    pub fn default_start_pose(&self, hip_radius: f64) -> Pose2D {
        match self {
            Terrain::Beam(b) => {
                let axis = b.axis();
                let p = b.origin + axis * (15.0 - hip_radius);
                Pose2D::new(p.x, p.y, b.direction)
            }
            Terrain::Table(t) => {
                let start = t.active_arc.0 + 10.0;
                let foot = t.center + Point2::from_angle_deg(start) * t.radius;
                let heading = start + 90.0;
                let p = foot - Point2::from_angle_deg(heading) * hip_radius;
                Pose2D::new(p.x, p.y, heading)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beam_centerline_is_half_width() {
        let t = Terrain::beam();
        assert_eq!(t.signed_edge_distance(Point2::new(100.0, 14.0)), 14.0);
    }

    #[test]
    fn table_distances() {
        let t = Terrain::table();
        assert!(t.signed_edge_distance(Point2::new(590.0, 0.0)).abs() < 1e-12);
        assert!((t.signed_edge_distance(Point2::new(0.0, -600.0)) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn support_queries() {
        let t = Terrain::beam();
        assert!(t.is_supported(Point2::new(100.0, 14.0), 13.5));
        assert!(!t.is_supported(Point2::new(100.0, -1.0), 13.5));
        assert!(t.is_supported(Point2::new(100.0, 0.0), 13.5));
        assert!(!t.is_supported(Point2::new(100.0, 29.0), 13.5));
        assert!(!t.is_supported(Point2::new(-5.0, 10.0), 13.5));
    }

    #[test]
    fn heights() {
        let t = Terrain::beam();
        assert_eq!(t.surface_height(Point2::new(50.0, 5.0)).unwrap(), 0.0);
        let ramp = Terrain::Beam(BeamTerrain {
            height_profile: Some(HeightProfile::linear_ramp(0.0, 400.0, 2.0)),
            ..BeamTerrain::default()
        });
        assert!((ramp.surface_height(Point2::new(200.0, 10.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            ramp.surface_height(Point2::new(200.0, -3.0)),
            Err(Error::Unsupported)
        ));
    }

    #[test]
    fn rotated_beam() {
        let t = Terrain::Beam(BeamTerrain {
            direction: 90.0,
            origin: Point2::new(10.0, 0.0),
            ..BeamTerrain::default()
        });
        // interior is to the left of +y, i.e. towards -x
        assert!((t.signed_edge_distance(Point2::new(0.0, 50.0)) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn table_start_pose_neutral_on_edge() {
        let t = Terrain::table();
        let pose = t.default_start_pose(115.0);
        let foot = crate::geometry::foot_position(&pose, &crate::geometry::RobotParams::default(), 0.0);
        assert!(t.signed_edge_distance(foot).abs() < 1e-9);
    }

    #[test]
    fn serde_tagged() {
        let json = serde_json::to_string(&Terrain::table()).unwrap();
        assert!(json.contains("\"kind\":\"table\""));
        let back: Terrain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Terrain::table());
    }
}
