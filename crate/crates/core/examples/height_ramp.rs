//! Train on a flat beam, then tap near the edge where the beam has risen or
//! dropped by 2 mm. The changed indentation biases the predicted displacement.
use tacfoot::controller::initialize;
use tacfoot::geometry::foot_position;
use tacfoot::sensor::simulate_tap;
use tacfoot::terrain::{BeamTerrain, HeightProfile};
use tacfoot::{ControllerConfig, FeatureVector, Scenario, Terrain};

fn main() -> tacfoot::Result<()> {
    let flat = Scenario::beam();
    let state = initialize(&ControllerConfig::default(), &flat, 0)?;
    let mut pose = state.pose;
    pose.x += 450.0 - foot_position(&pose, &flat.robot, 0.0).x;

    for rise in [0.0, 2.0, -2.0] {
        let terrain = Terrain::Beam(BeamTerrain {
            height_profile: Some(HeightProfile::linear_ramp(100.0, 450.0, rise)),
            ..BeamTerrain::default()
        });
        print!("rise {rise:>4.1} mm:");
        for a in [-10.0, -7.0, -4.0] {
            let point = foot_position(&pose, &flat.robot, a);
            let frame = simulate_tap(&flat.layout, &flat.sensor, &terrain, point, pose.heading + a, 5);
            let p = state.model.predict(&FeatureVector::from(&frame))?;
            print!("  hip {a:>5.1} -> {:>6.2} deg", p.angle);
        }
        println!();
    }
    Ok(())
}
