//! Collect one arc of taps over the beam edge, pick the reference tap, label
//! the arc by alignment and fit the Gaussian process. Then query it.
use tacfoot::geometry::{arc_points, foot_position};
use tacfoot::perception::{align_arc, select_reference, GpConfig, ReferenceOptions};
use tacfoot::sensor::simulate_tap;
use tacfoot::{ArcSpec, FeatureVector, GpModel, PinLayout, RobotParams, SensorParams, Terrain};

fn main() -> tacfoot::Result<()> {
    let robot = RobotParams::default();
    let sensor = SensorParams::default();
    let layout = PinLayout::default();
    let beam = Terrain::beam();
    let pose = beam.default_start_pose(robot.hip_radius);
    let tap = |angle: f64, seed: u64| {
        let p = foot_position(&pose, &robot, angle);
        FeatureVector::from(&simulate_tap(&layout, &sensor, &beam, p, pose.heading + angle, seed))
    };

    let arc: Vec<_> = arc_points(&pose, &robot, &ArcSpec::default())
        .into_iter()
        .enumerate()
        .map(|(i, (a, _))| (a, tap(a, i as u64)))
        .collect();
    let rest = FeatureVector(layout.rest_positions.iter().flat_map(|p| [p.x, p.y]).collect());
    let reference = select_reference(&arc, &rest, 0, &ReferenceOptions::default())?;
    let alignment = align_arc(&arc, &reference)?;
    println!(
        "reference tap {}, edge at {:.2} deg (boundary {})",
        reference.source.tap_index, alignment.edge_angle, alignment.boundary
    );

    let model = GpModel::with_training(GpConfig::default(), alignment.labeled.clone()).fit()?;
    println!("{:?}", model.hyperparameters());
    for offset in [-4.0, -2.0, 0.0, 2.0, 4.0] {
        let p = model.predict(&tap(alignment.edge_angle + offset, 1000))?;
        println!("true {offset:>5.1} deg  predicted {:>6.2} +- {:.2}", p.angle, p.std);
    }
    Ok(())
}
