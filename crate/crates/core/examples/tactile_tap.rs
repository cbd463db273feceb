//! Slide a single tap across the beam edge and print how the pin pattern
//! changes: mean deflection and dissimilarity to a fully supported tap.
use tacfoot::geometry::Point2;
use tacfoot::perception::{dissimilarity, FeatureVector};
use tacfoot::sensor::simulate_tap;
use tacfoot::{PinLayout, SensorParams, Terrain};

fn main() {
    let layout = PinLayout::default();
    let params = SensorParams::noise_free();
    let beam = Terrain::beam();
    // tracked edge along y = 0, beam centre at y = 14
    let tap = |s0: f64| simulate_tap(&layout, &params, &beam, Point2::new(100.0, s0), 0.0, 0);
    let supported = FeatureVector::from(&tap(14.0));

    println!("edge_dist_mm  contact  mean_defl_mm  dissim_to_supported");
    for k in 0..=30 {
        let s0 = 14.0 - k as f64;
        let frame = tap(s0);
        let mean = frame
            .pin_positions
            .iter()
            .zip(&layout.rest_positions)
            .map(|(p, r)| (*p - *r).norm())
            .sum::<f64>()
            / layout.len() as f64;
        let d = dissimilarity(&FeatureVector::from(&frame), &supported).unwrap();
        println!("{s0:>12.1}  {:>7}  {mean:>12.3}  {d:>19.3}", frame.contact_flag);
    }
}
