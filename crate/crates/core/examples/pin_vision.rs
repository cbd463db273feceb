//! Render a camera image of the pins, detect the blobs and match them back to
//! pin positions. Writes `pins.pgm` to the working directory.
use tacfoot::geometry::Point2;
use tacfoot::sensor::simulate_tap;
use tacfoot::vision::{detect_pins, match_pins, render_image, DetectionParams, PixelMapping, DEFAULT_MM_TO_PX};
use tacfoot::{PinLayout, SensorParams, Terrain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let layout = PinLayout::default();
    let frame = simulate_tap(&layout, &SensorParams::default(), &Terrain::beam(), Point2::new(0.0, 8.0), 0.0, 3);

    for ambient in [0.0, 0.5] {
        let params = DetectionParams { ambient_level: ambient, ..DetectionParams::default() };
        let mapping = PixelMapping::for_image(DEFAULT_MM_TO_PX, params.image_width, params.image_height);
        let image = render_image(&frame.pin_positions, &params, &mapping, 7)?;
        if ambient == 0.0 {
            image.write_pgm(std::fs::File::create("pins.pgm")?)?;
        }
        let centroids = detect_pins(&image, &params);
        let pins = match_pins(&centroids, &layout.rest_positions, &mapping, params.gate_px)?;
        let worst = pins
            .iter()
            .zip(&frame.pin_positions)
            .map(|(a, b)| a.distance(*b) * DEFAULT_MM_TO_PX)
            .fold(0.0, f64::max);
        println!("ambient {ambient}: {} blobs, worst pin error {worst:.2} px", centroids.len());
    }
    Ok(())
}
