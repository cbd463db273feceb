//! Synthetic sensor-camera images and pin recovery by blob detection.
//!
//! Pins are drawn as Gaussian spots on a dark background lit by ambient
//! light. Camera noise is spatially correlated (a box-blurred Gaussian
//! field), which is what lets a too-low threshold pick up background blobs
//! in dim light.

use std::collections::VecDeque;
use std::io::Write;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{seeded_rng, Point2};

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Binary PGM (P5).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    pub threshold: u8,
    pub min_area: usize,
    pub max_area: usize,
    /// 0 = dark room, 1 = bright.
    pub ambient_level: f64,
    /// Phosphorescent pin glow, 0..1.
    pub pin_brightness: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub spot_sigma_px: f64,
    /// Std of the correlated camera noise, intensity units.
    pub pixel_noise_sigma: f64,
    /// Matching gate, px.
    pub gate_px: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            threshold: 128,
            min_area: 6,
            max_area: 400,
            ambient_level: 0.0,
            pin_brightness: 1.0,
            image_width: 640,
            image_height: 480,
            spot_sigma_px: 2.0,
            pixel_noise_sigma: 3.0,
            gate_px: 8.0,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_area >= self.max_area {
            return Err(Error::InvalidParameter {
                field: "min_area",
                reason: "must be below max_area".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.ambient_level) || !(0.0..=1.0).contains(&self.pin_brightness)
        {
            return Err(Error::InvalidParameter {
                field: "ambient_level",
                reason: "ambient_level and pin_brightness must lie in [0, 1]".into(),
            });
        }
        Ok(())
    }
}

/// Sensor-plane mm to image px: `px = center + scale * mm` on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelMapping {
    pub scale: f64,
    pub center: Point2,
}

impl PixelMapping {
    pub fn for_image(scale: f64, width: usize, height: usize) -> Self {
        Self {
            scale,
            center: Point2::new(width as f64 / 2.0, height as f64 / 2.0),
        }
    }

    pub fn to_px(&self, mm: Point2) -> Point2 {
        self.center + mm * self.scale
    }

    pub fn to_mm(&self, px: Point2) -> Point2 {
        (px - self.center) * (1.0 / self.scale)
    }
}

pub const DEFAULT_MM_TO_PX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
    pub area: usize,
}

impl Centroid {
    pub fn point(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

pub fn render_image(
    pins_mm: &[Point2],
    params: &DetectionParams,
    mapping: &PixelMapping,
    seed: u64,
) -> Result<GrayImage> {
    let (w, h) = (params.image_width, params.image_height);
    let centers: Vec<Point2> = pins_mm.iter().map(|&p| mapping.to_px(p)).collect();
    if let Some(c) = centers
        .iter()
        .find(|c| !(c.x >= 0.0 && c.y >= 0.0 && c.x < w as f64 && c.y < h as f64))
    {
        return Err(Error::OutOfFrame {
            x: c.x,
            y: c.y,
            width: w,
            height: h,
        });
    }

    let mut field = vec![255.0 * params.ambient_level * 0.15; w * h];
    if params.pixel_noise_sigma > 0.0 {
        let noise = correlated_noise(w, h, params.pixel_noise_sigma, seed);
        for (f, n) in field.iter_mut().zip(noise) {
            *f += n;
        }
    }

    let peak = 255.0 * (params.pin_brightness + 0.3 * params.ambient_level).clamp(0.0, 1.0);
    if peak > 0.0 {
        let sigma = params.spot_sigma_px;
        let reach = (4.0 * sigma).ceil() as i64;
        let inv = 1.0 / (2.0 * sigma * sigma);
        for c in &centers {
            let (cx, cy) = (c.x.round() as i64, c.y.round() as i64);
            for y in (cy - reach).max(0)..=(cy + reach).min(h as i64 - 1) {
                for x in (cx - reach).max(0)..=(cx + reach).min(w as i64 - 1) {
                    // pixel centres sit at integer coordinates
                    let dx = x as f64 - c.x;
                    let dy = y as f64 - c.y;
                    field[y as usize * w + x as usize] += peak * (-(dx * dx + dy * dy) * inv).exp();
                }
            }
        }
    }

    Ok(GrayImage {
        width: w,
        height: h,
        pixels: field.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect(),
    })
}

/// Gaussian noise blurred by a 5x5 box and rescaled to `sigma`.
fn correlated_noise(w: usize, h: usize, sigma: f64, seed: u64) -> Vec<f64> {
    const R: i64 = 2;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = seeded_rng(seed);
    let raw: Vec<f64> = (0..w * h).map(|_| normal.sample(&mut rng)).collect();
    let count = ((2 * R + 1) * (2 * R + 1)) as f64;
    // interior pixels average `count` iid samples: std 1/sqrt(count)
    let scale = sigma * count.sqrt() / count;
    let mut out = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for dy in -R..=R {
                let yy = (y + dy).clamp(0, h as i64 - 1) as usize;
                for dx in -R..=R {
                    let xx = (x + dx).clamp(0, w as i64 - 1) as usize;
                    acc += raw[yy * w + xx];
                }
            }
            out[y as usize * w + x as usize] = acc * scale;
        }
    }
    out
}

/// Threshold, label 4-connected components, keep those within the area
/// gate, and return intensity-weighted centroids sorted by `(y, x)`.
pub fn detect_pins(image: &GrayImage, params: &DetectionParams) -> Vec<Centroid> {
    let (w, h) = (image.width, image.height);
    let mut visited = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut out = Vec::new();
    for start in 0..w * h {
        if visited[start] || image.pixels[start] <= params.threshold {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let (mut area, mut sw, mut sx, mut sy) = (0usize, 0.0, 0.0, 0.0);
        while let Some(idx) = queue.pop_front() {
            let (x, y) = (idx % w, idx / w);
            // weight by excess over the threshold
            let v = (image.pixels[idx] - params.threshold) as f64;
            area += 1;
            sw += v;
            sx += v * x as f64;
            sy += v * y as f64;
            let mut visit = |n: usize| {
                if !visited[n] && image.pixels[n] > params.threshold {
                    visited[n] = true;
                    queue.push_back(n);
                }
            };
            if x > 0 {
                visit(idx - 1);
            }
            if x + 1 < w {
                visit(idx + 1);
            }
            if y > 0 {
                visit(idx - w);
            }
            if y + 1 < h {
                visit(idx + w);
            }
        }
        if area >= params.min_area && area <= params.max_area && sw > 0.0 {
            out.push(Centroid {
                x: sx / sw,
                y: sy / sw,
                area,
            });
        }
    }
    out.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    out
}

/// Assign detected centroids to the ordered reference pins by repeated
/// mutual-nearest-neighbour passes within the gate. Unmatched pins keep
/// their reference position. Returns pin positions in mm, in reference order.
pub fn match_pins(
    centroids: &[Centroid],
    reference_mm: &[Point2],
    mapping: &PixelMapping,
    gate_px: f64,
) -> Result<Vec<Point2>> {
    let n = reference_mm.len();
    let lost = |matched| Error::TrackingLost {
        matched,
        expected: n,
    };
    let count = centroids.len() as f64;
    if count < 0.8 * n as f64 || count > 1.2 * n as f64 {
        return Err(lost(0));
    }
    let reference_px: Vec<Point2> = reference_mm.iter().map(|&p| mapping.to_px(p)).collect();
    let mut pin_to_centroid: Vec<Option<usize>> = vec![None; n];
    let mut centroid_taken = vec![false; centroids.len()];

    loop {
        let nearest_centroid = |pin: usize| {
            centroids
                .iter()
                .enumerate()
                .filter(|(c, _)| !centroid_taken[*c])
                .map(|(c, cen)| (c, cen.point().distance(reference_px[pin])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        let nearest_pin = |c: usize| {
            (0..n)
                .filter(|p| pin_to_centroid[*p].is_none())
                .map(|p| (p, centroids[c].point().distance(reference_px[p])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        let mut pairs = Vec::new();
        for pin in (0..n).filter(|p| pin_to_centroid[*p].is_none()) {
            if let Some((c, d)) = nearest_centroid(pin) {
                if d <= gate_px && nearest_pin(c).map(|(p, _)| p) == Some(pin) {
                    pairs.push((pin, c));
                }
            }
        }
        if pairs.is_empty() {
            break;
        }
        for (pin, c) in pairs {
            pin_to_centroid[pin] = Some(c);
            centroid_taken[c] = true;
        }
    }

    let matched = pin_to_centroid.iter().filter(|m| m.is_some()).count();
    if (matched as f64) < 0.8 * n as f64 {
        return Err(lost(matched));
    }
    Ok(pin_to_centroid
        .iter()
        .zip(reference_mm)
        .map(|(m, &r)| m.map_or(r, |c| mapping.to_mm(centroids[c].point())))
        .collect())
}

/// CSV with header `x_px,y_px,area`.
pub fn centroids_csv(centroids: &[Centroid]) -> String {
    let mut s = String::from("x_px,y_px,area\n");
    for c in centroids {
        s.push_str(&format!("{:.4},{:.4},{}\n", c.x, c.y, c.area));
    }
    s
}
