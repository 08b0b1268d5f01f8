//! Built-in 64x64 test objects: a binary horse silhouette and a grayscale
//! house. Both keep their minimum value at pixel (1,1), the one pixel the
//! centred correlation estimator cannot recover for Gold and Hadamard
//! matrices.

use crate::error::{Error, Result};
use crate::gi::ObjectImage;
use crate::image::{Geometry, Image};

pub const SIZE: usize = 64;

fn raster(f: impl Fn(f64, f64) -> f64) -> ObjectImage {
    let mut data = Vec::with_capacity(SIZE * SIZE);
    for y in 0..SIZE {
        for x in 0..SIZE {
            data.push(f(x as f64, y as f64));
        }
    }
    let g = Geometry::new(SIZE, SIZE).expect("nonzero");
    ObjectImage::new(Image::new(g, data).expect("64x64")).expect("values in [0, 1]")
}

fn ellipse(x: f64, y: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
    let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
    dx * dx + dy * dy < 1.0
}

/// Binary horse silhouette (ones on a zero background).
pub fn horse() -> ObjectImage {
    raster(|x, y| {
        let body = ellipse(x, y, 32.0, 30.0, 14.0, 7.0);
        let neck = ((x - 44.0) - (30.0 - y) * 0.6).abs() < 3.0 && y > 14.0 && y < 30.0;
        let head = ellipse(x, y, 50.0, 14.0, 6.0, 3.0);
        let legs = [22.0, 26.0, 38.0, 42.0]
            .iter()
            .any(|lx| (x - lx).abs() < 1.5 && y > 30.0 && y < 52.0);
        let tail = ((x - 17.0) + (y - 28.0) * 0.5).abs() < 1.5 && y > 26.0 && y < 42.0;
        if body || neck || head || legs || tail {
            1.0
        } else {
            0.0
        }
    })
}

/// Grayscale house: sky gradient, roof, walls, door, windows and ground.
pub fn house() -> ObjectImage {
    raster(|x, y| {
        let in_rect = |x0: f64, y0: f64, x1: f64, y1: f64| x >= x0 && x < x1 && y >= y0 && y < y1;
        if y >= 54.0 {
            return 0.45;
        }
        if in_rect(26.0, 38.0, 34.0, 54.0) {
            return 0.2; // door
        }
        if in_rect(16.0, 36.0, 23.0, 43.0) || in_rect(38.0, 36.0, 45.0, 43.0) {
            return 0.95; // windows
        }
        if in_rect(12.0, 30.0, 50.0, 54.0) {
            return 0.65; // walls
        }
        // roof: triangle with apex at (31, 12) and base y = 30
        if (12.0..30.0).contains(&y) && (x - 31.0).abs() < (y - 12.0) * 1.15 {
            return 0.35;
        }
        if in_rect(40.0, 14.0, 44.0, 24.0) {
            return 0.5; // chimney
        }
        0.1 * (x + y) / 126.0 // sky, zero at the top-left corner
    })
}

/// Resolve a built-in name ("horse" or "house").
pub fn builtin(name: &str) -> Result<ObjectImage> {
    match name {
        "horse" => Ok(horse()),
        "house" => Ok(house()),
        _ => Err(Error::Parse(format!(
            "unknown built-in object {name:?} (expected horse|house)"
        ))),
    }
}
