//! Color-wheel visualization of flow fields (the usual Middlebury wheel:
//! hue encodes direction, saturation encodes magnitude, zero flow is white,
//! unknown pixels are black).

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::metrics::is_unknown;

/// 55-entry color wheel with uneven segment lengths (RY/YG/GC/CB/BM/MR).
fn color_wheel() -> Vec<[f64; 3]> {
    const RY: usize = 15;
    const YG: usize = 6;
    const GC: usize = 4;
    const CB: usize = 11;
    const BM: usize = 13;
    const MR: usize = 6;
    let mut wheel = Vec::with_capacity(RY + YG + GC + CB + BM + MR);
    for i in 0..RY {
        wheel.push([255.0, 255.0 * i as f64 / RY as f64, 0.0]);
    }
    for i in 0..YG {
        wheel.push([255.0 - 255.0 * i as f64 / YG as f64, 255.0, 0.0]);
    }
    for i in 0..GC {
        wheel.push([0.0, 255.0, 255.0 * i as f64 / GC as f64]);
    }
    for i in 0..CB {
        wheel.push([0.0, 255.0 - 255.0 * i as f64 / CB as f64, 255.0]);
    }
    for i in 0..BM {
        wheel.push([255.0 * i as f64 / BM as f64, 0.0, 255.0]);
    }
    for i in 0..MR {
        wheel.push([255.0, 0.0, 255.0 - 255.0 * i as f64 / MR as f64]);
    }
    wheel
}

/// Magnitude used to normalize saturation: the 99th percentile over known
/// pixels (so a few outliers do not wash out the rest).
pub fn auto_max_motion(flow: &Field) -> f64 {
    let mut mags: Vec<f64> = Vec::with_capacity(flow.width() * flow.height());
    for y in 0..flow.height() {
        for x in 0..flow.width() {
            let v = flow.get(x, y);
            if !is_unknown(v) {
                mags.push((v[0] * v[0] + v[1] * v[1]).sqrt());
            }
        }
    }
    if mags.is_empty() {
        return 1.0;
    }
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((mags.len() - 1) as f64 * 0.99).round() as usize;
    let m = mags[idx];
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn pixel_color(wheel: &[[f64; 3]], u: f64, v: f64, max_motion: f64) -> [u8; 3] {
    let rad = ((u * u + v * v).sqrt() / max_motion).min(1.0);
    let angle = (-v).atan2(-u) / std::f64::consts::PI; // in (-1, 1]
    let fk = (angle + 1.0) / 2.0 * (wheel.len() as f64 - 1.0);
    let k0 = fk.floor() as usize % wheel.len();
    let k1 = (k0 + 1) % wheel.len();
    let f = fk - fk.floor();
    let mut out = [0u8; 3];
    for c in 0..3 {
        let col = (wheel[k0][c] / 255.0) * (1.0 - f) + (wheel[k1][c] / 255.0) * f;
        // Fade toward white as the magnitude drops.
        let col = 1.0 - rad * (1.0 - col);
        out[c] = (255.0 * col).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Render a flow field to RGB. `max_motion` overrides the automatic
/// 99th-percentile normalization.
pub fn flow_to_color(flow: &Field, max_motion: Option<f64>) -> RgbImage {
    let wheel = color_wheel();
    let max_motion = match max_motion {
        Some(m) if m > 0.0 => m,
        _ => auto_max_motion(flow),
    };
    let mut img = RgbImage::new(flow.width() as u32, flow.height() as u32);
    for y in 0..flow.height() {
        for x in 0..flow.width() {
            let uv = flow.get(x, y);
            let rgb = if is_unknown(uv) || !uv[0].is_finite() || !uv[1].is_finite() {
                [0, 0, 0]
            } else {
                pixel_color(&wheel, uv[0], uv[1], max_motion)
            };
            img.put_pixel(x as u32, y as u32, Rgb(rgb));
        }
    }
    img
}

/// Render and save as PNG.
pub fn write_flow_png(
    path: impl AsRef<Path>,
    flow: &Field,
    max_motion: Option<f64>,
) -> Result<()> {
    let path = path.as_ref();
    flow_to_color(flow, max_motion)
        .save(path)
        .map_err(|e| Error::ImageFormat {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}
