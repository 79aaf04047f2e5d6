//! Image ingestion, normalization, smoothing, sampling and gradients.
//!
//! Images are `Grid`s of f64 intensities, nominally in [0, 255]. Loading
//! accepts PGM (P2/P5) and PNG; color inputs are reduced to luma with the
//! 0.299/0.587/0.114 weights before the [0, 255] rescale.

use std::io::Write;
use std::path::Path;

use image::DynamicImage;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Smoothing applied once to the full-resolution pyramid level.
pub const SIGMA0: f64 = 0.6;

/// Load a raster image and rescale it so min -> 0 and max -> 255.
///
/// A constant image maps to all zeros (the rescale would otherwise divide
/// by zero).
pub fn load_image(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let dyn_img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::ImageFormat {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let raw = decode_to_gray(&dyn_img);
    if raw.width() == 0 || raw.height() == 0 {
        return Err(Error::ZeroDimension {
            width: raw.width(),
            height: raw.height(),
        });
    }
    Ok(normalize_range(&raw))
}

fn decode_to_gray(img: &DynamicImage) -> Grid {
    use DynamicImage::*;
    match img {
        ImageLuma8(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            b.get_pixel(x as u32, y as u32)[0] as f64
        }),
        ImageLuma16(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            b.get_pixel(x as u32, y as u32)[0] as f64
        }),
        ImageLumaA8(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            b.get_pixel(x as u32, y as u32)[0] as f64
        }),
        ImageLumaA16(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            b.get_pixel(x as u32, y as u32)[0] as f64
        }),
        ImageRgb8(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            let p = b.get_pixel(x as u32, y as u32);
            LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64
        }),
        ImageRgba8(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            let p = b.get_pixel(x as u32, y as u32);
            LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64
        }),
        ImageRgb16(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            let p = b.get_pixel(x as u32, y as u32);
            LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64
        }),
        ImageRgba16(b) => Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
            let p = b.get_pixel(x as u32, y as u32);
            LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64
        }),
        other => {
            let b = other.to_rgb32f();
            Grid::from_fn(b.width() as usize, b.height() as usize, |x, y| {
                let p = b.get_pixel(x as u32, y as u32);
                LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64
            })
        }
    }
}

/// Rescale one grid so min -> 0, max -> 255; constant grids go to zero.
pub fn normalize_range(img: &Grid) -> Grid {
    let (lo, hi) = img.min_max();
    if hi <= lo {
        return Grid::zeros(img.width(), img.height());
    }
    let span = hi - lo;
    img.map(|v| (v - lo) * 255.0 / span)
}

/// Rescale a pair with a shared min/max so relative brightness between the
/// frames is preserved.
pub fn normalize_pair(a: &Grid, b: &Grid) -> (Grid, Grid) {
    let (la, ha) = a.min_max();
    let (lb, hb) = b.min_max();
    let lo = la.min(lb);
    let hi = ha.max(hb);
    if hi <= lo {
        return (
            Grid::zeros(a.width(), a.height()),
            Grid::zeros(b.width(), b.height()),
        );
    }
    let span = hi - lo;
    (
        a.map(|v| (v - lo) * 255.0 / span),
        b.map(|v| (v - lo) * 255.0 / span),
    )
}

/// Mirror an index into [0, n): -1 -> 0, -2 -> 1, n -> n-1, ...
fn mirror(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable Gaussian blur, kernel truncated at radius ceil(3*sigma) and
/// renormalized to unit sum, with mirrored borders.
pub fn gaussian_convolve(img: &Grid, sigma: f64) -> Result<Grid> {
    if sigma.is_nan() || !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "sigma",
            constraint: "> 0",
            value: sigma,
        });
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for k in -radius..=radius {
        kernel.push((-(k * k) as f64 / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for v in &mut kernel {
        *v /= sum;
    }

    let (w, h) = (img.width(), img.height());
    // Horizontal pass.
    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, out_row)| {
        let row = img.row(y);
        for (x, out) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sx = mirror(x as i64 + ki as i64 - radius, w);
                acc += kv * row[sx];
            }
            *out = acc;
        }
    });
    let tmp = Grid::from_vec(w, h, tmp);
    // Vertical pass.
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, out_row)| {
        for (x, out) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let sy = mirror(y as i64 + ki as i64 - radius, h);
                acc += kv * tmp.get(x, sy);
            }
            *out = acc;
        }
    });
    Ok(Grid::from_vec(w, h, out))
}

#[inline]
fn cubic_row(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    // Catmull-Rom (a = -0.5) in Horner form.
    p1 + 0.5
        * t
        * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
}

/// Catmull-Rom bicubic sample at real coordinates, clamping the 4x4
/// support to the image (Neumann extension). Reproduces stored values
/// exactly at integer coordinates.
pub fn bicubic_sample(img: &Grid, x: f64, y: f64) -> f64 {
    let ix = x.floor();
    let iy = y.floor();
    let tx = x - ix;
    let ty = y - iy;
    let ix = ix as i64;
    let iy = iy as i64;
    let mut col = [0.0; 4];
    for (r, c) in col.iter_mut().enumerate() {
        let sy = iy - 1 + r as i64;
        *c = cubic_row(
            img.get_clamped(ix - 1, sy),
            img.get_clamped(ix, sy),
            img.get_clamped(ix + 1, sy),
            img.get_clamped(ix + 2, sy),
            tx,
        );
    }
    cubic_row(col[0], col[1], col[2], col[3], ty)
}

/// Resample `img` at `x + flow(x)` for every pixel.
pub fn warp_image(img: &Grid, flow: &Field) -> Result<Grid> {
    img.check_same_size(&flow.x, "warp flow")?;
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, out_row)| {
        for (x, o) in out_row.iter_mut().enumerate() {
            let [ux, uy] = flow.get(x, y);
            *o = bicubic_sample(img, x as f64 + ux, y as f64 + uy);
        }
    });
    Ok(Grid::from_vec(w, h, out))
}

/// Central-difference gradient; borders take the one-sided halved value
/// consistent with clamping the image beyond its edge.
pub fn central_gradient(img: &Grid) -> Result<Field> {
    let (w, h) = (img.width(), img.height());
    if w < 2 || h < 2 {
        return Err(Error::ZeroDimension {
            width: w,
            height: h,
        });
    }
    let gx = Grid::from_fn(w, h, |x, y| {
        (img.get_clamped(x as i64 + 1, y as i64) - img.get_clamped(x as i64 - 1, y as i64)) / 2.0
    });
    let gy = Grid::from_fn(w, h, |x, y| {
        (img.get_clamped(x as i64, y as i64 + 1) - img.get_clamped(x as i64, y as i64 - 1)) / 2.0
    });
    Ok(Field::new(gx, gy))
}

/// Blur standard deviation used before resampling by zoom factor `eta`.
pub fn zoom_sigma(eta: f64) -> f64 {
    SIGMA0 * (eta.powi(-2) - 1.0).sqrt()
}

/// Downsample by `eta` in (0,1): Gaussian blur with `zoom_sigma(eta)`,
/// then bicubic resampling to ceil(eta*w) x ceil(eta*h).
pub fn downsample(img: &Grid, eta: f64) -> Result<Grid> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            constraint: "in (0,1)",
            value: eta,
        });
    }
    let blurred = gaussian_convolve(img, zoom_sigma(eta))?;
    let nw = (eta * img.width() as f64).ceil() as usize;
    let nh = (eta * img.height() as f64).ceil() as usize;
    let mut out = vec![0.0; nw * nh];
    out.par_chunks_mut(nw).enumerate().for_each(|(y, out_row)| {
        for (x, o) in out_row.iter_mut().enumerate() {
            *o = bicubic_sample(&blurred, x as f64 / eta, y as f64 / eta);
        }
    });
    Ok(Grid::from_vec(nw, nh, out))
}

/// Write an 8-bit binary PGM (P5), rounding and clamping to [0, 255].
pub fn write_pgm(path: impl AsRef<Path>, img: &Grid) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    bytes.extend(img.data().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
