//! Row-major scalar and two-component grids.
//!
//! `Grid` backs every plane in the pipeline: gray images, flow components,
//! split variables and Bregman multipliers. `Field` pairs two grids into a
//! per-pixel 2-vector (a flow field or a gradient field).

use crate::error::{Error, Result};

/// A row-major `width x height` plane of `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            width * height,
            "grid data length must be width*height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    /// Sample with indices clamped to the valid range (Neumann extension).
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let xc = x.clamp(0, self.width as i64 - 1) as usize;
        let yc = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[yc * self.width + xc]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_size(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute difference against a grid of the same size.
    pub fn max_abs_diff(&self, other: &Grid) -> f64 {
        assert!(self.same_size(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_same_size(&self, other: &Grid, what: &str) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: format!("{}x{} ({what})", self.width, self.height),
                got: format!("{}x{}", other.width, other.height),
            })
        }
    }
}

/// A per-pixel 2-vector field stored as two planes.
///
/// For a flow field `x` holds the horizontal component u1 and `y` the
/// vertical component u2, in pixels. Gradient fields reuse the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x: Grid,
    pub y: Grid,
}

impl Field {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            x: Grid::zeros(width, height),
            y: Grid::zeros(width, height),
        }
    }

    pub fn new(x: Grid, y: Grid) -> Self {
        assert!(x.same_size(&y), "field components must share dimensions");
        Self { x, y }
    }

    pub fn constant(width: usize, height: usize, vx: f64, vy: f64) -> Self {
        Self {
            x: Grid::constant(width, height, vx),
            y: Grid::constant(width, height, vy),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.x.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.x.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        [self.x.get(x, y), self.y.get(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f64; 2]) {
        self.x.set(x, y, v[0]);
        self.y.set(x, y, v[1]);
    }

    pub fn same_size(&self, other: &Field) -> bool {
        self.x.same_size(&other.x)
    }

    pub fn all_finite(&self) -> bool {
        self.x.all_finite() && self.y.all_finite()
    }

    /// Largest per-component absolute difference.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.x.max_abs_diff(&other.x).max(self.y.max_abs_diff(&other.y))
    }
}
