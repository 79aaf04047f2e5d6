//! Grünwald–Letnikov weights and discrete fractional derivative operators.
//!
//! The left (minus) operators look backwards along a row or column, the
//! right (plus) operators forwards; both are one-sided weighted sums that
//! truncate at the grid edge. Grid spacing is one pixel, so no step-size
//! factor appears anywhere.
//!
//! For integer orders the weights collapse to classical stencils:
//! alpha = 0 is the identity, alpha = 1 the backward/forward difference,
//! alpha = 2 the second difference.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Grünwald–Letnikov coefficient table for one fractional order.
///
/// `w[k]` equals `(-1)^k * binomial(alpha, k)`, generated by the recurrence
/// `w[0] = 1`, `w[k] = (1 - (alpha+1)/k) * w[k-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlWeights {
    alpha: f64,
    w: Vec<f64>,
}

impl GlWeights {
    /// Generate weights `w[0..=n]` for `alpha` in `[0, 2]`.
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(0.0..=2.0).contains(&alpha) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                constraint: "in [0,2]",
                value: alpha,
            });
        }
        let mut w = Vec::with_capacity(n + 1);
        w.push(1.0);
        for k in 1..=n {
            let prev = w[k - 1];
            w.push((1.0 - (alpha + 1.0) / k as f64) * prev);
        }
        Ok(Self { alpha, w })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.w.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.w
    }

    /// Sum of squared weights `w[0]^2 + ... + w[m]^2`.
    ///
    /// This is the diagonal coefficient of the composed operator
    /// `D_plus(D_minus(.))` at a pixel with `m` trailing neighbors.
    pub fn squared_sum(&self, m: usize) -> f64 {
        self.w[..=m.min(self.w.len() - 1)]
            .iter()
            .map(|v| v * v)
            .sum()
    }

    fn check_len(&self, needed: usize) -> Result<()> {
        if self.w.len() >= needed {
            Ok(())
        } else {
            Err(Error::InsufficientWeights {
                needed,
                have: self.w.len(),
            })
        }
    }
}

/// Left fractional x-derivative: `out(i,j) = sum_{k=0..=i} w[k] f(i-k, j)`.
pub fn frac_dx_minus(f: &Grid, w: &GlWeights) -> Result<Grid> {
    w.check_len(f.width())?;
    let width = f.width();
    let wv = w.values();
    Ok(apply_rows(f, move |row, out| {
        for i in 0..width {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += wv[k] * row[i - k];
            }
            out[i] = acc;
        }
    }))
}

/// Right fractional x-derivative: `out(i,j) = sum_{k=0..=Nx-i} w[k] f(i+k, j)`.
pub fn frac_dx_plus(f: &Grid, w: &GlWeights) -> Result<Grid> {
    w.check_len(f.width())?;
    let width = f.width();
    let wv = w.values();
    Ok(apply_rows(f, move |row, out| {
        for i in 0..width {
            let mut acc = 0.0;
            for k in 0..width - i {
                acc += wv[k] * row[i + k];
            }
            out[i] = acc;
        }
    }))
}

/// Left fractional y-derivative: `out(i,j) = sum_{k=0..=j} w[k] f(i, j-k)`.
pub fn frac_dy_minus(f: &Grid, w: &GlWeights) -> Result<Grid> {
    w.check_len(f.height())?;
    let height = f.height();
    let wv = w.values();
    Ok(apply_cols(f, move |col, out| {
        for j in 0..height {
            let mut acc = 0.0;
            for k in 0..=j {
                acc += wv[k] * col[j - k];
            }
            out[j] = acc;
        }
    }))
}

/// Right fractional y-derivative: `out(i,j) = sum_{k=0..=Ny-j} w[k] f(i, j+k)`.
pub fn frac_dy_plus(f: &Grid, w: &GlWeights) -> Result<Grid> {
    w.check_len(f.height())?;
    let height = f.height();
    let wv = w.values();
    Ok(apply_cols(f, move |col, out| {
        for j in 0..height {
            let mut acc = 0.0;
            for k in 0..height - j {
                acc += wv[k] * col[j + k];
            }
            out[j] = acc;
        }
    }))
}

/// Left fractional gradient `(D_x_minus f, D_y_minus f)`.
pub fn frac_grad(f: &Grid, w: &GlWeights) -> Result<(Grid, Grid)> {
    Ok((frac_dx_minus(f, w)?, frac_dy_minus(f, w)?))
}

/// Composed operator `D_x_plus(D_x_minus(f))`, applied operator-by-operator.
pub fn frac_compose_xx(f: &Grid, w: &GlWeights) -> Result<Grid> {
    frac_dx_plus(&frac_dx_minus(f, w)?, w)
}

/// Composed operator `D_y_plus(D_y_minus(f))`.
pub fn frac_compose_yy(f: &Grid, w: &GlWeights) -> Result<Grid> {
    frac_dy_plus(&frac_dy_minus(f, w)?, w)
}

/// Run a 1D kernel over every row in parallel. The per-pixel summation
/// order is fixed, so results are independent of the thread count.
fn apply_rows(f: &Grid, kernel: impl Fn(&[f64], &mut [f64]) + Sync) -> Grid {
    let width = f.width();
    let mut out = vec![0.0; width * f.height()];
    out.par_chunks_mut(width)
        .zip(f.data().par_chunks(width))
        .for_each(|(out_row, in_row)| kernel(in_row, out_row));
    Grid::from_vec(width, f.height(), out)
}

/// Run a 1D kernel over every column in parallel.
fn apply_cols(f: &Grid, kernel: impl Fn(&[f64], &mut [f64]) + Sync) -> Grid {
    let width = f.width();
    let height = f.height();
    let mut out = vec![0.0; width * height];
    // Work on transposed scratch columns so the kernel sees contiguous data.
    let cols: Vec<Vec<f64>> = (0..width)
        .into_par_iter()
        .map(|x| {
            let col: Vec<f64> = (0..height).map(|y| f.get(x, y)).collect();
            let mut out_col = vec![0.0; height];
            kernel(&col, &mut out_col);
            out_col
        })
        .collect();
    for (x, col) in cols.iter().enumerate() {
        for (y, &v) in col.iter().enumerate() {
            out[y * width + x] = v;
        }
    }
    Grid::from_vec(width, height, out)
}
