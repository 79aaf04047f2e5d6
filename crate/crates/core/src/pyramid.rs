//! Coarse-to-fine pyramid construction and flow upsampling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::image::{bicubic_sample, downsample, gaussian_convolve, SIGMA0};

/// Smallest allowed dimension of the coarsest pyramid level.
pub const MIN_LEVEL_DIM: usize = 16;

/// Number of usable scales for an image: each extra level shrinks both
/// dimensions by `eta` (ceiling rounding), and the coarsest level must keep
/// both dimensions at least [`MIN_LEVEL_DIM`].
pub fn effective_n_scales(width: usize, height: usize, eta: f64, requested: usize) -> usize {
    let mut n = 1;
    let (mut w, mut h) = (width, height);
    while n < requested {
        let nw = (eta * w as f64).ceil() as usize;
        let nh = (eta * h as f64).ceil() as usize;
        if nw < MIN_LEVEL_DIM || nh < MIN_LEVEL_DIM {
            break;
        }
        w = nw;
        h = nh;
        n += 1;
    }
    n
}

/// Build the image pyramid. Level 0 is the full-resolution image convolved
/// once with sigma0 = 0.6; each further level is `downsample` of the
/// previous. The number of levels is clamped by [`effective_n_scales`].
pub fn build_pyramid(img: &Grid, eta: f64, n_scales: usize) -> Result<Vec<Grid>> {
    if n_scales < 1 {
        return Err(Error::InvalidParameter {
            name: "n_scales",
            constraint: ">= 1",
            value: n_scales as f64,
        });
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            constraint: "in (0,1)",
            value: eta,
        });
    }
    let n = effective_n_scales(img.width(), img.height(), eta, n_scales);
    let mut levels = Vec::with_capacity(n);
    levels.push(gaussian_convolve(img, SIGMA0)?);
    for s in 1..n {
        let next = downsample(&levels[s - 1], eta)?;
        levels.push(next);
    }
    Ok(levels)
}

/// Resample a flow field to the next finer level and rescale the vectors
/// by 1/eta. `target_w`/`target_h` must be the finer level's dimensions.
pub fn upsample_flow(flow: &Field, eta: f64, target_w: usize, target_h: usize) -> Result<Field> {
    let expect_w = (eta * target_w as f64).ceil() as usize;
    let expect_h = (eta * target_h as f64).ceil() as usize;
    if flow.width() != expect_w || flow.height() != expect_h {
        return Err(Error::DimensionMismatch {
            expected: format!("{expect_w}x{expect_h} (coarse flow for {target_w}x{target_h})"),
            got: format!("{}x{}", flow.width(), flow.height()),
        });
    }
    let inv = 1.0 / eta;
    let resample = |plane: &Grid| {
        let mut out = vec![0.0; target_w * target_h];
        out.par_chunks_mut(target_w)
            .enumerate()
            .for_each(|(y, row)| {
                for (x, o) in row.iter_mut().enumerate() {
                    *o = inv * bicubic_sample(plane, x as f64 * eta, y as f64 * eta);
                }
            });
        Grid::from_vec(target_w, target_h, out)
    };
    Ok(Field::new(resample(&flow.x), resample(&flow.y)))
}
