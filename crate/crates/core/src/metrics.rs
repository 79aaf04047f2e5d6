//! Angular and endpoint error metrics over flow fields, with optional
//! rectangular regions of interest and the Middlebury unknown-flow sentinel.

use crate::error::{Error, Result};
use crate::grid::Field;

/// Ground-truth components with magnitude above this are "unknown" and
/// excluded from every aggregate.
pub const UNKNOWN_FLOW: f64 = 1e9;

/// Aggregated errors over the valid pixels of a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowMetrics {
    /// Mean angular error, radians.
    pub aae: f64,
    /// Mean angular error, degrees.
    pub aae_deg: f64,
    /// Population standard deviation of the angular error, radians.
    pub sdae: f64,
    /// Mean endpoint error, pixels.
    pub aepe: f64,
    /// Pixels that entered the aggregate.
    pub n_valid: usize,
}

/// Inclusive rectangular region of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionSpec {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl RegionSpec {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            x0: 0,
            y0: 0,
            x1: width - 1,
            y1: height - 1,
        }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.x0 <= self.x1 && self.y0 <= self.y1 && self.x1 < width && self.y1 < height {
            Ok(())
        } else {
            Err(Error::InvalidRegion {
                x0: self.x0,
                y0: self.y0,
                x1: self.x1,
                y1: self.y1,
                width,
                height,
            })
        }
    }

    pub fn pixel_count(&self) -> usize {
        (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
    }
}

/// Angle in 3D between `(u1, u2, 1)` and `(gt1, gt2, 1)`, radians. The
/// appended 1 keeps zero flows well-defined.
pub fn angular_error(u: [f64; 2], gt: [f64; 2]) -> f64 {
    let num = 1.0 + u[0] * gt[0] + u[1] * gt[1];
    let den = (1.0 + u[0] * u[0] + u[1] * u[1]).sqrt()
        * (1.0 + gt[0] * gt[0] + gt[1] * gt[1]).sqrt();
    (num / den).clamp(-1.0, 1.0).acos()
}

/// Euclidean distance between the flow vectors, pixels.
pub fn endpoint_error(u: [f64; 2], gt: [f64; 2]) -> f64 {
    ((u[0] - gt[0]).powi(2) + (u[1] - gt[1]).powi(2)).sqrt()
}

pub fn is_unknown(gt: [f64; 2]) -> bool {
    gt[0].abs() > UNKNOWN_FLOW || gt[1].abs() > UNKNOWN_FLOW
}

/// AE/EPE aggregates over a region (whole field when `region` is `None`),
/// skipping unknown ground-truth pixels. Errors when nothing remains.
pub fn aggregate_metrics(
    flow: &Field,
    gt: &Field,
    region: Option<RegionSpec>,
) -> Result<FlowMetrics> {
    flow.x.check_same_size(&gt.x, "ground truth")?;
    let region = region.unwrap_or_else(|| RegionSpec::full(flow.width(), flow.height()));
    region.validate(flow.width(), flow.height())?;

    let mut n = 0usize;
    let mut sum_ae = 0.0;
    let mut sum_ae2 = 0.0;
    let mut sum_epe = 0.0;
    for y in region.y0..=region.y1 {
        for x in region.x0..=region.x1 {
            let g = gt.get(x, y);
            if is_unknown(g) {
                continue;
            }
            let u = flow.get(x, y);
            let ae = angular_error(u, g);
            sum_ae += ae;
            sum_ae2 += ae * ae;
            sum_epe += endpoint_error(u, g);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyValidSet);
    }
    let nf = n as f64;
    let aae = sum_ae / nf;
    let var = (sum_ae2 / nf - aae * aae).max(0.0);
    Ok(FlowMetrics {
        aae,
        aae_deg: aae.to_degrees(),
        sdae: var.sqrt(),
        aepe: sum_epe / nf,
        n_valid: n,
    })
}
