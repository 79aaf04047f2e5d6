//! Linearized brightness-constancy residual and the pointwise threshold
//! step that minimizes the data term for a fixed regularized flow.

use crate::error::Result;
use crate::grid::{Field, Grid};
use crate::image::{central_gradient, warp_image};

/// Coefficients of the affine residual `rho(u) = grad . u + c` obtained by
/// linearizing the second frame around the warp base `u0`.
#[derive(Debug, Clone)]
pub struct ResidualCoeffs {
    /// Gradient of the second frame sampled at `x + u0(x)`.
    pub grad: Field,
    /// `I1(x + u0) - I0(x) - grad . u0`, so that `rho(u0) = I1(x+u0) - I0(x)`.
    pub c: Grid,
    /// The flow the linearization was taken at.
    pub u0: Field,
}

impl ResidualCoeffs {
    #[inline]
    pub fn rho(&self, x: usize, y: usize, u: [f64; 2]) -> f64 {
        let [gx, gy] = self.grad.get(x, y);
        gx * u[0] + gy * u[1] + self.c.get(x, y)
    }
}

/// Warp the second frame and its gradient by `u0` and assemble the affine
/// residual coefficients. The gradient is computed once on `i1` by central
/// differences and then resampled at `x + u0(x)`.
pub fn compute_residual_coeffs(i0: &Grid, i1: &Grid, u0: &Field) -> Result<ResidualCoeffs> {
    i0.check_same_size(i1, "frame pair")?;
    i0.check_same_size(&u0.x, "warp base flow")?;
    let i1_warped = warp_image(i1, u0)?;
    let g = central_gradient(i1)?;
    let grad = Field::new(warp_image(&g.x, u0)?, warp_image(&g.y, u0)?);
    let c = Grid::from_fn(i0.width(), i0.height(), |x, y| {
        let [gx, gy] = grad.get(x, y);
        let [ux, uy] = u0.get(x, y);
        i1_warped.get(x, y) - i0.get(x, y) - (gx * ux + gy * uy)
    });
    Ok(ResidualCoeffs { grad, c, u0: u0.clone() })
}

/// Pointwise minimizer of `(1/2theta)|u - v|^2 + lambda |rho(v)|`:
/// `v = u + TH(u)` with the three-way threshold on `rho(u)` against
/// `lambda*theta*|grad|^2`. Pixels with zero gradient keep `v = u`.
pub fn threshold_step(u: &Field, rc: &ResidualCoeffs, lambda: f64, theta: f64) -> Field {
    let (w, h) = (u.width(), u.height());
    let lt = lambda * theta;
    let mut v = u.clone();
    for y in 0..h {
        for x in 0..w {
            let [gx, gy] = rc.grad.get(x, y);
            let g2 = gx * gx + gy * gy;
            if g2 == 0.0 {
                continue;
            }
            let rho = rc.rho(x, y, u.get(x, y));
            let th = if rho < -lt * g2 {
                [lt * gx, lt * gy]
            } else if rho > lt * g2 {
                [-lt * gx, -lt * gy]
            } else {
                [-rho * gx / g2, -rho * gy / g2]
            };
            let [ux, uy] = u.get(x, y);
            v.set(x, y, [ux + th[0], uy + th[1]]);
        }
    }
    v
}
