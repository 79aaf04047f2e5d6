//! Alternating minimization engine: per-scale warping loops around the
//! threshold step and the split Bregman solves, and the coarse-to-fine
//! driver that runs them over an image pyramid.

mod bregman;
mod residual;

pub use bregman::{shrink, split_bregman_alpha, split_bregman_alpha1, SbOptions, SbReport};
pub use residual::{compute_residual_coeffs, threshold_step, ResidualCoeffs};

use crate::error::{Error, Result};
use crate::fracops::{frac_grad, GlWeights};
use crate::grid::{Field, Grid};
use crate::image::normalize_pair;
use crate::pyramid::{build_pyramid, upsample_flow};

/// All tunables of the numerical method.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Data attachment weight; larger trusts the brightness constraint more.
    pub lambda: f64,
    /// Tightness coupling the auxiliary field v to u.
    pub theta: f64,
    /// Stopping threshold for the per-warp iteration.
    pub epsilon: f64,
    /// Pyramid zoom factor.
    pub eta: f64,
    /// Requested pyramid depth (clamped by the coarsest-level minimum size).
    pub n_scales: usize,
    /// Relinearizations per scale.
    pub n_warps: usize,
    /// Inner threshold/solve alternations per warp.
    pub n_maxiter: usize,
    /// Split Bregman penalty (lambda_1 = lambda_2).
    pub lambda_sb: f64,
    /// Fractional order of the regularizer; exactly 1 selects the
    /// gradient-regularized Gauss-Seidel path.
    pub alpha: f64,
    /// Split Bregman convergence tolerance (max-norm on u between passes).
    pub inner_tol: f64,
    /// Dirichlet padding width for the fractional path, in pixels.
    pub pad: usize,
    /// Upper bound on Bregman passes per solve.
    pub sb_max_passes: usize,
    /// Linear-solver sweeps per Bregman pass.
    pub sb_sweeps_per_pass: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 0.3,
            theta: 0.3,
            epsilon: 0.01,
            eta: 0.5,
            n_scales: 5,
            n_warps: 5,
            n_maxiter: 100,
            lambda_sb: 10.0,
            alpha: 1.0,
            inner_tol: 1e-3,
            pad: 10,
            sb_max_passes: 50,
            sb_sweeps_per_pass: 1,
        }
    }
}

impl SolverParams {
    /// Check every range constraint, reporting the first offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |name, constraint, value| Err(Error::InvalidParameter {
            name,
            constraint,
            value,
        });
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda", "> 0", self.lambda);
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad("theta", "> 0", self.theta);
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", "> 0", self.epsilon);
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta", "in (0,1)", self.eta);
        }
        if self.n_scales < 1 {
            return bad("n_scales", ">= 1", self.n_scales as f64);
        }
        if self.n_warps < 1 {
            return bad("n_warps", ">= 1", self.n_warps as f64);
        }
        if self.n_maxiter < 1 {
            return bad("n_maxiter", ">= 1", self.n_maxiter as f64);
        }
        if !(self.lambda_sb > 0.0 && self.lambda_sb.is_finite()) {
            return bad("lambda_sb", "> 0", self.lambda_sb);
        }
        if !(0.0..=2.0).contains(&self.alpha) {
            return bad("alpha", "in [0,2]", self.alpha);
        }
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return bad("inner_tol", "> 0", self.inner_tol);
        }
        if self.sb_max_passes < 1 {
            return bad("sb_max_passes", ">= 1", self.sb_max_passes as f64);
        }
        if self.sb_sweeps_per_pass < 1 {
            return bad("sb_sweeps_per_pass", ">= 1", self.sb_sweeps_per_pass as f64);
        }
        Ok(())
    }

    fn uses_gradient_path(&self) -> bool {
        self.alpha == 1.0
    }
}

/// Mean-square change test: true iff
/// `(1/(Nx*Ny)) * sum((du1)^2 + (du2)^2) < epsilon^2` (strictly).
pub fn stopping_criterion(u_new: &Field, u_old: &Field, epsilon: f64) -> Result<bool> {
    u_new.x.check_same_size(&u_old.x, "stopping criterion")?;
    let n = (u_new.width() * u_new.height()) as f64;
    let mut acc = 0.0;
    for (a, b) in u_new.x.data().iter().zip(u_old.x.data()) {
        acc += (a - b) * (a - b);
    }
    for (a, b) in u_new.y.data().iter().zip(u_old.y.data()) {
        acc += (a - b) * (a - b);
    }
    Ok(acc / n < epsilon * epsilon)
}

/// Relaxed energy `sum |grad_alpha u1| + |grad_alpha u2|
/// + (1/2theta)|u - v|^2 + lambda |rho(v)|` (diagnostic).
pub fn discrete_energy(
    u: &Field,
    v: &Field,
    rc: &ResidualCoeffs,
    params: &SolverParams,
) -> Result<f64> {
    u.x.check_same_size(&v.x, "energy fields")?;
    u.x.check_same_size(&rc.c, "energy residual")?;
    let (w, h) = (u.width(), u.height());
    let weights = GlWeights::new(params.alpha, w.max(h))?;
    let (g1x, g1y) = frac_grad(&u.x, &weights)?;
    let (g2x, g2y) = frac_grad(&u.y, &weights)?;
    let mut energy = 0.0;
    for y in 0..h {
        for x in 0..w {
            let tv1 = (g1x.get(x, y).powi(2) + g1y.get(x, y).powi(2)).sqrt();
            let tv2 = (g2x.get(x, y).powi(2) + g2y.get(x, y).powi(2)).sqrt();
            let [ux, uy] = u.get(x, y);
            let [vx, vy] = v.get(x, y);
            let coupling = ((ux - vx).powi(2) + (uy - vy).powi(2)) / (2.0 * params.theta);
            let data = params.lambda * rc.rho(x, y, [vx, vy]).abs();
            energy += tv1 + tv2 + coupling + data;
        }
    }
    Ok(energy)
}

/// Energies observed while solving one scale (probed on request).
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaleReport {
    pub initial_energy: f64,
    pub final_energy: f64,
}

/// Single-scale warping loop: relinearize `n_warps` times, alternating the
/// threshold step and the per-component split Bregman solves until the
/// mean-square stopping criterion or `n_maxiter` alternations.
pub fn optical_flow_scale(i0: &Grid, i1: &Grid, u0: &Field, params: &SolverParams) -> Result<Field> {
    optical_flow_scale_report(i0, i1, u0, params, false).map(|(u, _)| u)
}

pub(crate) fn optical_flow_scale_report(
    i0: &Grid,
    i1: &Grid,
    u0: &Field,
    params: &SolverParams,
    probe_energy: bool,
) -> Result<(Field, ScaleReport)> {
    i0.check_same_size(i1, "frame pair")?;
    i0.check_same_size(&u0.x, "initial flow")?;
    params.validate()?;

    let (w, h) = (i0.width(), i0.height());
    let weights = if params.uses_gradient_path() {
        None
    } else {
        Some(GlWeights::new(
            params.alpha,
            w.max(h) + 2 * params.pad,
        )?)
    };
    let opts = SbOptions {
        tol: params.inner_tol,
        max_passes: params.sb_max_passes,
        sweeps_per_pass: params.sb_sweeps_per_pass,
    };
    let solve_component = |plane: &Grid| -> Result<Grid> {
        match &weights {
            None => split_bregman_alpha1(plane, params.theta, params.lambda_sb, &opts)
                .map(|(u, _)| u),
            Some(wts) => split_bregman_alpha(
                plane,
                params.theta,
                params.lambda_sb,
                wts,
                params.pad,
                &opts,
            )
            .map(|(u, _)| u),
        }
    };

    let max_magnitude = ((w * w + h * h) as f64).sqrt();
    let mut u = u0.clone();
    let mut report = ScaleReport::default();
    for warp in 0..params.n_warps {
        let rc = compute_residual_coeffs(i0, i1, &u)?;
        if probe_energy && warp == 0 {
            report.initial_energy = discrete_energy(&u, &u, &rc, params)?;
        }
        let mut v = u.clone();
        for _ in 0..params.n_maxiter {
            v = threshold_step(&u, &rc, params.lambda, params.theta);
            let u_prev = u.clone();
            let (r1, r2) = rayon::join(|| solve_component(&v.x), || solve_component(&v.y));
            u = Field::new(r1?, r2?);
            if stopping_criterion(&u, &u_prev, params.epsilon)? {
                break;
            }
        }
        clamp_flow(&mut u, max_magnitude);
        if !u.all_finite() {
            return Err(Error::NonFinite {
                context: "flow after warp iteration",
            });
        }
        if probe_energy && warp == params.n_warps - 1 {
            report.final_energy = discrete_energy(&u, &v, &rc, params)?;
        }
    }
    Ok((u, report))
}

/// Keep per-pixel flow magnitudes at or below the image diagonal.
fn clamp_flow(u: &mut Field, max_magnitude: f64) {
    let (w, h) = (u.width(), u.height());
    for y in 0..h {
        for x in 0..w {
            let [ux, uy] = u.get(x, y);
            let mag = (ux * ux + uy * uy).sqrt();
            if mag > max_magnitude {
                let s = max_magnitude / mag;
                u.set(x, y, [ux * s, uy * s]);
            }
        }
    }
}

/// Energy probe of a full coarse-to-fine run, taken at the finest scale.
#[derive(Debug, Clone, Copy)]
pub struct FlowDiagnostics {
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Number of pyramid levels actually used.
    pub scales_used: usize,
}

/// Full coarse-to-fine optical flow (the main entry point): jointly
/// normalize the pair, build both pyramids, solve from the coarsest level
/// with zero flow, and upsample between levels.
pub fn optical_flow(i0: &Grid, i1: &Grid, params: &SolverParams) -> Result<Field> {
    optical_flow_diag(i0, i1, params).map(|(u, _)| u)
}

pub fn optical_flow_diag(
    i0: &Grid,
    i1: &Grid,
    params: &SolverParams,
) -> Result<(Field, FlowDiagnostics)> {
    i0.check_same_size(i1, "frame pair")?;
    params.validate()?;
    if i0.width() == 0 || i0.height() == 0 {
        return Err(Error::ZeroDimension {
            width: i0.width(),
            height: i0.height(),
        });
    }
    let (n0, n1) = normalize_pair(i0, i1);
    let pyr0 = build_pyramid(&n0, params.eta, params.n_scales)?;
    let pyr1 = build_pyramid(&n1, params.eta, params.n_scales)?;
    let levels = pyr0.len();

    let coarsest = &pyr0[levels - 1];
    let mut u = Field::zeros(coarsest.width(), coarsest.height());
    let mut diag = FlowDiagnostics {
        initial_energy: 0.0,
        final_energy: 0.0,
        scales_used: levels,
    };
    for s in (0..levels).rev() {
        let probe = s == 0;
        let (next, report) = optical_flow_scale_report(&pyr0[s], &pyr1[s], &u, params, probe)?;
        u = next;
        if probe {
            diag.initial_energy = report.initial_energy;
            diag.final_energy = report.final_energy;
        }
        if s > 0 {
            u = upsample_flow(&u, params.eta, pyr0[s - 1].width(), pyr0[s - 1].height())?;
        }
    }
    Ok((u, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn textured(w: usize, h: usize) -> Grid {
        Grid::from_fn(w, h, |x, y| {
            let (xf, yf) = (x as f64, y as f64);
            128.0
                + 60.0 * (0.35 * xf + 0.2 * yf).sin()
                + 40.0 * (0.15 * xf - 0.45 * yf).cos()
                + 20.0 * (0.55 * xf + 0.1 * yf).sin()
        })
    }

    #[test]
    fn stopping_criterion_cases() {
        let a = Field::constant(4, 4, 1.0, 2.0);
        assert!(stopping_criterion(&a, &a, 0.01).unwrap());

        // A uniform change of exactly epsilon in one component means the
        // mean square equals epsilon^2; strict inequality rejects it.
        let eps = 0.01;
        let b = Field::new(
            Grid::constant(4, 4, 1.0 + eps),
            Grid::constant(4, 4, 2.0),
        );
        assert!(!stopping_criterion(&b, &a, eps).unwrap());

        // 2x1 field, du = {(0.1,0),(0,0)}: mean square 0.005 >= 1e-4.
        let old = Field::zeros(2, 1);
        let mut new = Field::zeros(2, 1);
        new.set(0, 0, [0.1, 0.0]);
        assert!(!stopping_criterion(&new, &old, 0.01).unwrap());
    }

    #[test]
    fn stopping_criterion_rejects_mismatched_fields() {
        assert!(stopping_criterion(&Field::zeros(3, 3), &Field::zeros(4, 3), 0.1).is_err());
    }

    #[test]
    fn identical_frames_keep_zero_flow_at_one_scale() {
        let img = textured(32, 32);
        let p = SolverParams {
            n_scales: 1,
            n_warps: 2,
            n_maxiter: 10,
            lambda_sb: 7.0,
            ..Default::default()
        };
        let u = optical_flow_scale(&img, &img, &Field::zeros(32, 32), &p).unwrap();
        let mut aepe = 0.0;
        for y in 0..32 {
            for x in 0..32 {
                let [ux, uy] = u.get(x, y);
                aepe += (ux * ux + uy * uy).sqrt();
            }
        }
        aepe /= 1024.0;
        assert!(aepe < 1e-3, "AEPE {aepe}");
    }

    #[test]
    fn single_iteration_is_threshold_plus_bregman() {
        let i0 = textured(24, 24);
        let i1 = Grid::from_fn(24, 24, |x, y| i0.get_clamped(x as i64 + 1, y as i64));
        let p = SolverParams {
            n_scales: 1,
            n_warps: 1,
            n_maxiter: 1,
            epsilon: 1e-12, // never stop early
            ..Default::default()
        };
        let got = optical_flow_scale(&i0, &i1, &Field::zeros(24, 24), &p).unwrap();

        let rc = compute_residual_coeffs(&i0, &i1, &Field::zeros(24, 24)).unwrap();
        let v = threshold_step(&Field::zeros(24, 24), &rc, p.lambda, p.theta);
        let opts = SbOptions {
            tol: p.inner_tol,
            max_passes: p.sb_max_passes,
            sweeps_per_pass: p.sb_sweeps_per_pass,
        };
        let (e1, _) = split_bregman_alpha1(&v.x, p.theta, p.lambda_sb, &opts).unwrap();
        let (e2, _) = split_bregman_alpha1(&v.y, p.theta, p.lambda_sb, &opts).unwrap();
        let expected = Field::new(e1, e2);
        assert!(got.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn full_pipeline_identical_frames() {
        let img = textured(48, 40);
        let p = SolverParams {
            n_scales: 2,
            n_warps: 3,
            n_maxiter: 20,
            ..Default::default()
        };
        let u = optical_flow(&img, &img, &p).unwrap();
        let n = (u.width() * u.height()) as f64;
        let aepe: f64 = u
            .x
            .data()
            .iter()
            .zip(u.y.data())
            .map(|(a, b)| (a * a + b * b).sqrt())
            .sum::<f64>()
            / n;
        assert!(aepe < 1e-2, "AEPE {aepe}");
    }

    #[test]
    fn recovers_a_small_shift() {
        // I1(x) = I0(x - t) gives true flow t under I1(x + u) = I0(x).
        let t = (0.6, 0.4);
        let i0 = textured(48, 48);
        let i1 = Grid::from_fn(48, 48, |x, y| {
            let img = &i0;
            crate::image::bicubic_sample(img, x as f64 - t.0, y as f64 - t.1)
        });
        let p = SolverParams {
            n_scales: 2,
            n_warps: 3,
            n_maxiter: 30,
            lambda_sb: 7.0,
            ..Default::default()
        };
        let u = optical_flow(&i0, &i1, &p).unwrap();
        let n = (u.width() * u.height()) as f64;
        let aepe: f64 = u
            .x
            .data()
            .iter()
            .zip(u.y.data())
            .map(|(a, b)| ((a - t.0) * (a - t.0) + (b - t.1) * (b - t.1)).sqrt())
            .sum::<f64>()
            / n;
        assert!(aepe < 0.3, "AEPE {aepe}");
    }

    #[test]
    fn flow_is_bitwise_identical_across_thread_counts() {
        let i0 = textured(40, 36);
        let i1 = Grid::from_fn(40, 36, |x, y| {
            crate::image::bicubic_sample(&i0, x as f64 - 0.8, y as f64 - 0.3)
        });
        let p = SolverParams {
            n_scales: 2,
            n_warps: 2,
            n_maxiter: 8,
            sb_max_passes: 15,
            ..Default::default()
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| optical_flow(&i0, &i1, &p).unwrap())
        };
        let a = run(1);
        let b = run(4);
        for i in 0..a.x.len() {
            assert_eq!(a.x.data()[i].to_bits(), b.x.data()[i].to_bits());
            assert_eq!(a.y.data()[i].to_bits(), b.y.data()[i].to_bits());
        }
    }

    #[test]
    fn energy_of_zero_flow_on_identical_frames_is_zero() {
        let img = textured(16, 16);
        let rc = compute_residual_coeffs(&img, &img, &Field::zeros(16, 16)).unwrap();
        let zero = Field::zeros(16, 16);
        let e = discrete_energy(&zero, &zero, &rc, &SolverParams::default()).unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn energy_constant_field_splits_into_edge_tv_and_data() {
        // At alpha = 1 the left-gradient of a constant plane is nonzero only
        // on the first row/column: sqrt(2)|a| at the corner, |a| along the
        // edges. Everything else is the data term.
        let (w, h) = (12, 10);
        let img = textured(w, h);
        let rc = compute_residual_coeffs(&img, &img, &Field::zeros(w, h)).unwrap();
        let (a, b) = (1.5, -0.75);
        let uv = Field::constant(w, h, a, b);
        let p = SolverParams::default();
        let e = discrete_energy(&uv, &uv, &rc, &p).unwrap();

        let edge_tv = |c: f64| {
            c.abs() * (2.0f64.sqrt() + (w as f64 - 1.0) + (h as f64 - 1.0))
        };
        let mut data = 0.0;
        for y in 0..h {
            for x in 0..w {
                data += p.lambda * rc.rho(x, y, [a, b]).abs();
            }
        }
        assert_abs_diff_eq!(e, edge_tv(a) + edge_tv(b) + data, epsilon = 1e-9);
    }

    #[test]
    fn energy_is_affine_in_lambda() {
        let img = textured(14, 14);
        let i1 = Grid::from_fn(14, 14, |x, y| img.get_clamped(x as i64 + 1, y as i64));
        let rc = compute_residual_coeffs(&img, &i1, &Field::zeros(14, 14)).unwrap();
        let u = Field::constant(14, 14, 0.3, -0.2);
        let v = Field::constant(14, 14, 0.1, 0.4);
        let mk = |lambda| SolverParams {
            lambda,
            ..Default::default()
        };
        let e0 = discrete_energy(&u, &v, &rc, &mk(1e-12)).unwrap();
        let e1 = discrete_energy(&u, &v, &rc, &mk(0.4)).unwrap();
        let e2 = discrete_energy(&u, &v, &rc, &mk(0.8)).unwrap();
        // Absolute energies are in the thousands; the slack covers f64
        // cancellation in the differences.
        assert_abs_diff_eq!(e2 - e1, e1 - e0, epsilon = 1e-6);
    }

    #[test]
    fn validate_reports_the_offending_field() {
        let p = SolverParams {
            alpha: 2.5,
            ..Default::default()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("alpha must be in [0,2]"), "{msg}");

        let p = SolverParams {
            eta: 1.2,
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("eta"));
    }
}
