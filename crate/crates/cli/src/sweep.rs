//! Parameter sweep harness: one flow computation per value, metrics per
//! region, rows in sweep-value order regardless of execution order.

use std::time::Instant;

use fracflow_core::image::load_image;
use fracflow_core::metrics::aggregate_metrics;
use fracflow_core::{Field, FlowMetrics, Grid, RegionSpec, SolverParams};

use crate::commands::write_lines;
use crate::config::{RunConfig, SweepParam};
use crate::{CliError, CliResult};

/// One CSV row of a sweep: a (value, region) pair with its metrics, the
/// wall-clock cost of the flow computation, the finest-scale energies and
/// the full parameter vector that produced it.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub region_label: String,
    pub region: RegionSpec,
    pub metrics: FlowMetrics,
    pub seconds: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub params: SolverParams,
}

pub const SWEEP_CSV_HEADER: &str = "param,value,region,x0,y0,x1,y1,n_valid,aae_rad,aae_deg,aepe,\
sdae,seconds,initial_energy,final_energy,lambda,theta,epsilon,eta,n_scales,n_warps,n_maxiter,\
lambda_sb,alpha,inner_tol,pad";

pub fn sweep_csv_row(param: SweepParam, row: &SweepRow) -> String {
    let m = &row.metrics;
    let p = &row.params;
    format!(
        "{},{},{},{},{},{},{},{},{:.9},{:.9},{:.9},{:.9},{:.3},{:.6},{:.6},{},{},{},{},{},{},{},{},{},{},{}",
        param.name(),
        row.value,
        row.region_label,
        row.region.x0,
        row.region.y0,
        row.region.x1,
        row.region.y1,
        m.n_valid,
        m.aae,
        m.aae_deg,
        m.aepe,
        m.sdae,
        row.seconds,
        row.initial_energy,
        row.final_energy,
        p.lambda,
        p.theta,
        p.epsilon,
        p.eta,
        p.n_scales,
        p.n_warps,
        p.n_maxiter,
        p.lambda_sb,
        p.alpha,
        p.inner_tol,
        p.pad
    )
}

/// Run the sweep over in-memory frames. Values are computed left to right
/// (in parallel when `jobs > 1`) and rows come back in value order, regions
/// within a value ordered (overall, region0, region1, ...).
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    i0: &Grid,
    i1: &Grid,
    gt: &Field,
    param: SweepParam,
    values: &[f64],
    regions: &[RegionSpec],
    base: &SolverParams,
    jobs: usize,
) -> CliResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    // Validate every sweep point before spending any compute.
    for &v in values {
        param.apply(base, v).validate().map_err(CliError::from)?;
    }
    for r in regions {
        r.validate(i0.width(), i0.height()).map_err(CliError::from)?;
    }

    let run_one = |&value: &f64| -> CliResult<Vec<SweepRow>> {
        let params = param.apply(base, value);
        let start = Instant::now();
        let (flow, diag) = fracflow_core::optical_flow_diag(i0, i1, &params)?;
        let seconds = start.elapsed().as_secs_f64();
        if !flow.all_finite() {
            return Err(CliError::Numeric(format!(
                "non-finite flow at {} = {value}",
                param.name()
            )));
        }
        let full = RegionSpec::full(flow.width(), flow.height());
        let mut rows = Vec::with_capacity(regions.len() + 1);
        let mut push = |label: String, region: RegionSpec, metrics: FlowMetrics| {
            rows.push(SweepRow {
                value,
                region_label: label,
                region,
                metrics,
                seconds,
                initial_energy: diag.initial_energy,
                final_energy: diag.final_energy,
                params: params.clone(),
            });
        };
        push("overall".into(), full, aggregate_metrics(&flow, gt, None)?);
        for (i, r) in regions.iter().enumerate() {
            push(format!("region{i}"), *r, aggregate_metrics(&flow, gt, Some(*r))?);
        }
        Ok(rows)
    };

    let nested: Vec<CliResult<Vec<SweepRow>>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            values.par_iter().map(run_one).collect()
        })
    } else {
        values.iter().map(run_one).collect()
    };

    let mut rows = Vec::new();
    for group in nested {
        rows.extend(group?);
    }
    Ok(rows)
}

/// The `sweep` command: load inputs, run, print and write the CSV.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let frame0 = cfg
        .frame0
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing required option --frame0".into()))?;
    let frame1 = cfg
        .frame1
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing required option --frame1".into()))?;
    let gt_path = cfg
        .ground_truth
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep requires ground truth (--gt)".into()))?;
    let param = cfg
        .sweep_param
        .ok_or_else(|| CliError::Usage("missing required option --param".into()))?;
    if cfg.sweep_values.is_empty() {
        return Err(CliError::Usage("missing required option --values".into()));
    }

    let i0 = load_image(frame0)?;
    let i1 = load_image(frame1)?;
    let gt = fracflow_core::flo::read_flo(gt_path)?;
    gt.x.check_same_size(&i0, "ground truth vs frame")
        .map_err(CliError::from)?;

    let rows = run_sweep(
        &i0,
        &i1,
        &gt,
        param,
        &cfg.sweep_values,
        &cfg.regions,
        &cfg.params,
        cfg.jobs.max(1),
    )?;

    println!("{SWEEP_CSV_HEADER}");
    let mut lines = vec![SWEEP_CSV_HEADER.to_string()];
    for row in &rows {
        let line = sweep_csv_row(param, row);
        println!("{line}");
        lines.push(line);
    }
    if let Some(csv) = &cfg.csv {
        write_lines(csv, &lines)?;
    }
    Ok(())
}
