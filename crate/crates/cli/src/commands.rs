//! The flow / eval / viz commands.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use fracflow_core::color::write_flow_png;
use fracflow_core::flo::{read_flo, write_flo};
use fracflow_core::image::load_image;
use fracflow_core::metrics::aggregate_metrics;
use fracflow_core::{Field, FlowMetrics, RegionSpec};

use crate::config::RunConfig;
use crate::{CliError, CliResult};

fn require<'a, T>(opt: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    opt.as_ref()
        .ok_or_else(|| CliError::Usage(format!("missing required option --{flag}")))
}

/// Compute flow between two frames, write `.flo` (and optionally a color
/// PNG), print wall-clock time and final energy.
pub fn cmd_flow(cfg: &RunConfig) -> CliResult<()> {
    let frame0 = require(&cfg.frame0, "frame0")?;
    let frame1 = require(&cfg.frame1, "frame1")?;
    let out = require(&cfg.out, "out")?;
    cfg.params.validate().map_err(CliError::from)?;

    let i0 = load_image(frame0)?;
    let i1 = load_image(frame1)?;
    let start = Instant::now();
    let (flow, diag) = fracflow_core::optical_flow_diag(&i0, &i1, &cfg.params)?;
    let seconds = start.elapsed().as_secs_f64();
    if !flow.all_finite() {
        return Err(CliError::Numeric("computed flow contains non-finite values".into()));
    }
    write_flo(out, &flow)?;
    if let Some(viz) = &cfg.viz {
        write_flow_png(viz, &flow, cfg.max_motion)?;
    }
    println!(
        "flow: {}x{} px, {} scales, {seconds:.3} s, final energy {:.6}",
        flow.width(),
        flow.height(),
        diag.scales_used,
        diag.final_energy
    );
    Ok(())
}

/// A metrics row: the evaluated region (None = whole field) plus values.
pub struct MetricsRow {
    pub label: String,
    pub region: Option<RegionSpec>,
    pub metrics: FlowMetrics,
}

/// Evaluate a flow file against ground truth over the whole field and any
/// regions; rows are (overall, region0, region1, ...).
pub fn evaluate_flow(
    flow: &Field,
    gt: &Field,
    regions: &[RegionSpec],
) -> CliResult<Vec<MetricsRow>> {
    let mut rows = vec![MetricsRow {
        label: "overall".to_string(),
        region: None,
        metrics: aggregate_metrics(flow, gt, None)?,
    }];
    for (i, r) in regions.iter().enumerate() {
        rows.push(MetricsRow {
            label: format!("region{i}"),
            region: Some(*r),
            metrics: aggregate_metrics(flow, gt, Some(*r))?,
        });
    }
    Ok(rows)
}

pub const EVAL_CSV_HEADER: &str = "region,x0,y0,x1,y1,n_valid,aae_rad,aae_deg,aepe,sdae";

pub fn eval_csv_row(row: &MetricsRow, full: RegionSpec) -> String {
    let r = row.region.unwrap_or(full);
    let m = &row.metrics;
    format!(
        "{},{},{},{},{},{},{:.9},{:.9},{:.9},{:.9}",
        row.label, r.x0, r.y0, r.x1, r.y1, m.n_valid, m.aae, m.aae_deg, m.aepe, m.sdae
    )
}

/// Compare a computed flow with ground truth, print a table and optionally
/// write it as CSV.
pub fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let flow_path = require(&cfg.flow, "flow")?;
    let gt_path = require(&cfg.ground_truth, "gt")?;
    let flow = read_flo(flow_path)?;
    let gt = read_flo(gt_path)?;
    let rows = evaluate_flow(&flow, &gt, &cfg.regions)?;
    let full = RegionSpec::full(flow.width(), flow.height());

    println!("{EVAL_CSV_HEADER}");
    let mut lines = vec![EVAL_CSV_HEADER.to_string()];
    for row in &rows {
        let line = eval_csv_row(row, full);
        println!("{line}");
        lines.push(line);
    }
    if let Some(csv) = &cfg.csv {
        write_lines(csv, &lines)?;
    }
    Ok(())
}

/// Render a `.flo` file to a color PNG.
pub fn cmd_viz(cfg: &RunConfig) -> CliResult<()> {
    let flow_path = require(&cfg.flow, "flow")?;
    let out = require(&cfg.out, "out")?;
    let flow = read_flo(flow_path)?;
    write_flow_png(out, &flow, cfg.max_motion)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub(crate) fn write_lines(path: &Path, lines: &[String]) -> CliResult<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    for line in lines {
        writeln!(file, "{line}").map_err(|e| CliError::Io(format!("write failed: {e}")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracflow_core::Grid;

    #[test]
    fn evaluate_flow_rows_cover_overall_and_regions() {
        let gt = Field::new(
            Grid::from_fn(8, 6, |x, _| x as f64 * 0.1),
            Grid::constant(8, 6, 0.5),
        );
        let regions = [
            RegionSpec { x0: 0, y0: 0, x1: 3, y1: 5 },
            RegionSpec { x0: 4, y0: 0, x1: 7, y1: 5 },
        ];
        let rows = evaluate_flow(&gt, &gt, &regions).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].label, "overall");
        assert_eq!(rows[0].metrics.n_valid, 48);
        assert_eq!(rows[1].metrics.n_valid + rows[2].metrics.n_valid, 48);

        // Partition identity: overall AEPE is the count-weighted mean.
        let lhs = rows[0].metrics.aepe * rows[0].metrics.n_valid as f64;
        let rhs = rows[1].metrics.aepe * rows[1].metrics.n_valid as f64
            + rows[2].metrics.aepe * rows[2].metrics.n_valid as f64;
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn missing_required_option_is_usage_error() {
        let cfg = RunConfig::default();
        let err = cmd_flow(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("frame0"));
    }
}
