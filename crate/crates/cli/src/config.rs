//! Run configuration: solver parameters plus file paths, regions and sweep
//! settings, merged from an optional flat key=value config file and the
//! command-line flags (flags win).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fracflow_core::{RegionSpec, SolverParams};

use crate::{CliError, CliResult};

/// Everything a command run needs.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub params: SolverParams,
    pub frame0: Option<PathBuf>,
    pub frame1: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub flow: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub viz: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub regions: Vec<RegionSpec>,
    pub sweep_param: Option<SweepParam>,
    pub sweep_values: Vec<f64>,
    pub jobs: usize,
    pub max_motion: Option<f64>,
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Lambda,
    Theta,
    LambdaSb,
}

impl SweepParam {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "lambda" => Ok(SweepParam::Lambda),
            "theta" => Ok(SweepParam::Theta),
            "lambda_sb" => Ok(SweepParam::LambdaSb),
            other => Err(CliError::Usage(format!(
                "sweep parameter must be one of alpha, lambda, theta, lambda_sb (got {other})"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Lambda => "lambda",
            SweepParam::Theta => "theta",
            SweepParam::LambdaSb => "lambda_sb",
        }
    }

    /// Produce the params for one sweep point.
    pub fn apply(&self, base: &SolverParams, value: f64) -> SolverParams {
        let mut p = base.clone();
        match self {
            SweepParam::Alpha => p.alpha = value,
            SweepParam::Lambda => p.lambda = value,
            SweepParam::Theta => p.theta = value,
            SweepParam::LambdaSb => p.lambda_sb = value,
        }
        p
    }
}

/// Parse "x0,y0,x1,y1" into a region.
pub fn parse_region(s: &str) -> CliResult<RegionSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "region must be x0,y0,x1,y1 (got {s:?})"
        )));
    }
    let mut vals = [0usize; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .parse()
            .map_err(|_| CliError::Usage(format!("region bound {p:?} is not an integer")))?;
    }
    Ok(RegionSpec {
        x0: vals[0],
        y0: vals[1],
        x1: vals[2],
        y1: vals[3],
    })
}

/// Parse a comma-separated list of reals.
pub fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("sweep value {p:?} is not a number")))
        })
        .collect()
}

/// A parsed config file: ordered key -> values (keys may repeat, e.g.
/// `region`). Lines are `key = value`; `#` starts a comment.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, Vec<String>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {} is not key = value: {raw:?}",
                    lineno + 1
                )));
            };
            entries
                .entry(key.trim().to_string())
                .or_default()
                .push(value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .get(key)
            .and_then(|v| v.last())
            .map(String::as_str)
    }

    pub fn get_all(&self, key: &str) -> &[String] {
        self.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get_f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key} = {v:?} is not a number"))),
        }
    }

    pub fn get_usize(&self, key: &str) -> CliResult<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {key} = {v:?} is not a non-negative integer"))
            }),
        }
    }

    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }
}

/// Solver flags shared by `flow` and `sweep`; every field optional so the
/// merge can tell "explicitly set" from "defaulted".
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SolverFlags {
    /// Data attachment weight
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Tightness between u and the auxiliary field
    #[arg(long)]
    pub theta: Option<f64>,
    /// Stopping threshold of the per-warp iteration
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Pyramid zoom factor in (0,1)
    #[arg(long)]
    pub eta: Option<f64>,
    /// Number of pyramid scales
    #[arg(long)]
    pub n_scales: Option<usize>,
    /// Warps (relinearizations) per scale
    #[arg(long)]
    pub n_warps: Option<usize>,
    /// Inner iterations per warp
    #[arg(long)]
    pub n_maxiter: Option<usize>,
    /// Split Bregman penalty parameter
    #[arg(long)]
    pub lambda_sb: Option<f64>,
    /// Fractional regularization order in [0,2]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Split Bregman convergence tolerance
    #[arg(long)]
    pub inner_tol: Option<f64>,
    /// Dirichlet padding width for the fractional path
    #[arg(long)]
    pub pad: Option<usize>,
    /// Maximum Bregman passes per solve
    #[arg(long)]
    pub sb_max_passes: Option<usize>,
    /// Linear-solver sweeps per Bregman pass
    #[arg(long)]
    pub sb_sweeps_per_pass: Option<usize>,
}

/// Flag > config file > default, for every solver parameter.
pub fn merge_params(flags: &SolverFlags, file: &ConfigFile) -> CliResult<SolverParams> {
    let d = SolverParams::default();
    let p = SolverParams {
        lambda: flags.lambda.or(file.get_f64("lambda")?).unwrap_or(d.lambda),
        theta: flags.theta.or(file.get_f64("theta")?).unwrap_or(d.theta),
        epsilon: flags
            .epsilon
            .or(file.get_f64("epsilon")?)
            .unwrap_or(d.epsilon),
        eta: flags.eta.or(file.get_f64("eta")?).unwrap_or(d.eta),
        n_scales: flags
            .n_scales
            .or(file.get_usize("n_scales")?)
            .unwrap_or(d.n_scales),
        n_warps: flags
            .n_warps
            .or(file.get_usize("n_warps")?)
            .unwrap_or(d.n_warps),
        n_maxiter: flags
            .n_maxiter
            .or(file.get_usize("n_maxiter")?)
            .unwrap_or(d.n_maxiter),
        lambda_sb: flags
            .lambda_sb
            .or(file.get_f64("lambda_sb")?)
            .unwrap_or(d.lambda_sb),
        alpha: flags.alpha.or(file.get_f64("alpha")?).unwrap_or(d.alpha),
        inner_tol: flags
            .inner_tol
            .or(file.get_f64("inner_tol")?)
            .unwrap_or(d.inner_tol),
        pad: flags.pad.or(file.get_usize("pad")?).unwrap_or(d.pad),
        sb_max_passes: flags
            .sb_max_passes
            .or(file.get_usize("sb_max_passes")?)
            .unwrap_or(d.sb_max_passes),
        sb_sweeps_per_pass: flags
            .sb_sweeps_per_pass
            .or(file.get_usize("sb_sweeps_per_pass")?)
            .unwrap_or(d.sb_sweeps_per_pass),
    };
    p.validate().map_err(CliError::from)?;
    Ok(p)
}

/// Regions from flags (all `--region` occurrences) or, if none, from the
/// config file's `region` lines.
pub fn merge_regions(flag_regions: &[String], file: &ConfigFile) -> CliResult<Vec<RegionSpec>> {
    let source: Vec<String> = if flag_regions.is_empty() {
        file.get_all("region").to_vec()
    } else {
        flag_regions.to_vec()
    };
    source.iter().map(|s| parse_region(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_roundtrip() {
        let cfg = ConfigFile::parse(
            "# comment\nlambda = 0.4\n\ntheta=0.2 # trailing\nregion = 0,0,3,3\nregion = 4,0,7,3\n",
        )
        .unwrap();
        assert_eq!(cfg.get_f64("lambda").unwrap(), Some(0.4));
        assert_eq!(cfg.get_f64("theta").unwrap(), Some(0.2));
        assert_eq!(cfg.get_all("region").len(), 2);
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn malformed_config_lines_error() {
        assert!(ConfigFile::parse("lambda 0.4").is_err());
        let cfg = ConfigFile::parse("lambda = abc").unwrap();
        assert!(cfg.get_f64("lambda").is_err());
    }

    #[test]
    fn flags_override_file() {
        let cfg = ConfigFile::parse("lambda = 0.4\nn_scales = 3").unwrap();
        let flags = SolverFlags {
            lambda: Some(0.9),
            ..Default::default()
        };
        let p = merge_params(&flags, &cfg).unwrap();
        assert_eq!(p.lambda, 0.9);
        assert_eq!(p.n_scales, 3);
        assert_eq!(p.eta, 0.5); // default
    }

    #[test]
    fn table_defaults_without_any_input() {
        let p = merge_params(&SolverFlags::default(), &ConfigFile::default()).unwrap();
        assert_eq!(p.eta, 0.5);
        assert_eq!(p.epsilon, 0.01);
        assert_eq!(p.n_scales, 5);
        assert_eq!(p.n_warps, 5);
        assert_eq!(p.lambda_sb, 10.0);
        assert_eq!(p.alpha, 1.0);
    }

    #[test]
    fn invalid_merged_params_name_the_field() {
        let flags = SolverFlags {
            alpha: Some(2.5),
            ..Default::default()
        };
        let err = merge_params(&flags, &ConfigFile::default()).unwrap_err();
        assert!(err.to_string().contains("alpha must be in [0,2]"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn region_parsing() {
        let r = parse_region("1, 2, 10, 12").unwrap();
        assert_eq!(
            r,
            RegionSpec {
                x0: 1,
                y0: 2,
                x1: 10,
                y1: 12
            }
        );
        assert!(parse_region("1,2,3").is_err());
        assert!(parse_region("a,b,c,d").is_err());
    }

    #[test]
    fn sweep_param_names() {
        assert_eq!(SweepParam::parse("alpha").unwrap(), SweepParam::Alpha);
        assert_eq!(SweepParam::parse("lambda_sb").unwrap(), SweepParam::LambdaSb);
        assert!(SweepParam::parse("bogus").is_err());
        let base = SolverParams::default();
        let p = SweepParam::Theta.apply(&base, 0.77);
        assert_eq!(p.theta, 0.77);
        assert_eq!(p.lambda, base.lambda);
    }

    #[test]
    fn values_parsing() {
        assert_eq!(parse_values("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_values("1,x").is_err());
    }
}
