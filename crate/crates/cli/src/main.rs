use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracflow_cli::commands::{cmd_eval, cmd_flow, cmd_viz};
use fracflow_cli::config::{
    merge_params, merge_regions, ConfigFile, RunConfig, SolverFlags, SweepParam,
};
use fracflow_cli::sweep::cmd_sweep;
use fracflow_cli::CliResult;

/// Dense TV-L1 optical flow with fractional-order regularization.
#[derive(Parser)]
#[command(name = "fracflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate optical flow between two frames and write a .flo file
    Flow(FlowArgs),
    /// Compare a .flo flow against ground truth (AAE/AEPE/SDAE)
    Eval(EvalArgs),
    /// Sweep one solver parameter, evaluating each flow against ground truth
    Sweep(SweepArgs),
    /// Render a .flo flow as a color-wheel PNG
    Viz(VizArgs),
}

#[derive(Args)]
struct CommonIo {
    /// Flat key=value config file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    io: CommonIo,
    /// First frame (PGM or PNG)
    #[arg(long)]
    frame0: Option<PathBuf>,
    /// Second frame (PGM or PNG)
    #[arg(long)]
    frame1: Option<PathBuf>,
    /// Output .flo path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the flow to this PNG
    #[arg(long)]
    viz: Option<PathBuf>,
    /// Magnitude mapped to full color saturation (default: 99th percentile)
    #[arg(long)]
    max_motion: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    io: CommonIo,
    /// Computed flow (.flo)
    #[arg(long)]
    flow: Option<PathBuf>,
    /// Ground-truth flow (.flo)
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Region of interest x0,y0,x1,y1 (repeatable)
    #[arg(long = "region")]
    regions: Vec<String>,
    /// Write the metric rows to this CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    io: CommonIo,
    #[arg(long)]
    frame0: Option<PathBuf>,
    #[arg(long)]
    frame1: Option<PathBuf>,
    /// Ground-truth flow (.flo), required
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Parameter to sweep: alpha, lambda, theta or lambda_sb
    #[arg(long)]
    param: Option<String>,
    /// Comma-separated sweep values
    #[arg(long)]
    values: Option<String>,
    /// Region of interest x0,y0,x1,y1 (repeatable)
    #[arg(long = "region")]
    regions: Vec<String>,
    /// Write the rows to this CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Sweep points evaluated concurrently
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct VizArgs {
    #[command(flatten)]
    io: CommonIo,
    /// Flow file (.flo) to render
    #[arg(long)]
    flow: Option<PathBuf>,
    /// Output PNG path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Magnitude mapped to full color saturation (default: 99th percentile)
    #[arg(long)]
    max_motion: Option<f64>,
}

fn load_config(io: &CommonIo) -> CliResult<ConfigFile> {
    match &io.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Flow(args) => {
            let file = load_config(&args.io)?;
            let cfg = RunConfig {
                params: merge_params(&args.solver, &file)?,
                frame0: args.frame0.or_else(|| file.get_path("frame0")),
                frame1: args.frame1.or_else(|| file.get_path("frame1")),
                out: args.out.or_else(|| file.get_path("out")),
                viz: args.viz.or_else(|| file.get_path("viz")),
                max_motion: args.max_motion,
                ..Default::default()
            };
            cmd_flow(&cfg)
        }
        Command::Eval(args) => {
            let file = load_config(&args.io)?;
            let cfg = RunConfig {
                flow: args.flow.or_else(|| file.get_path("flow")),
                ground_truth: args.gt.or_else(|| file.get_path("gt")),
                regions: merge_regions(&args.regions, &file)?,
                csv: args.csv.or_else(|| file.get_path("csv")),
                ..Default::default()
            };
            cmd_eval(&cfg)
        }
        Command::Sweep(args) => {
            let file = load_config(&args.io)?;
            let param = match args.param.as_deref().or_else(|| file.get("param")) {
                Some(p) => Some(SweepParam::parse(p)?),
                None => None,
            };
            let values = match args.values.as_deref().or_else(|| file.get("values")) {
                Some(v) => fracflow_cli::config::parse_values(v)?,
                None => Vec::new(),
            };
            let jobs = match args.jobs {
                Some(j) => j,
                None => file.get_usize("jobs")?.unwrap_or(1),
            };
            let cfg = RunConfig {
                params: merge_params(&args.solver, &file)?,
                frame0: args.frame0.or_else(|| file.get_path("frame0")),
                frame1: args.frame1.or_else(|| file.get_path("frame1")),
                ground_truth: args.gt.or_else(|| file.get_path("gt")),
                regions: merge_regions(&args.regions, &file)?,
                csv: args.csv.or_else(|| file.get_path("csv")),
                sweep_param: param,
                sweep_values: values,
                jobs,
                ..Default::default()
            };
            cmd_sweep(&cfg)
        }
        Command::Viz(args) => {
            let file = load_config(&args.io)?;
            let cfg = RunConfig {
                flow: args.flow.or_else(|| file.get_path("flow")),
                out: args.out.or_else(|| file.get_path("out")),
                max_motion: args.max_motion,
                ..Default::default()
            };
            cmd_viz(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not failures; everything else is usage.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
