//! End-to-end tests of the `fracflow` binary: flags, config files, exit
//! codes and output files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracflow_core::flo::{read_flo, write_flo};
use fracflow_core::image::{normalize_range, write_pgm};
use fracflow_core::synth::shifted_pair;
use fracflow_core::{Field, Grid};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

/// Write a frame pair as 8-bit PGM, each frame stretched to [0,255] first
/// so loading them back is a pure quantization.
fn write_pair(dir: &Path, i0: &Grid, i1: &Grid) -> (PathBuf, PathBuf) {
    let p0 = dir.join("frame0.pgm");
    let p1 = dir.join("frame1.pgm");
    write_pgm(&p0, &normalize_range(i0)).unwrap();
    write_pgm(&p1, &normalize_range(i1)).unwrap();
    (p0, p1)
}

fn fast_flow_args<'a>(p0: &'a str, p1: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "flow", "--frame0", p0, "--frame1", p1, "--out", out, "--lambda", "0.3", "--theta", "0.3",
        "--alpha", "1", "--n-scales", "2", "--n-warps", "2", "--n-maxiter", "10",
        "--sb-max-passes", "20",
    ]
}

#[test]
fn flow_happy_path_writes_flo() {
    let dir = tempfile::tempdir().unwrap();
    let pair = shifted_pair(32, 32, (0.5, 0.0), 3);
    let (p0, p1) = write_pair(dir.path(), &pair.i0, &pair.i1);
    let out = dir.path().join("out.flo");

    let res = run(&fast_flow_args(
        p0.to_str().unwrap(),
        p1.to_str().unwrap(),
        out.to_str().unwrap(),
    ));
    assert!(res.status.success(), "{}", stderr_of(&res));
    let flow = read_flo(&out).unwrap();
    assert_eq!((flow.width(), flow.height()), (32, 32));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains(" s,"), "missing timing: {stdout}");
    assert!(stdout.contains("energy"), "missing energy: {stdout}");
}

#[test]
fn flow_is_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let pair = shifted_pair(24, 24, (0.3, 0.4), 8);
    let (p0, p1) = write_pair(dir.path(), &pair.i0, &pair.i1);
    let out1 = dir.path().join("a.flo");
    let out2 = dir.path().join("b.flo");
    for out in [&out1, &out2] {
        let res = run(&fast_flow_args(
            p0.to_str().unwrap(),
            p1.to_str().unwrap(),
            out.to_str().unwrap(),
        ));
        assert!(res.status.success(), "{}", stderr_of(&res));
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn invalid_alpha_exits_1_with_field_name() {
    let res = run(&[
        "flow", "--frame0", "x.pgm", "--frame1", "y.pgm", "--out", "o.flo", "--alpha", "2.5",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(
        stderr_of(&res).contains("alpha must be in [0,2]"),
        "{}",
        stderr_of(&res)
    );
}

#[test]
fn missing_input_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.flo");
    let res = run(&[
        "flow",
        "--frame0",
        "/definitely/not/here.pgm",
        "--frame1",
        "/nor/here.pgm",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2), "{}", stderr_of(&res));
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let pair = shifted_pair(24, 24, (0.5, 0.0), 5);
    let (p0, p1) = write_pair(dir.path(), &pair.i0, &pair.i1);
    let out = dir.path().join("out.flo");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "frame0 = {}\nframe1 = {}\nout = {}\nlambda = 0.3\nalpha = 2.5 # overridden below\nn_scales = 1\nn_warps = 1\nn_maxiter = 5\nsb_max_passes = 10\n",
            p0.display(),
            p1.display(),
            out.display()
        ),
    )
    .unwrap();
    // alpha=2.5 in the file would be rejected; the flag must win.
    let res = run(&["flow", "--config", cfg.to_str().unwrap(), "--alpha", "1"]);
    assert!(res.status.success(), "{}", stderr_of(&res));
    assert!(out.exists());
}

#[test]
fn eval_perfect_flow_reports_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let gt = Field::new(
        Grid::from_fn(16, 12, |x, _| x as f64 * 0.25),
        Grid::constant(16, 12, -0.5),
    );
    let gt_path = dir.path().join("gt.flo");
    let flow_path = dir.path().join("flow.flo");
    write_flo(&gt_path, &gt).unwrap();
    write_flo(&flow_path, &gt).unwrap();
    let csv = dir.path().join("m.csv");
    let res = run(&[
        "eval",
        "--flow",
        flow_path.to_str().unwrap(),
        "--gt",
        gt_path.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr_of(&res));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2); // header + overall
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "overall");
    let aepe: f64 = fields[8].parse().unwrap();
    assert!(aepe < 1e-9);
}

#[test]
fn eval_region_outside_bounds_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = Field::zeros(8, 8);
    let fp = dir.path().join("f.flo");
    write_flo(&fp, &f).unwrap();
    let res = run(&[
        "eval",
        "--flow",
        fp.to_str().unwrap(),
        "--gt",
        fp.to_str().unwrap(),
        "--region",
        "0,0,9,3",
    ]);
    assert_eq!(res.status.code(), Some(1), "{}", stderr_of(&res));
}

#[test]
fn eval_two_regions_aggregate_to_overall() {
    let dir = tempfile::tempdir().unwrap();
    let flow = Field::new(
        Grid::from_fn(10, 6, |x, y| (x + y) as f64 * 0.1),
        Grid::zeros(10, 6),
    );
    let gt = Field::constant(10, 6, 0.3, 0.1);
    let fp = dir.path().join("f.flo");
    let gp = dir.path().join("g.flo");
    write_flo(&fp, &flow).unwrap();
    write_flo(&gp, &gt).unwrap();
    let csv = dir.path().join("m.csv");
    let res = run(&[
        "eval",
        "--flow",
        fp.to_str().unwrap(),
        "--gt",
        gp.to_str().unwrap(),
        "--region",
        "0,0,4,5",
        "--region",
        "5,0,9,5",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr_of(&res));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let aepe = |r: &Vec<String>| r[8].parse::<f64>().unwrap();
    let n = |r: &Vec<String>| r[5].parse::<f64>().unwrap();
    let weighted =
        (aepe(&rows[1]) * n(&rows[1]) + aepe(&rows[2]) * n(&rows[2])) / (n(&rows[1]) + n(&rows[2]));
    assert!((aepe(&rows[0]) - weighted).abs() < 1e-9);
}

#[test]
fn sweep_single_value_matches_flow_plus_eval() {
    let dir = tempfile::tempdir().unwrap();
    let pair = shifted_pair(32, 32, (0.5, 0.25), 6);
    let (p0, p1) = write_pair(dir.path(), &pair.i0, &pair.i1);
    let gt_path = dir.path().join("gt.flo");
    write_flo(&gt_path, &pair.ground_truth).unwrap();

    let solver_args = [
        "--lambda", "0.3", "--theta", "0.3", "--n-scales", "1", "--n-warps", "2",
        "--n-maxiter", "10", "--sb-max-passes", "20",
    ];

    // Sweep with a single value.
    let csv = dir.path().join("sweep.csv");
    let mut args = vec![
        "sweep", "--frame0", p0.to_str().unwrap(), "--frame1", p1.to_str().unwrap(),
        "--gt", gt_path.to_str().unwrap(), "--param", "alpha", "--values", "1",
        "--csv", csv.to_str().unwrap(),
    ];
    args.extend_from_slice(&solver_args);
    let res = run(&args);
    assert!(res.status.success(), "{}", stderr_of(&res));

    // Same run through flow + eval.
    let out = dir.path().join("out.flo");
    let mut args = vec![
        "flow", "--frame0", p0.to_str().unwrap(), "--frame1", p1.to_str().unwrap(),
        "--out", out.to_str().unwrap(), "--alpha", "1",
    ];
    args.extend_from_slice(&solver_args);
    assert!(run(&args).status.success());
    let eval_csv = dir.path().join("eval.csv");
    assert!(run(&[
        "eval",
        "--flow",
        out.to_str().unwrap(),
        "--gt",
        gt_path.to_str().unwrap(),
        "--csv",
        eval_csv.to_str().unwrap(),
    ])
    .status
    .success());

    let sweep_text = std::fs::read_to_string(&csv).unwrap();
    let eval_text = std::fs::read_to_string(&eval_csv).unwrap();
    let sweep_row: Vec<&str> = sweep_text.lines().nth(1).unwrap().split(',').collect();
    let eval_row: Vec<&str> = eval_text.lines().nth(1).unwrap().split(',').collect();
    // sweep columns: aae_rad at 8, aepe at 10; eval columns: aae at 6, aepe at 8.
    let s_aae: f64 = sweep_row[8].parse().unwrap();
    let e_aae: f64 = eval_row[6].parse().unwrap();
    let s_aepe: f64 = sweep_row[10].parse().unwrap();
    let e_aepe: f64 = eval_row[8].parse().unwrap();
    assert!((s_aae - e_aae).abs() < 1e-9, "{s_aae} vs {e_aae}");
    assert!((s_aepe - e_aepe).abs() < 1e-9, "{s_aepe} vs {e_aepe}");
}

#[test]
fn sweep_requires_ground_truth() {
    let res = run(&[
        "sweep", "--frame0", "a.pgm", "--frame1", "b.pgm", "--param", "alpha", "--values", "1",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr_of(&res).contains("ground truth"), "{}", stderr_of(&res));
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let res = run(&[
        "sweep", "--frame0", "a.pgm", "--frame1", "b.pgm", "--gt", "g.flo", "--param", "pad",
        "--values", "1",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr_of(&res).contains("alpha, lambda, theta, lambda_sb"));
}

#[test]
fn viz_writes_near_white_png_for_zero_flow() {
    let dir = tempfile::tempdir().unwrap();
    let fp = dir.path().join("zero.flo");
    write_flo(&fp, &Field::zeros(9, 7)).unwrap();
    let png = dir.path().join("zero.png");
    let res = run(&[
        "viz",
        "--flow",
        fp.to_str().unwrap(),
        "--out",
        png.to_str().unwrap(),
        "--max-motion",
        "1",
    ]);
    assert!(res.status.success(), "{}", stderr_of(&res));
    let img = image::open(&png).unwrap().to_rgb8();
    assert_eq!((img.width(), img.height()), (9, 7));
    for p in img.pixels() {
        assert!(p[0] >= 250 && p[1] >= 250 && p[2] >= 250);
    }
}

#[test]
fn viz_corrupt_flo_exits_2_bad_magic() {
    let dir = tempfile::tempdir().unwrap();
    let fp = dir.path().join("bad.flo");
    std::fs::write(&fp, [1u8; 32]).unwrap();
    let res = run(&[
        "viz",
        "--flow",
        fp.to_str().unwrap(),
        "--out",
        dir.path().join("x.png").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr_of(&res).contains("bad magic"), "{}", stderr_of(&res));
}

#[test]
fn unknown_subcommand_exits_1() {
    let res = run(&["transmogrify"]);
    assert_eq!(res.status.code(), Some(1));
}
