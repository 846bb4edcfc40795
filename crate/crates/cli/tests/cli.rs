use std::process::{Command, Output};

fn bsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows below the header, split into fields.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn heat_run_reports_y0_and_is_reproducible() {
    let args = ["run", "--problem", "heat", "--N", "100000", "--n", "20", "--seed", "7"];
    let first = stdout(&bsde(&args));
    let (header, data) = rows(&first);
    assert_eq!(
        header,
        [
            "step",
            "t",
            "y_mean",
            "y_se",
            "effective_rank",
            "fixed_point_iterations"
        ]
    );
    assert_eq!(data.len(), 20);
    let y0: f64 = data[0][2].parse().unwrap();
    assert!((0.97..=1.03).contains(&y0), "{y0}");
    assert_eq!(first, stdout(&bsde(&args)));
    assert!(first.contains("# seed: 7\n") && first.contains("# config-sha256: "));
    assert!(!first.contains('\r'));
}

#[test]
fn unknown_problem_exits_with_two() {
    let out = bsde(&["run", "--problem", "no-such-thing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-thing"));
}

#[test]
fn bad_flags_and_files_exit_with_two() {
    assert_eq!(
        bsde(&["run", "--problem", "heat", "--N", "many"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bsde(&["run", "--problem", "heat", "--mode", "sideways"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "problem = \"heat\"\nstpes = 4\n").unwrap();
    let out = bsde(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stpes"));
}

#[test]
fn solver_failures_exit_with_one() {
    // 2^7 control sequences exceed the enumeration budget
    let out = bsde(&["oracle", "--problem", "hjb-tiny", "--n", "7"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_with_flag_overrides_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        "problem = \"heat\"\nN = 2000\nn = 4\nseed = 5\nbasis-degree = 2\n",
    )
    .unwrap();
    let status = bsde(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(status.stdout.is_empty());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(rows(&written).1.len(), 6);
    let direct = stdout(&bsde(&[
        "run",
        "--problem",
        "heat",
        "--N",
        "2000",
        "--n",
        "6",
        "--seed",
        "5",
        "--basis-degree",
        "2",
    ]));
    assert_eq!(written, direct);
}

#[test]
fn oracle_examples() {
    let (header, data) = rows(&stdout(&bsde(&["oracle", "--problem", "heat"])));
    assert_eq!(header, ["problem", "method", "value", "tolerance"]);
    let value: f64 = data[0][2].parse().unwrap();
    let tol: f64 = data[0][3].parse().unwrap();
    assert!((value - 1.0).abs() <= tol.max(1e-12));

    let (_, data) = rows(&stdout(&bsde(&[
        "oracle",
        "--problem",
        "linear-bsde",
        "--delta",
        "0",
        "--gamma",
        "1",
    ])));
    assert_eq!(data[0][2].parse::<f64>().unwrap(), 1.0);

    let (_, data) = rows(&stdout(&bsde(&[
        "oracle",
        "--problem",
        "hjb-tiny",
        "--n-inner",
        "20000",
    ])));
    assert_eq!(data[0][1], "brute-force");
    let se: f64 = data[0][3].parse().unwrap();
    assert!(se > 0.0 && se < 0.05);
}

#[test]
fn converge_table_shape() {
    let csv = stdout(&bsde(&[
        "converge",
        "--problem",
        "heat",
        "--N",
        "5000",
        "--n-list",
        "4,8,16",
    ]));
    let (header, data) = rows(&csv);
    assert_eq!(header, ["n", "modulus", "y0", "se", "error", "slope"]);
    assert_eq!(data.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["4", "8", "16"]);
    assert!(data.iter().all(|r| r[5] == data[0][5] && r[5] != "NA"));

    let single = stdout(&bsde(&[
        "converge",
        "--problem",
        "heat",
        "--N",
        "5000",
        "--n-list",
        "8",
    ]));
    let (_, data) = rows(&single);
    assert_eq!(data.len(), 1);
    assert_eq!(data[0][5], "NA");

    let out = bsde(&["converge", "--problem", "heat", "--n-list", "16,8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hjb_converge_without_z_reference() {
    let csv = stdout(&bsde(&[
        "converge",
        "--problem",
        "uncertain-vol",
        "--N",
        "4000",
        "--n-list",
        "4,8",
        "--control-grid",
        "5",
    ]));
    let (_, data) = rows(&csv);
    assert_eq!(data.len(), 2);
    assert!(data.iter().all(|r| r[4] != "NA"));
}

#[test]
fn thread_count_does_not_change_output() {
    let base = [
        "run",
        "--problem",
        "uncertain-vol",
        "--N",
        "5000",
        "--n",
        "6",
        "--control-grid",
        "9",
        "--seed",
        "3",
    ];
    let one = stdout(&bsde(&[&base[..], &["--threads", "1"]].concat()));
    let four = stdout(&bsde(&[&base[..], &["--threads", "4"]].concat()));
    assert_eq!(one, four);
}
