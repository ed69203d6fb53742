use std::path::PathBuf;
use std::process::{Command, Output};

use qlink_core::sweep::{read_csv, strip_timing};

fn qlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlink"))
        .args(args)
        .output()
        .expect("spawn qlink")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qlink-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// The CSV part of single-point output: everything from the header on.
fn csv_tail(text: &str) -> &str {
    &text[text.find("protocol,d,g").expect("csv header")..]
}

#[test]
fn capacity_rwa_qb_is_ideal() {
    let o = qlink(&[
        "capacity",
        "--protocol",
        "qb",
        "--rwa",
        "--g",
        "0.3",
        "--d",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("q1            = 1.000000"), "{text}");
    let rows = read_csv(csv_tail(&text).as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].q1 - 1.0).abs() < 1e-9);
}

#[test]
fn capacity_matches_sweep_bit_for_bit() {
    let single = qlink(&["capacity", "--protocol", "ctap", "--g", "0.6", "--d", "8"]);
    assert_eq!(single.status.code(), Some(0));
    let single_row = read_csv(csv_tail(&stdout(&single)).as_bytes())
        .unwrap()
        .remove(0);

    let sweep = qlink(&[
        "sweep",
        "--protocol",
        "ctap",
        "--g-grid",
        "0.4,0.6",
        "--d-list",
        "8",
    ]);
    assert_eq!(sweep.status.code(), Some(0));
    let rows = read_csv(stdout(&sweep).as_bytes()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].q1.to_bits(), single_row.q1.to_bits());
    assert_eq!(rows[1].leak_pair.to_bits(), single_row.leak_pair.to_bits());
}

#[test]
fn leakage_regression_point() {
    let o = qlink(&["leakage", "--protocol", "qb", "--g", "0.3", "--d", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("leak_pair     = "));
    let row = read_csv(csv_tail(&text).as_bytes()).unwrap().remove(0);
    assert!(
        (row.leak_pair - 7.394_069_154_480_222e-2).abs() < 1e-10,
        "{}",
        row.leak_pair
    );
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["capacity", "--protocol", "qb", "--g", "0.3"],
        vec!["capacity", "--protocol", "xx", "--g", "0.3", "--d", "2"],
        vec!["capacity", "--protocol", "qb", "--g", "-1", "--d", "2"],
        vec!["capacity", "--protocol", "qb", "--g", "0.3", "--d", "1"],
        vec!["capacity", "--unknown-flag"],
        vec!["frobnicate"],
        vec!["sweep", "--d-list", "1"],
        vec!["sweep", "--g-range", "0.5:0.1:0.1"],
        vec!["verify", "--suite", "nonsense"],
        vec!["capacity", "--config", "/nonexistent/qlink.conf"],
    ] {
        let o = qlink(&args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn help_exits_zero() {
    assert_eq!(qlink(&["--help"]).status.code(), Some(0));
    assert_eq!(qlink(&["sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn failed_point_marks_row_and_exits_two() {
    let path = scratch("failed.csv");
    let o = qlink(&[
        "sweep",
        "--protocol",
        "qb",
        "--g-grid",
        "0,0.5",
        "--d-list",
        "2",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let rows = read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].failed() && rows[0].q1.is_nan());
    assert!(!rows[1].failed());
}

#[test]
fn sweep_output_is_deterministic_and_order_independent() {
    let a = scratch("a.csv");
    let b = scratch("b.csv");
    let common = [
        "sweep",
        "--protocol",
        "both",
        "--g-range",
        "0.2:0.6:0.2",
        "--d-list",
        "2,3",
    ];
    let mut args_a = common.to_vec();
    args_a.extend(["--output", a.to_str().unwrap()]);
    let mut args_b = common.to_vec();
    args_b.extend(["--serial", "--output", b.to_str().unwrap()]);
    assert_eq!(qlink(&args_a).status.code(), Some(0));
    assert_eq!(qlink(&args_b).status.code(), Some(0));
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap();
    assert_eq!(strip_timing(&ta), strip_timing(&tb));
    assert!(!ta.contains('\r'));
    assert_eq!(ta.lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn rwa_qb_sweep_rows() {
    let o = qlink(&[
        "sweep",
        "--protocol",
        "qb",
        "--rwa",
        "--g-grid",
        "0.1,0.5",
        "--d-list",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for row in read_csv(stdout(&o).as_bytes()).unwrap() {
        assert!((row.q1 - 1.0).abs() < 1e-6);
        assert!(row.leak_pair <= 1e-10);
    }
}

#[test]
fn config_file_with_flag_override() {
    let path = scratch("run.conf");
    std::fs::write(
        &path,
        "# qb point\nprotocol = qb\ng = 0.3\nd = 2\nrwa = true\n",
    )
    .unwrap();
    let cfg = path.to_str().unwrap();

    let from_file = qlink(&["capacity", "--config", cfg]);
    assert_eq!(from_file.status.code(), Some(0));
    let row = read_csv(csv_tail(&stdout(&from_file)).as_bytes())
        .unwrap()
        .remove(0);
    assert_eq!(row.d, 2);
    assert!((row.q1 - 1.0).abs() < 1e-9);

    let overridden = qlink(&["capacity", "--config", cfg, "--d", "4", "--rwa", "false"]);
    assert_eq!(overridden.status.code(), Some(0));
    let row = read_csv(csv_tail(&stdout(&overridden)).as_bytes())
        .unwrap()
        .remove(0);
    assert_eq!(row.d, 4);
    assert!(
        row.q1 < 0.99,
        "full model should lose capacity at g = 0.3: {}",
        row.q1
    );
}

#[test]
fn verify_suites_from_the_command_line() {
    for args in [
        vec!["verify", "--suite", "symmetry"],
        vec!["verify", "--suite", "cptp", "--d", "3", "--g", "0.5"],
        vec!["verify", "--suite", "entropy"],
    ] {
        let o = qlink(&args);
        let text = stdout(&o);
        assert_eq!(o.status.code(), Some(0), "{args:?}\n{text}");
        assert!(text.contains("0 failed"));
        assert!(!text.contains("[FAIL]"));
    }
    let text = stdout(&qlink(&["verify", "--suite", "entropy"]));
    assert!(text.contains("S(½·1) = 1 bit"));
}
