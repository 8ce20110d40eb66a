//! Command-line behaviour: outputs, exit status, stream separation and
//! determinism.

use std::fs;
use std::process::Command;

use polykt::cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("polykt").chain(args.iter().copied());
    let status = run(argv, &mut out, &mut err);
    (status, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_constraints(dir: &tempfile::TempDir, text: &str) -> String {
    let path = dir.path().join("s.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn predict_from_counts_is_kt() {
    let (status, out, err) = invoke(&["predict", "3", "1"]);
    assert_eq!(status, 0, "{err}");
    let rows: Vec<Vec<f64>> = out.lines().map(|l| l.split(' ').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][0] - 3.5 / 5.0).abs() < 1e-15);
    assert!((rows[1][0] - 1.5 / 5.0).abs() < 1e-15);
    assert_eq!(rows[0][1], 0.0);
    assert!(err.is_empty());
}

#[test]
fn predict_respects_constraints_and_sequence_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_constraints(&dir, "alphabet 2\nbox 1 0.2 0.6\n");
    let seq = dir.path().join("x.bin");
    fs::write(&seq, [0u8; 30]).unwrap();
    let (status, out, err) = invoke(&["--constraints", &cfg, "predict", "--sequence", seq.to_str().unwrap()]);
    assert_eq!(status, 0, "{err}");
    let p0: f64 = out.lines().next().unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!(p0 <= 0.6 && p0 > 0.55, "{p0}");
    let (status2, out2, _) = invoke(&["--constraints", &cfg, "predict", "30", "0"]);
    assert_eq!(status2, 0);
    assert_eq!(out, out2);
}

#[test]
fn compress_decompress_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_constraints(&dir, "alphabet 3\nbox 1 0.1 0.6\nbox 2 0.0 0.5\n");
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..500u32).map(|i| ((i * 7 + i / 3) % 3) as u8).collect();
    fs::write(&input, &data).unwrap();
    let packed = dir.path().join("packed");
    let (status, out, err) = invoke(&[
        "--constraints",
        &cfg,
        "--seed",
        "4",
        "--output",
        packed.to_str().unwrap(),
        "compress",
        input.to_str().unwrap(),
    ]);
    assert_eq!(status, 0, "{err}");
    assert!(out.is_empty());
    let first = fs::read(&packed).unwrap();
    let (_, _, _) = invoke(&[
        "--constraints",
        &cfg,
        "--seed",
        "4",
        "--output",
        packed.to_str().unwrap(),
        "compress",
        input.to_str().unwrap(),
    ]);
    assert_eq!(first, fs::read(&packed).unwrap(), "compression is not deterministic");

    let restored = dir.path().join("out.bin");
    let (status, _, err) = invoke(&[
        "--constraints",
        &cfg,
        "--output",
        restored.to_str().unwrap(),
        "decompress",
        packed.to_str().unwrap(),
    ]);
    assert_eq!(status, 0, "{err}");
    assert_eq!(fs::read(&restored).unwrap(), data);

    // decoding with different settings is refused
    let (status, _, err) =
        invoke(&["--constraints", &cfg, "--quad-tol", "1e-7", "decompress", packed.to_str().unwrap()]);
    assert_ne!(status, 0);
    assert!(err.contains("digest"), "{err}");
}

#[test]
fn redundancy_table() {
    let (status, out, err) = invoke(&["--alphabet", "2", "redundancy", "--n", "1,64"]);
    assert_eq!(status, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], polykt::redundancy::CSV_HEADER);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "1");
    assert!((first[4].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_constraints(&dir, "alphabet 2\nbox 1 0.2 0.6\n");
    let (status, out, _) =
        invoke(&["--constraints", &cfg, "redundancy", "--n", "16", "--exact-avg", "--mixture", "--cn"]);
    assert_eq!(status, 0);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert!(row[3].parse::<f64>().unwrap() < 0.0, "log2 C of a proper box is negative");
    assert!(row.iter().all(|c| !c.is_empty()));
}

#[test]
fn redundancy_row_errors_keep_going() {
    // 10^5 symbols of a 3-letter alphabet exceed the enumeration guard
    let (status, out, err) = invoke(&["--alphabet", "3", "redundancy", "--n", "4,100000"]);
    assert_ne!(status, 0);
    assert_eq!(out.lines().count(), 3, "both rows are printed");
    assert!(err.contains("n=100000"), "{err}");
}

#[test]
fn integrate_reports_backend() {
    let (status, out, _) = invoke(&["integrate", "2.5", "0.5", "7"]);
    assert_eq!(status, 0);
    assert!(out.contains("value 1\n") && out.contains("backend exact"), "{out}");

    let dir = tempfile::tempdir().unwrap();
    let half = write_constraints(&dir, "alphabet 2\nbox 1 0 0.5\n");
    let (_, out, _) = invoke(&["--constraints", &half, "integrate", "0.5", "0.5"]);
    let value: f64 = out.lines().next().unwrap().strip_prefix("value ").unwrap().parse().unwrap();
    assert!((value - 0.5).abs() < 1e-14);

    let cube = write_constraints(&dir, "alphabet 3\nbox 1 0.1 0.5\nbox 2 0.1 0.5\n");
    let (status, out, _) =
        invoke(&["--constraints", &cube, "--monte-carlo", "--samples", "5000", "integrate", "0.5", "0.5", "0.5"]);
    assert_eq!(status, 0);
    assert!(out.contains("backend monte-carlo"), "{out}");
    let se: f64 = out.lines().nth(1).unwrap().strip_prefix("std_error ").unwrap().parse().unwrap();
    assert!(se > 0.0);
}

#[test]
fn invalid_input_fails_on_stderr() {
    let (status, out, err) = invoke(&["integrate", "0.5", "-1"]);
    assert_ne!(status, 0);
    assert!(out.is_empty() && !err.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let cube = write_constraints(&dir, "alphabet 5\nbox 1 0.1 0.5\n");
    let (status, _, err) = invoke(&["--constraints", &cube, "--samples", "10", "integrate", "1", "1", "1", "1", "1"]);
    assert_ne!(status, 0);
    assert!(err.contains("1000"), "{err}");

    let bad = dir.path().join("bad.bin");
    fs::write(&bad, [0u8, 1, 5]).unwrap();
    let (status, _, err) = invoke(&["--alphabet", "2", "compress", bad.to_str().unwrap()]);
    assert_ne!(status, 0);
    assert!(err.contains('5'), "{err}");

    let (status, _, _) = invoke(&["no-such-command"]);
    assert_eq!(status, 2);
}

#[test]
fn binary_exit_status_and_streams() {
    let exe = env!("CARGO_BIN_EXE_polykt");
    let ok = Command::new(exe).args(["predict", "1", "1", "1"]).output().unwrap();
    assert!(ok.status.success());
    assert_eq!(String::from_utf8_lossy(&ok.stdout).lines().count(), 3);
    assert!(ok.stderr.is_empty());
    let again = Command::new(exe).args(["predict", "1", "1", "1"]).output().unwrap();
    assert_eq!(ok.stdout, again.stdout);

    let bad = Command::new(exe).args(["predict", "--alphabet", "3", "1", "1"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(bad.stdout.is_empty());
    assert!(!bad.stderr.is_empty());
}
