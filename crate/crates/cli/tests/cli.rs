use std::fs;
use std::process::{Command, Output};

use segmerge::io::{read_compressed, write_features, write_weights};
use segmerge::{generate_synthetic, SyntheticSpec, VideoShape};

fn segmerge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segmerge")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &[
    "--synthetic", "12,8,16,4,7,3",
    "--segments", "3",
    "--tokens-per-segment", "5",
    "--global-layers", "2",
    "--heads", "4",
];

fn with(extra: &[&str]) -> Vec<String> {
    SMALL.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(cmd: &str, args: &[String]) -> Output {
    let mut all = vec![cmd];
    all.extend(args.iter().map(String::as_str));
    segmerge(&all)
}

#[test]
fn compress_writes_container_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.lvcr");
    let o = run("compress", &with(&["--out", out.to_str().unwrap()]));
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("input_tokens=96 output_tokens=17 ratio="), "{line}");
    assert!(line.contains("coverage=") && line.contains("wall_s="));
    let m = read_compressed(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!((m.rows, m.cols), (17, 16));
}

#[test]
fn input_file_matches_synthetic_flag() {
    let dir = tempfile::tempdir().unwrap();
    let features = generate_synthetic(&SyntheticSpec::events(
        VideoShape { frames: 12, patches: 8, dim: 16, layers: 4 },
        7,
        3,
    ))
    .unwrap();
    let lvft = dir.path().join("in.lvft");
    write_features(&features, fs::File::create(&lvft).unwrap()).unwrap();

    let a = dir.path().join("a.lvcr");
    let b = dir.path().join("b.lvcr");
    assert!(run("compress", &with(&["--out", a.to_str().unwrap()])).status.success());
    let args: Vec<String> = [
        "--input", lvft.to_str().unwrap(), "--segments", "3", "--tokens-per-segment", "5",
        "--global-layers", "2", "--heads", "4", "--out", b.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let o = run("compress", &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn non_dividing_segments_fail_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.lvcr");
    let o = segmerge(&[
        "compress", "--synthetic", "100,4,16,5,1", "--segments", "7", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("ERROR SNotDividingT:"), "{err}");
    assert_eq!(err.lines().count(), 1);
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);

    let o = segmerge(&[
        "compress", "--synthetic", "100,4,16,5,1", "--segments", "7", "--tokens-per-segment", "4",
        "--truncate", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("output_tokens=33"));
}

#[test]
fn bad_flags_are_machine_readable() {
    let o = segmerge(&["compress", "--synthetic", "10,2,8,1,0", "--partition", "sideways"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR InvalidArgument:"));
    let o = segmerge(&["compress", "--synthetic", "10,2,1000,5,0", "--segments", "1", "--tokens-per-segment", "1"]);
    assert!(stderr(&o).starts_with("ERROR CNotDividingD:"), "{}", stderr(&o));
    let o = segmerge(&["compress", "--input", "/nonexistent/file.lvft"]);
    assert!(stderr(&o).starts_with("ERROR Io:"), "{}", stderr(&o));
}

#[test]
fn projection_from_weights_file() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("w.lvpw");
    // d_out = 2: first row sums all channels, second picks channel 0; bias (1, -1).
    let mut matrix = vec![1.0f32; 16];
    matrix.extend((0..16).map(|c| if c == 0 { 1.0 } else { 0.0 }));
    write_weights(2, 16, &matrix, &[1.0, -1.0], fs::File::create(&weights).unwrap()).unwrap();

    let plain = dir.path().join("plain.lvcr");
    let projected = dir.path().join("proj.lvcr");
    assert!(run("compress", &with(&["--out", plain.to_str().unwrap()])).status.success());
    let o = run("compress", &with(&["--project", weights.to_str().unwrap(), "--out", projected.to_str().unwrap()]));
    assert!(o.status.success(), "{}", stderr(&o));

    let x = read_compressed(fs::File::open(plain).unwrap()).unwrap();
    let y = read_compressed(fs::File::open(projected).unwrap()).unwrap();
    assert_eq!((y.rows, y.cols), (17, 2));
    for i in 0..17 {
        let row = &x.data[i * 16..(i + 1) * 16];
        let sum: f64 = row.iter().map(|&v| v as f64).sum();
        assert!((y.data[2 * i] as f64 - (sum + 1.0)).abs() < 1e-5);
        assert_eq!(y.data[2 * i + 1], row[0] - 1.0);
    }

    let wrong = dir.path().join("wrong.lvpw");
    write_weights(1, 8, &[0.0; 8], &[0.0], fs::File::create(&wrong).unwrap()).unwrap();
    let out = dir.path().join("never.lvcr");
    let o = run("compress", &with(&["--project", wrong.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert!(stderr(&o).starts_with("ERROR DimensionMismatch:"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn inspect_plans() {
    let o = run("inspect", &with(&["--segment", "1", "--dump-plan"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("plan segment=1 initial=32 final=5 steps="), "{text}");
    assert!(text.lines().nth(1).unwrap().starts_with("step 0 R=32 r="));

    let o = segmerge(&[
        "inspect", "--synthetic", "4,2,8,1,3", "--segments", "2", "--tokens-per-segment", "4",
        "--global-layers", "1", "--heads", "2", "--segment", "0", "--dump-plan",
    ]);
    assert_eq!(stdout(&o), "plan segment=0 initial=4 final=4 steps=0\n");

    let o = segmerge(&[
        "inspect", "--synthetic", "10,256,16,1,3", "--segments", "1", "--global-layers", "1",
        "--heads", "4", "--segment", "0",
    ]);
    assert_eq!(stdout(&o), "segment=0 initial=2560 final=30 steps=6 r=[1280, 640, 320, 160, 80, 50]\n");

    let o = run("inspect", &with(&["--segment", "3"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR SegmentOutOfRange:"));
}

#[test]
fn oracle_check_passes_and_detects_faults() {
    let o = segmerge(&["oracle-check", "--trials", "100", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains(" PASS")).count(), 100);

    let o = segmerge(&["oracle-check", "--trials", "40", "--seed", "3", "--inject-tiebreak-bug"]);
    assert_eq!(o.status.code(), Some(2));
    let fail = stdout(&o).lines().find(|l| l.contains(" FAIL ")).map(str::to_string).expect("a failing trial");
    assert!(fail.contains("step="), "{fail}");
    assert!(stderr(&o).starts_with("ERROR OracleMismatch:"));

    let o = segmerge(&["oracle-check", "--max-tokens", "8192"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR InputTooLargeForOracle:"));
}

#[test]
fn bench_reports() {
    let o = run("bench", &with(&["--repeat", "3", "--json"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let obj = v.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "merge_steps", "peak_rss_bytes", "repeat", "segment_ms_median", "segment_ms_p95",
            "segments", "similarity_evaluations", "threads", "tokens_in_per_segment",
            "tokens_out_per_segment", "tokens_per_second", "total_ms_median", "total_ms_p95",
        ]
    );
    assert_eq!(obj["segments"], 3);
    assert_eq!(obj["tokens_out_per_segment"], 5);

    let o = run("bench", &with(&["--repeat", "0"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR InvalidArgument:"));

    let o = run("bench", &with(&["--repeat", "1"]));
    assert!(stdout(&o).contains("segment merge: median"));
}

#[test]
fn help_exits_cleanly() {
    let o = segmerge(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("compress"));
}
