use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sfd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfd"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn sfd")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = sfd(dir, args);
    assert!(
        out.status.success(),
        "sfd {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn generate(dir: &Path, name: &str, n: usize, d: usize, z: usize, format: &str) -> PathBuf {
    ok(
        dir,
        &[
            "generate",
            "--n",
            &n.to_string(),
            "--d",
            &d.to_string(),
            "--z",
            &z.to_string(),
            "--seed",
            "11",
            "--format",
            format,
            "--output",
            name,
        ],
    );
    dir.join(name)
}

fn sketch_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect()
}

#[test]
fn sketch_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    generate(p, "a.txt", 400, 80, 8, "plain");
    for algo in ["fd", "sfd"] {
        let args = |out: &'static str| {
            vec![
                "sketch", "--input", "a.txt", "--algo", algo, "--ell", "16", "--seed", "5",
                "--output", out,
            ]
        };
        ok(p, &args("one.csv"));
        ok(p, &args("two.csv"));
        assert_eq!(
            fs::read(p.join("one.csv")).unwrap(),
            fs::read(p.join("two.csv")).unwrap()
        );
        let rows = sketch_rows(&p.join("one.csv"));
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| r.len() == 80));
    }
}

#[test]
fn replay_reproduces_the_sketch() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    generate(p, "a.mtx", 300, 60, 6, "mtx");
    ok(
        p,
        &[
            "sketch", "--input", "a.mtx", "--algo", "sfd", "--ell", "12", "--seed", "9",
            "--output", "b.csv",
        ],
    );
    ok(
        p,
        &[
            "replay",
            "--manifest",
            "b.csv.manifest.json",
            "--output",
            "c.csv",
        ],
    );
    assert_eq!(
        fs::read(p.join("b.csv")).unwrap(),
        fs::read(p.join("c.csv")).unwrap()
    );
}

#[test]
fn manifest_records_a_single_forward_pass() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let a = generate(p, "a.txt", 250, 50, 5, "plain");
    ok(
        p,
        &[
            "sketch", "--input", "a.txt", "--algo", "sfd", "--ell", "10", "--output", "b.csv",
        ],
    );
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(p.join("b.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "sketch");
    assert_eq!(m["ell"], 10);
    assert_eq!(m["report"]["rows"], 250);
    assert_eq!(m["report"]["nnz"], 250 * 5);
    assert_eq!(m["report"]["input_bytes"], fs::metadata(a).unwrap().len());
    assert!(m["report"]["sfd"]["delta_spent"].as_f64().unwrap() <= 0.1);
}

#[test]
fn empty_stream_gives_zero_sketch() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("empty.txt"), "").unwrap();
    for algo in ["fd", "sfd"] {
        ok(
            p,
            &[
                "sketch",
                "--input",
                "empty.txt",
                "--dim",
                "7",
                "--algo",
                algo,
                "--ell",
                "3",
                "--output",
                "b.csv",
            ],
        );
        let rows = sketch_rows(&p.join("b.csv"));
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().flatten().all(|&x| x == 0.0));
    }
}

#[test]
fn generator_handles_fully_dense_rows() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let a = generate(p, "a.txt", 20, 6, 6, "plain");
    let text = fs::read_to_string(a).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.split_whitespace().count() == 6));
}

#[test]
fn eval_of_the_matrix_itself_is_exact() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let a = generate(p, "a.txt", 12, 10, 3, "plain");
    // The full matrix written as a dense sketch.
    let mut dense = vec![vec![0.0f64; 10]; 12];
    let text = fs::read_to_string(a).unwrap();
    for (i, line) in text.lines().filter(|l| !l.starts_with('#')).enumerate() {
        for tok in line.split_whitespace() {
            let (j, v) = tok.split_once(':').unwrap();
            dense[i][j.parse::<usize>().unwrap()] = v.parse().unwrap();
        }
    }
    let csv: String = dense
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    fs::write(p.join("b.csv"), csv).unwrap();
    ok(
        p,
        &[
            "eval", "--matrix", "a.txt", "--sketch", "b.csv", "--k", "3", "--algo", "fd",
            "--output", "m.csv",
        ],
    );
    let out = fs::read_to_string(p.join("m.csv")).unwrap();
    let fields: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let proj: f64 = fields[6].parse().unwrap();
    let cov: f64 = fields[7].parse().unwrap();
    assert!((proj - 1.0).abs() < 1e-8, "proj_err {proj}");
    assert!(cov.abs() < 1e-10, "cov_err {cov}");
    assert_eq!(fields[8], "NA");
}

#[test]
fn eval_reads_the_label_from_the_sketch_manifest() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    generate(p, "a.txt", 200, 40, 4, "plain");
    ok(
        p,
        &[
            "sketch", "--input", "a.txt", "--algo", "sfd", "--ell", "10", "--seed", "3",
            "--output", "b.csv",
        ],
    );
    ok(
        p,
        &[
            "eval", "--matrix", "a.txt", "--sketch", "b.csv", "--k", "4", "--output", "m.csv",
        ],
    );
    let out = fs::read_to_string(p.join("m.csv")).unwrap();
    let fields: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[0], "sfd");
    assert_eq!(fields[9], "3");
    assert!(fields[6].parse::<f64>().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn oversized_ell_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    generate(p, "a.txt", 10, 5, 2, "plain");
    let out = sfd(
        p,
        &[
            "sketch", "--input", "a.txt", "--algo", "fd", "--ell", "6", "--output", "b.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!p.join("b.csv").exists());
}

#[test]
fn ungrouped_matrix_market_is_rejected() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(
        p.join("a.mtx"),
        "%%MatrixMarket matrix coordinate real general\n3 3 3\n2 1 1.0\n1 2 1.0\n3 3 1.0\n",
    )
    .unwrap();
    let out = sfd(
        p,
        &[
            "sketch", "--input", "a.mtx", "--algo", "sfd", "--ell", "2", "--output", "b.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(sfd(p, &["sketch", "--algo", "nope"]).status.code(), Some(1));
    assert_eq!(sfd(p, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        sfd(
            p,
            &[
                "sketch",
                "--input",
                "missing.txt",
                "--algo",
                "fd",
                "--ell",
                "2",
                "--output",
                "b.csv"
            ]
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(sfd(p, &["--help"]).status.code(), Some(0));
}

#[test]
fn bench_writes_one_row_per_cell_and_algorithm() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    ok(
        p,
        &[
            "bench",
            "--sweep",
            "ell",
            "--scale",
            "0.02",
            "--fast-q",
            "--out-csv",
            "ell.csv",
        ],
    );
    let out = fs::read_to_string(p.join("ell.csv")).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "algo,n,d,ell,z,k,proj_err,cov_err,wall_seconds,seed"
    );
    assert_eq!(lines.len() - 1, 2 * 7);
    assert!(p.join("ell.csv.manifest.json").exists());
}

#[test]
fn both_sketchers_meet_the_covariance_bound_on_dense_input() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    generate(p, "a.txt", 60, 12, 12, "plain");
    let ell = 6;
    let bound = 1.0 / (6.0 / 41.0 * ell as f64);
    for algo in ["fd", "sfd"] {
        ok(
            p,
            &[
                "sketch", "--input", "a.txt", "--algo", algo, "--ell", "6", "--q", "60",
                "--output", "b.csv",
            ],
        );
        ok(
            p,
            &[
                "eval", "--matrix", "a.txt", "--sketch", "b.csv", "--k", "2", "--output", "m.csv",
            ],
        );
        let out = fs::read_to_string(p.join("m.csv")).unwrap();
        let cov: f64 = out
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(7)
            .unwrap()
            .parse()
            .unwrap();
        assert!(cov <= bound, "{algo}: cov_err {cov} above {bound}");
    }
}
