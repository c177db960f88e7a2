//! End-to-end runs of the `delay-pca` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delay-pca"))
}

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn find(dir: &Path, suffix: &str) -> PathBuf {
    let mut hits: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_str().unwrap().ends_with(suffix))
        .collect();
    hits.sort();
    assert_eq!(hits.len(), 1, "expected one *{suffix} in {}", dir.display());
    hits.pop().unwrap()
}

/// Minimal XML well-formedness check: balanced, properly nested elements.
fn assert_well_formed(xml: &str) {
    let body = xml.trim_start();
    let body = body
        .strip_prefix("<?xml")
        .map(|r| &r[r.find("?>").unwrap() + 2..])
        .unwrap_or(body);
    let mut stack: Vec<String> = Vec::new();
    let mut rest = body;
    let mut roots = 0;
    while let Some(open) = rest.find('<') {
        let close = rest[open..].find('>').expect("unterminated tag") + open;
        let tag = &rest[open + 1..close];
        assert_eq!(
            tag.matches('"').count() % 2,
            0,
            "unbalanced quotes in <{tag}>"
        );
        if let Some(name) = tag.strip_prefix('/') {
            assert_eq!(
                stack.pop().as_deref(),
                Some(name.trim()),
                "mismatched </{name}>"
            );
        } else {
            let name = tag
                .split_whitespace()
                .next()
                .unwrap()
                .trim_end_matches('/')
                .to_string();
            if stack.is_empty() {
                roots += 1;
            }
            if !tag.ends_with('/') {
                stack.push(name);
            }
        }
        let text = &rest[..open];
        assert!(!text.contains('>'), "stray '>' in text");
        rest = &rest[close + 1..];
    }
    assert!(stack.is_empty(), "unclosed elements {stack:?}");
    assert_eq!(roots, 1);
}

#[test]
fn exit_code_contract() {
    let out = tempfile::tempdir().unwrap();
    let missing = run(&[
        "simulate",
        "--problem",
        "no/such/file.json",
        "--out",
        p(out.path()),
    ]);
    assert_eq!(missing.status.code(), Some(1));

    let blowup = run(&[
        "simulate",
        "--problem",
        p(&problem("blowup.json")),
        "--T",
        "20",
        "--out",
        p(out.path()),
    ]);
    assert_eq!(blowup.status.code(), Some(2));

    let file_as_dir = out.path().join("plain-file");
    fs::write(&file_as_dir, "x").unwrap();
    let io = run(&[
        "simulate",
        "--problem",
        p(&problem("oscillating.json")),
        "--out",
        p(&file_as_dir),
    ]);
    assert_eq!(io.status.code(), Some(3));

    assert_eq!(run(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&[
            "simulate",
            "--problem",
            p(&problem("oscillating.json")),
            "--k",
            "0",
            "--out",
            p(out.path())
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        run(&[
            "simulate",
            "--problem",
            p(&problem("oscillating.json")),
            "--T",
            "-1",
            "--out",
            p(out.path())
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_precede_output() {
    let out = tempfile::tempdir().unwrap();
    let target = out.path().join("never");
    let r = run(&["simulate", "--problem", "missing.json", "--out", p(&target)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!target.exists());
}

#[test]
fn simulate_is_deterministic_and_plots_are_self_contained() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let r = run(&[
            "simulate",
            "--problem",
            p(&problem("oscillating.json")),
            "--T",
            "20",
            "--k",
            "2",
            "--plot",
            "--out",
            p(dir),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for suffix in ["_trajectory.csv", "_extension.csv", ".svg"] {
        assert_eq!(
            fs::read(find(a.path(), suffix)).unwrap(),
            fs::read(find(b.path(), suffix)).unwrap()
        );
    }
    let svg = fs::read_to_string(find(a.path(), ".svg")).unwrap();
    assert_well_formed(&svg);
    assert!(!svg.contains("href") && !svg.contains("url("));
    assert!(svg.contains("h=0.5"));
    assert!(svg.contains("<polyline"));

    // plot grid has spacing h/5
    let ext = read_csv(&find(a.path(), "_extension.csv"));
    assert_eq!(ext.len(), 201);
    let t1: f64 = ext[1][0].parse().unwrap();
    assert!((t1 - 0.1).abs() < 1e-15);
}

#[test]
fn zero_coefficient_is_flat() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&[
        "simulate",
        "--problem",
        p(&problem("frozen.json")),
        "--T",
        "10",
        "--k",
        "4",
        "--out",
        p(out.path()),
    ]);
    assert!(r.status.success());
    for row in read_csv(&find(out.path(), "_trajectory.csv")) {
        assert_eq!(row[2].parse::<f64>().unwrap(), 5.0);
    }
    for row in read_csv(&find(out.path(), "_extension.csv")) {
        assert_eq!(row[1].parse::<f64>().unwrap(), 5.0);
    }
}

#[test]
fn coarsest_step_runs() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&[
        "simulate",
        "--problem",
        p(&problem("oscillating.json")),
        "--T",
        "20",
        "--k",
        "1",
        "--out",
        p(out.path()),
    ]);
    assert!(r.status.success());
    let rows = read_csv(&find(out.path(), "_trajectory.csv"));
    assert_eq!(rows.len(), 1 + 1 + 20);
}

#[test]
fn compare_rows_shrink_with_step() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&[
        "compare",
        "--problem",
        p(&problem("oscillating.json")),
        "--T",
        "10",
        "--k-list",
        "2,3,4",
        "--fine-step",
        "0.00390625",
        "--plot",
        "--out",
        p(out.path()),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(find(out.path(), "_convergence.csv")).unwrap();
    assert!(text.starts_with("k,h,measured_max_error,bound,ratio_prev\n"));
    let rows = read_csv(&find(out.path(), "_convergence.csv"));
    assert_eq!(rows.len(), 3);
    let err = |i: usize| rows[i][2].parse::<f64>().unwrap();
    let bound = |i: usize| rows[i][3].parse::<f64>().unwrap();
    assert!(err(2) < err(0));
    assert!((0..3).all(|i| err(i) <= bound(i)));
    assert_eq!(rows[0][4], "");
    for k in [2, 3, 4] {
        assert_well_formed(
            &fs::read_to_string(find(out.path(), &format!("_k{k}_compare.svg"))).unwrap(),
        );
    }
}

#[test]
fn sweep_with_user_constants() {
    let out = tempfile::tempdir().unwrap();
    let consts = out.path().join("constants.json");
    fs::write(&consts, r#"{"K": 1.0, "sigma": 1e6, "M0": 1.0}"#).unwrap();
    let r = run(&[
        "sweep",
        "--problem",
        p(&problem("oscillating.json")),
        "--k",
        "16",
        "--constants",
        p(&consts),
        "--out",
        p(out.path()),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let path = find(out.path(), "_sweep.csv");
    assert!(fs::read_to_string(&path)
        .unwrap()
        .starts_with("k,h,K1,admissible,eta\n"));
    let rows = read_csv(&path);
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r[3] == "true" && !r[4].is_empty()));

    let frozen = tempfile::tempdir().unwrap();
    fs::write(&consts, r#"{"K": 1.0, "sigma": 0.5, "M0": 1.0}"#).unwrap();
    let r = run(&[
        "sweep",
        "--problem",
        p(&problem("frozen.json")),
        "--k",
        "8",
        "--constants",
        p(&consts),
        "--out",
        p(frozen.path()),
    ]);
    assert!(r.status.success());
    for row in read_csv(&find(frozen.path(), "_sweep.csv")) {
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.5);
    }
}

#[test]
fn sweep_needs_constants() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&[
        "sweep",
        "--problem",
        p(&problem("oscillating.json")),
        "--out",
        p(out.path()),
    ]);
    assert_eq!(r.status.code(), Some(1));
    let bad = out.path().join("bad.json");
    fs::write(&bad, r#"{"K": 1.0, "sigma": 1.0}"#).unwrap();
    let r = run(&[
        "sweep",
        "--problem",
        p(&problem("oscillating.json")),
        "--constants",
        p(&bad),
        "--out",
        p(out.path()),
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn fitted_sweep_reports_threshold() {
    let out = tempfile::tempdir().unwrap();
    let r = run(&[
        "sweep",
        "--problem",
        p(&problem("oscillating.json")),
        "--T",
        "60",
        "--k",
        "64",
        "--fit",
        "--out",
        p(out.path()),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8(r.stdout).unwrap();
    assert!(stdout.contains("admissible for all k >="), "{stdout}");
    let rows = read_csv(&find(out.path(), "_sweep.csv"));
    assert_eq!(rows[0][3], "false");
    assert_eq!(rows[63][3], "true");
}

#[test]
fn yorke_verdicts() {
    let out = tempfile::tempdir().unwrap();
    let verdict = |problem_path: &Path| {
        let dir = tempfile::tempdir_in(out.path()).unwrap();
        let r = run(&[
            "yorke",
            "--problem",
            p(problem_path),
            "--out",
            p(dir.path()),
        ]);
        assert!(r.status.success());
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(find(dir.path(), "_yorke.json")).unwrap())
                .unwrap();
        for key in ["alpha", "q", "alpha_q", "verdict"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        json["verdict"].as_str().unwrap().to_string()
    };
    assert_eq!(verdict(&problem("oscillating.json")), "satisfied");

    let strong = out.path().join("strong.json");
    fs::write(&strong, r#"{"label": "strong", "a": {"kind": "constant", "value": 2.0},
        "r": {"kind": "constant", "value": 1.0, "q": 1.0}, "phi": {"kind": "constant", "value": 1.0}}"#).unwrap();
    assert_eq!(verdict(&strong), "violated");

    let signed = out.path().join("signed.json");
    fs::write(
        &signed,
        r#"{"label": "signed", "a": {"kind": "sin_affine", "c0": 0.2, "c1": 1.0, "omega": 1.0},
        "r": {"kind": "abs_cos", "q": 1.0}, "phi": {"kind": "constant", "value": 1.0}}"#,
    )
    .unwrap();
    assert_eq!(verdict(&signed), "inconclusive");
}

#[test]
fn halanay_root_prints_eta() {
    let r = run(&["halanay-root", "--alpha", "1", "--beta", "0.5", "--q", "1"]);
    assert!(r.status.success());
    let eta: f64 = String::from_utf8(r.stdout).unwrap().trim().parse().unwrap();
    assert!((eta - 0.31492).abs() < 1e-5);
    assert_eq!(
        run(&["halanay-root", "--alpha", "0.5", "--beta", "1", "--q", "1"])
            .status
            .code(),
        Some(1)
    );
}
