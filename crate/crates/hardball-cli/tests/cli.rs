//! End-to-end tests of the `hardball` binary: exit codes, JSON output
//! shapes, and file handling.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardball"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Run and collect (exit code, stdout, stderr).
fn run(cmd: &mut Command) -> (i32, String, String) {
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(stdout: &str) -> Value {
    serde_json::from_str(stdout.trim()).unwrap()
}

struct Fixtures {
    _dir: tempfile::TempDir,
    rect: PathBuf,
    square: PathBuf,
    chain: PathBuf,
    ball: PathBuf,
}

fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let rect = write(p, "rect.json", r#"{"lengths": [1.0, 2.0]}"#);
    let square = write(p, "square.json", r#"{"lengths": [1.0, 1.0]}"#);
    let chain = write(
        p,
        "chain.json",
        r#"{"points": [[0.25, 1.0], [0.75, 1.0]], "radius": 0.25}"#,
    );
    let ball = write(p, "ball.json", r#"{"points": [[0.2, 0.3]]}"#);
    Fixtures {
        _dir: dir,
        rect,
        square,
        chain,
        ball,
    }
}

#[test]
fn tau_reports_chain_active_set() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("tau")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.chain));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["tau"], 0.25);
    assert_eq!(v["constraints"].as_array().unwrap().len(), 3);
}

#[test]
fn tau_missing_file_exits_2() {
    let f = fixtures();
    let (code, _, err) = run(bin()
        .arg("tau")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg("no-such-file.json"));
    assert_eq!(code, 2);
    assert!(err.contains("no-such-file.json"));
}

#[test]
fn tau_band_widens_active_set() {
    let f = fixtures();
    let ball = write(
        f.rect.parent().unwrap(),
        "mid.json",
        r#"{"points": [[0.5, 0.52]]}"#,
    );
    let count = |eps: Option<&str>| {
        let mut cmd = bin();
        cmd.arg("tau")
            .arg("--domain")
            .arg(&f.square)
            .arg("--config")
            .arg(&ball);
        if let Some(e) = eps {
            cmd.arg("--eps-act").arg(e);
        }
        let (code, out, _) = run(&mut cmd);
        assert_eq!(code, 0);
        json(&out)["constraints"].as_array().unwrap().len()
    };
    assert_eq!(count(None), 1);
    assert_eq!(count(Some("0.05")), 4);
}

#[test]
fn classify_chain_is_balanced_exit_10() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("classify")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.chain));
    assert_eq!(code, 10);
    let v = json(&out);
    assert_eq!(v["classification"], "balanced");
    let mut weights: Vec<f64> = v["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["weight"].as_f64().unwrap())
        .collect();
    weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(weights, vec![0.25, 0.25, 0.5]);
    assert_eq!(v["nontrivial"], true);
}

#[test]
fn classify_interior_ball_is_regular_exit_0() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("classify")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.ball));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["classification"], "regular");
    assert!(v["margin"].as_f64().unwrap() > 0.9);
}

#[test]
fn classify_huge_tolerance_is_ambiguous_exit_11() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("classify")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.ball)
        .arg("--margin-tol")
        .arg("10"));
    assert_eq!(code, 11);
    assert_eq!(json(&out)["classification"], "ambiguous");
}

#[test]
fn out_of_box_config_exits_3() {
    let f = fixtures();
    let outside = write(
        f.rect.parent().unwrap(),
        "outside.json",
        r#"{"points": [[1.5, 0.5]]}"#,
    );
    let (code, _, err) = run(bin()
        .arg("tau")
        .arg("--domain")
        .arg(&f.square)
        .arg("--config")
        .arg(&outside));
    assert_eq!(code, 3);
    assert!(err.contains("error"));
}

#[test]
fn negative_tolerance_exits_2() {
    let f = fixtures();
    let (code, _, _) = run(bin()
        .arg("classify")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.chain)
        .arg("--balance-tol=-1"));
    assert_eq!(code, 2);
}

#[test]
fn betti_tables_json() {
    let (code, out, _) = run(bin().args(["betti", "--n", "2", "--d", "2", "--k", "1"]));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["below"], json_arr(&[1, 1]));
    assert_eq!(v["above"], json_arr(&[2, 0]));
    assert_eq!(v["cells_attached"], 2);
    assert_eq!(v["cells_to_betti_N"], 1);
    assert_eq!(v["r_star"], Value::Null);
}

fn json_arr(xs: &[u64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::from(x)).collect())
}

#[test]
fn betti_takes_r_star_and_k_from_domain() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("betti")
        .arg("--n")
        .arg("2")
        .arg("--d")
        .arg("2")
        .arg("--domain")
        .arg(&f.rect));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["r_star"], 0.25);
    assert_eq!(v["above"], json_arr(&[2, 0]));
}

#[test]
fn chain_reports_critical_radius_and_certificate() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("chain")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--n")
        .arg("3"));
    assert_eq!(code, 0);
    let v = json(&out);
    assert!((v["r_star"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(v["classification"]["classification"], "balanced");
}

#[test]
fn chain_permutation_flag() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("chain")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--n")
        .arg("2")
        .arg("--perm")
        .arg("2,1"));
    assert_eq!(code, 0);
    let v = json(&out);
    // label 2 occupies the first slot
    assert_eq!(v["points"][1][0], 0.25);
    assert_eq!(v["points"][0][0], 0.75);
}

#[test]
fn sphere_is_deterministic_and_round_trips() {
    let f = fixtures();
    let args = |cmd: &mut Command| {
        cmd.arg("sphere")
            .arg("--domain")
            .arg(&f.rect)
            .args(["--n", "2", "--epsilon", "0.01", "--seed", "3"]);
    };
    let (code, out1, _) = run(args_into(&mut bin(), args));
    assert_eq!(code, 0);
    let (_, out2, _) = run(args_into(&mut bin(), args));
    assert_eq!(out1, out2);

    // the emitted sample is itself a valid configuration file whose tau is
    // exactly the sampling radius
    let sample = write(f.rect.parent().unwrap(), "sample.json", &out1);
    let (code, out, _) = run(bin()
        .arg("tau")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&sample));
    assert_eq!(code, 0);
    let tau = json(&out)["tau"].as_f64().unwrap();
    assert!((tau - 0.26).abs() < 1e-9);
}

fn args_into<'a>(cmd: &'a mut Command, f: impl Fn(&mut Command)) -> &'a mut Command {
    f(cmd);
    cmd
}

#[test]
fn emitted_json_reparses_identically() {
    let f = fixtures();
    let (_, out, _) = run(bin()
        .arg("tau")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.chain));
    let v = json(&out);
    assert_eq!(serde_json::to_string(&v).unwrap(), out.trim());
}

#[test]
fn sigma_membership_both_ways() {
    let f = fixtures();
    let p = f.rect.parent().unwrap();
    let up = write(
        p,
        "up.json",
        r#"{"points": [[0.26, 1.0], [0.74, 1.2]], "radius": 0.24}"#,
    );
    let down = write(
        p,
        "down.json",
        r#"{"points": [[0.26, 1.0], [0.74, 0.8]], "radius": 0.24}"#,
    );
    for (path, want) in [(&up, true), (&down, false)] {
        let (code, out, _) = run(bin()
            .arg("sigma")
            .arg("--domain")
            .arg(&f.rect)
            .arg("--config")
            .arg(path));
        assert_eq!(code, 0);
        assert_eq!(json(&out)["member"], want);
    }
}

#[test]
fn intersect_finds_the_witness() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("intersect")
        .arg("--domain")
        .arg(&f.rect)
        .args(["--n", "2", "--epsilon", "0.01"]));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["rank"], 4);
    let p = v["points"].as_array().unwrap();
    assert!((p[0][0].as_f64().unwrap() - 0.26).abs() < 1e-8);
    assert!((p[1][1].as_f64().unwrap() - 1.2).abs() < 1e-8);
}

#[test]
fn ascend_emits_monotone_jsonl() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("ascend")
        .arg("--domain")
        .arg(&f.square)
        .arg("--config")
        .arg(&f.ball)
        .args(["--target", "0.3", "--jsonl"]));
    assert_eq!(code, 0);
    let taus: Vec<f64> = out
        .lines()
        .map(|l| json(l)["tau"].as_f64().unwrap())
        .collect();
    assert!(taus.len() >= 2);
    assert!(taus.windows(2).all(|w| w[1] > w[0]));
    assert!((taus.last().unwrap() - 0.3).abs() < 1e-9);
}

#[test]
fn retract_batch_summary() {
    let f = fixtures();
    let p = f.rect.parent().unwrap();
    let a = write(p, "a.json", r#"{"points": [[0.15, 0.5]]}"#);
    let b = write(p, "b.json", r#"{"points": [[0.5, 0.85]]}"#);
    let (code, out, _) = run(bin()
        .arg("retract")
        .arg("--domain")
        .arg(&f.square)
        .arg("--config")
        .arg(&a)
        .arg("--config")
        .arg(&b)
        .args(["--from", "0.1", "--to", "0.3"]));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["complete"], true);
    assert_eq!(v["stalled"].as_array().unwrap().len(), 0);
    assert_eq!(v["trajectories"].as_array().unwrap().len(), 2);
}

#[test]
fn connect_counts_components() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("connect")
        .arg("--domain")
        .arg(&f.square)
        .args(["--n", "1", "--r", "0.3", "--samples", "40", "--seed", "5"])
        .env("HARDBALL_THREADS", "2"));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["components"], 1);
    assert_eq!(v["nodes"], 40);
}

#[test]
fn connect_sweep_emits_csv() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("connect")
        .arg("--domain")
        .arg(&f.square)
        .args(["--n", "1", "--samples", "30", "--r", "0.1"])
        .args(["--sweep", "0.1,0.2"]));
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.trim().lines().collect();
    assert_eq!(lines, vec!["r,components", "0.1,1", "0.2,1"]);
}

#[test]
fn render_writes_svg() {
    let f = fixtures();
    let out_path = f.rect.parent().unwrap().join("chain.svg");
    let (code, _, _) = run(bin()
        .arg("render")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.chain)
        .arg("--out")
        .arg(&out_path));
    assert_eq!(code, 0);
    let svg = std::fs::read_to_string(&out_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<circle").count(), 4);
}

#[test]
fn render_stress_graph_of_chain() {
    let f = fixtures();
    let (code, out, _) = run(bin()
        .arg("render")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.chain)
        .arg("--stress"));
    assert_eq!(code, 0);
    // pair edge plus two wall contacts
    assert_eq!(out.matches("<line").count(), 3);
}

#[test]
fn render_stress_of_regular_config_fails() {
    let f = fixtures();
    let (code, _, err) = run(bin()
        .arg("render")
        .arg("--domain")
        .arg(&f.rect)
        .arg("--config")
        .arg(&f.ball)
        .arg("--stress"));
    assert_eq!(code, 1);
    assert!(err.contains("regular"));
}
