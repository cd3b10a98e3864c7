use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ising-tau"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ising-tau-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn fixtures_path() -> String {
    format!(
        "{}/../core/fixtures/fixtures.json",
        env!("CARGO_MANIFEST_DIR")
    )
}

#[test]
fn solve_writes_monotone_csv() {
    let out = temp("traj.csv");
    let o = run(&[
        "solve",
        "--lambda-pi",
        "0.5",
        "--nu",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,q,p,chi,acc_H,acc_action,acc_aux");
    let ts: Vec<f64> = lines
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ts.len() > 10);
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn solve_trivial_member_is_zero() {
    let o = run(&["solve", "--lambda-pi", "0", "--nu", "0"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1], 0.0);
        assert_eq!(cols[2], 0.0);
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["solve", "--lambda-pi", "1.5"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "tau",
            "--t",
            "1",
            "--lambda-pi",
            "0.5",
            "--route",
            "fredholm"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(run(&["tau", "--t", "1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--t-grid", "1,x"]).status.code(), Some(2));
}

#[test]
fn tau_routes_agree() {
    let f = run(&[
        "tau",
        "--t",
        "1",
        "--lambda-pi",
        "1",
        "--branch",
        "minus",
        "--route",
        "fredholm",
    ]);
    let h = run(&[
        "tau",
        "--t",
        "1",
        "--lambda-pi",
        "1",
        "--branch",
        "minus",
        "--route",
        "hamiltonian",
    ]);
    assert!(f.status.success() && h.status.success());
    let (f, h) = (json(&f), json(&h));
    assert_eq!(f["route"], "fredholm");
    let rel = f["value"].as_f64().unwrap() / h["value"].as_f64().unwrap() - 1.0;
    assert!(rel.abs() <= 1e-5);
    for key in ["t", "params", "branch", "route", "value", "est_error"] {
        assert!(f.get(key).is_some(), "{key}");
    }
}

#[test]
fn tau_trivial_member_is_one() {
    let o = run(&[
        "tau",
        "--t",
        "1",
        "--lambda-pi",
        "0",
        "--branch",
        "minus",
        "--route",
        "hamiltonian",
    ]);
    assert!(o.status.success());
    assert_eq!(json(&o)["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn tau_other_routes() {
    let a = json(&run(&[
        "tau",
        "--t",
        "0.5",
        "--lambda-pi",
        "0.5",
        "--route",
        "action",
    ]));
    let h = json(&run(&["tau", "--t", "0.5", "--lambda-pi", "0.5"]));
    assert!((a["value"].as_f64().unwrap() / h["value"].as_f64().unwrap() - 1.0).abs() <= 1e-5);
    let n = json(&run(&[
        "tau",
        "--t",
        "1",
        "--lambda-pi",
        "0.5",
        "--nu",
        "0.25",
        "--route",
        "nu-product",
    ]));
    assert_eq!(n["route"], "nu_product");
    let s = json(&run(&[
        "tau",
        "--t",
        "0.001",
        "--lambda-pi",
        "0.5",
        "--route",
        "asymptotic",
    ]));
    assert_eq!(s["route"], "asymptotic_small_t");
    let l = json(&run(&[
        "tau",
        "--t",
        "8",
        "--lambda-pi",
        "0.5",
        "--branch",
        "plus",
        "--route",
        "asymptotic",
    ]));
    assert_eq!(l["route"], "asymptotic_large_t");
}

#[test]
fn verify_constants_and_output_file() {
    let out = temp("constants.json");
    let o = run(&[
        "verify",
        "--suite",
        "constants",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["suite"], "constants");
    assert!(report["runtime_seconds"].is_null());
    let checks = report["checks"].as_array().unwrap();
    assert!(checks
        .iter()
        .any(|c| c["name"] == "constants.wu_identity" && c["pass"] == true));
}

#[test]
fn verify_fails_under_impossible_tolerance() {
    let o = run(&["verify", "--suite", "specfn", "--tol-scale", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(
        run(&["verify", "--suite", "specfn", "--tol-scale", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_all_is_identical_across_thread_counts() {
    let one = bin()
        .args(["verify", "--suite", "all"])
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    let four = bin()
        .args(["verify", "--suite", "all"])
        .env("RAYON_NUM_THREADS", "4")
        .output()
        .unwrap();
    assert!(
        one.status.success(),
        "{}",
        String::from_utf8_lossy(&one.stderr)
    );
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn verify_with_fixtures_adds_checks() {
    let fx = fixtures_path();
    let o = run(&["verify", "--suite", "fredholm", "--fixtures", &fx]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&o);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"fixture.wu_constant"));
    assert!(names.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn fixtures_on_other_commands_report_deltas() {
    let fx = fixtures_path();
    let o = run(&["constants", "--lambda-pi", "0.5", "--fixtures", &fx]);
    assert!(o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("fixture.a_lambda_pi_0_5") && err.contains("delta="));
    let bad = temp("bad_fixtures.json");
    std::fs::write(&bad, r#"{"fixtures": [{"name": "wu_constant", "inputs": {}, "value": "0.7", "method": "wrong"}]}"#).unwrap();
    let o = run(&["constants", "--fixtures", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_a_est_matches_closed_form() {
    let o = run(&[
        "sweep",
        "--lambda-grid",
        "0.25,0.5,0.75",
        "--nu-grid",
        "0",
        "--quantity",
        "A_est",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for (row, envelope) in rows.iter().zip([0.25, 0.06, 0.02]) {
        let a: f64 = row[col("value")].parse().unwrap();
        let reference: f64 = row[col("reference")].parse().unwrap();
        assert!((a / reference - 1.0).abs() <= envelope, "{row:?}");
    }
}

#[test]
fn sweep_nu_is_monotone_and_ordered() {
    let args = [
        "sweep",
        "--lambda-grid",
        "0.5",
        "--nu-grid",
        "0.1,0.25,0.45",
        "--quantity",
        "A_est",
    ];
    let one = bin()
        .args(args)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .unwrap();
    let four = bin()
        .args(args)
        .env("RAYON_NUM_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    let nus: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(nus, vec![0.1, 0.25, 0.45]);
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn sweep_edge_cases() {
    let o = run(&["sweep", "--t-grid", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
    let o = run(&["sweep", "--lambda-grid", "0.5,2", "--t-grid", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().contains("lambda_pi must lie"));
    let o = run(&[
        "sweep",
        "--nu-grid",
        "0,0.25",
        "--t-grid",
        "1",
        "--quantity",
        "residuals",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn prefactor_and_constants() {
    let p = json(&run(&["prefactor", "--lambda-pi", "0.5"]));
    assert!(
        (p["a_est"].as_f64().unwrap() / p["a_of_lambda"].as_f64().unwrap() - 1.0).abs() <= 0.06
    );
    let r = p["decay_ratio"].as_f64().unwrap();
    assert!((0.3..=0.6).contains(&r));
    assert_eq!(
        run(&["prefactor", "--lambda-pi", "0.5", "--t-grid", "0.1,0.01"])
            .status
            .code(),
        Some(2)
    );

    let c = json(&run(&["constants", "--lambda-pi", "1"]));
    assert!(c["member"]["B"].is_null());
    let wu = c["wu_constant"].as_f64().unwrap();
    assert_eq!(wu, 0.645002448509577);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let cfg = temp("config.json");
    std::fs::write(&cfg, r#"{"t_seed": 20.0, "t_min": 0.01}"#).unwrap();
    let o = run(&[
        "solve",
        "--lambda-pi",
        "0.5",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let first: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let last: f64 = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(first, 0.01);
    assert_eq!(last, 20.0);
    let o = run(&[
        "solve",
        "--lambda-pi",
        "0.5",
        "--config",
        cfg.to_str().unwrap(),
        "--t-seed",
        "16",
    ]);
    let last: f64 = stdout(&o)
        .lines()
        .last()
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(last, 16.0);
    std::fs::write(&cfg, r#"{"t_min": -1}"#).unwrap();
    assert_eq!(
        run(&[
            "solve",
            "--lambda-pi",
            "0.5",
            "--config",
            cfg.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}
