use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn pslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pslab"))
        .args(args)
        .env_remove("PSLAB_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("json report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pslab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn params_sheet_at_six() {
    let v = json(&pslab(&["params", "--c", "6", "--gamma", "0.995"]));
    let r = &v["result"];
    assert_eq!(r["rho"].as_f64(), Some(1.0 / 372.0));
    assert_eq!(r["nu"].as_f64(), Some(1.0 / 56.0));
    assert_eq!(r["t"], 22);
    assert_eq!(r["u"], 7);
    assert_eq!(r["s_constructed"], 59);
    assert_eq!(v["config"]["c"].as_f64(), Some(6.0));
    assert!(v["meta"].is_object());
}

#[test]
fn unknown_subcommand_exits_one() {
    let o = pslab(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.lines().next().unwrap().starts_with("error code=usage reason="));
    assert!(err.contains("Usage:"));
}

#[test]
fn s_out_of_range_exits_one() {
    let o = pslab(&["solve", "--N", "1000", "--s", "7"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error code=invalid_parameter reason="), "{err}");
}

#[test]
fn budget_exhaustion_exits_two() {
    let o = pslab(&["solve", "--N", "100000", "--s", "4", "--max-half", "16"]);
    assert_eq!(o.status.code(), Some(2), "stderr: {}", stderr(&o));
    assert!(stderr(&o).starts_with("error code=budget_exceeded"));
}

#[test]
fn help_exits_zero() {
    let o = pslab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("circle"));
}

#[test]
fn no_meta_is_byte_identical_across_runs_and_threads() {
    let base = ["solve", "--gamma", "0.95", "--c", "1.2", "--N", "10000", "--s", "3", "--eps", "0.1", "--mode", "all", "--no-meta"];
    let a = stdout(&pslab(&base));
    let b = stdout(&pslab(&base));
    assert_eq!(a, b);
    let with = |t: &str| {
        let mut args = base.to_vec();
        args.extend(["--threads", t]);
        stdout(&pslab(&args))
    };
    let (one, four) = (with("1"), with("4"));
    // Only the echoed thread count in the header differs.
    assert_eq!(one.lines().skip(1).collect::<Vec<_>>(), four.lines().skip(1).collect::<Vec<_>>());
    assert!(one.lines().count() > 2);
}

#[test]
fn solve_emits_json_lines() {
    let o = pslab(&["solve", "--N", "30", "--s", "3", "--eps", "40", "--floor", "2", "--ceiling", "30", "--mode", "first"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines[0]["config"].is_object());
    assert_eq!(lines[1]["primes"].as_array().unwrap().len(), 3);
    assert_eq!(lines.last().unwrap()["summary"]["count"], "1");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = scratch("config");
    let path = dir.join("run.cfg");
    std::fs::write(&path, "# run\ngamma = 0.95\nc = 2.0   # exponent\nno_meta = true\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&pslab(&["--config", p, "params"]));
    assert_eq!(v["config"]["gamma"].as_f64(), Some(0.95));
    assert_eq!(v["config"]["c"].as_f64(), Some(2.0));
    assert!(v.get("meta").is_none());
    let v = json(&pslab(&["--config", p, "params", "--c", "3"]));
    assert_eq!(v["config"]["c"].as_f64(), Some(3.0));
    assert_eq!(v["result"]["delta_closed_form"].as_f64(), Some(0.0));
}

#[test]
fn malformed_config_exits_one() {
    let dir = scratch("badcfg");
    let path = dir.join("bad.cfg");
    std::fs::write(&path, "gamma 0.95\n").unwrap();
    let o = pslab(&["--config", path.to_str().unwrap(), "params"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error code=config"));
}

#[test]
fn precision_from_environment_is_echoed() {
    let o = Command::new(env!("CARGO_BIN_EXE_pslab"))
        .args(["primes", "--count-to", "1000", "--format", "json"])
        .env("PSLAB_PRECISION_BITS", "256")
        .output()
        .unwrap();
    let v = json(&o);
    assert_eq!(v["config"]["precision_bits"], 256);
}

#[test]
fn window_dump_is_csv_with_preamble() {
    let o = pslab(&["primes", "--X", "200", "--gamma", "0.9", "--no-meta"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config {"));
    assert!(lines.next().unwrap().starts_with("# summary {"));
    assert_eq!(lines.next(), Some("n,is_prime,log_weight"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.windows(2).all(|w| w[0][0].parse::<u64>().unwrap() < w[1][0].parse::<u64>().unwrap()));
    assert!(rows.iter().any(|r| r[1] == "1"));
}

#[test]
fn kernel_tables_are_written() {
    let dir = scratch("kernel");
    let o = pslab(&["kernel", "--table-dir", dir.to_str().unwrap()]);
    let v = json(&o);
    assert_eq!(v["result"]["tables"].as_array().unwrap().len(), 2);
    let k = std::fs::read_to_string(dir.join("k.csv")).unwrap();
    let h = std::fs::read_to_string(dir.join("khat.csv")).unwrap();
    assert!(k.starts_with("x,K\n"));
    assert!(h.starts_with("t,Khat\n"));
    assert_eq!(k.lines().count(), 16_385 + 1);
}

#[test]
fn params_sweep_is_csv() {
    let o = pslab(&["params", "--sweep", "5:6:0.25", "--no-meta"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("c,gamma,rho,nu,t,u,"));
    assert_eq!(body.len(), 1 + 5);
}

#[test]
fn admissibility_for_one_theorem() {
    let v = json(&pslab(&["params", "--c", "1.04", "--gamma", "0.995", "--theorem", "thm2"]));
    assert_eq!(v["result"]["ok"], true);
    let v = json(&pslab(&["params", "--c", "1.05", "--gamma", "0.99", "--theorem", "thm2"]));
    assert_eq!(v["result"]["ok"], false);
}

#[test]
fn audit_csv_columns() {
    let o = pslab(&["audit", "--c", "6", "--gamma", "0.995", "--X", "1024,2048", "--no-meta"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "lemma,X,theta,h,measured,envelope,ratio,flag");
    assert_eq!(body.len(), 3);
}

#[test]
fn sums_reports_every_kind() {
    let v = json(&pslab(&["sums", "--X", "512", "--theta", "0.01,-0.01"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7 * 2);
    // S(-theta) is the conjugate of S(theta).
    let s: Vec<&Value> = rows.iter().filter(|r| r["kind"] == "S").collect();
    let (a, b) = (s[0]["im"].as_f64().unwrap(), s[1]["im"].as_f64().unwrap());
    assert!((a + b).abs() < 1e-9 * a.abs().max(1.0));
}

#[test]
fn circle_diagonal_on_the_small_preset() {
    let v = json(&pslab(&["circle", "--preset", "desk-small", "--parts", "diagonal", "--no-meta"]));
    let d = &v["result"]["diagonal"];
    assert_eq!(d["offdiagonal"], 0);
    assert_eq!(v["config"]["resolved"]["preset"], "desk-small");
    assert!(v["result"]["config"]["ranges"].as_array().unwrap().len() == 3);
}

#[test]
fn unknown_preset_exits_one() {
    let o = pslab(&["circle", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error code=unknown_id"));
}
