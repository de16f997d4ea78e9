use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cqbl_core::channel_spec::ChannelSpec;
use cqbl_core::operator::{DensityMatrix, QuantumChannel};
use cqbl_core::region::CqBroadcastChannel;
use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cqbl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_spec(name: &str, ch: &CqBroadcastChannel, map: Option<&QuantumChannel>) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, ChannelSpec::from_channel(ch, map).to_json()).unwrap();
    path
}

fn cqbl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqbl")).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
}

fn noiseless_spec(name: &str) -> PathBuf {
    write_spec(name, &CqBroadcastChannel::noiseless_bit(), Some(&QuantumChannel::identity(2)))
}

#[test]
fn check_degraded_accepts_identity_map() {
    let spec = noiseless_spec("identity.json");
    let o = cqbl(&["check-degraded", arg(&spec)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(field(&out, "residual").parse::<f64>().unwrap() < 1e-10);
    assert_eq!(field(&out, "degraded"), "true");
}

#[test]
fn check_degraded_rejects_swapped_cascade() {
    let ch = CqBroadcastChannel::bsc_cascade(0.1, 0.1).unwrap().swapped();
    let spec = write_spec("swapped.json", &ch, None);
    let o = cqbl(&["check-degraded", arg(&spec)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert_eq!(field(&out, "degraded"), "false");
    assert!(field(&out, "residual").parse::<f64>().unwrap() > 1e-3);
}

#[test]
fn malformed_spec_is_a_usage_error() {
    let path = scratch("broken.json");
    std::fs::write(&path, "{\"alphabet\": [\"0\"], \"d_B\": 2").unwrap();
    assert_eq!(cqbl(&["check-degraded", arg(&path)]).status.code(), Some(2));
    assert_eq!(cqbl(&["check-degraded", "/nonexistent/spec.json"]).status.code(), Some(2));
    assert_eq!(cqbl(&["no-such-command"]).status.code(), Some(2));
}

fn parse_region(csv: &str) -> (Vec<(f64, f64)>, String) {
    let mut rows = Vec::new();
    let mut footer = String::new();
    for line in csv.lines().skip(1) {
        if line.starts_with('#') {
            footer = line.to_string();
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5, "{line}");
        rows.push((cols[0].parse().unwrap(), cols[1].parse().unwrap()));
    }
    (rows, footer)
}

#[test]
fn region_on_noiseless_bit_traces_the_line() {
    let spec = noiseless_spec("region.json");
    // the grid is in nats whatever the output unit; 1 nat exceeds the capacity
    let o = cqbl(&["region", arg(&spec), "--t-grid", "0,0.3,0.6,1", "--bits"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping t = 1"));
    let out = stdout(&o);
    assert!(out.starts_with("t,F_t,certified,i_xb_u,i_uc\n"));
    let (rows, footer) = parse_region(&out);
    assert_eq!(rows.len(), 3);
    for (t, f) in rows {
        // in bits the boundary is F(t) = 1 - t
        assert!((f - (1.0 - t)).abs() < 1e-3, "t {t} F {f}");
    }
    assert!(footer.starts_with("# concavity pass"), "{footer}");
}

#[test]
fn region_on_useless_channel_is_zero() {
    let ch = CqBroadcastChannel::constant(DensityMatrix::maximally_mixed(4), 2, 2, 2).unwrap();
    let spec = write_spec("useless.json", &ch, None);
    let out_path = scratch("useless.csv");
    let o = cqbl(&["region", arg(&spec), "--t-grid", "5", "--out", arg(&out_path)]);
    assert_eq!(o.status.code(), Some(0));
    let (rows, _) = parse_region(&std::fs::read_to_string(&out_path).unwrap());
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|&(t, f)| t.abs() < 1e-12 && f.abs() < 1e-9));
}

#[test]
fn bound_rejects_eps_outside_unit_interval() {
    let spec = noiseless_spec("bound-eps.json");
    for eps in ["0", "1", "1.5"] {
        assert_eq!(cqbl(&["bound", arg(&spec), "--n", "100", "--eps", eps]).status.code(), Some(2));
    }
}

fn bound_json(spec: &Path, rb: &str, rc: &str) -> Value {
    let o = cqbl(&["bound", arg(spec), "--n", "100", "--eps", "0.1", "--rate-rb", rb, "--rate-rc", rc]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn bound_classifies_rate_pairs() {
    let spec = noiseless_spec("bound.json");
    let inside = bound_json(&spec, "0.2", "0.2");
    assert_eq!(inside["unit"], "nats");
    assert_eq!(inside["exponent"]["status"], "inside_region");
    assert!(inside["error_floor"].is_null());

    let outside = bound_json(&spec, "0.6", "0.6");
    assert_eq!(outside["exponent"]["status"], "outside");
    let floor = outside["error_floor"].as_f64().unwrap();
    assert!(floor > 0.0 && floor < 1.0);
    // second-order bounds sit above ln 2
    assert!(outside["rb_bound"].as_f64().unwrap() > std::f64::consts::LN_2);
}

#[test]
fn verify_is_deterministic_per_seed() {
    let run = || stdout(&cqbl(&["verify", "--suite", "alt", "--seed", "7", "--trials", "50"]));
    let a = run();
    assert_eq!(a, run());
    let doc: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["violations"], 0);
    assert_eq!(doc["suites"][0]["trials"], 50);
}

#[test]
fn verify_rhc_reports_probe() {
    let o = cqbl(&["verify", "--suite", "rhc", "--seed", "3", "--trials", "40"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let suite = &doc["suites"][0];
    assert_eq!(suite["suite"], "rhc");
    assert!(suite["metrics"]["noncommuting_probe"]["instances"].as_u64().unwrap() > 0);
}

#[test]
fn audit_finds_no_violations_on_small_codes() {
    let spec = noiseless_spec("audit.json");
    let csv = scratch("audit.csv");
    let o = cqbl(&["audit", arg(&spec), "--n", "1", "--m-size", "2", "--k-size", "1", "--csv", arg(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["fano"]["violations"], 0);
    assert_eq!(doc["single_letter"]["violations"], 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("index,decoder,epsilon,lhs,rhs,slack\n"));
    assert!(text.contains(",pgm,") && text.contains(",local,"));
}
