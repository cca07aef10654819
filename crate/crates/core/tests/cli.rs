use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use social_ucb::io::{CURVES_HEADER, NETWORK_HEADER, RECORDS_HEADER, SUMMARY_HEADER};
use social_ucb::SimConfig;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_social-ucb")).args(args).output().unwrap()
}

fn small<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--quiet", "--trials", "2", "--set", "n_agents=8", "--set", "horizon=40", "--out", out];
    v.extend_from_slice(extra);
    v
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn golden_headers() {
    assert_eq!(RECORDS_HEADER, "trial,step,agent,kind,target,reward,fitness,cum_fitness,step_regret,cum_regret");
    assert_eq!(NETWORK_HEADER, "trial,step,avg_degree,avg_clustering,largest_component,edge_count");
    assert_eq!(SUMMARY_HEADER, "policy,mean_final_cum_fitness,ci95,mean_final_cum_regret");
    assert_eq!(
        CURVES_HEADER,
        "step,mean_cum_fitness,ci95_cum_fitness,mean_cum_regret,ci95_cum_regret,mean_reward,ci95_reward"
    );
}

#[test]
fn run_writes_complete_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = bin(&["run"].iter().copied().chain(small(out.to_str().unwrap(), &[])).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().next().unwrap(), RECORDS_HEADER);
    // N * T * K data rows
    assert_eq!(records.lines().count() - 1, 8 * 40 * 2);
    for line in records.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 10);
        for real in &cols[5..] {
            assert_eq!(real.split('.').nth(1).map(str::len), Some(6), "{line}");
        }
        if cols[3] == "idle" {
            assert_eq!(cols[4], "-1");
        }
    }

    let network = fs::read_to_string(out.join("network.csv")).unwrap();
    assert_eq!(network.lines().next().unwrap(), NETWORK_HEADER);
    // t = 0, 10, 20, 30, 40 per trial
    assert_eq!(network.lines().count() - 1, 5 * 2);

    assert_eq!(header(&out.join("summary.csv")), SUMMARY_HEADER);
    assert_eq!(header(&out.join("curves.csv")), CURVES_HEADER);
    for t in [0, 40] {
        assert!(out.join(format!("graph_t{t}.edges")).exists());
    }
    // 100 and 300 lie beyond the horizon
    assert!(!out.join("graph_t100.edges").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["n_agents"], 8);
    let rows = manifest["outputs"].as_array().unwrap().iter().find(|f| f["file"] == "records.csv").unwrap();
    assert_eq!(rows["rows"], 640);
}

#[test]
fn manifest_config_reproduces_records() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = bin(&["run"].iter().copied().chain(small(first.to_str().unwrap(), &["--seed", "99"])).collect::<Vec<_>>());
    assert!(o.status.success());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
    let mut config: SimConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    let second = tmp.path().join("second");
    config.output_dir = second.clone();
    let cfg_path = tmp.path().join("echo.toml");
    fs::write(&cfg_path, config.to_toml()).unwrap();

    let o = bin(&["run", "--quiet", "--config", cfg_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["records.csv", "network.csv", "curves.csv", "summary.csv", "graph_t0.edges"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seeds_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    bin(&["run"].iter().copied().chain(small(a.to_str().unwrap(), &["--seed", "1"])).collect::<Vec<_>>());
    bin(&["run"].iter().copied().chain(small(b.to_str().unwrap(), &["--seed", "2"])).collect::<Vec<_>>());
    assert_ne!(fs::read(a.join("records.csv")).unwrap(), fs::read(b.join("records.csv")).unwrap());
}

#[test]
fn compare_emits_four_policies_and_joint_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cmp");
    let o = bin(&["compare"].iter().copied().chain(small(out.to_str().unwrap(), &[])).collect::<Vec<_>>());
    assert!(o.status.success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    let policies: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(policies, ["social_ucb", "random_walk", "exploit_only", "mab_only"]);
    for p in policies {
        assert!(out.join(p).join("records.csv").exists());
    }
}

#[test]
fn sweep_makes_one_directory_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = bin(&["sweep"]
        .iter()
        .copied()
        .chain(small(out.to_str().unwrap(), &["--p-frag", "0.05,0.25", "--sigma-scale", "0.5,1.5"]))
        .collect::<Vec<_>>());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    assert_eq!(dirs.len(), 4);
    let text = fs::read_to_string(out.join("p_frag=0.25_sigma_scale=1.5").join("manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest["config"]["p_frag"], 0.25);
    assert_eq!(manifest["config"]["sigma_scale"], 1.5);
}

#[test]
fn validate_echoes_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let o = bin(&["validate", "--out", out.to_str().unwrap(), "--set", "gamma=0.8"]);
    assert!(o.status.success());
    let echoed = String::from_utf8(o.stdout).unwrap();
    let parsed = SimConfig::from_toml(&echoed).unwrap();
    assert_eq!(parsed.gamma, 0.8);
    assert_eq!(parsed.horizon, SimConfig::default().horizon);
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--policy", "greedy"]).status.code(), Some(2));
    assert_eq!(bin(&[]).status.code(), Some(2));
}

#[test]
fn bad_configuration_is_a_diagnosed_failure() {
    let o = bin(&["validate", "--set", "gamma=1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));

    let o = bin(&["validate", "--set", "no_such_key=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_key"));

    let o = bin(&["validate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
}
