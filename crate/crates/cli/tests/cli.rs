//! End-to-end tests driving the `simulate` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn simulate(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_grid_transform_assign_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(
        &[
            "gen-grid",
            "--rows",
            "4",
            "--cols",
            "4",
            "--highway-corridor",
            "--out",
            "net.csv",
            "--od-out",
            "od.csv",
        ],
        dir.path(),
    );
    assert_success(&out);
    assert!(dir.path().join("net.csv").exists());
    assert!(dir.path().join("od.csv").exists());

    let out = simulate(
        &["transform", "--network", "net.csv", "--out", "net_av.csv"],
        dir.path(),
    );
    assert_success(&out);
    let text = fs::read_to_string(dir.path().join("net_av.csv")).unwrap();
    assert!(text.contains("av_only"));
    assert!(text.contains("connector"));

    let out = simulate(
        &[
            "assign",
            "--network",
            "net.csv",
            "--od",
            "od.csv",
            "--av-percent",
            "50",
            "--scenario",
            "with-av-lane",
            "--agents",
            "500",
            "--seed",
            "3",
            "--out",
            "cell",
        ],
        dir.path(),
    );
    assert_success(&out);
    let links = fs::read_to_string(dir.path().join("cell/links.csv")).unwrap();
    assert!(links.starts_with("link_id,flow_av,flow_cv,p_av,capacity,travel_time"));
    let agents = fs::read_to_string(dir.path().join("cell/agents.csv")).unwrap();
    assert!(agents.starts_with("agent_id,class,travel_time_s,distance_m,route"));
    assert_eq!(agents.lines().count(), 501); // header + one row per agent
}

#[test]
fn analytic_prints_solution_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(
        &[
            "analytic", "--lanes", "1", "--headway-av", "1.0", "--headway-cv", "1.8", "--flow",
            "4000", "--p", "0.3",
        ],
        dir.path(),
    );
    assert_success(&out);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let threshold = doc["saturation_threshold"].as_f64().unwrap();
    assert!((threshold - 0.6428571428571429).abs() < 1e-12);
    assert_eq!(doc["solution"]["saturated"], serde_json::json!(false));
    let f1 = doc["solution"]["av_lane_flow"].as_f64().unwrap();
    assert_eq!(f1, 1200.0);
    assert!(doc["no_lane_time"].as_f64().is_some());
}

#[test]
fn sweep_from_config_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&simulate(
        &[
            "gen-grid",
            "--rows",
            "4",
            "--cols",
            "4",
            "--highway-corridor",
            "--out",
            "net.csv",
            "--od-out",
            "od.csv",
        ],
        dir.path(),
    ));
    fs::write(
        dir.path().join("sweep.toml"),
        r#"
network = "net.csv"
od = "od.csv"
agents = 300
av_percents = [0, 50, 100]
seed = 11

[assignment]
batch_count = 10
max_passes = 5
"#,
    )
    .unwrap();
    let out = simulate(
        &["sweep", "--config", "sweep.toml", "--out", "report"],
        dir.path(),
    );
    assert_success(&out);
    let summary = fs::read_to_string(dir.path().join("report/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3); // header + scenarios x percents
    assert!(dir.path().join("report/manifest.json").exists());
    assert!(dir.path().join("report/series/avg_time_all.csv").exists());

    // determinism across two CLI invocations
    assert_success(&simulate(
        &["sweep", "--config", "sweep.toml", "--out", "report2"],
        dir.path(),
    ));
    let again = fs::read_to_string(dir.path().join("report2/summary.csv")).unwrap();
    assert_eq!(summary, again);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    // usage error: unknown subcommand
    let out = simulate(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // input validation error: link references an undeclared node
    fs::write(
        dir.path().join("bad.csv"),
        "type,id,from,to,length_m,lanes,speed_mps,class\nnode,1\nlink,9,1,7,100,2,20,highway\n",
    )
    .unwrap();
    let out = simulate(
        &["transform", "--network", "bad.csv", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    // runtime error: OD pair unreachable for the population
    fs::write(
        dir.path().join("split.csv"),
        "type,id,from,to,length_m,lanes,speed_mps,class\nnode,1\nnode,2\nnode,3\nnode,4\n\
         link,0,1,2,100,1,20,other\nlink,1,3,4,100,1,20,other\n",
    )
    .unwrap();
    fs::write(dir.path().join("od.csv"), "origin,destination,weight\n1,4,1\n").unwrap();
    let out = simulate(
        &[
            "assign",
            "--network",
            "split.csv",
            "--od",
            "od.csv",
            "--av-percent",
            "0",
            "--scenario",
            "no-av-lane",
            "--agents",
            "10",
            "--out",
            "cell",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    // missing file is a runtime (I/O) failure
    let out = simulate(
        &["transform", "--network", "nope.csv", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}
