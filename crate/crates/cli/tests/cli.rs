use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn quadps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadps"))
        .args(args)
        .env_remove("QUADPS_ACCURACY")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(summary: &str, key: &str) -> f64 {
    let start = summary.find(&format!("{key}=")).unwrap() + key.len() + 1;
    summary[start..].split_whitespace().next().unwrap().trim_end_matches(';').parse().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn pauli_pair_gap_pair() {
    let o = quadps(&["gap", "--model", "example:pauli_pair", "--lambda", "0,0", "--both"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    // σ_x² + σ_y² = 2I, σ_x + iσ_y is nilpotent, ‖[σ_x, σ_y]‖ = ‖2iσ_z‖ = 2
    assert!((field(&s, "mu_q") - 2f64.sqrt()).abs() < 1e-9);
    assert!(field(&s, "mu_c").abs() < 1e-9);
    assert!((field(&s, "bound") - 2.0).abs() < 1e-9);
    assert!(s.contains("wall"));
}

#[test]
fn gap_writes_json_with_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = quadps(&["gap", "--model", "ssh", "--lambda", "4.5,0", "--kind", "clifford", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("gap.json"));
    assert_eq!(doc["model_fingerprint"].as_str().unwrap().len(), 64);
    assert_eq!(doc["config"]["command"], "gap");
    assert!(doc["config"].get("output").is_none());
    assert!(doc["result"]["clifford"].as_f64().unwrap() >= 0.0);
}

#[test]
fn examples_listing() {
    let names = ["ssh", "ssh-path", "pauli_pair", "pair_3x3", "pair_4x4", "class_d_7", "chern2d"];
    let o = quadps(&["examples"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for n in names {
        assert!(s.lines().any(|l| l.starts_with(n)), "{n} missing");
    }
    let o = quadps(&["examples", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let listed: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    for n in names {
        assert!(listed.contains(&n));
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = quadps(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["gap", "--model", "ssh", "--lambda", "1"],
        vec!["gap", "--model", "nonsense", "--lambda", "1,0"],
        vec!["gap", "--model", "ssh"],
        vec!["sweep", "--model", "ssh", "--grid", "x=0:9:1"],
        vec!["sweep", "--model", "ssh", "--grid", "x=0:9:5", "--pruning"],
        vec!["flow", "--model", "ssh", "--lambda", "4,0"],
        vec!["truncate", "--model", "ssh", "--lambda", "4.5,0", "--rho", "-1"],
        vec!["gap", "--matrix", "/nonexistent/x.mat", "--lambda", "0"],
        vec!["gap", "--model", "ssh", "--lambda", "4,0", "--set", "v=abc"],
        vec!["gap", "--model", "ssh", "--lambda", "4,0", "--out", blocker.to_str().unwrap()],
        vec!["sweep", "--model", "ssh", "--grid", "x=0:9:5", "--threads", "0"],
    ];
    for args in cases {
        let o = quadps(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn accuracy_env_is_validated() {
    let run = |acc: &str| {
        Command::new(env!("CARGO_BIN_EXE_quadps"))
            .args(["gap", "--model", "ssh", "--lambda", "4.5,0"])
            .env("QUADPS_ACCURACY", acc)
            .output()
            .unwrap()
    };
    assert_eq!(run("1e-8").status.code(), Some(0));
    assert_eq!(run("fast").status.code(), Some(2));
    assert_eq!(run("2").status.code(), Some(2));
}

#[test]
fn ssh_clifford_sweep_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig");
    let o = quadps(&[
        "sweep",
        "--model",
        "ssh",
        "--grid",
        "x=0:9:101,E=-3:3:101",
        "--kind",
        "clifford",
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("8 local minima"));

    let csv = fs::read_to_string(out.join("gap.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# kind,axes,model_fingerprint"));
    assert!(lines.next().unwrap().starts_with("# clifford,x=0:9:101;E=-3:3:101,"));
    assert_eq!(lines.count(), 101 * 101);

    let pgm = fs::read_to_string(out.join("gap.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n"));
    assert_eq!(pgm.split_whitespace().filter(|t| t.parse::<u32>().is_ok()).count(), 3 + 101 * 101);

    let doc = read_json(&out.join("gap.json"));
    assert_eq!(doc["metadata"]["local_minima"].as_array().unwrap().len(), 8);
    assert_eq!(doc["metadata"]["config"]["kind"], "clifford");
    assert!(doc["metadata"]["epsilon_components"].as_u64().unwrap() >= 1);
    assert_eq!(doc["partial"], false);
}

#[test]
fn pruned_sweep_agrees_below_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["sweep", "--model", "ssh", "--grid", "x=0:9:41,E=-3:3:41", "--epsilon", "0.3"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", out.to_str().unwrap()]);
        assert_eq!(quadps(&args).status.code(), Some(0));
        read_json(&out.join("gap.json"))
    };
    let full = run("full", &[]);
    let pruned = run("pruned", &["--pruning"]);
    let skipped = pruned["skipped_mask"].as_array().unwrap();
    assert!(skipped.iter().any(|b| b.as_bool().unwrap()));
    assert_eq!(full["metadata"]["epsilon_cells"], pruned["metadata"]["epsilon_cells"]);
    assert_eq!(full["metadata"]["epsilon_components"], pruned["metadata"]["epsilon_components"]);
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let write_config = |out: &Path| {
        let cfg = serde_json::json!({
            "model": {"kind": "chern2d", "parameters": {"size_x": 6, "size_y": 6}},
            "command": "sweep",
            "grid": "x=-4:4:9,y=-4:4:9",
            "lambda": [0.0, 0.0, 0.0],
            "kind": "clifford",
            "kappa": 0.5,
            "output": out,
        });
        fs::write(&config, cfg.to_string()).unwrap();
    };
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "2", "1"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        write_config(&out);
        let o = quadps(&["--threads", threads, "run", "--config", config.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(out);
    }
    for name in ["gap.csv", "gap.pgm", "gap.json"] {
        let first = fs::read(outputs[0].join(name)).unwrap();
        for other in &outputs[1..] {
            assert_eq!(first, fs::read(other.join(name)).unwrap(), "{name} differs");
        }
    }
}

#[test]
fn reduced_flow_has_one_sign_change() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow");
    let o = quadps(&[
        "flow",
        "--model",
        "ssh-path",
        "--lambda",
        "4,0",
        "--operator",
        "reduced",
        "--samples",
        "101",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("1 determinant sign changes"));
    let csv = fs::read_to_string(out.join("flow.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# operator=reduced_localizer"));
    assert!(lines[1].starts_with("t,eig_1,"));
    assert_eq!(lines.len(), 2 + 101);
    assert_eq!(lines[1].split(',').count(), 9);
}

#[test]
fn states_for_a_kappa_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("states");
    let o = quadps(&[
        "states",
        "--model",
        "chern2d",
        "--set",
        "size=6",
        "--lambda",
        "2.5,0,0",
        "--kappa",
        "0.5,0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("states.json"));
    let reports = doc["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for (k, r) in reports.iter().enumerate() {
        let sites = fs::read_to_string(out.join(format!("sites_{k}.csv"))).unwrap();
        let total: f64 = sites
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(sites.lines().filter(|l| !l.starts_with('#')).count(), 36);
        assert!(r["identity_defect"].as_f64().unwrap() < 1e-8);
        assert!(out.join(format!("energy_{k}.csv")).is_file());
        assert!(fs::read_to_string(out.join(format!("sites_{k}.pgm"))).unwrap().starts_with("P2\n"));
    }
}

#[test]
fn truncation_ladder_brackets_the_full_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trunc");
    let o = quadps(&[
        "truncate",
        "--model",
        "ssh",
        "--set",
        "n_cells=10",
        "--lambda",
        "10.5,0.1",
        "--rho",
        "2,4,8,30",
        "--reference",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out.join("truncation.json"));
    let certs = doc["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 4);
    for c in certs {
        let full = c["mu_full"].as_f64().unwrap();
        assert!(full >= c["lower"].as_f64().unwrap() - 1e-9);
        if let Some(u) = c["upper"].as_f64() {
            assert!(full <= u + 1e-9);
        }
    }
    // the largest ball holds every site, so nothing is truncated
    let last = &certs[3];
    assert_eq!(last["retained"], 20);
    assert!((last["mu_truncated"].as_f64().unwrap() - last["mu_full"].as_f64().unwrap()).abs() < 1e-8);
    let csv = fs::read_to_string(out.join("truncation.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("rho,retained,C,mu_truncated,mu_modified,lower,upper,mu_full"));
}

#[test]
fn explicit_matrices_and_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let sx = dir.path().join("sx.mat");
    let sy = dir.path().join("sy.mat");
    fs::write(&sx, "2\n1 2 1 0\n2 1 1 0\n").unwrap();
    fs::write(&sy, "# sigma_y\n2\n1 2 0 -1\n2 1 0 1\n").unwrap();
    let o = quadps(&["gap", "--matrix", sx.to_str().unwrap(), "--matrix", sy.to_str().unwrap(), "--lambda", "0,0", "--both"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!((field(&s, "mu_q") - 2f64.sqrt()).abs() < 1e-9);
    assert!(field(&s, "mu_c").abs() < 1e-9);

    let model = dir.path().join("ssh.txt");
    fs::write(&model, "# longer chain\nkind = ssh\nn_cells = 6\n").unwrap();
    let o = quadps(&["gap", "--model-file", model.to_str().unwrap(), "--lambda", "13,0"]);
    assert_eq!(o.status.code(), Some(0));
    let via_set = quadps(&["gap", "--model", "ssh", "--set", "n_cells=6", "--lambda", "13,0"]);
    let gap_of = |o: &Output| stdout(o).split(';').next().unwrap().to_string();
    assert_eq!(gap_of(&o), gap_of(&via_set));
    let default_size = quadps(&["gap", "--model", "ssh", "--lambda", "13,0"]);
    assert_ne!(gap_of(&o), gap_of(&default_size));

    let bad = dir.path().join("bad.mat");
    fs::write(&bad, "2\n1 2 1\n").unwrap();
    let o = quadps(&["gap", "--matrix", bad.to_str().unwrap(), "--lambda", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
