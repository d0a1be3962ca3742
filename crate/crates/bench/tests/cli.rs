use std::fs;
use std::process::Command;

use tempfile::TempDir;

const CONFIG: &str = r#"
task = "feature"
k = 1
scheme = "sgc"
hops = 1
seeds = [0, 1]
record_timing = false

[synthetic]
n_nodes = 120
n_features = 6
"#;

fn fairwipe() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairwipe"));
    cmd.env_remove("FAIRWIPE_DATA_DIR").env("RUST_LOG", "off");
    cmd
}

#[test]
fn run_writes_csv_to_stdout() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, CONFIG).unwrap();
    let out = fairwipe().arg("run").arg("--config").arg(&config).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("dataset,task,selector,arm,seed,k,"));
    assert_eq!(text.lines().count(), 1 + 3 * 2 + 3 * 2);
}

#[test]
fn run_is_reproducible_through_files() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, CONFIG).unwrap();
    let mut outputs = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.path().join(name);
        let status = fairwipe()
            .args(["--format", "json", "--threads", "1", "--out"])
            .arg(&path)
            .arg("run")
            .arg("--config")
            .arg(&config)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_labels_each_setting() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, CONFIG).unwrap();
    let out = fairwipe()
        .arg("sweep")
        .arg("--config")
        .arg(&config)
        .args(["--param", "lambda", "--values", "1,10"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("lambda=1,"));
    assert!(text.contains("lambda=10,"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, CONFIG.replace("k = 1", "k = 1\nunknown_key = 3")).unwrap();
    let out = fairwipe().arg("run").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    fs::write(&config, CONFIG.replace("scheme = \"sgc\"", "scheme = \"gcn\"")).unwrap();
    let out = fairwipe().arg("run").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_validation_errors_exit_with_3() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("nodes.csv"), "s,y,a\n1,1,0.5\n0,0,x\n").unwrap();
    fs::write(dir.path().join("edges.txt"), "0 1\n").unwrap();
    let manifest = dir.path().join("m.toml");
    fs::write(
        &manifest,
        "name = \"bad\"\nedges_path = \"edges.txt\"\nfeatures_path = \"nodes.csv\"\nsensitive_column = \"s\"\nlabel_column = \"y\"\n",
    )
    .unwrap();
    let out = fairwipe().arg("stats").arg("--manifest").arg(&manifest).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn stats_reports_sizes_and_alpha() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("nodes.csv"), "s,y,a\n1,1,0.5\n0,0,1.5\n1,0,2.0\n0,1,0.0\n").unwrap();
    fs::write(dir.path().join("edges.txt"), "0 1\n1 2\n2 3\n0 2\n").unwrap();
    let manifest = dir.path().join("m.toml");
    fs::write(
        &manifest,
        "name = \"tiny\"\nedges_path = \"edges.txt\"\nfeatures_path = \"nodes.csv\"\nsensitive_column = \"s\"\nlabel_column = \"y\"\n",
    )
    .unwrap();
    let out = fairwipe().arg("stats").arg("--manifest").arg(&manifest).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["stats"]["n_nodes"], 4);
    assert_eq!(report["stats"]["n_edges"], 4);
    assert_eq!(report["stats"]["intra_edges"], 1);
    assert!(report["alpha1"].is_number());
}

#[test]
fn missing_config_file_fails() {
    let out = fairwipe().args(["run", "--config", "/nonexistent/c.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
