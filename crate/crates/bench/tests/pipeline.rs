use std::fs;
use std::path::Path;

use fairwipe_bench::output::{read_json, rounded, write_rows, COLUMNS};
use fairwipe_bench::{
    emit_results, load_dataset, make_splits, run_experiment, BenchError, DatasetManifest, DatasetStats,
    ExperimentConfig, Format, RowKind,
};
use tempfile::TempDir;

const FEATURES: &str = "\
Gender,Amount,Age,Purpose,Good
Female,1000,25,3,1
Male,2500,40,1,0
Male,1200,33,2,1
Female,800,51,2,0
Male,3000,29,1,1
Female,1500,45,3,1
";

const EDGES: &str = "\
1 2
2 3
2 3
3 3
4 5
5 6
1 6
";

fn write_manifest(dir: &Path, extra: &str) -> std::path::PathBuf {
    fs::write(dir.join("nodes.csv"), FEATURES).unwrap();
    fs::write(dir.join("edges.txt"), EDGES).unwrap();
    let path = dir.join("toy.toml");
    fs::write(
        &path,
        format!(
            r#"
name = "toy"
edges_path = "{}"
features_path = "{}"
sensitive_column = "Gender"
sensitive_positive = "Female"
label_column = "Good"
drop_columns = ["Purpose"]
{extra}
"#,
            dir.join("edges.txt").display(),
            dir.join("nodes.csv").display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn loads_and_normalizes_a_table() {
    let dir = TempDir::new().unwrap();
    let manifest = DatasetManifest::from_path(&write_manifest(dir.path(), "")).unwrap();
    let g = load_dataset(&manifest).unwrap();
    assert_eq!(g.n_nodes(), 6);
    assert_eq!(g.n_features(), 2);
    assert_eq!(g.n_edges(), 5);
    assert_eq!(g.sensitive(), &[1, 0, 0, 1, 0, 1]);
    assert_eq!(g.labels(), &[1, 0, 1, 0, 1, 1]);
    for col in g.features().column_iter() {
        assert!(col.sum().abs() < 1e-12);
    }
    let max = g.features().row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-12);
    let stats = DatasetStats::of(&g);
    assert_eq!((stats.s0, stats.s1), (Some(3), Some(3)));
    assert_eq!(stats.inter_edges.unwrap() + stats.intra_edges.unwrap(), 5);
}

#[test]
fn expected_stats_mismatch_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let ok = write_manifest(dir.path(), "[expected_stats]\nn_nodes = 6\nn_edges = 5");
    assert!(load_dataset(&DatasetManifest::from_path(&ok).unwrap()).is_ok());
    let bad = write_manifest(dir.path(), "[expected_stats]\nn_edges = 7");
    let err = load_dataset(&DatasetManifest::from_path(&bad).unwrap()).unwrap_err();
    assert!(matches!(err, BenchError::DataValidation(ref m) if m.contains("n_edges")));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn malformed_inputs_are_rejected() {
    let dir = TempDir::new().unwrap();
    let path = write_manifest(dir.path(), "");
    fs::write(dir.path().join("nodes.csv"), FEATURES.replace("1000", "lots")).unwrap();
    let err = load_dataset(&DatasetManifest::from_path(&path).unwrap()).unwrap_err();
    assert!(matches!(err, BenchError::DataValidation(_)));

    fs::write(dir.path().join("nodes.csv"), FEATURES.replace("Good", "Bad")).unwrap();
    let err = load_dataset(&DatasetManifest::from_path(&path).unwrap()).unwrap_err();
    assert!(matches!(err, BenchError::DataValidation(ref m) if m.contains("Good")));

    fs::write(dir.path().join("toy.toml"), "name = 1").unwrap();
    assert_eq!(DatasetManifest::from_path(&path).unwrap_err().exit_code(), 2);
}

fn synthetic_config(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
task = "feature"
k = 2
scheme = "gpr"
hops = 2
seeds = [0, 1, 2]
record_timing = false
{extra}
[synthetic]
n_nodes = 150
n_features = 8
"#
    ))
    .unwrap()
}

#[test]
fn splits_partition_nodes_deterministically() {
    let (_, g) = fairwipe_bench::experiment::load_source(&synthetic_config("")).unwrap();
    let a = make_splits(&g, [0.6, 0.2, 0.2], 4).unwrap();
    let b = make_splits(&g, [0.6, 0.2, 0.2], 4).unwrap();
    assert_eq!(a.train_mask(), b.train_mask());
    assert_eq!(a.test_mask(), b.test_mask());
    let count = |m: &[bool]| m.iter().filter(|&&t| t).count();
    assert_eq!(count(a.train_mask()), 90);
    assert_eq!(count(a.val_mask()) + count(a.test_mask()), 60);
    for i in 0..g.n_nodes() {
        assert_eq!(a.train_mask()[i] as u8 + a.val_mask()[i] as u8 + a.test_mask()[i] as u8, 1);
    }
    let c = make_splits(&g, [0.6, 0.2, 0.2], 5).unwrap();
    assert_ne!(a.train_mask(), c.train_mask());
}

#[test]
fn rows_cover_arms_seeds_and_summaries() {
    let rows = run_experiment(&synthetic_config("")).unwrap();
    assert_eq!(rows.len(), 3 * 3 + 3 * 2);
    let seeds = rows.iter().filter(|r| r.row == RowKind::Seed).count();
    assert_eq!(seeds, 9);
    for r in rows.iter().filter(|r| r.arm == "unlearn" && r.row == RowKind::Seed) {
        assert!(r.residual_norm.is_some());
        assert!(r.worstcase_bound.is_some());
        assert_eq!(r.certified, Some(true));
    }
    for r in rows.iter().filter(|r| r.arm == "pretrained") {
        assert!(r.residual_norm.is_none());
    }
}

#[test]
fn pretrained_rows_do_not_depend_on_the_selector() {
    let proposed = run_experiment(&synthetic_config(r#"arms = ["pretrained"]"#)).unwrap();
    let random = run_experiment(&synthetic_config("arms = [\"pretrained\"]\nselector = \"random\"")).unwrap();
    assert!(proposed.iter().all(|r| r.arm == "pretrained"));
    let strip = |rows: &[fairwipe_bench::ResultRow]| {
        rows.iter()
            .map(|r| (r.accuracy, r.delta_sp, r.delta_eo, r.raw_sp, r.rho_norm))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&proposed), strip(&random));
}

#[test]
fn csv_and_json_outputs() {
    let rows = run_experiment(&synthetic_config(r#"arms = ["unlearn"]"#)).unwrap();
    let mut buf = Vec::new();
    write_rows(&rows, Format::Csv, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
    assert_eq!(lines.count(), rows.len());

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("rows.json");
    emit_results(&rows, Format::Json, Some(&path)).unwrap();
    let back = read_json(&path).unwrap();
    assert_eq!(back, rows.iter().map(rounded).collect::<Vec<_>>());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = synthetic_config("");
    let render = || {
        let mut buf = Vec::new();
        write_rows(&run_experiment(&config).unwrap(), Format::Csv, &mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}
