//! Dataset manifests and the file loader.
//!
//! A manifest is a small TOML file naming an edge list and a delimited
//! feature table. Relative paths resolve against `FAIRWIPE_DATA_DIR` when
//! set, otherwise against the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use fairwipe_core::graph::{canonical_edge, degree_stats, Edge, GraphDataset};
use log::{info, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const DATA_DIR_ENV: &str = "FAIRWIPE_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub edges_path: PathBuf,
    pub features_path: PathBuf,
    pub sensitive_column: String,
    /// Raw value mapped to `s = 1`. Without it the column must hold
    /// `0/1` or `-1/1`.
    #[serde(default)]
    pub sensitive_positive: Option<String>,
    pub label_column: String,
    #[serde(default)]
    pub label_positive: Option<String>,
    /// Extra columns excluded from `X`; the sensitive and label columns are
    /// always excluded.
    #[serde(default)]
    pub drop_columns: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub expected_stats: Option<DatasetStats>,
}

fn default_delimiter() -> char {
    ','
}

/// Size statistics of a loaded dataset. In a manifest every field is
/// optional; present fields must match exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetStats {
    pub n_nodes: Option<usize>,
    pub n_edges: Option<usize>,
    pub n_features: Option<usize>,
    pub s0: Option<usize>,
    pub s1: Option<usize>,
    pub inter_edges: Option<usize>,
    pub intra_edges: Option<usize>,
}

impl DatasetStats {
    pub fn of(dataset: &GraphDataset) -> Self {
        let st = degree_stats(dataset);
        Self {
            n_nodes: Some(dataset.n_nodes()),
            n_edges: Some(dataset.n_edges()),
            n_features: Some(dataset.n_features()),
            s0: Some(st.group_sizes[0]),
            s1: Some(st.group_sizes[1]),
            inter_edges: Some(st.inter_edges),
            intra_edges: Some(st.intra_edges),
        }
    }

    /// Fields where `self` (expected) disagrees with `actual`.
    pub fn mismatches(&self, actual: &DatasetStats) -> Vec<String> {
        let pairs = [
            ("n_nodes", self.n_nodes, actual.n_nodes),
            ("n_edges", self.n_edges, actual.n_edges),
            ("n_features", self.n_features, actual.n_features),
            ("s0", self.s0, actual.s0),
            ("s1", self.s1, actual.s1),
            ("inter_edges", self.inter_edges, actual.inter_edges),
            ("intra_edges", self.intra_edges, actual.intra_edges),
        ];
        pairs
            .into_iter()
            .filter_map(|(name, want, got)| match (want, got) {
                (Some(w), Some(g)) if w != g => Some(format!("{name}: expected {w}, found {g}")),
                _ => None,
            })
            .collect()
    }
}

impl DatasetManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut manifest: DatasetManifest = toml::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let base = match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => PathBuf::from(dir),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        manifest.edges_path = base.join(&manifest.edges_path);
        manifest.features_path = base.join(&manifest.features_path);
        Ok(manifest)
    }

    pub fn files_exist(&self) -> bool {
        self.edges_path.is_file() && self.features_path.is_file()
    }
}

/// Loads, normalizes and validates a dataset. Masks are left empty.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<GraphDataset> {
    let table = read_table(manifest)?;
    let n = table.n_rows;
    let edges_text =
        fs::read_to_string(&manifest.edges_path).map_err(|e| BenchError::io(&manifest.edges_path, e))?;
    let edges = parse_edges(&edges_text, n)?;
    let mut x = table.features;
    standardize_columns(&mut x);
    let max_norm = fairwipe_core::graph::max_row_norm(&x);
    if max_norm > 0.0 {
        x /= max_norm;
    }
    let dataset = GraphDataset::from_edges(n, &edges, x, table.sensitive, table.labels)?;
    let stats = DatasetStats::of(&dataset);
    info!("{}: loaded {:?}", manifest.name, stats);
    if let Some(expected) = &manifest.expected_stats {
        let bad = expected.mismatches(&stats);
        if !bad.is_empty() {
            return Err(BenchError::DataValidation(format!(
                "{} does not match expected_stats ({})",
                manifest.name,
                bad.join("; ")
            )));
        }
    }
    Ok(dataset)
}

struct Table {
    n_rows: usize,
    features: DMatrix<f64>,
    sensitive: Vec<u8>,
    labels: Vec<u8>,
}

fn read_table(manifest: &DatasetManifest) -> Result<Table> {
    let path = &manifest.features_path;
    let delimiter = u8::try_from(manifest.delimiter)
        .map_err(|_| BenchError::Config(format!("delimiter {:?} is not ASCII", manifest.delimiter)))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| BenchError::DataValidation(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| BenchError::DataValidation(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchError::DataValidation(format!("{}: missing column `{name}`", path.display())))
    };
    let s_col = find(&manifest.sensitive_column)?;
    let y_col = find(&manifest.label_column)?;
    let mut excluded = vec![s_col, y_col];
    for name in &manifest.drop_columns {
        excluded.push(find(name)?);
    }
    let kept: Vec<usize> = (0..header.len()).filter(|c| !excluded.contains(c)).collect();

    let mut values = Vec::new();
    let mut sensitive = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| BenchError::DataValidation(format!("{}: {e}", path.display())))?;
        sensitive.push(binary(&record[s_col], manifest.sensitive_positive.as_deref(), "sensitive", row)?);
        labels.push(binary(&record[y_col], manifest.label_positive.as_deref(), "label", row)?);
        for &c in &kept {
            let v: f64 = record[c].parse().map_err(|_| {
                BenchError::DataValidation(format!(
                    "{}: row {row}, column `{}`: `{}` is not numeric",
                    path.display(),
                    header[c],
                    &record[c]
                ))
            })?;
            values.push(v);
        }
    }
    let n_rows = labels.len();
    Ok(Table {
        n_rows,
        features: DMatrix::from_row_slice(n_rows, kept.len(), &values),
        sensitive,
        labels,
    })
}

fn binary(raw: &str, positive: Option<&str>, what: &str, row: usize) -> Result<u8> {
    if let Some(p) = positive {
        return Ok(u8::from(raw == p));
    }
    match raw.parse::<f64>() {
        Ok(1.0) => Ok(1),
        Ok(v) if v == 0.0 || v == -1.0 => Ok(0),
        _ => Err(BenchError::DataValidation(format!(
            "{what} value `{raw}` at row {row} is not binary"
        ))),
    }
}

/// Parses an undirected edge list. Indices are 0-based when the smallest
/// index is 0, otherwise 1-based. Duplicates and self-loops are dropped
/// with a warning.
pub fn parse_edges(text: &str, n_nodes: usize) -> Result<Vec<Edge>> {
    let mut raw = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty());
        let mut next = || -> Result<usize> {
            let f = fields.next().ok_or_else(|| {
                BenchError::DataValidation(format!("edge line {}: expected two indices", line_no + 1))
            })?;
            let v: f64 = f.parse().map_err(|_| {
                BenchError::DataValidation(format!("edge line {}: `{f}` is not an index", line_no + 1))
            })?;
            if v < 0.0 || v.fract() != 0.0 {
                return Err(BenchError::DataValidation(format!(
                    "edge line {}: `{f}` is not a node index",
                    line_no + 1
                )));
            }
            Ok(v as usize)
        };
        raw.push((next()?, next()?));
    }
    let offset = match raw.iter().map(|&(u, v)| u.min(v)).min() {
        Some(0) | None => 0,
        Some(_) => 1,
    };
    let mut seen = HashSet::with_capacity(raw.len());
    let mut edges = Vec::with_capacity(raw.len());
    let (mut loops, mut dups) = (0usize, 0usize);
    for (u, v) in raw {
        let (u, v) = (u - offset, v - offset);
        if u.max(v) >= n_nodes {
            return Err(BenchError::DataValidation(format!(
                "edge ({u}, {v}) references a node beyond {n_nodes}"
            )));
        }
        if u == v {
            loops += 1;
        } else if seen.insert(canonical_edge(u, v)) {
            edges.push(canonical_edge(u, v));
        } else {
            dups += 1;
        }
    }
    if loops > 0 {
        warn!("dropped {loops} self-loops from the edge list");
    }
    if dups > 0 {
        warn!("dropped {dups} duplicate edges from the edge list");
    }
    Ok(edges)
}

/// Zero mean and unit (population) variance per column; constant columns
/// become zero.
pub fn standardize_columns(x: &mut DMatrix<f64>) {
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        let std = col.variance().sqrt();
        if std > 0.0 {
            col.apply(|v| *v = (*v - mean) / std);
        } else {
            col.fill(0.0);
        }
    }
}
