//! Dataset file formats.
//!
//! A dataset is four text files:
//! - edge list: one `u v` pair per line, `#` starts a comment, blank lines ok
//! - features: CSV of floats, row `i` = node `i` (defines the node count)
//! - labels: one integer per line, `-1` = unlabeled
//! - splits: lines of `train|val|test <node_id>`; unlisted nodes are unassigned

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::GraphError;
use crate::features::FeatureMatrix;
use crate::graph::AttributedGraph;

fn read_to_string(path: &Path) -> Result<String, GraphError> {
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Lines with content, skipping blanks and `#` comments, with 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, trimmed))
        }
    })
}

/// Reads a raw edge list without range checks (ids may be arbitrary u64).
pub fn read_edge_list(path: &Path) -> Result<Vec<(u64, u64)>, GraphError> {
    let text = read_to_string(path)?;
    let mut edges = Vec::new();
    for (lineno, line) in content_lines(&text) {
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(path, lineno, "expected exactly two node ids"));
        };
        let u: u64 = a
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id {a:?}")))?;
        let v: u64 = b
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id {b:?}")))?;
        edges.push((u, v));
    }
    Ok(edges)
}

/// Remaps arbitrary node ids to `0..n` by ascending raw id. Returns the
/// remapped edges and the sorted list of raw ids (`new -> raw`).
pub fn remap_contiguous(edges: &[(u64, u64)]) -> (Vec<(usize, usize)>, Vec<u64>) {
    let mut ids: Vec<u64> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index_of = |raw: u64| ids.binary_search(&raw).expect("id present by construction");
    let remapped = edges
        .iter()
        .map(|&(u, v)| (index_of(u), index_of(v)))
        .collect();
    (remapped, ids)
}

fn read_features(path: &Path) -> Result<FeatureMatrix, GraphError> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in content_lines(&text) {
        let mut row = Vec::new();
        let mut width = 0;
        for (col, field) in line.split(',').enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                parse_err(path, lineno, format!("bad feature value {:?}", field.trim()))
            })?;
            if value != 0.0 {
                row.push((col as u32, value));
            }
            width = col + 1;
        }
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("row has {width} columns, expected {d}"),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    let dim = dim.unwrap_or(0);
    Ok(FeatureMatrix::from_rows(dim, rows))
}

fn read_labels(path: &Path) -> Result<Vec<i64>, GraphError> {
    let text = read_to_string(path)?;
    let mut labels = Vec::new();
    for (lineno, line) in content_lines(&text) {
        let label: i64 = line
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad label {line:?}")))?;
        if label < -1 {
            return Err(parse_err(path, lineno, format!("label {label} below -1")));
        }
        labels.push(label);
    }
    Ok(labels)
}

fn read_splits(
    path: &Path,
    node_count: usize,
) -> Result<(Vec<bool>, Vec<bool>, Vec<bool>), GraphError> {
    let text = read_to_string(path)?;
    let mut train = vec![false; node_count];
    let mut val = vec![false; node_count];
    let mut test = vec![false; node_count];
    for (lineno, line) in content_lines(&text) {
        let mut parts = line.split_whitespace();
        let (Some(kind), Some(id_str), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(path, lineno, "expected `<split> <node_id>`"));
        };
        let id: usize = id_str
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node id {id_str:?}")))?;
        if id >= node_count {
            return Err(parse_err(
                path,
                lineno,
                format!("node id {id} out of range for {node_count} nodes"),
            ));
        }
        if !matches!(kind, "train" | "val" | "test") {
            return Err(parse_err(path, lineno, format!("unknown split {kind:?}")));
        }
        if train[id] || val[id] || test[id] {
            return Err(parse_err(path, lineno, format!("node {id} assigned twice")));
        }
        match kind {
            "train" => train[id] = true,
            "val" => val[id] = true,
            _ => test[id] = true,
        }
    }
    Ok((train, val, test))
}

/// Loads a dataset. The feature file defines the node count; edge endpoints
/// must already be contiguous ids below it (use [`read_edge_list`] plus
/// [`remap_contiguous`] for raw datasets with arbitrary ids).
pub fn load_graph(
    edge_path: &Path,
    feature_path: &Path,
    label_path: &Path,
    split_path: &Path,
) -> Result<AttributedGraph, GraphError> {
    let features = read_features(feature_path)?;
    let node_count = features.n_rows();
    let raw_edges = read_edge_list(edge_path)?;
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (u, v) in raw_edges {
        edges.push((u as usize, v as usize));
    }
    let labels = read_labels(label_path)?;
    if labels.len() != node_count {
        return Err(GraphError::Validation(format!(
            "{} labels for {} feature rows",
            labels.len(),
            node_count
        )));
    }
    let (train, val, test) = read_splits(split_path, node_count)?;
    AttributedGraph::from_edges(node_count, &edges, features, labels, train, val, test)
}

/// File paths of a dataset rooted at one directory.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
}

impl DatasetPaths {
    /// The conventional four file names under `dir`.
    pub fn under(dir: &Path) -> Self {
        DatasetPaths {
            edges: dir.join("edges.txt"),
            features: dir.join("features.csv"),
            labels: dir.join("labels.txt"),
            splits: dir.join("splits.txt"),
        }
    }

    pub fn load(&self) -> Result<AttributedGraph, GraphError> {
        load_graph(&self.edges, &self.features, &self.labels, &self.splits)
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), GraphError> {
    let mut file = fs::File::create(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(body.as_bytes()).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a graph back out in the four-file dataset format. The CSV format
/// cannot express zero-width feature rows, so `dim() >= 1` is required.
pub fn write_dataset(g: &AttributedGraph, paths: &DatasetPaths) -> Result<(), GraphError> {
    if g.features().dim() == 0 {
        return Err(GraphError::Validation(
            "cannot write a dataset with zero-width features".into(),
        ));
    }
    let mut edges = String::from("# undirected edge list: u v\n");
    for u in 0..g.node_count() {
        for &v in g.neighbors(u) {
            let v = v as usize;
            if u < v {
                edges.push_str(&format!("{u} {v}\n"));
            }
        }
    }
    write_file(&paths.edges, &edges)?;

    let mut features = String::new();
    let dim = g.features().dim();
    let mut buf = vec![0.0; dim];
    for i in 0..g.node_count() {
        g.features().densify_row(i, &mut buf);
        let row: Vec<String> = buf.iter().map(|v| format!("{v}")).collect();
        features.push_str(&row.join(","));
        features.push('\n');
    }
    write_file(&paths.features, &features)?;

    let mut labels = String::new();
    for &label in g.labels() {
        labels.push_str(&format!("{label}\n"));
    }
    write_file(&paths.labels, &labels)?;

    let mut splits = String::new();
    let (train, val, test) = g.masks();
    for v in 0..g.node_count() {
        if train[v] {
            splits.push_str(&format!("train {v}\n"));
        } else if val[v] {
            splits.push_str(&format!("val {v}\n"));
        } else if test[v] {
            splits.push_str(&format!("test {v}\n"));
        }
    }
    write_file(&paths.splits, &splits)
}
