//! Text and JSON export of sampled graphs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sampler::{SparseGraph, Vertex};
use super::truncation::TruncationReport;
use crate::error::{Error, Result};
use crate::model::SpecConfig;

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = BufWriter::new(File::create(&tmp)?);
        f.write_all(contents)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One `i j` line per edge, `i < j`, 0-based vertex positions.
pub fn edge_list_string(g: &SparseGraph) -> String {
    let mut s = String::new();
    for (i, j) in g.edges() {
        s.push_str(&format!("{i} {j}\n"));
    }
    s
}

/// One `idx theta eta` line per vertex, 17 significant digits.
pub fn vertex_file_string(g: &SparseGraph) -> String {
    let mut s = String::new();
    for (i, v) in g.vertices().iter().enumerate() {
        s.push_str(&format!("{i} {:.16e} {:.16e}\n", v.theta, v.eta));
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub spec: Option<SpecConfig>,
    pub spec_label: String,
    pub t: f64,
    pub eta_max: f64,
    pub seed: u64,
    pub point_count: u64,
    pub vertex_count: usize,
    pub edge_count: u64,
    pub truncation_report: Option<TruncationReport>,
}

impl GraphMetadata {
    pub fn new(g: &SparseGraph, spec: Option<SpecConfig>, spec_label: String) -> Self {
        Self {
            spec,
            spec_label,
            t: g.t,
            eta_max: g.eta_max,
            seed: g.seed,
            point_count: g.point_count,
            vertex_count: g.vertex_count(),
            edge_count: g.edge_count(),
            truncation_report: g.truncation.clone(),
        }
    }
}

/// Writes `<stem>.edges`, `<stem>.vertices` and `<stem>.json` into `dir`.
pub fn export_graph(g: &SparseGraph, meta: &GraphMetadata, dir: &Path, stem: &str) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.edges")), edge_list_string(g).as_bytes())?;
    write_atomic(&dir.join(format!("{stem}.vertices")), vertex_file_string(g).as_bytes())?;
    write_atomic(
        &dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(meta)?.as_bytes(),
    )?;
    Ok(())
}

fn parse_err(file: &Path, line: usize, what: &str) -> Error {
    Error::Config(format!("{}:{}: {what}", file.display(), line + 1))
}

/// Reads a graph written by [`export_graph`].
pub fn read_graph(dir: &Path, stem: &str) -> Result<(SparseGraph, GraphMetadata)> {
    let meta_path = dir.join(format!("{stem}.json"));
    let meta: GraphMetadata = serde_json::from_str(&fs::read_to_string(&meta_path)?)
        .map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    let vpath = dir.join(format!("{stem}.vertices"));
    let mut vertices = Vec::new();
    for (n, line) in fs::read_to_string(&vpath)?.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(&vpath, n, "expected `idx theta eta`"));
        }
        let idx: usize = f[0].parse().map_err(|_| parse_err(&vpath, n, "bad index"))?;
        if idx != vertices.len() {
            return Err(parse_err(&vpath, n, "vertex indices must be 0, 1, 2, ..."));
        }
        let theta: f64 = f[1].parse().map_err(|_| parse_err(&vpath, n, "bad theta"))?;
        let eta: f64 = f[2].parse().map_err(|_| parse_err(&vpath, n, "bad eta"))?;
        vertices.push(Vertex {
            id: idx as u64,
            theta,
            eta,
        });
    }
    let epath = dir.join(format!("{stem}.edges"));
    let mut edges = Vec::new();
    for (n, line) in fs::read_to_string(&epath)?.lines().enumerate() {
        let mut it = line.split_whitespace().map(str::parse::<u32>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(i)), Some(Ok(j)), None) => edges.push((i, j)),
            _ => return Err(parse_err(&epath, n, "expected `i j`")),
        }
    }
    let mut g = SparseGraph::from_edges(vertices, &edges)?;
    g.t = meta.t;
    g.eta_max = meta.eta_max;
    g.seed = meta.seed;
    g.point_count = meta.point_count;
    g.truncation = meta.truncation_report.clone();
    Ok((g, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> SparseGraph {
        let v = (0..3)
            .map(|i| Vertex {
                id: i,
                theta: 0.1 * i as f64,
                eta: 1.0 / 3.0,
            })
            .collect();
        SparseGraph::from_edges(v, &[(1, 0), (1, 2)]).unwrap()
    }

    #[test]
    fn edge_and_vertex_formats() {
        let g = path_graph();
        assert_eq!(edge_list_string(&g), "0 1\n1 2\n");
        let vf = vertex_file_string(&g);
        let first = vf.lines().next().unwrap();
        assert_eq!(first, "0 0.0000000000000000e0 3.3333333333333331e-1");
        let eta: f64 = first.split(' ').nth(2).unwrap().parse().unwrap();
        assert_eq!(eta, 1.0 / 3.0);
    }

    #[test]
    fn export_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = path_graph();
        let meta = GraphMetadata::new(&g, None, "test".into());
        export_graph(&g, &meta, dir.path(), "g").unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
        assert_eq!(json["edge_count"], 2);
        let (back, _) = read_graph(dir.path(), "g").unwrap();
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        assert_eq!(back.vertices(), g.vertices());
    }
}
