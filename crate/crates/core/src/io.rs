//! Graph JSON files and CSV signal matrices.
//!
//! Graph file: `{"n": int, "edges": [[i, j, w], ...], "symmetric": bool}`, where each
//! edge is one directed entry `(i, j)` of the shift operator.
//!
//! Signal file: one row per node, one column per time step, no header.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{param, Error, Result};
use crate::graph::{Graph, GraphKind};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub symmetric: bool,
}

impl GraphFile {
    pub fn from_graph(g: &Graph<f64>) -> Self {
        Self {
            n: g.n(),
            edges: g.gso().triplets().collect(),
            symmetric: g.is_symmetric(),
        }
    }

    /// Builds the graph; a file claiming symmetry must actually be symmetric.
    pub fn into_graph(self, kind: GraphKind) -> Result<Graph<f64>> {
        let gso = CsrMatrix::from_triplets(self.n, self.n, self.edges)?;
        let g = Graph::new(gso, kind)?;
        if self.symmetric && !g.is_symmetric() {
            return Err(Error::Contract(
                "graph file is flagged symmetric but its edges are not".into(),
            ));
        }
        Ok(g)
    }
}

pub fn write_graph_json(g: &Graph<f64>, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&GraphFile::from_graph(g))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_graph_json(path: impl AsRef<Path>, kind: GraphKind) -> Result<Graph<f64>> {
    let file: GraphFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    file.into_graph(kind)
}

/// Writes an `N × T` signal matrix.
pub fn write_signal_csv(x: &DenseMatrix<f64>, out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..x.rows() {
        w.write_record(x.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `N × T` signal matrix.
pub fn read_signal_csv(input: impl Read) -> Result<DenseMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parameter(format!("bad signal value {f:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return param("empty signal file");
    }
    DenseMatrix::from_rows(&rows)
}
