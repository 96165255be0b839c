//! Labeled graph datasets and their line-oriented text format:
//!
//! ```text
//! fiedler-dataset v1 count=<k>
//! n=<n> edges=<i-j,i-j,...> lambda2=<%.12e>
//! ```

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::graph::{generate_connected_graph, Graph, GraphError, GraphGenConfig};
use crate::numfmt::c_exp12;
use crate::spectrum::algebraic_connectivity;

pub const DATASET_MAGIC: &str = "fiedler-dataset v1";

/// Tolerance for re-verifying stored labels against the eigensolver.
pub const LABEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
    #[error("line {line}: stored lambda2 {stored:e} differs from oracle {oracle:e}")]
    Label { line: usize, stored: f64, oracle: f64 },
    #[error("line {line}: graph is disconnected")]
    Disconnected { line: usize },
    #[error("header declares {declared} graphs, found {found}")]
    Count { declared: usize, found: usize },
    #[error(transparent)]
    Generation(#[from] GraphError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub lambda2: f64,
}

impl LabeledGraph {
    /// Labels `graph` with its algebraic connectivity, quantized to the
    /// 13-significant-digit file representation so in-memory and on-disk
    /// datasets are identical.
    pub fn new(graph: Graph) -> Self {
        let lambda2 = quantize_label(algebraic_connectivity(&graph));
        Self { graph, lambda2 }
    }
}

fn quantize_label(x: f64) -> f64 {
    c_exp12(x).parse().expect("formatted float parses")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub items: Vec<LabeledGraph>,
    /// Generator settings, when the dataset was generated in this process.
    pub provenance: Option<GraphGenConfig>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledGraph> {
        self.items.iter()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{DATASET_MAGIC} count={}", self.items.len())?;
        for item in &self.items {
            writeln!(w, "{} lambda2={}", item.graph, c_exp12(item.lambda2))?;
        }
        w.flush()
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dataset text is ASCII")
    }

    /// Parses a dataset, re-verifying connectivity and every label.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self, DatasetError> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.ok_or(DatasetError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let declared = header
            .strip_prefix(DATASET_MAGIC)
            .and_then(|rest| rest.trim().strip_prefix("count="))
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| DatasetError::Parse {
                line: 1,
                msg: format!("bad header {header:?}"),
            })?;

        let mut items = Vec::with_capacity(declared);
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            items.push(parse_item(&line, line_no)?);
        }
        if items.len() != declared {
            return Err(DatasetError::Count {
                declared,
                found: items.len(),
            });
        }
        Ok(Self {
            items,
            provenance: None,
        })
    }
}

fn parse_item(line: &str, line_no: usize) -> Result<LabeledGraph, DatasetError> {
    let perr = |msg: String| DatasetError::Parse { line: line_no, msg };
    let mut n = None;
    let mut edges = None;
    let mut lambda2 = None;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| perr(format!("field {field:?} is not key=value")))?;
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|e| perr(format!("n: {e}")))?),
            "edges" => {
                let mut list = Vec::new();
                for pair in value.split(',').filter(|s| !s.is_empty()) {
                    let (a, b) = pair
                        .split_once('-')
                        .ok_or_else(|| perr(format!("edge {pair:?}")))?;
                    let a = a.parse::<usize>().map_err(|e| perr(format!("edge {pair:?}: {e}")))?;
                    let b = b.parse::<usize>().map_err(|e| perr(format!("edge {pair:?}: {e}")))?;
                    list.push((a, b));
                }
                edges = Some(list);
            }
            "lambda2" => lambda2 = Some(value.parse::<f64>().map_err(|e| perr(format!("lambda2: {e}")))?),
            other => return Err(perr(format!("unknown field {other:?}"))),
        }
    }
    let (n, edges, stored) = match (n, edges, lambda2) {
        (Some(n), Some(e), Some(l)) => (n, e, l),
        _ => return Err(perr("missing n, edges or lambda2".into())),
    };
    let graph = Graph::new(n, edges).map_err(|source| DatasetError::Graph { line: line_no, source })?;
    if !graph.is_connected() {
        return Err(DatasetError::Disconnected { line: line_no });
    }
    let oracle = algebraic_connectivity(&graph);
    if !stored.is_finite() || (stored - oracle).abs() > LABEL_TOLERANCE {
        return Err(DatasetError::Label {
            line: line_no,
            stored,
            oracle,
        });
    }
    Ok(LabeledGraph { graph, lambda2: stored })
}

/// Draws `count` labeled graphs using draw indices `0..count`.
pub fn generate_dataset(cfg: &GraphGenConfig, count: usize) -> Result<Dataset, DatasetError> {
    let items = (0..count as u64)
        .map(|k| generate_connected_graph(cfg, k).map(LabeledGraph::new))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset {
        items,
        provenance: Some(*cfg),
    })
}
