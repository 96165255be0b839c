//! Text checkpoint format.
//!
//! ```text
//! fiedler-params v1 H=<H>
//! meta mode=<local|global> T=<rounds> n_min=<n> n_max=<n>
//! tensor <name> <dims...>
//! <row-major values, one matrix row per line>
//! ...
//! ```
//!
//! Values are written with shortest round-trip formatting, so save/load is
//! bit-exact.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::numfmt::round_trip;

use super::params::{ModelParams, ReadoutMode};

pub const PARAMS_MAGIC: &str = "fiedler-params v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Training context stored next to the weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub mode: ReadoutMode,
    pub rounds: usize,
    pub n_min: usize,
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = &self.meta;
        writeln!(w, "{PARAMS_MAGIC} H={}", self.params.hidden)?;
        writeln!(w, "meta mode={} T={} n_min={} n_max={}", m.mode, m.rounds, m.n_min, m.n_max)?;
        for t in self.params.tensors() {
            write!(w, "tensor {}", t.name)?;
            for d in &t.shape {
                write!(w, " {d}")?;
            }
            writeln!(w)?;
            let row_len = t.shape.last().copied().unwrap_or(1);
            for row in t.data.chunks(row_len) {
                let cells: Vec<String> = row.iter().map(|&x| round_trip(x)).collect();
                writeln!(w, "{}", cells.join(" "))?;
            }
        }
        w.flush()
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("checkpoint text is ASCII")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, CheckpointError> {
        let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
        let err = |line: usize, msg: String| CheckpointError::Format { line, msg };

        let header = lines.first().ok_or_else(|| err(1, "empty file".into()))?;
        let hidden = header
            .strip_prefix(PARAMS_MAGIC)
            .and_then(|r| r.trim().strip_prefix("H="))
            .and_then(|h| h.parse::<usize>().ok())
            .filter(|&h| h >= 1)
            .ok_or_else(|| err(1, format!("bad header {header:?}")))?;

        let meta_line = lines.get(1).ok_or_else(|| err(2, "missing meta line".into()))?;
        let meta = parse_meta(meta_line).map_err(|m| err(2, m))?;

        let mut params = ModelParams::zeros(hidden);
        let mut cursor = 2;
        for t in params.tensors_mut() {
            let line_no = cursor + 1;
            let decl = lines.get(cursor).ok_or_else(|| err(line_no, format!("missing tensor {}", t.name)))?;
            let mut parts = decl.split_whitespace();
            if parts.next() != Some("tensor") || parts.next() != Some(t.name) {
                return Err(err(line_no, format!("expected tensor {}, found {decl:?}", t.name)));
            }
            let shape: Vec<usize> = parts
                .map(|d| d.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(line_no, format!("shape: {e}")))?;
            if shape != t.shape {
                return Err(err(
                    line_no,
                    format!("tensor {} has shape {shape:?}, expected {:?}", t.name, t.shape),
                ));
            }
            cursor += 1;
            let row_len = t.shape.last().copied().unwrap_or(1);
            for row in t.data.chunks_mut(row_len) {
                let line_no = cursor + 1;
                let text = lines.get(cursor).ok_or_else(|| err(line_no, "truncated tensor".into()))?;
                let values: Vec<f64> = text
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| err(line_no, format!("value: {e}")))?;
                if values.len() != row.len() {
                    return Err(err(line_no, format!("expected {} values, found {}", row.len(), values.len())));
                }
                row.copy_from_slice(&values);
                cursor += 1;
            }
        }
        if let Some(extra) = lines[cursor..].iter().position(|l| !l.trim().is_empty()) {
            return Err(err(cursor + extra + 1, "trailing content".into()));
        }
        if !params.is_finite() {
            return Err(err(0, "non-finite parameter".into()));
        }
        Ok(Self { meta, params })
    }
}

fn parse_meta(line: &str) -> Result<CheckpointMeta, String> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some("meta") {
        return Err(format!("expected meta line, found {line:?}"));
    }
    let (mut mode, mut rounds, mut n_min, mut n_max) = (None, None, None, None);
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| format!("bad field {f:?}"))?;
        let num = || v.parse::<usize>().map_err(|e| format!("{k}: {e}"));
        match k {
            "mode" => mode = Some(v.parse::<ReadoutMode>()?),
            "T" => rounds = Some(num()?),
            "n_min" => n_min = Some(num()?),
            "n_max" => n_max = Some(num()?),
            _ => return Err(format!("unknown meta field {k:?}")),
        }
    }
    match (mode, rounds, n_min, n_max) {
        (Some(mode), Some(rounds), Some(n_min), Some(n_max)) => Ok(CheckpointMeta {
            mode,
            rounds,
            n_min,
            n_max,
        }),
        _ => Err("meta line needs mode, T, n_min and n_max".into()),
    }
}
