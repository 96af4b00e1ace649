//! Edge-list text format: a header line `n m`, then `m` lines `u v` with
//! 0-based endpoints and `u < v`.

use super::{ExpanderGraph, GraphMode, SpectralReport};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// JSON sidecar written next to an exported edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayMetadata {
    pub processors: usize,
    pub degree: usize,
    pub delta0: u32,
    pub ell: u32,
    pub mode: GraphMode,
    /// `false` for random regular base graphs.
    pub constructive: bool,
    pub base_nodes: usize,
    pub spectral: Option<SpectralReport>,
}

pub fn write_edge_list(g: &ExpanderGraph, mut out: impl Write) -> Result<()> {
    writeln!(out, "{} {}", g.node_count(), g.edge_count())?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn read_edge_list(input: impl BufRead) -> Result<ExpanderGraph> {
    let mut lines = input.lines().enumerate();
    let parse_pair = |line_no: usize, line: &str| -> Result<(u64, u64)> {
        let mut it = line.split_whitespace();
        let mut next = || {
            it.next()
                .ok_or_else(|| Error::format(line_no, "expected two integers"))?
                .parse::<u64>()
                .map_err(|e| Error::format(line_no, e.to_string()))
        };
        let pair = (next()?, next()?);
        if it.next().is_some() {
            return Err(Error::format(line_no, "trailing tokens"));
        }
        Ok(pair)
    };
    let (n, m) = match lines.next() {
        Some((i, line)) => parse_pair(i + 1, &line?)?,
        None => return Err(Error::format(1, "missing header")),
    };
    let mut edges = Vec::with_capacity(m as usize);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (u, v) = parse_pair(i + 1, &line)?;
        if u >= n || v >= n {
            return Err(Error::format(i + 1, format!("endpoint outside 0..{n}")));
        }
        edges.push((u as u32, v as u32));
    }
    if edges.len() as u64 != m {
        return Err(Error::format(
            1,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    ExpanderGraph::from_edges(n as usize, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = ExpanderGraph::cycle(9);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert!(buf.starts_with(b"9 9\n0 1\n"));
        assert_eq!(read_edge_list(&buf[..]).unwrap(), g);
    }

    #[test]
    fn bad_line_reports_number() {
        let err = read_edge_list(&b"3 2\n0 1\n1 x\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }));
    }
}
