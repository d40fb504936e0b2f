//! Plain-text curve files: a header line `d k family`, then one vertex per
//! line as `d` space-separated integers in curve order.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::construction::{
    decompose_body, decompose_self_similar, ConstructionError, CurveSpec, ExtendedCurve, Family,
};
use crate::geometry::{curve_from_vertices, Direction, GeometryError, SignedPermutation, Vertex};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expected {expected} vertices, found {got}")]
    VertexCount { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveFile {
    pub spec: CurveSpec,
    pub vertices: Vec<Vertex>,
}

pub fn write_curve(spec: &CurveSpec, vertices: &[Vertex], mut sink: impl Write) -> io::Result<()> {
    writeln!(sink, "{} {} {}", spec.d, spec.k, spec.family.name())?;
    let mut line = String::new();
    for v in vertices {
        line.clear();
        for (j, c) in v.coords().iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&c.to_string());
        }
        line.push('\n');
        sink.write_all(line.as_bytes())?;
    }
    sink.flush()
}

fn parse_err(line: usize, message: impl Into<String>) -> ExportError {
    ExportError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_curve(source: impl BufRead) -> Result<CurveFile, ExportError> {
    let mut lines = source.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [d, k, family] = fields[..] else {
        return Err(parse_err(1, "header must be `d k family`"));
    };
    let d: usize = d
        .parse()
        .map_err(|_| parse_err(1, format!("bad dimension {d:?}")))?;
    let k: u32 = k
        .parse()
        .map_err(|_| parse_err(1, format!("bad level {k:?}")))?;
    let family: Family = family.parse().map_err(|e| parse_err(1, format!("{e}")))?;
    let spec = CurveSpec::new(d, family, k);
    spec.check().map_err(|e| parse_err(1, e.to_string()))?;
    let expected = 1usize << (d * k as usize);
    let mut vertices = Vec::with_capacity(expected);
    for (i, text) in lines.enumerate() {
        let line = i + 2;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let coords = text
            .split_whitespace()
            .map(|f| f.parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| parse_err(line, format!("non-integer coordinate in {text:?}")))?;
        if coords.len() != d {
            return Err(parse_err(
                line,
                format!("expected {d} coordinates, found {}", coords.len()),
            ));
        }
        vertices.push(Vertex(coords));
    }
    if vertices.len() != expected {
        return Err(ExportError::VertexCount {
            expected,
            got: vertices.len(),
        });
    }
    Ok(CurveFile { spec, vertices })
}

/// The curve with the seed's entry edge `<d>` and exit edge `<-(d-1)>`,
/// which every inflation preserves.
pub fn extend(vertices: &[Vertex]) -> Result<ExtendedCurve, GeometryError> {
    let body = curve_from_vertices(vertices)?;
    let d = body.dim() as i32;
    Ok(ExtendedCurve::new(
        body,
        Direction::new(d),
        Direction::new(-(d - 1)),
    ))
}

/// Halves the coordinates of every block of `2^d` vertices.
pub fn coarsen(vertices: &[Vertex], d: usize) -> Vec<Vertex> {
    vertices
        .chunks(1 << d)
        .map(|b| Vertex(b[0].coords().iter().map(|c| c >> 1).collect()))
        .collect()
}

/// One block of a self-similarity decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockIsometry {
    pub perm: SignedPermutation,
    pub reversed: bool,
}

/// Checks that the curve consists of `2^d` isometric copies of its own
/// coarsening. With `extended`, the copies must also carry the entry and
/// exit edges onto the edges joining the blocks.
pub fn check_self_similar(
    vertices: &[Vertex],
    d: usize,
    extended: bool,
) -> Result<Vec<BlockIsometry>, ConstructionError> {
    let parent = coarsen(vertices, d);
    if extended {
        let found = decompose_self_similar(&extend(vertices)?, &extend(&parent)?)?;
        Ok(found
            .into_iter()
            .map(|(perm, reversed)| BlockIsometry { perm, reversed })
            .collect())
    } else {
        let found = decompose_body(
            &curve_from_vertices(vertices)?,
            &curve_from_vertices(&parent)?,
        )?;
        Ok(found
            .into_iter()
            .map(|perm| BlockIsometry {
                perm,
                reversed: false,
            })
            .collect())
    }
}
