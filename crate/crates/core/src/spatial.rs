//! Curve-ordered bulk loading of point blocks and block-level window
//! queries.

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use crate::construction::Family;
use crate::fixed::{format_fraction, parse_fraction, raw_to_f64, FixedError, FixedPoint};
use crate::order::{sort_points, OrderError};

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("byte offset {offset}: {message}")]
    Binary { offset: u64, message: String },
    #[error("line {line}: {source}")]
    Coordinate { line: usize, source: FixedError },
    #[error("block size must be at least 1")]
    InvalidBlockSize,
    #[error("points have {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointRecord {
    pub id: u64,
    pub point: FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Csv,
    Binary,
}

/// Result of parsing one CSV line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvLine {
    Blank,
    Comment,
    Point(FixedPoint),
}

/// Parses one CSV line: comma- or whitespace-separated decimals, with `#`
/// starting a comment.
pub fn parse_csv_line(text: &str, line: usize) -> Result<CsvLine, SpatialError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(CsvLine::Blank);
    }
    if trimmed.starts_with('#') {
        return Ok(CsvLine::Comment);
    }
    let body = trimmed.split('#').next().unwrap_or("");
    let fields: Vec<&str> = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .collect();
    let coords = fields
        .iter()
        .map(|f| {
            parse_fraction(f).map_err(|source| match source {
                FixedError::Malformed(m) => SpatialError::Parse {
                    line,
                    message: format!("malformed coordinate {m:?}"),
                },
                source => SpatialError::Coordinate { line, source },
            })
        })
        .collect::<Result<Vec<u64>, _>>()?;
    Ok(CsvLine::Point(FixedPoint::from_raw(coords)))
}

fn check_dim(expected: &mut Option<usize>, got: usize, line: usize) -> Result<(), SpatialError> {
    match *expected {
        None => *expected = Some(got),
        Some(d) if d != got => {
            return Err(SpatialError::Parse {
                line,
                message: format!("expected {d} coordinates, found {got}"),
            })
        }
        Some(_) => {}
    }
    Ok(())
}

/// Reads points; ids are 0-based positions in the input.
pub fn load_points(
    source: impl Read,
    format: PointFormat,
) -> Result<Vec<PointRecord>, SpatialError> {
    match format {
        PointFormat::Csv => load_csv(io::BufReader::new(source)),
        PointFormat::Binary => load_binary(source),
    }
}

fn load_csv(reader: impl BufRead) -> Result<Vec<PointRecord>, SpatialError> {
    let mut out = Vec::new();
    let mut dim = None;
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        if let CsvLine::Point(point) = parse_csv_line(&text?, line)? {
            check_dim(&mut dim, point.dim(), line)?;
            out.push(PointRecord {
                id: out.len() as u64,
                point,
            });
        }
    }
    Ok(out)
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N], SpatialError> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => SpatialError::Binary {
                    offset: self.offset,
                    message: format!("truncated {what}"),
                },
                _ => SpatialError::Io(e),
            })?;
        self.offset += N as u64;
        Ok(buf)
    }
}

fn load_binary(source: impl Read) -> Result<Vec<PointRecord>, SpatialError> {
    let mut cur = Cursor {
        inner: io::BufReader::new(source),
        offset: 0,
    };
    let mut probe = [0u8; 1];
    if cur.inner.read(&mut probe)? == 0 {
        return Ok(Vec::new());
    }
    let mut rest = [0u8; 3];
    cur.inner
        .read_exact(&mut rest)
        .map_err(|_| SpatialError::Binary {
            offset: 0,
            message: "truncated dimension".into(),
        })?;
    cur.offset = 4;
    let d = u32::from_le_bytes([probe[0], rest[0], rest[1], rest[2]]) as usize;
    let n = u64::from_le_bytes(cur.take::<8>("point count")?);
    if d == 0 && n > 0 {
        return Err(SpatialError::Binary {
            offset: 0,
            message: "dimension 0 with a nonzero point count".into(),
        });
    }
    let mut out = Vec::new();
    for id in 0..n {
        let coords = (0..d)
            .map(|_| cur.take::<8>("coordinate").map(u64::from_le_bytes))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(PointRecord {
            id,
            point: FixedPoint::from_raw(coords),
        });
    }
    let mut extra = [0u8; 1];
    if cur.inner.read(&mut extra)? != 0 {
        return Err(SpatialError::Binary {
            offset: cur.offset,
            message: "trailing bytes after last point".into(),
        });
    }
    Ok(out)
}

pub fn write_points(
    points: &[PointRecord],
    format: PointFormat,
    mut sink: impl Write,
) -> Result<(), SpatialError> {
    let dim = points.first().map_or(0, |p| p.point.dim());
    if let Some(p) = points.iter().find(|p| p.point.dim() != dim) {
        return Err(SpatialError::DimensionMismatch {
            expected: dim,
            got: p.point.dim(),
        });
    }
    match format {
        PointFormat::Csv => {
            for p in points {
                writeln!(sink, "{}", p.point)?;
            }
        }
        PointFormat::Binary => {
            sink.write_all(&(dim as u32).to_le_bytes())?;
            sink.write_all(&(points.len() as u64).to_le_bytes())?;
            for p in points {
                for &c in p.point.raw() {
                    sink.write_all(&c.to_le_bytes())?;
                }
            }
        }
    }
    sink.flush()?;
    Ok(())
}

/// A group of consecutive points with its exact bounding box in raw
/// fixed-point units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub ids: Vec<u64>,
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl Block {
    fn from_points<'a>(mut points: impl Iterator<Item = &'a PointRecord>) -> Option<Block> {
        let first = points.next()?;
        let mut block = Block {
            ids: vec![first.id],
            lo: first.point.raw().to_vec(),
            hi: first.point.raw().to_vec(),
        };
        for p in points {
            block.ids.push(p.id);
            for (j, &c) in p.point.raw().iter().enumerate() {
                block.lo[j] = block.lo[j].min(c);
                block.hi[j] = block.hi[j].max(c);
            }
        }
        Some(block)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn lo_f64(&self) -> Vec<f64> {
        self.lo.iter().map(|&c| raw_to_f64(c)).collect()
    }

    pub fn hi_f64(&self) -> Vec<f64> {
        self.hi.iter().map(|&c| raw_to_f64(c)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| raw_to_f64(h - l))
            .product()
    }
}

fn chunk(points: &[PointRecord], order: &[usize], b: usize) -> Result<Vec<Block>, SpatialError> {
    if b == 0 {
        return Err(SpatialError::InvalidBlockSize);
    }
    Ok(order
        .chunks(b)
        .filter_map(|group| Block::from_points(group.iter().map(|&i| &points[i])))
        .collect())
}

fn check_uniform_dim(points: &[PointRecord]) -> Result<(), SpatialError> {
    let dim = points.first().map_or(0, |p| p.point.dim());
    match points.iter().find(|p| p.point.dim() != dim) {
        Some(p) => Err(SpatialError::DimensionMismatch {
            expected: dim,
            got: p.point.dim(),
        }),
        None => Ok(()),
    }
}

/// Sorts the points along the curve and groups each `b` consecutive points
/// into a block.
pub fn bulk_load(
    points: &[PointRecord],
    b: usize,
    family: Family,
) -> Result<Vec<Block>, SpatialError> {
    if b == 0 {
        return Err(SpatialError::InvalidBlockSize);
    }
    let raw: Vec<FixedPoint> = points.iter().map(|p| p.point.clone()).collect();
    let order = sort_points(&raw, family)?;
    chunk(points, &order, b)
}

/// Stable coordinate-lexicographic order, axis 1 most significant.
pub fn lexicographic_order(points: &[PointRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].point.raw().cmp(points[b].point.raw()));
    order
}

/// Blocks of `b` consecutive points in coordinate-lexicographic order.
pub fn bulk_load_lexicographic(
    points: &[PointRecord],
    b: usize,
) -> Result<Vec<Block>, SpatialError> {
    check_uniform_dim(points)?;
    chunk(points, &lexicographic_order(points), b)
}

/// Indices of blocks whose bounding box meets the closed box `[lo, hi]`.
pub fn query_box(blocks: &[Block], lo: &[f64], hi: &[f64]) -> Vec<usize> {
    blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| {
            b.lo_f64()
                .iter()
                .zip(b.hi_f64())
                .zip(lo.iter().zip(hi))
                .all(|((&bl, bh), (&ql, &qh))| bl <= qh && ql <= bh)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Indices of blocks whose bounding box lies within `radius` of `center`.
pub fn query_sphere(blocks: &[Block], center: &[f64], radius: f64) -> Vec<usize> {
    blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| {
            let dist2: f64 = b
                .lo_f64()
                .iter()
                .zip(b.hi_f64())
                .zip(center)
                .map(|((&l, h), &c)| {
                    let gap = if c < l {
                        l - c
                    } else if c > h {
                        c - h
                    } else {
                        0.0
                    };
                    gap * gap
                })
                .sum();
            dist2 <= radius * radius
        })
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStats {
    pub count: usize,
    pub points: usize,
    pub total_volume: f64,
    pub mean_volume: f64,
    pub max_volume: f64,
    /// Largest ratio of a block's box volume to its share of the points.
    pub max_ratio: f64,
}

pub fn block_stats(blocks: &[Block]) -> BlockStats {
    let points: usize = blocks.iter().map(Block::len).sum();
    let volumes: Vec<f64> = blocks.iter().map(Block::volume).collect();
    let total: f64 = volumes.iter().sum();
    let max_ratio = blocks
        .iter()
        .zip(&volumes)
        .map(|(b, v)| v * points as f64 / b.len() as f64)
        .fold(0.0, f64::max);
    BlockStats {
        count: blocks.len(),
        points,
        total_volume: total,
        mean_volume: if blocks.is_empty() {
            0.0
        } else {
            total / blocks.len() as f64
        },
        max_volume: volumes.iter().copied().fold(0.0, f64::max),
        max_ratio,
    }
}

/// One line per block: `block_id size vol lo... hi...`, tab-separated,
/// with exact shortest decimals for the box corners.
pub fn write_block_tsv(blocks: &[Block], mut sink: impl Write) -> Result<(), SpatialError> {
    writeln!(sink, "# block_id\tsize\tvol\tlo...\thi...")?;
    for (i, b) in blocks.iter().enumerate() {
        write!(sink, "{i}\t{}\t{}", b.len(), b.volume())?;
        for &c in b.lo.iter().chain(&b.hi) {
            write!(sink, "\t{}", format_fraction(c))?;
        }
        writeln!(sink)?;
    }
    sink.flush()?;
    Ok(())
}
