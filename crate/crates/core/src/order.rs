//! Ordering points along a curve: a streaming comparison operator on exact
//! fixed-point coordinates, discrete index/vertex conversions and sorting.
//!
//! The hyperorthogonal families (d >= 3) use a per-level state machine that
//! tracks the unsigned permutation and inverse signs of the current subcube
//! and whether the curve runs backwards through it. The Butz-Moore family, and
//! the Hilbert curve that both hyperorthogonal families reduce to in two
//! dimensions, are self-similar without reversal and descend by composing the
//! first-level child permutations.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;
use thiserror::Error;

use crate::construction::{butz_moore_base_plan, ConstructionError, CurveSpec, Family};
use crate::fixed::FixedPoint;
use crate::geometry::{flipped, SignedPermutation, Vertex};
use crate::gray::{gray_rank, gray_vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {0} too small (need at least 2)")]
    DimensionTooSmall(usize),
    #[error("vertex {vertex:?} outside the level-{k} grid")]
    OutOfGrid { vertex: Vec<i64>, k: u32 },
    #[error("index {index} outside 0..2^{bits}")]
    OutOfRange { index: u128, bits: u32 },
    #[error("index of {bits} bits does not fit in 128 bits")]
    IndexTooWide { bits: u64 },
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

/// Which traversal rule a curve spec uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Walker {
    Ho { face: bool },
    Rotation,
}

fn walker_for(d: usize, family: Family) -> Result<Walker, OrderError> {
    if d < 2 {
        return Err(OrderError::DimensionTooSmall(d));
    }
    Ok(match (d, family) {
        (2, _) | (_, Family::ButzMoore) => Walker::Rotation,
        (_, Family::HoOrigin) => Walker::Ho { face: false },
        (_, Family::HoFace) => Walker::Ho { face: true },
    })
}

/// Per-level state of the hyperorthogonal comparator. Index 0 of both
/// arrays is a sentinel slot.
#[derive(Debug, Clone)]
pub struct ComparatorState {
    pub direction: i32,
    pub unsigned_perm: Vec<usize>,
    pub inverse_signs: Vec<i32>,
    face: bool,
}

impl ComparatorState {
    pub fn new(d: usize, face: bool) -> Self {
        ComparatorState {
            direction: 1,
            unsigned_perm: (0..=d).collect(),
            inverse_signs: vec![1; d + 1],
            face,
        }
    }

    fn dim(&self) -> usize {
        self.unsigned_perm.len() - 1
    }

    /// Descends one level. For each axis in the order it is examined,
    /// `half(i, axis, sign)` is given the step number `i` (1-based), the
    /// axis and the current inverse sign of that axis, and returns the bit
    /// of the point along that axis or breaks out. On completion the
    /// subcube number in the parent's forward order is returned.
    pub fn descend<B>(
        &mut self,
        mut half: impl FnMut(usize, usize, i32) -> ControlFlow<B, u8>,
    ) -> ControlFlow<B, usize> {
        let d = self.dim();
        let cubes = 1usize << d;
        let u = &self.unsigned_perm;
        let mut child = vec![0usize; d + 1];
        let mut child_signs = self.inverse_signs.clone();
        let mut entry = u[d];
        let mut exit = u[d - 1];
        let mut next = u[d];
        let mut id = 0usize;
        for i in 1..=d {
            let axis = next;
            next = u[d - i];
            id *= 2;
            let sign = self.inverse_signs[axis];
            let bit = half(i, axis, sign)?;
            let outside = 1 - 2 * i32::from(bit);
            child_signs[axis] = if self.face { -outside } else { outside };
            if bit == flipped(sign) {
                if i >= 3 {
                    child[i - 2] = exit;
                }
                exit = axis;
            } else {
                if i >= 3 {
                    child[i - 2] = entry;
                }
                entry = axis;
                id += 1;
                self.inverse_signs[next] = -self.inverse_signs[next];
            }
        }
        let other = entry + exit - u[1];
        if self.face {
            child[d - 1] = other;
            child[d] = u[1];
        } else {
            child[d - 1] = u[1];
            child[d] = other;
        }
        let at_end = id == 0 || id == cubes - 1;
        if at_end {
            child.swap(d - 1, d);
        }
        if id >= 3 * cubes / 4 {
            child[1] = u[d];
        }
        if !self.face {
            child_signs[u[1]] = -child_signs[u[1]];
        }
        let orientation = child[d];
        if at_end == self.face {
            child_signs[orientation] = -child_signs[orientation];
        }
        self.unsigned_perm = child;
        self.inverse_signs = child_signs;
        if exit == orientation {
            self.direction = -self.direction;
        }
        ControlFlow::Continue(id)
    }
}

static BASE_PLANS: OnceLock<RwLock<HashMap<usize, Arc<Vec<SignedPermutation>>>>> = OnceLock::new();

fn base_perms(d: usize) -> Result<Arc<Vec<SignedPermutation>>, OrderError> {
    let cache = BASE_PLANS.get_or_init(Default::default);
    if let Some(p) = cache.read().expect("plan cache poisoned").get(&d) {
        return Ok(Arc::clone(p));
    }
    let perms = Arc::new(butz_moore_base_plan(d)?.perms);
    let mut w = cache.write().expect("plan cache poisoned");
    Ok(Arc::clone(w.entry(d).or_insert(perms)))
}

/// Descent for curves whose children are the first-level permutations
/// applied to the whole curve.
struct RotationState {
    base: Arc<Vec<SignedPermutation>>,
    frame: SignedPermutation,
}

impl RotationState {
    fn new(d: usize) -> Result<Self, OrderError> {
        Ok(RotationState {
            base: base_perms(d)?,
            frame: SignedPermutation::identity(d),
        })
    }

    /// Rank of the subcube whose corner bits are `bits` (axis `j` at index
    /// `j - 1`).
    fn rank(&mut self, bits: impl Fn(usize) -> u8) -> usize {
        let mut g = 0u64;
        for (i, &img) in self.frame.image().iter().enumerate() {
            let b = bits(img.unsigned_abs() as usize) ^ u8::from(img < 0);
            g |= u64::from(b) << i;
        }
        let m = gray_rank(g) as usize;
        self.frame = self.frame.compose(&self.base[m]);
        m
    }

    /// Corner bits of the subcube with rank `m`.
    fn corner(&mut self, m: usize) -> Vec<u8> {
        let g = gray_vertex(m as u64);
        let mut out = vec![0u8; self.frame.dim()];
        for (i, &img) in self.frame.image().iter().enumerate() {
            out[img.unsigned_abs() as usize - 1] = (g >> i & 1) as u8 ^ u8::from(img < 0);
        }
        self.frame = self.frame.compose(&self.base[m]);
        out
    }
}

fn check_dims(p: &FixedPoint, q: &FixedPoint, d: usize) -> Result<(), OrderError> {
    for x in [p, q] {
        if x.dim() != d {
            return Err(OrderError::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
    }
    Ok(())
}

/// Compares two points along the curve of `family`: `1` if `p` comes first,
/// `-1` if `q` comes first, `0` if they are equal. Points of different
/// precision are compared as exact dyadic values.
pub fn compare(p: &FixedPoint, q: &FixedPoint, family: Family) -> Result<i32, OrderError> {
    let d = p.dim();
    check_dims(p, q, d)?;
    let walker = walker_for(d, family)?;
    Ok(compare_with(p, q, walker))
}

fn compare_with(p: &FixedPoint, q: &FixedPoint, walker: Walker) -> i32 {
    if p.raw() == q.raw() {
        return 0;
    }
    let d = p.dim();
    match walker {
        Walker::Ho { face } => {
            let mut state = ComparatorState::new(d, face);
            for level in 0..64 {
                let direction = state.direction;
                let flow = state.descend(|_, axis, sign| {
                    let (pb, qb) = (p.bit(axis, level), q.bit(axis, level));
                    if pb == qb {
                        ControlFlow::Continue(pb)
                    } else {
                        ControlFlow::Break(direction * sign * (i32::from(qb) - i32::from(pb)))
                    }
                });
                if let ControlFlow::Break(r) = flow {
                    return r;
                }
            }
        }
        Walker::Rotation => {
            let mut sp = RotationState::new(d).expect("dimension checked");
            let mut sq = RotationState::new(d).expect("dimension checked");
            for level in 0..64 {
                let mp = sp.rank(|axis| p.bit(axis, level));
                let mq = sq.rank(|axis| q.bit(axis, level));
                if mp != mq {
                    return if mp < mq { 1 } else { -1 };
                }
            }
        }
    }
    unreachable!("distinct 64-bit points differ within 64 levels")
}

fn grid_bits(d: usize, k: u32) -> Result<u32, OrderError> {
    let bits = d as u64 * k as u64;
    if bits > 128 {
        return Err(OrderError::IndexTooWide { bits });
    }
    Ok(bits as u32)
}

/// Rank of grid vertex `v` along the level-`k` curve.
pub fn vertex_index(spec: &CurveSpec, v: &Vertex) -> Result<u128, OrderError> {
    let d = spec.d;
    let walker = walker_for(d, spec.family)?;
    if v.dim() != d {
        return Err(OrderError::DimensionMismatch {
            expected: d,
            got: v.dim(),
        });
    }
    grid_bits(d, spec.k)?;
    let k = spec.k;
    if v.coords()
        .iter()
        .any(|&c| c < 0 || (c as u128) >= 1u128 << k)
    {
        return Err(OrderError::OutOfGrid {
            vertex: v.0.clone(),
            k,
        });
    }
    let bit = |axis: usize, level: u32| (v.0[axis - 1] >> (k - 1 - level) & 1) as u8;
    let cubes = 1u128 << d;
    let mut rank = 0u128;
    match walker {
        Walker::Ho { face } => {
            let mut state = ComparatorState::new(d, face);
            for level in 0..k {
                let direction = state.direction;
                let ControlFlow::Continue(id) =
                    state.descend(|_, axis, _| ControlFlow::<(), u8>::Continue(bit(axis, level)))
                else {
                    unreachable!()
                };
                let digit = if direction == 1 {
                    id as u128
                } else {
                    cubes - 1 - id as u128
                };
                rank = rank * cubes + digit;
            }
        }
        Walker::Rotation => {
            let mut state = RotationState::new(d)?;
            for level in 0..k {
                let m = state.rank(|axis| bit(axis, level));
                rank = rank * cubes + m as u128;
            }
        }
    }
    Ok(rank)
}

/// The vertex with rank `r` along the level-`k` curve.
pub fn index_vertex(spec: &CurveSpec, r: u128) -> Result<Vertex, OrderError> {
    let d = spec.d;
    let walker = walker_for(d, spec.family)?;
    let bits = grid_bits(d, spec.k)?;
    if bits < 128 && r >> bits != 0 {
        return Err(OrderError::OutOfRange { index: r, bits });
    }
    let k = spec.k;
    let cubes = 1usize << d;
    let digit = |level: u32| (r >> (d as u32 * (k - 1 - level)) & (cubes as u128 - 1)) as usize;
    let mut coords = vec![0i64; d];
    match walker {
        Walker::Ho { face } => {
            let mut state = ComparatorState::new(d, face);
            for level in 0..k {
                let id = if state.direction == 1 {
                    digit(level)
                } else {
                    cubes - 1 - digit(level)
                };
                let _ = state.descend(|i, axis, sign| {
                    let second_half = (id >> (d - i) & 1) as u8;
                    let bit = flipped(sign) ^ second_half;
                    coords[axis - 1] = coords[axis - 1] << 1 | i64::from(bit);
                    ControlFlow::<(), u8>::Continue(bit)
                });
            }
        }
        Walker::Rotation => {
            let mut state = RotationState::new(d)?;
            for level in 0..k {
                let corner = state.corner(digit(level));
                for (c, b) in coords.iter_mut().zip(corner) {
                    *c = *c << 1 | i64::from(b);
                }
            }
        }
    }
    Ok(Vertex(coords))
}

/// Stable sort of point indices along the curve of `family`.
pub fn sort_points(points: &[FixedPoint], family: Family) -> Result<Vec<usize>, OrderError> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let d = first.dim();
    let walker = walker_for(d, family)?;
    if let Some(bad) = points.iter().find(|p| p.dim() != d) {
        return Err(OrderError::DimensionMismatch {
            expected: d,
            got: bad.dim(),
        });
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.par_sort_by(
        |&a, &b| match compare_with(&points[a], &points[b], walker) {
            1 => Ordering::Less,
            -1 => Ordering::Greater,
            _ => Ordering::Equal,
        },
    );
    Ok(order)
}
