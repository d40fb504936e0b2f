//! Binary reflected Gray-code curves and their structural predicates.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

use crate::construction::ExtendedCurve;
use crate::geometry::{AnchoredCurve, Direction, FreeCurve, SignedPermutation, Vertex};

/// Largest dimension for operations that enumerate all `2^d` cube vertices.
pub const MAX_MATERIALIZE_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrayError {
    #[error("prefix length {n} outside 1..={max} for dimension {d}")]
    PrefixOutOfRange { d: usize, n: usize, max: usize },
    #[error("extended Gray curve needs d >= 2, got {0}")]
    DimensionTooSmall(usize),
}

static CACHE: OnceLock<RwLock<HashMap<usize, Arc<FreeCurve>>>> = OnceLock::new();

/// `G(d)`, shared from a process-wide cache.
pub fn gray_code_shared(d: usize) -> Arc<FreeCurve> {
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.read().expect("gray cache poisoned").get(&d) {
        return Arc::clone(c);
    }
    let built = Arc::new(build_gray(d));
    let mut w = cache.write().expect("gray cache poisoned");
    Arc::clone(w.entry(d).or_insert(built))
}

/// `G(d)`: empty for `d = 0`, otherwise `G(d-1), <d>, reverse(G(d-1))`.
pub fn gray_code(d: usize) -> FreeCurve {
    (*gray_code_shared(d)).clone()
}

fn build_gray(d: usize) -> FreeCurve {
    let mut dirs: Vec<Direction> = Vec::with_capacity((1usize << d) - 1);
    for axis in 1..=d {
        let prev = dirs.len();
        dirs.push(Direction::new(axis as i32));
        for i in (0..prev).rev() {
            let back = -dirs[i];
            dirs.push(back);
        }
    }
    FreeCurve::new(dirs)
}

/// The `m`-th vertex of `G(d)` anchored at the origin, as a bit mask
/// (bit `j-1` holds coordinate `j`).
pub fn gray_vertex(m: u64) -> u64 {
    m ^ (m >> 1)
}

/// Rank of a bit-mask vertex along `G(d)` from the origin.
pub fn gray_rank(mut g: u64) -> u64 {
    let mut shift = 1;
    while shift < 64 {
        g ^= g >> shift;
        shift <<= 1;
    }
    g
}

/// `G(d)` anchored at the origin, as explicit vertices.
pub fn gray_vertices(d: usize) -> Vec<Vertex> {
    (0..1u64 << d)
        .map(|m| {
            let g = gray_vertex(m);
            Vertex((0..d).map(|j| (g >> j & 1) as i64).collect())
        })
        .collect()
}

/// `G'(d)`: `G(d)` at the origin with entry edge `<d>` and exit edge
/// `<-(d-1)>`.
pub fn extended_gray(d: usize) -> Result<ExtendedCurve, GrayError> {
    if d < 2 {
        return Err(GrayError::DimensionTooSmall(d));
    }
    Ok(ExtendedCurve::new(
        AnchoredCurve::new(Vertex::origin(d), gray_code(d).into_dirs()),
        Direction::new(d as i32),
        Direction::new(-(d as i32 - 1)),
    ))
}

/// Endpoints of `π(G(d))` placed inside the unit cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayEndpoints {
    pub entry: Vertex,
    pub exit: Vertex,
    pub orientation: Direction,
}

pub fn gray_entry_exit(perm: &SignedPermutation) -> GrayEndpoints {
    let d = perm.dim();
    let entry = gray_entry_bits(perm);
    let orientation = Direction::new(perm.at(d as i32));
    let mut exit = entry.clone();
    exit[orientation.axis() - 1] ^= 1;
    GrayEndpoints {
        entry: Vertex(entry.into_iter().map(i64::from).collect()),
        exit: Vertex(exit.into_iter().map(i64::from).collect()),
        orientation,
    }
}

/// Entry corner of `π(G(d))`: coordinate `j` is `flipped(π⁻¹(j))`.
pub fn gray_entry_bits(perm: &SignedPermutation) -> Vec<u8> {
    let mut entry = vec![0u8; perm.dim()];
    for &v in perm.image() {
        entry[v.unsigned_abs() as usize - 1] = u8::from(v < 0);
    }
    entry
}

/// Axes used by the first `n` edges of `G(d)`.
pub fn prefix_axes(d: usize, n: usize) -> Result<BTreeSet<usize>, GrayError> {
    let g = checked_window(d, n)?;
    Ok(g.dirs()[..n].iter().map(|dir| dir.axis()).collect())
}

/// Axes used by the last `n` edges of `G(d)`.
pub fn suffix_axes(d: usize, n: usize) -> Result<BTreeSet<usize>, GrayError> {
    let g = checked_window(d, n)?;
    let len = g.len();
    Ok(g.dirs()[len - n..].iter().map(|dir| dir.axis()).collect())
}

fn checked_window(d: usize, n: usize) -> Result<Arc<FreeCurve>, GrayError> {
    let max = (1usize << d) - 1;
    if n == 0 || n > max {
        return Err(GrayError::PrefixOutOfRange { d, n, max });
    }
    Ok(gray_code_shared(d))
}

/// True iff axis-1 edges and other edges alternate, starting and ending with
/// axis 1.
pub fn check_alternation(c: &FreeCurve) -> bool {
    let dirs = c.dirs();
    if dirs.is_empty() || dirs.len().is_multiple_of(2) {
        return false;
    }
    dirs.iter()
        .enumerate()
        .all(|(i, dir)| (dir.axis() == 1) == (i % 2 == 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dirs;
    use proptest::prelude::*;

    // Independent oracle: the textbook recursive definition.
    fn gray_recursive(d: usize) -> Vec<i32> {
        if d == 0 {
            return vec![];
        }
        let prev = gray_recursive(d - 1);
        let mut out = prev.clone();
        out.push(d as i32);
        out.extend(prev.iter().rev().map(|v| -v));
        out
    }

    #[test]
    fn small_gray_codes() {
        assert!(gray_code(0).is_empty());
        assert_eq!(gray_code(2).values(), vec![1, 2, -1]);
        assert_eq!(
            gray_code(4).values(),
            vec![1, 2, -1, 3, 1, -2, -1, 4, 1, 2, -1, -3, 1, -2, -1]
        );
    }

    #[test]
    fn iterative_matches_recursive() {
        for d in 0..=10 {
            assert_eq!(gray_code(d).values(), gray_recursive(d));
            assert_eq!(gray_code(d).len(), (1 << d) - 1);
        }
    }

    #[test]
    fn extended_examples() {
        let e = extended_gray(3).unwrap();
        assert_eq!(e.entry_edge.value(), 3);
        assert_eq!(e.exit_edge.value(), -2);
        assert_eq!(
            FreeCurve::new(e.body.dirs.clone()).values(),
            vec![1, 2, -1, 3, 1, -2, -1]
        );
        let e = extended_gray(2).unwrap();
        assert_eq!((e.entry_edge.value(), e.exit_edge.value()), (2, -1));
        assert!(extended_gray(1).is_err());
    }

    #[test]
    fn vertex_formula_matches_materialization() {
        for d in 1..=8 {
            let c = gray_code(d).anchor(Vertex::origin(d));
            assert_eq!(c.materialize().unwrap(), gray_vertices(d));
        }
        for m in 0..1024 {
            assert_eq!(gray_rank(gray_vertex(m)), m);
        }
    }

    #[test]
    fn endpoints_examples() {
        let id = SignedPermutation::identity(4);
        let e = gray_entry_exit(&id);
        assert_eq!(e.entry, Vertex(vec![0, 0, 0, 0]));
        assert_eq!(e.exit, Vertex(vec![0, 0, 0, 1]));
        assert_eq!(e.orientation.value(), 4);

        let p = SignedPermutation::new(vec![2, -1]).unwrap();
        let e = gray_entry_exit(&p);
        assert_eq!(e.entry, Vertex(vec![1, 0]));
        assert_eq!(e.exit, Vertex(vec![0, 0]));
        // Independent check: materialize π(G(2)) from that entry.
        let c = p
            .apply_curve(&gray_code(2))
            .unwrap()
            .anchor(e.entry.clone());
        let vs = c.materialize().unwrap();
        assert!(vs.iter().all(|v| v.0.iter().all(|&x| x == 0 || x == 1)));
        assert_eq!(vs.last().unwrap(), &e.exit);
    }

    #[test]
    fn entry_exit_for_every_perm_in_small_dims() {
        for d in 2..=4 {
            for p in SignedPermutation::all(d) {
                let e = gray_entry_exit(&p);
                let vs = p
                    .apply_curve(&gray_code(d))
                    .unwrap()
                    .anchor(e.entry.clone())
                    .materialize()
                    .unwrap();
                assert!(vs.iter().all(|v| v.0.iter().all(|&x| x == 0 || x == 1)));
                assert_eq!(vs.last().unwrap(), &e.exit);
            }
        }
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(prefix_axes(3, 1).unwrap(), BTreeSet::from([1]));
        assert_eq!(prefix_axes(3, 4).unwrap(), BTreeSet::from([1, 2, 3]));
        assert_eq!(prefix_axes(4, 3).unwrap(), BTreeSet::from([1, 2]));
        assert!(prefix_axes(3, 0).is_err());
        assert!(prefix_axes(3, 8).is_err());
    }

    #[test]
    fn alternation_examples() {
        for d in 2..=6 {
            assert!(check_alternation(&gray_code(d)));
        }
        assert!(!check_alternation(&FreeCurve::new(dirs(&[1, 1]))));
        assert!(check_alternation(&gray_code(3).reverse()));
    }

    #[test]
    fn reversal_is_reflection_in_last_coordinate() {
        for d in 2..=7 {
            let mut image: Vec<i32> = (1..=d as i32).collect();
            image[d - 1] = -(d as i32);
            let rho = SignedPermutation::new(image).unwrap();
            let reversed = gray_code(d).reverse();
            let reflected = rho.apply_curve(&gray_code(d)).unwrap();
            let start = gray_entry_exit(&rho).entry;
            assert_eq!(
                reversed.anchor(start.clone()).materialize().unwrap(),
                reflected.anchor(start).materialize().unwrap()
            );
        }
    }

    fn ceil_log2_plus1(n: usize) -> usize {
        (usize::BITS - n.leading_zeros()) as usize
    }

    proptest! {
        #[test]
        fn prefix_and_suffix_axes(d in 2usize..=8, seed in any::<u32>()) {
            let n = 1 + seed as usize % ((1 << d) - 1);
            let expected: BTreeSet<usize> = (1..=ceil_log2_plus1(n)).collect();
            prop_assert_eq!(prefix_axes(d, n).unwrap(), expected.clone());
            prop_assert_eq!(suffix_axes(d, n).unwrap(), expected);
        }

        #[test]
        fn alternation_in_all_dims(d in 1usize..=8) {
            prop_assert!(check_alternation(&gray_code(d)));
            prop_assert!(check_alternation(&gray_code(d).reverse()));
        }

        #[test]
        fn gray_visits_unit_cube(d in 1usize..=8) {
            let vs = gray_code(d).anchor(Vertex::origin(d)).materialize().unwrap();
            prop_assert_eq!(vs.len(), 1 << d);
            prop_assert!(vs.iter().all(|v| v.0.iter().all(|&x| x == 0 || x == 1)));
            prop_assert_eq!(vs.last().unwrap(), &gray_entry_exit(&SignedPermutation::identity(d)).exit);
        }
    }
}
