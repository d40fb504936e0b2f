//! Integer-grid geometry: directions, vertices, signed permutations
//! (hypercube isometries), free and anchored curves, bounding boxes.
//!
//! Axes are 1-based throughout. A direction `+j` / `-j` moves one step up or
//! down along axis `j`; the value 0 is never a valid direction.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Largest level for which `2^k - 1` still fits comfortably in an `i64`
/// coordinate.
pub const MAX_LEVEL: u32 = 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid direction {value} for dimension {d}")]
    InvalidDirection { value: i32, d: usize },
    #[error("not a signed permutation: {0:?}")]
    InvalidPermutation(Vec<i32>),
    #[error("curve revisits vertex {vertex:?} at step {step}")]
    RepeatedVertex { step: usize, vertex: Vec<i64> },
    #[error("step {step} from {from:?} to {to:?} is not a unit step")]
    NonUnitStep {
        step: usize,
        from: Vec<i64>,
        to: Vec<i64>,
    },
    #[error("empty input")]
    EmptyInput,
}

/// Signed axis: `+j` or `-j` for an axis `j` in `1..=d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction(i32);

impl Direction {
    /// Panics on zero; use [`Direction::checked`] for untrusted input.
    pub fn new(value: i32) -> Self {
        assert!(value != 0, "direction 0 is reserved");
        Direction(value)
    }

    pub fn checked(value: i32, d: usize) -> Result<Self, GeometryError> {
        if value == 0 || value.unsigned_abs() as usize > d {
            return Err(GeometryError::InvalidDirection { value, d });
        }
        Ok(Direction(value))
    }

    pub fn value(self) -> i32 {
        self.0
    }

    pub fn axis(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn sign(self) -> i32 {
        self.0.signum()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl std::ops::Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `flipped(i)`: 1 for negative values, 0 otherwise.
pub fn flipped(value: i32) -> u8 {
    u8::from(value < 0)
}

/// Builds a direction list from raw signed integers.
pub fn dirs(values: &[i32]) -> Vec<Direction> {
    values.iter().map(|&v| Direction::new(v)).collect()
}

/// A point of `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(pub Vec<i64>);

impl Vertex {
    pub fn origin(d: usize) -> Self {
        Vertex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// The neighbour reached by one step in direction `dir`.
    pub fn step(&self, dir: Direction) -> Vertex {
        let mut next = self.0.clone();
        next[dir.axis() - 1] += i64::from(dir.sign());
        Vertex(next)
    }

    /// `factor * self + offset`, coordinatewise.
    pub fn scaled_plus(&self, factor: i64, offset: &[i64]) -> Vertex {
        Vertex(
            self.0
                .iter()
                .zip(offset)
                .map(|(&c, &o)| factor * c + o)
                .collect(),
        )
    }
}

impl From<Vec<i64>> for Vertex {
    fn from(v: Vec<i64>) -> Self {
        Vertex(v)
    }
}

/// An element of the hyperoctahedral group, written `[π(1), …, π(d)]`.
///
/// `π(-k) = -π(k)` holds by construction since only the images of the
/// positive axes are stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignedPermutation {
    image: Vec<i32>,
}

impl SignedPermutation {
    pub fn new(image: Vec<i32>) -> Result<Self, GeometryError> {
        let d = image.len();
        let mut seen = vec![false; d + 1];
        for &v in &image {
            let a = v.unsigned_abs() as usize;
            if v == 0 || a > d || seen[a] {
                return Err(GeometryError::InvalidPermutation(image));
            }
            seen[a] = true;
        }
        Ok(SignedPermutation { image })
    }

    pub fn identity(d: usize) -> Self {
        SignedPermutation {
            image: (1..=d as i32).collect(),
        }
    }

    /// Assembles `π` from its unsigned permutation `|π|` (1-based positions
    /// stored at index `pos - 1`) and the signs of `π⁻¹` indexed by axis
    /// (index `axis - 1`).
    pub fn from_parts(abs: &[usize], inverse_signs: &[i32]) -> Result<Self, GeometryError> {
        let image = abs
            .iter()
            .map(|&a| a as i32 * inverse_signs[a - 1].signum())
            .collect();
        Self::new(image)
    }

    pub fn dim(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[i32] {
        &self.image
    }

    /// `π(k)` for a signed axis `k`.
    pub fn at(&self, k: i32) -> i32 {
        let v = self.image[k.unsigned_abs() as usize - 1];
        if k < 0 {
            -v
        } else {
            v
        }
    }

    pub fn apply(&self, dir: Direction) -> Direction {
        Direction(self.at(dir.0))
    }

    /// `|π|` as 1-based axes.
    pub fn unsigned(&self) -> Vec<usize> {
        self.image
            .iter()
            .map(|v| v.unsigned_abs() as usize)
            .collect()
    }

    /// `|π(pos)|` for a 1-based position.
    pub fn axis_at(&self, pos: usize) -> usize {
        self.image[pos - 1].unsigned_abs() as usize
    }

    /// Position `p` with `|π(p)| = axis`.
    pub fn position_of(&self, axis: usize) -> usize {
        self.image
            .iter()
            .position(|v| v.unsigned_abs() as usize == axis)
            .expect("axis present in permutation")
            + 1
    }

    /// `sgn(π⁻¹(axis))` for a positive axis.
    pub fn inverse_sign(&self, axis: usize) -> i32 {
        self.image[self.position_of(axis) - 1].signum()
    }

    pub fn inverse(&self) -> SignedPermutation {
        let mut inv = vec![0; self.dim()];
        for (pos, &v) in self.image.iter().enumerate() {
            inv[v.unsigned_abs() as usize - 1] = (pos as i32 + 1) * v.signum();
        }
        SignedPermutation { image: inv }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &SignedPermutation) -> SignedPermutation {
        assert_eq!(self.dim(), other.dim(), "compose: dimension mismatch");
        SignedPermutation {
            image: other.image.iter().map(|&v| self.at(v)).collect(),
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<(), GeometryError> {
        if self.dim() != d {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: d,
            });
        }
        Ok(())
    }

    /// Applies the isometry of the cube `[0, side]^d` to a vertex: output
    /// coordinate `j` is input coordinate `|π⁻¹(j)|`, complemented within the
    /// cube when `π⁻¹(j)` is negative.
    pub fn apply_vertex(&self, v: &Vertex, side: i64) -> Result<Vertex, GeometryError> {
        self.check_dim(v.dim())?;
        let mut out = vec![0; v.dim()];
        for (pos, &img) in self.image.iter().enumerate() {
            let c = v.0[pos];
            out[img.unsigned_abs() as usize - 1] = if img < 0 { side - c } else { c };
        }
        Ok(Vertex(out))
    }

    pub fn apply_dirs(&self, dirs: &[Direction]) -> Result<Vec<Direction>, GeometryError> {
        let d = self.dim();
        dirs.iter()
            .map(|&dir| {
                if dir.axis() > d {
                    Err(GeometryError::InvalidDirection { value: dir.0, d })
                } else {
                    Ok(self.apply(dir))
                }
            })
            .collect()
    }

    pub fn apply_curve(&self, curve: &FreeCurve) -> Result<FreeCurve, GeometryError> {
        Ok(FreeCurve::new(self.apply_dirs(curve.dirs())?))
    }

    /// Every signed permutation of dimension `d` (`d! · 2^d` of them).
    pub fn all(d: usize) -> Vec<SignedPermutation> {
        let mut perms = Vec::new();
        let mut abs: Vec<i32> = (1..=d as i32).collect();
        permute(&mut abs, 0, &mut |p| {
            for signs in 0u32..(1 << d) {
                let image = p
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| if signs >> i & 1 == 1 { -a } else { a })
                    .collect();
                perms.push(SignedPermutation { image });
            }
        });
        perms
    }
}

fn permute(items: &mut Vec<i32>, start: usize, visit: &mut dyn FnMut(&[i32])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

impl fmt::Display for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.image.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// Depth of direction `a` in `π`: 0 for the last two axes of `|π|`,
/// otherwise `j` such that `|π(d-1-j)| = |a|`.
pub fn perm_depth(perm: &SignedPermutation, a: Direction) -> usize {
    let d = perm.dim();
    let pos = perm.position_of(a.axis());
    if pos + 1 >= d {
        0
    } else {
        d - 1 - pos
    }
}

/// A curve given only by its edge directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FreeCurve {
    dirs: Vec<Direction>,
}

impl FreeCurve {
    pub fn new(dirs: Vec<Direction>) -> Self {
        FreeCurve { dirs }
    }

    pub fn from_values(values: &[i32]) -> Self {
        FreeCurve { dirs: dirs(values) }
    }

    pub fn dirs(&self) -> &[Direction] {
        &self.dirs
    }

    pub fn into_dirs(self) -> Vec<Direction> {
        self.dirs
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn values(&self) -> Vec<i32> {
        self.dirs.iter().map(|d| d.value()).collect()
    }

    /// Reverses the edge order and negates every direction.
    pub fn reverse(&self) -> FreeCurve {
        FreeCurve {
            dirs: self.dirs.iter().rev().map(|&d| -d).collect(),
        }
    }

    pub fn anchor(self, entry: Vertex) -> AnchoredCurve {
        AnchoredCurve {
            entry,
            dirs: self.dirs,
        }
    }
}

/// A curve given by its entry vertex and edge directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchoredCurve {
    pub entry: Vertex,
    pub dirs: Vec<Direction>,
}

impl AnchoredCurve {
    pub fn new(entry: Vertex, dirs: Vec<Direction>) -> Self {
        AnchoredCurve { entry, dirs }
    }

    pub fn dim(&self) -> usize {
        self.entry.dim()
    }

    pub fn vertex_count(&self) -> usize {
        self.dirs.len() + 1
    }

    /// Vertex sequence along the curve, rejecting revisits and directions
    /// outside the ambient dimension.
    pub fn materialize(&self) -> Result<Vec<Vertex>, GeometryError> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.vertex_count());
        let mut seen = HashSet::with_capacity(self.vertex_count());
        let mut cur = self.entry.clone();
        seen.insert(cur.clone());
        out.push(cur.clone());
        for (step, &dir) in self.dirs.iter().enumerate() {
            if dir.axis() > d {
                return Err(GeometryError::InvalidDirection { value: dir.0, d });
            }
            cur = cur.step(dir);
            if !seen.insert(cur.clone()) {
                return Err(GeometryError::RepeatedVertex {
                    step: step + 1,
                    vertex: cur.0,
                });
            }
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub fn exit(&self) -> Vertex {
        self.dirs.iter().fold(self.entry.clone(), |v, &d| v.step(d))
    }

    /// Reversed curve: starts at the old exit.
    pub fn reverse(&self) -> AnchoredCurve {
        AnchoredCurve {
            entry: self.exit(),
            dirs: FreeCurve::new(self.dirs.clone()).reverse().into_dirs(),
        }
    }
}

/// Recovers an anchored curve from an explicit vertex list, checking that
/// every step is a unit step and that no vertex repeats.
pub fn curve_from_vertices(vertices: &[Vertex]) -> Result<AnchoredCurve, GeometryError> {
    let first = vertices.first().ok_or(GeometryError::EmptyInput)?;
    let d = first.dim();
    let mut dirs = Vec::with_capacity(vertices.len().saturating_sub(1));
    let mut seen = HashSet::with_capacity(vertices.len());
    seen.insert(first);
    for (step, pair) in vertices.windows(2).enumerate() {
        let (from, to) = (&pair[0], &pair[1]);
        if to.dim() != d {
            return Err(GeometryError::DimensionMismatch {
                expected: d,
                got: to.dim(),
            });
        }
        let mut dir = None;
        let mut diff_count = 0;
        for j in 0..d {
            let delta = to.0[j] - from.0[j];
            if delta != 0 {
                diff_count += 1;
                if delta.abs() == 1 {
                    dir = Some(Direction((j as i32 + 1) * delta.signum() as i32));
                }
            }
        }
        match (diff_count, dir) {
            (1, Some(dir)) => dirs.push(dir),
            _ => {
                return Err(GeometryError::NonUnitStep {
                    step: step + 1,
                    from: from.0.clone(),
                    to: to.0.clone(),
                })
            }
        }
        if !seen.insert(to) {
            return Err(GeometryError::RepeatedVertex {
                step: step + 1,
                vertex: to.0.clone(),
            });
        }
    }
    Ok(AnchoredCurve::new(first.clone(), dirs))
}

/// Inclusive axis-aligned box on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundingBox {
    pub lo: Vertex,
    pub hi: Vertex,
}

impl BoundingBox {
    /// Number of grid points inside the box.
    pub fn cell_volume(&self) -> u128 {
        self.lo
            .0
            .iter()
            .zip(&self.hi.0)
            .map(|(&l, &h)| (h - l + 1) as u128)
            .product()
    }

    pub fn side_lengths(&self) -> Vec<i64> {
        self.lo
            .0
            .iter()
            .zip(&self.hi.0)
            .map(|(&l, &h)| h - l)
            .collect()
    }
}

pub fn bounding_box(vertices: &[Vertex]) -> Result<BoundingBox, GeometryError> {
    let first = vertices.first().ok_or(GeometryError::EmptyInput)?;
    let mut lo = first.0.clone();
    let mut hi = first.0.clone();
    for v in &vertices[1..] {
        if v.dim() != lo.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lo.len(),
                got: v.dim(),
            });
        }
        for (j, &c) in v.0.iter().enumerate() {
            lo[j] = lo[j].min(c);
            hi[j] = hi[j].max(c);
        }
    }
    Ok(BoundingBox {
        lo: Vertex(lo),
        hi: Vertex(hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(v: &[i32]) -> SignedPermutation {
        SignedPermutation::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_fixes_everything() {
        let id = SignedPermutation::identity(3);
        let c = FreeCurve::from_values(&[1, 2, -1, 3]);
        assert_eq!(id.apply_curve(&c).unwrap(), c);
        let v = Vertex(vec![0, 1, 1]);
        assert_eq!(id.apply_vertex(&v, 1).unwrap(), v);
    }

    #[test]
    fn reflection_of_first_axis() {
        let p = perm(&[-1, 2]);
        let c = FreeCurve::from_values(&[1, 2, -1]);
        assert_eq!(p.apply_curve(&c).unwrap().values(), vec![-1, 2, 1]);
    }

    #[test]
    fn rotation_maps_directions() {
        let p = perm(&[2, -1]);
        assert_eq!(p.apply(Direction::new(1)).value(), 2);
        assert_eq!(p.apply(Direction::new(2)).value(), -1);
        assert_eq!(p.apply(Direction::new(-2)).value(), 1);
    }

    // Each signed 2-permutation must act on the unit square exactly like the
    // isometry that sends the step along axis k to the step π(k).
    #[test]
    fn all_2d_perms_agree_with_square_isometries() {
        let square = [
            Vertex(vec![0, 0]),
            Vertex(vec![1, 0]),
            Vertex(vec![0, 1]),
            Vertex(vec![1, 1]),
        ];
        let all = SignedPermutation::all(2);
        assert_eq!(all.len(), 8);
        for p in all {
            for v in &square {
                let w = p.apply_vertex(v, 1).unwrap();
                for dir in [1, -1, 2, -2] {
                    let dir = Direction::new(dir);
                    let stepped = v.step(dir);
                    if stepped.0.iter().any(|&c| !(0..=1).contains(&c)) {
                        continue;
                    }
                    let moved = p.apply_vertex(&stepped, 1).unwrap();
                    assert_eq!(moved, w.step(p.apply(dir)), "perm {p} at {v:?} dir {dir}");
                }
            }
        }
    }

    #[test]
    fn inverse_and_compose() {
        let id = SignedPermutation::identity(2);
        assert_eq!(id.inverse(), id);
        let p = perm(&[2, -1]);
        assert_eq!(p.inverse(), perm(&[-2, 1]));
        for k in [1, -1, 2, -2] {
            assert_eq!(p.inverse().at(p.at(k)), k);
        }
        assert_eq!(p.compose(&p.inverse()), id);
        assert_eq!(p.inverse().compose(&p), id);
    }

    #[test]
    fn compose_applies_right_operand_first() {
        let a = perm(&[2, -1, 3]);
        let b = perm(&[-3, 1, 2]);
        let ab = a.compose(&b);
        for k in [1, 2, 3, -1, -2, -3] {
            assert_eq!(ab.at(k), a.at(b.at(k)));
        }
    }

    #[test]
    fn invalid_permutations_rejected() {
        assert!(SignedPermutation::new(vec![1, 1]).is_err());
        assert!(SignedPermutation::new(vec![0, 1]).is_err());
        assert!(SignedPermutation::new(vec![3, 1]).is_err());
        let p = SignedPermutation::identity(2);
        assert!(p.apply_vertex(&Vertex(vec![0, 0, 0]), 1).is_err());
        assert!(p.apply_dirs(&[Direction::new(3)]).is_err());
    }

    #[test]
    fn reverse_examples() {
        assert!(FreeCurve::default().reverse().is_empty());
        assert_eq!(
            FreeCurve::from_values(&[1, 2, -1]).reverse().values(),
            vec![1, -2, -1]
        );
    }

    #[test]
    fn materialize_examples() {
        let c = AnchoredCurve::new(Vertex::origin(2), dirs(&[1, 2, -1]));
        assert_eq!(
            c.materialize().unwrap(),
            vec![
                Vertex(vec![0, 0]),
                Vertex(vec![1, 0]),
                Vertex(vec![1, 1]),
                Vertex(vec![0, 1])
            ]
        );
        let v = Vertex(vec![4, -2]);
        assert_eq!(
            AnchoredCurve::new(v.clone(), vec![]).materialize().unwrap(),
            vec![v]
        );
        let back = AnchoredCurve::new(Vertex::origin(2), dirs(&[1, -1]));
        assert!(matches!(
            back.materialize(),
            Err(GeometryError::RepeatedVertex { step: 2, .. })
        ));
    }

    #[test]
    fn curve_from_vertices_rejects_jumps() {
        let vs = vec![Vertex(vec![0, 0]), Vertex(vec![1, 1])];
        assert!(matches!(
            curve_from_vertices(&vs),
            Err(GeometryError::NonUnitStep { .. })
        ));
        let vs = vec![Vertex(vec![0, 0]), Vertex(vec![2, 0])];
        assert!(curve_from_vertices(&vs).is_err());
        assert!(curve_from_vertices(&[]).is_err());
    }

    #[test]
    fn bounding_box_examples() {
        let b = bounding_box(&[Vertex(vec![0, 0])]).unwrap();
        assert_eq!(b.lo, b.hi);
        assert_eq!(b.cell_volume(), 1);
        let c = AnchoredCurve::new(Vertex::origin(2), dirs(&[1, 2, -1]));
        let b = bounding_box(&c.materialize().unwrap()).unwrap();
        assert_eq!(b.lo, Vertex(vec![0, 0]));
        assert_eq!(b.hi, Vertex(vec![1, 1]));
        assert_eq!(bounding_box(&[]), Err(GeometryError::EmptyInput));
    }

    #[test]
    fn depth_examples() {
        let p = perm(&[3, -1, 5, 2, -4]);
        let d = 5;
        assert_eq!(perm_depth(&p, Direction::new(p.at(d as i32 - 2))), 1);
        assert_eq!(perm_depth(&p, Direction::new(p.at(1))), d - 2);
        assert_eq!(perm_depth(&p, Direction::new(p.at(5))), 0);
        assert_eq!(perm_depth(&p, Direction::new(p.at(4))), 0);
        let id = SignedPermutation::identity(4);
        assert_eq!(perm_depth(&id, Direction::new(4)), 0);
    }

    fn arb_perm(d: usize) -> impl Strategy<Value = SignedPermutation> {
        (
            Just((1..=d as i32).collect::<Vec<_>>()).prop_shuffle(),
            proptest::collection::vec(any::<bool>(), d),
        )
            .prop_map(|(abs, neg)| {
                let image = abs
                    .into_iter()
                    .zip(neg)
                    .map(|(a, n)| if n { -a } else { a })
                    .collect();
                SignedPermutation::new(image).unwrap()
            })
    }

    fn arb_dir(d: usize) -> impl Strategy<Value = Direction> {
        (1..=d as i32, any::<bool>()).prop_map(|(a, n)| Direction::new(if n { -a } else { a }))
    }

    proptest! {
        #[test]
        fn inverse_undoes_apply(p in arb_perm(6), a in arb_dir(6)) {
            prop_assert_eq!(p.inverse().apply(p.apply(a)), a);
        }

        #[test]
        fn reverse_is_involution(vals in proptest::collection::vec(arb_dir(5), 0..40)) {
            let c = FreeCurve::new(vals);
            prop_assert_eq!(c.reverse().reverse(), c);
        }

        #[test]
        fn every_axis_has_one_depth(p in arb_perm(7)) {
            let d = 7;
            let mut zeros = 0;
            let mut seen = std::collections::HashSet::new();
            for a in 1..=d as i32 {
                let depth = perm_depth(&p, Direction::new(a));
                prop_assert!(depth <= d - 2);
                prop_assert_eq!(depth, perm_depth(&p, Direction::new(-a)));
                if depth == 0 { zeros += 1; } else { prop_assert!(seen.insert(depth)); }
            }
            prop_assert_eq!(zeros, 2);
        }

        // Random walks: materialize must accept exactly the self-avoiding ones.
        #[test]
        fn materialize_detects_self_intersection(vals in proptest::collection::vec(arb_dir(3), 0..30)) {
            let c = AnchoredCurve::new(Vertex::origin(3), vals.clone());
            let mut pos = vec![Vertex::origin(3)];
            for &dir in &vals {
                let next = pos.last().unwrap().step(dir);
                pos.push(next);
            }
            let distinct: std::collections::HashSet<_> = pos.iter().collect();
            prop_assert_eq!(c.materialize().is_ok(), distinct.len() == pos.len());
        }
    }
}
