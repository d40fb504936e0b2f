//! Approximating curves built by inflation, the continuity and
//! hyperorthogonality conditions on inflation plans, and the builders for the
//! two self-similar hyperorthogonal well-folded families and the Butz-Moore
//! baseline.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{
    perm_depth, AnchoredCurve, Direction, GeometryError, SignedPermutation, Vertex, MAX_LEVEL,
};
use crate::gray::{gray_code_shared, gray_entry_exit, gray_vertex};

/// Largest `d * k` accepted by the builders (the curve has `2^(d k)` vertices).
pub const MAX_TOTAL_BITS: u32 = 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructionError {
    #[error("continuity violated at index {index}: {condition}")]
    ContinuityViolation {
        index: usize,
        condition: ContinuityCondition,
    },
    #[error("plan has {got} permutations, parent has {expected} vertices")]
    PlanLength { expected: usize, got: usize },
    #[error("sign schedule gives a negative entry sign for axis {axis}")]
    ScheduleViolation { axis: usize },
    #[error("unsupported dimension {d} for {family}")]
    UnsupportedDimension { d: usize, family: Family },
    #[error("level {k} too large for dimension {d}")]
    LevelTooLarge { d: usize, k: u32 },
    #[error("axes {axes:?} tie at local edge distance {distance} around vertex {vertex}")]
    EdgeDistanceTie {
        vertex: usize,
        axes: Vec<usize>,
        distance: usize,
    },
    #[error("axis {axis} has no edge in the curve")]
    AxisAbsent { axis: usize },
    #[error("vertex index {index} outside the curve ({len} vertices)")]
    VertexOutOfRange { index: usize, len: usize },
    #[error("curve of {len} vertices does not split into 1-curves of {block} vertices")]
    NotBlockAligned { len: usize, block: usize },
    #[error("Butz-Moore plan failed the continuity check: {0}")]
    InternalContinuityFailure(Box<ConstructionError>),
    #[error("block {block} is not an isometric copy of the parent")]
    NotSelfSimilar { block: usize },
    #[error("curve is not an isometric image of the extended Gray curve")]
    NotAGrayImage,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Which continuity requirement failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuityCondition {
    /// The entry edge does not lead into the entry corner of the first child.
    EntrySign,
    /// Entry corners of consecutive children disagree along `axis`.
    SignPropagation { axis: usize },
    /// The connecting edge does not lead into the entry corner of the next child.
    ConnectingSign,
    /// The exit edge does not leave from the exit corner of the last child.
    ExitSign,
}

impl fmt::Display for ContinuityCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContinuityCondition::EntrySign => write!(f, "entry edge sign"),
            ContinuityCondition::SignPropagation { axis } => {
                write!(f, "sign propagation on axis {axis}")
            }
            ContinuityCondition::ConnectingSign => write!(f, "connecting edge sign"),
            ContinuityCondition::ExitSign => write!(f, "exit edge sign"),
        }
    }
}

/// Index `i` follows the 1-based plan numbering: `σ_i` is `perms[i-1]`,
/// `e_i` is `edges[i]` and `e_0` is the entry edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContinuityViolation {
    pub index: usize,
    pub condition: ContinuityCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperorthogonalCondition {
    /// `e_i` is not among the last two axes of `σ_i` (`side = 0`) or of
    /// `σ_{i+1}` (`side = 1`).
    EdgeDepth { side: u8 },
    /// The depth of `axis` jumps by more than one between `σ_i` and `σ_{i+1}`.
    DepthJump { axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperorthogonalViolation {
    pub index: usize,
    pub condition: HyperorthogonalCondition,
}

/// A curve together with the edge entering its first vertex and the edge
/// leaving its last vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedCurve {
    pub body: AnchoredCurve,
    pub entry_edge: Direction,
    pub exit_edge: Direction,
}

impl ExtendedCurve {
    pub fn new(body: AnchoredCurve, entry_edge: Direction, exit_edge: Direction) -> Self {
        ExtendedCurve {
            body,
            entry_edge,
            exit_edge,
        }
    }

    /// The single-vertex curve at the origin with entry edge `<d>` and exit
    /// edge `<-(d-1)>`.
    pub fn seed(d: usize) -> Self {
        ExtendedCurve::new(
            AnchoredCurve::new(Vertex::origin(d), vec![]),
            Direction::new(d as i32),
            Direction::new(-(d as i32 - 1)),
        )
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    pub fn vertex_count(&self) -> usize {
        self.body.vertex_count()
    }

    /// `e_0, e_1, …, e_K`: entry edge, body edges, exit edge.
    pub fn edges(&self) -> Vec<Direction> {
        let mut out = Vec::with_capacity(self.body.dirs.len() + 2);
        out.push(self.entry_edge);
        out.extend_from_slice(&self.body.dirs);
        out.push(self.exit_edge);
        out
    }

    pub fn vertices(&self) -> Result<Vec<Vertex>, GeometryError> {
        self.body.materialize()
    }

    /// Materializes the body with the entry-edge origin prepended and the
    /// exit-edge destination appended, checking the extended path is valid.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let start = self.body.entry.step(-self.entry_edge);
        AnchoredCurve::new(start, self.edges()).materialize()?;
        Ok(())
    }
}

/// One signed permutation per parent vertex, plus the child types
/// `T_i = [|σ_i(d)| = |e_i|]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InflationPlan {
    pub perms: Vec<SignedPermutation>,
    pub types: Vec<u8>,
}

impl InflationPlan {
    /// Derives the types from the parent's edges (`e_0..e_K`).
    pub fn new(perms: Vec<SignedPermutation>, edges: &[Direction]) -> Self {
        let types = perms
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = p.dim();
                u8::from(p.axis_at(d) == edges[i + 1].axis())
            })
            .collect();
        InflationPlan { perms, types }
    }

    pub fn identity(d: usize, edges: &[Direction]) -> Self {
        InflationPlan::new(vec![SignedPermutation::identity(d)], edges)
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Self-similar hyperorthogonal well-folded curve entering at the origin.
    HoOrigin,
    /// Self-similar hyperorthogonal well-folded curve entering at
    /// `(1/3, …, 1/3, 0)`.
    HoFace,
    /// Butz-Moore generalization of the Hilbert curve.
    ButzMoore,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::HoOrigin, Family::HoFace, Family::ButzMoore];

    pub fn name(self) -> &'static str {
        match self {
            Family::HoOrigin => "ho-origin",
            Family::HoFace => "ho-face",
            Family::ButzMoore => "butz",
        }
    }

    pub fn is_hyperorthogonal(self) -> bool {
        self != Family::ButzMoore
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown curve family {0:?} (expected ho-origin, ho-face or butz)")]
pub struct UnknownFamily(pub String);

impl FromStr for Family {
    type Err = UnknownFamily;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ho-origin" | "origin" => Ok(Family::HoOrigin),
            "ho-face" | "face" => Ok(Family::HoFace),
            "butz" | "butz-moore" | "hilbert" => Ok(Family::ButzMoore),
            _ => Err(UnknownFamily(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveSpec {
    pub d: usize,
    pub family: Family,
    pub k: u32,
}

impl CurveSpec {
    pub fn new(d: usize, family: Family, k: u32) -> Self {
        CurveSpec { d, family, k }
    }

    /// The family actually built: in two dimensions both hyperorthogonal
    /// families are the Hilbert curve, produced by the Butz-Moore builder.
    pub fn effective_family(&self) -> Family {
        if self.d == 2 {
            Family::ButzMoore
        } else {
            self.family
        }
    }

    pub fn check(&self) -> Result<(), ConstructionError> {
        if self.d < 2 {
            return Err(ConstructionError::UnsupportedDimension {
                d: self.d,
                family: self.family,
            });
        }
        if self.k > MAX_LEVEL || self.d as u64 * self.k as u64 > MAX_TOTAL_BITS as u64 {
            return Err(ConstructionError::LevelTooLarge {
                d: self.d,
                k: self.k,
            });
        }
        Ok(())
    }
}

/// An approximating curve with every intermediate level and the plans that
/// produced them: `plans[l]` inflates `levels[l]` into `levels[l + 1]`.
#[derive(Debug, Clone)]
pub struct BuiltCurve {
    pub spec: CurveSpec,
    pub levels: Vec<ExtendedCurve>,
    pub plans: Vec<InflationPlan>,
}

impl BuiltCurve {
    pub fn curve(&self) -> &ExtendedCurve {
        self.levels.last().expect("at least the seed level")
    }

    pub fn level(&self, k: usize) -> &ExtendedCurve {
        &self.levels[k]
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        self.curve()
            .vertices()
            .expect("built curves are validated during inflation")
    }
}

/// `sgn(σ⁻¹(e))` for a signed direction `e`.
fn inverse_sign_of(perm: &SignedPermutation, e: Direction) -> i32 {
    perm.inverse_sign(e.axis()) * e.sign()
}

/// Checks the continuity conditions for inflating a parent with edges
/// `e_0..e_K` using `perms = σ_1..σ_K`.
pub fn validate_wellfolded_step(
    perms: &[SignedPermutation],
    edges: &[Direction],
) -> Result<(), Vec<ContinuityViolation>> {
    assert_eq!(
        perms.len() + 1,
        edges.len(),
        "need one more edge than perms"
    );
    let k = perms.len();
    let mut out = Vec::new();
    let mut report = |index, condition| out.push(ContinuityViolation { index, condition });

    if inverse_sign_of(&perms[0], edges[0]) != 1 {
        report(0, ContinuityCondition::EntrySign);
    }
    for i in 1..k {
        let (cur, next, e) = (&perms[i - 1], &perms[i], edges[i]);
        let orient = cur.axis_at(cur.dim());
        for j in 1..=cur.dim() {
            let flips = (j == orient) != (j == e.axis());
            let expected = if flips {
                -cur.inverse_sign(j)
            } else {
                cur.inverse_sign(j)
            };
            if next.inverse_sign(j) != expected {
                report(i, ContinuityCondition::SignPropagation { axis: j });
            }
        }
        if inverse_sign_of(next, e) != 1 {
            report(i, ContinuityCondition::ConnectingSign);
        }
    }
    let last = &perms[k - 1];
    let exit = edges[k];
    if (inverse_sign_of(last, exit) == 1) != (exit.axis() == last.axis_at(last.dim())) {
        report(k, ContinuityCondition::ExitSign);
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Checks the hyperorthogonality conditions for the same inputs as
/// [`validate_wellfolded_step`], including the entry and exit edges.
pub fn validate_hyperorthogonal_step(
    perms: &[SignedPermutation],
    edges: &[Direction],
) -> Result<(), Vec<HyperorthogonalViolation>> {
    assert_eq!(
        perms.len() + 1,
        edges.len(),
        "need one more edge than perms"
    );
    let k = perms.len();
    let mut out = Vec::new();
    for (i, &e) in edges.iter().enumerate() {
        if i >= 1 && perm_depth(&perms[i - 1], e) != 0 {
            out.push(HyperorthogonalViolation {
                index: i,
                condition: HyperorthogonalCondition::EdgeDepth { side: 0 },
            });
        }
        if i < k && perm_depth(&perms[i], e) != 0 {
            out.push(HyperorthogonalViolation {
                index: i,
                condition: HyperorthogonalCondition::EdgeDepth { side: 1 },
            });
        }
    }
    for i in 1..k {
        for a in 1..=perms[i].dim() {
            let a_dir = Direction::new(a as i32);
            let d0 = perm_depth(&perms[i - 1], a_dir);
            let d1 = perm_depth(&perms[i], a_dir);
            if d0.abs_diff(d1) > 1 {
                out.push(HyperorthogonalViolation {
                    index: i,
                    condition: HyperorthogonalCondition::DepthJump { axis: a },
                });
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Replaces vertex `v_i` of the parent by `σ_i(G(d))` placed in the subcube
/// at `2 v_i`, joined by edges with the parent's directions.
pub fn inflate(
    parent: &ExtendedCurve,
    plan: &InflationPlan,
) -> Result<ExtendedCurve, ConstructionError> {
    let d = parent.dim();
    let count = parent.vertex_count();
    if plan.perms.len() != count {
        return Err(ConstructionError::PlanLength {
            expected: count,
            got: plan.perms.len(),
        });
    }
    for p in &plan.perms {
        p.check_dim(d)?;
    }
    let edges = parent.edges();
    if let Err(v) = validate_wellfolded_step(&plan.perms, &edges) {
        return Err(ConstructionError::ContinuityViolation {
            index: v[0].index,
            condition: v[0].condition,
        });
    }
    let gray = gray_code_shared(d);
    let first = gray_entry_exit(&plan.perms[0]).entry;
    let entry = parent.body.entry.scaled_plus(2, first.coords());
    let mut dirs = Vec::with_capacity(count << d);
    for (i, perm) in plan.perms.iter().enumerate() {
        dirs.extend(gray.dirs().iter().map(|&g| perm.apply(g)));
        if i + 1 < count {
            dirs.push(edges[i + 1]);
        }
    }
    Ok(ExtendedCurve::new(
        AnchoredCurve::new(entry, dirs),
        parent.entry_edge,
        parent.exit_edge,
    ))
}

fn edge_vertex_distance(s: usize, t: usize) -> usize {
    if s <= t {
        t - s
    } else {
        s - t - 1
    }
}

/// Edge distance along the whole extended curve: one less than the number of
/// edges on the shortest sub-path containing vertex `t` and an edge of
/// `axis`. Edge `s` of [`ExtendedCurve::edges`] enters vertex `s`.
pub fn edge_distance(
    curve: &ExtendedCurve,
    t: usize,
    axis: usize,
) -> Result<usize, ConstructionError> {
    let edges = curve.edges();
    distance_in(&edges, 0, edges.len(), t, axis)
}

fn distance_in(
    edges: &[Direction],
    lo: usize,
    hi: usize,
    t: usize,
    axis: usize,
) -> Result<usize, ConstructionError> {
    edges[lo..hi]
        .iter()
        .enumerate()
        .filter(|(_, e)| e.axis() == axis)
        .map(|(s, _)| edge_vertex_distance(lo + s, t))
        .min()
        .ok_or(ConstructionError::AxisAbsent { axis })
}

/// Edge distance of `axis` to vertex `t` measured inside the extended 1-curve
/// (block of `2^d` vertices plus its entry and exit edges) containing `t`.
pub fn local_edge_distance(
    child: &ExtendedCurve,
    t: usize,
    axis: usize,
) -> Result<usize, ConstructionError> {
    let d = child.dim();
    let block = 1usize << d;
    let len = child.vertex_count();
    if !len.is_multiple_of(block) {
        return Err(ConstructionError::NotBlockAligned { len, block });
    }
    if t >= len {
        return Err(ConstructionError::VertexOutOfRange { index: t, len });
    }
    let edges = child.edges();
    let start = t / block * block;
    distance_in(&edges, start, start + block + 1, t, axis)
}

/// Sign schedule for the first child permutation at each level: whether
/// `σ_{k,1}⁻¹(j)` is negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignSchedule {
    Origin,
    Face,
}

impl SignSchedule {
    pub fn for_family(family: Family) -> Option<SignSchedule> {
        match family {
            Family::HoOrigin => Some(SignSchedule::Origin),
            Family::HoFace => Some(SignSchedule::Face),
            Family::ButzMoore => None,
        }
    }

    /// `flipped(σ⁻¹_{level,1}(j))` for axes `j = 1..=d`.
    pub fn flips(self, d: usize, level: usize) -> Vec<bool> {
        (1..=d)
            .map(|j| match self {
                SignSchedule::Origin => false,
                SignSchedule::Face => level % 2 == 1 && j < d,
            })
            .collect()
    }
}

/// Derives the unique hyperorthogonal well-folded inflation plan for
/// `parent` whose first permutation has the given inverse-sign flips.
///
/// Axes are ordered by decreasing local edge distance to each parent vertex;
/// the two incident axes go last, ordered by the sign rule, and the signs of
/// later permutations follow from continuity.
pub fn derive_inflation_plan(
    parent: &ExtendedCurve,
    entry_flips: &[bool],
) -> Result<InflationPlan, ConstructionError> {
    let d = parent.dim();
    let count = parent.vertex_count();
    let edges = parent.edges();
    let block = 1usize << d;
    if count > 1 && !count.is_multiple_of(block) {
        return Err(ConstructionError::NotBlockAligned { len: count, block });
    }
    let mut inv_signs: Vec<i32> = entry_flips
        .iter()
        .map(|&f| if f { -1 } else { 1 })
        .collect();
    if inv_signs.len() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            got: inv_signs.len(),
        }
        .into());
    }
    let e0 = edges[0];
    if inv_signs[e0.axis() - 1] * e0.sign() != 1 {
        return Err(ConstructionError::ScheduleViolation { axis: e0.axis() });
    }

    let mut perms = Vec::with_capacity(count);
    for i in 1..=count {
        let (prev, next) = (edges[i - 1], edges[i]);
        let mut abs = if count == 1 {
            (1..=d)
                .filter(|&a| a != prev.axis() && a != next.axis())
                .collect()
        } else {
            distance_order(parent, &edges, i - 1, prev.axis(), next.axis())?
        };
        if inv_signs[next.axis() - 1] * next.sign() == 1 {
            abs.extend([prev.axis(), next.axis()]);
        } else {
            abs.extend([next.axis(), prev.axis()]);
        }
        let perm = SignedPermutation::from_parts(&abs, &inv_signs)?;
        let orient = perm.axis_at(d);
        if i < count {
            for j in 1..=d {
                if (j == orient) != (j == next.axis()) {
                    inv_signs[j - 1] = -inv_signs[j - 1];
                }
            }
        }
        perms.push(perm);
    }
    Ok(InflationPlan::new(perms, &edges))
}

/// Non-incident axes sorted by strictly decreasing local edge distance to
/// vertex `t`.
fn distance_order(
    parent: &ExtendedCurve,
    edges: &[Direction],
    t: usize,
    prev: usize,
    next: usize,
) -> Result<Vec<usize>, ConstructionError> {
    let d = parent.dim();
    let block = 1usize << d;
    let start = t / block * block;
    let mut dist = Vec::with_capacity(d);
    for a in 1..=d {
        let led = distance_in(edges, start, start + block + 1, t, a)?;
        if (led == 0) != (a == prev || a == next) {
            return Err(ConstructionError::EdgeDistanceTie {
                vertex: t,
                axes: (1..=d)
                    .filter(|&b| distance_in(edges, start, start + block + 1, t, b) == Ok(0))
                    .collect(),
                distance: 0,
            });
        }
        if led > 0 {
            dist.push((led, a));
        }
    }
    dist.sort_by_key(|x| std::cmp::Reverse(x.0));
    for w in dist.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(ConstructionError::EdgeDistanceTie {
                vertex: t,
                axes: vec![w[0].1, w[1].1],
                distance: w[0].0,
            });
        }
    }
    Ok(dist.into_iter().map(|(_, a)| a).collect())
}

/// Builds either self-similar hyperorthogonal well-folded family up to level
/// `spec.k`. Two-dimensional requests return the Hilbert curve.
pub fn build_ho_curve(spec: CurveSpec) -> Result<BuiltCurve, ConstructionError> {
    spec.check()?;
    let schedule =
        SignSchedule::for_family(spec.family).ok_or(ConstructionError::UnsupportedDimension {
            d: spec.d,
            family: spec.family,
        })?;
    if spec.d == 2 {
        let mut built = build_butz_moore(2, spec.k)?;
        built.spec = spec;
        return Ok(built);
    }
    let mut levels = vec![ExtendedCurve::seed(spec.d)];
    let mut plans = Vec::with_capacity(spec.k as usize);
    for level in 0..spec.k as usize {
        let parent = &levels[level];
        let plan = derive_inflation_plan(parent, &schedule.flips(spec.d, level))?;
        let child = inflate(parent, &plan)?;
        plans.push(plan);
        levels.push(child);
    }
    Ok(BuiltCurve {
        spec,
        levels,
        plans,
    })
}

/// Child permutations of the Butz-Moore curve at the first level: rotations
/// of the axes with signs fixed by continuity.
pub fn butz_moore_base_plan(d: usize) -> Result<InflationPlan, ConstructionError> {
    let gray = gray_code_shared(d);
    let count = 1usize << d;
    let mut edges = Vec::with_capacity(count + 1);
    edges.push(Direction::new(d as i32));
    edges.extend_from_slice(gray.dirs());
    edges.push(Direction::new(-(d as i32 - 1)));

    let mut inv_signs = vec![1i32; d];
    let mut perms = Vec::with_capacity(count);
    for i in 1..=count {
        let orient = if i == 1 || i == count {
            1
        } else {
            edges[i - 1].axis().max(edges[i].axis())
        };
        let abs: Vec<usize> = (1..=d).map(|j| (orient + j - 1) % d + 1).collect();
        let perm = SignedPermutation::from_parts(&abs, &inv_signs)?;
        if i < count {
            let e = edges[i].axis();
            for j in 1..=d {
                if (j == orient) != (j == e) {
                    inv_signs[j - 1] = -inv_signs[j - 1];
                }
            }
        }
        perms.push(perm);
    }
    Ok(InflationPlan::new(perms, &edges))
}

/// Builds the Butz-Moore curve up to level `k`; every level is checked by
/// [`inflate`].
pub fn build_butz_moore(d: usize, k: u32) -> Result<BuiltCurve, ConstructionError> {
    let spec = CurveSpec::new(d, Family::ButzMoore, k);
    spec.check()?;
    let mut levels = vec![ExtendedCurve::seed(d)];
    let mut plans = Vec::with_capacity(k as usize);
    let base = butz_moore_base_plan(d)?;
    for level in 0..k as usize {
        let parent = &levels[level];
        let perms = match level {
            0 => vec![SignedPermutation::identity(d)],
            1 => base.perms.clone(),
            _ => plans
                .last()
                .map(|p: &InflationPlan| {
                    p.perms
                        .iter()
                        .flat_map(|outer| base.perms.iter().map(move |inner| outer.compose(inner)))
                        .collect()
                })
                .expect("previous plan"),
        };
        let plan = InflationPlan::new(perms, &parent.edges());
        let child = inflate(parent, &plan)
            .map_err(|e| ConstructionError::InternalContinuityFailure(Box::new(e)))?;
        plans.push(plan);
        levels.push(child);
    }
    Ok(BuiltCurve {
        spec,
        levels,
        plans,
    })
}

/// Dispatches on the family.
pub fn build_curve(spec: CurveSpec) -> Result<BuiltCurve, ConstructionError> {
    match spec.family {
        Family::ButzMoore => build_butz_moore(spec.d, spec.k),
        _ => build_ho_curve(spec),
    }
}

/// Splits `child` into `2^d` consecutive blocks and finds, for each, the
/// isometry mapping the extended `parent` (possibly reversed) onto the block
/// together with the edges entering and leaving it. The flag is true when
/// the reversed parent was needed.
pub fn decompose_self_similar(
    child: &ExtendedCurve,
    parent: &ExtendedCurve,
) -> Result<Vec<(SignedPermutation, bool)>, ConstructionError> {
    let d = parent.dim();
    let blocks = 1usize << d;
    let n = parent.vertex_count();
    if child.dim() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            got: child.dim(),
        }
        .into());
    }
    if child.vertex_count() != n * blocks {
        return Err(ConstructionError::NotBlockAligned {
            len: child.vertex_count(),
            block: n,
        });
    }
    if n == 1 {
        return Ok(vec![(SignedPermutation::identity(d), false); blocks]);
    }
    let parent_vs = parent.vertices()?;
    let lo: Vec<i64> = (0..d)
        .map(|j| parent_vs.iter().map(|v| v.0[j]).min().expect("non-empty"))
        .collect();
    let hi: Vec<i64> = (0..d)
        .map(|j| parent_vs.iter().map(|v| v.0[j]).max().expect("non-empty"))
        .collect();
    let side = hi[0] - lo[0];
    if (0..d).any(|j| hi[j] - lo[j] != side) {
        return Err(ConstructionError::NotSelfSimilar { block: 0 });
    }
    let normalize = |v: &Vertex| Vertex(v.0.iter().zip(&lo).map(|(c, l)| c - l).collect());
    let parent_edges = parent.edges();
    let forward = (normalize(&parent.body.entry), parent_edges.clone());
    let backward = (
        normalize(&parent.body.exit()),
        parent_edges.iter().rev().map(|&e| -e).collect::<Vec<_>>(),
    );

    let child_vs = child.vertices()?;
    let child_edges = child.edges();
    let span = side + 1;
    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let edges = &child_edges[b * n..=b * n + n];
        let start = &child_vs[b * n];
        let found = [(&forward, false), (&backward, true)].into_iter().find_map(
            |((entry, pedges), reversed)| {
                let perm = match_dirs(pedges, edges, d)?;
                let mapped = perm.apply_vertex(entry, side).ok()?;
                let offset_ok = start
                    .0
                    .iter()
                    .zip(&mapped.0)
                    .all(|(&c, &m)| (c - m).rem_euclid(span) == 0);
                offset_ok.then_some((perm, reversed))
            },
        );
        match found {
            Some(x) => out.push(x),
            None => return Err(ConstructionError::NotSelfSimilar { block: b }),
        }
    }
    Ok(out)
}

/// Splits `child` into `2^d` consecutive blocks and finds, for each, the
/// isometry mapping the body of `parent` onto it. Reversal needs no flag
/// since a reversed Gray image is again a Gray image.
pub fn decompose_body(
    child: &AnchoredCurve,
    parent: &AnchoredCurve,
) -> Result<Vec<SignedPermutation>, ConstructionError> {
    let d = parent.dim();
    let blocks = 1usize << d;
    let n = parent.vertex_count();
    if child.dim() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            got: child.dim(),
        }
        .into());
    }
    if child.vertex_count() != n * blocks {
        return Err(ConstructionError::NotBlockAligned {
            len: child.vertex_count(),
            block: n,
        });
    }
    let parent_vs = parent.materialize()?;
    let lo: Vec<i64> = (0..d)
        .map(|j| parent_vs.iter().map(|v| v.0[j]).min().expect("non-empty"))
        .collect();
    let side = (0..d)
        .map(|j| parent_vs.iter().map(|v| v.0[j]).max().expect("non-empty") - lo[j])
        .max()
        .expect("d >= 1");
    let entry = Vertex(parent.entry.0.iter().zip(&lo).map(|(c, l)| c - l).collect());
    let child_vs = child.materialize()?;
    (0..blocks)
        .map(|b| {
            let body = &child.dirs[b * n..b * n + n - 1];
            let perm = if n == 1 {
                SignedPermutation::identity(d)
            } else {
                match_dirs(&parent.dirs, body, d)
                    .ok_or(ConstructionError::NotSelfSimilar { block: b })?
            };
            let mapped = perm.apply_vertex(&entry, side)?;
            let aligned = child_vs[b * n]
                .0
                .iter()
                .zip(&mapped.0)
                .all(|(&c, &m)| (c - m).rem_euclid(side + 1) == 0);
            if aligned {
                Ok(perm)
            } else {
                Err(ConstructionError::NotSelfSimilar { block: b })
            }
        })
        .collect()
}

/// The signed permutation `π` with `π(parent) = block`, if any.
fn match_dirs(parent: &[Direction], block: &[Direction], d: usize) -> Option<SignedPermutation> {
    let mut image = vec![0i32; d];
    for (p, b) in parent.iter().zip(block) {
        let slot = &mut image[p.axis() - 1];
        if *slot == 0 {
            *slot = b.value() * p.sign();
        }
    }
    let perm = SignedPermutation::new(image).ok()?;
    parent
        .iter()
        .zip(block)
        .all(|(&p, &b)| perm.apply(p) == b)
        .then_some(perm)
}

/// Type of an isometric image of the extended Gray curve: 0 when its
/// orientation is along the entry edge, 1 when along the exit edge.
pub fn curve_type(c: &ExtendedCurve) -> Result<u8, ConstructionError> {
    let d = c.dim();
    let gray = gray_code_shared(d);
    let perm = match_dirs(gray.dirs(), &c.body.dirs, d)
        .filter(|_| c.body.dirs.len() == gray.len())
        .ok_or(ConstructionError::NotAGrayImage)?;
    let orient = perm.axis_at(d);
    if orient == c.entry_edge.axis() {
        Ok(0)
    } else if orient == c.exit_edge.axis() {
        Ok(1)
    } else {
        Err(ConstructionError::NotAGrayImage)
    }
}

/// The `m`-th (0-based) vertex of `G(d)` from the origin.
pub(crate) fn gray_cube_vertex(d: usize, m: usize) -> Vec<u8> {
    let g = gray_vertex(m as u64);
    (0..d).map(|j| (g >> j & 1) as u8).collect()
}

/// Relative entry coordinates of child `m` (0-based) of a level-1 plan.
pub(crate) fn relative_entry(plan: &InflationPlan, m: usize) -> Vec<u8> {
    let perm = &plan.perms[m];
    let d = perm.dim();
    let v = gray_cube_vertex(d, m);
    (1..=d)
        .map(|j| (u8::from(perm.inverse_sign(j) < 0) + v[j - 1]) % 2)
        .collect()
}

/// Relative exit coordinates of child `m` (0-based) of a level-1 plan.
pub(crate) fn relative_exit(plan: &InflationPlan, m: usize) -> Vec<u8> {
    let perm = &plan.perms[m];
    let d = perm.dim();
    let orient = perm.axis_at(d);
    relative_entry(plan, m)
        .into_iter()
        .enumerate()
        .map(|(j, r)| (r + u8::from(j + 1 == orient)) % 2)
        .collect()
}
