//! Box-to-curve ratios, structural checks on vertex sequences, closed-form
//! lower bounds and the worst-case ratio table.

use std::fmt::{self, Write as _};

use num_rational::Ratio;
use rayon::prelude::*;
use thiserror::Error;

use crate::construction::{
    build_butz_moore, build_curve, relative_entry, relative_exit, BuiltCurve, ConstructionError,
    CurveSpec, Family, InflationPlan, SignSchedule,
};
use crate::geometry::{Direction, SignedPermutation, Vertex};
use crate::gray::gray_code_shared;

pub type Rational = Ratio<u128>;

/// Default ceiling on the number of cells in one exhaustive range scan.
pub const DEFAULT_SCAN_BUDGET: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("range [{i}, {j}] outside a curve of {len} vertices")]
    IndexOutOfRange { i: usize, j: usize, len: usize },
    #[error("scan of {cells} cells exceeds the budget of {budget}")]
    BudgetExceeded { cells: usize, budget: usize },
    #[error("no section with the required child orientations in dimension {d}")]
    SectionNotFound { d: usize },
    #[error("dimension {0} not supported here")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

/// Vertex coordinates stored row-major for tight scanning loops.
struct Grid {
    d: usize,
    coords: Vec<i64>,
}

impl Grid {
    fn new(vertices: &[Vertex]) -> Self {
        let d = vertices.first().map_or(0, Vertex::dim);
        let coords = vertices.iter().flat_map(|v| v.0.iter().copied()).collect();
        Grid { d, coords }
    }

    fn len(&self) -> usize {
        self.coords.len().checked_div(self.d).unwrap_or(0)
    }

    fn row(&self, i: usize) -> &[i64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }
}

fn grow(lo: &mut [i64], hi: &mut [i64], v: &[i64]) {
    for ((l, h), &c) in lo.iter_mut().zip(hi.iter_mut()).zip(v) {
        *l = (*l).min(c);
        *h = (*h).max(c);
    }
}

fn cell_volume(lo: &[i64], hi: &[i64]) -> u128 {
    lo.iter()
        .zip(hi)
        .map(|(&l, &h)| (h - l + 1) as u128)
        .product()
}

/// Bounding-box volume of cells `i..=j` divided by the number of cells.
pub fn section_bcr(vertices: &[Vertex], i: usize, j: usize) -> Result<Rational, AnalysisError> {
    if i > j || j >= vertices.len() {
        return Err(AnalysisError::IndexOutOfRange {
            i,
            j,
            len: vertices.len(),
        });
    }
    let mut lo = vertices[i].0.clone();
    let mut hi = lo.clone();
    for v in &vertices[i + 1..=j] {
        grow(&mut lo, &mut hi, &v.0);
    }
    Ok(Rational::new(cell_volume(&lo, &hi), (j - i + 1) as u128))
}

/// Largest ratio over all cell-aligned sections and the first range
/// attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorstSection {
    pub ratio: Rational,
    pub range: (usize, usize),
}

/// Exhaustive scan over all `O(N^2)` ranges, parallel over start indices.
pub fn worst_case_bcr(vertices: &[Vertex]) -> WorstSection {
    let grid = Grid::new(vertices);
    let n = grid.len();
    if n == 0 {
        return WorstSection {
            ratio: Rational::from_integer(1),
            range: (0, 0),
        };
    }
    let best_from = |i: usize| {
        let mut lo = grid.row(i).to_vec();
        let mut hi = lo.clone();
        let (mut vol, mut len, mut end) = (1u128, 1u128, i);
        for j in i + 1..n {
            grow(&mut lo, &mut hi, grid.row(j));
            let v = cell_volume(&lo, &hi);
            let l = (j - i + 1) as u128;
            if v * len > vol * l {
                (vol, len, end) = (v, l, j);
            }
        }
        (vol, len, i, end)
    };
    let (vol, len, i, j) = (0..n).into_par_iter().map(best_from).reduce(
        || (1, 1, usize::MAX, usize::MAX),
        |a, b| {
            let ord = (a.0 * b.1).cmp(&(b.0 * a.1));
            match ord {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => {
                    if (a.2, a.3) <= (b.2, b.3) {
                        a
                    } else {
                        b
                    }
                }
            }
        },
    );
    WorstSection {
        ratio: Rational::new(vol, len),
        range: (i, j),
    }
}

/// Worst-case ratios of one curve at each level up to its final one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BcrReport {
    pub worst_ratio: Rational,
    pub range: (usize, usize),
    pub level: u32,
    /// `series[l]` is the worst ratio at level `l + 1`.
    pub series: Vec<Rational>,
}

fn check_budget(cells: usize, budget: usize) -> Result<(), AnalysisError> {
    if cells > budget {
        return Err(AnalysisError::BudgetExceeded { cells, budget });
    }
    Ok(())
}

/// Scans every level `1..=spec.k` of the curve.
pub fn bcr_series(spec: CurveSpec, budget: usize) -> Result<BcrReport, AnalysisError> {
    spec.check()?;
    let cells = 1usize << (spec.d * spec.k as usize);
    check_budget(cells, budget)?;
    let built = build_curve(spec)?;
    Ok(report_for(&built))
}

fn report_for(built: &BuiltCurve) -> BcrReport {
    let mut series = Vec::new();
    let mut last = WorstSection {
        ratio: Rational::from_integer(1),
        range: (0, 0),
    };
    for level in built.levels.iter().skip(1) {
        last = worst_case_bcr(&level.vertices().expect("validated"));
        series.push(last.ratio);
    }
    BcrReport {
        worst_ratio: last.ratio,
        range: last.range,
        level: built.spec.k,
        series,
    }
}

/// A window of consecutive edges whose axis count is wrong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowViolation {
    pub n: u32,
    pub start: usize,
    pub axes: usize,
}

/// Every window of `2^n` consecutive edges, `n = 0..=d-2`, must use exactly
/// `n + 1` axes.
pub fn check_hyperorthogonal(edges: &[Direction], d: usize) -> Result<(), WindowViolation> {
    for n in 0..d.saturating_sub(1) as u32 {
        let w = 1usize << n;
        if edges.len() < w {
            break;
        }
        let mut counts = vec![0usize; d + 1];
        let mut distinct = 0usize;
        for (t, e) in edges.iter().enumerate() {
            let a = e.axis();
            counts[a] += 1;
            if counts[a] == 1 {
                distinct += 1;
            }
            if t >= w {
                let old = edges[t - w].axis();
                counts[old] -= 1;
                if counts[old] == 0 {
                    distinct -= 1;
                }
            }
            if t + 1 >= w && distinct != n as usize + 1 {
                return Err(WindowViolation {
                    n,
                    start: t + 1 - w,
                    axes: distinct,
                });
            }
        }
    }
    Ok(())
}

/// First block that breaks the well-folded structure: `level` counts
/// coarsening steps from the input, `block` indexes blocks of `2^d` vertices
/// at that level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldViolation {
    pub level: u32,
    pub block: usize,
}

/// Checks that the vertex sequence splits recursively into isometric images
/// of `G(d)`, each filling one unit subcube.
pub fn check_wellfolded(vertices: &[Vertex], d: usize) -> Result<(), FoldViolation> {
    let cubes = 1usize << d;
    let gray = gray_code_shared(d);
    let mut cur: Vec<Vec<i64>> = vertices.iter().map(|v| v.0.clone()).collect();
    let mut level = 0;
    while cur.len() > 1 {
        if !cur.len().is_multiple_of(cubes) || cur.iter().any(|v| v.len() != d) {
            return Err(FoldViolation { level, block: 0 });
        }
        let mut next = Vec::with_capacity(cur.len() / cubes);
        for (b, block) in cur.chunks(cubes).enumerate() {
            let fail = FoldViolation { level, block: b };
            let parent: Vec<i64> = block[0].iter().map(|c| c >> 1).collect();
            if block
                .iter()
                .any(|v| v.iter().zip(&parent).any(|(c, p)| c >> 1 != *p))
            {
                return Err(fail);
            }
            let dirs: Option<Vec<Direction>> =
                block.windows(2).map(|w| unit_step(&w[0], &w[1])).collect();
            let dirs = dirs.ok_or(fail.clone())?;
            let image = (1..=d).map(|m| dirs[(1 << (m - 1)) - 1].value()).collect();
            let perm = SignedPermutation::new(image).map_err(|_| fail.clone())?;
            if gray
                .dirs()
                .iter()
                .zip(&dirs)
                .any(|(&g, &x)| perm.apply(g) != x)
            {
                return Err(fail);
            }
            next.push(parent);
        }
        cur = next;
        level += 1;
    }
    Ok(())
}

fn unit_step(a: &[i64], b: &[i64]) -> Option<Direction> {
    let mut found = None;
    for (j, (x, y)) in a.iter().zip(b).enumerate() {
        match y - x {
            0 => {}
            s @ (1 | -1) if found.is_none() => found = Some((j as i32 + 1) * s as i32),
            _ => return None,
        }
    }
    found.map(Direction::new)
}

fn pow2(e: usize) -> u128 {
    1u128 << e
}

/// `4 - 16 / (2^d + 3)`.
pub fn lower_bound_face_continuous(d: usize) -> Rational {
    Rational::from_integer(4) - Rational::new(16, pow2(d) + 3)
}

/// `4 - 4 / 2^d`.
pub fn lower_bound_diagonal(d: usize) -> Rational {
    Rational::from_integer(4) - Rational::new(4, pow2(d))
}

/// Stronger known lower bound for two-dimensional face-continuous curves.
pub const PLANAR_FACE_CONTINUOUS_BOUND: u128 = 2;

/// Lower bound on the Butz-Moore section ratio, `2^(d-1) / (2^floor(d/2) + 2)`.
pub fn butz_section_bound(d: usize) -> Rational {
    Rational::new(pow2(d - 1), pow2(d / 2) + 2)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadSection {
    pub range: (usize, usize),
    pub ratio: Rational,
    pub bound: Rational,
}

impl BadSection {
    pub fn meets_bound(&self) -> bool {
        self.ratio >= self.bound
    }
}

/// Locates in the level-`k` Butz-Moore curve the section straddling two
/// first-level children, where rotated axis orders make the bounding box
/// span all axes except axis 2.
pub fn butz_bad_section(d: usize, k: u32) -> Result<BadSection, AnalysisError> {
    if d < 3 || k < 2 {
        return Err(AnalysisError::UnsupportedDimension(d));
    }
    let built = build_butz_moore(d, k)?;
    let plan = &built.plans[1];
    let edges = built.levels[1].edges();
    let cubes = 1usize << d;
    let half = d / 2;
    let i = (1..cubes)
        .find(|&i| {
            plan.perms[i - 1].axis_at(d) == 2
                && edges[i].axis() == 1
                && plan.perms[i].axis_at(d) == 2 + half
        })
        .ok_or(AnalysisError::SectionNotFound { d })?;
    let tail = (1usize << (half - 1)) + 1;
    let (start2, end2) = (i * cubes - tail, i * cubes + tail - 1);
    let scale = cubes.pow(k - 2);
    let range = (start2 * scale, (end2 + 1) * scale - 1);
    let ratio = section_bcr(&built.vertices(), range.0, range.1)?;
    Ok(BadSection {
        range,
        ratio,
        bound: butz_section_bound(d),
    })
}

/// Every window of `2^n` consecutive edges (`n <= d - 2`) fits in a unit
/// cube. Returns the first window (by `n` and start vertex) that does not.
pub fn check_unit_windows(vertices: &[Vertex], d: usize) -> Result<(), WindowViolation> {
    let grid = Grid::new(vertices);
    for n in 0..d.saturating_sub(1) as u32 {
        let w = 1usize << n;
        for start in 0..grid.len().saturating_sub(w) {
            let mut lo = grid.row(start).to_vec();
            let mut hi = lo.clone();
            for t in start + 1..=start + w {
                grow(&mut lo, &mut hi, grid.row(t));
            }
            let wide = lo.iter().zip(&hi).filter(|(l, h)| *h - *l > 1).count();
            if wide > 0 {
                return Err(WindowViolation {
                    n,
                    start,
                    axes: wide,
                });
            }
        }
    }
    Ok(())
}

fn spans_all(grid: &Grid, range: std::ops::Range<usize>, lo_all: &[i64], hi_all: &[i64]) -> bool {
    let (lo, hi) = bounds(grid, range);
    lo == lo_all && hi == hi_all
}

/// Smallest number of vertices `L` with `L / N >= 2^(d-1) / (2^d - 1)`.
pub fn spanning_section_length(n: usize, d: usize) -> usize {
    (n as u128 * pow2(d - 1)).div_ceil(pow2(d) - 1) as usize
}

/// Which end of the curve a too-small bounding box was found at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveEnd {
    Prefix,
    Suffix,
}

/// Every prefix and every suffix holding at least `N 2^(d-1) / (2^d - 1)`
/// vertices has the bounding box of the whole curve.
pub fn check_end_sections_span(vertices: &[Vertex], d: usize) -> Result<(), CurveEnd> {
    let grid = Grid::new(vertices);
    let n = grid.len();
    if n <= 1 {
        return Ok(());
    }
    let (lo_all, hi_all) = bounds(&grid, 0..n);
    let len = spanning_section_length(n, d);
    if !spans_all(&grid, 0..len, &lo_all, &hi_all) {
        return Err(CurveEnd::Prefix);
    }
    if !spans_all(&grid, n - len..n, &lo_all, &hi_all) {
        return Err(CurveEnd::Suffix);
    }
    Ok(())
}

/// First start index of a run of `spanning_section_length` vertices whose
/// bounding box is smaller than that of the whole curve.
pub fn find_narrow_long_section(vertices: &[Vertex], d: usize) -> Option<usize> {
    let grid = Grid::new(vertices);
    let n = grid.len();
    if n <= 1 {
        return None;
    }
    let (lo_all, hi_all) = bounds(&grid, 0..n);
    let len = spanning_section_length(n, d);
    (0..=n - len)
        .into_par_iter()
        .find_first(|&s| !spans_all(&grid, s..s + len, &lo_all, &hi_all))
}

fn bounds(grid: &Grid, range: std::ops::Range<usize>) -> (Vec<i64>, Vec<i64>) {
    let mut lo = grid.row(range.start).to_vec();
    let mut hi = lo.clone();
    for t in range {
        grow(&mut lo, &mut hi, grid.row(t));
    }
    (lo, hi)
}

/// Failure of one of the second-level structural relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationFailure {
    Omega { exit: Vec<u8>, entry: Vec<u8> },
    Alternation { child: usize },
    FirstType,
    Schedule { level: usize },
    EntryCorner { entry: Vec<u8> },
}

impl fmt::Display for RelationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationFailure::Omega { exit, entry } => write!(
                f,
                "last child's relative exit {exit:?} is not the first child's relative entry {entry:?} permuted"
            ),
            RelationFailure::Alternation { child } => {
                write!(f, "types of children {child} and {} do not alternate", child + 1)
            }
            RelationFailure::FirstType => write!(f, "first child type disagrees with its entry"),
            RelationFailure::Schedule { level } => {
                write!(f, "first permutation at level {level} has unexpected signs")
            }
            RelationFailure::EntryCorner { entry } => {
                write!(f, "first child enters at relative corner {entry:?}")
            }
        }
    }
}

/// `ω = [d-1, 2, …, d-2, d, 1]`, 1-based.
pub fn omega(d: usize) -> Vec<usize> {
    let mut w = vec![d - 1];
    w.extend(2..=d - 2);
    w.extend([d, 1]);
    w
}

/// The relative exit corner of the last level-1 child equals the relative
/// entry corner of the first child read through `ω`.
pub fn check_omega_relation(plan: &InflationPlan) -> Result<(), RelationFailure> {
    let last = plan.len() - 1;
    let d = plan.perms[0].dim();
    let exit = relative_exit(plan, last);
    let entry = relative_entry(plan, 0);
    let w = omega(d);
    if (0..d).all(|j| exit[j] == entry[w[j] - 1]) {
        Ok(())
    } else {
        Err(RelationFailure::Omega { exit, entry })
    }
}

/// For even `i < 2^d` (1-based) the types of children `i` and `i + 1`
/// differ, and the first type is the complement of the first relative entry
/// coordinate.
pub fn check_type_pattern(plan: &InflationPlan) -> Result<(), RelationFailure> {
    let n = plan.len();
    for i in (2..n).step_by(2) {
        if plan.types[i - 1] == plan.types[i] {
            return Err(RelationFailure::Alternation { child: i });
        }
    }
    if plan.types[0] != 1 - relative_entry(plan, 0)[0] {
        return Err(RelationFailure::FirstType);
    }
    Ok(())
}

/// The first permutation at every level has the schedule's signs, and the
/// first level-1 child enters at the schedule's relative corner.
pub fn check_sign_schedule(built: &BuiltCurve) -> Result<(), RelationFailure> {
    let d = built.spec.d;
    let schedule = SignSchedule::for_family(built.spec.family)
        .ok_or(RelationFailure::Schedule { level: 0 })?;
    for (level, plan) in built.plans.iter().enumerate() {
        let flips = schedule.flips(d, level);
        let perm = &plan.perms[0];
        if (1..=d).any(|j| (perm.inverse_sign(j) < 0) != flips[j - 1]) {
            return Err(RelationFailure::Schedule { level });
        }
    }
    if let Some(plan) = built.plans.get(1) {
        let entry = relative_entry(plan, 0);
        let expected: Vec<u8> = (1..=d)
            .map(|j| u8::from(schedule == SignSchedule::Face && j < d))
            .collect();
        if entry != expected {
            return Err(RelationFailure::EntryCorner { entry });
        }
    }
    Ok(())
}

/// One cell of the ratio table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableCell {
    Bound(Rational),
    Measured { ratio: Rational, level: u32 },
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub label: &'static str,
    pub cells: Vec<TableCell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub dims: Vec<usize>,
    pub rows: Vec<TableRow>,
}

/// Row kinds in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    FaceContinuousBound,
    Curve(Family),
    DiagonalBound,
}

pub const TABLE_ROWS: [(RowKind, &str); 5] = [
    (
        RowKind::FaceContinuousBound,
        "lower bound (face-continuous)",
    ),
    (RowKind::Curve(Family::HoOrigin), "HO-WF (origin entry)"),
    (RowKind::Curve(Family::HoFace), "HO-WF (face entry)"),
    (RowKind::DiagonalBound, "lower bound (any curve)"),
    (RowKind::Curve(Family::ButzMoore), "Butz-Moore"),
];

/// Builds the table for the given dimensions. `level_for(d)` picks the
/// scanned level, or `None` to leave measured rows empty for that `d`.
pub fn table_report(
    dims: &[usize],
    level_for: impl Fn(usize) -> Option<u32>,
    budget: usize,
) -> Result<Table, AnalysisError> {
    let mut rows = Vec::new();
    for (kind, label) in TABLE_ROWS {
        let mut cells = Vec::with_capacity(dims.len());
        for &d in dims {
            let cell = match kind {
                RowKind::FaceContinuousBound if d == 2 => {
                    TableCell::Bound(Rational::from_integer(PLANAR_FACE_CONTINUOUS_BOUND))
                }
                RowKind::FaceContinuousBound => TableCell::Bound(lower_bound_face_continuous(d)),
                RowKind::DiagonalBound => TableCell::Bound(lower_bound_diagonal(d)),
                RowKind::Curve(Family::HoFace) if d == 2 => TableCell::Absent,
                RowKind::Curve(family) => match level_for(d) {
                    Some(k) => {
                        let report = bcr_series(CurveSpec::new(d, family, k), budget)?;
                        TableCell::Measured {
                            ratio: report.worst_ratio,
                            level: k,
                        }
                    }
                    None => TableCell::Absent,
                },
            };
            cells.push(cell);
        }
        rows.push(TableRow { label, cells });
    }
    Ok(Table {
        dims: dims.to_vec(),
        rows,
    })
}

/// Decimal rendering truncated to `digits` places.
pub fn format_truncated(r: &Rational, digits: u32) -> String {
    let scale = 10u128.pow(digits);
    let scaled = r.numer() * scale / r.denom();
    let int = scaled / scale;
    let frac = scaled % scale;
    if digits == 0 {
        format!("{int}")
    } else {
        format!("{int}.{frac:0width$}", width = digits as usize)
    }
}

pub fn format_exact(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl Table {
    fn cell_text(cell: &TableCell, exact: bool) -> String {
        let render = |r: &Rational| {
            if exact {
                format_exact(r)
            } else {
                format_truncated(r, 2)
            }
        };
        match cell {
            TableCell::Bound(r) => render(r),
            TableCell::Measured { ratio, .. } => render(ratio),
            TableCell::Absent => "-".to_string(),
        }
    }

    pub fn to_tsv(&self, exact: bool) -> String {
        let mut out = String::from("row");
        for d in &self.dims {
            let _ = write!(out, "\td={d}");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(row.label);
            for cell in &row.cells {
                out.push('\t');
                out.push_str(&Self::cell_text(cell, exact));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self, exact: bool) -> String {
        let label_w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
        let texts: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.cells.iter().map(|c| Self::cell_text(c, exact)).collect())
            .collect();
        let col_w = texts
            .iter()
            .flatten()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(5);
        let mut out = format!("{:label_w$}", "");
        for d in &self.dims {
            let _ = write!(out, "  {:>col_w$}", format!("d={d}"));
        }
        out.push('\n');
        for (row, cells) in self.rows.iter().zip(&texts) {
            let _ = write!(out, "{:label_w$}", row.label);
            for c in cells {
                let _ = write!(out, "  {c:>col_w$}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::build_ho_curve;
    use crate::geometry::AnchoredCurve;
    use crate::gray::gray_code;
    use proptest::prelude::*;

    fn vertices(spec: CurveSpec) -> Vec<Vertex> {
        build_curve(spec).unwrap().vertices()
    }

    // Independent oracle: recompute every range from scratch.
    fn brute_worst(vs: &[Vertex]) -> Rational {
        let mut best = Rational::from_integer(1);
        for i in 0..vs.len() {
            for j in i..vs.len() {
                best = best.max(section_bcr(vs, i, j).unwrap());
            }
        }
        best
    }

    #[test]
    fn trivial_sections() {
        let vs = vertices(CurveSpec::new(3, Family::HoOrigin, 2));
        assert_eq!(section_bcr(&vs, 5, 5).unwrap(), Rational::from_integer(1));
        assert_eq!(
            section_bcr(&vs, 0, vs.len() - 1).unwrap(),
            Rational::from_integer(1)
        );
        assert!(section_bcr(&vs, 3, 64).is_err());
        assert!(section_bcr(&vs, 4, 3).is_err());
        let one = worst_case_bcr(&[Vertex(vec![3, 4])]);
        assert_eq!(one.ratio, Rational::from_integer(1));
    }

    #[test]
    fn sweep_matches_brute_force() {
        for (d, k) in [(2, 3), (3, 2), (4, 1)] {
            for f in Family::ALL {
                let vs = vertices(CurveSpec::new(d, f, k));
                let w = worst_case_bcr(&vs);
                assert_eq!(w.ratio, brute_worst(&vs));
                assert_eq!(section_bcr(&vs, w.range.0, w.range.1).unwrap(), w.ratio);
            }
        }
    }

    #[test]
    fn hilbert_series_approaches_twelve_fifths_from_below() {
        let report =
            bcr_series(CurveSpec::new(2, Family::ButzMoore, 5), DEFAULT_SCAN_BUDGET).unwrap();
        let limit = Rational::new(12, 5);
        let gaps: Vec<Rational> = report.series.iter().map(|r| limit - r).collect();
        assert!(gaps.iter().all(|g| *g > Rational::from_integer(0)));
        for w in gaps[2..].windows(2) {
            assert!(w[1] < w[0] / 3);
        }
        assert_eq!(report.series[3], Rational::new(16, 7));
        assert_eq!(report.series[4], Rational::new(64, 27));
    }

    #[test]
    fn hyperorthogonality_of_gray_and_butz() {
        for d in 2..=6 {
            assert!(check_hyperorthogonal(gray_code(d).dirs(), d).is_ok());
        }
        let butz = build_butz_moore(3, 2).unwrap();
        let err = check_hyperorthogonal(&butz.curve().edges(), 3).unwrap_err();
        assert_eq!(err.n, 1);
        assert_eq!(err.axes, 1);
        let hilbert = build_butz_moore(2, 4).unwrap();
        assert!(check_hyperorthogonal(&hilbert.curve().edges(), 2).is_ok());
    }

    #[test]
    fn well_foldedness() {
        for d in 2..=4 {
            for f in Family::ALL {
                assert!(check_wellfolded(&vertices(CurveSpec::new(d, f, 2)), d).is_ok());
            }
            let g = gray_code(d)
                .anchor(Vertex::origin(d))
                .materialize()
                .unwrap();
            assert!(check_wellfolded(&g, d).is_ok());
        }
        // Swapping two cells of block 2 breaks its unit steps.
        let mut vs = vertices(CurveSpec::new(2, Family::ButzMoore, 2));
        vs.swap(9, 10);
        assert_eq!(
            check_wellfolded(&vs, 2),
            Err(FoldViolation { level: 0, block: 2 })
        );
    }

    #[test]
    fn face_bound_values() {
        assert_eq!(lower_bound_face_continuous(3), Rational::new(28, 11));
        assert_eq!(lower_bound_face_continuous(4), Rational::new(60, 19));
        assert_eq!(lower_bound_diagonal(2), Rational::new(3, 1));
        assert_eq!(lower_bound_diagonal(5), Rational::new(31, 8));
        assert_eq!(lower_bound_diagonal(6), Rational::new(63, 16));
        assert!(lower_bound_face_continuous(100) < Rational::from_integer(4));
        assert!(
            Rational::from_integer(4) - lower_bound_face_continuous(100)
                < Rational::new(1, 1u128 << 90)
        );
    }

    #[test]
    fn truncated_formatting() {
        assert_eq!(format_truncated(&Rational::new(28, 11), 2), "2.54");
        assert_eq!(format_truncated(&Rational::new(31, 8), 2), "3.87");
        assert_eq!(format_truncated(&Rational::new(12, 5), 2), "2.40");
        assert_eq!(format_exact(&Rational::new(12, 5)), "12/5");
    }

    #[test]
    fn butz_bound_growth() {
        for d in [4, 6, 8, 10] {
            let ratio = butz_section_bound(d + 2) / butz_section_bound(d);
            assert!(ratio > Rational::from_integer(2) && ratio <= Rational::new(12, 5));
        }
        assert_eq!(butz_section_bound(4), Rational::new(8, 6));
        assert_eq!(butz_section_bound(6), Rational::new(32, 10));
    }

    #[test]
    fn butz_sections_meet_bound() {
        for d in 3..=5 {
            let s = butz_bad_section(d, 2).unwrap();
            assert!(s.meets_bound(), "d={d}: {:?}", s);
        }
    }

    #[test]
    fn unit_windows_and_large_sections() {
        for d in 3..=4 {
            for f in [Family::HoOrigin, Family::HoFace] {
                let vs = build_ho_curve(CurveSpec::new(d, f, 2)).unwrap().vertices();
                assert!(check_unit_windows(&vs, d).is_ok());
                assert!(check_end_sections_span(&vs, d).is_ok());
            }
        }
        // Arbitrary ranges of the same length can miss half of one axis: the
        // last half of child 2, children 3 to 6 and one cell of child 7.
        let vs = vertices(CurveSpec::new(3, Family::HoOrigin, 2));
        assert_eq!(spanning_section_length(64, 3), 37);
        assert_eq!(find_narrow_long_section(&vs, 3), Some(12));
        let (lo, hi) = bounds(&Grid::new(&vs), 12..49);
        assert_eq!(lo[1], 1);
        assert_eq!(hi, vec![3, 3, 3]);
        // A straight line of three edges spans width 3.
        let line = AnchoredCurve::new(Vertex::origin(3), crate::geometry::dirs(&[1, 1, 1]))
            .materialize()
            .unwrap();
        assert!(check_unit_windows(&line, 3).is_err());
    }

    #[test]
    fn relations_hold_on_ho_plans() {
        for d in 3..=6 {
            for f in [Family::HoOrigin, Family::HoFace] {
                let built = build_ho_curve(CurveSpec::new(d, f, 2)).unwrap();
                check_omega_relation(&built.plans[1]).unwrap();
                check_type_pattern(&built.plans[1]).unwrap();
                check_sign_schedule(&built).unwrap();
            }
        }
        assert_eq!(omega(3), vec![2, 3, 1]);
        assert_eq!(omega(5), vec![4, 2, 3, 5, 1]);
    }

    #[test]
    fn table_layout() {
        let t = table_report(&[2, 7], |d| (d == 2).then_some(2), DEFAULT_SCAN_BUDGET).unwrap();
        let tsv = t.to_tsv(true);
        assert!(tsv.contains("127/32"));
        assert!(tsv.lines().count() == 6);
        let last = &t.rows[0].cells[1];
        assert_eq!(
            last,
            &TableCell::Bound(Rational::from_integer(4) - Rational::new(16, 131))
        );
        assert!(matches!(
            table_report(&[3], |_| Some(6), DEFAULT_SCAN_BUDGET),
            Err(AnalysisError::BudgetExceeded { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn ho_series_is_monotone_and_at_most_four(d in 3usize..=4, face in any::<bool>()) {
            let family = if face { Family::HoFace } else { Family::HoOrigin };
            let k = if d == 3 { 3 } else { 2 };
            let report = bcr_series(CurveSpec::new(d, family, k), DEFAULT_SCAN_BUDGET).unwrap();
            prop_assert!(report.series.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(report.worst_ratio <= Rational::from_integer(4));
        }
    }

    proptest! {
        #[test]
        fn section_ratio_matches_direct_box(i in 0usize..64, len in 1usize..64) {
            let vs = vertices(CurveSpec::new(3, Family::HoFace, 2));
            let j = (i + len - 1).min(63);
            let mut vol = 1u128;
            for axis in 0..3 {
                let coords: Vec<i64> = vs[i..=j].iter().map(|v| v.0[axis]).collect();
                let span = coords.iter().max().unwrap() - coords.iter().min().unwrap() + 1;
                vol *= span as u128;
            }
            prop_assert_eq!(section_bcr(&vs, i, j).unwrap(), Rational::new(vol, (j - i + 1) as u128));
        }
    }
}
