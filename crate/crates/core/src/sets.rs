//! Measurable sets on the torus that admit exact Lebesgue computations.
//! Arc unions on the circle include the fat-Cantor approximants `M_n`; box
//! unions cover higher dimensions.
//!
//! Arcs are half-open `[a, b)`. An arc through 0 is stored split as
//! `[0, b)` and `[a, 1)`; [`IntervalUnion::components`] counts it once.

use serde::{Deserialize, Serialize};
use smallvec::smallvec;

use crate::error::{check_dim, Error, Result};
use crate::torus::{wrap1, Coords, TorusPoint, TranslationVector};

/// Pieces shorter than this are dropped during canonicalization.
pub const DEGENERATE_LENGTH: f64 = 1e-15;

/// Deepest Cantor approximant we are willing to materialize (`2^n` arcs).
pub const MAX_REALIZED_DEPTH: u32 = 22;

/// Largest `n` for which the removal length `8^-n` stays a normal double.
pub const MAX_CANTOR_DEPTH: u32 = 340;

/// A canonical finite union of half-open circle arcs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    pieces: Vec<(f64, f64)>,
}

/// Accumulates sorted pieces, coalescing touching neighbours.
#[derive(Default)]
struct PieceBuilder {
    pieces: Vec<(f64, f64)>,
}

impl PieceBuilder {
    fn with_capacity(n: usize) -> Self {
        Self {
            pieces: Vec::with_capacity(n),
        }
    }

    #[inline]
    fn push(&mut self, a: f64, b: f64) {
        if b <= a {
            return;
        }
        if let Some(last) = self.pieces.last_mut() {
            if a <= last.1 {
                if b > last.1 {
                    last.1 = b;
                }
                return;
            }
        }
        self.pieces.push((a, b));
    }

    fn finish(mut self) -> IntervalUnion {
        self.pieces.retain(|&(a, b)| b - a >= DEGENERATE_LENGTH);
        IntervalUnion {
            pieces: self.pieces,
        }
    }
}

#[derive(Clone, Copy)]
enum BoolOp {
    Union,
    Intersection,
    Difference,
    Xor,
}

impl BoolOp {
    #[inline]
    fn keep(self, a: bool, b: bool) -> bool {
        match self {
            BoolOp::Union => a || b,
            BoolOp::Intersection => a && b,
            BoolOp::Difference => a && !b,
            BoolOp::Xor => a != b,
        }
    }
}

/// Single merged sweep over the boundary sequences of two canonical unions.
/// Calls `emit` for every elementary segment selected by `op`, in order.
fn sweep(a: &[(f64, f64)], b: &[(f64, f64)], op: BoolOp, mut emit: impl FnMut(f64, f64)) {
    #[inline]
    fn boundary(p: &[(f64, f64)], i: usize) -> f64 {
        if i >= 2 * p.len() {
            f64::INFINITY
        } else if i.is_multiple_of(2) {
            p[i / 2].0
        } else {
            p[i / 2].1
        }
    }
    let (na, nb) = (2 * a.len(), 2 * b.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut prev = f64::NEG_INFINITY;
    while ia < na || ib < nb {
        let ta = boundary(a, ia);
        let tb = boundary(b, ib);
        let t = ta.min(tb);
        if op.keep(ia % 2 == 1, ib % 2 == 1) && t > prev {
            emit(prev, t);
        }
        if ta == t {
            ia += 1;
        }
        if tb == t {
            ib += 1;
        }
        prev = t;
    }
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self {
            pieces: vec![(0.0, 1.0)],
        }
    }

    /// Canonical union of raw arcs `(a, b)` with endpoints in `[0, 1]`.
    /// `a < b` is the arc `[a, b)`; `a > b` wraps through 0; `a == b` is empty.
    pub fn from_arcs(arcs: &[(f64, f64)]) -> Result<Self> {
        for &(a, b) in arcs {
            if !(a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)) {
                return Err(Error::InvalidInput(format!(
                    "arc endpoints must lie in [0, 1], got [{a}, {b})"
                )));
            }
        }
        Ok(canonicalize(arcs))
    }

    /// Canonical arc `[a, a + len)` on the circle, `len ∈ [0, 1]`.
    pub fn arc(start: f64, len: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&len) || !start.is_finite() {
            return Err(Error::InvalidInput(format!("bad arc start {start} length {len}")));
        }
        if len >= 1.0 {
            return Ok(Self::full());
        }
        let a = wrap1(start);
        let b = a + len;
        if b <= 1.0 {
            Ok(canonicalize(&[(a, b)]))
        } else {
            Ok(canonicalize(&[(a, b - 1.0)]))
        }
    }

    /// Sorted, disjoint, non-touching pieces `[a, b)` with `0 ≤ a < b ≤ 1`.
    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|&(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.pieces.partition_point(|p| p.0 <= x);
        idx > 0 && x < self.pieces[idx - 1].1
    }

    /// `self + t` on the circle.
    pub fn translate(&self, t: f64) -> Self {
        let t = wrap1(t);
        if t == 0.0 || self.pieces.is_empty() {
            return self.clone();
        }
        let n = self.pieces.len();
        // pieces staying below 1 keep their order; the ones carried past 1
        // (and the low half of a split piece) move to the front
        let mut lows = Vec::with_capacity(4);
        let mut highs = Vec::with_capacity(n + 1);
        for &(a, b) in &self.pieces {
            let (a2, b2) = (a + t, b + t);
            if a2 >= 1.0 {
                lows.push((a2 - 1.0, b2 - 1.0));
            } else if b2 > 1.0 {
                lows.insert(0, (0.0, b2 - 1.0));
                highs.push((a2, 1.0));
            } else {
                highs.push((a2, b2));
            }
        }
        let mut out = PieceBuilder::with_capacity(n + 1);
        for (a, b) in lows.into_iter().chain(highs) {
            out.push(a, b);
        }
        out.finish()
    }

    fn combine(&self, other: &Self, op: BoolOp) -> Self {
        let mut out = PieceBuilder::with_capacity(self.pieces.len() + other.pieces.len());
        sweep(&self.pieces, &other.pieces, op, |a, b| out.push(a, b));
        out.finish()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, BoolOp::Union)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.combine(other, BoolOp::Intersection)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.combine(other, BoolOp::Difference)
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        self.combine(other, BoolOp::Xor)
    }

    fn sweep_measure(&self, other: &Self, op: BoolOp) -> f64 {
        let mut total = 0.0;
        sweep(&self.pieces, &other.pieces, op, |a, b| total += b - a);
        total
    }

    /// `Leb(self Δ other)`, without materializing the set.
    pub fn symm_diff_measure(&self, other: &Self) -> f64 {
        self.sweep_measure(other, BoolOp::Xor)
    }

    pub fn intersection_measure(&self, other: &Self) -> f64 {
        self.sweep_measure(other, BoolOp::Intersection)
    }

    /// Exact point-set inclusion of the stored pieces.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        let mut escapes = false;
        sweep(&self.pieces, &other.pieces, BoolOp::Difference, |_, _| escapes = true);
        !escapes
    }

    fn wraps(&self) -> bool {
        self.pieces.len() >= 2
            && self.pieces[0].0 == 0.0
            && self.pieces[self.pieces.len() - 1].1 == 1.0
    }

    /// Number of connected components on the circle.
    pub fn components(&self) -> usize {
        self.pieces.len() - usize::from(self.wraps())
    }

    /// Components as circle arcs; a component through 0 appears as `(a, b)`
    /// with `a > b`.
    pub fn circular_arcs(&self) -> Vec<(f64, f64)> {
        if !self.wraps() {
            return self.pieces.clone();
        }
        let n = self.pieces.len();
        let mut out: Vec<(f64, f64)> = self.pieces[1..n - 1].to_vec();
        out.push((self.pieces[n - 1].0, self.pieces[0].1));
        out
    }

    pub fn largest_component(&self) -> f64 {
        self.circular_arcs()
            .iter()
            .map(|&(a, b)| if a < b { b - a } else { 1.0 - a + b })
            .fold(0.0, f64::max)
    }

    /// Longest arc of the complement.
    pub fn largest_gap(&self) -> f64 {
        let n = self.pieces.len();
        if n == 0 {
            return 1.0;
        }
        let mut gap = 1.0 - self.pieces[n - 1].1 + self.pieces[0].0;
        for w in self.pieces.windows(2) {
            gap = gap.max(w[1].0 - w[0].1);
        }
        gap
    }
}

/// Sort, merge and drop degenerate pieces. Endpoints must lie in `[0, 1]`.
pub fn canonicalize(raw: &[(f64, f64)]) -> IntervalUnion {
    let mut split: Vec<(f64, f64)> = Vec::with_capacity(raw.len() + 1);
    for &(a, b) in raw {
        if a < b {
            split.push((a, b));
        } else if a > b {
            split.push((a, 1.0));
            split.push((0.0, b));
        }
    }
    split.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out = PieceBuilder::with_capacity(split.len());
    for (a, b) in split {
        out.push(a, b);
    }
    out.finish()
}

/// An axis-aligned box of `T^k`, a product of half-open non-wrapping pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusBox {
    pub lo: Coords,
    pub hi: Coords,
}

impl TorusBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    #[inline]
    fn contains(&self, x: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(x)
            .all(|((&a, &b), &c)| a <= c && c < b)
    }
}

/// A finite union of pairwise-disjoint torus boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxUnion {
    dim: usize,
    boxes: Vec<TorusBox>,
}

/// Per-axis sorted cut coordinates of the boxes of all `sets`, including 0 and 1.
fn axis_cuts(dim: usize, sets: &[&BoxUnion]) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| {
            let mut c = vec![0.0, 1.0];
            for s in sets {
                for b in &s.boxes {
                    c.push(b.lo[i]);
                    c.push(b.hi[i]);
                }
            }
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect()
}

/// Visit every elementary cell of the product grid spanned by `cuts`,
/// with the last axis varying fastest.
fn for_each_cell(cuts: &[Vec<f64>], mut visit: impl FnMut(&[usize], &[f64], f64)) {
    let dim = cuts.len();
    let counts: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    if counts.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dim];
    let mut mid = vec![0.0; dim];
    loop {
        let mut vol = 1.0;
        for i in 0..dim {
            let (a, b) = (cuts[i][idx[i]], cuts[i][idx[i] + 1]);
            mid[i] = 0.5 * (a + b);
            vol *= b - a;
        }
        visit(&idx, &mid, vol);
        let mut axis = dim;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

impl BoxUnion {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            boxes: Vec::new(),
        }
    }

    /// Build from raw boxes given as per-axis arcs `(a, b)` with endpoints in
    /// `[0, 1]`; `a > b` wraps. Overlaps are resolved into disjoint boxes.
    pub fn from_raw(dim: usize, raw: &[Vec<(f64, f64)>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("box dimension must be at least 1".into()));
        }
        let mut pieces = Vec::new();
        for arcs in raw {
            check_dim(dim, arcs.len())?;
            let factors = arcs
                .iter()
                .map(|&(a, b)| IntervalUnion::from_arcs(&[(a, b)]))
                .collect::<Result<Vec<_>>>()?;
            pieces.extend(product_boxes(&factors));
        }
        Ok(Self::disjoint_cover(dim, pieces))
    }

    /// Decompose possibly-overlapping boxes along their shared coordinate cuts.
    fn disjoint_cover(dim: usize, boxes: Vec<TorusBox>) -> Self {
        let raw = BoxUnion { dim, boxes };
        let cuts = axis_cuts(dim, &[&raw]);
        let mut out: Vec<TorusBox> = Vec::new();
        let mut last_idx: Option<Vec<usize>> = None;
        for_each_cell(&cuts, |idx, mid, _| {
            if !raw.boxes.iter().any(|b| b.contains(mid)) {
                return;
            }
            // extend the previous box when only the last axis advanced by one
            let extend = match (&last_idx, out.last()) {
                (Some(prev), Some(_)) => {
                    prev[..dim - 1] == idx[..dim - 1] && prev[dim - 1] + 1 == idx[dim - 1]
                }
                _ => false,
            };
            if extend {
                let b = out.last_mut().unwrap();
                b.hi[dim - 1] = cuts[dim - 1][idx[dim - 1] + 1];
            } else {
                out.push(TorusBox {
                    lo: (0..dim).map(|i| cuts[i][idx[i]]).collect(),
                    hi: (0..dim).map(|i| cuts[i][idx[i] + 1]).collect(),
                });
            }
            last_idx = Some(idx.to_vec());
        });
        out.retain(|b| b.lo.iter().zip(&b.hi).all(|(a, c)| c - a >= DEGENERATE_LENGTH));
        BoxUnion { dim, boxes: out }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[TorusBox] {
        &self.boxes
    }

    pub fn measure(&self) -> f64 {
        self.boxes.iter().map(TorusBox::volume).sum()
    }

    #[inline]
    pub(crate) fn contains_slice(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    pub fn contains(&self, p: &TorusPoint) -> Result<bool> {
        check_dim(self.dim, p.dim())?;
        Ok(self.contains_slice(p.coords()))
    }

    /// Shift every box by `u`; boxes crossing 1 split, disjointness is kept.
    pub fn translate(&self, u: &[f64]) -> Self {
        let mut out = Vec::with_capacity(self.boxes.len() * 2);
        for b in &self.boxes {
            let factors: Vec<IntervalUnion> = (0..self.dim)
                .map(|i| IntervalUnion {
                    pieces: vec![(b.lo[i], b.hi[i])],
                }
                .translate(u[i]))
                .collect();
            out.extend(product_boxes(&factors));
        }
        BoxUnion {
            dim: self.dim,
            boxes: out,
        }
    }

    fn cell_measure(&self, other: &Self, keep: impl Fn(bool, bool) -> bool) -> f64 {
        let cuts = axis_cuts(self.dim, &[self, other]);
        let mut total = 0.0;
        for_each_cell(&cuts, |_, mid, vol| {
            if keep(self.contains_slice(mid), other.contains_slice(mid)) {
                total += vol;
            }
        });
        total
    }

    pub fn symm_diff_measure(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        Ok(self.cell_measure(other, |a, b| a != b))
    }

    pub fn intersection_measure(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        Ok(self.cell_measure(other, |a, b| a && b))
    }

    /// Number of box faces; bounds the Lipschitz constant of φ.
    pub fn boundary_count(&self) -> usize {
        2 * self.dim * self.boxes.len()
    }
}

fn product_boxes(factors: &[IntervalUnion]) -> Vec<TorusBox> {
    let mut acc: Vec<TorusBox> = vec![TorusBox {
        lo: smallvec![],
        hi: smallvec![],
    }];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.pieces.len());
        for b in &acc {
            for &(a, c) in &f.pieces {
                let mut nb = b.clone();
                nb.lo.push(a);
                nb.hi.push(c);
                next.push(nb);
            }
        }
        acc = next;
    }
    acc
}

/// Cartesian product of one-dimensional factors as a disjoint box union.
pub fn product_set(factors: &[IntervalUnion]) -> Result<BoxUnion> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("product needs at least one factor".into()));
    }
    Ok(BoxUnion {
        dim: factors.len(),
        boxes: product_boxes(factors),
    })
}

/// Depth of the fat Cantor approximant `M_n`; step `j` removes the centred
/// interval of length `8^-j` from each of the `2^(j-1)` intervals of `M_(j-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub depth: u32,
}

impl CantorSpec {
    pub fn new(depth: u32) -> Self {
        Self { depth }
    }

    /// Length of each interval removed at step `j`.
    pub fn removal_length(j: u32) -> f64 {
        2f64.powi(-3 * j as i32)
    }

    /// `Leb(M_n) = 5/6 + 4^-n / 6`.
    pub fn measure(&self) -> f64 {
        5.0 / 6.0 + 4f64.powi(-(self.depth as i32)) / 6.0
    }
}

/// Materialize `M_n` as `2^n` arcs.
pub fn realize_cantor(spec: CantorSpec) -> Result<IntervalUnion> {
    if spec.depth > MAX_CANTOR_DEPTH {
        return Err(Error::UnrepresentableDepth(spec.depth));
    }
    if spec.depth > MAX_REALIZED_DEPTH {
        return Err(Error::InvalidInput(format!(
            "cantor depth {} exceeds the realizable maximum {MAX_REALIZED_DEPTH}",
            spec.depth
        )));
    }
    let mut pieces = vec![(0.0, 1.0)];
    for j in 1..=spec.depth {
        let half = 0.5 * CantorSpec::removal_length(j);
        let mut next = Vec::with_capacity(pieces.len() * 2);
        for &(a, b) in &pieces {
            let c = 0.5 * (a + b);
            next.push((a, c - half));
            next.push((c + half, b));
        }
        pieces = next;
    }
    Ok(IntervalUnion { pieces })
}

/// Membership in `M_max_depth` by descending the binary interval tree.
/// Depths beyond [`MAX_CANTOR_DEPTH`] are clamped.
pub fn cantor_contains(x: f64, max_depth: u32) -> bool {
    if !(0.0..1.0).contains(&x) {
        return false;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for j in 1..=max_depth.min(MAX_CANTOR_DEPTH) {
        let c = 0.5 * (lo + hi);
        let half = 0.5 * CantorSpec::removal_length(j);
        if x < c - half {
            hi = c - half;
        } else if x >= c + half {
            lo = c + half;
        } else {
            return false;
        }
    }
    true
}

/// A set on which φ can be computed exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "repr", rename_all = "lowercase")]
pub enum TorusSet {
    Intervals(IntervalUnion),
    Boxes(BoxUnion),
}

impl From<IntervalUnion> for TorusSet {
    fn from(s: IntervalUnion) -> Self {
        TorusSet::Intervals(s)
    }
}

impl From<BoxUnion> for TorusSet {
    fn from(s: BoxUnion) -> Self {
        TorusSet::Boxes(s)
    }
}

impl TorusSet {
    pub fn dim(&self) -> usize {
        match self {
            TorusSet::Intervals(_) => 1,
            TorusSet::Boxes(b) => b.dim,
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            TorusSet::Intervals(s) => s.measure(),
            TorusSet::Boxes(b) => b.measure(),
        }
    }

    #[inline]
    pub(crate) fn contains_slice(&self, x: &[f64]) -> bool {
        match self {
            TorusSet::Intervals(s) => s.contains(x[0]),
            TorusSet::Boxes(b) => b.contains_slice(x),
        }
    }

    pub fn contains(&self, p: &TorusPoint) -> Result<bool> {
        check_dim(self.dim(), p.dim())?;
        Ok(self.contains_slice(p.coords()))
    }

    pub fn translate(&self, u: &TranslationVector) -> Result<Self> {
        check_dim(self.dim(), u.dim())?;
        Ok(match self {
            TorusSet::Intervals(s) => TorusSet::Intervals(s.translate(u.coords()[0])),
            TorusSet::Boxes(b) => TorusSet::Boxes(b.translate(u.coords())),
        })
    }

    pub(crate) fn as_boxes(&self) -> BoxUnion {
        match self {
            TorusSet::Intervals(s) => BoxUnion {
                dim: 1,
                boxes: product_boxes(std::slice::from_ref(s)),
            },
            TorusSet::Boxes(b) => b.clone(),
        }
    }

    pub fn symm_diff_measure(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        match (self, other) {
            (TorusSet::Intervals(a), TorusSet::Intervals(b)) => Ok(a.symm_diff_measure(b)),
            _ => self.as_boxes().symm_diff_measure(&other.as_boxes()),
        }
    }

    pub fn intersection_measure(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        match (self, other) {
            (TorusSet::Intervals(a), TorusSet::Intervals(b)) => Ok(a.intersection_measure(b)),
            _ => self.as_boxes().intersection_measure(&other.as_boxes()),
        }
    }

    /// Count of boundary points (1D) or faces (kD).
    pub fn boundary_count(&self) -> usize {
        match self {
            TorusSet::Intervals(s) => 2 * s.components(),
            TorusSet::Boxes(b) => b.boundary_count(),
        }
    }
}

pub fn measure(s: &TorusSet) -> f64 {
    s.measure()
}

pub fn contains(s: &TorusSet, p: &TorusPoint) -> Result<bool> {
    s.contains(p)
}

pub fn translate_set(s: &TorusSet, u: &TranslationVector) -> Result<TorusSet> {
    s.translate(u)
}

pub fn symm_diff_measure(s1: &TorusSet, s2: &TorusSet) -> Result<f64> {
    s1.symm_diff_measure(s2)
}

/// JSON set descriptor, tagged by `kind`.
///
/// ```json
/// {"kind": "intervals", "arcs": [[0.0, 0.3]]}
/// {"kind": "boxes", "dimension": 2, "boxes": [[[0.0, 0.5], [0.0, 0.5]]]}
/// {"kind": "cantor", "depth": 8}
/// {"kind": "product", "factors": [{"kind": "intervals", "arcs": [[0.0, 0.5]]}, ...]}
/// ```
///
/// Arcs are `[a, b]` meaning `[a, b)`; `a > b` wraps through 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetDescriptor {
    Intervals { arcs: Vec<[f64; 2]> },
    Boxes { dimension: usize, boxes: Vec<Vec<[f64; 2]>> },
    Cantor { depth: u32 },
    Product { factors: Vec<SetDescriptor> },
}

impl SetDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            SetDescriptor::Intervals { .. } | SetDescriptor::Cantor { .. } => 1,
            SetDescriptor::Boxes { dimension, .. } => *dimension,
            SetDescriptor::Product { factors } => factors.len(),
        }
    }

    pub fn build(&self) -> Result<TorusSet> {
        match self {
            SetDescriptor::Intervals { arcs } => {
                let raw: Vec<(f64, f64)> = arcs.iter().map(|a| (a[0], a[1])).collect();
                Ok(IntervalUnion::from_arcs(&raw)?.into())
            }
            SetDescriptor::Boxes { dimension, boxes } => {
                let raw: Vec<Vec<(f64, f64)>> = boxes
                    .iter()
                    .map(|b| b.iter().map(|a| (a[0], a[1])).collect())
                    .collect();
                Ok(BoxUnion::from_raw(*dimension, &raw)?.into())
            }
            SetDescriptor::Cantor { depth } => Ok(realize_cantor(CantorSpec::new(*depth))?.into()),
            SetDescriptor::Product { factors } => {
                let factors = factors
                    .iter()
                    .map(|f| match f.build()? {
                        TorusSet::Intervals(s) => Ok(s),
                        TorusSet::Boxes(_) => Err(Error::InvalidInput(
                            "product factors must be one-dimensional".into(),
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(product_set(&factors)?.into())
            }
        }
    }

    /// Scale window on which an approximant represents its limit set. For
    /// `M_n` that is `[8^-(n-1), 8^-2]`; below `8^-n` the approximant is a
    /// plain finite union of arcs.
    pub fn fit_window(&self) -> Option<(f64, f64)> {
        match self {
            SetDescriptor::Cantor { depth } if *depth >= 4 => Some((
                CantorSpec::removal_length(depth - 1),
                CantorSpec::removal_length(2),
            )),
            _ => None,
        }
    }
}
