//! Exact images of circle sets under compositions of `f_u`.
//!
//! Coordinates are 64-bit fixed point (`x · 2^64`), so translations are
//! exact modular additions and the nested images of a reversed composition
//! are nested bit for bit. Noise values and `v` are representable exactly
//! because they come from 53-bit doubles in `[0, 1)`.

use crate::sets::IntervalUnion;

const ONE: u128 = 1 << 64;
const SCALE: f64 = 18_446_744_073_709_551_616.0;

/// Fixed-point image of a double in `[0, 1]`, truncated toward zero.
pub(crate) fn to_fixed(x: f64) -> u128 {
    if x >= 1.0 {
        ONE
    } else if x <= 0.0 {
        0
    } else {
        ((x * SCALE) as u64) as u128
    }
}

fn to_float(x: u128) -> f64 {
    x as f64 / SCALE
}

/// Sorted, disjoint, non-touching pieces `[a, b)` with `0 ≤ a < b ≤ 2^64`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub(crate) struct FixedArcs {
    pieces: Vec<(u128, u128)>,
}

fn push(out: &mut Vec<(u128, u128)>, a: u128, b: u128) {
    if b <= a {
        return;
    }
    if let Some(last) = out.last_mut() {
        if a <= last.1 {
            last.1 = last.1.max(b);
            return;
        }
    }
    out.push((a, b));
}

/// Merged sweep over the boundaries of two canonical piece lists, keeping
/// the elementary segments selected by `keep(in_a, in_b)`.
fn combine(a: &[(u128, u128)], b: &[(u128, u128)], keep: impl Fn(bool, bool) -> bool) -> Vec<(u128, u128)> {
    let bound = |p: &[(u128, u128)], i: usize| -> Option<u128> {
        (i < 2 * p.len()).then(|| if i.is_multiple_of(2) { p[i / 2].0 } else { p[i / 2].1 })
    };
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut prev: Option<u128> = None;
    loop {
        let t = match (bound(a, ia), bound(b, ib)) {
            (None, None) => break,
            (Some(x), None) => x,
            (None, Some(y)) => y,
            (Some(x), Some(y)) => x.min(y),
        };
        if let Some(p) = prev {
            if keep(ia % 2 == 1, ib % 2 == 1) {
                push(&mut out, p, t);
            }
        }
        if bound(a, ia) == Some(t) {
            ia += 1;
        }
        if bound(b, ib) == Some(t) {
            ib += 1;
        }
        prev = Some(t);
    }
    out
}

impl FixedArcs {
    pub(crate) fn full() -> Self {
        Self {
            pieces: vec![(0, ONE)],
        }
    }

    pub(crate) fn from_union(s: &IntervalUnion) -> Self {
        let mut pieces = Vec::with_capacity(s.pieces().len());
        for &(a, b) in s.pieces() {
            push(&mut pieces, to_fixed(a), to_fixed(b));
        }
        Self { pieces }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.pieces.len()
    }

    fn wraps(&self) -> bool {
        self.pieces.len() >= 2 && self.pieces[0].0 == 0 && self.pieces[self.pieces.len() - 1].1 == ONE
    }

    pub(crate) fn components(&self) -> usize {
        self.pieces.len() - usize::from(self.wraps())
    }

    pub(crate) fn measure(&self) -> f64 {
        to_float(self.pieces.iter().map(|&(a, b)| b - a).sum())
    }

    pub(crate) fn largest_component(&self) -> f64 {
        let n = self.pieces.len();
        let mut best = self.pieces.iter().map(|&(a, b)| b - a).max().unwrap_or(0);
        if self.wraps() {
            best = best.max(self.pieces[0].1 + ONE - self.pieces[n - 1].0);
        }
        to_float(best)
    }

    pub(crate) fn largest_gap(&self) -> f64 {
        let n = self.pieces.len();
        if n == 0 {
            return 1.0;
        }
        let mut gap = ONE - self.pieces[n - 1].1 + self.pieces[0].0;
        for w in self.pieces.windows(2) {
            gap = gap.max(w[1].0 - w[0].1);
        }
        to_float(gap)
    }

    #[cfg(test)]
    pub(crate) fn contains(&self, x: u64) -> bool {
        let x = x as u128;
        let idx = self.pieces.partition_point(|p| p.0 <= x);
        idx > 0 && x < self.pieces[idx - 1].1
    }

    pub(crate) fn translate(&self, t: u64) -> Self {
        let t = t as u128;
        if t == 0 {
            return self.clone();
        }
        let mut lows = Vec::new();
        let mut highs = Vec::with_capacity(self.pieces.len() + 1);
        for &(a, b) in &self.pieces {
            let (a2, b2) = (a + t, b + t);
            if a2 >= ONE {
                lows.push((a2 - ONE, b2 - ONE));
            } else if b2 > ONE {
                lows.insert(0, (0, b2 - ONE));
                highs.push((a2, ONE));
            } else {
                highs.push((a2, b2));
            }
        }
        let mut pieces = Vec::with_capacity(lows.len() + highs.len());
        for (a, b) in lows.into_iter().chain(highs) {
            push(&mut pieces, a, b);
        }
        Self { pieces }
    }

    pub(crate) fn is_subset_of(&self, other: &Self) -> bool {
        combine(&self.pieces, &other.pieces, |a, b| a && !b).is_empty()
    }

    /// `f_w(S) = T_w( T_v(S ∩ A) ∪ (S ∖ A) )`.
    pub(crate) fn image(&self, a: &FixedArcs, v: u64, w: u64) -> Self {
        let inside = Self {
            pieces: combine(&self.pieces, &a.pieces, |s, x| s && x),
        };
        let outside = combine(&self.pieces, &a.pieces, |s, x| s && !x);
        let moved = inside.translate(v);
        let joined = Self {
            pieces: combine(&moved.pieces, &outside, |p, q| p || q),
        };
        joined.translate(w)
    }

    pub(crate) fn to_union(&self) -> IntervalUnion {
        let arcs: Vec<(f64, f64)> = self
            .pieces
            .iter()
            .map(|&(a, b)| (to_float(a), to_float(b)))
            .collect();
        IntervalUnion::from_arcs(&arcs).expect("fixed-point endpoints map into [0, 1]")
    }

    /// Components as `(start, end)` doubles; a component through 0 has
    /// `start > end`.
    pub(crate) fn circular_arcs(&self) -> Vec<(f64, f64)> {
        let n = self.pieces.len();
        let conv = |&(a, b): &(u128, u128)| (to_float(a), to_float(b));
        if !self.wraps() {
            return self.pieces.iter().map(conv).collect();
        }
        let mut out: Vec<(f64, f64)> = self.pieces[1..n - 1].iter().map(conv).collect();
        out.push((to_float(self.pieces[n - 1].0), to_float(self.pieces[0].1)));
        out
    }
}
