//! Statistical functionals over ensembles and two-point traces. The
//! non-Diracness functional `D(m)` measures how far an ensemble is from a
//! point mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rds::{ParticleEnsemble, TwoPointTrace};
use crate::torus::dist_slice;

/// Masses on a uniform bin layout of `T^k`, `bins_per_axis^k` cells,
/// flattened with the last axis varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    dim: usize,
    bins_per_axis: usize,
    masses: Vec<f64>,
}

/// Bin index of one wrapped coordinate.
#[inline]
pub(crate) fn axis_bin(c: f64, bins: usize) -> usize {
    ((c * bins as f64) as usize).min(bins - 1)
}

/// Flattened bin index of a wrapped point.
#[inline]
pub(crate) fn bin_index(z: &[f64], bins: usize) -> usize {
    z.iter().fold(0, |acc, &c| acc * bins + axis_bin(c, bins))
}

fn check_layout(dim: usize, bins: usize) -> Result<usize> {
    if dim == 0 || bins == 0 {
        return Err(Error::InvalidInput("histogram needs dim ≥ 1 and bins ≥ 1".into()));
    }
    bins.checked_pow(dim as u32)
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| Error::InvalidInput(format!("{bins}^{dim} bins is too many")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    Tv,
    Ks,
}

impl Histogram {
    /// Normalize raw non-negative weights. All-zero weights are rejected.
    pub fn from_weights(dim: usize, bins_per_axis: usize, weights: Vec<f64>) -> Result<Self> {
        let n = check_layout(dim, bins_per_axis)?;
        if weights.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {n} bin weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("bin weights must be finite and ≥ 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("histogram has no mass".into()));
        }
        Ok(Self {
            dim,
            bins_per_axis,
            masses: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn from_counts(dim: usize, bins_per_axis: usize, counts: &[u64]) -> Result<Self> {
        Self::from_weights(dim, bins_per_axis, counts.iter().map(|&c| c as f64).collect())
    }

    /// Empirical histogram of wrapped points.
    pub fn from_points<'a>(
        dim: usize,
        bins_per_axis: usize,
        points: impl IntoIterator<Item = &'a [f64]>,
    ) -> Result<Self> {
        let n = check_layout(dim, bins_per_axis)?;
        let mut counts = vec![0u64; n];
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            counts[bin_index(p, bins_per_axis)] += 1;
        }
        Self::from_counts(dim, bins_per_axis, &counts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bins_per_axis(&self) -> usize {
        self.bins_per_axis
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Centre of the flattened bin `i`.
    pub fn bin_center(&self, mut i: usize) -> Vec<f64> {
        let b = self.bins_per_axis;
        let mut c = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            c[axis] = ((i % b) as f64 + 0.5) / b as f64;
            i /= b;
        }
        c
    }

    /// Flattened indices of the `2^k` bins that have the origin as a corner.
    pub fn origin_bins(&self) -> Vec<usize> {
        let b = self.bins_per_axis;
        let mut out = vec![0usize];
        for _ in 0..self.dim {
            let mut next = Vec::with_capacity(out.len() * 2);
            for &i in &out {
                next.push(i * b);
                if b > 1 {
                    next.push(i * b + b - 1);
                }
            }
            out = next;
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn same_layout(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.bins_per_axis != other.bins_per_axis {
            return Err(Error::InvalidInput(format!(
                "histogram layouts differ: {}^{} vs {}^{}",
                self.bins_per_axis, self.dim, other.bins_per_axis, other.dim
            )));
        }
        Ok(())
    }

    pub fn tv(&self, other: &Self) -> Result<f64> {
        self.same_layout(other)?;
        Ok(0.5
            * self
                .masses
                .iter()
                .zip(&other.masses)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Kolmogorov distance of the cumulative masses, circle cut at 0. 1D only.
    pub fn ks(&self, other: &Self) -> Result<f64> {
        self.same_layout(other)?;
        if self.dim != 1 {
            return Err(Error::InvalidInput("KS distance is defined for 1D histograms only".into()));
        }
        let (mut ca, mut cb, mut worst) = (0.0f64, 0.0f64, 0.0f64);
        for (a, b) in self.masses.iter().zip(&other.masses) {
            ca += a;
            cb += b;
            worst = worst.max((ca - cb).abs());
        }
        Ok(worst.min(1.0))
    }
}

pub fn histogram_distance(h1: &Histogram, h2: &Histogram, kind: DistanceKind) -> Result<f64> {
    match kind {
        DistanceKind::Tv => h1.tv(h2),
        DistanceKind::Ks => h1.ks(h2),
    }
}

/// For each particle, the sum of circle distances to all particles
/// (itself included), in input order. `O(M log M)`.
pub fn circular_row_sums(xs: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let mut prefix = vec![0.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] + sorted[i];
    }
    let range_sum = |lo: usize, hi: usize| prefix[hi] - prefix[lo];
    let mut out = vec![0.0; m];
    for (rank, &x) in sorted.iter().enumerate() {
        // split the others by whether the short way round crosses the cut at 0
        let up = sorted.partition_point(|&y| y <= x + 0.5);
        let down = sorted.partition_point(|&y| y < x - 0.5);
        let right_near = (up - rank) as f64;
        let right_far = (m - up) as f64;
        let left_near = (rank - down) as f64;
        let left_far = down as f64;
        let s = (range_sum(rank, up) - right_near * x)
            + (right_far * (1.0 + x) - range_sum(up, m))
            + (left_near * x - range_sum(down, rank))
            + (left_far * (1.0 - x) + range_sum(0, down));
        out[order[rank]] = s.max(0.0);
    }
    out
}

/// `D(m) = ∬ dist(x, y) dm(x) dm(y)` for the uniform-weight empirical
/// measure. 1D uses the sorted prefix-sum path; higher dimensions sum pairs.
pub fn d_functional(ensemble: &ParticleEnsemble) -> f64 {
    let m = ensemble.len();
    if m == 0 {
        return 0.0;
    }
    let mf = m as f64;
    if ensemble.dim() == 1 {
        let xs: Vec<f64> = ensemble.iter().map(|p| p[0]).collect();
        if xs.iter().all(|&x| x == xs[0]) {
            return 0.0;
        }
        circular_row_sums(&xs).iter().sum::<f64>() / (mf * mf)
    } else {
        d_functional_naive(ensemble)
    }
}

/// Quadratic pair sum; the reference for the fast path.
pub fn d_functional_naive(ensemble: &ParticleEnsemble) -> f64 {
    let pts: Vec<&[f64]> = ensemble.iter().collect();
    let m = pts.len();
    if m == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            total += dist_slice(pts[i], pts[j]);
        }
    }
    2.0 * total / (m as f64 * m as f64)
}

/// Fraction of steps `n ∈ {1..N}` with `dist(x_n, y_n) < δ`.
pub fn sync_fraction(trace: &TwoPointTrace, delta: f64, n: usize) -> Result<f64> {
    if n == 0 || n > trace.len() {
        return Err(Error::InvalidInput(format!(
            "N = {n} outside 1..={}",
            trace.len()
        )));
    }
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::InvalidInput("δ must be positive".into()));
    }
    let d = &trace.distances()[1..=n];
    Ok(d.iter().filter(|&&x| x < delta).count() as f64 / n as f64)
}

/// `(1/N) Σ_{n=1..N} dist(x_n, y_n)`.
pub fn cesaro_distance(trace: &TwoPointTrace, n: usize) -> Result<f64> {
    if n == 0 || n > trace.len() {
        return Err(Error::InvalidInput(format!(
            "N = {n} outside 1..={}",
            trace.len()
        )));
    }
    Ok(trace.distances()[1..=n].iter().sum::<f64>() / n as f64)
}
