//! The difference chain `z ↦ z ± v`, each with probability `φ(z)/2`.
//!
//! It is also built as a fair `±1` walk slowed by geometric holding times.
//! Its predicted stationary density is `(1/Z) dz/φ(z)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{bin_index, Histogram};
use crate::displacement::{bin_tail, phi_slice, DisplacementProfile, PhiSource};
use crate::error::{check_dim, Error, Result};
use crate::rds::{lattice_point, JumpBin, NoiseSampler, NoiseStream};
use crate::sets::TorusSet;
use crate::stats::{two_sample_chi_square, ChiSquareResult};
use crate::torus::{TorusPoint, TranslationVector};

/// Largest horizon accepted by the law-equivalence test.
pub const MAX_LAW_TEST_HORIZON: usize = 60;

/// Fewest trials accepted by the law-equivalence test.
pub const MIN_LAW_TEST_TRIALS: usize = 10_000;

/// Source of jump probabilities `φ(z)`.
pub trait PhiProvider: Sync {
    fn dim(&self) -> usize;
    fn phi(&self, z: &[f64]) -> f64;
}

impl PhiProvider for TorusSet {
    fn dim(&self) -> usize {
        TorusSet::dim(self)
    }

    fn phi(&self, z: &[f64]) -> f64 {
        phi_slice(self, z)
    }
}

impl PhiProvider for DisplacementProfile {
    fn dim(&self) -> usize {
        self.dimension
    }

    fn phi(&self, z: &[f64]) -> f64 {
        match self.source() {
            PhiSource::Exact(s) => phi_slice(s, z),
            PhiSource::MonteCarlo { .. } => self.interpolate(z),
        }
    }
}

/// A closure as a [`PhiProvider`].
pub struct FnPhi<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> PhiProvider for FnPhi<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn phi(&self, z: &[f64]) -> f64 {
        (self.f)(z)
    }
}

/// Holding-time law of the slowed walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Slowdown {
    /// Geometric with success probability `φ`, mean `1/φ`.
    Exact,
    /// Success probability `φ/2`, mean `2/φ`; a deliberately wrong control.
    Corrupted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MoveCounts {
    pub plus: u64,
    pub minus: u64,
    pub hold: u64,
}

/// A run of the difference chain with `z_n = z_0 + m_n v`.
#[derive(Clone, Debug, Serialize)]
pub struct ChainOrbit {
    pub z0: TorusPoint,
    pub len: usize,
    /// `m_0..=m_N`, when recorded.
    pub lattice: Option<Vec<i32>>,
    pub final_index: i64,
    pub moves: MoveCounts,
    pub bins: usize,
    /// Visits of `z_1..z_N` per bin.
    pub counts: Vec<u64>,
    /// Jump counts per bin of the state the move starts from.
    pub jumps: Vec<JumpBin>,
}

impl ChainOrbit {
    /// Occupation measure of `z_1..z_N`.
    pub fn occupation(&self) -> Result<Histogram> {
        Histogram::from_counts(self.z0.dim(), self.bins, &self.counts)
    }
}

/// The slowed walk `z̃_j = z_0 + c_j v`. `holding[j]` is the time spent at
/// site `j`, so `Z_n = z̃_{J(n)}` with `J(n) = max{ j : h_0 + ⋯ + h_{j-1} ≤ n }`.
#[derive(Clone, Debug, Serialize)]
pub struct WalkRealization {
    /// `c_0..=c_J`.
    pub positions: Vec<i32>,
    /// `h_0..=h_J`, untruncated; `u64::MAX` when `φ = 0` at the site.
    pub holding: Vec<u64>,
    /// `J(N)`.
    pub jumps_by_horizon: usize,
    /// The walk reached a site other than `z = 0` where `φ` vanishes.
    pub stalled: bool,
}

/// Per-site cache of `φ` and bin index along the lattice.
struct SiteCache<'a, P: ?Sized> {
    phi: &'a P,
    z0: &'a TorusPoint,
    v: &'a TranslationVector,
    bins: usize,
    pos: Vec<(f64, usize)>,
    neg: Vec<(f64, usize)>,
}

impl<'a, P: PhiProvider + ?Sized> SiteCache<'a, P> {
    fn new(phi: &'a P, z0: &'a TorusPoint, v: &'a TranslationVector, bins: usize) -> Self {
        Self {
            phi,
            z0,
            v,
            bins,
            pos: Vec::new(),
            neg: Vec::new(),
        }
    }

    fn site(&mut self, m: i64) -> Result<(f64, usize)> {
        let (vec, idx) = if m >= 0 {
            (&mut self.pos, m as usize)
        } else {
            (&mut self.neg, (-m - 1) as usize)
        };
        if idx >= vec.len() {
            vec.resize(idx + 1, (f64::NAN, 0));
        }
        if vec[idx].0.is_nan() {
            let z = lattice_point(self.z0, self.v, m);
            let p = self.phi.phi(&z);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
            vec[idx] = (p, if self.bins > 0 { bin_index(&z, self.bins) } else { 0 });
        }
        Ok(vec[idx])
    }
}

/// One inverse-transform move: `+1` on `[0, φ/2)`, `−1` on `[φ/2, φ)`.
#[inline]
fn chain_move(phi: f64, u: f64) -> i64 {
    if u < 0.5 * phi {
        1
    } else if u < phi {
        -1
    } else {
        0
    }
}

/// Geometric variate on `{1, 2, …}` with success probability `p`, by
/// inversion: `1 + ⌊ln(1 − s)/ln(1 − p)⌋`. `None` when `p = 0`.
#[inline]
pub fn geometric_holding(p: f64, s: f64) -> Option<u64> {
    if p <= 0.0 {
        return None;
    }
    if p >= 1.0 {
        return Some(1);
    }
    let t = 1.0 + ((-s).ln_1p() / (-p).ln_1p()).floor();
    Some(if t >= 9.0e18 { u64::MAX } else { t as u64 })
}

/// The difference chain for jump vector `v`, with occupation histograms on
/// `bins^k` cells.
pub struct DiffChain<P> {
    phi: P,
    v: TranslationVector,
    bins: usize,
}

impl<P: PhiProvider> DiffChain<P> {
    pub fn new(phi: P, v: TranslationVector, bins: usize) -> Result<Self> {
        check_dim(phi.dim(), v.dim())?;
        if bins == 0 {
            return Err(Error::InvalidInput("histograms need at least one bin".into()));
        }
        Ok(Self { phi, v, bins })
    }

    pub fn v(&self) -> &TranslationVector {
        &self.v
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    fn cells(&self) -> usize {
        self.bins.pow(self.v.dim() as u32)
    }

    fn check(&self, z0: &TorusPoint, n: usize) -> Result<()> {
        check_dim(self.v.dim(), z0.dim())?;
        if n == 0 {
            return Err(Error::InvalidInput("horizon N must be at least 1".into()));
        }
        if n > i32::MAX as usize {
            return Err(Error::InvalidInput(format!("horizon {n} exceeds the lattice index range")));
        }
        Ok(())
    }

    /// Run `N` steps, recording the lattice path.
    pub fn chain_orbit(&self, z0: &TorusPoint, n: usize, noise: &NoiseStream) -> Result<ChainOrbit> {
        self.run_chain(z0, n, noise, true)
    }

    /// Like [`Self::chain_orbit`] but keeps only counters and histograms.
    pub fn chain_occupation(&self, z0: &TorusPoint, n: usize, noise: &NoiseStream) -> Result<ChainOrbit> {
        self.run_chain(z0, n, noise, false)
    }

    fn run_chain(&self, z0: &TorusPoint, n: usize, noise: &NoiseStream, record: bool) -> Result<ChainOrbit> {
        self.check(z0, n)?;
        let mut cache = SiteCache::new(&self.phi, z0, &self.v, self.bins);
        let mut sampler = NoiseSampler::new(noise, 1);
        let mut counts = vec![0u64; self.cells()];
        let mut jumps = vec![JumpBin::default(); self.cells()];
        let mut moves = MoveCounts::default();
        let mut path = record.then(|| {
            let mut p = Vec::with_capacity(n + 1);
            p.push(0i32);
            p
        });
        let mut m = 0i64;
        let (mut p, mut bin) = cache.site(0)?;
        for _ in 0..n {
            let step = chain_move(p, sampler.uniform());
            let j = &mut jumps[bin];
            j.visits += 1;
            j.expected += 0.5 * p;
            j.variance += 0.5 * p * (1.0 - 0.5 * p);
            match step {
                1 => {
                    moves.plus += 1;
                    j.plus += 1;
                }
                -1 => {
                    moves.minus += 1;
                    j.minus += 1;
                }
                _ => moves.hold += 1,
            }
            if step != 0 {
                m += step;
                (p, bin) = cache.site(m)?;
            }
            counts[bin] += 1;
            if let Some(path) = path.as_mut() {
                path.push(m as i32);
            }
        }
        Ok(ChainOrbit {
            z0: z0.clone(),
            len: n,
            lattice: path,
            final_index: m,
            moves,
            bins: self.bins,
            counts,
            jumps,
        })
    }

    /// The slowed construction up to time `N`: the path `Z_0..=Z_N` and its
    /// occupation, plus the walk and holding times that produced it.
    pub fn slowed_orbit(
        &self,
        z0: &TorusPoint,
        n: usize,
        noise: &NoiseStream,
        slowdown: Slowdown,
    ) -> Result<(ChainOrbit, WalkRealization)> {
        self.check(z0, n)?;
        let mut cache = SiteCache::new(&self.phi, z0, &self.v, self.bins);
        let mut sampler = NoiseSampler::new(noise, 1);
        let mut counts = vec![0u64; self.cells()];
        let mut path: Vec<i32> = Vec::with_capacity(n + 1);
        let mut walk = WalkRealization {
            positions: vec![0],
            holding: Vec::new(),
            jumps_by_horizon: 0,
            stalled: false,
        };
        let mut moves = MoveCounts::default();
        let mut c = 0i64;
        let mut elapsed = 0u64;
        let horizon = n as u64 + 1;
        loop {
            let (p, bin) = cache.site(c)?;
            let q = match slowdown {
                Slowdown::Exact => p,
                Slowdown::Corrupted => 0.5 * p,
            };
            let h = geometric_holding(q, sampler.uniform());
            walk.holding.push(h.unwrap_or(u64::MAX));
            if h.is_none() && lattice_point(z0, &self.v, c).iter().any(|&x| x != 0.0) {
                walk.stalled = true;
            }
            let remaining = horizon - elapsed;
            let spent = h.unwrap_or(u64::MAX).min(remaining);
            let first = usize::from(elapsed == 0);
            counts[bin] += spent - first as u64;
            path.extend(std::iter::repeat_n(c as i32, spent as usize));
            elapsed += spent;
            if elapsed >= horizon {
                break;
            }
            let dir = if sampler.uniform() < 0.5 { 1 } else { -1 };
            if dir == 1 {
                moves.plus += 1;
            } else {
                moves.minus += 1;
            }
            c += dir;
            walk.positions.push(c as i32);
        }
        walk.jumps_by_horizon = walk.positions.len() - 1;
        moves.hold = n as u64 - moves.plus - moves.minus;
        let orbit = ChainOrbit {
            z0: z0.clone(),
            len: n,
            final_index: c,
            lattice: Some(path),
            moves,
            bins: self.bins,
            counts,
            jumps: Vec::new(),
        };
        Ok((orbit, walk))
    }

    /// Chi-square comparison of the law of `m_n` under the direct chain and
    /// under the slowed construction, over `trials` independent runs each.
    pub fn law_equivalence_test(
        &self,
        z0: &TorusPoint,
        n: usize,
        trials: usize,
        noise: &NoiseStream,
        slowdown: Slowdown,
    ) -> Result<ChiSquareResult> {
        check_dim(self.v.dim(), z0.dim())?;
        if n > MAX_LAW_TEST_HORIZON {
            return Err(Error::InvalidInput(format!(
                "law test horizon {n} exceeds {MAX_LAW_TEST_HORIZON}"
            )));
        }
        if trials < MIN_LAW_TEST_TRIALS {
            return Err(Error::Underpowered(format!(
                "{trials} trials, need at least {MIN_LAW_TEST_TRIALS}"
            )));
        }
        let table = self.site_table(z0, n as i64)?;
        let phi_at = |m: i64| table[(m + n as i64) as usize];
        let direct: Vec<i64> = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut s = NoiseSampler::new(&noise.child(2 * i), 1);
                let mut m = 0i64;
                for _ in 0..n {
                    m += chain_move(phi_at(m), s.uniform());
                }
                m
            })
            .collect();
        let slowed: Vec<i64> = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut s = NoiseSampler::new(&noise.child(2 * i + 1), 1);
                let mut c = 0i64;
                let mut elapsed = 0u64;
                loop {
                    let p = phi_at(c);
                    let q = if slowdown == Slowdown::Exact { p } else { 0.5 * p };
                    let h = geometric_holding(q, s.uniform()).unwrap_or(u64::MAX);
                    if h > n as u64 - elapsed {
                        return c;
                    }
                    elapsed += h;
                    c += if s.uniform() < 0.5 { 1 } else { -1 };
                }
            })
            .collect();
        two_sample_chi_square(&direct, &slowed)
    }

    /// `φ(z_0 + m v)` for `m = −r..=r`.
    fn site_table(&self, z0: &TorusPoint, r: i64) -> Result<Vec<f64>> {
        let mut cache = SiteCache::new(&self.phi, z0, &self.v, 0);
        (-r..=r).map(|m| cache.site(m).map(|s| s.0)).collect()
    }
}

/// Predicted stationary occupation `∝ ∫_bin dz/φ(z)` on `bins^k` cells. The
/// bins touching 0 share the power-law integral over the small ball.
pub fn predicted_density(profile: &DisplacementProfile, bins: usize) -> Result<Histogram> {
    let (radius, tail) = bin_tail(profile, bins)?;
    let k = profile.dimension;
    let cells = bins
        .checked_pow(k as u32)
        .ok_or_else(|| Error::InvalidInput(format!("{bins}^{k} bins")))?;
    let weights: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|i| profile.bin_inverse_mass(bins, i, radius, tail))
        .collect();
    Histogram::from_weights(k, bins, weights)
}

/// Total variation between the orbit's occupation and a prediction.
pub fn occupation_compare(orbit: &ChainOrbit, predicted: &Histogram) -> Result<f64> {
    orbit.occupation()?.tv(predicted)
}

/// Total variation after dropping the bins touching 0 from both sides and
/// renormalizing, for configurations where the mass near 0 has no limit.
pub fn occupation_compare_off_origin(empirical: &Histogram, predicted: &Histogram) -> Result<f64> {
    if empirical.dim() != predicted.dim() || empirical.bins_per_axis() != predicted.bins_per_axis() {
        return Err(Error::InvalidInput("histogram layouts differ".into()));
    }
    let origin = empirical.origin_bins();
    let strip = |h: &Histogram| -> Vec<f64> {
        let mut w = h.masses().to_vec();
        for &i in &origin {
            w[i] = 0.0;
        }
        w
    };
    let a = Histogram::from_weights(empirical.dim(), empirical.bins_per_axis(), strip(empirical))?;
    let b = Histogram::from_weights(predicted.dim(), predicted.bins_per_axis(), strip(predicted))?;
    a.tv(&b)
}

/// CSV rows `bin,center_0..,empirical,predicted`.
pub fn histogram_csv(empirical: &Histogram, predicted: &Histogram) -> Result<String> {
    if empirical.dim() != predicted.dim() || empirical.bins_per_axis() != predicted.bins_per_axis() {
        return Err(Error::InvalidInput("histogram layouts differ".into()));
    }
    let k = empirical.dim();
    let mut out = String::from("bin,");
    for i in 0..k {
        out.push_str(&format!("center_{i},"));
    }
    out.push_str("empirical,predicted\n");
    for (i, (e, p)) in empirical.masses().iter().zip(predicted.masses()).enumerate() {
        out.push_str(&format!("{i},"));
        for c in empirical.bin_center(i) {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{e},{p}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::{phi_profile, GridSpec};
    use crate::sets::{realize_cantor, CantorSpec, IntervalUnion};
    use crate::stats::binomial_se;

    fn interval_chain() -> DiffChain<TorusSet> {
        let a: TorusSet = IntervalUnion::from_arcs(&[(0.0, 0.3)]).unwrap().into();
        DiffChain::new(a, TorusPoint::on_circle(2f64.sqrt() - 1.0).unwrap(), 32).unwrap()
    }

    fn pt(x: f64) -> TorusPoint {
        TorusPoint::on_circle(x).unwrap()
    }

    #[test]
    fn chain_at_zero_never_moves() {
        let c = interval_chain();
        let o = c.chain_orbit(&pt(0.0), 10_000, &NoiseStream::new(0, 0)).unwrap();
        assert_eq!(o.moves.hold, 10_000);
        assert!(o.lattice.as_ref().unwrap().iter().all(|&m| m == 0));
        let h = o.occupation().unwrap();
        assert!((h.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_moves_are_symmetric_and_unit() {
        let c = interval_chain();
        let o = c.chain_orbit(&pt(0.37), 1_000_000, &NoiseStream::new(1, 0)).unwrap();
        let mv = o.moves;
        assert_eq!(mv.plus + mv.minus + mv.hold, 1_000_000);
        let jumps = (mv.plus + mv.minus) as f64;
        let sd = 0.5 * jumps.sqrt();
        assert!((mv.plus as f64 - jumps / 2.0).abs() < 3.0 * sd, "{mv:?}");
        let path = o.lattice.unwrap();
        assert!(path.windows(2).all(|w| (w[1] - w[0]).abs() <= 1));
        for j in o.jumps.iter().filter(|j| j.visits >= 10_000) {
            let total = (j.plus + j.minus) as f64;
            let p = 2.0 * j.expected / j.visits as f64;
            assert!((total / j.visits as f64 - p).abs() < 3.0 * binomial_se(p, j.visits as f64) + 1e-12);
        }
    }

    #[test]
    fn invalid_probability_is_reported() {
        let bad = FnPhi {
            dim: 1,
            f: |_: &[f64]| 1.5,
        };
        let c = DiffChain::new(bad, pt(0.3), 8).unwrap();
        assert!(matches!(
            c.chain_orbit(&pt(0.1), 10, &NoiseStream::new(0, 0)),
            Err(Error::InvalidProbability(p)) if p == 1.5
        ));
    }

    #[test]
    fn geometric_sampler() {
        assert_eq!(geometric_holding(1.0, 0.7), Some(1));
        assert_eq!(geometric_holding(0.0, 0.7), None);
        assert_eq!(geometric_holding(0.5, 0.0), Some(1));
        let mut s = NoiseSampler::new(&NoiseStream::new(3, 3), 1);
        let p = 0.05;
        let draws: Vec<f64> = (0..10_000)
            .map(|_| geometric_holding(p, s.uniform()).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sd = ((1.0 - p) / (p * p)).sqrt() / 100.0;
        assert!((mean - 1.0 / p).abs() < 3.0 * sd, "{mean}");
        // tiny φ is O(1) to sample
        assert!(geometric_holding(1e-13, 0.5).unwrap() > 1_000_000_000_000);
    }

    #[test]
    fn slowed_walk_with_unit_phi_is_the_plain_walk() {
        let one = FnPhi {
            dim: 1,
            f: |_: &[f64]| 1.0,
        };
        let c = DiffChain::new(one, pt(0.3), 8).unwrap();
        let (o, w) = c.slowed_orbit(&pt(0.1), 500, &NoiseStream::new(2, 0), Slowdown::Exact).unwrap();
        assert!(w.holding.iter().all(|&t| t == 1));
        let path = o.lattice.unwrap();
        assert_eq!(path.len(), 501);
        assert_eq!(&path[..], &w.positions[..501]);
        assert_eq!(o.moves.hold, 0);
    }

    #[test]
    fn slowed_walk_bookkeeping() {
        let c = interval_chain();
        let n = 100_000;
        let (o, w) = c.slowed_orbit(&pt(0.2), n, &NoiseStream::new(4, 0), Slowdown::Exact).unwrap();
        let j = w.jumps_by_horizon;
        assert_eq!(w.positions[0], 0);
        assert!(w.positions.windows(2).all(|p| (p[1] - p[0]).abs() == 1));
        let before: u64 = w.holding[..j].iter().sum();
        assert!(before <= n as u64 && (n as u64) < before.saturating_add(w.holding[j]));
        assert_eq!(o.counts.iter().sum::<u64>(), n as u64);
        assert_eq!(o.lattice.as_ref().unwrap().len(), n + 1);
        assert!(!w.stalled);
    }

    #[test]
    fn law_test_edge_cases() {
        let c = interval_chain();
        let r = c
            .law_equivalence_test(&pt(0.2), 0, 10_000, &NoiseStream::new(0, 0), Slowdown::Exact)
            .unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(matches!(
            c.law_equivalence_test(&pt(0.2), 10, 9_999, &NoiseStream::new(0, 0), Slowdown::Exact),
            Err(Error::Underpowered(_))
        ));
    }

    #[test]
    fn law_test_accepts_exact_and_rejects_corrupted() {
        let c = interval_chain();
        let noise = NoiseStream::new(5, 0);
        let ok = c
            .law_equivalence_test(&pt(0.2), 30, 100_000, &noise, Slowdown::Exact)
            .unwrap();
        assert!(ok.p_value > 1e-3, "{}", ok.p_value);
        let bad = c
            .law_equivalence_test(&pt(0.2), 30, 100_000, &noise, Slowdown::Corrupted)
            .unwrap();
        assert!(bad.p_value < 1e-6, "{}", bad.p_value);
    }

    #[test]
    fn predicted_density_examples() {
        let cantor: TorusSet = realize_cantor(CantorSpec::new(8)).unwrap().into();
        let spec = GridSpec::for_dim(1).with_window(Some((8f64.powi(-7), 8f64.powi(-2))));
        let profile = phi_profile(cantor.clone(), &spec).unwrap();
        let h = predicted_density(&profile, 64).unwrap();
        assert!((h.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // midpoint-rule oracle for ∫_bin 1/φ away from the origin bins
        let oracle: Vec<f64> = (1..63)
            .map(|i| {
                (0..2000)
                    .map(|j| {
                        let z = (i as f64 + (j as f64 + 0.5) / 2000.0) / 64.0;
                        1.0 / phi_slice(&cantor, &[z])
                    })
                    .sum::<f64>()
            })
            .collect();
        let argmax = |xs: &[f64]| (0..xs.len()).max_by(|&a, &b| xs[a].total_cmp(&xs[b])).unwrap();
        assert_eq!(argmax(&oracle), argmax(&h.masses()[1..63]));
        let scale = h.masses()[1] / oracle[0];
        for (i, o) in oracle.iter().enumerate() {
            assert!((h.masses()[i + 1] / (o * scale) - 1.0).abs() < 0.01, "bin {}", i + 1);
        }

        let interval: TorusSet = IntervalUnion::from_arcs(&[(0.0, 0.3)]).unwrap().into();
        let p = phi_profile(interval, &GridSpec::for_dim(1)).unwrap();
        assert!(matches!(predicted_density(&p, 64), Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn flat_phi_gives_flat_density() {
        // φ = 0.6 on [0.3, 0.7] for A = [0, 0.3)
        let a: TorusSet = IntervalUnion::from_arcs(&[(0.0, 0.3)]).unwrap().into();
        let mut p = phi_profile(a, &GridSpec::for_dim(1)).unwrap();
        p.verdict = crate::displacement::Verdict::Converges;
        p.fit.alpha = 0.5;
        p.fit.alpha_lo = 0.4;
        p.fit.alpha_hi = 0.6;
        let d = predicted_density(&p, 10).unwrap();
        for i in 3..7 {
            assert!((d.masses()[i] / d.masses()[3] - 1.0).abs() < 1e-12, "{:?}", d.masses());
        }
    }

    #[test]
    fn compare_and_csv() {
        let c = interval_chain();
        let o = c.chain_orbit(&pt(0.3), 1000, &NoiseStream::new(0, 0)).unwrap();
        let h = o.occupation().unwrap();
        assert_eq!(occupation_compare(&o, &h).unwrap(), 0.0);
        let csv = histogram_csv(&h, &h).unwrap();
        assert!(csv.starts_with("bin,center_0,empirical,predicted\n"));
        assert_eq!(csv.lines().count(), 33);
        let other = Histogram::from_weights(1, 16, vec![1.0; 16]).unwrap();
        assert!(histogram_csv(&h, &other).is_err());
        assert!(occupation_compare_off_origin(&h, &h).unwrap() < 1e-15);
    }
}
