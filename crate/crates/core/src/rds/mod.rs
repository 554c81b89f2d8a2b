//! The random double rotation `f(x) = x + v·1_A(x)` and its random
//! compositions `F_w^n = f_{w_n} ∘ ⋯ ∘ f_{w_1}` with `f_u = T_u ∘ f`.

mod image;

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bin_index, circular_row_sums, d_functional, Histogram};
use crate::displacement::{phi_slice, MembershipOracle};
use crate::error::{check_dim, Error, Result};
use crate::sets::{IntervalUnion, TorusSet};
use crate::torus::{dist_slice, wrap1, Coords, TorusPoint, TranslationVector};

pub(crate) use image::FixedArcs;

/// Component cap of the exact image tracker.
pub const DEFAULT_COMPONENT_CAP: usize = 1_000_000;

/// Attractor reports list arcs only up to this many components.
pub const MAX_REPORTED_ARCS: usize = 10_000;

/// How the dynamics test membership in `A`.
#[derive(Clone)]
pub enum Membership {
    Set(Arc<TorusSet>),
    Oracle { dim: usize, oracle: MembershipOracle },
}

impl fmt::Debug for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Membership::Set(s) => f.debug_tuple("Set").field(s).finish(),
            Membership::Oracle { dim, .. } => f.debug_struct("Oracle").field("dim", dim).finish_non_exhaustive(),
        }
    }
}

/// `A` together with the jump vector `v`.
#[derive(Clone, Debug)]
pub struct SystemConfig {
    membership: Membership,
    v: TranslationVector,
}

impl SystemConfig {
    pub fn new(set: TorusSet, v: TranslationVector) -> Result<Self> {
        Self::with_membership(Membership::Set(Arc::new(set)), v)
    }

    pub fn with_oracle(dim: usize, oracle: MembershipOracle, v: TranslationVector) -> Result<Self> {
        Self::with_membership(Membership::Oracle { dim, oracle }, v)
    }

    fn with_membership(membership: Membership, v: TranslationVector) -> Result<Self> {
        let k = match &membership {
            Membership::Set(s) => s.dim(),
            Membership::Oracle { dim, .. } => *dim,
        };
        check_dim(k, v.dim())?;
        if v.is_zero() {
            return Err(Error::InvalidInput("jump vector v must be nonzero".into()));
        }
        Ok(Self { membership, v })
    }

    /// Fractional parts of `√p` over the first `k` primes, so `v = √2 − 1`
    /// on the circle.
    pub fn default_v(k: usize) -> TranslationVector {
        const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
        let c: Vec<f64> = (0..k.max(1)).map(|i| PRIMES[i % 8].sqrt().fract()).collect();
        TorusPoint::wrap(&c).expect("finite")
    }

    pub fn with_default_v(set: TorusSet) -> Result<Self> {
        let k = set.dim();
        Self::new(set, Self::default_v(k))
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn v(&self) -> &TranslationVector {
        &self.v
    }

    pub fn membership(&self) -> &Membership {
        &self.membership
    }

    pub fn set(&self) -> Option<&TorusSet> {
        match &self.membership {
            Membership::Set(s) => Some(s),
            Membership::Oracle { .. } => None,
        }
    }

    #[inline]
    pub(crate) fn contains_slice(&self, x: &[f64]) -> bool {
        match &self.membership {
            Membership::Set(s) => s.contains_slice(x),
            Membership::Oracle { oracle, .. } => oracle(x),
        }
    }

    /// `x ↦ f_w(x)` in place.
    #[inline]
    pub(crate) fn step(&self, x: &mut [f64], w: &[f64]) {
        let jump = self.contains_slice(x);
        let v = self.v.coords();
        for i in 0..x.len() {
            let shifted = if jump { x[i] + v[i] } else { x[i] };
            x[i] = wrap1(shifted + w[i]);
        }
    }
}

/// `f(x) = x + v` on `A`, `x` elsewhere.
pub fn apply_f(cfg: &SystemConfig, x: &TorusPoint) -> Result<TorusPoint> {
    check_dim(cfg.dim(), x.dim())?;
    if cfg.contains_slice(x.coords()) {
        x.translate(&cfg.v)
    } else {
        Ok(x.clone())
    }
}

/// Map 64 random bits to the double `⌊r / 2^11⌋ · 2^-53 ∈ [0, 1)`.
#[inline]
pub(crate) fn unit_from_bits(r: u64) -> f64 {
    (r >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A reproducible i.i.d. uniform noise sequence `w_1, w_2, …` on `T^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

const COMPANION_BIT: u64 = 1 << 63;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl NoiseStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.stream_id);
        r
    }

    /// Independent stream for auxiliary randomness (initial positions,
    /// stratification) that must not shift the noise sequence.
    pub fn companion(&self) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id: self.stream_id ^ COMPANION_BIT,
        }
    }

    /// The `i`-th child stream, for fan-out over independent trials.
    pub fn child(&self, i: u64) -> Self {
        Self {
            master_seed: splitmix(self.master_seed ^ splitmix(self.stream_id)),
            stream_id: i & !COMPANION_BIT,
        }
    }

    /// First `n` noise vectors, flattened.
    pub fn take(&self, k: usize, n: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (0..n * k).map(|_| unit_from_bits(rng.next_u64())).collect()
    }

    fn take_bits(&self, n: usize) -> Vec<u64> {
        let mut rng = self.rng();
        (0..n).map(|_| (rng.next_u64() >> 11) << 11).collect()
    }
}

/// Streaming noise drawn from a [`NoiseStream`].
pub(crate) struct NoiseSampler {
    rng: ChaCha8Rng,
    buf: Coords,
}

impl NoiseSampler {
    pub(crate) fn new(noise: &NoiseStream, k: usize) -> Self {
        Self {
            rng: noise.rng(),
            buf: std::iter::repeat_n(0.0, k).collect(),
        }
    }

    #[inline]
    pub(crate) fn next(&mut self) -> &[f64] {
        for c in self.buf.iter_mut() {
            *c = unit_from_bits(self.rng.next_u64());
        }
        &self.buf
    }

    #[inline]
    pub(crate) fn uniform(&mut self) -> f64 {
        unit_from_bits(self.rng.next_u64())
    }
}

fn check_horizon(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("horizon n must be at least 1".into()));
    }
    if n > i32::MAX as usize {
        return Err(Error::InvalidInput(format!("horizon {n} exceeds the lattice index range")));
    }
    Ok(())
}

/// `x_0 = x`, `x_i = f_{w_i}(x_{i-1})` for `i = 1..=n`.
pub fn forward_orbit(cfg: &SystemConfig, x: &TorusPoint, n: usize, noise: &NoiseStream) -> Result<Vec<TorusPoint>> {
    check_dim(cfg.dim(), x.dim())?;
    check_horizon(n)?;
    let mut sampler = NoiseSampler::new(noise, cfg.dim());
    let mut cur: Coords = x.coords().iter().copied().collect();
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.clone());
    for _ in 0..n {
        cfg.step(&mut cur, sampler.next());
        out.push(TorusPoint::from_wrapped(cur.clone()));
    }
    Ok(out)
}

/// Two trajectories driven by one noise sequence. The difference is kept as
/// the lattice index `m_n` with `z_n = z_0 + m_n v`, where `z_n = x_n − y_n`
/// and `z_0 = x − y` precedes the first map.
#[derive(Clone, Debug, Serialize)]
pub struct TwoPointTrace {
    z0: TorusPoint,
    v: TranslationVector,
    lattice: Vec<i32>,
    distances: Vec<f64>,
}

/// Jump counts of a two-point trace within one difference bin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct JumpBin {
    pub visits: u64,
    pub plus: u64,
    pub minus: u64,
    /// `Σ φ(z_n)/2` over the visits: the expected count of each direction.
    pub expected: f64,
    /// `Σ p(1 − p)` with `p = φ(z_n)/2`: the variance of each count.
    pub variance: f64,
}

impl TwoPointTrace {
    /// Horizon `N`.
    pub fn len(&self) -> usize {
        self.distances.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn z0(&self) -> &TorusPoint {
        &self.z0
    }

    /// `dist(x_n, y_n)` for `n = 0..=N`.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// `m_n` for `n = 0..=N`.
    pub fn lattice(&self) -> &[i32] {
        &self.lattice
    }

    /// `z_0 + m·v` wrapped.
    pub fn lattice_point(&self, m: i32) -> Coords {
        lattice_point(&self.z0, &self.v, m as i64)
    }

    /// Occupation measure of `z_1..z_N` on `bins^k` cells.
    pub fn occupancy(&self, bins: usize) -> Result<Histogram> {
        let k = self.z0.dim();
        let mut counts = vec![0u64; bins.checked_pow(k as u32).unwrap_or(0).max(1)];
        let mut cache = LatticeBins::new(&self.lattice[1..]);
        for &m in &self.lattice[1..] {
            let b = cache.get(m, || bin_index(&self.lattice_point(m), bins));
            counts[b] += 1;
        }
        Histogram::from_counts(k, bins, &counts)
    }

    /// Per-bin jump counts against the exact jump probabilities `φ(z_n)/2`.
    pub fn jump_statistics(&self, set: &TorusSet, bins: usize) -> Result<Vec<JumpBin>> {
        let k = self.z0.dim();
        check_dim(set.dim(), k)?;
        let cells = bins
            .checked_pow(k as u32)
            .filter(|&c| c > 0 && c <= 1 << 26)
            .ok_or_else(|| Error::InvalidInput(format!("{bins}^{k} bins")))?;
        let mut out = vec![JumpBin::default(); cells];
        let mut cache = LatticeBins::new(&self.lattice);
        let mut phis = LatticeValues::new(&self.lattice);
        for w in self.lattice.windows(2) {
            let (m, next) = (w[0], w[1]);
            let z = self.lattice_point(m);
            let b = cache.get(m, || bin_index(&z, bins));
            let p = 0.5 * phis.get(m, || phi_slice(set, &z));
            let e = &mut out[b];
            e.visits += 1;
            e.expected += p;
            e.variance += p * (1.0 - p);
            match next - m {
                1 => e.plus += 1,
                -1 => e.minus += 1,
                _ => {}
            }
        }
        Ok(out)
    }
}

pub(crate) fn lattice_point(z0: &TorusPoint, v: &TranslationVector, m: i64) -> Coords {
    let mf = m as f64;
    z0.coords()
        .iter()
        .zip(v.coords())
        .map(|(&z, &vi)| wrap1(z + wrap1(mf * vi)))
        .collect()
}

/// Dense per-site cache over the lattice range visited by a path.
struct LatticeBins {
    lo: i32,
    slots: Vec<usize>,
}

impl LatticeBins {
    fn new(path: &[i32]) -> Self {
        let lo = path.iter().copied().min().unwrap_or(0);
        let hi = path.iter().copied().max().unwrap_or(0);
        Self {
            lo,
            slots: vec![usize::MAX; (hi - lo) as usize + 1],
        }
    }

    #[inline]
    fn get(&mut self, m: i32, f: impl FnOnce() -> usize) -> usize {
        let s = &mut self.slots[(m - self.lo) as usize];
        if *s == usize::MAX {
            *s = f();
        }
        *s
    }
}

struct LatticeValues {
    lo: i32,
    slots: Vec<f64>,
}

impl LatticeValues {
    fn new(path: &[i32]) -> Self {
        let lo = path.iter().copied().min().unwrap_or(0);
        let hi = path.iter().copied().max().unwrap_or(0);
        Self {
            lo,
            slots: vec![f64::NAN; (hi - lo) as usize + 1],
        }
    }

    #[inline]
    fn get(&mut self, m: i32, f: impl FnOnce() -> f64) -> f64 {
        let s = &mut self.slots[(m - self.lo) as usize];
        if s.is_nan() {
            *s = f();
        }
        *s
    }
}

/// Drive `x` and `y` with the same noise for `n` steps.
pub fn two_point_orbit(
    cfg: &SystemConfig,
    x: &TorusPoint,
    y: &TorusPoint,
    n: usize,
    noise: &NoiseStream,
) -> Result<TwoPointTrace> {
    check_dim(cfg.dim(), x.dim())?;
    check_dim(cfg.dim(), y.dim())?;
    check_horizon(n)?;
    let mut sampler = NoiseSampler::new(noise, cfg.dim());
    let mut a: Coords = x.coords().iter().copied().collect();
    let mut b: Coords = y.coords().iter().copied().collect();
    let mut lattice = Vec::with_capacity(n + 1);
    let mut distances = Vec::with_capacity(n + 1);
    let mut m = 0i32;
    lattice.push(0);
    distances.push(dist_slice(&a, &b));
    for _ in 0..n {
        m += i32::from(cfg.contains_slice(&a)) - i32::from(cfg.contains_slice(&b));
        let w = sampler.next();
        cfg.step(&mut a, w);
        cfg.step(&mut b, w);
        lattice.push(m);
        distances.push(dist_slice(&a, &b));
    }
    Ok(TwoPointTrace {
        z0: x.diff(y)?,
        v: cfg.v.clone(),
        lattice,
        distances,
    })
}

/// Equal-weight particles on `T^k`, stored flat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    dim: usize,
    coords: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn from_points(points: Vec<TorusPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("ensemble needs at least one particle".into()))?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            check_dim(dim, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        Ok(Self { dim, coords })
    }

    /// Stratified uniform sample: one point per stratum `[i/M, (i+1)/M)` on
    /// each axis, strata paired across axes by random permutations.
    pub fn stratified(k: usize, m: usize, noise: &NoiseStream) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::InvalidInput("ensemble needs k ≥ 1 and M ≥ 1".into()));
        }
        let mut rng = noise.companion().rng();
        let mut coords = vec![0.0; k * m];
        for axis in 0..k {
            let mut strata: Vec<usize> = (0..m).collect();
            if axis > 0 {
                strata.shuffle(&mut rng);
            }
            for (i, &s) in strata.iter().enumerate() {
                let u = unit_from_bits(rng.next_u64());
                coords[i * k + axis] = wrap1((s as f64 + u) / m as f64);
            }
        }
        Ok(Self { dim: k, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Every particle carries weight `1/M`.
    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn point(&self, i: usize) -> TorusPoint {
        TorusPoint::from_wrapped(self.coords[i * self.dim..(i + 1) * self.dim].iter().copied().collect())
    }

    fn advance(&mut self, cfg: &SystemConfig, noise: &[f64]) {
        let k = self.dim;
        self.coords.par_chunks_mut(k * 256).for_each(|chunk| {
            for x in chunk.chunks_exact_mut(k) {
                for w in noise.chunks_exact(k) {
                    cfg.step(x, w);
                }
            }
        });
    }

    fn advance_reversed(&mut self, cfg: &SystemConfig, noise: &[f64]) {
        let k = self.dim;
        self.coords.par_chunks_mut(k * 256).for_each(|chunk| {
            for x in chunk.chunks_exact_mut(k) {
                for w in noise.chunks_exact(k).rev() {
                    cfg.step(x, w);
                }
            }
        });
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleCheckpoint {
    pub step: usize,
    pub d: f64,
    pub snapshot: ParticleEnsemble,
}

fn check_ensemble(cfg: &SystemConfig, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidInput("ensemble needs M ≥ 1".into()));
    }
    if cfg.dim() == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    Ok(())
}

/// Push a stratified uniform sample forward through `F_w^n`, recording `D`
/// at each requested step (sorted, `≤ n`).
pub fn ensemble_forward(
    cfg: &SystemConfig,
    m: usize,
    n: usize,
    noise: &NoiseStream,
    checkpoints: &[usize],
) -> Result<Vec<EnsembleCheckpoint>> {
    check_ensemble(cfg, m)?;
    let mut marks = checkpoints.to_vec();
    marks.sort_unstable();
    marks.dedup();
    if let Some(&last) = marks.last() {
        if last > n {
            return Err(Error::InvalidInput(format!("checkpoint {last} beyond horizon {n}")));
        }
    }
    let k = cfg.dim();
    let mut ens = ParticleEnsemble::stratified(k, m, noise)?;
    let mut rng = noise.rng();
    let mut done = 0usize;
    let mut out = Vec::with_capacity(marks.len());
    for mark in marks {
        let steps = mark - done;
        let w: Vec<f64> = (0..steps * k).map(|_| unit_from_bits(rng.next_u64())).collect();
        ens.advance(cfg, &w);
        done = mark;
        out.push(EnsembleCheckpoint {
            step: mark,
            d: d_functional(&ens),
            snapshot: ens.clone(),
        });
    }
    Ok(out)
}

/// `(F_{w,rev}^n)_* ` of the stratified sample: `f_{w_n}` acts first and
/// `f_{w_1}` last. The sample matches the one of [`ensemble_forward`].
pub fn reversed_ensemble(cfg: &SystemConfig, m: usize, n: usize, noise: &NoiseStream) -> Result<ParticleEnsemble> {
    check_ensemble(cfg, m)?;
    check_horizon(n)?;
    let mut ens = ParticleEnsemble::stratified(cfg.dim(), m, noise)?;
    let w = noise.take(cfg.dim(), n);
    ens.advance_reversed(cfg, &w);
    Ok(ens)
}

/// Circular geometric median over the particle positions.
pub fn estimate_limit_point(ensemble: &ParticleEnsemble) -> Result<TorusPoint> {
    check_dim(1, ensemble.dim())?;
    let xs: Vec<f64> = ensemble.iter().map(|p| p[0]).collect();
    let sums = circular_row_sums(&xs);
    let best = sums
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidInput("empty ensemble".into()))?;
    TorusPoint::on_circle(xs[best])
}

fn circle_system(cfg: &SystemConfig) -> Result<(FixedArcs, u64)> {
    match cfg.set() {
        Some(TorusSet::Intervals(a)) => Ok((
            FixedArcs::from_union(a),
            image::to_fixed(cfg.v.coords()[0]) as u64,
        )),
        _ => Err(Error::InvalidInput(
            "exact images need a one-dimensional interval union".into(),
        )),
    }
}

/// `F_{w,rev}^n(S^1)` in fixed point, or the step at which the cap broke.
fn fixed_reversed_image(a: &FixedArcs, v: u64, w: &[u64], cap: usize) -> std::result::Result<FixedArcs, (u64, usize)> {
    let mut s = FixedArcs::full();
    for (applied, &wi) in w.iter().rev().enumerate() {
        s = s.image(a, v, wi);
        if s.components() > cap {
            return Err((applied as u64 + 1, s.components()));
        }
    }
    Ok(s)
}

/// Exact `F_{w,rev}^n(S^1)`, with the default component cap.
pub fn reversed_image_exact(cfg: &SystemConfig, n: usize, noise: &NoiseStream) -> Result<IntervalUnion> {
    reversed_image_exact_capped(cfg, n, noise, DEFAULT_COMPONENT_CAP)
}

pub fn reversed_image_exact_capped(cfg: &SystemConfig, n: usize, noise: &NoiseStream, cap: usize) -> Result<IntervalUnion> {
    let (a, v) = circle_system(cfg)?;
    let w = noise.take_bits(n);
    fixed_reversed_image(&a, v, &w, cap)
        .map(|s| s.to_union())
        .map_err(|(step, components)| Error::Capacity {
            step,
            components,
            cap,
            partial: None,
        })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttractorCheckpoint {
    pub step: usize,
    pub components: usize,
    pub measure: f64,
    pub largest_gap: f64,
    pub largest_component: f64,
    /// Exact inclusion in the image at the previous checkpoint; `true` for
    /// the first checkpoint.
    pub nested_in_previous: bool,
    /// Circle arcs `(start, end)`, `start > end` through 0; omitted past
    /// [`MAX_REPORTED_ARCS`] components.
    pub arcs: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttractorReport {
    pub noise: NoiseStream,
    pub n_max: usize,
    pub checkpoints: Vec<AttractorCheckpoint>,
}

impl AttractorReport {
    pub fn nested(&self) -> bool {
        self.checkpoints.iter().all(|c| c.nested_in_previous)
    }

    pub fn measure_non_increasing(&self) -> bool {
        self.checkpoints.windows(2).all(|w| w[1].measure <= w[0].measure)
    }
}

/// `1, r, r², …` rounded and deduplicated, capped by `n_max` (included).
pub fn geometric_schedule(n_max: usize, ratio: f64) -> Vec<usize> {
    let ratio = ratio.max(1.01);
    let mut out = vec![0usize];
    let mut t = 1.0f64;
    while (t as usize) < n_max {
        let s = t.round() as usize;
        if s > *out.last().expect("nonempty") {
            out.push(s);
        }
        t *= ratio;
    }
    if n_max > 0 {
        out.push(n_max);
    }
    out.dedup();
    out
}

/// Exact reversed images at each checkpoint, recomputed from the full
/// circle with the shared noise prefix.
pub fn attractor_report(
    cfg: &SystemConfig,
    n_max: usize,
    schedule: &[usize],
    noise: &NoiseStream,
) -> Result<AttractorReport> {
    attractor_report_capped(cfg, n_max, schedule, noise, DEFAULT_COMPONENT_CAP)
}

pub fn attractor_report_capped(
    cfg: &SystemConfig,
    n_max: usize,
    schedule: &[usize],
    noise: &NoiseStream,
    cap: usize,
) -> Result<AttractorReport> {
    let (a, v) = circle_system(cfg)?;
    let mut steps: Vec<usize> = schedule.iter().copied().filter(|&s| s <= n_max).collect();
    steps.sort_unstable();
    steps.dedup();
    let w = noise.take_bits(n_max);
    let mut report = AttractorReport {
        noise: *noise,
        n_max,
        checkpoints: Vec::with_capacity(steps.len()),
    };
    let mut prev: Option<FixedArcs> = None;
    for step in steps {
        let img = match fixed_reversed_image(&a, v, &w[..step], cap) {
            Ok(s) => s,
            Err((at, components)) => {
                return Err(Error::Capacity {
                    step: at,
                    components,
                    cap,
                    partial: Some(Box::new(report)),
                })
            }
        };
        let components = img.components();
        report.checkpoints.push(AttractorCheckpoint {
            step,
            components,
            measure: img.measure(),
            largest_gap: img.largest_gap(),
            largest_component: img.largest_component(),
            nested_in_previous: prev.as_ref().is_none_or(|p| img.is_subset_of(p)),
            arcs: (components <= MAX_REPORTED_ARCS).then(|| img.circular_arcs()),
        });
        prev = Some(img);
    }
    Ok(report)
}
