//! The displacement function `φ_A(ε) = Leb(A Δ T_ε A)`.
//!
//! Interval and box unions are evaluated exactly; sets known only through
//! membership go through a Monte Carlo estimator. A tabulated profile fits a
//! power law near 0, which decides integrability of `1/φ_A` and the
//! normalization `Z = ∫ dx/φ_A(x)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::gamma;

use crate::error::{check_dim, Error, Result};
use crate::sets::{IntervalUnion, TorusSet};
use crate::torus::{norm_slice, wrap1, TorusPoint, TranslationVector};

/// Near-zero values below this are treated as exact zeros by the fit.
pub const FIT_FLOOR: f64 = 1e-14;

/// Slack on the exponent comparison with `k`. Power-law sets sit exactly at
/// the critical exponent `α = k` and the fit CI collapses onto it.
pub const ALPHA_TOLERANCE: f64 = 0.02;

/// φ below this counts as a zero for the symmetry check.
pub const SYMMETRY_THRESHOLD: f64 = 1e-9;

/// φ/dist below this is treated as a failed lower bound.
pub const LOWER_BOUND_MIN: f64 = 1e-6;

/// Exact `φ_A(ε)`.
pub fn phi(set: &TorusSet, eps: &TranslationVector) -> Result<f64> {
    check_dim(set.dim(), eps.dim())?;
    Ok(phi_slice(set, eps.coords()))
}

#[inline]
pub(crate) fn phi_slice(set: &TorusSet, eps: &[f64]) -> f64 {
    match set {
        TorusSet::Intervals(s) => s.symm_diff_measure(&s.translate(eps[0])),
        TorusSet::Boxes(b) => b
            .symm_diff_measure(&b.translate(eps))
            .expect("translate keeps the dimension"),
    }
}

/// `φ` of a product set from its factors:
/// `2 [Π Leb(A_i) − Π (Leb(A_i) − φ_i(ε_i)/2)]`.
pub fn phi_product_values(measures: &[f64], phis: &[f64]) -> f64 {
    let full: f64 = measures.iter().product();
    let overlap: f64 = measures
        .iter()
        .zip(phis)
        .map(|(m, p)| m - 0.5 * p)
        .product();
    2.0 * (full - overlap)
}

pub fn phi_product(factors: &[IntervalUnion], eps: &TranslationVector) -> Result<f64> {
    check_dim(factors.len(), eps.dim())?;
    let measures: Vec<f64> = factors.iter().map(IntervalUnion::measure).collect();
    let phis: Vec<f64> = factors
        .iter()
        .zip(eps.coords())
        .map(|(f, &e)| f.symm_diff_measure(&f.translate(e)))
        .collect();
    Ok(phi_product_values(&measures, &phis))
}

/// Membership test for sets without an exact representation.
pub type MembershipOracle = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Unbiased estimate of `Leb(A Δ T_ε A)` from indicator disagreement between
/// `x ∈ A` and `x − ε ∈ A` at uniform `x`.
pub fn phi_mc(
    contains: &(dyn Fn(&[f64]) -> bool + Sync),
    eps: &TranslationVector,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 100 {
        return Err(Error::InvalidInput(format!(
            "phi_mc needs at least 100 samples, got {samples}"
        )));
    }
    let k = eps.dim();
    let e = eps.coords();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; k];
    let mut shifted = vec![0.0; k];
    let mut hits = 0u64;
    for _ in 0..samples {
        for i in 0..k {
            x[i] = rng.random::<f64>();
            shifted[i] = wrap1(x[i] - e[i]);
        }
        if contains(&x) != contains(&shifted) {
            hits += 1;
        }
    }
    let n = samples as f64;
    let p = hits as f64 / n;
    // sample standard deviation of the 0/1 indicator
    let sd = if samples > 1 {
        (p * (1.0 - p) * n / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: p,
        stderr: sd / n.sqrt(),
    })
}

/// Source of φ values for a profile.
#[derive(Clone)]
pub enum PhiSource {
    Exact(Arc<TorusSet>),
    MonteCarlo {
        dim: usize,
        oracle: MembershipOracle,
        samples: usize,
        seed: u64,
    },
}

impl fmt::Debug for PhiSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiSource::Exact(s) => f.debug_tuple("Exact").field(s).finish(),
            PhiSource::MonteCarlo { dim, samples, seed, .. } => f
                .debug_struct("MonteCarlo")
                .field("dim", dim)
                .field("samples", samples)
                .field("seed", seed)
                .finish_non_exhaustive(),
        }
    }
}

impl From<TorusSet> for PhiSource {
    fn from(s: TorusSet) -> Self {
        PhiSource::Exact(Arc::new(s))
    }
}

impl PhiSource {
    pub fn dim(&self) -> usize {
        match self {
            PhiSource::Exact(s) => s.dim(),
            PhiSource::MonteCarlo { dim, .. } => *dim,
        }
    }

    pub fn exact_set(&self) -> Option<&TorusSet> {
        match self {
            PhiSource::Exact(s) => Some(s),
            PhiSource::MonteCarlo { .. } => None,
        }
    }

    /// `(value, stderr, exact)` at `ε`; `salt` decorrelates MC seeds.
    fn evaluate(&self, eps: &[f64], salt: u64) -> (f64, f64, bool) {
        match self {
            PhiSource::Exact(s) => (phi_slice(s, eps), 0.0, true),
            PhiSource::MonteCarlo {
                oracle,
                samples,
                seed,
                ..
            } => {
                if eps.iter().all(|&c| c == 0.0) {
                    return (0.0, 0.0, false);
                }
                let e = TorusPoint::wrap(eps).expect("grid points are finite");
                let mc = phi_mc(oracle.as_ref(), &e, *samples, seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                    .expect("sample count validated by GridSpec");
                (mc.estimate, mc.stderr, false)
            }
        }
    }
}

/// Grid layout of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Uniform points per axis, `i/m` for `i = 0..m`.
    pub uniform_per_axis: usize,
    /// Geometric refinement `ε = 2^-j · direction`, `j = 1..=refine_levels`.
    pub refine_levels: u32,
    /// Explicit fit window `[lo, hi]` in `dist(ε, 0)`; automatic when `None`.
    pub fit_window: Option<(f64, f64)>,
    /// Width, in refinement levels, of the automatically chosen window.
    pub window_levels: usize,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl GridSpec {
    /// 1024 points in 1D, 128 per axis in 2D, 32 per axis beyond.
    pub fn for_dim(k: usize) -> Self {
        Self {
            uniform_per_axis: match k {
                1 => 1024,
                2 => 128,
                _ => 32,
            },
            refine_levels: 40,
            fit_window: None,
            window_levels: 10,
            mc_samples: 100_000,
            mc_seed: 0,
        }
    }

    pub fn with_uniform(mut self, m: usize) -> Self {
        self.uniform_per_axis = m;
        self
    }

    pub fn with_window(mut self, window: Option<(f64, f64)>) -> Self {
        self.fit_window = window;
        self
    }
}

/// Unit directions used for the geometric refinement; all components ≥ 0.
fn refinement_directions(k: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if k >= 2 {
        let s = 1.0 / (k as f64).sqrt();
        dirs.push(vec![s; k]);
    }
    if k == 2 {
        let r = 1.0 / 5f64.sqrt();
        dirs.push(vec![2.0 * r, r]);
        dirs.push(vec![r, 2.0 * r]);
    }
    dirs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PointKind {
    Uniform,
    Refined { level: u32, direction: usize, negated: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eps: TorusPoint,
    /// `dist(ε, 0)`; for refined points the nominal `2^-j`.
    pub dist: f64,
    pub phi: f64,
    pub stderr: f64,
    pub exact: bool,
    pub point: PointKind,
}

/// Least-squares fit of `log φ = log c + α log dist` near 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub c: f64,
    pub alpha: f64,
    /// 95% Student-t interval of the slope.
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// `∫ 1/φ = ∞`; the one-dimensional system synchronizes.
    Diverges,
    Converges,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Diverges => "diverges",
            Verdict::Converges => "converges",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Tabulated φ with its near-zero fit and integrability verdict.
#[derive(Clone, Debug, Serialize)]
pub struct DisplacementProfile {
    #[serde(skip)]
    source: PhiSource,
    pub dimension: usize,
    pub set_measure: Option<f64>,
    pub spec: GridSpec,
    pub grid: Vec<GridPoint>,
    pub fit: ExponentFit,
    pub verdict: Verdict,
}

fn uniform_points(k: usize, m: usize) -> Vec<Vec<f64>> {
    let total = m.pow(k as u32);
    (0..total)
        .map(|mut i| {
            let mut c = vec![0.0; k];
            for axis in (0..k).rev() {
                c[axis] = (i % m) as f64 / m as f64;
                i /= m;
            }
            c
        })
        .collect()
}

struct Ols {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    r_squared: f64,
    n: usize,
}

fn ols(xs: &[f64], ys: &[f64]) -> Option<Ols> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(Ols {
        slope,
        intercept,
        slope_se: (sse / (nf - 2.0) / sxx).sqrt(),
        r_squared,
        n,
    })
}

fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(1.96)
}

/// Refined points on non-negated directions with usable values.
fn fit_candidates(grid: &[GridPoint]) -> Vec<(u32, f64, f64)> {
    grid.iter()
        .filter_map(|g| match g.point {
            PointKind::Refined {
                level,
                negated: false,
                ..
            } if g.phi > FIT_FLOOR => Some((level, g.dist, g.phi)),
            _ => None,
        })
        .collect()
}

fn fit_on(points: &[(u32, f64, f64)], window: (f64, f64)) -> Option<ExponentFit> {
    let sel: Vec<_> = points
        .iter()
        .filter(|p| p.1 >= window.0 * (1.0 - 1e-12) && p.1 <= window.1 * (1.0 + 1e-12))
        .collect();
    let xs: Vec<f64> = sel.iter().map(|p| p.1.ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|p| p.2.ln()).collect();
    let o = ols(&xs, &ys)?;
    let half = t_quantile_975(o.n - 2) * o.slope_se;
    Some(ExponentFit {
        c: o.intercept.exp(),
        alpha: o.slope,
        alpha_lo: o.slope - half,
        alpha_hi: o.slope + half,
        r_squared: o.r_squared,
        window,
        points: o.n,
    })
}

/// Fit on the explicit window, or slide a window of `window_levels` levels
/// over `dist ≤ 1/8` and keep the best R².
fn fit_exponent(grid: &[GridPoint], spec: &GridSpec) -> Result<ExponentFit> {
    let refined = grid
        .iter()
        .filter(|g| matches!(g.point, PointKind::Refined { negated: false, .. }))
        .count();
    let cands = fit_candidates(grid);
    if cands.is_empty() {
        return Err(Error::DegenerateFit(format!(
            "all {refined} near-zero values are below {FIT_FLOOR}; the set looks translation symmetric"
        )));
    }
    if let Some(window) = spec.fit_window {
        return fit_on(&cands, window).ok_or_else(|| {
            Error::DegenerateFit(format!(
                "fewer than 3 usable points in window [{:e}, {:e}]",
                window.0, window.1
            ))
        });
    }
    let mut levels: Vec<u32> = cands
        .iter()
        .filter(|p| p.1 <= 0.125)
        .map(|p| p.0)
        .collect();
    levels.sort_unstable();
    levels.dedup();
    let width = spec.window_levels.max(3);
    let windows: Vec<(f64, f64)> = if levels.len() <= width {
        match (levels.first(), levels.last()) {
            (Some(&a), Some(&b)) => vec![(2f64.powi(-(b as i32)), 2f64.powi(-(a as i32)))],
            _ => vec![],
        }
    } else {
        levels
            .windows(width)
            .map(|w| (2f64.powi(-(w[width - 1] as i32)), 2f64.powi(-(w[0] as i32))))
            .collect()
    };
    let mut best: Option<ExponentFit> = None;
    for w in windows {
        if let Some(f) = fit_on(&cands, w) {
            if best.as_ref().is_none_or(|b| f.r_squared > b.r_squared + 1e-12) {
                best = Some(f);
            }
        }
    }
    best.ok_or_else(|| Error::DegenerateFit("no near-zero window with 3 usable points".into()))
}

/// Tabulate φ on the uniform grid plus the geometric refinement and fit.
pub fn phi_profile(source: impl Into<PhiSource>, spec: &GridSpec) -> Result<DisplacementProfile> {
    let source = source.into();
    let k = source.dim();
    if spec.uniform_per_axis < 2 {
        return Err(Error::InvalidInput("uniform grid needs at least 2 points per axis".into()));
    }
    if matches!(source, PhiSource::MonteCarlo { samples, .. } if samples < 100) {
        return Err(Error::InvalidInput("Monte Carlo profiles need ≥ 100 samples".into()));
    }
    let mut raw: Vec<(Vec<f64>, f64, PointKind)> = uniform_points(k, spec.uniform_per_axis)
        .into_iter()
        .map(|c| {
            let d = norm_slice(&c);
            (c, d, PointKind::Uniform)
        })
        .collect();
    for (di, dir) in refinement_directions(k).iter().enumerate() {
        for level in 1..=spec.refine_levels {
            let t = 2f64.powi(-(level as i32));
            for negated in [false, true] {
                let sign = if negated { -1.0 } else { 1.0 };
                let c: Vec<f64> = dir.iter().map(|&d| wrap1(sign * t * d)).collect();
                raw.push((c, t, PointKind::Refined { level, direction: di, negated }));
            }
        }
    }
    let grid: Vec<GridPoint> = raw
        .into_par_iter()
        .enumerate()
        .map(|(i, (c, dist, point))| {
            let (phi, stderr, exact) = source.evaluate(&c, i as u64);
            GridPoint {
                eps: TorusPoint::wrap(&c).expect("finite"),
                dist,
                phi,
                stderr,
                exact,
                point,
            }
        })
        .collect();
    let fit = fit_exponent(&grid, spec)?;
    let mut profile = DisplacementProfile {
        set_measure: source.exact_set().map(TorusSet::measure),
        source,
        dimension: k,
        spec: spec.clone(),
        grid,
        fit,
        verdict: Verdict::Inconclusive,
    };
    profile.verdict = classify_integrability(&profile, k)?;
    Ok(profile)
}

/// Compare the exponent interval with `k`: `∫_{|ε|<r} dε/|ε|^α` is finite
/// iff `α < k`. In `k ≥ 2` a positive linear lower bound also settles it.
pub fn classify_integrability(profile: &DisplacementProfile, k: usize) -> Result<Verdict> {
    check_dim(profile.dimension, k)?;
    let kf = k as f64;
    let f = &profile.fit;
    if !(f.alpha.is_finite() && f.alpha_lo.is_finite() && f.alpha_hi.is_finite()) {
        return Err(Error::DegenerateFit("exponent fit is not finite".into()));
    }
    if f.alpha_lo >= kf - ALPHA_TOLERANCE {
        return Ok(Verdict::Diverges);
    }
    if f.alpha_hi < kf - ALPHA_TOLERANCE {
        return Ok(Verdict::Converges);
    }
    if k >= 2 && alpha_lower_bound(profile) > LOWER_BOUND_MIN {
        return Ok(Verdict::Converges);
    }
    Ok(Verdict::Inconclusive)
}

/// `min φ(u)/dist(u, 0)` over the non-zero grid points.
pub fn alpha_lower_bound(profile: &DisplacementProfile) -> f64 {
    profile
        .grid
        .iter()
        .filter(|g| g.dist > 0.0)
        .map(|g| g.phi / g.dist)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    /// No grid point outside `U_tolerance(0)` has φ at or below the threshold.
    pub no_symmetry: bool,
    pub min_phi: f64,
    /// Grid point attaining `min_phi`.
    pub witness: Option<TorusPoint>,
}

pub fn symmetry_check(profile: &DisplacementProfile, tolerance: f64) -> SymmetryReport {
    let best = profile
        .grid
        .iter()
        .filter(|g| g.dist > tolerance)
        .min_by(|a, b| a.phi.total_cmp(&b.phi));
    match best {
        Some(g) => SymmetryReport {
            no_symmetry: g.phi > SYMMETRY_THRESHOLD,
            min_phi: g.phi,
            witness: Some(g.eps.clone()),
        },
        None => SymmetryReport {
            no_symmetry: true,
            min_phi: f64::INFINITY,
            witness: None,
        },
    }
}

/// Surface area of the unit sphere in `R^k`.
fn sphere_area(k: usize) -> f64 {
    let h = k as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Power-law completion `∫_{|ε|<r} dε / (c |ε|^α)`.
fn tail_integral(k: usize, r: f64, c: f64, alpha: f64) -> f64 {
    let kf = k as f64;
    sphere_area(k) * r.powf(kf - alpha) / (c * (kf - alpha))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZEstimate {
    pub z: f64,
    pub error_bound: f64,
    pub exterior: f64,
    pub quadrature_error: f64,
    pub tail: f64,
    pub tail_error: f64,
    pub exclusion_radius: f64,
}

/// Tensor Gauss–Legendre nodes on `[-1, 1]`, two per axis.
const GL2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

const MAX_REFINE_DEPTH: u32 = 10;

/// Integrates `1/φ` over unions of cells, skipping the ball `|ε| < r`.
/// Cells are given in centred coordinates (`[-1/2, 1/2)` per axis) so the
/// Euclidean norm equals the torus distance to 0.
/// With a finite `outer` radius only the annulus `r ≤ |ε| < outer` counts.
pub(crate) struct InverseIntegrator<'a> {
    profile: &'a DisplacementProfile,
    radius: f64,
    outer: f64,
}

impl<'a> InverseIntegrator<'a> {
    pub(crate) fn new(profile: &'a DisplacementProfile, radius: f64) -> Self {
        Self {
            profile,
            radius,
            outer: f64::INFINITY,
        }
    }

    pub(crate) fn within(mut self, outer: f64) -> Self {
        self.outer = outer;
        self
    }

    /// Split the box into `sub^k` cells and integrate each.
    pub(crate) fn region(&self, lo: &[f64], hi: &[f64], sub: usize) -> f64 {
        let k = lo.len();
        let cells = sub.pow(k as u32);
        let mut total = 0.0;
        let mut clo = vec![0.0; k];
        let mut chi = vec![0.0; k];
        for mut i in 0..cells {
            for axis in (0..k).rev() {
                let j = (i % sub) as f64;
                i /= sub;
                let h = (hi[axis] - lo[axis]) / sub as f64;
                clo[axis] = lo[axis] + j * h;
                chi[axis] = lo[axis] + (j + 1.0) * h;
            }
            total += self.cell(&clo, &chi, 0);
        }
        total
    }

    fn phi_at(&self, centred: &[f64]) -> f64 {
        let wrapped: Vec<f64> = centred.iter().map(|&c| wrap1(c)).collect();
        match &self.profile.source {
            PhiSource::Exact(s) => phi_slice(s, &wrapped),
            PhiSource::MonteCarlo { .. } => self.profile.interpolate(&wrapped),
        }
    }

    pub(crate) fn cell(&self, lo: &[f64], hi: &[f64], depth: u32) -> f64 {
        let k = lo.len();
        let (mut near2, mut far2, mut diam2) = (0.0, 0.0, 0.0);
        for i in 0..k {
            let (a, b) = (lo[i], hi[i]);
            let n = if a > 0.0 {
                a
            } else if b < 0.0 {
                -b
            } else {
                0.0
            };
            near2 += n * n;
            far2 += a.abs().max(b.abs()).powi(2);
            diam2 += (b - a).powi(2);
        }
        let (near, far, diam) = (near2.sqrt(), far2.sqrt(), diam2.sqrt());
        if far <= self.radius || near >= self.outer {
            return 0.0;
        }
        let near_inner = near < self.radius + 2.0 * diam;
        let near_outer = self.outer.is_finite() && far > self.outer - 2.0 * diam;
        if depth < MAX_REFINE_DEPTH && (near_inner || near_outer) {
            let mut total = 0.0;
            for mask in 0..(1usize << k) {
                let mut clo = vec![0.0; k];
                let mut chi = vec![0.0; k];
                for i in 0..k {
                    let mid = 0.5 * (lo[i] + hi[i]);
                    if mask >> i & 1 == 0 {
                        clo[i] = lo[i];
                        chi[i] = mid;
                    } else {
                        clo[i] = mid;
                        chi[i] = hi[i];
                    }
                }
                total += self.cell(&clo, &chi, depth + 1);
            }
            return total;
        }
        let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
        let weight = vol / (1usize << k) as f64;
        let mut total = 0.0;
        let mut x = vec![0.0; k];
        for mask in 0..(1usize << k) {
            for i in 0..k {
                let node = GL2[mask >> i & 1];
                x[i] = 0.5 * (lo[i] + hi[i]) + 0.5 * (hi[i] - lo[i]) * node;
            }
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r < self.radius || r >= self.outer {
                continue;
            }
            let p = self.phi_at(&x);
            if p > 0.0 {
                total += weight / p;
            } else {
                return f64::INFINITY;
            }
        }
        total
    }

    /// Sum over the `m^k` cells of the whole torus.
    fn torus(&self, m: usize) -> f64 {
        let k = self.profile.dimension;
        let cells = m.pow(k as u32);
        (0..cells)
            .into_par_iter()
            .map(|mut i| {
                let mut lo = vec![0.0; k];
                let mut hi = vec![0.0; k];
                for axis in (0..k).rev() {
                    let j = (i % m) as f64;
                    i /= m;
                    lo[axis] = -0.5 + j / m as f64;
                    hi[axis] = -0.5 + (j + 1.0) / m as f64;
                }
                self.cell(&lo, &hi, 0)
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }
}

impl DisplacementProfile {
    pub fn source(&self) -> &PhiSource {
        &self.source
    }

    /// Multilinear interpolation of the uniform grid at a wrapped point.
    pub fn interpolate(&self, z: &[f64]) -> f64 {
        let m = self.spec.uniform_per_axis;
        let k = self.dimension;
        let mut base = vec![0usize; k];
        let mut frac = vec![0.0; k];
        for i in 0..k {
            let s = z[i] * m as f64;
            let f = s.floor();
            base[i] = (f as usize) % m;
            frac[i] = s - f;
        }
        let mut total = 0.0;
        for mask in 0..(1usize << k) {
            let mut w = 1.0;
            let mut idx = 0usize;
            for i in 0..k {
                let up = mask >> i & 1 == 1;
                w *= if up { frac[i] } else { 1.0 - frac[i] };
                idx = idx * m + if up { (base[i] + 1) % m } else { base[i] };
            }
            total += w * self.grid[idx].phi;
        }
        total
    }

    /// Radius inside which the fitted power law replaces quadrature: the
    /// geometric centre of the fit window, at most 0.01.
    pub fn tail_radius(&self) -> f64 {
        (self.fit.window.0 * self.fit.window.1).sqrt().min(0.01)
    }

    /// Power-law tail over the ball and its uncertainty from the spread of
    /// the fitted prefactor and the slope interval.
    fn tail_with_error(&self, radius: f64) -> (f64, f64) {
        let k = self.dimension;
        let f = &self.fit;
        let tail = tail_integral(k, radius, f.c, f.alpha);
        let pts: Vec<(f64, f64)> = fit_candidates(&self.grid)
            .into_iter()
            .filter(|p| p.1 >= f.window.0 * (1.0 - 1e-12) && p.1 <= f.window.1 * (1.0 + 1e-12))
            .map(|p| (p.1, p.2))
            .collect();
        let mut err = 0.0f64;
        let (mut cmin, mut cmax) = (f64::INFINITY, 0.0f64);
        for &(t, p) in &pts {
            let c = p / t.powf(f.alpha);
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
        if cmax > 0.0 {
            err = err
                .max((tail_integral(k, radius, cmin, f.alpha) - tail).abs())
                .max((tail_integral(k, radius, cmax, f.alpha) - tail).abs());
        }
        for a in [f.alpha_lo, f.alpha_hi] {
            if a >= k as f64 || pts.is_empty() {
                return (tail, f64::INFINITY);
            }
            let lc = pts.iter().map(|&(t, p)| p.ln() - a * t.ln()).sum::<f64>() / pts.len() as f64;
            err = err.max((tail_integral(k, radius, lc.exp(), a) - tail).abs());
        }
        (tail, err)
    }

    fn require_integrable(&self) -> Result<()> {
        if self.verdict != Verdict::Converges {
            return Err(Error::NotIntegrable(self.verdict.to_string()));
        }
        Ok(())
    }

    /// `∫ 1/φ` over the bin `idx` of a `bins^k` layout plus the power-law
    /// share of the ball when the bin touches the origin.
    pub(crate) fn bin_inverse_mass(&self, bins: usize, mut idx: usize, radius: f64, tail: f64) -> f64 {
        let k = self.dimension;
        let mut lo = vec![0.0; k];
        let mut hi = vec![0.0; k];
        let mut touches = true;
        for axis in (0..k).rev() {
            let j = idx % bins;
            idx /= bins;
            let (mut a, mut b) = (j as f64 / bins as f64, (j + 1) as f64 / bins as f64);
            if a >= 0.5 {
                a -= 1.0;
                b -= 1.0;
            }
            touches &= a == 0.0 || b == 0.0;
            lo[axis] = a;
            hi[axis] = b;
        }
        let integ = InverseIntegrator::new(self, radius);
        let sub = (self.spec.uniform_per_axis / bins).max(4);
        let mut mass = integ.region(&lo, &hi, sub);
        if touches {
            mass += tail / (1usize << k) as f64;
        }
        mass
    }
}

/// `Z = ∫ dx/φ_A(x)`: quadrature outside `U_δ0(0)` at the profile's grid
/// resolution, checked against half resolution, plus the power-law tail.
pub fn z_constant(profile: &DisplacementProfile, exclusion_radius: f64) -> Result<ZEstimate> {
    profile.require_integrable()?;
    if !(exclusion_radius > 0.0 && exclusion_radius < 0.5) {
        return Err(Error::InvalidInput(format!(
            "exclusion radius must lie in (0, 1/2), got {exclusion_radius}"
        )));
    }
    let m = profile.spec.uniform_per_axis.max(2);
    let integ = InverseIntegrator::new(profile, exclusion_radius);
    let fine = integ.torus(m);
    let coarse = integ.torus((m / 2).max(1));
    let (tail, tail_error) = profile.tail_with_error(exclusion_radius);
    let quadrature_error = (fine - coarse).abs();
    Ok(ZEstimate {
        z: fine + tail,
        error_bound: quadrature_error + tail_error,
        exterior: fine,
        quadrature_error,
        tail,
        tail_error,
        exclusion_radius,
    })
}

/// `∫_{|ε| < δ} dε/φ(ε)`: quadrature on the annulus outside the tail
/// radius plus the power-law tail.
pub fn inverse_mass_in_ball(profile: &DisplacementProfile, delta: f64) -> Result<f64> {
    profile.require_integrable()?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidInput(format!("ball radius must lie in (0, 1/2), got {delta}")));
    }
    let radius = profile.tail_radius().min(delta / 4.0);
    let (tail, _) = profile.tail_with_error(radius);
    let k = profile.dimension;
    let lo = vec![-delta; k];
    let hi = vec![delta; k];
    let sub = ((2.0 * delta * profile.spec.uniform_per_axis as f64).ceil() as usize).max(8);
    let integ = InverseIntegrator::new(profile, radius).within(delta);
    Ok(integ.region(&lo, &hi, sub) + tail)
}

/// Default tail radius and its power-law tail for a bin layout.
pub(crate) fn bin_tail(profile: &DisplacementProfile, bins: usize) -> Result<(f64, f64)> {
    profile.require_integrable()?;
    let radius = profile.tail_radius().min(0.25 / bins as f64);
    let (tail, _) = profile.tail_with_error(radius);
    Ok((radius, tail))
}

impl DisplacementProfile {
    /// CSV rows `eps_0..eps_{k-1},phi,exact,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dimension {
            out.push_str(&format!("eps_{i},"));
        }
        out.push_str("phi,exact,stderr\n");
        for g in &self.grid {
            for c in g.eps.coords() {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{},{},{}\n", g.phi, g.exact, g.stderr));
        }
        out
    }
}
