//! Points of `T^k = (R/Z)^k` with the flat metric.
//!
//! Coordinates are fractions of a full turn and are kept in `[0, 1)` after
//! every arithmetic operation.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt;

use crate::error::{check_dim, Error, Result};

pub(crate) type Coords = SmallVec<[f64; 3]>;

/// Reduce a real number mod 1 into `[0, 1)`.
#[inline]
pub fn wrap1(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Circle distance between two coordinates already in `[0, 1)`.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Distance from a wrapped coordinate to 0 on the circle.
#[inline]
pub fn circle_norm(a: f64) -> f64 {
    a.min(1.0 - a)
}

/// Flat-torus norm of a wrapped coordinate slice.
#[inline]
pub(crate) fn norm_slice(z: &[f64]) -> f64 {
    if z.len() == 1 {
        return circle_norm(z[0]);
    }
    z.iter().map(|&c| circle_norm(c).powi(2)).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dist_slice(p: &[f64], q: &[f64]) -> f64 {
    if p.len() == 1 {
        return circle_dist(p[0], q[0]);
    }
    p.iter()
        .zip(q)
        .map(|(&a, &b)| circle_dist(a, b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// A point of the k-torus.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint {
    coords: Coords,
}

/// Displacements live on the same torus as points; the alias documents intent
/// at call sites (`v`, the noise `w_i`, the argument `ε` of φ).
pub type TranslationVector = TorusPoint;

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("TorusPoint").field(&self.coords.as_slice()).finish()
    }
}

impl TorusPoint {
    /// Wrap arbitrary finite coordinates onto the torus.
    pub fn wrap(x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("torus dimension must be at least 1".into()));
        }
        if let Some(bad) = x.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
        }
        Ok(Self {
            coords: x.iter().map(|&c| wrap1(c)).collect(),
        })
    }

    /// One-dimensional convenience constructor.
    pub fn on_circle(x: f64) -> Result<Self> {
        Self::wrap(&[x])
    }

    /// The origin of `T^k`.
    pub fn zero(k: usize) -> Self {
        Self {
            coords: std::iter::repeat_n(0.0, k.max(1)).collect(),
        }
    }

    /// Build from coordinates known to be wrapped already.
    pub(crate) fn from_wrapped(coords: Coords) -> Self {
        debug_assert!(coords.iter().all(|c| (0.0..1.0).contains(c)));
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    /// `T_u(p) = p + u`, coordinatewise mod 1.
    pub fn translate(&self, u: &TranslationVector) -> Result<Self> {
        check_dim(self.dim(), u.dim())?;
        Ok(Self {
            coords: self
                .coords
                .iter()
                .zip(&u.coords)
                .map(|(&a, &b)| wrap1(a + b))
                .collect(),
        })
    }

    /// `p - q` mod 1, so that `q.translate(p.diff(q)) == p`.
    pub fn diff(&self, q: &TorusPoint) -> Result<Self> {
        check_dim(self.dim(), q.dim())?;
        Ok(Self {
            coords: self
                .coords
                .iter()
                .zip(&q.coords)
                .map(|(&a, &b)| wrap1(a - b))
                .collect(),
        })
    }

    /// `-p` mod 1.
    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|&c| wrap1(-c)).collect(),
        }
    }

    /// Flat product metric: Euclidean combination of per-coordinate circle
    /// distances. Bounded by `sqrt(k)/2`.
    pub fn dist(&self, q: &TorusPoint) -> Result<f64> {
        check_dim(self.dim(), q.dim())?;
        Ok(dist_slice(&self.coords, &q.coords))
    }

    /// `dist(p, 0)`.
    pub fn norm(&self) -> f64 {
        norm_slice(&self.coords)
    }
}

/// Free-function form of [`TorusPoint::wrap`].
pub fn wrap(x: &[f64]) -> Result<TorusPoint> {
    TorusPoint::wrap(x)
}

pub fn translate(p: &TorusPoint, u: &TranslationVector) -> Result<TorusPoint> {
    p.translate(u)
}

pub fn diff(p: &TorusPoint, q: &TorusPoint) -> Result<TorusPoint> {
    p.diff(q)
}

pub fn torus_dist(p: &TorusPoint, q: &TorusPoint) -> Result<f64> {
    p.dist(q)
}
