//! Vector geometry for linearly moving particles.
//!
//! Everything here works on a single pair of constant-velocity segments. Two
//! particles are in contact when their centres are within `threshold` (normally
//! `2r`, the sum of the two tube radii). For linear motion the squared
//! separation is a convex quadratic in time, so contact sets are intervals and
//! can be found in closed form.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 6;

/// Relative width under which a discriminant counts as a tangency.
pub const TANGENCY_EPS: f64 = 1e-14;

/// Contact times closer than this are treated as ties.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("time windows [{a0}, {a1}] and [{b0}, {b1}] do not overlap")]
    NoOverlap { a0: f64, a1: f64, b0: f64, b1: f64 },
    #[error("dimension must be between 1 and {MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("segment window must satisfy t0 < t1, got [{0}, {1}]")]
    EmptyWindow(f64, f64),
}

/// A point or displacement in `R^d`, `1 <= d <= MAX_DIM`.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Vector { coords: [0.0; MAX_DIM], dim: dim as u8 }
    }

    pub fn from_slice(xs: &[f64]) -> Result<Self, GeometryError> {
        if xs.is_empty() || xs.len() > MAX_DIM {
            return Err(GeometryError::BadDimension(xs.len()));
        }
        let mut v = Vector::zeros(xs.len());
        v.coords[..xs.len()].copy_from_slice(xs);
        Ok(v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let d = self.dim();
        &mut self.coords[..d]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }

    /// `self + other * s`
    #[inline]
    pub fn add_scaled(&self, other: &Vector, s: f64) -> Vector {
        let mut out = *self;
        for (o, b) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *o += b * s;
        }
        out
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (*self - *other).norm()
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        self.add_scaled(&rhs, 1.0)
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        debug_assert_eq!(self.dim, rhs.dim);
        self.add_scaled(&rhs, -1.0)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(mut self, s: f64) -> Vector {
        self.as_mut_slice().iter_mut().for_each(|c| *c *= s);
        self
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let xs = Vec::<f64>::deserialize(d)?;
        Vector::from_slice(&xs).map_err(serde::de::Error::custom)
    }
}

/// Free flight on `[t0, t1]`: position `x0 + v (t - t0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSegment {
    pub t0: f64,
    pub t1: f64,
    pub x0: Vector,
    pub v: Vector,
}

impl MotionSegment {
    pub fn new(t0: f64, t1: f64, x0: Vector, v: Vector) -> Result<Self, GeometryError> {
        if !(t0 < t1) {
            return Err(GeometryError::EmptyWindow(t0, t1));
        }
        if x0.dim() != v.dim() {
            return Err(GeometryError::DimensionMismatch(x0.dim(), v.dim()));
        }
        Ok(MotionSegment { t0, t1, x0, v })
    }

    #[inline]
    pub fn position_at(&self, t: f64) -> Vector {
        self.x0.add_scaled(&self.v, t - self.t0)
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }
}

/// Relative motion of a pair over their common window, in local time
/// `s = t - start`, `s` in `[0, len]`: separation `dx + dv s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RelativeMotion {
    pub start: f64,
    pub end: f64,
    pub dx: Vector,
    pub dv: Vector,
}

impl RelativeMotion {
    pub fn of(a: &MotionSegment, b: &MotionSegment) -> Result<Self, GeometryError> {
        if a.dim() != b.dim() {
            return Err(GeometryError::DimensionMismatch(a.dim(), b.dim()));
        }
        let start = a.t0.max(b.t0);
        let end = a.t1.min(b.t1);
        if start > end {
            return Err(GeometryError::NoOverlap { a0: a.t0, a1: a.t1, b0: b.t0, b1: b.t1 });
        }
        Ok(RelativeMotion { start, end, dx: a.position_at(start) - b.position_at(start), dv: a.v - b.v })
    }

    /// Local-time interval (unclipped) on which `|dx + dv s| <= threshold`.
    /// `None` when the pair never comes that close, or only touches tangentially.
    /// An infinite interval is returned for a stationary pair already in range.
    pub fn contact_roots(&self, threshold: f64) -> Option<(f64, f64)> {
        let a = self.dv.norm_sq();
        let b = 2.0 * self.dx.dot(&self.dv);
        let c = self.dx.norm_sq() - threshold * threshold;
        if a == 0.0 {
            return (c <= 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY));
        }
        let disc = b * b - 4.0 * a * c;
        let scale = (b * b).max((4.0 * a * c).abs());
        if c > 0.0 && (disc <= 0.0 || disc.abs() < TANGENCY_EPS * scale) {
            return None;
        }
        if disc < 0.0 {
            // c <= 0 forces disc >= b^2 >= 0; only rounding gets here
            return Some((0.0, 0.0));
        }
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
        Some((r1.min(r2), r1.max(r2)))
    }
}

/// Earliest time in the common window at which the two segments are within
/// `threshold` of each other.
///
/// Returns the window start if the pair is already in contact there. Tangent
/// approaches (discriminant within [`TANGENCY_EPS`] of zero) are not contacts.
pub fn first_contact_time(a: &MotionSegment, b: &MotionSegment, threshold: f64) -> Result<Option<f64>, GeometryError> {
    if !(threshold > 0.0) {
        return Err(GeometryError::NonPositive("threshold"));
    }
    let rel = RelativeMotion::of(a, b)?;
    let len = rel.end - rel.start;
    if rel.dx.norm_sq() <= threshold * threshold {
        return Ok(Some(rel.start));
    }
    Ok(rel.contact_roots(threshold).filter(|&(lo, _)| lo >= 0.0 && lo <= len).map(|(lo, _)| rel.start + lo))
}

/// Closed sub-interval of the common window on which the pair is in contact.
pub fn contact_window(
    a: &MotionSegment,
    b: &MotionSegment,
    threshold: f64,
) -> Result<Option<(f64, f64)>, GeometryError> {
    if !(threshold > 0.0) {
        return Err(GeometryError::NonPositive("threshold"));
    }
    let rel = RelativeMotion::of(a, b)?;
    let len = rel.end - rel.start;
    let roots = rel.contact_roots(threshold);
    if rel.dx.norm_sq() <= threshold * threshold {
        let hi = roots.map_or(0.0, |(_, hi)| hi.clamp(0.0, len));
        return Ok(Some((rel.start, rel.start + hi)));
    }
    // both roots share a sign here; negative roots mean the pair is receding
    Ok(roots.filter(|&(lo, _)| lo >= 0.0 && lo <= len).map(|(lo, hi)| (rel.start + lo, rel.start + hi.min(len))))
}

/// Time and value of the minimum separation over the common window.
pub fn min_distance_on_interval(a: &MotionSegment, b: &MotionSegment) -> Result<(f64, f64), GeometryError> {
    let rel = RelativeMotion::of(a, b)?;
    let len = rel.end - rel.start;
    let a2 = rel.dv.norm_sq();
    let s = if a2 == 0.0 { 0.0 } else { (-rel.dx.dot(&rel.dv) / a2).clamp(0.0, len) };
    Ok((rel.start + s, rel.dx.add_scaled(&rel.dv, s).norm()))
}

/// Volume of the `n`-dimensional ball of the given radius. `n = 0` gives 1.
pub fn ball_volume(n: usize, radius: f64) -> f64 {
    // V_n = V_{n-2} * 2 pi R^2 / n
    let (mut vol, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0 * radius, 3) };
    let mut k = start;
    while k <= n {
        vol *= 2.0 * PI * radius * radius / k as f64;
        k += 2;
    }
    vol
}

/// Upper bound on the set of relative initial positions from which a second
/// particle can touch the first within `[0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaptureVolumeBound {
    pub d: usize,
    pub r: f64,
    pub v0: f64,
    pub tau: f64,
    /// Swept volume per unit time.
    pub beta: f64,
    /// Volume of the contact ball at `t = 0`.
    pub additive: f64,
}

impl CaptureVolumeBound {
    pub fn total(&self) -> f64 {
        self.beta * self.tau + self.additive
    }
}

/// The contact ball of radius `2r` sweeps a cylinder of cross-section
/// `vol_{d-1}(2r)` at relative speed at most `2 v0`.
///
/// In `d = 1` the cross-section is a point of unit measure, so `beta = 2 v0`.
pub fn capture_volume_bound(d: usize, r: f64, v0: f64, tau: f64) -> Result<CaptureVolumeBound, GeometryError> {
    if d == 0 || d > MAX_DIM {
        return Err(GeometryError::BadDimension(d));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeometryError::NonPositive("r"));
    }
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(GeometryError::NonPositive("v0"));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(GeometryError::NonPositive("tau"));
    }
    Ok(CaptureVolumeBound {
        d,
        r,
        v0,
        tau,
        beta: 2.0 * v0 * ball_volume(d - 1, 2.0 * r),
        additive: ball_volume(d, 2.0 * r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub std_error: f64,
}

/// Monte-Carlo volume of `{ y : dist(y, t (v1 - v2)) <= 2r for some t in [0, tau] }`,
/// the union of contact balls along the relative displacement line.
pub fn capture_volume_mc<R: Rng + ?Sized>(
    v1: &Vector,
    v2: &Vector,
    r: f64,
    tau: f64,
    samples: usize,
    rng: &mut R,
) -> Result<VolumeEstimate, GeometryError> {
    if v1.dim() != v2.dim() {
        return Err(GeometryError::DimensionMismatch(v1.dim(), v2.dim()));
    }
    if !(r > 0.0) {
        return Err(GeometryError::NonPositive("r"));
    }
    let d = v1.dim();
    let rad = 2.0 * r;
    let end = (*v1 - *v2) * tau;
    let mut lo = [0.0; MAX_DIM];
    let mut hi = [0.0; MAX_DIM];
    let mut box_vol = 1.0;
    for k in 0..d {
        let e = end.as_slice()[k];
        lo[k] = e.min(0.0) - rad;
        hi[k] = e.max(0.0) + rad;
        box_vol *= hi[k] - lo[k];
    }
    let len_sq = end.norm_sq();
    let mut hits = 0usize;
    let mut p = Vector::zeros(d);
    for _ in 0..samples {
        for (k, c) in p.as_mut_slice().iter_mut().enumerate() {
            *c = rng.random_range(lo[k]..hi[k]);
        }
        let s = if len_sq > 0.0 { (p.dot(&end) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
        if (p - end * s).norm_sq() <= rad * rad {
            hits += 1;
        }
    }
    let n = samples.max(1) as f64;
    let frac = hits as f64 / n;
    Ok(VolumeEstimate { volume: box_vol * frac, std_error: box_vol * (frac * (1.0 - frac) / n).sqrt() })
}
