//! Convexity, coconvexity against an inflection partition, and k-monotonicity.
//!
//! Polynomial checks are exact: the minimum of `±p''` on each segment is found
//! among the segment endpoints and the real roots of `p'''`. Sampled checks are
//! used only for black-box functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomials::ChebyshevPolynomial;

pub const DEFAULT_SHAPE_TOL: f64 = 1e-9;

/// Minimum separation between inflection points (and from `±1`).
pub const MIN_INFLECTION_GAP: f64 = 1e-6;

/// Points `1 > y₁ > y₂ > … > y_s > -1` at which convexity alternates.
///
/// With the sentinels `y₀ = 1` and `y_{s+1} = -1`, segment `i` is
/// `[y_{i+1}, y_i]`; segment 0 (the rightmost) is convex and signs alternate
/// leftwards. `s = 0` is plain convexity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InflectionPartition {
    points: Vec<f64>,
}

/// One segment of `[-1, 1]` with the required sign of `p''` on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    /// `+1` convex, `-1` concave.
    pub sign: f64,
}

/// Which end of the partition carries the convex segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    RightmostConvex,
    RightmostConcave,
}

impl InflectionPartition {
    /// `points` must be strictly decreasing and inside `(-1, 1)`.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        for &y in &points {
            if !(y.abs() < 1.0 - MIN_INFLECTION_GAP) {
                return Err(Error::Parameter(format!("inflection point {y} not inside (-1, 1)")));
            }
        }
        for w in points.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::Parameter("inflection points must be strictly decreasing".into()));
            }
            if w[0] - w[1] < MIN_INFLECTION_GAP {
                return Err(Error::Parameter(format!(
                    "inflection points {} and {} closer than {MIN_INFLECTION_GAP}",
                    w[0], w[1]
                )));
            }
        }
        Ok(InflectionPartition { points })
    }

    /// Sorts the points into decreasing order before validating.
    pub fn from_unsorted(mut points: Vec<f64>) -> Result<Self> {
        points.sort_by(|a, b| b.total_cmp(a));
        Self::new(points)
    }

    pub fn empty() -> Self {
        InflectionPartition { points: Vec::new() }
    }

    pub fn s(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `y_i` with sentinels: `y(0) = 1`, `y(s+1) = -1`.
    pub fn y(&self, i: usize) -> f64 {
        match i {
            0 => 1.0,
            i if i <= self.points.len() => self.points[i - 1],
            _ => -1.0,
        }
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.segments_oriented(Orientation::RightmostConvex)
    }

    pub fn segments_oriented(&self, orientation: Orientation) -> Vec<Segment> {
        let base = match orientation {
            Orientation::RightmostConvex => 1.0,
            Orientation::RightmostConcave => -1.0,
        };
        (0..=self.s())
            .map(|i| Segment {
                lo: self.y(i + 1),
                hi: self.y(i),
                sign: if i % 2 == 0 { base } else { -base },
            })
            .collect()
    }

    /// Required sign of `f''` at `x` (`0` exactly at an inflection point).
    pub fn sign_at(&self, x: f64) -> f64 {
        if self.points.contains(&x) {
            return 0.0;
        }
        let crossed = self.points.iter().filter(|&&y| y > x).count();
        if crossed % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Exact minimum of `sign · p''` on one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentResidual {
    pub segment: Segment,
    pub min: f64,
    pub argmin: f64,
    /// `max(1, max |p''|)` over the segment.
    pub scale: f64,
}

/// Per-segment residuals of the shape condition for a polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeCertificate {
    pub segments: Vec<SegmentResidual>,
}

impl ShapeCertificate {
    pub fn passes(&self, tol: f64) -> bool {
        self.segments.iter().all(|s| s.min >= -tol * s.scale)
    }

    /// Most negative `min / scale` (0 or positive when the shape holds).
    pub fn worst_relative(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.min / s.scale)
            .fold(f64::INFINITY, f64::min)
    }

    /// Most negative raw residual.
    pub fn worst(&self) -> f64 {
        self.segments.iter().map(|s| s.min).fold(f64::INFINITY, f64::min)
    }

    /// Locations where the residual is violated beyond `tol`.
    pub fn violations(&self, tol: f64) -> Vec<f64> {
        self.segments
            .iter()
            .filter(|s| s.min < -tol * s.scale)
            .map(|s| s.argmin)
            .collect()
    }
}

/// Exact residuals of `(-1)^i p'' ≥ 0` on every segment of `y`.
pub fn shape_certificate(p: &ChebyshevPolynomial, y: &InflectionPartition, orientation: Orientation) -> ShapeCertificate {
    let p2 = p.nth_derivative(2);
    let critical = p2.derivative().roots_in_unit();
    let segments = y
        .segments_oriented(orientation)
        .into_iter()
        .map(|seg| {
            let e = p2.extrema_with_critical(&critical, seg.lo, seg.hi);
            let (min, argmin) = if seg.sign > 0.0 {
                (e.min, e.argmin)
            } else {
                (-e.max, e.argmax)
            };
            SegmentResidual {
                segment: seg,
                min,
                argmin,
                scale: 1f64.max(e.max.abs()).max(e.min.abs()),
            }
        })
        .collect();
    ShapeCertificate { segments }
}

/// `p'' ≥ -tol·scale` on `[-1, 1]`.
pub fn is_convex(p: &ChebyshevPolynomial, tol: f64) -> bool {
    shape_certificate(p, &InflectionPartition::empty(), Orientation::RightmostConvex).passes(tol)
}

/// Coconvexity with the rightmost segment convex.
pub fn is_coconvex(p: &ChebyshevPolynomial, y: &InflectionPartition, tol: f64) -> bool {
    shape_certificate(p, y, Orientation::RightmostConvex).passes(tol)
}

pub fn is_coconvex_oriented(p: &ChebyshevPolynomial, y: &InflectionPartition, orientation: Orientation, tol: f64) -> bool {
    shape_certificate(p, y, orientation).passes(tol)
}

/// All `k`-th order divided differences over consecutive points of a uniform
/// grid on `[-1, 1]` are `≥ -tol · max(1, max |divided difference|)`.
pub fn is_k_monotone<F: Fn(f64) -> f64>(f: F, k: usize, grid_size: usize, tol: f64) -> Result<bool> {
    if k == 0 {
        return Err(Error::Parameter("k-monotonicity needs k >= 1".into()));
    }
    if grid_size < k + 1 {
        return Err(Error::Parameter(format!("grid of {grid_size} points too small for order {k}")));
    }
    let h = 2.0 / (grid_size - 1) as f64;
    let values: Vec<f64> = (0..grid_size).map(|i| f(-1.0 + h * i as f64)).collect();
    let mut diffs = values;
    for _ in 0..k {
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let denom = factorial * h.powi(k as i32);
    let dd: Vec<f64> = diffs.iter().map(|d| d / denom).collect();
    let scale = dd.iter().fold(1f64, |m, d| m.max(d.abs()));
    Ok(dd.iter().all(|&d| d >= -tol * scale))
}

/// `f''(x)(x - c) ≥ -tol` on a dense sample of the window `[a, b]`.
pub fn convexity_sign_condition<F: Fn(f64) -> f64>(f2: F, c: f64, window: (f64, f64), tol: f64) -> Result<bool> {
    let (a, b) = window;
    if !(a >= -1.0 && b <= 1.0 && a <= b) {
        return Err(Error::Domain(format!("window [{a}, {b}] not inside [-1, 1]")));
    }
    const SAMPLES: usize = 2049;
    Ok((0..SAMPLES).all(|i| {
        let x = a + (b - a) * i as f64 / (SAMPLES - 1) as f64;
        f2(x) * (x - c) >= -tol
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(c: &[f64]) -> ChebyshevPolynomial {
        ChebyshevPolynomial::from_power(c).unwrap()
    }

    #[test]
    fn convexity_examples() {
        assert!(is_convex(&power(&[0.0, 0.0, 1.0]), DEFAULT_SHAPE_TOL));
        assert!(!is_convex(&power(&[0.0, 0.0, 0.0, 1.0]), DEFAULT_SHAPE_TOL));
        assert!(is_convex(&power(&[0.0, 0.0, 0.0, 0.0, 1.0]), DEFAULT_SHAPE_TOL));
    }

    #[test]
    fn coconvexity_examples() {
        let cube = power(&[0.0, 0.0, 0.0, 1.0]);
        let y0 = InflectionPartition::new(vec![0.0]).unwrap();
        let y_half = InflectionPartition::new(vec![0.5]).unwrap();
        assert!(is_coconvex(&cube, &y0, DEFAULT_SHAPE_TOL));
        assert!(!is_coconvex(&cube, &y_half, DEFAULT_SHAPE_TOL));
        assert!(!is_coconvex(&cube.neg(), &y0, DEFAULT_SHAPE_TOL));
        assert!(is_coconvex_oriented(&cube.neg(), &y0, Orientation::RightmostConcave, DEFAULT_SHAPE_TOL));
    }

    #[test]
    fn partition_validation() {
        assert!(InflectionPartition::new(vec![0.5, 0.5]).is_err());
        assert!(InflectionPartition::new(vec![-0.5, 0.5]).is_err());
        assert!(InflectionPartition::new(vec![1.0]).is_err());
        assert!(InflectionPartition::new(vec![0.3, 0.3 - 1e-7]).is_err());
        let y = InflectionPartition::from_unsorted(vec![-0.5, 0.5, 0.0]).unwrap();
        assert_eq!(y.points(), &[0.5, 0.0, -0.5]);
        assert_eq!(y.y(0), 1.0);
        assert_eq!(y.y(4), -1.0);
        let segs = y.segments();
        assert_eq!(segs.len(), 4);
        assert_eq!((segs[0].lo, segs[0].hi, segs[0].sign), (0.5, 1.0, 1.0));
        assert_eq!((segs[3].lo, segs[3].hi, segs[3].sign), (-1.0, -0.5, -1.0));
        assert_eq!(y.sign_at(0.7), 1.0);
        assert_eq!(y.sign_at(0.2), -1.0);
        assert_eq!(y.sign_at(-0.9), -1.0);
    }

    #[test]
    fn k_monotone_examples() {
        assert!(is_k_monotone(|x| x * x, 2, 1001, 1e-9).unwrap());
        assert!(is_k_monotone(|x| x * x * x, 3, 1001, 1e-9).unwrap());
        assert!(!is_k_monotone(|x| -x * x, 2, 1001, 1e-9).unwrap());
        assert!(is_k_monotone(|x| x, 0, 10, 1e-9).is_err());
    }

    #[test]
    fn sign_condition_examples() {
        assert!(convexity_sign_condition(|x| 6.0 * x, 0.0, (-0.5, 0.5), 1e-12).unwrap());
        assert!(!convexity_sign_condition(|_| 2.0, 0.5, (0.0, 1.0), 1e-12).unwrap());
        assert!(convexity_sign_condition(|_| 0.0, 0.3, (-1.0, 1.0), 0.0).unwrap());
    }

    #[test]
    fn certificate_reports_argmin() {
        let cube = power(&[0.0, 0.0, 0.0, 1.0]);
        let cert = shape_certificate(&cube, &InflectionPartition::empty(), Orientation::RightmostConvex);
        assert_eq!(cert.segments.len(), 1);
        assert!((cert.worst() + 6.0).abs() < 1e-12);
        assert_eq!(cert.violations(1e-9), vec![-1.0]);
    }
}
