//! Interval and axis-aligned box arithmetic.
//!
//! Every region handled by the verifier is a Cartesian product of half-open
//! intervals `(lower, upper]`. Leaf regions of a decision tree, intersections
//! of leaf regions across trees, and perturbation-ball queries all live in
//! this representation, so the whole engine reduces to the operations below:
//! intersection, emptiness, and point-to-box l-infinity distance.

use std::fmt;

use thiserror::Error;

/// Errors from box/interval operations with violated preconditions.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("operation requires a nonempty box")]
    EmptyBox,
    #[error("feature index {feature} out of range for dimension {dim}")]
    FeatureOutOfRange { feature: usize, dim: usize },
}

/// A half-open interval `(lower, upper]` over the extended reals.
///
/// `lower = -inf` and `upper = +inf` are both allowed; the universal
/// interval is `(-inf, +inf]`. The interval is empty unless `lower < upper`
/// strictly, so two intervals that merely touch at a shared endpoint have an
/// empty intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// The whole real line, `(-inf, +inf]`.
    pub const UNIVERSE: Interval = Interval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Interval {
        debug_assert!(!lower.is_nan() && !upper.is_nan());
        Interval { lower, upper }
    }

    /// Nonempty iff `lower < upper` strictly.
    pub fn is_empty(&self) -> bool {
        !(self.lower < self.upper)
    }

    pub fn is_universe(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }

    /// `(max(lower), min(upper)]`; the result may be empty.
    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lower: self.lower.max(other.lower),
            upper: self.upper.min(other.upper),
        }
    }

    /// Membership under half-open semantics: `lower < x <= upper`.
    pub fn contains(&self, x: f64) -> bool {
        self.lower < x && x <= self.upper
    }

    /// Minimal perturbation moving `x` into the interval (infimum semantics).
    ///
    /// Returns 0 when `x` is inside, `x - upper` when `x` lies above, and
    /// `lower - x` when `x <= lower`. A point sitting exactly on the open
    /// lower boundary gets distance 0: the interval can be entered with an
    /// arbitrarily small push, and reporting the infimum keeps every bound
    /// built on top of this conservative.
    pub fn distance_to(&self, x: f64) -> f64 {
        if self.contains(x) {
            0.0
        } else if x > self.upper {
            x - self.upper
        } else {
            self.lower - x
        }
    }

    /// Smallest half-open interval containing the closed interval `[lo, hi]`.
    ///
    /// Half-open intervals cannot represent their own lower endpoint, so the
    /// lower bound is pushed one representable value down. Used to express
    /// closed perturbation balls in box form without losing the lower face.
    pub fn hull_of_closed(lo: f64, hi: f64) -> Interval {
        Interval::new(lo.next_down(), hi)
    }

    /// A half-open interval containing exactly the point `x` (among floats).
    pub fn point(x: f64) -> Interval {
        Interval::new(x.next_down(), x)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.lower, self.upper)
    }
}

/// An axis-aligned box: a sparse, feature-sorted list of [`Interval`]
/// constraints.
///
/// Feature indices absent from the list are unconstrained (universal), and
/// universal intervals are never stored, which keeps the representation
/// canonical and makes intersection cost proportional to the number of
/// active constraints rather than to the ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    dim: usize,
    constraints: Vec<(usize, Interval)>,
}

impl AxisBox {
    /// The unconstrained box over `dim` features.
    pub fn universe(dim: usize) -> AxisBox {
        AxisBox {
            dim,
            constraints: Vec::new(),
        }
    }

    /// Builds a box from `(feature, interval)` constraints.
    ///
    /// Universal intervals are dropped and duplicate features are combined
    /// by intersection; empty intervals are kept (the box is then empty).
    /// Feature indices must be `< dim`.
    pub fn new(
        dim: usize,
        constraints: impl IntoIterator<Item = (usize, Interval)>,
    ) -> Result<AxisBox, GeometryError> {
        let mut list: Vec<(usize, Interval)> = Vec::new();
        for (feature, interval) in constraints {
            if feature >= dim {
                return Err(GeometryError::FeatureOutOfRange { feature, dim });
            }
            list.push((feature, interval));
        }
        list.sort_by_key(|&(f, _)| f);
        let mut out: Vec<(usize, Interval)> = Vec::with_capacity(list.len());
        for (feature, interval) in list {
            match out.last_mut() {
                Some((f, existing)) if *f == feature => *existing = existing.intersect(&interval),
                _ => out.push((feature, interval)),
            }
        }
        out.retain(|(_, iv)| !iv.is_universe());
        Ok(AxisBox {
            dim,
            constraints: out,
        })
    }

    /// The degenerate box containing exactly the point `x`.
    pub fn from_point(x: &[f64]) -> AxisBox {
        let constraints = x
            .iter()
            .enumerate()
            .map(|(t, &v)| (t, Interval::point(v)))
            .collect();
        AxisBox {
            dim: x.len(),
            constraints,
        }
    }

    /// Smallest box containing the closed ball `{x' : |x' - x|_inf <= eps}`.
    pub fn ball_hull(x: &[f64], eps: f64) -> AxisBox {
        debug_assert!(eps >= 0.0);
        let constraints = x
            .iter()
            .enumerate()
            .map(|(t, &v)| (t, Interval::hull_of_closed(v - eps, v + eps)))
            .collect();
        AxisBox {
            dim: x.len(),
            constraints,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The stored constraint for `feature`, or the universal interval.
    pub fn constraint(&self, feature: usize) -> Interval {
        self.constraints
            .binary_search_by_key(&feature, |&(f, _)| f)
            .map(|i| self.constraints[i].1)
            .unwrap_or(Interval::UNIVERSE)
    }

    /// Iterates stored (non-universal) constraints in feature order.
    pub fn constraints(&self) -> impl Iterator<Item = (usize, Interval)> + '_ {
        self.constraints.iter().copied()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Empty iff any stored interval is empty.
    pub fn is_empty(&self) -> bool {
        self.constraints.iter().any(|(_, iv)| iv.is_empty())
    }

    /// Replaces the constraint on one feature; universal entries are removed.
    pub(crate) fn with_constraint(&self, feature: usize, interval: Interval) -> AxisBox {
        let mut out = self.clone();
        match out.constraints.binary_search_by_key(&feature, |&(f, _)| f) {
            Ok(i) => {
                if interval.is_universe() {
                    out.constraints.remove(i);
                } else {
                    out.constraints[i].1 = interval;
                }
            }
            Err(i) => {
                if !interval.is_universe() {
                    out.constraints.insert(i, (feature, interval));
                }
            }
        }
        out
    }

    /// Coordinatewise intersection; `Ok(None)` means the result is empty.
    pub fn intersect(&self, other: &AxisBox) -> Result<Option<AxisBox>, GeometryError> {
        if self.dim != other.dim {
            return Err(GeometryError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let (a, b) = (&self.constraints, &other.constraints);
        let mut merged = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let combined = match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    let entry = a[i];
                    i += 1;
                    entry
                }
                std::cmp::Ordering::Greater => {
                    let entry = b[j];
                    j += 1;
                    entry
                }
                std::cmp::Ordering::Equal => {
                    let entry = (a[i].0, a[i].1.intersect(&b[j].1));
                    i += 1;
                    j += 1;
                    entry
                }
            };
            if combined.1.is_empty() {
                return Ok(None);
            }
            merged.push(combined);
        }
        for &entry in a[i..].iter().chain(&b[j..]) {
            if entry.1.is_empty() {
                return Ok(None);
            }
            merged.push(entry);
        }
        Ok(Some(AxisBox {
            dim: self.dim,
            constraints: merged,
        }))
    }

    /// Allocation-free emptiness test for the intersection of two boxes that
    /// are themselves nonempty: only features constrained on both sides can
    /// produce an empty coordinate.
    pub fn intersects(&self, other: &AxisBox) -> Result<bool, GeometryError> {
        if self.dim != other.dim {
            return Err(GeometryError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        debug_assert!(!self.is_empty() && !other.is_empty());
        let (a, b) = (&self.constraints, &other.constraints);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if a[i].1.intersect(&b[j].1).is_empty() {
                        return Ok(false);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(true)
    }

    /// Per-coordinate minimal perturbation of `x` into the box, with its
    /// l-infinity norm. Unconstrained coordinates contribute 0.
    pub fn distance(&self, x: &[f64]) -> Result<PointDistance, GeometryError> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                left: x.len(),
                right: self.dim,
            });
        }
        if self.is_empty() {
            return Err(GeometryError::EmptyBox);
        }
        let mut per_coordinate = vec![0.0; self.dim];
        let mut norm = 0.0f64;
        for &(feature, interval) in &self.constraints {
            let d = interval.distance_to(x[feature]);
            per_coordinate[feature] = d;
            norm = norm.max(d);
        }
        Ok(PointDistance {
            per_coordinate,
            norm,
        })
    }

    /// Whether the box comes within `eps` (l-infinity, infimum semantics) of
    /// `x`. Boundary-touching boxes are kept, which can only make the bounds
    /// built on top more conservative.
    pub fn intersects_ball(&self, x: &[f64], eps: f64) -> Result<bool, GeometryError> {
        debug_assert!(eps >= 0.0);
        Ok(self.distance(x)?.norm <= eps)
    }

    /// Whether every float point of `x` lies in the box (all coordinates
    /// inside their half-open intervals).
    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dim
            && self
                .constraints
                .iter()
                .all(|&(f, interval)| interval.contains(x[f]))
    }
}

/// Result of [`AxisBox::distance`].
#[derive(Debug, Clone, PartialEq)]
pub struct PointDistance {
    pub per_coordinate: Vec<f64>,
    pub norm: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn interval_intersect_universe_is_identity() {
        let a = Interval::UNIVERSE;
        let b = iv(0.2, 0.7);
        assert_eq!(a.intersect(&b), b);
        assert_eq!(b.intersect(&a), b);
    }

    #[test]
    fn interval_boundary_touch_is_empty() {
        let a = iv(0.0, 0.5);
        let b = iv(0.5, 1.0);
        let c = a.intersect(&b);
        assert_eq!(c, iv(0.5, 0.5));
        assert!(c.is_empty());
    }

    #[test]
    fn interval_intersect_overlap() {
        assert_eq!(iv(0.1, 0.8).intersect(&iv(0.3, 0.9)), iv(0.3, 0.8));
    }

    #[test]
    fn box_intersect_universe_identity() {
        let b = AxisBox::new(2, [(0, iv(0.0, 1.0))]).unwrap();
        let u = AxisBox::universe(2);
        assert_eq!(u.intersect(&b).unwrap(), Some(b.clone()));
        assert_eq!(b.intersect(&u).unwrap(), Some(b));
    }

    #[test]
    fn box_intersect_disjoint_supports_merge() {
        let a = AxisBox::new(2, [(0, iv(0.0, 1.0))]).unwrap();
        let b = AxisBox::new(2, [(1, iv(2.0, 3.0))]).unwrap();
        let c = a.intersect(&b).unwrap().unwrap();
        assert_eq!(c.constraint(0), iv(0.0, 1.0));
        assert_eq!(c.constraint(1), iv(2.0, 3.0));
        assert_eq!(c.num_constraints(), 2);
    }

    #[test]
    fn box_intersect_boundary_touch_empty() {
        let a = AxisBox::new(1, [(0, iv(0.0, 0.5))]).unwrap();
        let b = AxisBox::new(1, [(0, iv(0.5, 1.0))]).unwrap();
        assert_eq!(a.intersect(&b).unwrap(), None);
    }

    #[test]
    fn box_intersect_dimension_mismatch() {
        let a = AxisBox::universe(2);
        let b = AxisBox::universe(3);
        assert_eq!(
            a.intersect(&b),
            Err(GeometryError::DimensionMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn universal_constraints_are_not_stored() {
        let b = AxisBox::new(3, [(1, Interval::UNIVERSE), (2, iv(0.0, 1.0))]).unwrap();
        assert_eq!(b.num_constraints(), 1);
        assert_eq!(b.constraint(1), Interval::UNIVERSE);
    }

    #[test]
    fn distance_inside_is_zero() {
        let b = AxisBox::new(2, [(0, iv(0.2, 0.7))]).unwrap();
        let d = b.distance(&[0.5, 0.5]).unwrap();
        assert_eq!(d.per_coordinate, vec![0.0, 0.0]);
        assert_eq!(d.norm, 0.0);
    }

    #[test]
    fn distance_above_upper() {
        let b = AxisBox::new(1, [(0, iv(0.2, 0.7))]).unwrap();
        let d = b.distance(&[0.9]).unwrap();
        assert!((d.per_coordinate[0] - 0.2).abs() < 1e-15);
        assert!((d.norm - 0.2).abs() < 1e-15);
    }

    #[test]
    fn distance_on_open_lower_boundary_is_zero() {
        let b = AxisBox::new(1, [(0, iv(0.2, 0.7))]).unwrap();
        let d = b.distance(&[0.2]).unwrap();
        assert_eq!(d.per_coordinate, vec![0.0]);
        assert_eq!(d.norm, 0.0);
    }

    #[test]
    fn distance_on_empty_box_is_an_error() {
        let b = AxisBox::new(1, [(0, iv(0.7, 0.2))]).unwrap();
        assert_eq!(b.distance(&[0.0]), Err(GeometryError::EmptyBox));
    }

    #[test]
    fn ball_intersection_thresholds() {
        let b = AxisBox::new(1, [(0, iv(0.2, 0.7))]).unwrap();
        assert!(b.intersects_ball(&[0.5], 0.1).unwrap());
        // Dyadic values keep the boundary case exact: distance from 1.0 to
        // (0.25, 0.75] is exactly 0.25.
        let b2 = AxisBox::new(1, [(0, iv(0.25, 0.75))]).unwrap();
        assert!(b2.intersects_ball(&[1.0], 0.25).unwrap());
        assert!(!b2.intersects_ball(&[1.0], 0.1).unwrap());
        assert!(!b2.intersects_ball(&[1.0], 0.24).unwrap());
    }

    #[test]
    fn ball_hull_contains_closed_ball_faces() {
        let hull = AxisBox::ball_hull(&[0.5], 0.25);
        assert!(hull.contains_point(&[0.25]));
        assert!(hull.contains_point(&[0.75]));
        assert!(!hull.contains_point(&[0.75 + 1e-9]));
    }

    #[test]
    fn point_box_contains_only_the_point() {
        let p = AxisBox::from_point(&[0.3, 0.6]);
        assert!(p.contains_point(&[0.3, 0.6]));
        assert!(!p.contains_point(&[0.3, 0.6 + 1e-12]));
        assert!(!p.contains_point(&[0.3 - 1e-12, 0.6]));
    }
}
