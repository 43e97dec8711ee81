//! Sphere and capsule clearance queries plus an AABB broadphase.
//!
//! Every primitive is handled as a (possibly degenerate) segment inflated by
//! a radius, so all narrowphase queries reduce to segment-segment distance.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{Isometry3, Point3, Vector3};
use thiserror::Error;

use crate::kinematics::GroupId;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    #[error("non-finite coordinate in geometry query")]
    NonFiniteInput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere {
        center: Point3<f64>,
        radius: f64,
    },
    Capsule {
        p0: Point3<f64>,
        p1: Point3<f64>,
        radius: f64,
    },
}

impl Shape {
    /// Segment endpoints and radius; a sphere is a zero-length segment.
    pub fn segment(&self) -> (Point3<f64>, Point3<f64>, f64) {
        match *self {
            Shape::Sphere { center, radius } => (center, center, radius),
            Shape::Capsule { p0, p1, radius } => (p0, p1, radius),
        }
    }

    pub fn radius(&self) -> f64 {
        self.segment().2
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> Shape {
        match *self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: iso * center,
                radius,
            },
            Shape::Capsule { p0, p1, radius } => Shape::Capsule {
                p0: iso * p0,
                p1: iso * p1,
                radius,
            },
        }
    }

    pub fn aabb(&self) -> Aabb {
        let (p0, p1, r) = self.segment();
        let r = Vector3::repeat(r);
        Aabb {
            mins: p0.inf(&p1) - r,
            maxs: p0.sup(&p1) + r,
        }
    }

    fn is_finite(&self) -> bool {
        let (p0, p1, r) = self.segment();
        p0.iter().chain(p1.iter()).all(|c| c.is_finite()) && r.is_finite()
    }
}

/// Which body a primitive belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Owner {
    Static(usize),
    Link { group: GroupId, link: usize },
}

impl Owner {
    pub fn group(&self) -> Option<&GroupId> {
        match self {
            Owner::Static(_) => None,
            Owner::Link { group, .. } => Some(group),
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Static(i) => write!(f, "static/{i}"),
            Owner::Link { group, link } => write!(f, "{group}/{link}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedPrimitive {
    pub shape: Shape,
    pub owner: Owner,
}

impl PlacedPrimitive {
    pub fn segment(&self) -> (Point3<f64>, Point3<f64>, f64) {
        self.shape.segment()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clearance {
    /// Surface-to-surface distance; negative on penetration.
    pub signed_distance: f64,
    pub witness: (Owner, Owner),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub mins: Point3<f64>,
    pub maxs: Point3<f64>,
}

impl Aabb {
    pub fn inflated(&self, amount: f64) -> Aabb {
        let d = Vector3::repeat(amount);
        Aabb {
            mins: self.mins - d,
            maxs: self.maxs + d,
        }
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.mins[i] <= other.maxs[i] && other.mins[i] <= self.maxs[i])
    }

    /// Euclidean gap between the boxes; a lower bound on the distance of
    /// anything they contain.
    pub fn distance(&self, other: &Aabb) -> f64 {
        (0..3)
            .map(|i| {
                let gap = (other.mins[i] - self.maxs[i]).max(self.mins[i] - other.maxs[i]);
                gap.max(0.0).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn lexicographic(a: &[Point3<f64>; 2], b: &[Point3<f64>; 2]) -> Ordering {
    a.iter()
        .flat_map(|p| p.iter())
        .zip(b.iter().flat_map(|p| p.iter()))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Distance between the closest points of segments `a0a1` and `b0b1`.
/// Degenerate (zero-length) segments are treated as points.
pub fn segment_segment_distance(
    a0: &Point3<f64>,
    a1: &Point3<f64>,
    b0: &Point3<f64>,
    b1: &Point3<f64>,
) -> Result<f64, GeometryError> {
    if ![a0, a1, b0, b1]
        .iter()
        .all(|p| p.iter().all(|c| c.is_finite()))
    {
        return Err(GeometryError::NonFiniteInput);
    }
    // Fixed operand order makes the result bit-identical under swapping.
    let (a, b) = ([*a0, *a1], [*b0, *b1]);
    let (first, second) = if lexicographic(&a, &b).is_gt() {
        (b, a)
    } else {
        (a, b)
    };
    let (c1, c2) = closest_points(&first[0], &first[1], &second[0], &second[1]);
    Ok((c1 - c2).norm())
}

/// Closest points between two segments (Ericson, Real-Time Collision
/// Detection, 5.1.9), with clamping for degenerate and parallel cases.
fn closest_points(
    p1: &Point3<f64>,
    q1: &Point3<f64>,
    p2: &Point3<f64>,
    q2: &Point3<f64>,
) -> (Point3<f64>, Point3<f64>) {
    const EPS: f64 = 1e-18;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);

    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    (p1 + d1 * s, p2 + d2 * t)
}

/// Signed surface distance between two primitives. Symmetric exactly in
/// its value; the witness follows argument order.
pub fn primitive_clearance(
    a: &PlacedPrimitive,
    b: &PlacedPrimitive,
) -> Result<Clearance, GeometryError> {
    if !a.shape.is_finite() || !b.shape.is_finite() {
        return Err(GeometryError::NonFiniteInput);
    }
    let (a0, a1, ra) = a.segment();
    let (b0, b1, rb) = b.segment();
    let axis = segment_segment_distance(&a0, &a1, &b0, &b1)?;
    Ok(Clearance {
        signed_distance: axis - (ra + rb),
        witness: (a.owner.clone(), b.owner.clone()),
    })
}

/// Index pairs `(i, j)` into `set_a` x `set_b` whose bounding boxes, each
/// inflated by `margin / 2`, overlap. Sorted by `(i, j)`.
pub fn broadphase_pairs(
    set_a: &[PlacedPrimitive],
    set_b: &[PlacedPrimitive],
    margin: f64,
) -> Vec<(usize, usize)> {
    let half = margin.max(0.0) / 2.0;
    let boxes_a: Vec<Aabb> = set_a.iter().map(|p| p.shape.aabb().inflated(half)).collect();
    let boxes_b: Vec<Aabb> = set_b.iter().map(|p| p.shape.aabb().inflated(half)).collect();

    // Sweep along x: B sorted by min x, scan while min x <= A's max x.
    let mut order: Vec<usize> = (0..boxes_b.len()).collect();
    order.sort_by(|&i, &j| boxes_b[i].mins.x.total_cmp(&boxes_b[j].mins.x));

    let mut pairs = Vec::new();
    for (i, ba) in boxes_a.iter().enumerate() {
        let end = order.partition_point(|&j| boxes_b[j].mins.x <= ba.maxs.x);
        pairs.extend(
            order[..end]
                .iter()
                .filter(|&&j| boxes_b[j].intersects(ba))
                .map(|&j| (i, j)),
        );
    }
    pairs.sort_unstable();
    pairs
}

/// Exact minimum clearance over the pairs of `set_a` x `set_b` accepted by
/// `keep`. Pairs inside the broadphase margin are evaluated first; the rest
/// are skipped whenever their box gap already exceeds the best distance.
/// Returns `None` when no pair is accepted.
pub fn closest_pair<F>(
    set_a: &[PlacedPrimitive],
    set_b: &[PlacedPrimitive],
    margin: f64,
    keep: F,
) -> Result<Option<(usize, usize, Clearance)>, GeometryError>
where
    F: Fn(usize, usize) -> bool,
{
    let mut best: Option<(usize, usize, Clearance)> = None;
    let consider = |i: usize, j: usize, best: &mut Option<(usize, usize, Clearance)>| {
        let c = primitive_clearance(&set_a[i], &set_b[j])?;
        if best
            .as_ref()
            .is_none_or(|(_, _, b)| c.signed_distance < b.signed_distance)
        {
            *best = Some((i, j, c));
        }
        Ok::<_, GeometryError>(())
    };

    let candidates = broadphase_pairs(set_a, set_b, margin);
    for &(i, j) in candidates.iter().filter(|&&(i, j)| keep(i, j)) {
        consider(i, j, &mut best)?;
    }
    if best
        .as_ref()
        .is_some_and(|(_, _, b)| b.signed_distance <= margin)
    {
        return Ok(best);
    }

    let boxes_a: Vec<Aabb> = set_a.iter().map(|p| p.shape.aabb()).collect();
    let boxes_b: Vec<Aabb> = set_b.iter().map(|p| p.shape.aabb()).collect();
    for i in 0..set_a.len() {
        for j in 0..set_b.len() {
            if !keep(i, j) || candidates.binary_search(&(i, j)).is_ok() {
                continue;
            }
            if let Some((_, _, b)) = &best {
                if boxes_a[i].distance(&boxes_b[j]) >= b.signed_distance {
                    continue;
                }
            }
            consider(i, j, &mut best)?;
        }
    }
    Ok(best)
}
