//! Compact metric spaces and the product metric.
//!
//! Four kinds of space are supported: closed intervals, axis-aligned boxes
//! under the sup metric, geodesic circles, and finite point sets with an
//! explicit distance matrix. Every space exposes a distance oracle, a
//! diameter bound and a seeded sampler; all are immutable after construction.

use crate::error::{Error, Result};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// A point of a [`CompactSpace`]. Scalars live on intervals and circles,
/// vectors in boxes, indices in finite spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Scalar(f64),
    Vector(Vec<f64>),
    Index(usize),
}

impl Point {
    pub fn scalar(&self) -> Result<f64> {
        match self {
            Point::Scalar(x) => Ok(*x),
            other => Err(Error::PointMismatch(format!(
                "expected scalar point, got {other:?}"
            ))),
        }
    }

    pub fn vector(&self) -> Result<&[f64]> {
        match self {
            Point::Vector(v) => Ok(v),
            other => Err(Error::PointMismatch(format!(
                "expected vector point, got {other:?}"
            ))),
        }
    }

    pub fn index(&self) -> Result<usize> {
        match self {
            Point::Index(i) => Ok(*i),
            other => Err(Error::PointMismatch(format!(
                "expected finite-space index, got {other:?}"
            ))),
        }
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::Scalar(x)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum CompactSpace {
    /// Closed interval `[lo, hi]` with the usual metric.
    Interval { lo: f64, hi: f64 },
    /// Axis-aligned box, distance = max over axes of coordinate distance.
    Box { bounds: Vec<[f64; 2]> },
    /// Circle of the given circumference with arc-length (geodesic) metric.
    /// Points are arc-length coordinates in `[0, circumference)`.
    Circle { circumference: f64 },
    /// Finite point set with an explicit distance matrix.
    Finite { dist: Vec<Vec<f64>> },
}

impl CompactSpace {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(CompactSpace::Interval { lo, hi })
    }

    pub fn hyperbox(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() || bounds.iter().any(|b| !(b[0] < b[1])) {
            return Err(Error::invalid("box needs nonempty axes with lo < hi"));
        }
        Ok(CompactSpace::Box { bounds })
    }

    pub fn circle(circumference: f64) -> Result<Self> {
        if !(circumference > 0.0) {
            return Err(Error::invalid("circle circumference must be positive"));
        }
        Ok(CompactSpace::Circle { circumference })
    }

    /// Validates symmetry, zero diagonal and the triangle inequality.
    pub fn finite(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        if n == 0 || dist.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("distance matrix must be square and nonempty"));
        }
        let tol = 1e-12;
        for i in 0..n {
            if dist[i][i].abs() > tol {
                return Err(Error::invalid("distance matrix has nonzero diagonal"));
            }
            for j in 0..n {
                if dist[i][j] < 0.0 || (dist[i][j] - dist[j][i]).abs() > tol {
                    return Err(Error::invalid("distance matrix not symmetric nonnegative"));
                }
                for k in 0..n {
                    if dist[i][j] > dist[i][k] + dist[k][j] + tol {
                        return Err(Error::invalid("distance matrix violates triangle inequality"));
                    }
                }
            }
        }
        Ok(CompactSpace::Finite { dist })
    }

    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        match (self, a, b) {
            (CompactSpace::Interval { .. }, Point::Scalar(x), Point::Scalar(y)) => (x - y).abs(),
            (CompactSpace::Box { .. }, Point::Vector(x), Point::Vector(y)) => {
                assert_eq!(x.len(), y.len(), "dimension mismatch");
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }
            (CompactSpace::Circle { circumference }, Point::Scalar(x), Point::Scalar(y)) => {
                let d = (x - y).rem_euclid(*circumference);
                d.min(circumference - d)
            }
            (CompactSpace::Finite { dist }, Point::Index(i), Point::Index(j)) => dist[*i][*j],
            _ => panic!("point kind does not match space kind: {a:?} / {b:?} on {self:?}"),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            CompactSpace::Interval { lo, hi } => hi - lo,
            CompactSpace::Box { bounds } => bounds
                .iter()
                .map(|b| b[1] - b[0])
                .fold(0.0, f64::max),
            CompactSpace::Circle { circumference } => circumference / 2.0,
            CompactSpace::Finite { dist } => dist
                .iter()
                .flat_map(|row| row.iter().copied())
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (CompactSpace::Interval { lo, hi }, Point::Scalar(x)) => *lo <= *x && *x <= *hi,
            (CompactSpace::Box { bounds }, Point::Vector(v)) => {
                v.len() == bounds.len()
                    && v.iter().zip(bounds).all(|(x, b)| b[0] <= *x && *x <= b[1])
            }
            (CompactSpace::Circle { circumference }, Point::Scalar(x)) => {
                (0.0..*circumference).contains(x)
            }
            (CompactSpace::Finite { dist }, Point::Index(i)) => *i < dist.len(),
            _ => false,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Point {
        match self {
            CompactSpace::Interval { lo, hi } => Point::Scalar(rng.uniform(*lo, *hi)),
            CompactSpace::Box { bounds } => {
                Point::Vector(bounds.iter().map(|b| rng.uniform(b[0], b[1])).collect())
            }
            CompactSpace::Circle { circumference } => Point::Scalar(rng.uniform(0.0, *circumference)),
            CompactSpace::Finite { dist } => Point::Index(rng.below(dist.len())),
        }
    }

    /// Sample a point at distance at most `h` from `x`.
    pub fn sample_near(&self, x: &Point, h: f64, rng: &mut Rng) -> Point {
        match (self, x) {
            (CompactSpace::Interval { lo, hi }, Point::Scalar(x)) => {
                let a = (x - h).max(*lo);
                let b = (x + h).min(*hi);
                Point::Scalar(rng.uniform(a, b))
            }
            (CompactSpace::Box { bounds }, Point::Vector(v)) => Point::Vector(
                v.iter()
                    .zip(bounds)
                    .map(|(x, bnd)| rng.uniform((x - h).max(bnd[0]), (x + h).min(bnd[1])))
                    .collect(),
            ),
            (CompactSpace::Circle { circumference }, Point::Scalar(x)) => {
                let h = h.min(circumference / 2.0);
                Point::Scalar((x + rng.uniform(-h, h)).rem_euclid(*circumference))
            }
            (CompactSpace::Finite { dist }, Point::Index(i)) => {
                let near: Vec<usize> = (0..dist.len()).filter(|&j| dist[*i][j] <= h).collect();
                Point::Index(near[rng.below(near.len())])
            }
            _ => panic!("point kind does not match space kind"),
        }
    }

    /// Whether barycenters are well-defined: the space is a convex subset of a
    /// normed vector space. True for intervals and boxes only.
    pub fn is_normed(&self) -> bool {
        matches!(self, CompactSpace::Interval { .. } | CompactSpace::Box { .. })
    }
}

/// The product `X x Y` under `d((x1,y1),(x2,y2)) = max(d_X(x1,x2), d_Y(y1,y2))`.
#[derive(Clone, Debug)]
pub struct ProductMetric {
    pub x: CompactSpace,
    pub y: CompactSpace,
}

impl ProductMetric {
    pub fn new(x: CompactSpace, y: CompactSpace) -> Self {
        ProductMetric { x, y }
    }

    pub fn distance(&self, a: &(Point, Point), b: &(Point, Point)) -> f64 {
        self.x.distance(&a.0, &b.0).max(self.y.distance(&a.1, &b.1))
    }

    pub fn diameter(&self) -> f64 {
        self.x.diameter().max(self.y.diameter())
    }

    pub fn sample(&self, rng: &mut Rng) -> (Point, Point) {
        (self.x.sample(rng), self.y.sample(rng))
    }

    pub fn sample_near(&self, z: &(Point, Point), h: f64, rng: &mut Rng) -> (Point, Point) {
        (
            self.x.sample_near(&z.0, h, rng),
            self.y.sample_near(&z.1, h, rng),
        )
    }
}
