//! Pointed partitions with diameter bound `h` and the discrete measures they
//! induce.
//!
//! Cells follow the half-open convention `[lo, hi)` except the last cell per
//! axis, which is closed. That makes every partition a true partition: an
//! atom sitting exactly on a shared boundary belongs to exactly one cell.
//! Zero-mass cells are kept, not dropped; downstream index sets distinguish
//! "all cells" from "cells the measure actually charges".

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::space::{CompactSpace, Point};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub closed_left: bool,
    pub closed_right: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Cell {
    Interval {
        lo: f64,
        hi: f64,
        closed_left: bool,
        closed_right: bool,
    },
    Box {
        axes: Vec<AxisRange>,
    },
    /// Explicit finite subset of the space.
    Points(Vec<Point>),
}

impl Cell {
    pub fn interval(lo: f64, hi: f64, closed_left: bool, closed_right: bool) -> Self {
        Cell::Interval { lo, hi, closed_left, closed_right }
    }

    pub fn contains(&self, space: &CompactSpace, p: &Point) -> bool {
        match self {
            Cell::Interval { lo, hi, closed_left, closed_right } => match p {
                Point::Scalar(x) => {
                    (*x > *lo || (*x == *lo && *closed_left))
                        && (*x < *hi || (*x == *hi && *closed_right))
                }
                _ => false,
            },
            Cell::Box { axes } => match p {
                Point::Vector(v) if v.len() == axes.len() => v.iter().zip(axes).all(|(x, a)| {
                    (*x > a.lo || (*x == a.lo && a.closed_left))
                        && (*x < a.hi || (*x == a.hi && a.closed_right))
                }),
                _ => false,
            },
            Cell::Points(pts) => pts
                .iter()
                .any(|q| space.distance(p, q) == 0.0 || p == q),
        }
    }

    pub fn diameter(&self, space: &CompactSpace) -> f64 {
        match self {
            Cell::Interval { lo, hi, .. } => hi - lo,
            Cell::Box { axes } => axes.iter().map(|a| a.hi - a.lo).fold(0.0, f64::max),
            Cell::Points(pts) => {
                let mut d = 0.0f64;
                for a in pts {
                    for b in pts {
                        d = d.max(space.distance(a, b));
                    }
                }
                d
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AnchorRule {
    Center,
    Left,
    Right,
}

/// Anchor placement for uniform interval partitions. `Offsets` perturbs each
/// center by its own delta; anchors must stay inside their cells.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum AnchorSpec {
    Rule(AnchorRule),
    Offsets(Vec<f64>),
}

/// A finite pointed partition: cells, one anchor inside each cell, the exact
/// measure weight of each cell, and the max cell diameter `h_bound`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointedPartition {
    pub space: CompactSpace,
    pub cells: Vec<Cell>,
    pub anchors: Vec<Point>,
    pub weights: Vec<f64>,
    pub h_bound: f64,
}

/// Discretization of a measure on a pointed partition: one atom per anchor,
/// zero-weight atoms retained.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::invalid("points and weights must align and be nonempty"));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > crate::measure::MASS_TOL {
            return Err(Error::invalid(format!("weights sum to {total} != 1")));
        }
        Ok(DiscreteMeasure { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices carrying strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

impl PointedPartition {
    fn validate(self) -> Result<Self> {
        for (i, (cell, anchor)) in self.cells.iter().zip(&self.anchors).enumerate() {
            if !cell.contains(&self.space, anchor) {
                return Err(Error::invalid(format!(
                    "anchor {anchor:?} of cell {i} lies outside its cell"
                )));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > crate::measure::MASS_TOL {
            return Err(Error::invalid(format!("cell weights sum to {total} != 1")));
        }
        Ok(self)
    }

    /// `k` equal-length cells of an interval, half-open except the last.
    pub fn uniform_interval(
        space: &CompactSpace,
        measure: &Measure,
        k: usize,
        anchors: &AnchorSpec,
    ) -> Result<Self> {
        let (lo, hi) = match space {
            CompactSpace::Interval { lo, hi } => (*lo, *hi),
            other => {
                return Err(Error::Unsupported {
                    expected: "an interval space".into(),
                    got: format!("{other:?}"),
                })
            }
        };
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if let AnchorSpec::Offsets(d) = anchors {
            if d.len() != k {
                return Err(Error::invalid("need one offset per cell"));
            }
        }
        let len = (hi - lo) / k as f64;
        let mut cells = Vec::with_capacity(k);
        let mut pts = Vec::with_capacity(k);
        for i in 0..k {
            let a = lo + len * i as f64;
            let b = if i + 1 == k { hi } else { lo + len * (i + 1) as f64 };
            let last = i + 1 == k;
            cells.push(Cell::interval(a, b, true, last));
            let anchor = match anchors {
                AnchorSpec::Rule(AnchorRule::Center) => 0.5 * (a + b),
                AnchorSpec::Rule(AnchorRule::Left) => a,
                // half-open cells exclude b, so "right" is the point just below
                AnchorSpec::Rule(AnchorRule::Right) => {
                    if last {
                        b
                    } else {
                        b.next_down()
                    }
                }
                AnchorSpec::Offsets(d) => 0.5 * (a + b) + d[i],
            };
            pts.push(Point::Scalar(anchor));
        }
        let weights = cells
            .iter()
            .map(|c| measure.mass_of_cell(c))
            .collect::<Result<Vec<_>>>()?;
        PointedPartition {
            space: space.clone(),
            cells,
            anchors: pts,
            weights,
            h_bound: len,
        }
        .validate()
    }

    /// Tensor product of per-axis uniform partitions of a box. `h_bound` is
    /// the max per-axis cell length, matching the sup metric.
    pub fn grid(
        space: &CompactSpace,
        measure: &Measure,
        k_per_axis: &[usize],
        rule: AnchorRule,
    ) -> Result<Self> {
        let bounds = match space {
            CompactSpace::Box { bounds } => bounds.clone(),
            other => {
                return Err(Error::Unsupported {
                    expected: "a box space".into(),
                    got: format!("{other:?}"),
                })
            }
        };
        if k_per_axis.len() != bounds.len() || k_per_axis.contains(&0) {
            return Err(Error::invalid("need a positive cell count per axis"));
        }
        let dims = bounds.len();
        let mut cells = Vec::new();
        let mut anchors = Vec::new();
        let mut index = vec![0usize; dims];
        let mut h = 0.0f64;
        for (d, &k) in k_per_axis.iter().enumerate() {
            h = h.max((bounds[d][1] - bounds[d][0]) / k as f64);
        }
        loop {
            let mut axes = Vec::with_capacity(dims);
            let mut anchor = Vec::with_capacity(dims);
            for d in 0..dims {
                let k = k_per_axis[d];
                let len = (bounds[d][1] - bounds[d][0]) / k as f64;
                let a = bounds[d][0] + len * index[d] as f64;
                let last = index[d] + 1 == k;
                let b = if last { bounds[d][1] } else { a + len };
                axes.push(AxisRange { lo: a, hi: b, closed_left: true, closed_right: last });
                anchor.push(match rule {
                    AnchorRule::Center => 0.5 * (a + b),
                    AnchorRule::Left => a,
                    AnchorRule::Right => {
                        if last {
                            b
                        } else {
                            b.next_down()
                        }
                    }
                });
            }
            cells.push(Cell::Box { axes });
            anchors.push(Point::Vector(anchor));
            // odometer over the grid indices, first axis fastest
            let mut d = 0;
            loop {
                index[d] += 1;
                if index[d] < k_per_axis[d] {
                    break;
                }
                index[d] = 0;
                d += 1;
                if d == dims {
                    let weights = cells
                        .iter()
                        .map(|c| measure.mass_of_cell(c))
                        .collect::<Result<Vec<_>>>()?;
                    return PointedPartition {
                        space: space.clone(),
                        cells,
                        anchors,
                        weights,
                        h_bound: h,
                    }
                    .validate();
                }
            }
        }
    }

    /// Greedy ball cover of a finite space: pick an uncovered point, take the
    /// ball of radius `h/2` around it, subtract everything already covered.
    /// Anchors prefer a point of the ball outside every other ball; when the
    /// set differences leave no such point, any cell point serves.
    pub fn greedy_cover(space: &CompactSpace, measure: &Measure, h: f64) -> Result<Self> {
        let dist = match space {
            CompactSpace::Finite { dist } => dist,
            other => {
                return Err(Error::Unsupported {
                    expected: "a finite space".into(),
                    got: format!("{other:?}"),
                })
            }
        };
        if !(h > 0.0) {
            return Err(Error::invalid("cover radius h must be positive"));
        }
        let n = dist.len();
        if n == 0 {
            return Err(Error::invalid("empty space"));
        }
        let radius = h / 2.0;
        // Greedy minimal-ish cover: centers chosen among uncovered points.
        let mut covered = vec![false; n];
        let mut balls: Vec<Vec<usize>> = Vec::new();
        for p in 0..n {
            if covered[p] {
                continue;
            }
            let ball: Vec<usize> = (0..n).filter(|&q| dist[p][q] <= radius).collect();
            for &q in &ball {
                covered[q] = true;
            }
            balls.push(ball);
        }
        let mut assigned = vec![false; n];
        let mut cells = Vec::new();
        let mut anchors = Vec::new();
        for (b, ball) in balls.iter().enumerate() {
            let cell: Vec<usize> = ball.iter().copied().filter(|&q| !assigned[q]).collect();
            for &q in &cell {
                assigned[q] = true;
            }
            if cell.is_empty() {
                continue;
            }
            let exclusive = cell.iter().copied().find(|&q| {
                balls
                    .iter()
                    .enumerate()
                    .all(|(b2, other)| b2 == b || !other.contains(&q))
            });
            let anchor = exclusive.unwrap_or(cell[0]);
            cells.push(Cell::Points(cell.into_iter().map(Point::Index).collect()));
            anchors.push(Point::Index(anchor));
        }
        let weights = cells
            .iter()
            .map(|c| measure.mass_of_cell(c))
            .collect::<Result<Vec<_>>>()?;
        let h_bound = cells
            .iter()
            .map(|c| c.diameter(space))
            .fold(0.0, f64::max)
            .max(0.0);
        PointedPartition {
            space: space.clone(),
            cells,
            anchors,
            weights,
            h_bound,
        }
        .validate()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the unique cell containing `p`.
    pub fn locate(&self, p: &Point) -> Result<usize> {
        self.cells
            .iter()
            .position(|c| c.contains(&self.space, p))
            .ok_or(Error::OutsidePartition)
    }

    /// The induced discrete measure: one atom per anchor with the cell weight.
    pub fn to_discrete(&self) -> DiscreteMeasure {
        DiscreteMeasure {
            points: self.anchors.clone(),
            weights: self.weights.clone(),
        }
    }

    /// Geometric cover check for interval partitions: cells must tile the
    /// interval without gaps or overlaps.
    pub fn check_interval_cover(&self, tol: f64) -> bool {
        let (lo, hi) = match self.space {
            CompactSpace::Interval { lo, hi } => (lo, hi),
            _ => return true,
        };
        let mut edges: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter_map(|c| match c {
                Cell::Interval { lo, hi, .. } => Some((*lo, *hi)),
                _ => None,
            })
            .collect();
        if edges.len() != self.cells.len() {
            return false;
        }
        edges.sort_by(|a, b| a.0.total_cmp(&b.0));
        if (edges[0].0 - lo).abs() > tol || (edges.last().unwrap().1 - hi).abs() > tol {
            return false;
        }
        edges.windows(2).all(|w| (w[0].1 - w[1].0).abs() <= tol)
    }
}

/// Discretize `m` on the partition: exact cell masses placed at the anchors.
/// Recomputes weights from the measure, so it also discretizes measures other
/// than the one the partition was built from.
pub fn discretize(m: &Measure, p: &PointedPartition) -> Result<DiscreteMeasure> {
    let weights = p
        .cells
        .iter()
        .map(|c| m.mass_of_cell(c))
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(p.anchors.clone(), weights)
}
