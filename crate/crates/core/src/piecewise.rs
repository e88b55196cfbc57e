//! Piecewise-affine maps on an interval, the oracle format for transport
//! maps in one dimension.
//!
//! Pieces carry open/closed endpoint flags so that maps like "0 at the
//! origin, 1 on (0, 1]" are represented exactly, including which piece owns a
//! shared boundary. Gaps between pieces are allowed; evaluation inside a gap
//! is an error, and integrals only ever probe the support of the measure.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub closed_left: bool,
    pub closed_right: bool,
    /// Value on the piece is `slope * x + intercept`.
    pub slope: f64,
    pub intercept: f64,
}

impl Piece {
    fn contains(&self, x: f64) -> bool {
        (x > self.lo || (x == self.lo && self.closed_left))
            && (x < self.hi || (x == self.hi && self.closed_right))
    }

    fn value(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// Intersection with a flagged interval; `None` when empty.
    fn clip(&self, lo: f64, hi: f64, cl: bool, cr: bool) -> Option<(f64, f64, bool, bool)> {
        let (a, acl) = if self.lo > lo {
            (self.lo, self.closed_left)
        } else if self.lo < lo {
            (lo, cl)
        } else {
            (lo, cl && self.closed_left)
        };
        let (b, bcr) = if self.hi < hi {
            (self.hi, self.closed_right)
        } else if self.hi > hi {
            (hi, cr)
        } else {
            (hi, cr && self.closed_right)
        };
        if a < b || (a == b && acl && bcr) {
            Some((a, b, acl, bcr))
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Piecewise1D {
    pub pieces: Vec<Piece>,
}

impl Piecewise1D {
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("a piecewise map needs at least one piece"));
        }
        if pieces
            .iter()
            .any(|p| !(p.lo.is_finite() && p.hi.is_finite() && p.lo <= p.hi))
        {
            return Err(Error::invalid("pieces need finite bounds with lo <= hi"));
        }
        pieces.sort_by(|a, b| (a.lo, a.hi).partial_cmp(&(b.lo, b.hi)).unwrap());
        Ok(Piecewise1D { pieces })
    }

    /// Constant value over a single closed interval.
    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        Piecewise1D {
            pieces: vec![Piece {
                lo,
                hi,
                closed_left: true,
                closed_right: true,
                slope: 0.0,
                intercept: value,
            }],
        }
    }

    /// `a + b x` over a single closed interval.
    pub fn affine(lo: f64, hi: f64, intercept: f64, slope: f64) -> Self {
        Piecewise1D {
            pieces: vec![Piece {
                lo,
                hi,
                closed_left: true,
                closed_right: true,
                slope,
                intercept,
            }],
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.pieces
            .iter()
            .find(|p| p.contains(x))
            .map(|p| p.value(x))
            .ok_or(Error::OutsidePartition)
    }

    /// All piece endpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.lo, p.hi])
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Exact oscillation (diameter of the image) over a flagged interval.
    /// Affine pieces attain their extremes at clipped endpoints; degenerate
    /// point pieces contribute their single value.
    pub fn oscillation_on(&self, lo: f64, hi: f64, cl: bool, cr: bool) -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in &self.pieces {
            if let Some((a, b, _, _)) = p.clip(lo, hi, cl, cr) {
                let (va, vb) = (p.value(a), p.value(b));
                min = min.min(va.min(vb));
                max = max.max(va.max(vb));
            }
        }
        if min > max {
            0.0
        } else {
            max - min
        }
    }
}

/// A transport-map oracle on an interval: either an explicit piecewise-affine
/// description (exact integration available) or an opaque callback (sampled
/// fallbacks only).
#[derive(Clone)]
pub enum Map1D {
    Piecewise(Piecewise1D),
    Callback(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Map1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Map1D::Piecewise(p) => write!(f, "Map1D::Piecewise({} pieces)", p.pieces.len()),
            Map1D::Callback(_) => write!(f, "Map1D::Callback"),
        }
    }
}

impl Map1D {
    pub fn callback(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Map1D::Callback(Arc::new(f))
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        match self {
            Map1D::Piecewise(p) => p.evaluate(x),
            Map1D::Callback(f) => Ok(f(x)),
        }
    }

    pub fn as_piecewise(&self) -> Option<&Piecewise1D> {
        match self {
            Map1D::Piecewise(p) => Some(p),
            Map1D::Callback(_) => None,
        }
    }
}

impl From<Piecewise1D> for Map1D {
    fn from(p: Piecewise1D) -> Self {
        Map1D::Piecewise(p)
    }
}
