//! Borel probability measures on the supported spaces.
//!
//! The measure class is atoms plus piecewise-constant densities. That class is
//! closed under restriction to rectangles, so every mass query used by the
//! partition and plan-transform machinery is evaluated exactly, with no
//! sampling anywhere.

use crate::error::{Error, Result};
use crate::partition::Cell;
use crate::space::Point;
use serde::{Deserialize, Serialize};

pub const MASS_TOL: f64 = 1e-12;

/// One constant-density piece of a 1-d measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    /// Density height; the piece carries mass `height * (hi - lo)`.
    pub height: f64,
}

/// Measure on an interval: point masses plus piecewise-constant density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Measure1D {
    pub atoms: Vec<(f64, f64)>,
    pub segments: Vec<Segment>,
}

impl Measure1D {
    pub fn new(atoms: Vec<(f64, f64)>, segments: Vec<Segment>) -> Result<Self> {
        let m = Measure1D { atoms, segments };
        if m.atoms.iter().any(|&(_, w)| w < 0.0) {
            return Err(Error::invalid("atom masses must be nonnegative"));
        }
        if m.segments.iter().any(|s| s.height < 0.0 || s.lo > s.hi) {
            return Err(Error::invalid("density segments need height >= 0 and lo <= hi"));
        }
        if (m.total_mass() - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!(
                "total mass {} != 1",
                m.total_mass()
            )));
        }
        Ok(m)
    }

    /// The uniform probability measure on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid("uniform measure needs lo < hi"));
        }
        Measure1D::new(
            vec![],
            vec![Segment {
                lo,
                hi,
                height: 1.0 / (hi - lo),
            }],
        )
    }

    pub fn dirac(at: f64) -> Self {
        Measure1D {
            atoms: vec![(at, 1.0)],
            segments: vec![],
        }
    }

    pub fn total_mass(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|&(_, w)| w).sum();
        let d: f64 = self.segments.iter().map(|s| s.height * (s.hi - s.lo)).sum();
        a + d
    }

    /// Exact mass of the interval `lo..hi` with the given endpoint flags.
    /// Rejects inverted intervals; a degenerate `[x, x]` closed on both
    /// sides measures the atom at `x`.
    pub fn mass_of(&self, lo: f64, hi: f64, closed_left: bool, closed_right: bool) -> Result<f64> {
        if lo > hi {
            return Err(Error::invalid(format!("inverted interval [{lo}, {hi}]")));
        }
        let mut m = 0.0;
        for s in &self.segments {
            let a = lo.max(s.lo);
            let b = hi.min(s.hi);
            if b > a {
                m += s.height * (b - a);
            }
        }
        for &(x, w) in &self.atoms {
            let inside = (x > lo || (x == lo && closed_left)) && (x < hi || (x == hi && closed_right));
            if inside {
                m += w;
            }
        }
        Ok(m)
    }

    /// Smallest closed interval containing the support.
    pub fn support_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(x, w) in &self.atoms {
            if w > 0.0 {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        for s in &self.segments {
            if s.height > 0.0 && s.hi > s.lo {
                lo = lo.min(s.lo);
                hi = hi.max(s.hi);
            }
        }
        (lo, hi)
    }
}

/// Constant-density block of a box measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxBlock {
    pub bounds: Vec<[f64; 2]>,
    pub height: f64,
}

/// Measure on a box: point masses plus constant-density blocks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureBox {
    pub atoms: Vec<(Vec<f64>, f64)>,
    pub blocks: Vec<BoxBlock>,
}

impl MeasureBox {
    pub fn uniform(bounds: Vec<[f64; 2]>) -> Result<Self> {
        let vol: f64 = bounds.iter().map(|b| b[1] - b[0]).product();
        if !(vol > 0.0) {
            return Err(Error::invalid("degenerate box"));
        }
        Ok(MeasureBox {
            atoms: vec![],
            blocks: vec![BoxBlock {
                bounds,
                height: 1.0 / vol,
            }],
        })
    }

    pub fn total_mass(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|(_, w)| w).sum();
        let d: f64 = self
            .blocks
            .iter()
            .map(|b| b.height * b.bounds.iter().map(|ax| ax[1] - ax[0]).product::<f64>())
            .sum();
        a + d
    }

    /// Exact mass of an axis-aligned rectangle given per-axis ranges and flags.
    pub fn mass_of(&self, ranges: &[(f64, f64, bool, bool)]) -> Result<f64> {
        if ranges.iter().any(|r| r.0 > r.1) {
            return Err(Error::invalid("inverted box range"));
        }
        let mut m = 0.0;
        for b in &self.blocks {
            let mut vol = b.height;
            for (ax, r) in b.bounds.iter().zip(ranges) {
                let a = r.0.max(ax[0]);
                let c = r.1.min(ax[1]);
                vol *= (c - a).max(0.0);
            }
            m += vol;
        }
        'atom: for (x, w) in &self.atoms {
            for (xi, r) in x.iter().zip(ranges) {
                let inside =
                    (*xi > r.0 || (*xi == r.0 && r.2)) && (*xi < r.1 || (*xi == r.1 && r.3));
                if !inside {
                    continue 'atom;
                }
            }
            m += w;
        }
        Ok(m)
    }
}

/// A probability measure paired with the kind of space it lives on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Measure {
    Line(Measure1D),
    Box(MeasureBox),
    /// Mass per point of a finite space.
    Finite(Vec<f64>),
}

impl Measure {
    pub fn uniform_interval(lo: f64, hi: f64) -> Result<Self> {
        Ok(Measure::Line(Measure1D::uniform(lo, hi)?))
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Line(m) => m.total_mass(),
            Measure::Box(m) => m.total_mass(),
            Measure::Finite(w) => w.iter().sum(),
        }
    }

    pub fn as_line(&self) -> Result<&Measure1D> {
        match self {
            Measure::Line(m) => Ok(m),
            other => Err(Error::Unsupported {
                expected: "a 1-d measure".into(),
                got: format!("{other:?}"),
            }),
        }
    }

    /// Exact mass of a partition cell.
    pub fn mass_of_cell(&self, cell: &Cell) -> Result<f64> {
        match (self, cell) {
            (Measure::Line(m), Cell::Interval { lo, hi, closed_left, closed_right }) => {
                m.mass_of(*lo, *hi, *closed_left, *closed_right)
            }
            (Measure::Box(m), Cell::Box { axes }) => {
                let ranges: Vec<(f64, f64, bool, bool)> = axes
                    .iter()
                    .map(|a| (a.lo, a.hi, a.closed_left, a.closed_right))
                    .collect();
                m.mass_of(&ranges)
            }
            (Measure::Finite(w), Cell::Points(pts)) => {
                let mut m = 0.0;
                for p in pts {
                    m += w[p.index()?];
                }
                Ok(m)
            }
            // Finite point subsets of an interval: only atoms can charge them.
            (Measure::Line(m), Cell::Points(pts)) => {
                let mut total = 0.0;
                for p in pts {
                    let x = p.scalar()?;
                    total += m
                        .atoms
                        .iter()
                        .filter(|&&(a, _)| a == x)
                        .map(|&(_, w)| w)
                        .sum::<f64>();
                }
                Ok(total)
            }
            (m, c) => Err(Error::Unsupported {
                expected: "measure kind matching the cell kind".into(),
                got: format!("{m:?} with {c:?}"),
            }),
        }
    }

    /// Where an atom sits exactly at a point. Used for exact map integrals.
    pub fn atom_at(&self, p: &Point) -> f64 {
        match (self, p) {
            (Measure::Line(m), Point::Scalar(x)) => m
                .atoms
                .iter()
                .filter(|&&(a, _)| a == *x)
                .map(|&(_, w)| w)
                .sum(),
            (Measure::Finite(w), Point::Index(i)) => w[*i],
            _ => 0.0,
        }
    }
}
