//! The continuous and semidiscrete rewritings of a discrete plan, exposed as
//! lazily evaluated measures.
//!
//! The continuous version spreads each plan atom `pi_ij` over the rectangle
//! `E_i x F_j` proportionally to `mu (x) nu`; its marginals are the original
//! continuous measures. The semidiscrete version spreads each atom over
//! `E_i x {y_j}` proportionally to `mu`, keeping the discrete second
//! marginal. Neither is ever materialized on a grid: every query is a finite
//! sum of exact restricted-measure masses.

use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::measure::{Measure, Measure1D};
use crate::partition::Cell;
use crate::piecewise::Map1D;
use crate::solver::HPlan;
use crate::space::Point;

/// An axis-aligned query rectangle with endpoint flags per axis.
#[derive(Clone, Debug)]
pub struct Window {
    pub ranges: Vec<(f64, f64, bool, bool)>,
}

impl Window {
    pub fn interval(lo: f64, hi: f64, closed_left: bool, closed_right: bool) -> Self {
        Window { ranges: vec![(lo, hi, closed_left, closed_right)] }
    }

    /// The whole space.
    pub fn all(space: &crate::space::CompactSpace) -> Result<Self> {
        match space {
            crate::space::CompactSpace::Interval { lo, hi } => {
                Ok(Window::interval(*lo, *hi, true, true))
            }
            crate::space::CompactSpace::Box { bounds } => Ok(Window {
                ranges: bounds.iter().map(|b| (b[0], b[1], true, true)).collect(),
            }),
            other => Err(Error::Unsupported {
                expected: "interval or box space".into(),
                got: format!("{other:?}"),
            }),
        }
    }
}

/// Intersection of two flagged ranges; `None` when empty.
fn clip_range(
    a: (f64, f64, bool, bool),
    b: (f64, f64, bool, bool),
) -> Option<(f64, f64, bool, bool)> {
    let (lo, cl) = if a.0 > b.0 {
        (a.0, a.2)
    } else if a.0 < b.0 {
        (b.0, b.2)
    } else {
        (a.0, a.2 && b.2)
    };
    let (hi, cr) = if a.1 < b.1 {
        (a.1, a.3)
    } else if a.1 > b.1 {
        (b.1, b.3)
    } else {
        (a.1, a.3 && b.3)
    };
    if lo < hi || (lo == hi && cl && cr) {
        Some((lo, hi, cl, cr))
    } else {
        None
    }
}

fn cell_ranges(cell: &Cell) -> Result<Vec<(f64, f64, bool, bool)>> {
    match cell {
        Cell::Interval { lo, hi, closed_left, closed_right } => {
            Ok(vec![(*lo, *hi, *closed_left, *closed_right)])
        }
        Cell::Box { axes } => Ok(axes
            .iter()
            .map(|a| (a.lo, a.hi, a.closed_left, a.closed_right))
            .collect()),
        other => Err(Error::Unsupported {
            expected: "interval or box cells".into(),
            got: format!("{other:?}"),
        }),
    }
}

/// Exact mass of `window intersect cell` under `m`.
fn mass_of_clip(m: &Measure, cell: &Cell, window: &Window) -> Result<f64> {
    let ranges = cell_ranges(cell)?;
    if ranges.len() != window.ranges.len() {
        return Err(Error::invalid("window dimension does not match the cell"));
    }
    let mut clipped = Vec::with_capacity(ranges.len());
    for (&r, &w) in ranges.iter().zip(&window.ranges) {
        match clip_range(r, w) {
            Some(c) => clipped.push(c),
            None => return Ok(0.0),
        }
    }
    match m {
        Measure::Line(line) => {
            let (lo, hi, cl, cr) = clipped[0];
            line.mass_of(lo, hi, cl, cr)
        }
        Measure::Box(bx) => bx.mass_of(&clipped),
        Measure::Finite(_) => Err(Error::Unsupported {
            expected: "interval or box measure".into(),
            got: "finite measure".into(),
        }),
    }
}

/// The continuous version of a plan: coefficients `pi_ij / (mu_i nu_j)` over
/// the support, queried against the product measure.
pub struct ContinuousVersion {
    pub plan: HPlan,
    pub mu: Measure,
    pub nu: Measure,
    /// Per support entry: `mass / (mu_i nu_j)`.
    coeff: Vec<f64>,
}

impl ContinuousVersion {
    pub fn new(plan: &HPlan, mu: &Measure, nu: &Measure) -> Result<Self> {
        let coeff = plan
            .plan
            .entries
            .iter()
            .map(|e| {
                let wi = plan.source.weights[e.i];
                let wj = plan.target.weights[e.j];
                debug_assert!(wi > 0.0 && wj > 0.0, "support entry on a null cell");
                e.mass / (wi * wj)
            })
            .collect();
        Ok(ContinuousVersion {
            plan: plan.clone(),
            mu: mu.clone(),
            nu: nu.clone(),
            coeff,
        })
    }

    /// `pi_hat[E x F] = sum coeff_ij mu[E cap E_i] nu[F cap F_j]`.
    pub fn rectangle_mass(&self, e: &Window, f: &Window) -> Result<f64> {
        let mut total = 0.0;
        for (entry, &c) in self.plan.plan.entries.iter().zip(&self.coeff) {
            let me = mass_of_clip(&self.mu, &self.plan.source.cells[entry.i], e)?;
            if me == 0.0 {
                continue;
            }
            let mf = mass_of_clip(&self.nu, &self.plan.target.cells[entry.j], f)?;
            total += c * me * mf;
        }
        Ok(total)
    }

    /// `K[pi_hat]` by per-rectangle product quadrature: exact over atom
    /// factors, dyadic midpoint refinement over density factors. Returns the
    /// value with the accumulated refinement delta.
    pub fn cost(&self, c: &CostFunction, max_level: u32) -> Result<QuadReport> {
        let mu = self.mu.as_line()?;
        let nu = self.nu.as_line()?;
        let mut total = 0.0;
        let mut delta = 0.0;
        for (entry, &coeff) in self.plan.plan.entries.iter().zip(&self.coeff) {
            let ex = factor_parts(mu, &self.plan.source.cells[entry.i])?;
            let fy = factor_parts(nu, &self.plan.target.cells[entry.j])?;
            for xp in &ex {
                for yp in &fy {
                    let (v, d) = product_integral(xp, yp, c, max_level)?;
                    total += coeff * v;
                    delta += coeff * d;
                }
            }
        }
        Ok(QuadReport { value: total, refinement_delta: delta })
    }

    /// Hausdorff distance between the discrete support and a probe
    /// discretization of this measure's support, under the sup product
    /// metric. The probe resolution is returned alongside.
    pub fn support_hausdorff(&self, per_cell: usize) -> Result<SupportHausdorff> {
        let mu = self.mu.as_line()?;
        let nu = self.nu.as_line()?;
        let mut probes: Vec<(f64, f64)> = Vec::new();
        let mut resolution = 0.0f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for entry in &self.plan.plan.entries {
            let (xs, rx) = probe_points(mu, &self.plan.source.cells[entry.i], per_cell)?;
            let (ys, ry) = probe_points(nu, &self.plan.target.cells[entry.j], per_cell)?;
            resolution = resolution.max(rx).max(ry);
            for &x in &xs {
                for &y in &ys {
                    probes.push((x, y));
                }
            }
            atoms.push((
                self.plan.source.anchors[entry.i].scalar()?,
                self.plan.target.anchors[entry.j].scalar()?,
            ));
        }
        let value = hausdorff_pairs(&atoms, &probes);
        Ok(SupportHausdorff { value, resolution })
    }
}

/// The semidiscrete version of a plan: per-cell conditional weights
/// `pi_ij / mu_i` on the target anchors, integrated against `mu` on the
/// source side.
pub struct SemidiscreteVersion {
    pub plan: HPlan,
    pub mu: Measure,
}

impl SemidiscreteVersion {
    pub fn new(plan: &HPlan, mu: &Measure) -> Result<Self> {
        Ok(SemidiscreteVersion { plan: plan.clone(), mu: mu.clone() })
    }

    /// `pi_tilde[E x F] = sum_{(i,j): y_j in F} (pi_ij / mu_i) mu[E cap E_i]`.
    pub fn rectangle_mass(&self, e: &Window, f: &Window) -> Result<f64> {
        let mut total = 0.0;
        for entry in &self.plan.plan.entries {
            let y = self.plan.target.anchors[entry.j].scalar()?;
            let (lo, hi, cl, cr) = f.ranges[0];
            let inside = (y > lo || (y == lo && cl)) && (y < hi || (y == hi && cr));
            if !inside {
                continue;
            }
            let wi = self.plan.source.weights[entry.i];
            let me = mass_of_clip(&self.mu, &self.plan.source.cells[entry.i], e)?;
            total += entry.mass / wi * me;
        }
        Ok(total)
    }

    /// Mass of the set where the plan's target is at least `delta` away from
    /// the map's value: `sum_ij (pi_ij/mu_i) mu{x in E_i : |y_j - T(x)| >= delta}`.
    /// Exact interval arithmetic for piecewise maps; refined midpoint
    /// quadrature of the indicator for callbacks.
    pub fn bad_set_mass(&self, t: &Map1D, delta: f64, max_level: u32) -> Result<QuadReport> {
        if !(delta > 0.0) {
            return Err(Error::invalid("delta must be positive"));
        }
        let mu = self.mu.as_line()?;
        let mut total = 0.0;
        let mut report_delta = 0.0;
        for entry in &self.plan.plan.entries {
            let y = self.plan.target.anchors[entry.j].scalar()?;
            let wi = self.plan.source.weights[entry.i];
            let cell = &self.plan.source.cells[entry.i];
            let Cell::Interval { lo, hi, closed_left, closed_right } = cell else {
                return Err(Error::Unsupported {
                    expected: "interval cells".into(),
                    got: format!("{cell:?}"),
                });
            };
            let cell_range = (*lo, *hi, *closed_left, *closed_right);
            let m = match t {
                Map1D::Piecewise(pw) => {
                    let mut acc = 0.0;
                    for piece in &pw.pieces {
                        let Some(clip) = clip_range(
                            (piece.lo, piece.hi, piece.closed_left, piece.closed_right),
                            cell_range,
                        ) else {
                            continue;
                        };
                        acc += bad_mass_on_piece(mu, clip, piece.slope, piece.intercept, y, delta)?;
                    }
                    acc
                }
                Map1D::Callback(f) => {
                    let indicator = |x: f64| if (y - f(x)).abs() >= delta { 1.0 } else { 0.0 };
                    let mut acc = 0.0;
                    for s in &mu.segments {
                        let Some((a, b, _, _)) = clip_range((s.lo, s.hi, true, true), cell_range)
                        else {
                            continue;
                        };
                        if b <= a {
                            continue;
                        }
                        let (v, d) = indicator_mass(a, b, &indicator, max_level);
                        acc += s.height * v;
                        report_delta += s.height * d;
                    }
                    for &(x, w) in &mu.atoms {
                        let inside = (x > cell_range.0 || (x == cell_range.0 && cell_range.2))
                            && (x < cell_range.1 || (x == cell_range.1 && cell_range.3));
                        if inside && w > 0.0 && (y - f(x)).abs() >= delta {
                            acc += w;
                        }
                    }
                    acc
                }
            };
            total += entry.mass / wi * m;
        }
        Ok(QuadReport { value: total, refinement_delta: report_delta })
    }

    pub fn support_hausdorff(&self, per_cell: usize) -> Result<SupportHausdorff> {
        let mu = self.mu.as_line()?;
        let mut probes: Vec<(f64, f64)> = Vec::new();
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut resolution = 0.0f64;
        for entry in &self.plan.plan.entries {
            let y = self.plan.target.anchors[entry.j].scalar()?;
            let (xs, rx) = probe_points(mu, &self.plan.source.cells[entry.i], per_cell)?;
            resolution = resolution.max(rx);
            for &x in &xs {
                probes.push((x, y));
            }
            atoms.push((self.plan.source.anchors[entry.i].scalar()?, y));
        }
        let value = hausdorff_pairs(&atoms, &probes);
        Ok(SupportHausdorff { value, resolution })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadReport {
    pub value: f64,
    pub refinement_delta: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SupportHausdorff {
    pub value: f64,
    pub resolution: f64,
}

/// Lebesgue measure of an indicator over `[a, b]` by two midpoint grids of
/// coprime phase. Dyadic refinement alone can stall on indicators (both
/// levels may count the same fraction), so the reported delta combines the
/// phase disagreement with the grid spacing.
fn indicator_mass(a: f64, b: f64, f: &dyn Fn(f64) -> f64, max_level: u32) -> (f64, f64) {
    let n = 1usize << max_level.clamp(8, 16);
    let grid = |n: usize| -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    };
    let m1 = grid(n);
    let m2 = grid(n + 1);
    (0.5 * (m1 + m2), 0.5 * (m1 - m2).abs() + (b - a) / n as f64)
}

/// Exact mass of `{x in clip : |slope x + intercept - y| >= delta}`.
fn bad_mass_on_piece(
    mu: &Measure1D,
    clip: (f64, f64, bool, bool),
    slope: f64,
    intercept: f64,
    y: f64,
    delta: f64,
) -> Result<f64> {
    let (lo, hi, cl, cr) = clip;
    if slope == 0.0 {
        return if (intercept - y).abs() >= delta {
            mu.mass_of(lo, hi, cl, cr)
        } else {
            Ok(0.0)
        };
    }
    // g(x) = slope x + intercept - y crosses -delta and +delta once each;
    // the bad set is the closed complement of the open strip between them.
    let x_at = |v: f64| (v - intercept + y) / slope;
    let (strip_lo, strip_hi) = if slope > 0.0 {
        (x_at(-delta), x_at(delta))
    } else {
        (x_at(delta), x_at(-delta))
    };
    // The open strip (strip_lo, strip_hi) is the good set; it has positive
    // width, so the two closed bad parts never overlap.
    let mut mass = 0.0;
    if strip_lo >= lo {
        let b = strip_lo.min(hi);
        let bcr = if b == hi { cr } else { true };
        mass += mu.mass_of(lo, b, cl, bcr)?;
    }
    if strip_hi <= hi {
        let a = strip_hi.max(lo);
        let acl = if a == lo { cl } else { true };
        mass += mu.mass_of(a, hi, acl, cr)?;
    }
    Ok(mass)
}

/// Atom-or-density components of a measure restricted to a cell.
enum FactorPart {
    Atom { at: f64, mass: f64 },
    Density { lo: f64, hi: f64, height: f64 },
}

fn factor_parts(m: &Measure1D, cell: &Cell) -> Result<Vec<FactorPart>> {
    let ranges = cell_ranges(cell)?;
    let (lo, hi, cl, cr) = ranges[0];
    let mut out = Vec::new();
    for &(x, w) in &m.atoms {
        let inside = (x > lo || (x == lo && cl)) && (x < hi || (x == hi && cr));
        if inside && w > 0.0 {
            out.push(FactorPart::Atom { at: x, mass: w });
        }
    }
    for s in &m.segments {
        if s.height == 0.0 {
            continue;
        }
        let a = s.lo.max(lo);
        let b = s.hi.min(hi);
        if b > a {
            out.push(FactorPart::Density { lo: a, hi: b, height: s.height });
        }
    }
    Ok(out)
}

fn product_integral(
    xp: &FactorPart,
    yp: &FactorPart,
    c: &CostFunction,
    max_level: u32,
) -> Result<(f64, f64)> {
    let eval = |x: f64, y: f64| c.evaluate(&Point::Scalar(x), &Point::Scalar(y));
    match (xp, yp) {
        (FactorPart::Atom { at: x, mass: wx }, FactorPart::Atom { at: y, mass: wy }) => {
            Ok((wx * wy * eval(*x, *y), 0.0))
        }
        (FactorPart::Atom { at: x, mass: wx }, FactorPart::Density { lo, hi, height }) => {
            let f = |y: f64| -> Result<f64> { Ok(eval(*x, y)) };
            let (v, d) = crate::metrics::refine_midpoint(*lo, *hi, &f, 1e-11, max_level)?;
            Ok((wx * height * v, wx * height * d))
        }
        (FactorPart::Density { lo, hi, height }, FactorPart::Atom { at: y, mass: wy }) => {
            let f = |x: f64| -> Result<f64> { Ok(eval(x, *y)) };
            let (v, d) = crate::metrics::refine_midpoint(*lo, *hi, &f, 1e-11, max_level)?;
            Ok((wy * height * v, wy * height * d))
        }
        (
            FactorPart::Density { lo: xl, hi: xh, height: hx },
            FactorPart::Density { lo: yl, hi: yh, height: hy },
        ) => {
            let mut n = 1usize;
            let mut prev = f64::NAN;
            loop {
                let dx = (xh - xl) / n as f64;
                let dy = (yh - yl) / n as f64;
                let mut acc = 0.0;
                for i in 0..n {
                    let x = xl + (i as f64 + 0.5) * dx;
                    for j in 0..n {
                        acc += eval(x, yl + (j as f64 + 0.5) * dy);
                    }
                }
                let cur = acc * dx * dy;
                if prev.is_finite() {
                    let d = (cur - prev).abs();
                    if d < 1e-11 || n as u32 >= 1 << max_level.min(12) {
                        return Ok((hx * hy * cur, hx * hy * d));
                    }
                }
                prev = cur;
                n *= 2;
            }
        }
    }
}

/// Probe coordinates of a measure's support inside a cell plus the max gap
/// between adjacent probes.
fn probe_points(m: &Measure1D, cell: &Cell, per_cell: usize) -> Result<(Vec<f64>, f64)> {
    let parts = factor_parts(m, cell)?;
    let mut xs = Vec::new();
    let mut resolution = 0.0f64;
    let n = per_cell.max(2);
    for p in &parts {
        match p {
            FactorPart::Atom { at, .. } => xs.push(*at),
            FactorPart::Density { lo, hi, .. } => {
                for k in 0..n {
                    xs.push(lo + (hi - lo) * k as f64 / (n - 1) as f64);
                }
                resolution = resolution.max((hi - lo) / (n - 1) as f64);
            }
        }
    }
    Ok((xs, resolution))
}

fn hausdorff_pairs(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let d = |p: &(f64, f64), q: &(f64, f64)| (p.0 - q.0).abs().max((p.1 - q.1).abs());
    let directed = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        from.iter()
            .map(|p| to.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{AnchorRule, AnchorSpec, PointedPartition};
    use crate::solver::HPlan;
    use crate::space::CompactSpace;
    use std::sync::Arc;

    fn pipeline(k: usize) -> (HPlan, Measure, Measure) {
        let x = CompactSpace::interval(0.0, 1.0).unwrap();
        let y = CompactSpace::interval(0.5, 1.0).unwrap();
        let mu = Measure::uniform_interval(0.0, 1.0).unwrap();
        let nu = Measure::uniform_interval(0.5, 1.0).unwrap();
        let px = Arc::new(
            PointedPartition::uniform_interval(&x, &mu, k, &AnchorSpec::Rule(AnchorRule::Center))
                .unwrap(),
        );
        let py = Arc::new(
            PointedPartition::uniform_interval(&y, &nu, k, &AnchorSpec::Rule(AnchorRule::Center))
                .unwrap(),
        );
        let (plan, _) = HPlan::solve_exact(px, py, &CostFunction::quadratic()).unwrap();
        (plan, mu, nu)
    }

    #[test]
    fn rectangle_identity_continuous() {
        let (plan, mu, nu) = pipeline(8);
        let v = ContinuousVersion::new(&plan, &mu, &nu).unwrap();
        for entry in &plan.plan.entries {
            let e = cell_window(&plan.source.cells[entry.i]);
            let f = cell_window(&plan.target.cells[entry.j]);
            let got = v.rectangle_mass(&e, &f).unwrap();
            assert!((got - entry.mass).abs() <= 1e-10, "got {got} want {}", entry.mass);
        }
        // whole space
        let all_e = Window::all(&plan.source.space).unwrap();
        let all_f = Window::all(&plan.target.space).unwrap();
        assert!((v.rectangle_mass(&all_e, &all_f).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn rectangle_identity_semidiscrete() {
        let (plan, mu, _) = pipeline(8);
        let v = SemidiscreteVersion::new(&plan, &mu).unwrap();
        for entry in &plan.plan.entries {
            let e = cell_window(&plan.source.cells[entry.i]);
            let f = cell_window(&plan.target.cells[entry.j]);
            let got = v.rectangle_mass(&e, &f).unwrap();
            assert!((got - entry.mass).abs() <= 1e-10);
        }
        let all_e = Window::all(&plan.source.space).unwrap();
        let all_f = Window::all(&plan.target.space).unwrap();
        assert!((v.rectangle_mass(&all_e, &all_f).unwrap() - 1.0).abs() <= 1e-10);
        // F that misses every anchor carries no mass
        let empty_f = Window::interval(0.51, 0.52, true, false);
        let near = plan
            .target
            .anchors
            .iter()
            .any(|a| (0.51..0.52).contains(&a.scalar().unwrap()));
        if !near {
            assert_eq!(v.rectangle_mass(&all_e, &empty_f).unwrap(), 0.0);
        }
    }

    #[test]
    fn continuous_marginals_match() {
        let (plan, mu, nu) = pipeline(4);
        let v = ContinuousVersion::new(&plan, &mu, &nu).unwrap();
        // first marginal over an arbitrary window
        let e = Window::interval(0.1, 0.63, true, false);
        let f = Window::all(&plan.target.space).unwrap();
        let got = v.rectangle_mass(&e, &f).unwrap();
        assert!((got - 0.53).abs() < 1e-10, "got {got}");
        // second marginal
        let e = Window::all(&plan.source.space).unwrap();
        let f = Window::interval(0.5, 0.7, true, false);
        let got = v.rectangle_mass(&e, &f).unwrap();
        assert!((got - 0.4).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn constant_cost_integrates_exactly() {
        let (plan, mu, nu) = pipeline(4);
        let v = ContinuousVersion::new(&plan, &mu, &nu).unwrap();
        let c = CostFunction::callback(|_, _| 2.5);
        let r = v.cost(&c, 14).unwrap();
        assert!((r.value - 2.5).abs() < 1e-10);
    }

    #[test]
    fn one_cell_uniform_quadratic_cost() {
        // single-cell plan on [0,1]^2 with uniform factors:
        // K[pi_hat] = int int (x-y)^2 dx dy = 1/6.
        let x = CompactSpace::interval(0.0, 1.0).unwrap();
        let mu = Measure::uniform_interval(0.0, 1.0).unwrap();
        let p = Arc::new(
            PointedPartition::uniform_interval(&x, &mu, 1, &AnchorSpec::Rule(AnchorRule::Center))
                .unwrap(),
        );
        let (plan, _) = HPlan::solve_exact(p.clone(), p, &CostFunction::quadratic()).unwrap();
        let v = ContinuousVersion::new(&plan, &mu, &mu).unwrap();
        let r = v.cost(&CostFunction::quadratic(), 14).unwrap();
        assert!((r.value - 1.0 / 6.0).abs() < 1e-7, "value={}", r.value);
    }

    #[test]
    fn support_hausdorff_within_h() {
        let (plan, mu, nu) = pipeline(8);
        let h = plan.h_bound();
        let v = ContinuousVersion::new(&plan, &mu, &nu).unwrap();
        let sh = v.support_hausdorff(9).unwrap();
        assert!(sh.value <= h + sh.resolution + 1e-12, "{} vs {}", sh.value, h);
        let sv = SemidiscreteVersion::new(&plan, &mu).unwrap();
        let sh = sv.support_hausdorff(9).unwrap();
        assert!(sh.value <= h + sh.resolution + 1e-12);
    }

    #[test]
    fn bad_set_empty_cases() {
        let (plan, mu, _) = pipeline(8);
        let v = SemidiscreteVersion::new(&plan, &mu).unwrap();
        // T constantly at an anchor the plan fully respects: the identity
        // coupling case is approximated here by delta larger than diam Y.
        let t = Map1D::from(crate::piecewise::Piecewise1D::affine(0.0, 1.0, 0.5, 0.5));
        let r = v.bad_set_mass(&t, 10.0, 12).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn bad_set_exact_on_affine_map() {
        // One cell [0,1], uniform mu, plan sends everything to y = 0.75
        // (single target cell anchored at its center). T(x) = 0.5 + x/2.
        // |0.75 - T(x)| >= 0.1 iff x <= 0.3 or x >= 0.7: mass 0.6.
        let x = CompactSpace::interval(0.0, 1.0).unwrap();
        let y = CompactSpace::interval(0.5, 1.0).unwrap();
        let mu = Measure::uniform_interval(0.0, 1.0).unwrap();
        let nu = Measure::uniform_interval(0.5, 1.0).unwrap();
        let px = Arc::new(
            PointedPartition::uniform_interval(&x, &mu, 1, &AnchorSpec::Rule(AnchorRule::Center))
                .unwrap(),
        );
        let py = Arc::new(
            PointedPartition::uniform_interval(&y, &nu, 1, &AnchorSpec::Rule(AnchorRule::Center))
                .unwrap(),
        );
        let (plan, _) = HPlan::solve_exact(px, py, &CostFunction::quadratic()).unwrap();
        let v = SemidiscreteVersion::new(&plan, &mu).unwrap();
        let t = Map1D::from(crate::piecewise::Piecewise1D::affine(0.0, 1.0, 0.5, 0.5));
        let r = v.bad_set_mass(&t, 0.1, 12).unwrap();
        assert!((r.value - 0.6).abs() < 1e-12, "value={}", r.value);
        // callback fallback agrees within its reported delta
        let tc = Map1D::callback(|x| 0.5 + 0.5 * x);
        let rc = v.bad_set_mass(&tc, 0.1, 16).unwrap();
        assert!((rc.value - 0.6).abs() <= rc.refinement_delta + 1e-3);
    }

    #[test]
    fn semidiscrete_additive_over_source_split() {
        let (plan, mu, _) = pipeline(6);
        let v = SemidiscreteVersion::new(&plan, &mu).unwrap();
        let f = Window::all(&plan.target.space).unwrap();
        let whole = v.rectangle_mass(&Window::interval(0.1, 0.9, true, false), &f).unwrap();
        let left = v.rectangle_mass(&Window::interval(0.1, 0.37, true, false), &f).unwrap();
        let right = v.rectangle_mass(&Window::interval(0.37, 0.9, true, false), &f).unwrap();
        assert!((left + right - whole).abs() < 1e-12);
    }

    #[test]
    fn continuous_cost_close_to_plan_cost() {
        // |K[pi_hat] - K[pi_h]| <= omega_c(h) <= L h, L = 4 on these boxes.
        for k in [2usize, 8, 32] {
            let (plan, mu, nu) = pipeline(k);
            let v = ContinuousVersion::new(&plan, &mu, &nu).unwrap();
            let c = CostFunction::quadratic();
            let r = v.cost(&c, 12).unwrap();
            let gap = (r.value - plan.cost(&c)).abs();
            let h = plan.h_bound();
            assert!(
                gap <= 4.0 * h + r.refinement_delta + 1e-9,
                "k={k}: gap {gap} vs {h}"
            );
        }
    }

    fn cell_window(cell: &Cell) -> Window {
        Window {
            ranges: cell_ranges(cell).unwrap(),
        }
    }
}
