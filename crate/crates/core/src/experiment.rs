//! Scripted convergence studies and worked counterexamples, with
//! machine-checkable pass/fail records.
//!
//! Each runner builds its instance from closed-form data, runs the
//! partition/solve/project pipeline over a list of resolutions, and records
//! named values plus the inequalities they must satisfy. Thresholds that are
//! not forced by closed-form arithmetic are regression values frozen from the
//! first verified run (see [`thresholds`]); every assertion carries the
//! measured numbers so a failing record is self-explanatory.

use crate::cost::{estimate_modulus, grid_lipschitz, grid_modulus_pair, CostFunction};
use crate::error::{Error, Result};
use crate::measure::{Measure, Measure1D, Segment};
use crate::metrics;
use crate::partition::{AnchorRule, AnchorSpec, Cell, DiscreteMeasure, PointedPartition};
use crate::piecewise::{Map1D, Piece, Piecewise1D};
use crate::projection::{barycentric_projection, gm_projection_hnet, ProjectionMap};
use crate::solver::{solve_exact, HPlan, PlanEntry};
use crate::space::{CompactSpace, Point, ProductMetric};
use crate::transform::SemidiscreteVersion;
use serde::Serialize;
use std::sync::Arc;

/// Regression thresholds. Values tagged "frozen" were measured once on a
/// verified run of the pipeline at the stated resolution and are asserted
/// unchanged thereafter; the others restate closed-form constants.
pub mod thresholds {
    /// Value error of the exact solve at k = 256 on the uniform-to-uniform
    /// quadratic instance. Frozen; measured 1.27e-5.
    pub const VALUE_ERR_AT_K256: f64 = 0.01;
    /// d_2 of either projection kind against the monotone map at k = 256 on
    /// the same instance. Frozen; measured 5.6e-4 (barycentric).
    pub const MAP_D2_AT_K256: f64 = 0.05;
    /// Semidiscrete bad-set mass at delta = 0.1 for k >= 64. Frozen;
    /// measured 0 at k = 64.
    pub const BAD_SET_MASS_DELTA01_K64: f64 = 0.05;
    /// disc_p at k = 256 for the convergent runs. Frozen; measured 2.9e-3
    /// (zero-anchored atomic instance), 5.6e-4 (continuous instance).
    pub const DISC_AT_K256: f64 = 0.05;
    /// W_1 between the constructed plan and the discretized diagonal at
    /// k = 50. Frozen; measured 9.9e-3.
    pub const PINCHED_W1_AT_K50: f64 = 0.05;
    /// Hausdorff floor between the constructed support and the diagonal for
    /// k >= 10; the limit value is sqrt(2)/4.
    pub const PINCHED_SUPPORT_GAP: f64 = 0.3;
    /// Distance floor between the constant-half projection and every optimal
    /// map of the two-line cost.
    pub const SYMMETRIC_DP_FLOOR: f64 = 1.0 / 16.0;
    /// Distance floor between antidiagonal projections and the identity.
    pub const ANTIDIAG_DP_FLOOR: f64 = 0.4;
    /// Band around the closed-form limit 3/2 for d_1 at k = 128 on the
    /// atoms-to-atoms instance.
    pub const ATOM_D1_LIMIT_BAND: f64 = 0.05;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Cmp {
    Le,
    Ge,
}

/// One checked inequality: `lhs cmp rhs` with additive slack.
#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub lhs: f64,
    pub cmp: Cmp,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub k: usize,
    pub values: Vec<(String, f64)>,
    pub assertions: Vec<Assertion>,
    pub pass: bool,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, k: usize) -> Self {
        ExperimentRecord {
            experiment: experiment.to_string(),
            k,
            values: Vec::new(),
            assertions: Vec::new(),
            pass: true,
        }
    }

    pub fn value(&mut self, name: &str, v: f64) -> &mut Self {
        self.values.push((name.to_string(), v));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    pub fn assert_le(&mut self, name: &str, lhs: f64, rhs: f64, slack: f64) -> &mut Self {
        let pass = lhs <= rhs + slack;
        self.pass &= pass;
        self.assertions.push(Assertion {
            name: name.to_string(),
            lhs,
            cmp: Cmp::Le,
            rhs,
            slack,
            pass,
        });
        self
    }

    pub fn assert_ge(&mut self, name: &str, lhs: f64, rhs: f64, slack: f64) -> &mut Self {
        let pass = lhs >= rhs - slack;
        self.pass &= pass;
        self.assertions.push(Assertion {
            name: name.to_string(),
            lhs,
            cmp: Cmp::Ge,
            rhs,
            slack,
            pass,
        });
        self
    }
}

/// A fully specified transport instance with whatever closed-form data is
/// known about it.
pub struct Instance {
    pub name: String,
    pub x: CompactSpace,
    pub y: CompactSpace,
    pub mu: Measure,
    pub nu: Measure,
    pub cost: CostFunction,
    /// Optimal value of the continuous problem, when known in closed form.
    pub k_star: Option<f64>,
    /// Optimal transport map, when known in closed form.
    pub t_star: Option<Piecewise1D>,
    /// Whether every cell maps into itself under the optimal plan, which
    /// pins d_p(T_k, T_star) <= h.
    pub maps_within_cells: bool,
}

/// `mu = U[0,1]` to `nu = U[1/2,1]` under quadratic cost. The optimal value is
/// `int_0^1 (x/2 - 1/2)^2 dx = 1/12` and the optimal map is `x/2 + 1/2`, the
/// monotone rearrangement.
pub fn instance_uniform_squeeze() -> Instance {
    Instance {
        name: "uniform-squeeze".into(),
        x: CompactSpace::interval(0.0, 1.0).unwrap(),
        y: CompactSpace::interval(0.5, 1.0).unwrap(),
        mu: Measure::uniform_interval(0.0, 1.0).unwrap(),
        nu: Measure::uniform_interval(0.5, 1.0).unwrap(),
        cost: CostFunction::quadratic(),
        k_star: Some(1.0 / 12.0),
        t_star: Some(Piecewise1D::affine(0.0, 1.0, 0.5, 0.5)),
        maps_within_cells: false,
    }
}

/// `mu = nu = U[0,1]` under quadratic cost: the identity is optimal with
/// value 0, and identical center-anchored partitions give the diagonal plan.
pub fn instance_identity() -> Instance {
    Instance {
        name: "identity".into(),
        x: CompactSpace::interval(0.0, 1.0).unwrap(),
        y: CompactSpace::interval(0.0, 1.0).unwrap(),
        mu: Measure::uniform_interval(0.0, 1.0).unwrap(),
        nu: Measure::uniform_interval(0.0, 1.0).unwrap(),
        cost: CostFunction::quadratic(),
        k_star: Some(0.0),
        t_star: Some(Piecewise1D::affine(0.0, 1.0, 0.0, 1.0)),
        maps_within_cells: true,
    }
}

fn center_partition(
    space: &CompactSpace,
    measure: &Measure,
    k: usize,
) -> Result<Arc<PointedPartition>> {
    Ok(Arc::new(PointedPartition::uniform_interval(
        space,
        measure,
        k,
        &AnchorSpec::Rule(AnchorRule::Center),
    )?))
}

/// Grid-maximized Lipschitz bound for an instance's cost over its product
/// space; certifies `omega_c(h) <= L h` for the builtin smooth costs.
pub fn instance_lipschitz(inst: &Instance, grid: usize) -> Result<f64> {
    grid_lipschitz(
        &inst.cost,
        &ProductMetric::new(inst.x.clone(), inst.y.clone()),
        grid,
    )
}

/// Value-convergence sweep: solve exactly at each resolution and check
/// `|K[pi_h] - K*| <= L h + eps_cert`.
pub fn run_value_sweep(inst: &Instance, ks: &[usize]) -> Result<Vec<ExperimentRecord>> {
    let k_star = inst
        .k_star
        .ok_or_else(|| Error::invalid("value sweep needs an instance with known optimum"))?;
    let lipschitz = instance_lipschitz(inst, 512)?;
    let mut out = Vec::new();
    for &k in ks {
        let mut rec = ExperimentRecord::new(&format!("value-sweep-{}", inst.name), k);
        let px = center_partition(&inst.x, &inst.mu, k)?;
        let py = center_partition(&inst.y, &inst.nu, k)?;
        let (plan, cert) = HPlan::solve_exact(px, py, &inst.cost)?;
        let h = plan.h_bound();
        let cost = plan.cost(&inst.cost);
        let err = (cost - k_star).abs();
        rec.value("h", h)
            .value("cost", cost)
            .value("gap", cert.gap)
            .value("value_err", err)
            .value("bound", lipschitz * h + cert.gap);
        rec.assert_le("value-error-le-modulus-bound", err, lipschitz * h + cert.gap, 1e-9);
        out.push(rec);
    }
    Ok(out)
}

/// Two-point sharpness construction: a Dirac instance whose unique discrete
/// plan misses the optimum by the full sampled modulus.
pub fn run_sharpness(hs: &[f64], seed: u64) -> Result<Vec<ExperimentRecord>> {
    let space = CompactSpace::interval(0.0, 1.0).unwrap();
    let cost = CostFunction::quadratic().with_lipschitz(4.0);
    let product = ProductMetric::new(space.clone(), space.clone());
    let mut out = Vec::new();
    for (idx, &h) in hs.iter().enumerate() {
        let mut rec = ExperimentRecord::new("sharpness-two-point", idx);
        let omega = estimate_modulus(&cost, &product, h, 4000, seed)?;
        let (z1, z2, _) = grid_modulus_pair(&cost, &product, h, 800)?;
        let (x1, y1) = (z1.0.scalar()?, z1.1.scalar()?);
        let (x2, y2) = (z2.0.scalar()?, z2.1.scalar()?);
        // mu = delta_{x2}, nu = delta_{y2}; the cell {x1, x2} is anchored at
        // x1, so the only feasible plan pays c(x1, y1) while the true optimum
        // pays c(x2, y2).
        let px = two_point_partition(&space, x1, x2, h)?;
        let py = two_point_partition(&space, y1, y2, h)?;
        let (i_pt, j_pt) = (
            points_cell_index(&px)?,
            points_cell_index(&py)?,
        );
        let plan = HPlan::from_entries(
            px,
            py,
            vec![PlanEntry { i: i_pt, j: j_pt, mass: 1.0 }],
            0.0,
        )?;
        let k_star = cost.evaluate(&Point::Scalar(x2), &Point::Scalar(y2));
        let achieved = (plan.cost(&cost) - k_star).abs();
        rec.value("h", h)
            .value("sampled_modulus", omega.sampled_lower)
            .value("upper_modulus", omega.upper.unwrap_or(f64::NAN))
            .value("achieved_gap", achieved);
        rec.assert_ge(
            "achieved-gap-ge-099-sampled-modulus",
            achieved,
            0.99 * omega.sampled_lower,
            1e-12,
        );
        rec.assert_le("plan-h-bound-le-h", plan.h_bound(), h, 1e-12);
        out.push(rec);
    }
    Ok(out)
}

/// Partition of an interval into cells of diameter <= h, one of which is the
/// two-point set {a, b}; the Dirac measure sits on b while the anchor is a.
fn two_point_partition(
    space: &CompactSpace,
    a: f64,
    b: f64,
    h: f64,
) -> Result<Arc<PointedPartition>> {
    let (lo, hi) = match space {
        CompactSpace::Interval { lo, hi } => (*lo, *hi),
        _ => unreachable!(),
    };
    let (p, q) = if a <= b { (a, b) } else { (b, a) };
    let mut cells: Vec<Cell> = Vec::new();
    let mut anchors: Vec<Point> = Vec::new();
    let push_split = |cells: &mut Vec<Cell>, anchors: &mut Vec<Point>, u: f64, v: f64, cl: bool, cr: bool| {
        if v < u || (v == u && !(cl && cr)) {
            return;
        }
        let pieces = ((v - u) / h).ceil().max(1.0) as usize;
        for t in 0..pieces {
            let s = u + (v - u) * t as f64 / pieces as f64;
            let e = if t + 1 == pieces { v } else { u + (v - u) * (t + 1) as f64 / pieces as f64 };
            cells.push(Cell::interval(
                s,
                e,
                if t == 0 { cl } else { true },
                if t + 1 == pieces { cr } else { false },
            ));
            anchors.push(Point::Scalar(0.5 * (s + e)));
        }
    };
    push_split(&mut cells, &mut anchors, lo, p, true, false);
    let pts = if p == q {
        vec![Point::Scalar(p)]
    } else {
        vec![Point::Scalar(p), Point::Scalar(q)]
    };
    cells.push(Cell::Points(pts));
    anchors.push(Point::Scalar(a));
    if p < q {
        push_split(&mut cells, &mut anchors, p, q, false, false);
    }
    push_split(&mut cells, &mut anchors, q, hi, false, true);
    let measure = Measure::Line(Measure1D::dirac(b));
    let weights = cells
        .iter()
        .map(|c| measure.mass_of_cell(c))
        .collect::<Result<Vec<_>>>()?;
    let h_bound = cells
        .iter()
        .map(|c| c.diameter(space))
        .fold(0.0, f64::max);
    Ok(Arc::new(PointedPartition {
        space: space.clone(),
        cells,
        anchors,
        weights,
        h_bound,
    }))
}

fn points_cell_index(p: &PointedPartition) -> Result<usize> {
    p.cells
        .iter()
        .position(|c| matches!(c, Cell::Points(_)))
        .ok_or_else(|| Error::invalid("no points cell"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProjectionChoice {
    Barycentric,
    GeometricMedianHNet,
}

impl ProjectionChoice {
    fn extract(&self, plan: &HPlan) -> Result<ProjectionMap> {
        match self {
            ProjectionChoice::Barycentric => barycentric_projection(plan),
            ProjectionChoice::GeometricMedianHNet => gm_projection_hnet(plan),
        }
    }

    /// Constants of the projection error bound
    /// `d_p(T_h, T) <= A h + B delta + C pi_tilde[bad set]^(1/p)`:
    /// geometric-median maps of quality Q take
    /// `(3^((p-1)/p) Q, 2*3^((p-1)/p), 2*3^((p-1)/p) diam Y)`,
    /// barycentric maps take `(0, 2^((p-1)/p), 2^((p-1)/p) diam Y)`.
    pub fn error_constants(&self, quality: f64, p: f64, diam_y: f64) -> (f64, f64, f64) {
        match self {
            ProjectionChoice::GeometricMedianHNet => {
                let c3 = 3f64.powf((p - 1.0) / p);
                (c3 * quality, 2.0 * c3, 2.0 * c3 * diam_y)
            }
            ProjectionChoice::Barycentric => {
                let c2 = 2f64.powf((p - 1.0) / p);
                (0.0, c2, c2 * diam_y)
            }
        }
    }
}

pub const BAD_SET_DELTAS: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.4];

/// Map-convergence sweep: extract a projection at each resolution, measure
/// `d_p(T_k, T_star)`, assert monotone decrease, the frozen threshold at the
/// final resolution, and the projection error bound for each delta.
pub fn run_map_sweep(
    inst: &Instance,
    ks: &[usize],
    kind: ProjectionChoice,
    p: f64,
) -> Result<Vec<ExperimentRecord>> {
    let t_star = inst
        .t_star
        .as_ref()
        .ok_or_else(|| Error::invalid("map sweep needs an instance with a known optimal map"))?;
    let t_star = Map1D::Piecewise(t_star.clone());
    let diam_y = inst.y.diameter();
    let mut out: Vec<ExperimentRecord> = Vec::new();
    let mut prev_dp: Option<f64> = None;
    let last_k = *ks.last().unwrap_or(&0);
    for &k in ks {
        let mut rec = ExperimentRecord::new(&format!("map-sweep-{}", inst.name), k);
        let px = center_partition(&inst.x, &inst.mu, k)?;
        let py = center_partition(&inst.y, &inst.nu, k)?;
        let (plan, cert) = HPlan::solve_exact(px, py, &inst.cost)?;
        let h = plan.h_bound();
        let t_k = kind.extract(&plan)?;
        let dp = metrics::map_distance_p(&t_k.to_map()?, &t_star, &inst.mu, p)?;
        rec.value("h", h)
            .value("gap", cert.gap)
            .value("d_p", dp.value)
            .value("quality", t_k.quality);
        if let Some(prev) = prev_dp {
            rec.assert_le("d_p-monotone-decreasing", dp.value, prev, 1e-12);
        }
        if k == last_k {
            rec.assert_le(
                "d_p-final-below-threshold",
                dp.value,
                thresholds::MAP_D2_AT_K256,
                0.0,
            );
        }
        if inst.maps_within_cells {
            rec.assert_le("d_p-le-h-for-in-cell-maps", dp.value, h, 1e-12);
        }
        // projection error bound, all deltas
        let semi = SemidiscreteVersion::new(&plan, &inst.mu)?;
        let (ca, cb, cc) = kind.error_constants(t_k.quality, p, diam_y);
        for &delta in &BAD_SET_DELTAS {
            let bad = semi.bad_set_mass(&t_star, delta, 14)?;
            let rhs = ca * h + cb * delta + cc * bad.value.max(0.0).powf(1.0 / p);
            rec.value(&format!("bad_mass_{delta}"), bad.value);
            rec.assert_le(
                &format!("projection-error-bound-delta-{delta}"),
                dp.value,
                rhs,
                1e-9,
            );
        }
        prev_dp = Some(dp.value);
        out.push(rec);
    }
    Ok(out)
}

/// Bad-set decay on the standard instance: mass of the off-graph set at
/// delta = 0.1 is non-increasing in k and below the frozen threshold from
/// k = 64 on.
pub fn run_bad_set_decay(inst: &Instance, ks: &[usize]) -> Result<Vec<ExperimentRecord>> {
    let t_star = inst
        .t_star
        .as_ref()
        .ok_or_else(|| Error::invalid("bad-set sweep needs a known optimal map"))?;
    let t_star = Map1D::Piecewise(t_star.clone());
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for &k in ks {
        let mut rec = ExperimentRecord::new(&format!("bad-set-{}", inst.name), k);
        let px = center_partition(&inst.x, &inst.mu, k)?;
        let py = center_partition(&inst.y, &inst.nu, k)?;
        let (plan, _) = HPlan::solve_exact(px, py, &inst.cost)?;
        let semi = SemidiscreteVersion::new(&plan, &inst.mu)?;
        let bad = semi.bad_set_mass(&t_star, 0.1, 14)?;
        rec.value("bad_mass_0.1", bad.value);
        if let Some(prev) = prev {
            rec.assert_le("bad-mass-non-increasing", bad.value, prev, 1e-12);
        }
        if k >= 64 {
            rec.assert_le(
                "bad-mass-below-threshold",
                bad.value,
                thresholds::BAD_SET_MASS_DELTA01_K64,
                0.0,
            );
        }
        prev = Some(bad.value);
        out.push(rec);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleName {
    /// Lower-semicontinuous diagonal cost with off-center anchors: discrete
    /// values stay at 1 while the true optimum is 0.
    Ex33,
    /// Pinched quadratic cost: plans converge weakly but not in W_inf.
    Ex34,
    /// Two-line cost with the symmetric plan: projections stay 1/16 away
    /// from every optimal map.
    Ex45,
    /// Atoms-to-atoms instance where the Kantorovich and Monge optima split.
    Ex46,
    /// Atom at the discontinuity of the optimal map, center anchors:
    /// disc_p stays bounded below.
    Ex51,
    /// Same instance anchored at the atom: disc_p converges.
    Ex51Anchored0,
}

impl ExampleName {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "ex33" => Ok(ExampleName::Ex33),
            "ex34" => Ok(ExampleName::Ex34),
            "ex45" => Ok(ExampleName::Ex45),
            "ex46" => Ok(ExampleName::Ex46),
            "ex51" => Ok(ExampleName::Ex51),
            "ex51-anchored0" => Ok(ExampleName::Ex51Anchored0),
            other => Err(Error::UnknownName(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExampleName::Ex33 => "ex33",
            ExampleName::Ex34 => "ex34",
            ExampleName::Ex45 => "ex45",
            ExampleName::Ex46 => "ex46",
            ExampleName::Ex51 => "ex51",
            ExampleName::Ex51Anchored0 => "ex51-anchored0",
        }
    }
}

pub fn run_example(name: ExampleName, ks: &[usize], p: f64) -> Result<Vec<ExperimentRecord>> {
    match name {
        ExampleName::Ex33 => run_ex33(ks, p),
        ExampleName::Ex34 => run_ex34(ks),
        ExampleName::Ex45 => run_ex45(ks, p),
        ExampleName::Ex46 => run_ex46(ks),
        ExampleName::Ex51 => run_ex51(ks, p, false),
        ExampleName::Ex51Anchored0 => run_ex51(ks, p, true),
    }
}

/// Certify an explicitly constructed plan against the exact solver's dual
/// certificate; returns the certified absolute gap.
fn certify_explicit(plan: &HPlan, cost: &CostFunction) -> Result<f64> {
    let (_, cert) = solve_exact(&plan.plan.source, &plan.plan.target, cost)?;
    Ok(plan.plan.cost(cost) - cert.dual_objective(&plan.plan.source, &plan.plan.target))
}

/// Off-center anchors and the antidiagonal plan for the diagonal-indicator
/// cost: every anchor pair misses the diagonal, so all discrete costs are 1.
fn ex33_plan(k: usize) -> Result<(HPlan, CostFunction, Measure)> {
    let space = CompactSpace::interval(0.0, 1.0).unwrap();
    let mu = Measure::uniform_interval(0.0, 1.0).unwrap();
    let cost = CostFunction::diagonal_indicator();
    // source anchors pushed off the centers so no pair hits the diagonal
    let offsets: Vec<f64> = (0..k)
        .map(|i| if i % 2 == 0 { 0.25 } else { -0.25 } / k as f64)
        .collect();
    let px = Arc::new(PointedPartition::uniform_interval(
        &space,
        &mu,
        k,
        &AnchorSpec::Offsets(offsets),
    )?);
    let py = center_partition(&space, &mu, k)?;
    // the antidiagonal plan: cell i to cell k-1-i
    let entries: Vec<PlanEntry> = (0..k)
        .map(|i| PlanEntry { i, j: k - 1 - i, mass: 1.0 / k as f64 })
        .collect();
    Ok((HPlan::from_entries(px, py, entries, 0.0)?, cost, mu))
}

fn run_ex33(ks: &[usize], p: f64) -> Result<Vec<ExperimentRecord>> {
    let identity = Map1D::Piecewise(Piecewise1D::affine(0.0, 1.0, 0.0, 1.0));
    let mut out = Vec::new();
    for &k in ks {
        let mut rec = ExperimentRecord::new("ex33", k);
        let (plan, cost, mu) = ex33_plan(k)?;
        let cost_value = plan.cost(&cost);
        let gap = certify_explicit(&plan, &cost)?;
        let t_k = barycentric_projection(&plan)?;
        let dp = metrics::map_distance_p(&t_k.to_map()?, &identity, &mu, p)?;
        rec.value("cost", cost_value)
            .value("k_star", 0.0)
            .value("gap", gap)
            .value("d_p_to_identity", dp.value);
        rec.assert_le("discrete-value-equals-one", (cost_value - 1.0).abs(), 0.0, 1e-12);
        rec.assert_le("explicit-plan-certified-optimal", gap, 0.0, 1e-9);
        rec.assert_ge(
            "projection-stays-away-from-identity",
            dp.value,
            thresholds::ANTIDIAG_DP_FLOOR,
            0.0,
        );
        out.push(rec);
    }
    Ok(out)
}

/// 2k+1 centered cells with the nearly diagonal plan: rows 0 and k swap
/// targets, landing on the cost's two pinch lines.
fn ex34_plan(k: usize) -> Result<(HPlan, CostFunction, Measure)> {
    let space = CompactSpace::interval(0.0, 1.0).unwrap();
    let mu = Measure::uniform_interval(0.0, 1.0).unwrap();
    let cost = CostFunction::pinched();
    let n = 2 * k + 1;
    let part = center_partition(&space, &mu, n)?;
    let w = 1.0 / n as f64;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let j = if i == 0 {
            k
        } else if i == k {
            0
        } else {
            i
        };
        entries.push(PlanEntry { i, j, mass: w });
    }
    Ok((HPlan::from_entries(part.clone(), part, entries, 0.0)?, cost, mu))
}

fn run_ex34(ks: &[usize]) -> Result<Vec<ExperimentRecord>> {
    let identity = Map1D::Piecewise(Piecewise1D::affine(0.0, 1.0, 0.0, 1.0));
    let mut out = Vec::new();
    for &k in ks {
        let mut rec = ExperimentRecord::new("ex34", k);
        let n = 2 * k + 1;
        let w = 1.0 / n as f64;
        let (plan, cost, mu) = ex34_plan(k)?;
        let part = plan.source.clone();
        let gap = certify_explicit(&plan, &cost)?;
        // the first cell is forced to 1/2, so the sup distance to the
        // identity never drops below 1/2
        let t_k = barycentric_projection(&plan)?;
        let dinf = metrics::map_distance_inf(&t_k.to_map()?, &identity, &mu)?;
        // the same partition's diagonal plan discretizes the optimal plan
        let anchors = &part.anchors;
        let product_atoms = |pairs: Vec<(usize, usize)>| -> Result<DiscreteMeasure> {
            DiscreteMeasure::new(
                pairs
                    .iter()
                    .map(|&(i, j)| {
                        Ok(Point::Vector(vec![
                            anchors[i].scalar()?,
                            anchors[j].scalar()?,
                        ]))
                    })
                    .collect::<Result<Vec<_>>>()?,
                vec![w; n],
            )
        };
        let plan_atoms = product_atoms(
            (0..n)
                .map(|i| if i == 0 { (0, k) } else if i == k { (k, 0) } else { (i, i) })
                .collect(),
        )?;
        let diag_atoms = product_atoms((0..n).map(|i| (i, i)).collect())?;
        let sup = |a: &Point, b: &Point| -> f64 {
            let (a, b) = (a.vector().unwrap(), b.vector().unwrap());
            (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
        };
        let (w1, _) = metrics::wasserstein_p(&plan_atoms, &diag_atoms, sup, 1.0)?;
        // bottleneck distance dominates the support Hausdorff gap in the
        // same metric
        let winf = metrics::wasserstein_inf(&plan_atoms, &diag_atoms, sup)?;
        let dh_discrete = metrics::hausdorff(&plan_atoms.points, &diag_atoms.points, sup)?;
        // Hausdorff gap to the continuous diagonal, Euclidean in the plane
        let euclid = |a: &Point, b: &Point| -> f64 {
            let (a, b) = (a.vector().unwrap(), b.vector().unwrap());
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        };
        let diag_probe: Vec<Point> = (0..=1000)
            .map(|t| Point::Vector(vec![t as f64 / 1000.0, t as f64 / 1000.0]))
            .collect();
        let dh = metrics::hausdorff(&plan_atoms.points, &diag_probe, euclid)?;
        let off1 = (anchors[0].scalar()?, anchors[k].scalar()?);
        let off2 = (anchors[k].scalar()?, anchors[0].scalar()?);
        let drift = (off1.0 - 0.0)
            .abs()
            .max((off1.1 - 0.5).abs())
            .max((off2.0 - 0.5).abs())
            .max((off2.1 - 0.0).abs());
        rec.value("gap", gap)
            .value("w1_to_diagonal", w1)
            .value("winf_to_diagonal", winf)
            .value("support_hausdorff", dh)
            .value("offdiag_drift", drift)
            .value("dinf_to_identity", dinf);
        rec.assert_le("explicit-plan-certified-optimal", gap, 0.0, 1e-9);
        rec.assert_ge("bottleneck-dominates-support-gap", winf, dh_discrete, 1e-12);
        rec.assert_ge("sup-distance-floor-against-identity", dinf, 0.5, 1e-12);
        if k >= 50 {
            rec.assert_le(
                "w1-below-threshold",
                w1,
                thresholds::PINCHED_W1_AT_K50,
                0.0,
            );
        }
        if k >= 10 {
            rec.assert_ge(
                "support-hausdorff-floor",
                dh,
                thresholds::PINCHED_SUPPORT_GAP,
                0.0,
            );
        }
        rec.assert_le("offdiag-atoms-near-limits", drift, 2.0 / k as f64, 1e-12);
        out.push(rec);
    }
    Ok(out)
}

/// 2k+1 centered cells with the symmetric plan: half the mass on the
/// diagonal, half on the antidiagonal, both inside the cost's zero set.
fn ex45_plan(k: usize) -> Result<(HPlan, CostFunction, Measure)> {
    let space = CompactSpace::interval(0.0, 1.0).unwrap();
    let mu = Measure::uniform_interval(0.0, 1.0).unwrap();
    let cost = CostFunction::antidiagonal();
    let n = 2 * k + 1;
    let part = center_partition(&space, &mu, n)?;
    let w = 0.5 / n as f64;
    let mut entries = Vec::with_capacity(2 * n);
    for i in 0..n {
        let j = n - 1 - i;
        if i == j {
            entries.push(PlanEntry { i, j, mass: 2.0 * w });
        } else {
            entries.push(PlanEntry { i, j: i, mass: w });
            entries.push(PlanEntry { i, j, mass: w });
        }
    }
    Ok((HPlan::from_entries(part.clone(), part, entries, 0.0)?, cost, mu))
}

fn run_ex45(ks: &[usize], p: f64) -> Result<Vec<ExperimentRecord>> {
    // the two candidate optimal maps probed: eps = 0 (identity) and eps = 1/4
    let t_eps0 = Map1D::Piecewise(Piecewise1D::affine(0.0, 1.0, 0.0, 1.0));
    let t_eps_quarter = Map1D::Piecewise(
        Piecewise1D::new(vec![
            Piece { lo: 0.0, hi: 0.25, closed_left: true, closed_right: false, slope: -1.0, intercept: 1.0 },
            Piece { lo: 0.25, hi: 0.75, closed_left: true, closed_right: false, slope: 1.0, intercept: 0.0 },
            Piece { lo: 0.75, hi: 1.0, closed_left: true, closed_right: true, slope: -1.0, intercept: 1.0 },
        ])
        .unwrap(),
    );
    let mut out = Vec::new();
    for &k in ks {
        let mut rec = ExperimentRecord::new("ex45", k);
        let (plan, cost, mu) = ex45_plan(k)?;
        let gap = certify_explicit(&plan, &cost)?;
        let t_k = barycentric_projection(&plan)?;
        let constant_drift = t_k
            .values
            .iter()
            .map(|v| (v.scalar().unwrap() - 0.5).abs())
            .fold(0.0f64, f64::max);
        let d0 = metrics::map_distance_p(&t_k.to_map()?, &t_eps0, &mu, p)?;
        let dq = metrics::map_distance_p(&t_k.to_map()?, &t_eps_quarter, &mu, p)?;
        rec.value("gap", gap)
            .value("constant_half_drift", constant_drift)
            .value("d_p_to_identity", d0.value)
            .value("d_p_to_quarter_fold", dq.value);
        rec.assert_le("explicit-plan-certified-optimal", gap, 0.0, 1e-9);
        rec.assert_le("projection-is-constant-half", constant_drift, 0.0, 1e-12);
        rec.assert_ge(
            "d_p-floor-against-identity",
            d0.value,
            thresholds::SYMMETRIC_DP_FLOOR,
            0.0,
        );
        rec.assert_ge(
            "d_p-floor-against-quarter-fold",
            dq.value,
            thresholds::SYMMETRIC_DP_FLOOR,
            0.0,
        );
        out.push(rec);
    }
    Ok(out)
}

struct AtomSplitSetup {
    space: CompactSpace,
    mu: Measure,
    nu: Measure,
    cost: CostFunction,
    /// Optimal Monge map: atom to atom, then shift; indicator-sum form so it
    /// is defined on the whole interval. M[T*] = 17/2.
    t_star: Piecewise1D,
    /// mu-a.e. limit of the projections: the barycentric projection of the
    /// optimal plan, which splits from T*.
    t_limit: Piecewise1D,
}

fn ex46_setup() -> Result<AtomSplitSetup> {
    Ok(AtomSplitSetup {
        space: CompactSpace::interval(-2.0, 2.0).unwrap(),
        mu: Measure::Line(Measure1D::new(
            vec![(-2.0, 0.5)],
            vec![Segment { lo: -1.0, hi: 0.0, height: 0.5 }],
        )?),
        nu: Measure::Line(Measure1D::new(
            vec![(2.0, 0.5)],
            vec![Segment { lo: 0.0, hi: 1.0, height: 0.5 }],
        )?),
        cost: CostFunction::quadratic(),
        t_star: Piecewise1D::new(vec![
            Piece { lo: -2.0, hi: -2.0, closed_left: true, closed_right: true, slope: 0.0, intercept: 2.0 },
            Piece { lo: -2.0, hi: -1.0, closed_left: false, closed_right: false, slope: 0.0, intercept: 0.0 },
            Piece { lo: -1.0, hi: 0.0, closed_left: true, closed_right: true, slope: 1.0, intercept: 1.0 },
            Piece { lo: 0.0, hi: 2.0, closed_left: false, closed_right: true, slope: 0.0, intercept: 0.0 },
        ])?,
        t_limit: Piecewise1D::new(vec![
            Piece { lo: -2.0, hi: -2.0, closed_left: true, closed_right: true, slope: 0.0, intercept: 0.5 },
            Piece { lo: -2.0, hi: -1.0, closed_left: false, closed_right: false, slope: 0.0, intercept: 0.0 },
            Piece { lo: -1.0, hi: 0.0, closed_left: true, closed_right: true, slope: 0.0, intercept: 2.0 },
            Piece { lo: 0.0, hi: 2.0, closed_left: false, closed_right: true, slope: 0.0, intercept: 0.0 },
        ])?,
    })
}

fn ex46_solved_plan(setup: &AtomSplitSetup, k: usize) -> Result<HPlan> {
    let px = center_partition(&setup.space, &setup.mu, k)?;
    let py = center_partition(&setup.space, &setup.nu, k)?;
    let (plan, _) = HPlan::solve_exact(px, py, &setup.cost)?;
    Ok(plan)
}

fn run_ex46(ks: &[usize]) -> Result<Vec<ExperimentRecord>> {
    let setup = ex46_setup()?;
    let space = setup.space.clone();
    let mu = setup.mu.clone();
    let nu = setup.nu.clone();
    let cost = setup.cost.clone();
    let t_star = Map1D::Piecewise(setup.t_star.clone());
    let t_limit = Map1D::Piecewise(setup.t_limit.clone());
    let monge = metrics::monge_cost(&t_star, &mu, &cost, 18)?;
    let k_star_plan = 19.0 / 3.0;
    let lipschitz = 16.0; // 2 * diam * 2 factors on [-2, 2]^2
    let mut out = Vec::new();
    for &k in ks {
        let mut rec = ExperimentRecord::new("ex46", k);
        let px = center_partition(&space, &mu, k)?;
        let py = center_partition(&space, &nu, k)?;
        let h = 4.0 / k as f64;
        // discretization of the optimal plan: pi_ij = pi*[E_i x F_j]
        let overlap = |cell: &Cell, lo: f64, hi: f64| -> f64 {
            let Cell::Interval { lo: a, hi: b, .. } = cell else { return 0.0 };
            (b.min(hi) - a.max(lo)).max(0.0)
        };
        let mut entries = Vec::new();
        for (i, ci) in px.cells.iter().enumerate() {
            let has_atom = ci.contains(&space, &Point::Scalar(-2.0));
            let ai = overlap(ci, -1.0, 0.0);
            for (j, cj) in py.cells.iter().enumerate() {
                let has_target_atom = cj.contains(&space, &Point::Scalar(2.0));
                let bj = overlap(cj, 0.0, 1.0);
                let mut mass = 0.0;
                if has_atom {
                    mass += 0.5 * bj;
                }
                if has_target_atom {
                    mass += 0.5 * ai;
                }
                if mass > 0.0 {
                    entries.push(PlanEntry { i, j, mass });
                }
            }
        }
        let explicit = HPlan::from_entries(px.clone(), py.clone(), entries, f64::NAN)?;
        let explicit_cost = explicit.cost(&cost);
        // projections come from the solved optimal plan, as in an
        // approximating sequence
        let (plan, _) = HPlan::solve_exact(px, py, &cost)?;
        let t_k = barycentric_projection(&plan)?;
        let at_atom = t_k
            .evaluate(&Point::Scalar(-2.0))?
            .scalar()?;
        let d1_star = metrics::map_distance_p(&t_k.to_map()?, &t_star, &mu, 1.0)?;
        let d1_limit = metrics::map_distance_p(&t_k.to_map()?, &t_limit, &mu, 1.0)?;
        rec.value("h", h)
            .value("monge_cost_t_star", monge.value)
            .value("explicit_plan_cost", explicit_cost)
            .value("t_k_at_atom", at_atom)
            .value("d1_to_t_star", d1_star.value)
            .value("d1_to_limit_map", d1_limit.value);
        rec.assert_le(
            "monge-cost-is-17-over-2",
            (monge.value - 8.5).abs(),
            0.0,
            1e-9,
        );
        rec.assert_le(
            "plan-discretization-cost-near-19-over-3",
            (explicit_cost - k_star_plan).abs(),
            lipschitz * h,
            1e-9,
        );
        rec.assert_le(
            "projection-at-atom-near-half",
            (at_atom - 0.5).abs(),
            2.0 / k as f64,
            1e-12,
        );
        if k >= 128 {
            rec.assert_le(
                "d1-near-closed-form-limit",
                (d1_star.value - 1.5).abs(),
                thresholds::ATOM_D1_LIMIT_BAND,
                0.0,
            );
        }
        out.push(rec);
    }
    Ok(out)
}

/// Atom-at-the-jump instance: half an atom at 0 plus uniform density, pushed
/// onto two atoms. The monotone (optimal) plan keeps the atom in the first
/// cell and sends the density to the far target.
fn ex51_plan(k: usize, anchored_at_zero: bool) -> Result<(HPlan, CostFunction, Measure, Piecewise1D)> {
    let space = CompactSpace::interval(0.0, 1.0).unwrap();
    let mu = Measure::Line(Measure1D::new(
        vec![(0.0, 0.5)],
        vec![Segment { lo: 0.0, hi: 1.0, height: 0.5 }],
    )?);
    let nu = Measure::Line(Measure1D::new(vec![(0.0, 0.5), (1.0, 0.5)], vec![])?);
    let cost = CostFunction::quadratic();
    let t_star = Piecewise1D::new(vec![
        Piece { lo: 0.0, hi: 0.0, closed_left: true, closed_right: true, slope: 0.0, intercept: 0.0 },
        Piece { lo: 0.0, hi: 1.0, closed_left: false, closed_right: true, slope: 0.0, intercept: 1.0 },
    ])?;
    let anchors = if anchored_at_zero {
        let mut offs = vec![0.0; k];
        offs[0] = -0.5 / k as f64; // pulls the first anchor onto the atom
        AnchorSpec::Offsets(offs)
    } else {
        AnchorSpec::Rule(AnchorRule::Center)
    };
    let px = Arc::new(PointedPartition::uniform_interval(&space, &mu, k, &anchors)?);
    let py = center_partition(&space, &nu, k)?;
    // mass 1/2 stays at the left edge, the density flows to the right
    let mut entries = vec![
        PlanEntry { i: 0, j: 0, mass: 0.5 },
        PlanEntry { i: 0, j: k - 1, mass: 0.5 / k as f64 },
    ];
    for i in 1..k {
        entries.push(PlanEntry { i, j: k - 1, mass: 0.5 / k as f64 });
    }
    Ok((HPlan::from_entries(px, py, entries, 0.0)?, cost, mu, t_star))
}

fn run_ex51(ks: &[usize], p: f64, anchored_at_zero: bool) -> Result<Vec<ExperimentRecord>> {
    let name = if anchored_at_zero { "ex51-anchored0" } else { "ex51" };
    let mut out = Vec::new();
    let last_k = *ks.last().unwrap_or(&0);
    for &k in ks {
        let mut rec = ExperimentRecord::new(name, k);
        let (plan, cost, mu, t_star) = ex51_plan(k, anchored_at_zero)?;
        let t_star = Map1D::Piecewise(t_star);
        let px = plan.source.clone();
        let gap = certify_explicit(&plan, &cost)?;
        let t_k = barycentric_projection(&plan)?;
        let disc = metrics::disc_p(&t_k, &t_star, p)?;
        let osc = metrics::oscillation_sum(&t_star, &px, p, 0, 0)?;
        let d_p = metrics::map_distance_p(&t_k.to_map()?, &t_star, &mu, p)?;
        rec.value("gap", gap)
            .value("disc_p", disc)
            .value("d_p", d_p.value)
            .value("oscillation_sum", osc)
            .value("t_k_on_first_cell", t_k.values[0].scalar()?);
        rec.assert_le("explicit-plan-certified-optimal", gap, 0.0, 1e-9);
        if anchored_at_zero {
            if k == last_k {
                rec.assert_le(
                    "disc-final-below-threshold",
                    disc,
                    thresholds::DISC_AT_K256,
                    0.0,
                );
            }
        } else {
            rec.assert_ge(
                "disc-bounded-below",
                disc,
                0.5 * (1.0 - 3.0 / k as f64),
                1e-12,
            );
            // the oscillation sum explains the obstruction
            rec.assert_ge("oscillation-sum-floor", osc, 0.5, 1e-12);
        }
        // first-cell value is pinned near the left edge regardless
        rec.assert_le(
            "projection-small-on-first-cell",
            t_k.values[0].scalar()?,
            3.0 / k as f64,
            1e-12,
        );
        out.push(rec);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DiscStudy {
    /// Continuous optimal map: disc_p converges.
    ContinuousMap,
    /// Atom sitting on the jump of the optimal map: disc_p stays bounded
    /// away from zero with center anchors, while re-anchoring at the atom
    /// restores convergence.
    AtomOnJump,
}

pub fn run_disc_sweep(side: DiscStudy, ks: &[usize], p: f64) -> Result<Vec<ExperimentRecord>> {
    match side {
        DiscStudy::ContinuousMap => {
            let inst = instance_uniform_squeeze();
            let t_star = Map1D::Piecewise(inst.t_star.clone().unwrap());
            let mut out = Vec::new();
            let last_k = *ks.last().unwrap_or(&0);
            for &k in ks {
                let mut rec = ExperimentRecord::new("disc-continuous-map", k);
                let px = center_partition(&inst.x, &inst.mu, k)?;
                let py = center_partition(&inst.y, &inst.nu, k)?;
                let (plan, _) = HPlan::solve_exact(px, py, &inst.cost)?;
                let t_k = barycentric_projection(&plan)?;
                let disc = metrics::disc_p(&t_k, &t_star, p)?;
                rec.value("disc_p", disc);
                if k == last_k {
                    rec.assert_le(
                        "disc-final-below-threshold",
                        disc,
                        thresholds::DISC_AT_K256,
                        0.0,
                    );
                }
                out.push(rec);
            }
            Ok(out)
        }
        DiscStudy::AtomOnJump => {
            let mut out = run_ex51(ks, p, false)?;
            out.extend(run_ex51(ks, p, true)?);
            Ok(out)
        }
    }
}

/// One assembled pipeline state for interactive exploration: the plan, the
/// extracted projection, and the closed-form maps to compare against.
pub struct Scene {
    pub name: String,
    pub plan: HPlan,
    pub mu: Measure,
    pub cost: CostFunction,
    pub projection: ProjectionMap,
    /// Optimal transport map, when the instance has one in closed form.
    pub reference: Option<Piecewise1D>,
    /// Limit of the projections when it differs from the reference.
    pub limit: Option<Piecewise1D>,
    pub gap: f64,
}

/// Build a named scene at resolution `k`. Names: `squeeze`, `identity`, and
/// the example names accepted by [`ExampleName::parse`].
pub fn build_scene(name: &str, k: usize, kind: ProjectionChoice) -> Result<Scene> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let (plan, mu, cost, reference, limit, gap) = match name {
        "squeeze" | "identity" => {
            let inst = if name == "squeeze" {
                instance_uniform_squeeze()
            } else {
                instance_identity()
            };
            let px = center_partition(&inst.x, &inst.mu, k)?;
            let py = center_partition(&inst.y, &inst.nu, k)?;
            let (plan, cert) = HPlan::solve_exact(px, py, &inst.cost)?;
            (plan, inst.mu, inst.cost, inst.t_star, None, cert.gap)
        }
        "ex33" => {
            let (plan, cost, mu) = ex33_plan(k)?;
            let gap = certify_explicit(&plan, &cost)?;
            (
                plan,
                mu,
                cost,
                Some(Piecewise1D::affine(0.0, 1.0, 0.0, 1.0)),
                Some(Piecewise1D::affine(0.0, 1.0, 1.0, -1.0)),
                gap,
            )
        }
        // Both constructed plans sit inside the zero set of a nonnegative
        // cost, so the zero dual pair already certifies them: the gap is the
        // plan cost itself. Skipping the LP keeps large k interactive.
        "ex34" => {
            let (plan, cost, mu) = ex34_plan(k)?;
            let gap = plan.cost(&cost);
            (
                plan,
                mu,
                cost,
                Some(Piecewise1D::affine(0.0, 1.0, 0.0, 1.0)),
                None,
                gap,
            )
        }
        "ex45" => {
            let (plan, cost, mu) = ex45_plan(k)?;
            let gap = plan.cost(&cost);
            (
                plan,
                mu,
                cost,
                Some(Piecewise1D::affine(0.0, 1.0, 0.0, 1.0)),
                Some(Piecewise1D::constant(0.0, 1.0, 0.5)),
                gap,
            )
        }
        "ex46" => {
            let setup = ex46_setup()?;
            let plan = ex46_solved_plan(&setup, k)?;
            let gap = plan.plan.eps_cert;
            (
                plan,
                setup.mu,
                setup.cost,
                Some(setup.t_star),
                Some(setup.t_limit),
                gap,
            )
        }
        "ex51" | "ex51-anchored0" => {
            let (plan, cost, mu, t_star) = ex51_plan(k, name == "ex51-anchored0")?;
            let gap = certify_explicit(&plan, &cost)?;
            (plan, mu, cost, Some(t_star), None, gap)
        }
        other => return Err(Error::UnknownName(other.to_string())),
    };
    let projection = kind.extract(&plan)?;
    Ok(Scene {
        name: name.to_string(),
        plan,
        mu,
        cost,
        projection,
        reference,
        limit,
        gap,
    })
}

/// CSV with one row per record: `experiment,k,<value columns...>,pass`.
/// Column set comes from the first record; all records of one experiment
/// carry the same value names. Numbers use 17 significant digits.
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    let Some(first) = records.first() else {
        return out;
    };
    let names: Vec<&str> = first.values.iter().map(|(n, _)| n.as_str()).collect();
    out.push_str("experiment,k");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",pass\n");
    for r in records {
        out.push_str(&r.experiment);
        out.push_str(&format!(",{}", r.k));
        for n in &names {
            match r.get(n) {
                Some(v) => out.push_str(&format!(",{v:.16e}")),
                None => out.push(','),
            }
        }
        out.push_str(&format!(",{}\n", r.pass));
    }
    out
}

/// JSON summary `{version, experiment, records: [...]}`.
pub fn summary_json(experiment: &str, records: &[ExperimentRecord]) -> serde_json::Value {
    serde_json::json!({
        "version": 1,
        "experiment": experiment,
        "pass": records.iter().all(|r| r.pass),
        "records": records,
    })
}
