//! Comparison functionals: `d_p` between maps, `disc_p` at partition anchors,
//! Wasserstein distances between discrete measures, bottleneck `W_inf`,
//! total variation, Hausdorff distance, oscillation sums and Monge costs.
//!
//! Integrals against the supported measure class are computed exactly by
//! breakpoint decomposition whenever both maps are piecewise affine; the
//! quadrature fallback (for callback oracles) reports its refinement delta so
//! callers can fold it into their tolerances.

use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::measure::{Measure, Measure1D};
use crate::partition::{DiscreteMeasure, PointedPartition};
use crate::piecewise::Map1D;
use crate::projection::ProjectionMap;
use crate::rng::Rng;
use crate::solver;
use crate::space::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IntegrationMethod {
    ExactPiecewise,
    Quadrature,
}

#[derive(Clone, Copy, Debug)]
pub struct MapDistanceReport {
    pub value: f64,
    pub p: f64,
    pub method: IntegrationMethod,
    /// Last dyadic refinement step size; zero for exact integration.
    pub refinement_delta: f64,
}

/// Signed antiderivative of `|u|^p`.
fn abs_pow_antideriv(t: f64, p: f64) -> f64 {
    t.signum() * t.abs().powf(p + 1.0) / (p + 1.0)
}

/// Merge the breakpoints of the maps and the measure into sorted cut points.
fn cut_points(maps: &[&Map1D], mu: &Measure1D) -> Vec<f64> {
    let mut cuts: Vec<f64> = Vec::new();
    for m in maps {
        if let Some(pw) = m.as_piecewise() {
            cuts.extend(pw.breakpoints());
        }
    }
    for s in &mu.segments {
        cuts.push(s.lo);
        cuts.push(s.hi);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Sum of segment heights covering the open interval around `x`.
fn density_at(mu: &Measure1D, x: f64) -> f64 {
    mu.segments
        .iter()
        .filter(|s| s.lo < x && x < s.hi)
        .map(|s| s.height)
        .sum()
}

struct AffineOn {
    slope: f64,
    intercept: f64,
}

fn affine_on(map: &Map1D, a: f64, b: f64) -> Result<Option<AffineOn>> {
    match map {
        Map1D::Piecewise(pw) => {
            // Integration cuts include every breakpoint, so a piece covering
            // the open interval (a, b) covers [a, b] up to endpoint flags.
            Ok(pw
                .pieces
                .iter()
                .find(|p| p.lo <= a && b <= p.hi)
                .map(|p| AffineOn { slope: p.slope, intercept: p.intercept }))
        }
        Map1D::Callback(_) => Err(Error::Unsupported {
            expected: "piecewise map".into(),
            got: "callback".into(),
        }),
    }
}

/// `d_p(T1, T2) = (int |T1 - T2|^p dmu)^(1/p)`, exact when both maps are
/// piecewise affine, dyadic midpoint quadrature otherwise.
pub fn map_distance_p(t1: &Map1D, t2: &Map1D, mu: &Measure, p: f64) -> Result<MapDistanceReport> {
    if p < 1.0 {
        return Err(Error::invalid("p must be at least 1"));
    }
    let mu = mu.as_line()?;
    let exact = t1.as_piecewise().is_some() && t2.as_piecewise().is_some();
    let mut total = 0.0f64;
    let mut delta = 0.0f64;
    if exact {
        let cuts = cut_points(&[t1, t2], mu);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let h = density_at(mu, 0.5 * (a + b));
            if h == 0.0 {
                continue;
            }
            let (Some(f1), Some(f2)) = (affine_on(t1, a, b)?, affine_on(t2, a, b)?) else {
                return Err(Error::invalid(
                    "map undefined on a positive-density region",
                ));
            };
            let ds = f1.slope - f2.slope;
            let di = f1.intercept - f2.intercept;
            total += h * if ds == 0.0 {
                di.abs().powf(p) * (b - a)
            } else {
                (abs_pow_antideriv(ds * b + di, p) - abs_pow_antideriv(ds * a + di, p)) / ds
            };
        }
    } else {
        for s in &mu.segments {
            if s.height == 0.0 || s.hi <= s.lo {
                continue;
            }
            let f = |x: f64| -> Result<f64> {
                Ok((t1.evaluate(x)? - t2.evaluate(x)?).abs().powf(p))
            };
            let (v, d) = refine_midpoint(s.lo, s.hi, &f, 1e-10, 20)?;
            total += s.height * v;
            delta += s.height * d;
        }
    }
    for &(x, w) in &mu.atoms {
        if w == 0.0 {
            continue;
        }
        total += w * (t1.evaluate(x)? - t2.evaluate(x)?).abs().powf(p);
    }
    Ok(MapDistanceReport {
        value: total.max(0.0).powf(1.0 / p),
        p,
        method: if exact {
            IntegrationMethod::ExactPiecewise
        } else {
            IntegrationMethod::Quadrature
        },
        refinement_delta: delta,
    })
}

/// Essential sup distance between two piecewise maps under `mu`: the sup over
/// positive-density subintervals and atoms.
pub fn map_distance_inf(t1: &Map1D, t2: &Map1D, mu: &Measure) -> Result<f64> {
    let mu = mu.as_line()?;
    let cuts = cut_points(&[t1, t2], mu);
    let mut worst = 0.0f64;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a || density_at(mu, 0.5 * (a + b)) == 0.0 {
            continue;
        }
        let (Some(f1), Some(f2)) = (affine_on(t1, a, b)?, affine_on(t2, a, b)?) else {
            return Err(Error::invalid("map undefined on a positive-density region"));
        };
        let ds = f1.slope - f2.slope;
        let di = f1.intercept - f2.intercept;
        worst = worst.max((ds * a + di).abs()).max((ds * b + di).abs());
    }
    for &(x, w) in &mu.atoms {
        if w > 0.0 {
            worst = worst.max((t1.evaluate(x)? - t2.evaluate(x)?).abs());
        }
    }
    Ok(worst)
}

/// Dyadic midpoint refinement of `int_a^b f`. Stops once two consecutive
/// level deltas drop below `tol` (a single agreement can be a coincidence:
/// kink-cell errors cycle under doubling when breakpoints sit at rational
/// offsets) or at the level cap. Returns (value, reported delta).
pub(crate) fn refine_midpoint(
    a: f64,
    b: f64,
    f: &dyn Fn(f64) -> Result<f64>,
    tol: f64,
    max_level: u32,
) -> Result<(f64, f64)> {
    let mut n = 1usize;
    let mut prev = f64::NAN;
    let mut prev_delta = f64::INFINITY;
    for _level in 0..=max_level {
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            acc += f(a + (i as f64 + 0.5) * h)?;
        }
        let cur = acc * h;
        if prev.is_finite() {
            let delta = (cur - prev).abs();
            let settled = delta < tol && prev_delta < tol.max(1e-7) && n >= 64;
            if settled || n >= 1 << max_level {
                return Ok((cur, delta));
            }
            prev_delta = delta;
        }
        prev = cur;
        n *= 2;
    }
    Ok((prev, f64::NAN))
}

/// Discrete pseudometric between a projection map and an oracle, evaluated at
/// the projection's own partition anchors with its cell weights.
pub fn disc_p(t1: &ProjectionMap, t2: &Map1D, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid("p must be at least 1"));
    }
    let mut total = 0.0f64;
    for (i, anchor) in t1.source.anchors.iter().enumerate() {
        let w = t1.source.weights[i];
        if w == 0.0 {
            continue;
        }
        let y1 = t1.value_on_cell(i);
        let y2 = Point::Scalar(t2.evaluate(anchor.scalar()?)?);
        let d = t1.target_space.distance(y1, &y2);
        total += w * d.powf(p);
    }
    Ok(total.powf(1.0 / p))
}

/// `W_p` between discrete measures via an exact transport solve with cost
/// `d^p`. Returns the value and the optimal coupling.
pub fn wasserstein_p(
    sigma1: &DiscreteMeasure,
    sigma2: &DiscreteMeasure,
    metric: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static,
    p: f64,
) -> Result<(f64, solver::DiscretePlan)> {
    if p < 1.0 || !p.is_finite() {
        return Err(Error::invalid("p must lie in [1, infinity)"));
    }
    let cost = CostFunction::metric_power(metric, p);
    let (plan, _cert) = solver::solve_exact(sigma1, sigma2, &cost)?;
    let value = plan.cost(&cost).max(0.0).powf(1.0 / p);
    Ok((value, plan))
}

/// Bottleneck (`W_inf`) distance between discrete measures: the smallest
/// threshold `t` such that all mass can be routed over pairs at distance at
/// most `t`. Exact: binary search over the sorted pairwise distances with a
/// max-flow feasibility test at each candidate.
pub fn wasserstein_inf(
    sigma1: &DiscreteMeasure,
    sigma2: &DiscreteMeasure,
    metric: impl Fn(&Point, &Point) -> f64,
) -> Result<f64> {
    let rows = sigma1.support();
    let cols = sigma2.support();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Infeasible("empty support".into()));
    }
    let a: Vec<f64> = rows.iter().map(|&i| sigma1.weights[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| sigma2.weights[j]).collect();
    let d: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| {
            cols.iter()
                .map(|&j| metric(&sigma1.points[i], &sigma2.points[j]))
                .collect()
        })
        .collect();
    let mut candidates: Vec<f64> = d.iter().flatten().copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let feasible = |t: f64| -> bool {
        bottleneck_feasible(&a, &b, &d, t)
    };
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1;
    if !feasible(candidates[hi]) {
        return Err(Error::Infeasible("mass mismatch in bottleneck test".into()));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}

/// Max-flow feasibility: can all mass be routed using only pairs with
/// `d_ij <= t`? Dinic-style BFS/DFS on the thresholded bipartite graph.
fn bottleneck_feasible(a: &[f64], b: &[f64], d: &[Vec<f64>], t: f64) -> bool {
    let (m, n) = (a.len(), b.len());
    let nodes = m + n + 2;
    let source = m + n;
    let sink = m + n + 1;
    // adjacency as (to, capacity, reverse index)
    let mut graph: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); nodes];
    let add_edge = |g: &mut Vec<Vec<(usize, f64, usize)>>, u: usize, v: usize, c: f64| {
        let ru = g[v].len();
        let rv = g[u].len();
        g[u].push((v, c, ru));
        g[v].push((u, 0.0, rv));
    };
    for (i, &ai) in a.iter().enumerate() {
        add_edge(&mut graph, source, i, ai);
    }
    for (j, &bj) in b.iter().enumerate() {
        add_edge(&mut graph, m + j, sink, bj);
    }
    for i in 0..m {
        for j in 0..n {
            if d[i][j] <= t {
                add_edge(&mut graph, i, m + j, f64::INFINITY);
            }
        }
    }
    let total: f64 = a.iter().sum();
    let mut flow = 0.0f64;
    let eps = 1e-12 * total.max(1.0);
    loop {
        // BFS levels
        let mut level = vec![usize::MAX; nodes];
        level[source] = 0;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &(v, c, _) in &graph[u] {
                if c > eps && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[sink] == usize::MAX {
            break;
        }
        // DFS blocking flow
        fn dfs(
            graph: &mut Vec<Vec<(usize, f64, usize)>>,
            level: &[usize],
            u: usize,
            sink: usize,
            pushed: f64,
            eps: f64,
        ) -> f64 {
            if u == sink {
                return pushed;
            }
            for k in 0..graph[u].len() {
                let (v, c, rev) = graph[u][k];
                if c > eps && level[v] == level[u] + 1 {
                    let got = dfs(graph, level, v, sink, pushed.min(c), eps);
                    if got > eps {
                        graph[u][k].1 -= got;
                        graph[v][rev].1 += got;
                        return got;
                    }
                }
            }
            0.0
        }
        loop {
            let pushed = dfs(&mut graph, &level, source, sink, f64::INFINITY, eps);
            if pushed <= eps {
                break;
            }
            flow += pushed;
        }
    }
    (flow - total).abs() <= 1e-10 * total.max(1.0)
}

fn point_key(p: &Point) -> Vec<f64> {
    match p {
        Point::Scalar(x) => vec![*x],
        Point::Vector(v) => v.clone(),
        Point::Index(i) => vec![*i as f64],
    }
}

/// Total variation distance between discrete measures: half the mass
/// difference over the union of atom locations, matched exactly.
pub fn total_variation(sigma1: &DiscreteMeasure, sigma2: &DiscreteMeasure) -> f64 {
    let mut entries: Vec<(Vec<f64>, f64)> = Vec::new();
    for (pt, &w) in sigma1.points.iter().zip(&sigma1.weights) {
        entries.push((point_key(pt), w));
    }
    for (pt, &w) in sigma2.points.iter().zip(&sigma2.weights) {
        entries.push((point_key(pt), -w));
    }
    entries.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(a.0.len().cmp(&b.0.len()))
    });
    let mut total = 0.0f64;
    let mut idx = 0;
    while idx < entries.len() {
        let mut acc = entries[idx].1;
        let mut next = idx + 1;
        while next < entries.len() && entries[next].0 == entries[idx].0 {
            acc += entries[next].1;
            next += 1;
        }
        total += acc.abs();
        idx = next;
    }
    0.5 * total
}

/// Hausdorff distance between finite point sets: the max of the two directed
/// sup-min distances.
pub fn hausdorff(
    a: &[Point],
    b: &[Point],
    metric: impl Fn(&Point, &Point) -> f64,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("hausdorff distance needs nonempty sets"));
    }
    let directed = |from: &[Point], to: &[Point]| -> f64 {
        from.iter()
            .map(|x| {
                to.iter()
                    .map(|y| metric(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Weighted p-sum of per-cell oscillations of a map over a partition:
/// `(sum_i mu_i osc_T(E_i)^p)^(1/p)`. Exact for piecewise maps on interval
/// cells; a seeded sampled lower estimate for callbacks.
pub fn oscillation_sum(
    t: &Map1D,
    partition: &PointedPartition,
    p: f64,
    samples_per_cell: usize,
    seed: u64,
) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::invalid("p must be at least 1"));
    }
    let mut rng = Rng::new(seed);
    let mut total = 0.0f64;
    for (cell, &w) in partition.cells.iter().zip(&partition.weights) {
        if w == 0.0 {
            continue;
        }
        let crate::partition::Cell::Interval { lo, hi, closed_left, closed_right } = cell else {
            return Err(Error::Unsupported {
                expected: "interval cells".into(),
                got: format!("{cell:?}"),
            });
        };
        let osc = match t {
            Map1D::Piecewise(pw) => pw.oscillation_on(*lo, *hi, *closed_left, *closed_right),
            Map1D::Callback(f) => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for _ in 0..samples_per_cell.max(2) {
                    let v = f(rng.uniform(*lo, *hi));
                    min = min.min(v);
                    max = max.max(v);
                }
                (max - min).max(0.0)
            }
        };
        total += w * osc.powf(p);
    }
    Ok(total.powf(1.0 / p))
}

#[derive(Clone, Copy, Debug)]
pub struct MongeCostReport {
    pub value: f64,
    pub refinement_delta: f64,
}

/// `M[T] = int c(x, T(x)) dmu`: atoms exact, densities by per-piece dyadic
/// midpoint quadrature with the step delta reported.
pub fn monge_cost(t: &Map1D, mu: &Measure, c: &CostFunction, max_level: u32) -> Result<MongeCostReport> {
    let mu = mu.as_line()?;
    let mut total = 0.0f64;
    let mut delta = 0.0f64;
    let cuts = cut_points(&[t], mu);
    let integrand = |x: f64| -> Result<f64> {
        Ok(c.evaluate(&Point::Scalar(x), &Point::Scalar(t.evaluate(x)?)))
    };
    // Cuts of a callback map are just the measure's segment bounds, so the
    // window sweep covers both cases.
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = density_at(mu, 0.5 * (a + b));
        if h == 0.0 {
            continue;
        }
        let (v, d) = refine_midpoint(a, b, &integrand, 1e-11, max_level)?;
        total += h * v;
        delta += h * d;
    }
    for &(x, w) in &mu.atoms {
        if w > 0.0 {
            total += w * integrand(x)?;
        }
    }
    Ok(MongeCostReport {
        value: total,
        refinement_delta: delta,
    })
}
