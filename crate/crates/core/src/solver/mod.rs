//! The finite transportation program over discretized marginals, solved
//! exactly by network simplex or approximately by certified Sinkhorn, plus an
//! exhaustive vertex-enumeration oracle for tiny instances.

mod brute;
mod simplex;
mod sinkhorn;

use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::partition::{DiscreteMeasure, PointedPartition};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Marginal feasibility tolerance for plans.
pub const MARGINAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// A feasible coupling of two discrete measures: sparse strictly positive
/// entries plus the certified optimality gap it was produced with.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscretePlan {
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
    pub entries: Vec<PlanEntry>,
    pub eps_cert: f64,
}

/// Dual potentials with `u_i + v_j <= c_ij` and the duality gap of the plan
/// they certify. The gap upper-bounds the plan's true suboptimality.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualCertificate {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub gap: f64,
}

impl DualCertificate {
    pub fn dual_objective(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let a: f64 = mu.weights.iter().zip(&self.u).map(|(w, u)| w * u).sum();
        let b: f64 = nu.weights.iter().zip(&self.v).map(|(w, v)| w * v).sum();
        a + b
    }

    /// Max violation of `u_i + v_j <= c_ij` over all pairs.
    pub fn feasibility_violation(&self, cost: &CostMatrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.u.len() {
            for j in 0..self.v.len() {
                worst = worst.max(self.u[i] + self.v[j] - cost.at(i, j));
            }
        }
        worst
    }

    /// Certified absolute gap of an arbitrary feasible plan on the same
    /// instance: its cost minus this certificate's dual objective.
    pub fn gap_of(&self, plan: &DiscretePlan, c: &CostFunction) -> f64 {
        plan.cost(c) - self.dual_objective(&plan.source, &plan.target)
    }
}

/// Dense cost matrix over anchor pairs.
pub struct CostMatrix {
    pub m: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl CostMatrix {
    pub fn build(mu: &DiscreteMeasure, nu: &DiscreteMeasure, c: &CostFunction) -> Result<Self> {
        let (m, n) = (mu.len(), nu.len());
        let mut values = Vec::with_capacity(m * n);
        for (i, x) in mu.points.iter().enumerate() {
            for (j, y) in nu.points.iter().enumerate() {
                let cij = c.evaluate(x, y);
                if !cij.is_finite() {
                    return Err(Error::NonFiniteCost { i, j });
                }
                values.push(cij);
            }
        }
        Ok(CostMatrix { m, n, values })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn scale(&self) -> f64 {
        self.values.iter().fold(1.0f64, |a, c| a.max(c.abs()))
    }
}

impl DiscretePlan {
    /// Wrap explicit entries as a plan, checking feasibility against the
    /// marginals. Entries must be strictly positive.
    pub fn from_entries(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        entries: Vec<PlanEntry>,
        eps_cert: f64,
    ) -> Result<Self> {
        let plan = DiscretePlan { source, target, entries, eps_cert };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.source.len(), self.target.len());
        let mut rows = vec![0.0f64; m];
        let mut cols = vec![0.0f64; n];
        for e in &self.entries {
            if e.i >= m || e.j >= n {
                return Err(Error::invalid(format!("entry ({}, {}) out of range", e.i, e.j)));
            }
            if !(e.mass > 0.0) {
                return Err(Error::invalid("plan entries must be strictly positive"));
            }
            rows[e.i] += e.mass;
            cols[e.j] += e.mass;
        }
        for (i, (&r, &w)) in rows.iter().zip(&self.source.weights).enumerate() {
            if (r - w).abs() > MARGINAL_TOL {
                return Err(Error::Infeasible(format!(
                    "row {i} sums to {r}, marginal is {w}"
                )));
            }
        }
        for (j, (&c, &w)) in cols.iter().zip(&self.target.weights).enumerate() {
            if (c - w).abs() > MARGINAL_TOL {
                return Err(Error::Infeasible(format!(
                    "column {j} sums to {c}, marginal is {w}"
                )));
            }
        }
        Ok(())
    }

    /// `K[pi] = sum pi_ij c(x_i, y_j)`, an exact sparse dot product.
    pub fn cost(&self, c: &CostFunction) -> f64 {
        self.entries
            .iter()
            .map(|e| e.mass * c.evaluate(&self.source.points[e.i], &self.target.points[e.j]))
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    /// Rows with positive marginal. By feasibility these are exactly the rows
    /// that appear in the support.
    pub fn support_rows(&self) -> Vec<usize> {
        self.source.support()
    }

    pub fn support_cols(&self) -> Vec<usize> {
        self.target.support()
    }

    /// Support of row `i` with weights normalized by the row sum, the exact
    /// conditional weights `pi_ij / mu_i` used by projections and
    /// disintegrations. Empty for zero-mass rows.
    pub fn row_conditional(&self, i: usize) -> Vec<(usize, f64)> {
        let row: Vec<&PlanEntry> = self.entries.iter().filter(|e| e.i == i).collect();
        let total: f64 = row.iter().map(|e| e.mass).sum();
        if total <= 0.0 {
            return Vec::new();
        }
        row.into_iter().map(|e| (e.j, e.mass / total)).collect()
    }
}

/// Exact solve of the transportation program by network simplex. Returns a
/// basic optimal plan (support at most `|I| + |J| - 1`) and a certificate
/// whose gap is at most `1e-9` times the cost scale.
pub fn solve_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostFunction,
) -> Result<(DiscretePlan, DualCertificate)> {
    let cost = CostMatrix::build(mu, nu, c)?;
    let sol = simplex::network_simplex(&mu.weights, &nu.weights, &cost.values)?;
    let entries = sol
        .flows
        .into_iter()
        .map(|(i, j, mass)| PlanEntry { i, j, mass })
        .collect();
    let cert = DualCertificate {
        u: sol.u,
        v: sol.v,
        gap: sol.gap,
    };
    let plan = DiscretePlan {
        source: mu.clone(),
        target: nu.clone(),
        entries,
        eps_cert: cert.gap,
    };
    plan.validate()?;
    debug_assert!((plan.cost(c) - sol.cost).abs() <= 1e-9 * cost.scale());
    Ok((plan, cert))
}

/// Entropic approximate solve with feasibility rounding. The returned plan is
/// feasible to `MARGINAL_TOL` and certified within `eps_target` of optimal,
/// or the call fails with `NotConverged`.
pub fn solve_entropic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostFunction,
    eps_target: f64,
    max_iter: usize,
) -> Result<(DiscretePlan, DualCertificate)> {
    let cost = CostMatrix::build(mu, nu, c)?;
    let sol = sinkhorn::solve_entropic(&mu.weights, &nu.weights, &cost.values, eps_target, max_iter)?;
    debug_assert!(sol.iterations <= max_iter);
    debug_assert!((sol.cost - sol.flows.iter().map(|&(i, j, m)| m * cost.at(i, j)).sum::<f64>()).abs() <= 1e-9 * cost.scale());
    let entries = sol
        .flows
        .into_iter()
        .map(|(i, j, mass)| PlanEntry { i, j, mass })
        .collect();
    let cert = DualCertificate {
        u: sol.u,
        v: sol.v,
        gap: sol.gap,
    };
    let plan = DiscretePlan {
        source: mu.clone(),
        target: nu.clone(),
        entries,
        eps_cert: cert.gap,
    };
    plan.validate()?;
    Ok((plan, cert))
}

/// `K[pi]` for a plan; free-function form of [`DiscretePlan::cost`].
pub fn plan_cost(plan: &DiscretePlan, c: &CostFunction) -> f64 {
    plan.cost(c)
}

/// Exhaustive optimum plus all optimal vertex plans; instances capped at 16
/// variables. Independent oracle for the simplex path.
pub fn brute_force_solve(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    c: &CostFunction,
) -> Result<(f64, Vec<DiscretePlan>)> {
    let cost = CostMatrix::build(mu, nu, c)?;
    let r = brute::brute_force(&mu.weights, &nu.weights, &cost.values)?;
    let plans = r
        .plans
        .into_iter()
        .map(|flows| DiscretePlan {
            source: mu.clone(),
            target: nu.clone(),
            entries: flows
                .into_iter()
                .map(|(i, j, mass)| PlanEntry { i, j, mass })
                .collect(),
            eps_cert: 0.0,
        })
        .collect();
    Ok((r.value, plans))
}

/// An h-plan: a feasible plan for the transportation program induced by a
/// pair of pointed partitions, together with those partitions.
#[derive(Clone, Debug)]
pub struct HPlan {
    pub source: Arc<PointedPartition>,
    pub target: Arc<PointedPartition>,
    pub plan: DiscretePlan,
}

impl HPlan {
    pub fn solve_exact(
        source: Arc<PointedPartition>,
        target: Arc<PointedPartition>,
        c: &CostFunction,
    ) -> Result<(HPlan, DualCertificate)> {
        let (plan, cert) = solve_exact(&source.to_discrete(), &target.to_discrete(), c)?;
        Ok((HPlan { source, target, plan }, cert))
    }

    pub fn solve_entropic(
        source: Arc<PointedPartition>,
        target: Arc<PointedPartition>,
        c: &CostFunction,
        eps_target: f64,
        max_iter: usize,
    ) -> Result<(HPlan, DualCertificate)> {
        let (plan, cert) = solve_entropic(
            &source.to_discrete(),
            &target.to_discrete(),
            c,
            eps_target,
            max_iter,
        )?;
        Ok((HPlan { source, target, plan }, cert))
    }

    /// Wrap an explicitly constructed plan (the examples build theirs by
    /// formula). Feasibility is checked; optimality is the caller's claim,
    /// recorded as `eps_cert`.
    pub fn from_entries(
        source: Arc<PointedPartition>,
        target: Arc<PointedPartition>,
        entries: Vec<PlanEntry>,
        eps_cert: f64,
    ) -> Result<HPlan> {
        let plan = DiscretePlan::from_entries(
            source.to_discrete(),
            target.to_discrete(),
            entries,
            eps_cert,
        )?;
        Ok(HPlan { source, target, plan })
    }

    /// Max of the two partitions' diameter bounds.
    pub fn h_bound(&self) -> f64 {
        self.source.h_bound.max(self.target.h_bound)
    }

    pub fn cost(&self, c: &CostFunction) -> f64 {
        self.plan.cost(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::space::Point;

    fn measure(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(
            points.iter().map(|&x| Point::Scalar(x)).collect(),
            weights.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_one_by_one() {
        let mu = measure(&[0.0], &[1.0]);
        let nu = measure(&[0.7], &[1.0]);
        let c = CostFunction::callback(|_, _| 0.7);
        let (plan, cert) = solve_exact(&mu, &nu, &c).unwrap();
        assert_eq!(plan.entries, vec![PlanEntry { i: 0, j: 0, mass: 1.0 }]);
        assert!((plan.cost(&c) - 0.7).abs() < 1e-15);
        assert!(cert.gap <= 1e-12);
    }

    #[test]
    fn derived_two_by_two() {
        let mu = measure(&[0.0, 1.0], &[0.3, 0.7]);
        let nu = measure(&[0.0, 1.0], &[0.6, 0.4]);
        let table = [[1.0, 2.0], [3.0, 1.0]];
        let c = CostFunction::callback(move |x, y| {
            let i = if x.scalar().unwrap() < 0.5 { 0 } else { 1 };
            let j = if y.scalar().unwrap() < 0.5 { 0 } else { 1 };
            table[i][j]
        });
        let (plan, cert) = solve_exact(&mu, &nu, &c).unwrap();
        assert!((plan.cost(&c) - 1.6).abs() < 1e-12);
        assert!(cert.feasibility_violation(&CostMatrix::build(&mu, &nu, &c).unwrap()) <= 1e-10);
        assert!(cert.gap <= 1e-9);

        let (value, vertices) = brute_force_solve(&mu, &nu, &c).unwrap();
        assert!((value - 1.6).abs() < 1e-12);
        assert!(!vertices.is_empty());

        let (eplan, ecert) = solve_entropic(&mu, &nu, &c, 1e-4, 50_000).unwrap();
        assert!(ecert.gap <= 1e-4);
        assert!((eplan.cost(&c) - 1.6).abs() <= 1e-4);
    }

    #[test]
    fn random_instances_match_brute_force() {
        let mut rng = Rng::new(2024);
        for trial in 0..200 {
            let m = 1 + rng.below(4);
            let n = 1 + rng.below(4);
            let mut w1: Vec<f64> = (0..m).map(|_| rng.uniform(0.05, 1.0)).collect();
            let t: f64 = w1.iter().sum();
            w1.iter_mut().for_each(|x| *x /= t);
            let mut w2: Vec<f64> = (0..n).map(|_| rng.uniform(0.05, 1.0)).collect();
            let t: f64 = w2.iter().sum();
            w2.iter_mut().for_each(|x| *x /= t);
            let xs: Vec<f64> = (0..m).map(|_| rng.uniform(0.0, 1.0)).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 1.0)).collect();
            let mu = measure(&xs, &w1);
            let nu = measure(&ys, &w2);
            let c = CostFunction::quadratic();
            let (plan, cert) = solve_exact(&mu, &nu, &c).unwrap();
            let (value, _) = brute_force_solve(&mu, &nu, &c).unwrap();
            assert!(
                (plan.cost(&c) - value).abs() <= 1e-9,
                "trial {trial}: simplex {} vs brute {}",
                plan.cost(&c),
                value
            );
            assert!(plan.entries.len() < m + n);
            assert!(cert.gap <= 1e-9);
        }
    }

    #[test]
    fn entropic_handles_zero_weight_columns() {
        // two heavy end columns, dead middle ones
        let mu = measure(&[0.05, 0.3, 0.7, 0.95], &[0.25, 0.25, 0.25, 0.25]);
        let nu = measure(&[0.1, 0.4, 0.6, 0.9], &[0.5, 0.0, 0.0, 0.5]);
        let c = CostFunction::quadratic();
        let (plan, cert) = solve_entropic(&mu, &nu, &c, 1e-3, 100_000).unwrap();
        assert!(cert.gap <= 1e-3);
        assert!(plan.entries.iter().all(|e| e.j == 0 || e.j == 3));
        let (value, _) = brute_force_solve(&mu, &nu, &c).unwrap();
        assert!(plan.cost(&c) - value <= 1e-3 + 1e-12);
    }

    #[test]
    fn entropic_tracks_exact_on_a_medium_instance() {
        // 32 x 32 squeeze-style instance: certified entropic value within
        // its target of the exact optimum.
        let k = 32;
        let xs: Vec<f64> = (0..k).map(|i| (2 * i + 1) as f64 / (2 * k) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + x / 2.0).collect();
        let w = vec![1.0 / k as f64; k];
        let mu = measure(&xs, &w);
        let nu = measure(&ys, &w);
        let c = CostFunction::quadratic();
        let (exact, _) = solve_exact(&mu, &nu, &c).unwrap();
        let (ent, cert) = solve_entropic(&mu, &nu, &c, 1e-3, 200_000).unwrap();
        assert!(cert.gap <= 1e-3);
        assert!((ent.cost(&c) - exact.cost(&c)).abs() <= 1e-3 + 1e-12);
    }

    #[test]
    fn explicit_plan_feasibility_checked() {
        let mu = measure(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = measure(&[0.0, 1.0], &[0.5, 0.5]);
        let ok = DiscretePlan::from_entries(
            mu.clone(),
            nu.clone(),
            vec![
                PlanEntry { i: 0, j: 1, mass: 0.5 },
                PlanEntry { i: 1, j: 0, mass: 0.5 },
            ],
            0.0,
        );
        assert!(ok.is_ok());
        let bad = DiscretePlan::from_entries(
            mu,
            nu,
            vec![PlanEntry { i: 0, j: 0, mass: 1.0 }],
            0.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn non_finite_cost_rejected() {
        let mu = measure(&[0.0], &[1.0]);
        let nu = measure(&[1.0], &[1.0]);
        let c = CostFunction::callback(|_, _| f64::NAN);
        assert!(matches!(
            solve_exact(&mu, &nu, &c),
            Err(Error::NonFiniteCost { .. })
        ));
    }
}
