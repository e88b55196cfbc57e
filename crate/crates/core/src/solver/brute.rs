//! Exhaustive transportation oracle for tiny instances.
//!
//! Every vertex of the transportation polytope is the flow of some spanning
//! tree of the complete bipartite graph, so enumerating arc subsets of size
//! `m + n - 1`, keeping the acyclic ones, and solving each tree for its flows
//! visits every basic feasible solution. Test oracle; independent of the
//! simplex path.

use crate::error::{Error, Result};

pub struct BruteForceResult {
    pub value: f64,
    /// All optimal vertex plans (deduplicated), as positive-entry lists.
    pub plans: Vec<Vec<(usize, usize, f64)>>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let r = self.find(self.parent[x]);
            self.parent[x] = r;
        }
        self.parent[x]
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

pub fn brute_force(supplies: &[f64], demands: &[f64], cost: &[f64]) -> Result<BruteForceResult> {
    let (m, n) = (supplies.len(), demands.len());
    if m * n > 16 {
        return Err(Error::TooLarge(format!("{m} x {n} exceeds the 16-variable cap")));
    }
    let arcs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .collect();
    let need = m + n - 1;
    let tol = 1e-12 * supplies.iter().chain(demands).fold(1.0f64, |a, &b| a.max(b));

    let mut best = f64::INFINITY;
    let mut plans: Vec<Vec<(usize, usize, f64)>> = Vec::new();

    let mut subset: Vec<usize> = (0..need).collect();
    loop {
        // spanning-tree check
        let mut uf = UnionFind::new(m + n);
        let mut tree = true;
        for &a in &subset {
            let (i, j) = arcs[a];
            if !uf.union(i, m + j) {
                tree = false;
                break;
            }
        }
        if tree {
            if let Some(plan) = solve_tree(&subset, &arcs, supplies, demands, m, n, tol) {
                let value: f64 = plan.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum();
                if value < best - tol {
                    best = value;
                    plans.clear();
                }
                if (value - best).abs() <= tol.max(1e-12 * best.abs())
                    && !plans.iter().any(|p| same_plan(p, &plan, tol)) {
                        plans.push(plan);
                    }
            }
        }
        // next combination of size `need` from arcs
        let mut k = need;
        loop {
            if k == 0 {
                return if best.is_finite() {
                    Ok(BruteForceResult { value: best, plans })
                } else {
                    Err(Error::Infeasible("no feasible basic solution".into()))
                };
            }
            k -= 1;
            if subset[k] < arcs.len() - (need - k) {
                subset[k] += 1;
                for t in k + 1..need {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_tree(
    subset: &[usize],
    arcs: &[(usize, usize)],
    supplies: &[f64],
    demands: &[f64],
    m: usize,
    n: usize,
    tol: f64,
) -> Option<Vec<(usize, usize, f64)>> {
    let nodes = m + n;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes]; // (arc position, other node)
    for (pos, &a) in subset.iter().enumerate() {
        let (i, j) = arcs[a];
        adj[i].push((pos, m + j));
        adj[m + j].push((pos, i));
    }
    let mut residual: Vec<f64> = supplies.iter().chain(demands.iter()).copied().collect();
    let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut used = vec![false; subset.len()];
    let mut flow = vec![0.0f64; subset.len()];
    let mut stack: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    while let Some(v) = stack.pop() {
        let Some(&(pos, other)) = adj[v].iter().find(|&&(pos, _)| !used[pos]) else {
            continue;
        };
        used[pos] = true;
        flow[pos] = residual[v];
        residual[v] = 0.0;
        residual[other] -= flow[pos];
        degree[v] -= 1;
        degree[other] -= 1;
        if degree[other] == 1 {
            stack.push(other);
        }
    }
    let mut plan = Vec::new();
    for (pos, &a) in subset.iter().enumerate() {
        let f = flow[pos];
        if f < -tol {
            return None; // infeasible basic solution
        }
        if f > tol {
            let (i, j) = arcs[a];
            plan.push((i, j, f));
        }
    }
    plan.sort_by_key(|a| (a.0, a.1));
    Some(plan)
}

fn same_plan(a: &[(usize, usize, f64)], b: &[(usize, usize, f64)], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0 == y.0 && x.1 == y.1 && (x.2 - y.2).abs() <= tol * 10.0)
}
