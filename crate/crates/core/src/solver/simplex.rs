//! Network simplex for the balanced transportation problem.
//!
//! Minimizes `sum x_ij c_ij` over `x >= 0` with prescribed row sums
//! (supplies) and column sums (demands). Floating-point throughout, with a
//! post-hoc duality-gap certificate instead of exact arithmetic: the caller
//! gets a primal basic solution plus dual potentials that are feasible by
//! construction, so the reported gap upper-bounds the true suboptimality.
//!
//! Degeneracy: supplies are perturbed by `(i+1) * ETA` (total added to the
//! last demand) before pivoting, and the perturbation is removed on output by
//! re-solving the flows of the final spanning tree against the original
//! marginals. Entering arcs follow Bland's rule (first improving arc in
//! lexicographic order).

use crate::error::{Error, Result};

const ETA: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct TransportSolution {
    /// Strictly positive flows of a basic solution, sorted by `(i, j)`.
    /// At most `m + n - 1` entries.
    pub flows: Vec<(usize, usize, f64)>,
    /// Row potentials.
    pub u: Vec<f64>,
    /// Column potentials, projected to dual feasibility.
    pub v: Vec<f64>,
    /// Primal objective value.
    pub cost: f64,
    /// Certified duality gap (>= 0).
    pub gap: f64,
}

struct Tree {
    m: usize,
    n: usize,
    /// Basic arcs as (i, j).
    basis: Vec<(usize, usize)>,
    /// Flow on each basic arc, aligned with `basis`.
    flow: Vec<f64>,
    /// Adjacency: node -> list of indices into `basis`. Node ids: sources
    /// are `0..m`, sinks are `m..m+n`.
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    parent_arc: Vec<usize>,
    depth: Vec<u32>,
    order: Vec<usize>,
}

impl Tree {
    fn new(m: usize, n: usize, basis: Vec<(usize, usize)>, flow: Vec<f64>) -> Self {
        let mut t = Tree {
            m,
            n,
            basis,
            flow,
            adj: vec![Vec::new(); m + n],
            parent: vec![usize::MAX; m + n],
            parent_arc: vec![usize::MAX; m + n],
            depth: vec![0; m + n],
            order: Vec::with_capacity(m + n),
        };
        for (a, &(i, j)) in t.basis.iter().enumerate() {
            t.adj[i].push(a);
            t.adj[t.m + j].push(a);
        }
        t.reroot();
        t
    }

    fn arc_nodes(&self, a: usize) -> (usize, usize) {
        let (i, j) = self.basis[a];
        (i, self.m + j)
    }

    /// BFS from node 0 establishing parent pointers and a top-down order.
    fn reroot(&mut self) {
        let nodes = self.m + self.n;
        self.parent.iter_mut().for_each(|p| *p = usize::MAX);
        self.order.clear();
        let mut seen = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(0usize);
        seen[0] = true;
        self.depth[0] = 0;
        while let Some(node) = queue.pop_front() {
            self.order.push(node);
            for &a in &self.adj[node] {
                let (x, y) = self.arc_nodes(a);
                let other = if x == node { y } else { x };
                if !seen[other] {
                    seen[other] = true;
                    self.parent[other] = node;
                    self.parent_arc[other] = a;
                    self.depth[other] = self.depth[node] + 1;
                    queue.push_back(other);
                }
            }
        }
        debug_assert_eq!(self.order.len(), nodes, "basis is not a spanning tree");
    }

    /// Potentials satisfying `u_i + v_j = c_ij` on every basic arc.
    fn potentials(&self, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut u = vec![0.0; self.m];
        let mut v = vec![0.0; self.n];
        for &node in &self.order {
            if node == 0 {
                u[0] = 0.0;
                continue;
            }
            let a = self.parent_arc[node];
            let (i, j) = self.basis[a];
            if node < self.m {
                u[node] = cost[i * self.n + j] - v[j];
            } else {
                v[node - self.m] = cost[i * self.n + j] - u[i];
            }
        }
        (u, v)
    }

    /// Tree path from `x` to `y` as a list of arc indices with the sign the
    /// arc's flow takes when one unit enters along `y -> x`'s closing arc.
    fn cycle(&self, from: usize, to: usize) -> Vec<(usize, f64)> {
        let mut left = from;
        let mut right = to;
        let mut left_path: Vec<usize> = Vec::new();
        let mut right_path: Vec<usize> = Vec::new();
        while left != right {
            if self.depth[left] >= self.depth[right] {
                left_path.push(self.parent_arc[left]);
                left = self.parent[left];
            } else {
                right_path.push(self.parent_arc[right]);
                right = self.parent[right];
            }
        }
        // Walk from -> lca -> to; a pair traversed source-first decreases.
        let mut out = Vec::with_capacity(left_path.len() + right_path.len());
        let mut node = from;
        for &a in &left_path {
            let (x, y) = self.arc_nodes(a);
            let sign = if x == node { -1.0 } else { 1.0 };
            out.push((a, sign));
            node = if x == node { y } else { x };
        }
        let mut node = to;
        let mut tail = Vec::with_capacity(right_path.len());
        for &a in &right_path {
            let (x, y) = self.arc_nodes(a);
            // walking to -> lca, so flip the orientation relative to from -> to
            let sign = if x == node { 1.0 } else { -1.0 };
            tail.push((a, sign));
            node = if x == node { y } else { x };
        }
        tail.reverse();
        out.extend(tail);
        out
    }

    fn replace(&mut self, leaving: usize, entering: (usize, usize)) {
        let (i, j) = self.basis[leaving];
        self.adj[i].retain(|&a| a != leaving);
        self.adj[self.m + j].retain(|&a| a != leaving);
        self.basis[leaving] = entering;
        self.flow[leaving] = 0.0;
        self.adj[entering.0].push(leaving);
        self.adj[self.m + entering.1].push(leaving);
        self.reroot();
    }
}

/// Northwest-corner initial basis on (already perturbed) marginals. Returns
/// exactly `m + n - 1` basic arcs forming a spanning tree.
fn northwest_corner(s: &[f64], d: &[f64]) -> (Vec<(usize, usize)>, Vec<f64>) {
    let (m, n) = (s.len(), d.len());
    let mut rs = s.to_vec();
    let mut rd = d.to_vec();
    let mut basis = Vec::with_capacity(m + n - 1);
    let mut flow = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0usize, 0usize);
    while basis.len() < m + n - 1 {
        let q = rs[i].min(rd[j]);
        basis.push((i, j));
        flow.push(q);
        rs[i] -= q;
        rd[j] -= q;
        // On ties keep the row open so the basis stays connected; never step
        // off the last row or column.
        if (rd[j] <= rs[i] && j + 1 < n) || i + 1 == m {
            j += 1;
        } else {
            i += 1;
        }
    }
    (basis, flow)
}

/// Re-solve the flows of a spanning tree against given marginals by leaf
/// elimination, bottom-up in BFS order. The arc to the parent absorbs the
/// node's whole residual whether the node is a source or a sink, because
/// every arc carries flow from its source end to its sink end.
fn tree_flows(tree: &Tree, s: &[f64], d: &[f64]) -> Vec<f64> {
    let mut residual: Vec<f64> = s.iter().chain(d.iter()).copied().collect();
    let mut flow = vec![0.0; tree.basis.len()];
    for &node in tree.order.iter().rev() {
        if node == 0 {
            continue;
        }
        let a = tree.parent_arc[node];
        let q = residual[node];
        flow[a] = q;
        residual[node] = 0.0;
        residual[tree.parent[node]] -= q;
    }
    flow
}

pub fn network_simplex(
    supplies: &[f64],
    demands: &[f64],
    cost: &[f64],
) -> Result<TransportSolution> {
    let (m, n) = (supplies.len(), demands.len());
    if m == 0 || n == 0 {
        return Err(Error::invalid("empty marginals"));
    }
    debug_assert_eq!(cost.len(), m * n);
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite cost entry"));
    }
    if supplies.iter().chain(demands.iter()).any(|&x| x < 0.0) {
        return Err(Error::Infeasible("negative marginal".into()));
    }
    let total_s: f64 = supplies.iter().sum();
    let total_d: f64 = demands.iter().sum();
    if (total_s - total_d).abs() > 1e-9 * total_s.max(total_d).max(1.0) {
        return Err(Error::Infeasible(format!(
            "mass mismatch: supplies {total_s} vs demands {total_d}"
        )));
    }

    // Perturb supplies, rebalance on the last demand.
    let s: Vec<f64> = supplies
        .iter()
        .enumerate()
        .map(|(i, &x)| x + (i + 1) as f64 * ETA)
        .collect();
    let mut d = demands.to_vec();
    let bump: f64 = (m * (m + 1) / 2) as f64 * ETA + (total_s - total_d);
    d[n - 1] += bump;
    if d[n - 1] < 0.0 {
        // total mismatch swallowed the last demand; shift it to the largest
        let k = (0..n).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        d.swap(k, n - 1);
    }

    let (basis, flow) = northwest_corner(&s, &d);
    let mut tree = Tree::new(m, n, basis, flow);

    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-12 * scale;
    let max_pivots = 40 * (m + n) * (m + n).max(32);

    for _pivot in 0..max_pivots {
        let (u, v) = tree.potentials(cost);
        // Bland: first arc in lexicographic order with negative reduced cost.
        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if cost[i * n + j] - u[i] - v[j] < -tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            // optimal: remove the perturbation and certify
            return finish(tree, supplies, demands, cost, total_s);
        };
        let cycle = tree.cycle(ei, m + ej);
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &(a, sign) in &cycle {
            if sign < 0.0 && tree.flow[a] < theta {
                theta = tree.flow[a];
                leaving = a;
            }
        }
        if leaving == usize::MAX {
            return Err(Error::Infeasible("unbounded pivot in a bounded problem".into()));
        }
        for &(a, sign) in &cycle {
            tree.flow[a] += sign * theta;
        }
        tree.flow[leaving] = 0.0;
        tree.replace(leaving, (ei, ej));
        tree.flow[leaving] = theta;
    }
    Err(Error::NotConverged {
        iterations: max_pivots,
        gap: f64::NAN,
        target: 0.0,
    })
}

fn finish(
    tree: Tree,
    supplies: &[f64],
    demands: &[f64],
    cost: &[f64],
    total: f64,
) -> Result<TransportSolution> {
    let (m, n) = (tree.m, tree.n);
    let exact = tree_flows(&tree, supplies, demands);
    let mut flows: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
    for (a, &(i, j)) in tree.basis.iter().enumerate() {
        let f = exact[a];
        if f < -1e-9 * total.max(1.0) {
            return Err(Error::Infeasible(format!(
                "degenerate basis resolved to negative flow {f:.3e} on ({i}, {j})"
            )));
        }
        if f > 0.0 {
            flows.push((i, j, f));
        }
    }
    flows.sort_by_key(|a| (a.0, a.1));

    let (u, _) = tree.potentials(cost);
    // Project the column potentials to dual feasibility; at a true optimum
    // this leaves them unchanged up to rounding.
    let mut v = vec![f64::INFINITY; n];
    for j in 0..n {
        for i in 0..m {
            v[j] = v[j].min(cost[i * n + j] - u[i]);
        }
    }
    let primal: f64 = flows.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum();
    let dual: f64 = supplies.iter().zip(&u).map(|(s, u)| s * u).sum::<f64>()
        + demands.iter().zip(&v).map(|(d, v)| d * v).sum::<f64>();
    let gap = (primal - dual).max(0.0);
    Ok(TransportSolution {
        flows,
        u,
        v,
        cost: primal,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        let sol = network_simplex(&[1.0], &[1.0], &[0.7]).unwrap();
        assert_eq!(sol.flows, vec![(0, 0, 1.0)]);
        assert!((sol.cost - 0.7).abs() < 1e-15);
        assert!(sol.gap <= 1e-12);
    }

    #[test]
    fn two_by_two_known_optimum() {
        // mu = (0.3, 0.7), nu = (0.6, 0.4), c = [[1,2],[3,1]]
        // One-parameter family pi11 = t in [0, 0.3]; objective 2.5 - 3t,
        // minimized at t = 0.3 with value 1.6.
        let sol = network_simplex(&[0.3, 0.7], &[0.6, 0.4], &[1.0, 2.0, 3.0, 1.0]).unwrap();
        assert!((sol.cost - 1.6).abs() < 1e-12, "cost={}", sol.cost);
        let get = |i: usize, j: usize| -> f64 {
            sol.flows
                .iter()
                .find(|&&(a, b, _)| (a, b) == (i, j))
                .map(|&(_, _, f)| f)
                .unwrap_or(0.0)
        };
        assert!((get(0, 0) - 0.3).abs() < 1e-12);
        assert!(get(0, 1).abs() < 1e-12);
        assert!((get(1, 0) - 0.3).abs() < 1e-12);
        assert!((get(1, 1) - 0.4).abs() < 1e-12);
        assert!(sol.gap <= 1e-12);
    }

    #[test]
    fn support_size_is_basic() {
        let m = 7;
        let n = 5;
        let mut rng = crate::rng::Rng::new(5);
        let mut s: Vec<f64> = (0..m).map(|_| rng.uniform(0.1, 1.0)).collect();
        let mut d: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 1.0)).collect();
        let ts: f64 = s.iter().sum();
        s.iter_mut().for_each(|x| *x /= ts);
        let td: f64 = d.iter().sum();
        d.iter_mut().for_each(|x| *x /= td);
        let c: Vec<f64> = (0..m * n).map(|_| rng.uniform(0.0, 10.0)).collect();
        let sol = network_simplex(&s, &d, &c).unwrap();
        assert!(sol.flows.len() < m + n);
        for i in 0..m {
            let row: f64 = sol.flows.iter().filter(|f| f.0 == i).map(|f| f.2).sum();
            assert!((row - s[i]).abs() < 1e-10);
        }
        for j in 0..n {
            let col: f64 = sol.flows.iter().filter(|f| f.1 == j).map(|f| f.2).sum();
            assert!((col - d[j]).abs() < 1e-10);
        }
        assert!(sol.gap <= 1e-9 * 10.0);
    }

    #[test]
    fn zero_mass_rows_and_columns() {
        let s = [0.5, 0.0, 0.5];
        let d = [0.0, 1.0, 0.0];
        let c = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let sol = network_simplex(&s, &d, &c).unwrap();
        assert!(sol.flows.iter().all(|&(i, j, f)| f > 0.0 && i != 1 && j == 1));
        let total: f64 = sol.flows.iter().map(|f| f.2).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mass_mismatch_rejected() {
        assert!(matches!(
            network_simplex(&[1.0], &[0.5], &[1.0]),
            Err(Error::Infeasible(_))
        ));
    }
}
