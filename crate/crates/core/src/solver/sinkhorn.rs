//! Entropic approximate solver: log-domain Sinkhorn iterations, feasibility
//! rounding to exact marginals, and LP-duality certification of the result.
//!
//! The certificate is computed against the unregularized problem, so a
//! returned plan is epsilon-optimal in the same absolute sense the exact
//! solver uses, regardless of how the entropic temperature was chosen.

use crate::error::{Error, Result};

#[derive(Debug)]
pub struct EntropicSolution {
    pub flows: Vec<(usize, usize, f64)>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: f64,
    pub gap: f64,
    pub iterations: usize,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let items: Vec<f64> = terms.filter(|t| t.is_finite() || *t == f64::NEG_INFINITY).collect();
    let m = items.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + items.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Sinkhorn with rounding. Masses of zero-weight rows/columns are dropped
/// from the iteration and restored as empty rows afterwards.
pub fn solve_entropic(
    supplies: &[f64],
    demands: &[f64],
    cost: &[f64],
    eps_target: f64,
    max_iter: usize,
) -> Result<EntropicSolution> {
    if !(eps_target > 0.0) {
        return Err(Error::invalid("eps_target must be positive"));
    }
    let (m, n) = (supplies.len(), demands.len());
    let rows: Vec<usize> = (0..m).filter(|&i| supplies[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| demands[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::Infeasible("no mass to transport".into()));
    }
    let a: Vec<f64> = rows.iter().map(|&i| supplies[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| demands[j]).collect();
    let c: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * n + j]))
        .collect();
    let (mr, nr) = (rows.len(), cols.len());
    let scale = c.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));

    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();

    let mut spent = 0usize;
    let mut best_gap = f64::INFINITY;
    // Temperature schedule: start warm, cool until the certificate passes.
    // Potentials are kept across stages; the warm start is what makes the
    // cold stages converge in a handful of sweeps.
    let mut eta = (0.1 * scale).max(eps_target);
    let mut f = vec![0.0f64; mr];
    let mut g = vec![0.0f64; nr];
    while spent < max_iter {
        let stage_budget = ((max_iter - spent) / 4).max(50).min(max_iter - spent);
        for _ in 0..stage_budget {
            spent += 1;
            for (i, fi) in f.iter_mut().enumerate() {
                *fi = -eta
                    * log_sum_exp((0..nr).map(|j| (g[j] - c[i * nr + j]) / eta + log_b[j]));
            }
            let mut worst = 0.0f64;
            for (j, gj) in g.iter_mut().enumerate() {
                let new = -eta
                    * log_sum_exp((0..mr).map(|i| (f[i] - c[i * nr + j]) / eta + log_a[i]));
                worst = worst.max((new - *gj).abs());
                *gj = new;
            }
            if worst < 1e-3 * eta {
                break;
            }
        }
        // Implied plan, rounded to exact marginals.
        let mut x = vec![0.0f64; mr * nr];
        for i in 0..mr {
            for j in 0..nr {
                x[i * nr + j] =
                    ((f[i] + g[j] - c[i * nr + j]) / eta + log_a[i] + log_b[j]).exp();
            }
        }
        round_to_marginals(&mut x, &a, &b);

        // Certify against the LP: dual-feasible potentials from f.
        let mut v = vec![f64::INFINITY; nr];
        for j in 0..nr {
            for i in 0..mr {
                v[j] = v[j].min(c[i * nr + j] - f[i]);
            }
        }
        let primal: f64 = (0..mr * nr).map(|k| x[k] * c[k]).sum();
        let dual: f64 = a.iter().zip(&f).map(|(a, f)| a * f).sum::<f64>()
            + b.iter().zip(&v).map(|(b, v)| b * v).sum::<f64>();
        let gap = (primal - dual).max(0.0);
        best_gap = best_gap.min(gap);
        if gap <= eps_target {
            let mut flows = Vec::new();
            for i in 0..mr {
                for j in 0..nr {
                    let q = x[i * nr + j];
                    if q > 0.0 {
                        flows.push((rows[i], cols[j], q));
                    }
                }
            }
            let mut u_full = vec![0.0; m];
            let mut v_full = vec![0.0; n];
            for (k, &i) in rows.iter().enumerate() {
                u_full[i] = f[k];
            }
            for (k, &j) in cols.iter().enumerate() {
                v_full[j] = v[k];
            }
            // Zero-mass columns still need dual-feasible entries.
            for j in 0..n {
                if demands[j] == 0.0 {
                    v_full[j] = (0..m)
                        .map(|i| cost[i * n + j] - u_full[i])
                        .fold(f64::INFINITY, f64::min);
                }
            }
            return Ok(EntropicSolution {
                flows,
                u: u_full,
                v: v_full,
                cost: primal,
                gap,
                iterations: spent,
            });
        }
        eta *= 0.25;
        if eta < 1e-14 * scale {
            break;
        }
    }
    Err(Error::NotConverged {
        iterations: spent,
        gap: best_gap,
        target: eps_target,
    })
}

/// Rounding of Altschuler, Niles-Weed and Rigollet: scale rows down to their
/// targets, then columns, then fill the leftover with an outer product. The
/// result has exactly the requested marginals (up to f64 addition).
fn round_to_marginals(x: &mut [f64], a: &[f64], b: &[f64]) {
    let (m, n) = (a.len(), b.len());
    for i in 0..m {
        let r: f64 = x[i * n..(i + 1) * n].iter().sum();
        if r > a[i] && r > 0.0 {
            let s = a[i] / r;
            x[i * n..(i + 1) * n].iter_mut().for_each(|q| *q *= s);
        }
    }
    for j in 0..n {
        let csum: f64 = (0..m).map(|i| x[i * n + j]).sum();
        if csum > b[j] && csum > 0.0 {
            let s = b[j] / csum;
            (0..m).for_each(|i| x[i * n + j] *= s);
        }
    }
    let err_r: Vec<f64> = (0..m)
        .map(|i| (a[i] - x[i * n..(i + 1) * n].iter().sum::<f64>()).max(0.0))
        .collect();
    let err_c: Vec<f64> = (0..n)
        .map(|j| (b[j] - (0..m).map(|i| x[i * n + j]).sum::<f64>()).max(0.0))
        .collect();
    let total: f64 = err_r.iter().sum();
    if total > 0.0 {
        for i in 0..m {
            for j in 0..n {
                x[i * n + j] += err_r[i] * err_c[j] / total;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certifies_small_instance() {
        let s = [0.3, 0.7];
        let d = [0.6, 0.4];
        let c = [1.0, 2.0, 3.0, 1.0];
        let sol = solve_entropic(&s, &d, &c, 1e-4, 20_000).unwrap();
        assert!(sol.gap <= 1e-4);
        assert!((sol.cost - 1.6).abs() <= 1e-4, "cost={}", sol.cost);
        for i in 0..2 {
            let row: f64 = sol.flows.iter().filter(|f| f.0 == i).map(|f| f.2).sum();
            assert!((row - s[i]).abs() < 1e-10);
        }
        for j in 0..2 {
            let col: f64 = sol.flows.iter().filter(|f| f.1 == j).map(|f| f.2).sum();
            assert!((col - d[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_coupling_reaches_zero_cost() {
        // mu = nu on the same atoms with c = d^2: optimum 0.
        let s = [0.25, 0.25, 0.5];
        let c: Vec<f64> = (0..3)
            .flat_map(|i| (0..3).map(move |j| ((i as f64 - j as f64) / 3.0).powi(2)))
            .collect();
        let sol = solve_entropic(&s, &s, &c, 1e-3, 20_000).unwrap();
        assert!(sol.cost <= 1e-3);
    }

    #[test]
    fn rejects_nonpositive_target() {
        assert!(solve_entropic(&[1.0], &[1.0], &[0.0], 0.0, 10).is_err());
    }

    #[test]
    fn exhausted_budget_reports_not_converged() {
        let s = [0.3, 0.7];
        let d = [0.6, 0.4];
        let c = [1.0, 2.0, 3.0, 1.0];
        let r = solve_entropic(&s, &d, &c, 1e-12, 3);
        assert!(matches!(r, Err(crate::error::Error::NotConverged { .. })), "{r:?}");
    }

    #[test]
    fn rounding_restores_marginals() {
        let mut x = vec![0.4, 0.1, 0.2, 0.5];
        round_to_marginals(&mut x, &[0.3, 0.7], &[0.6, 0.4]);
        assert!((x[0] + x[1] - 0.3).abs() < 1e-12);
        assert!((x[2] + x[3] - 0.7).abs() < 1e-12);
        assert!((x[0] + x[2] - 0.6).abs() < 1e-12);
        assert!((x[1] + x[3] - 0.4).abs() < 1e-12);
        assert!(x.iter().all(|&q| q >= 0.0));
    }
}
