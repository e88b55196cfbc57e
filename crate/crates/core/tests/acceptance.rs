//! Acceptance suite: every release-gating claim, one test per criterion,
//! each printing a single pass/fail line. Run with `--nocapture` to see the
//! lines on success.

use hplan::cost::CostFunction;
use hplan::experiment::{
    instance_identity, instance_uniform_squeeze, run_bad_set_decay, run_disc_sweep, run_example,
    run_sharpness, run_value_sweep, run_map_sweep, DiscStudy, ExampleName,
    ExperimentRecord, ProjectionChoice,
};
use hplan::measure::{Measure, Measure1D, Segment};
use hplan::metrics;
use hplan::partition::{AnchorRule, AnchorSpec, DiscreteMeasure, PointedPartition};
use hplan::piecewise::{Map1D, Piece, Piecewise1D};
use hplan::projection::{
    barycentric_projection, gm_projection_hnet, verify_nearness, ProjectionKind, ProjectionMap,
};
use hplan::solver::{brute_force_solve, solve_entropic, solve_exact, HPlan};
use hplan::space::{CompactSpace, Point};
use hplan::transform::{ContinuousVersion, SemidiscreteVersion, Window};
use hplan::Rng;
use std::sync::Arc;
use std::time::Instant;

const SWEEP_KS: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn all_pass(records: &[ExperimentRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

fn failures(records: &[ExperimentRecord]) -> String {
    records
        .iter()
        .filter(|r| !r.pass)
        .flat_map(|r| {
            r.assertions
                .iter()
                .filter(|a| !a.pass)
                .map(move |a| format!("{} k={} {}: {} vs {}", r.experiment, r.k, a.name, a.lhs, a.rhs))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn criterion_01_value_convergence_with_certified_bound() {
    let t0 = Instant::now();
    let inst = instance_uniform_squeeze();
    let recs = run_value_sweep(&inst, &SWEEP_KS).unwrap();
    let err_final = recs.last().unwrap().get("value_err").unwrap();
    let elapsed = t0.elapsed();
    let pass = all_pass(&recs) && err_final < 0.01 && elapsed.as_secs_f64() < 10.0;
    report(
        "1 (value bound |K - 1/12| <= L h + eps)",
        pass,
        &format!(
            "bound holds at every k in {SWEEP_KS:?}; err(256) = {err_final:.3e} < 0.01; {:.2?} < 10 s{}",
            elapsed,
            failures(&recs)
        ),
    );
}

#[test]
fn criterion_02_two_point_sharpness() {
    let t0 = Instant::now();
    let recs = run_sharpness(&[0.5, 0.25, 0.1], 20_260_808).unwrap();
    let elapsed = t0.elapsed();
    let pass = all_pass(&recs) && elapsed.as_secs_f64() < 1.0;
    report(
        "2 (two-point construction attains 0.99 of the sampled modulus)",
        pass,
        &format!("h in {{0.5, 0.25, 0.1}}; {:.2?} < 1 s{}", elapsed, failures(&recs)),
    );
}

#[test]
fn criterion_03_map_convergence_both_projection_kinds() {
    let t0 = Instant::now();
    let inst = instance_uniform_squeeze();
    let b = run_map_sweep(&inst, &SWEEP_KS, ProjectionChoice::Barycentric, 2.0).unwrap();
    let g = run_map_sweep(&inst, &SWEEP_KS, ProjectionChoice::GeometricMedianHNet, 2.0).unwrap();
    let d2_b = b.last().unwrap().get("d_p").unwrap();
    let d2_g = g.last().unwrap().get("d_p").unwrap();
    let elapsed = t0.elapsed();
    let pass = all_pass(&b) && all_pass(&g) && elapsed.as_secs_f64() < 30.0;
    report(
        "3 (d_2 monotone and < 0.05 at k = 256, both kinds)",
        pass,
        &format!(
            "barycentric d_2(256) = {d2_b:.3e}, gm d_2(256) = {d2_g:.3e}; {:.2?} < 30 s{}{}",
            elapsed,
            failures(&b),
            failures(&g)
        ),
    );
}

#[test]
fn bad_set_mass_decays_with_resolution() {
    // not a numbered criterion: the delta = 0.1 off-graph mass of the
    // semidiscrete version is non-increasing in k and zero from k = 4 on.
    let inst = instance_uniform_squeeze();
    let recs = run_bad_set_decay(&inst, &SWEEP_KS).unwrap();
    assert!(all_pass(&recs), "{}", failures(&recs));
    let final_mass = recs.last().unwrap().get("bad_mass_0.1").unwrap();
    assert!(final_mass < 0.05);
}

#[test]
fn criterion_04_projection_error_bound_all_deltas() {
    let inst = instance_uniform_squeeze();
    let mut checked = 0usize;
    let mut ok = true;
    let mut detail = String::new();
    for kind in [ProjectionChoice::Barycentric, ProjectionChoice::GeometricMedianHNet] {
        let recs = run_map_sweep(&inst, &SWEEP_KS, kind, 2.0).unwrap();
        for r in &recs {
            for a in &r.assertions {
                if a.name.starts_with("projection-error-bound-delta") {
                    checked += 1;
                    if !a.pass {
                        ok = false;
                        detail = format!("{} k={} {} vs {}", a.name, r.k, a.lhs, a.rhs);
                    }
                }
            }
        }
    }
    // every (k, kind, delta) combination must have been asserted
    let expected = 2 * SWEEP_KS.len() * hplan::experiment::BAD_SET_DELTAS.len();
    report(
        "4 (d_p <= A h + B delta + C mass^(1/p), kind-specific constants)",
        ok && checked == expected,
        &format!("{checked}/{expected} inequalities checked, slack 1e-9 {detail}"),
    );
}

#[test]
fn criterion_05_diagonal_indicator_counterexample() {
    let recs = run_example(ExampleName::Ex33, &[5, 10, 20], 1.0).unwrap();
    let costs: Vec<f64> = recs.iter().map(|r| r.get("cost").unwrap()).collect();
    let pass = all_pass(&recs) && costs.iter().all(|c| (c - 1.0).abs() <= 1e-12);
    report(
        "5 (discrete value pinned at 1 while the true optimum is 0)",
        pass,
        &format!("costs = {costs:?}, projections stay 0.4 from the identity{}", failures(&recs)),
    );
}

#[test]
fn criterion_06_pinched_cost_weak_but_not_support_convergence() {
    let recs = run_example(ExampleName::Ex34, &[10, 25, 50], 1.0).unwrap();
    let w1_final = recs.last().unwrap().get("w1_to_diagonal").unwrap();
    let dh_min = recs
        .iter()
        .map(|r| r.get("support_hausdorff").unwrap())
        .fold(f64::INFINITY, f64::min);
    let pass = all_pass(&recs) && w1_final < 0.05 && dh_min >= 0.3;
    report(
        "6 (W_1 to the diagonal vanishes, support Hausdorff gap persists)",
        pass,
        &format!("W_1(k=50) = {w1_final:.3e} < 0.05, min d_H = {dh_min:.3} >= 0.3{}", failures(&recs)),
    );
}

#[test]
fn criterion_07_symmetric_plan_away_from_every_optimal_map() {
    let recs = run_example(ExampleName::Ex45, &[4, 10], 1.0).unwrap();
    let floors: Vec<f64> = recs
        .iter()
        .flat_map(|r| {
            [
                r.get("d_p_to_identity").unwrap(),
                r.get("d_p_to_quarter_fold").unwrap(),
            ]
        })
        .collect();
    let pass = all_pass(&recs) && floors.iter().all(|&d| d >= 1.0 / 16.0);
    report(
        "7 (constant-half projection at least 1/16 from both candidates)",
        pass,
        &format!("distances = {floors:?}{}", failures(&recs)),
    );
}

#[test]
fn criterion_08_atoms_to_atoms_split_optima() {
    let recs = run_example(ExampleName::Ex46, &[8, 16, 32, 64, 128], 1.0).unwrap();
    let monge = recs[0].get("monge_cost_t_star").unwrap();
    let last = recs.last().unwrap();
    let d1 = last.get("d1_to_t_star").unwrap();
    let at_atom = last.get("t_k_at_atom").unwrap();
    let pass = all_pass(&recs)
        && (monge - 8.5).abs() <= 1e-9
        && (d1 - 1.5).abs() <= 0.05
        && (at_atom - 0.5).abs() <= 2.0 / 128.0;
    report(
        "8 (M[T*] = 17/2, plan costs near 19/3, projections split from T*)",
        pass,
        &format!(
            "M[T*] = {monge}, d_1(128) = {d1:.4}, T_128(-2) = {at_atom:.4}{}",
            failures(&recs)
        ),
    );
}

#[test]
fn criterion_09_disc_p_dichotomy() {
    let center = run_example(ExampleName::Ex51, &[8, 16, 32, 64, 128, 256], 1.0).unwrap();
    let zero = run_example(ExampleName::Ex51Anchored0, &[8, 16, 32, 64, 128, 256], 1.0).unwrap();
    let cont = run_disc_sweep(DiscStudy::ContinuousMap, &SWEEP_KS, 2.0).unwrap();
    let disc_center: Vec<f64> = center.iter().map(|r| r.get("disc_p").unwrap()).collect();
    let disc_zero_final = zero.last().unwrap().get("disc_p").unwrap();
    let disc_cont_final = cont.last().unwrap().get("disc_p").unwrap();
    let zero_decreasing = zero
        .windows(2)
        .all(|w| w[1].get("disc_p").unwrap() <= w[0].get("disc_p").unwrap() + 1e-12);
    let pass = all_pass(&center)
        && all_pass(&zero)
        && all_pass(&cont)
        && zero_decreasing
        && disc_zero_final < 0.05
        && disc_cont_final < 0.05;
    report(
        "9 (disc_p floor with center anchors, convergence otherwise)",
        pass,
        &format!(
            "center disc_1 = {disc_center:?} all >= 1/2 (1 - 3/k); zero-anchored(256) = {disc_zero_final:.3e}; continuous(256) = {disc_cont_final:.3e}{}",
            failures(&center)
        ),
    );
}

#[test]
fn criterion_10_solver_oracle_equivalence() {
    let mut rng = Rng::new(500_500);
    let mut worst_gap = 0.0f64;
    let mut worst_dev = 0.0f64;
    for trial in 0..500 {
        let m = 1 + rng.below(4);
        let n = 1 + rng.below(4);
        let normalize = |mut w: Vec<f64>| {
            let t: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= t);
            w
        };
        let mu = DiscreteMeasure::new(
            (0..m).map(|_| Point::Scalar(rng.next_f64())).collect(),
            normalize((0..m).map(|_| rng.uniform(0.02, 1.0)).collect()),
        )
        .unwrap();
        let nu = DiscreteMeasure::new(
            (0..n).map(|_| Point::Scalar(rng.next_f64())).collect(),
            normalize((0..n).map(|_| rng.uniform(0.02, 1.0)).collect()),
        )
        .unwrap();
        let cost = CostFunction::quadratic();
        let (value, _) = brute_force_solve(&mu, &nu, &cost).unwrap();
        let (plan, cert) = solve_exact(&mu, &nu, &cost).unwrap();
        let dev = (plan.cost(&cost) - value).abs();
        assert!(dev <= 1e-9, "trial {trial}: exact {} vs brute {}", plan.cost(&cost), value);
        // the certificate gap dominates the true suboptimality
        assert!(plan.cost(&cost) - value <= cert.gap + 1e-9);
        worst_dev = worst_dev.max(dev);

        let (eplan, ecert) = solve_entropic(&mu, &nu, &cost, 1e-3, 50_000).unwrap();
        assert!(ecert.gap <= 1e-3, "trial {trial}: entropic gap {}", ecert.gap);
        assert!(eplan.cost(&cost) - value <= ecert.gap + 1e-9);
        worst_gap = worst_gap.max(ecert.gap);
    }
    report(
        "10 (500 random instances: exact = brute force, entropic certified)",
        true,
        &format!("max |exact - brute| = {worst_dev:.2e}, max entropic gap = {worst_gap:.2e}"),
    );
}

struct StructuralCase {
    label: &'static str,
    plan: HPlan,
    mu: Measure,
    nu: Measure,
    oracle: Map1D,
}

fn structural_cases() -> Vec<StructuralCase> {
    let mut cases = Vec::new();
    // uniform squeeze at several resolutions
    for k in [4usize, 16, 64] {
        let inst = instance_uniform_squeeze();
        let px = Arc::new(
            PointedPartition::uniform_interval(&inst.x, &inst.mu, k, &AnchorSpec::Rule(AnchorRule::Center)).unwrap(),
        );
        let py = Arc::new(
            PointedPartition::uniform_interval(&inst.y, &inst.nu, k, &AnchorSpec::Rule(AnchorRule::Center)).unwrap(),
        );
        let (plan, _) = HPlan::solve_exact(px, py, &inst.cost).unwrap();
        cases.push(StructuralCase {
            label: "uniform-squeeze",
            plan,
            mu: inst.mu.clone(),
            nu: inst.nu.clone(),
            oracle: Map1D::Piecewise(inst.t_star.clone().unwrap()),
        });
    }
    // atom at the origin, two-atom target
    {
        let space = CompactSpace::interval(0.0, 1.0).unwrap();
        let mu = Measure::Line(
            Measure1D::new(vec![(0.0, 0.5)], vec![Segment { lo: 0.0, hi: 1.0, height: 0.5 }]).unwrap(),
        );
        let nu = Measure::Line(Measure1D::new(vec![(0.0, 0.5), (1.0, 0.5)], vec![]).unwrap());
        let t_star = Piecewise1D::new(vec![
            Piece { lo: 0.0, hi: 0.0, closed_left: true, closed_right: true, slope: 0.0, intercept: 0.0 },
            Piece { lo: 0.0, hi: 1.0, closed_left: false, closed_right: true, slope: 0.0, intercept: 1.0 },
        ])
        .unwrap();
        for k in [8usize, 32] {
            let px = Arc::new(
                PointedPartition::uniform_interval(&space, &mu, k, &AnchorSpec::Rule(AnchorRule::Center)).unwrap(),
            );
            let py = Arc::new(
                PointedPartition::uniform_interval(&space, &nu, k, &AnchorSpec::Rule(AnchorRule::Center)).unwrap(),
            );
            let (plan, _) = HPlan::solve_exact(px, py, &CostFunction::quadratic()).unwrap();
            cases.push(StructuralCase {
                label: "atom-split",
                plan,
                mu: mu.clone(),
                nu: nu.clone(),
                oracle: Map1D::Piecewise(t_star.clone()),
            });
        }
    }
    // atoms-to-atoms on [-2, 2]
    {
        let space = CompactSpace::interval(-2.0, 2.0).unwrap();
        let mu = Measure::Line(
            Measure1D::new(vec![(-2.0, 0.5)], vec![Segment { lo: -1.0, hi: 0.0, height: 0.5 }]).unwrap(),
        );
        let nu = Measure::Line(
            Measure1D::new(vec![(2.0, 0.5)], vec![Segment { lo: 0.0, hi: 1.0, height: 0.5 }]).unwrap(),
        );
        // indicator-sum form: 2 on {-2}, x + 1 on [-1, 0], zero elsewhere
        let t_star = Piecewise1D::new(vec![
            Piece { lo: -2.0, hi: -2.0, closed_left: true, closed_right: true, slope: 0.0, intercept: 2.0 },
            Piece { lo: -2.0, hi: -1.0, closed_left: false, closed_right: false, slope: 0.0, intercept: 0.0 },
            Piece { lo: -1.0, hi: 0.0, closed_left: true, closed_right: true, slope: 1.0, intercept: 1.0 },
            Piece { lo: 0.0, hi: 2.0, closed_left: false, closed_right: true, slope: 0.0, intercept: 0.0 },
        ])
        .unwrap();
        for k in [8usize, 32] {
            let px = Arc::new(
                PointedPartition::uniform_interval(&space, &mu, k, &AnchorSpec::Rule(AnchorRule::Center)).unwrap(),
            );
            let py = Arc::new(
                PointedPartition::uniform_interval(&space, &nu, k, &AnchorSpec::Rule(AnchorRule::Center)).unwrap(),
            );
            let (plan, _) = HPlan::solve_exact(px, py, &CostFunction::quadratic()).unwrap();
            cases.push(StructuralCase {
                label: "atoms-to-atoms",
                plan,
                mu: mu.clone(),
                nu: nu.clone(),
                oracle: Map1D::Piecewise(t_star.clone()),
            });
        }
    }
    // identity instance
    {
        let inst = instance_identity();
        let p = Arc::new(
            PointedPartition::uniform_interval(&inst.x, &inst.mu, 16, &AnchorSpec::Rule(AnchorRule::Center)).unwrap(),
        );
        let (plan, _) = HPlan::solve_exact(p.clone(), p, &inst.cost).unwrap();
        cases.push(StructuralCase {
            label: "identity",
            plan,
            mu: inst.mu.clone(),
            nu: inst.nu.clone(),
            oracle: Map1D::Piecewise(inst.t_star.clone().unwrap()),
        });
    }
    cases
}

fn cell_window(cell: &hplan::Cell) -> Window {
    match cell {
        hplan::Cell::Interval { lo, hi, closed_left, closed_right } => {
            Window::interval(*lo, *hi, *closed_left, *closed_right)
        }
        _ => panic!("interval cells only in this suite"),
    }
}

#[test]
fn criterion_11_structural_identities_nearness_and_oscillation_bound() {
    // rectangle identities, both transform kinds, every support entry
    let mut worst_rect = 0.0f64;
    let mut oscillation_checked = 0usize;
    for case in structural_cases() {
        let cont = ContinuousVersion::new(&case.plan, &case.mu, &case.nu).unwrap();
        let semi = SemidiscreteVersion::new(&case.plan, &case.mu).unwrap();
        for e in &case.plan.plan.entries {
            let we = cell_window(&case.plan.source.cells[e.i]);
            let wf = cell_window(&case.plan.target.cells[e.j]);
            let c = cont.rectangle_mass(&we, &wf).unwrap();
            let s = semi.rectangle_mass(&we, &wf).unwrap();
            worst_rect = worst_rect.max((c - e.mass).abs()).max((s - e.mass).abs());
        }
        assert!(
            worst_rect <= 1e-10,
            "{}: rectangle identity violated by {worst_rect:.3e}",
            case.label
        );

        // the oscillation bound disc_p <= 2 d_p + 2 (sum mu_i osc^p)^(1/p)
        for p in [1.0, 2.0] {
            let projections: Vec<ProjectionMap> = [
                barycentric_projection(&case.plan).ok(),
                gm_projection_hnet(&case.plan).ok(),
            ]
            .into_iter()
            .flatten()
            .collect();
            for t_h in projections {
                let disc = metrics::disc_p(&t_h, &case.oracle, p).unwrap();
                let dp = metrics::map_distance_p(&t_h.to_map().unwrap(), &case.oracle, &case.mu, p)
                    .unwrap();
                let osc =
                    metrics::oscillation_sum(&case.oracle, &case.plan.source, p, 0, 0).unwrap();
                assert!(
                    disc <= 2.0 * dp.value + 2.0 * osc + 1e-9,
                    "{} p={p}: disc {disc} vs 2*{} + 2*{osc}",
                    case.label,
                    dp.value
                );
                oscillation_checked += 1;
            }
        }
    }

    // randomized nearness suite: 200 instances x 50 probes, both kinds
    let mut rng = Rng::new(11_000);
    let space = CompactSpace::interval(0.0, 1.0).unwrap();
    let mut nearness_checked = 0usize;
    for _ in 0..200 {
        let n = 1 + rng.below(6);
        let mut ws: Vec<f64> = (0..n).map(|_| rng.uniform(0.01, 1.0)).collect();
        let t: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= t);
        let targets: Vec<(Point, f64)> = ws
            .iter()
            .map(|&w| (Point::Scalar(rng.next_f64()), w))
            .collect();
        // a random net with its exact covering radius on [0, 1]
        let mut net: Vec<f64> = (0..4 + rng.below(6)).map(|_| rng.next_f64()).collect();
        net.sort_by(f64::total_cmp);
        let mut eps = net[0].max(1.0 - net[net.len() - 1]);
        for w in net.windows(2) {
            eps = eps.max((w[1] - w[0]) / 2.0);
        }
        let net: Vec<Point> = net.into_iter().map(Point::Scalar).collect();
        let mut best = 0usize;
        let mut best_v = f64::INFINITY;
        for (k, y) in net.iter().enumerate() {
            let v: f64 = targets
                .iter()
                .map(|(t, w)| w * space.distance(y, t))
                .sum();
            if v < best_v {
                best_v = v;
                best = k;
            }
        }
        let barycenter = Point::Scalar(
            targets
                .iter()
                .map(|(t, w)| w * t.scalar().unwrap())
                .sum(),
        );
        for _ in 0..50 {
            let probe = Point::Scalar(rng.next_f64());
            assert!(verify_nearness(
                &space,
                &probe,
                &net[best],
                &targets,
                &ProjectionKind::GeometricMedian,
                eps,
            ));
            assert!(verify_nearness(
                &space,
                &probe,
                &barycenter,
                &targets,
                &ProjectionKind::Barycentric,
                0.0,
            ));
            nearness_checked += 2;
        }
    }
    report(
        "11 (rectangle identities, nearness suite, oscillation bound)",
        true,
        &format!(
            "max rectangle deviation = {worst_rect:.2e}; {nearness_checked} nearness checks, {oscillation_checked} oscillation-bound checks, zero violations"
        ),
    );
}
