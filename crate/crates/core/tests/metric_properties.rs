//! Property suites for the comparison functionals.

use hplan::metrics::{hausdorff, total_variation, wasserstein_inf, wasserstein_p};
use hplan::{DiscreteMeasure, Point, Rng};
use proptest::prelude::*;

fn line_metric(x: &Point, y: &Point) -> f64 {
    (x.scalar().unwrap() - y.scalar().unwrap()).abs()
}

fn random_measure(rng: &mut Rng, n: usize) -> DiscreteMeasure {
    let mut w: Vec<f64> = (0..n).map(|_| rng.uniform(0.05, 1.0)).collect();
    let t: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= t);
    DiscreteMeasure::new(
        (0..n).map(|_| Point::Scalar(rng.next_f64())).collect(),
        w,
    )
    .unwrap()
}

#[test]
fn wasserstein_metric_axioms_on_random_triples() {
    let mut rng = Rng::new(314159);
    for p in [1.0, 2.0] {
        for _ in 0..100 {
            let (na, nb, nc) = (1 + rng.below(4), 1 + rng.below(4), 1 + rng.below(4));
            let a = random_measure(&mut rng, na);
            let b = random_measure(&mut rng, nb);
            let c = random_measure(&mut rng, nc);
            let (dab, _) = wasserstein_p(&a, &b, line_metric, p).unwrap();
            let (dba, _) = wasserstein_p(&b, &a, line_metric, p).unwrap();
            let (dbc, _) = wasserstein_p(&b, &c, line_metric, p).unwrap();
            let (dac, _) = wasserstein_p(&a, &c, line_metric, p).unwrap();
            let (daa, _) = wasserstein_p(&a, &a.clone(), line_metric, p).unwrap();
            assert!((dab - dba).abs() <= 1e-9, "symmetry: {dab} vs {dba}");
            assert!(dac <= dab + dbc + 1e-9, "triangle: {dac} vs {dab}+{dbc}");
            assert!(daa <= 1e-9, "identity: {daa}");
        }
    }
}

#[test]
fn wasserstein_p_below_bottleneck() {
    let mut rng = Rng::new(2718);
    for _ in 0..100 {
        let (na, nb) = (1 + rng.below(5), 1 + rng.below(5));
        let a = random_measure(&mut rng, na);
        let b = random_measure(&mut rng, nb);
        let winf = wasserstein_inf(&a, &b, line_metric).unwrap();
        for p in [1.0, 2.0, 4.0] {
            let (wp, plan) = wasserstein_p(&a, &b, line_metric, p).unwrap();
            assert!(wp <= winf + 1e-9, "W_{p} = {wp} > W_inf = {winf}");
            // the optimal coupling's max displacement is a feasible
            // bottleneck, so it dominates W_inf as well
            let max_step = plan
                .entries
                .iter()
                .map(|e| line_metric(&a.points[e.i], &b.points[e.j]))
                .fold(0.0f64, f64::max);
            assert!(winf <= max_step + 1e-9);
        }
    }
}

#[test]
fn hausdorff_below_bottleneck_for_uniform_marginals() {
    let mut rng = Rng::new(977);
    for _ in 0..100 {
        let n = 1 + rng.below(5);
        let pa: Vec<Point> = (0..n).map(|_| Point::Scalar(rng.next_f64())).collect();
        let pb: Vec<Point> = (0..n).map(|_| Point::Scalar(rng.next_f64())).collect();
        let ua = DiscreteMeasure::new(pa.clone(), vec![1.0 / n as f64; n]).unwrap();
        let ub = DiscreteMeasure::new(pb.clone(), vec![1.0 / n as f64; n]).unwrap();
        let dh = hausdorff(&pa, &pb, line_metric).unwrap();
        let winf = wasserstein_inf(&ua, &ub, line_metric).unwrap();
        assert!(dh <= winf + 1e-9, "d_H = {dh} > W_inf = {winf}");
    }
}

proptest! {
    #[test]
    fn total_variation_is_a_bounded_metric(
        raw_a in proptest::collection::vec((0u8..4, 0.05f64..1.0), 1..5),
        raw_b in proptest::collection::vec((0u8..4, 0.05f64..1.0), 1..5),
    ) {
        let build = |raw: &[(u8, f64)]| {
            let t: f64 = raw.iter().map(|r| r.1).sum();
            DiscreteMeasure::new(
                raw.iter().map(|r| Point::Scalar(r.0 as f64 / 4.0)).collect(),
                raw.iter().map(|r| r.1 / t).collect(),
            )
            .unwrap()
        };
        let a = build(&raw_a);
        let b = build(&raw_b);
        let d = total_variation(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((total_variation(&b, &a) - d).abs() <= 1e-12);
        prop_assert!(total_variation(&a, &a.clone()).abs() <= 1e-12);
    }

    #[test]
    fn bottleneck_never_exceeds_diameter_of_union(
        raw_a in proptest::collection::vec(0.0f64..1.0, 1..5),
        raw_b in proptest::collection::vec(0.0f64..1.0, 1..5),
    ) {
        let uniform = |xs: &[f64]| {
            DiscreteMeasure::new(
                xs.iter().map(|&x| Point::Scalar(x)).collect(),
                vec![1.0 / xs.len() as f64; xs.len()],
            )
            .unwrap()
        };
        let a = uniform(&raw_a);
        let b = uniform(&raw_b);
        let winf = wasserstein_inf(&a, &b, line_metric).unwrap();
        let diam = raw_a
            .iter()
            .chain(&raw_b)
            .flat_map(|x| raw_a.iter().chain(&raw_b).map(move |y| (x - y).abs()))
            .fold(0.0f64, f64::max);
        prop_assert!(winf <= diam + 1e-12);
    }
}
