mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statesim::transport::{
    empirical_kantorovich, hungarian, kantorovich, kantorovich_warm, sample_empirical, total_variation, Distribution, RngStream,
    WarmStart,
};
use statesim::SquareMatrix;

fn random_metric(rng: &mut impl Rng, m: usize) -> SquareMatrix {
    // distances between random points on a line are a metric
    let xs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..5.0)).collect();
    SquareMatrix::from_fn(m, |i, j| (xs[i] - xs[j]).abs())
}

fn random_cost(rng: &mut impl Rng, m: usize) -> SquareMatrix {
    SquareMatrix::from_fn(m, |_, _| rng.gen_range(0.0..3.0))
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..300 {
        let m = rng.gen_range(1..=4);
        let p = common::random_dist(&mut rng, m, 0.25);
        let q = common::random_dist(&mut rng, m, 0.25);
        let h = random_cost(&mut rng, m);
        let plan = kantorovich(&h, &Distribution::new(p.clone()).unwrap(), &Distribution::new(q.clone()).unwrap()).unwrap();
        let oracle = common::brute_kantorovich(&h, &p, &q);
        assert!((plan.cost() - oracle).abs() <= 1e-9, "{p:?} {q:?}: {} vs {oracle}", plan.cost());
    }
}

#[test]
fn plan_is_a_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let m = rng.gen_range(1..=12);
        let p = common::random_dist(&mut rng, m, 0.3);
        let q = common::random_dist(&mut rng, m, 0.3);
        let h = random_cost(&mut rng, m);
        let plan = kantorovich(&h, &Distribution::new(p.clone()).unwrap(), &Distribution::new(q.clone()).unwrap()).unwrap();
        let flow = plan.dense_flow();
        for i in 0..m {
            let row: f64 = flow.row(i).iter().sum();
            let col: f64 = (0..m).map(|k| flow.get(k, i)).sum();
            assert!((row - p[i]).abs() <= 1e-9 && (col - q[i]).abs() <= 1e-9);
        }
        assert!(flow.as_slice().iter().all(|&f| f >= 0.0));
        let cost: f64 = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| flow.get(i, j) * h.get(i, j)).sum();
        assert!((cost - plan.cost()).abs() <= 1e-9);
    }
}

#[test]
fn hungarian_matches_exhaustive_on_reals() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..600 {
        let n = 1 + k % 6;
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let a = hungarian(&cost).unwrap();
        let mut seen = a.permutation.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        assert!((a.total_cost - common::exhaustive_assignment(&cost)).abs() <= 1e-12);
    }
}

#[test]
fn assignment_equals_transport_between_samples() {
    // uniform masses on i points: the optimal coupling can be a permutation
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let m = rng.gen_range(1..=5);
        let i = rng.gen_range(1..=8);
        let h = random_metric(&mut rng, m);
        let p = Distribution::new(common::random_dist(&mut rng, m, 0.2)).unwrap();
        let q = Distribution::new(common::random_dist(&mut rng, m, 0.2)).unwrap();
        let mut stream = RngStream::new(rng.gen(), 0);
        let xs = sample_empirical(&p, i, &mut stream).unwrap();
        let ys = sample_empirical(&q, i, &mut stream).unwrap();
        let by_assignment = empirical_kantorovich(&h, &xs, &ys).unwrap();
        let by_transport = kantorovich(&h, &xs.empirical(), &ys.empirical()).unwrap().cost();
        assert!((by_assignment - by_transport).abs() <= 1e-9, "{by_assignment} vs {by_transport}");
    }
}

#[test]
fn warm_start_matches_cold() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut reused = 0;
    for _ in 0..1000 {
        let m = rng.gen_range(1..=8);
        let p = Distribution::new(common::random_dist(&mut rng, m, 0.2)).unwrap();
        let q = Distribution::new(common::random_dist(&mut rng, m, 0.2)).unwrap();
        let h1 = random_cost(&mut rng, m);
        let h2 = SquareMatrix::from_fn(m, |i, j| h1.get(i, j) + rng.gen_range(0.0..0.3));
        let hint = kantorovich(&h1, &p, &q).unwrap().into_hint();
        let (warm, start) = kantorovich_warm(&h2, &p, &q, &hint).unwrap();
        let cold = kantorovich(&h2, &p, &q).unwrap();
        assert!((warm.cost() - cold.cost()).abs() <= 1e-9);
        reused += usize::from(start == WarmStart::Reused);
    }
    assert_eq!(reused, 1000);
}

#[test]
fn empirical_distance_concentrates() {
    // E‖TK(p̂_i, q̂_i) − TK(p, q)‖ shrinks as the sample size grows
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = 5;
    let h = random_metric(&mut rng, m);
    let p = Distribution::new(common::random_dist(&mut rng, m, 0.0)).unwrap();
    let q = Distribution::new(common::random_dist(&mut rng, m, 0.0)).unwrap();
    let exact = kantorovich(&h, &p, &q).unwrap().cost();
    let mean_error = |i: usize| {
        (0..200u64)
            .map(|run| {
                let mut stream = RngStream::new(9, run);
                let xs = sample_empirical(&p, i, &mut stream).unwrap();
                let ys = sample_empirical(&q, i, &mut stream).unwrap();
                (empirical_kantorovich(&h, &xs, &ys).unwrap() - exact).abs()
            })
            .sum::<f64>()
            / 200.0
    };
    let (small, large) = (mean_error(10), mean_error(100));
    assert!(large < small, "{large} !< {small}");
}

fn dist_strategy(m: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, m).prop_filter_map("positive mass", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-3).then(|| Distribution::new(w.iter().map(|x| x / total).collect()).unwrap())
    })
}

fn line_strategy(m: usize) -> impl Strategy<Value = SquareMatrix> {
    prop::collection::vec(0.0f64..4.0, m).prop_map(move |xs| SquareMatrix::from_fn(m, |i, j| (xs[i] - xs[j]).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kantorovich_is_a_pseudometric(
        (h, p, q, r) in (1usize..7).prop_flat_map(|m| (line_strategy(m), dist_strategy(m), dist_strategy(m), dist_strategy(m)))
    ) {
        let d = |a: &Distribution, b: &Distribution| kantorovich(&h, a, b).unwrap().cost();
        prop_assert!(d(&p, &p).abs() <= 1e-12);
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() <= 1e-9);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-9);
        prop_assert!(d(&p, &q) >= -1e-12);
    }

    #[test]
    fn kantorovich_is_monotone_in_cost(
        (h, bump, p, q) in (1usize..7).prop_flat_map(|m| (
            line_strategy(m),
            prop::collection::vec(0.0f64..1.0, m * m),
            dist_strategy(m),
            dist_strategy(m),
        ))
    ) {
        let m = p.len();
        let bigger = SquareMatrix::from_fn(m, |i, j| h.get(i, j) + bump[i * m + j]);
        prop_assert!(kantorovich(&h, &p, &q).unwrap().cost() <= kantorovich(&bigger, &p, &q).unwrap().cost() + 1e-9);
    }

    #[test]
    fn kantorovich_bounded_by_tv_times_diameter(
        (h, p, q) in (1usize..7).prop_flat_map(|m| (line_strategy(m), dist_strategy(m), dist_strategy(m)))
    ) {
        let cost = kantorovich(&h, &p, &q).unwrap().cost();
        prop_assert!(cost <= total_variation(&p, &q).unwrap() * h.sup_norm() + 1e-9);
    }
}
