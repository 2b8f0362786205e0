use hisp_core::metrics::{optimal_assignment, ospa, OspaParams};
use itertools::Itertools;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    (0..n)
        .permutations(n)
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn six_by_six_matches_all_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let cost: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..6).map(|_| rng.random_range(0.0..100.0)).collect())
            .collect();
        let (a, total) = optimal_assignment(&cost);
        let expected = brute_force(&cost);
        assert!((total - expected).abs() < 1e-9, "{total} vs {expected}");
        let cols: Vec<usize> = a.iter().map(|c| c.unwrap()).sorted().collect();
        assert_eq!(cols, (0..6).collect::<Vec<_>>());
        let sum: f64 = a.iter().enumerate().map(|(i, c)| cost[i][c.unwrap()]).sum();
        assert!((sum - total).abs() < 1e-9);
    }
}

#[test]
fn diagonal_preference_gives_identity() {
    let cost: Vec<Vec<f64>> = (0..5)
        .map(|i| (0..5).map(|j| if i == j { 0.1 } else { 10.0 }).collect())
        .collect();
    let (a, total) = optimal_assignment(&cost);
    assert_eq!(a, (0..5).map(Some).collect::<Vec<_>>());
    assert!((total - 0.5).abs() < 1e-12);
    assert_eq!(optimal_assignment(&[vec![7.25]]).1, 7.25);
}

#[test]
fn missing_objects_follow_the_cardinality_lines() {
    let truth = [
        [-100.0, 280.0],
        [10.0, 20.0],
        [200.0, -100.0],
        [-300.0, 50.0],
        [0.0, 400.0],
    ];
    for p in [1.0, 2.0] {
        let params = OspaParams::new(100.0, p).unwrap();
        for n in 0..=5 {
            let d = ospa(&truth, &truth[..5 - n], &params);
            let expected = 100.0 * (n as f64 / 5.0).powf(1.0 / p);
            assert!((d.total - expected).abs() < 1e-9);
            assert!(d.localisation.abs() < 1e-12);
        }
    }
    let one = ospa(&truth, &truth[..4], &OspaParams::default());
    assert!((one.total - 20.0).abs() < 1e-12);
}

#[test]
fn saturation_and_empty_sets() {
    let p = OspaParams::default();
    assert_eq!(ospa(&[[0.0, 0.0]], &[[0.0, 150.0]], &p).total, 100.0);
    assert_eq!(ospa(&[], &[], &p).total, 0.0);
    assert_eq!(ospa(&[], &[[1.0, 1.0]], &p).total, 100.0);
}

fn points() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(
        (-500.0..500.0f64, -500.0..500.0f64).prop_map(|(x, y)| [x, y]),
        0..7,
    )
}

proptest! {
    #[test]
    fn ospa_is_a_bounded_symmetric_split(x in points(), y in points(), p in 1.0..3.0f64) {
        let params = OspaParams::new(100.0, p).unwrap();
        let a = ospa(&x, &y, &params);
        let b = ospa(&y, &x, &params);
        prop_assert!((a.total - b.total).abs() < 1e-9);
        prop_assert!(a.total <= 100.0 + 1e-9 && a.total >= 0.0);
        let split = a.localisation.powf(p) + a.cardinality.powf(p);
        prop_assert!((split - a.total.powf(p)).abs() <= 1e-6 * a.total.powf(p).max(1.0));
        prop_assert!(ospa(&x, &x, &params).total.abs() < 1e-12);
    }

    #[test]
    fn rectangular_assignment_is_optimal(n in 1usize..5, m in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let (a, total) = optimal_assignment(&cost);
        let k = n.min(m);
        let expected = (0..n)
            .permutations(k)
            .flat_map(|rows| (0..m).permutations(k).map(move |cols| (rows.clone(), cols)))
            .map(|(rows, cols)| rows.iter().zip(&cols).map(|(&i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((total - expected).abs() < 1e-9);
        prop_assert_eq!(a.iter().filter(|c| c.is_some()).count(), k);
    }
}
