mod common;

use common::*;
use hxai_core::game::FnGame;
use hxai_core::owen::owen_multilevel;
use hxai_core::{exact_shapley, PartitionHierarchy, Rational};
use num_rational::Ratio;
use proptest::prelude::*;

fn shapley_of(n: usize, v: Vec<f64>) -> Vec<f64> {
    exact_shapley(&table_game(n, v)).unwrap().scores
}

fn owen_of(n: usize, v: Vec<f64>, h: &PartitionHierarchy) -> Vec<f64> {
    owen_multilevel(&table_game(n, v), h).unwrap().scores
}

fn game_strategy() -> impl Strategy<Value = (usize, Vec<f64>, u64)> {
    (1usize..=8).prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0f64..10.0, 1 << n), any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shapley_efficiency((n, v, _) in game_strategy()) {
        let phi = shapley_of(n, v.clone());
        let surplus = v[(1 << n) - 1] - v[0];
        prop_assert!((phi.iter().sum::<f64>() - surplus).abs() < 1e-9);
    }

    #[test]
    fn shapley_linearity((n, v, seed) in game_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let w = random_table(n, &mut rng(seed));
        let mixed: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let lhs = shapley_of(n, mixed);
        let pv = shapley_of(n, v);
        let pw = shapley_of(n, w);
        let rhs: Vec<f64> = pv.iter().zip(&pw).map(|(x, y)| a * x + b * y).collect();
        assert_close(&lhs, &rhs, 1e-9);
    }

    #[test]
    fn shapley_symmetry((n, v, seed) in game_strategy()) {
        prop_assume!(n >= 2);
        let mut r = rng(seed);
        let i = rand::Rng::gen_range(&mut r, 0..n);
        let j = (i + rand::Rng::gen_range(&mut r, 1..n)) % n;
        let sym: Vec<f64> = (0..1usize << n).map(|s| (v[s] + v[swap_bits(s, i, j)]) / 2.0).collect();
        let phi = shapley_of(n, sym);
        prop_assert!((phi[i] - phi[j]).abs() < 1e-9);
    }

    #[test]
    fn shapley_dummy((n, v, seed) in game_strategy(), c in -5.0f64..5.0) {
        let d = (seed % n as u64) as usize;
        let dummy: Vec<f64> = (0..1usize << n)
            .map(|s| v[s & !(1 << d)] + if s >> d & 1 == 1 { c } else { 0.0 })
            .collect();
        let phi = shapley_of(n, dummy);
        prop_assert!((phi[d] - c).abs() < 1e-9);
    }

    #[test]
    fn owen_efficiency_and_linearity((n, v, seed) in game_strategy(), a in -3.0f64..3.0) {
        let mut r = rng(seed);
        let h = random_hierarchy(n, 3, &mut r);
        let w = random_table(n, &mut r);
        let phi = owen_of(n, v.clone(), &h);
        prop_assert!((phi.iter().sum::<f64>() - (v[(1 << n) - 1] - v[0])).abs() < 1e-9);
        let mixed: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + y).collect();
        let pw = owen_of(n, w, &h);
        let rhs: Vec<f64> = phi.iter().zip(&pw).map(|(x, y)| a * x + y).collect();
        assert_close(&owen_of(n, mixed, &h), &rhs, 1e-9);
    }

    #[test]
    fn owen_null_group_gets_nothing((n, v, seed) in game_strategy()) {
        prop_assume!(n >= 2);
        let mut r = rng(seed);
        let groups = random_partition(n, 4, &mut r);
        prop_assume!(groups.len() >= 2);
        let null: usize = groups[0].iter().map(|&f| 1usize << f).sum();
        let game: Vec<f64> = (0..1usize << n).map(|s| v[s & !null]).collect();
        let h = PartitionHierarchy::from_groups(n, &groups).unwrap();
        let phi = owen_of(n, game, &h);
        for &f in &groups[0] {
            prop_assert!(phi[f].abs() < 1e-9);
        }
    }

    #[test]
    fn owen_singletons_match_shapley((n, v, _) in game_strategy()) {
        let h = PartitionHierarchy::all_singletons(n).unwrap();
        assert_close(&owen_of(n, v.clone(), &h), &shapley_of(n, v), 1e-9);
    }
}

fn rational_table(n: usize, seed: u64) -> Vec<Rational> {
    let mut r = rng(seed);
    (0..1usize << n)
        .map(|_| {
            Ratio::new(
                rand::Rng::gen_range(&mut r, -50..50),
                rand::Rng::gen_range(&mut r, 1..7),
            )
        })
        .collect()
}

#[test]
fn rational_efficiency_is_exact() {
    for seed in 0..20 {
        let n = 2 + (seed as usize % 5);
        let v = rational_table(n, seed);
        let game = hxai_core::TableGame::new(n, v.clone()).unwrap();
        let phi = exact_shapley(&game).unwrap();
        assert_eq!(phi.total(), v[(1 << n) - 1] - v[0]);
        let h = random_hierarchy(n, 2, &mut rng(seed));
        let owen = owen_multilevel(&game, &h).unwrap();
        assert_eq!(owen.total(), v[(1 << n) - 1] - v[0]);
    }
}

#[test]
fn f32_engine_tracks_f64() {
    let n = 6;
    let v = random_table(n, &mut rng(9));
    let v32: Vec<f32> = v.iter().map(|&x| x as f32).collect();
    let phi32 = exact_shapley(&hxai_core::TableGame::new(n, v32).unwrap()).unwrap();
    let phi64 = shapley_of(n, v);
    for (a, b) in phi32.scores.iter().zip(&phi64) {
        assert!((*a as f64 - b).abs() < 1e-5);
    }
}

#[test]
fn closure_games_are_accepted() {
    let game = FnGame::new(3, |s: &hxai_core::CoalitionMask| s.count() as f64);
    let phi: hxai_core::Attribution<f64> = exact_shapley(&game).unwrap();
    assert_close(&phi.scores, &[1.0, 1.0, 1.0], 1e-12);
}
