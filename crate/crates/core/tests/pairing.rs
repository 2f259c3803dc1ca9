mod common;

use std::collections::BTreeSet;

use common::network;
use ofdma_twr::assignment::pairing_objective;
use ofdma_twr::power::PowerTolerances;
use ofdma_twr::rate::TupleContext;
use ofdma_twr::{build_profit_matrix, optimal_power, profit, realize, solve_pairing, ProfitMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best objective over all permutations, each with its non-positive cells
/// dropped. Every partial matching extends to a permutation, so this covers
/// all drop subsets.
fn brute_force(n: usize, values: &[f64]) -> f64 {
    fn go(n: usize, values: &[f64], row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == n {
            *best = best.max(acc);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                go(
                    n,
                    values,
                    row + 1,
                    used,
                    acc + values[row * n + j].max(0.0),
                    best,
                );
                used[j] = false;
            }
        }
    }
    let mut best = 0.0;
    go(n, values, 0, &mut vec![false; n], 0.0, &mut best);
    best
}

fn selected(n: usize, values: &[f64]) -> (BTreeSet<(usize, usize)>, f64) {
    let matrix = ProfitMatrix::from_values(n, values.to_vec()).unwrap();
    let alloc = solve_pairing(&matrix);
    let cells = alloc.active_tuples.iter().map(|t| (t.i, t.j)).collect();
    (cells, pairing_objective(&matrix, &alloc))
}

fn matrix_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=7).prop_flat_map(|n| (Just(n), prop::collection::vec(-5.0f64..10.0, n * n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_brute_force((n, values) in matrix_strategy()) {
        let (cells, obj) = selected(n, &values);
        let rows: BTreeSet<usize> = cells.iter().map(|c| c.0).collect();
        let cols: BTreeSet<usize> = cells.iter().map(|c| c.1).collect();
        prop_assert_eq!(rows.len(), cells.len());
        prop_assert_eq!(cols.len(), cells.len());
        prop_assert!(cells.iter().all(|&(i, j)| values[i * n + j] > 0.0));
        let best = brute_force(n, &values);
        prop_assert!((obj - best).abs() <= 1e-12 * best.max(1.0), "{} vs {}", obj, best);
    }

    #[test]
    fn integer_matrices_match_exactly(
        (n, values) in (1usize..=7).prop_flat_map(|n| {
            (Just(n), prop::collection::vec((-20i32..60).prop_map(f64::from), n * n))
        })
    ) {
        let (_, obj) = selected(n, &values);
        prop_assert_eq!(obj, brute_force(n, &values));
    }

    #[test]
    fn scaling_keeps_the_selection((n, values) in matrix_strategy(), e in -20i32..20) {
        let c = 2f64.powi(e);
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        prop_assert_eq!(selected(n, &values).0, selected(n, &scaled).0);
    }

    #[test]
    fn lowering_an_unselected_cell_changes_nothing(
        (n, values) in matrix_strategy(),
        pick in any::<prop::sample::Index>(),
        drop in 0.0f64..20.0,
    ) {
        let (cells, obj) = selected(n, &values);
        let free: Vec<usize> = (0..n * n).filter(|c| !cells.contains(&(c / n, c % n))).collect();
        prop_assume!(!free.is_empty());
        let cell = free[pick.index(free.len())];
        let mut lowered = values.clone();
        lowered[cell] -= drop;
        let (cells2, obj2) = selected(n, &lowered);
        prop_assert_eq!(cells, cells2);
        prop_assert_eq!(obj, obj2);
    }

    #[test]
    fn raising_an_unselected_cell_gains_at_most_the_raise(
        (n, values) in matrix_strategy(),
        pick in any::<prop::sample::Index>(),
        raise in 0.0f64..20.0,
    ) {
        let (cells, obj) = selected(n, &values);
        let free: Vec<usize> = (0..n * n).filter(|c| !cells.contains(&(c / n, c % n))).collect();
        prop_assume!(!free.is_empty());
        let cell = free[pick.index(free.len())];
        let mut raised = values.clone();
        raised[cell] += raise;
        let (_, obj2) = selected(n, &raised);
        prop_assert!(obj2 >= obj - 1e-12 * obj.max(1.0));
        prop_assert!(obj2 <= obj + raise + 1e-12 * obj2.max(1.0));
    }
}

#[test]
fn raising_an_unselected_cell_below_the_minimum_can_still_switch_pairs() {
    // Optimal: (0,0) + (1,1) = 110 over the alternative 105 + 5.
    let before = [10.0, 5.0, 105.0, 100.0];
    let (cells, obj) = selected(2, &before);
    assert_eq!(cells, BTreeSet::from([(0, 0), (1, 1)]));
    assert_eq!(obj, 110.0);
    // Cell (0,1) stays below the smallest selected value 10, yet the
    // off-diagonal pairing now wins with 9 + 105.
    let after = [10.0, 9.0, 105.0, 100.0];
    let (cells, obj) = selected(2, &after);
    assert_eq!(cells, BTreeSet::from([(0, 1), (1, 0)]));
    assert_eq!(obj, 114.0);
}

#[test]
fn six_by_six_matrices_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let values: Vec<f64> = (0..36).map(|_| rng.random_range(-1.0..4.0)).collect();
        let (_, obj) = selected(6, &values);
        let best = brute_force(6, &values);
        assert!((obj - best).abs() <= 1e-12 * best.max(1.0));
    }
}

#[test]
fn profit_matrix_cells_match_per_tuple_recomputation() {
    let config = network(2, 2, 2);
    let tol = PowerTolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for seed in 0..20 {
        let gains = realize(&config, seed).power_gains();
        let lambda = [
            common::log_uniform(&mut rng, 1e-3, 1.0),
            common::log_uniform(&mut rng, 1e-3, 1.0),
        ];
        let matrix = build_profit_matrix(&gains, &config, &lambda, &tol).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut best = (f64::NEG_INFINITY, 0, 0);
                for u in 0..2 {
                    for (k, &price) in lambda.iter().enumerate() {
                        let ctx = TupleContext::from_gains(&gains, &config, u, k, i, j);
                        let cap = config.rs_power_budget[k];
                        let p = optimal_power(&ctx, price, 1.0, &tol.for_budget(cap)).unwrap();
                        let x = profit(&ctx, price, 1.0, p).unwrap();
                        // A dense grid never does better than the solver.
                        let (grid, _) = common::grid_best(&ctx, price, 1.0, cap, 20_000);
                        assert!(grid <= x + 1e-9 && grid >= x - 1e-3 * x.abs().max(1e-3));
                        if x > best.0 {
                            best = (x, u, k);
                        }
                    }
                }
                assert_eq!(matrix.value(i, j), best.0);
                assert_eq!(
                    (matrix.argmax_ms(i, j), matrix.argmax_rs(i, j)),
                    (best.1, best.2)
                );
            }
        }
    }
}
