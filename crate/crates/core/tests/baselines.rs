mod common;

use common::network;
use ofdma_twr::rate::TupleContext;
use ofdma_twr::{epa_solve, realize, rra_solve, solve, NetworkConfig, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn permutations_best(n: usize, values: &[f64]) -> f64 {
    fn go(n: usize, v: &[f64], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == n {
            *best = best.max(acc);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                go(n, v, row + 1, used, acc + v[row * n + j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(n, values, 0, &mut vec![false; n], 0.0, &mut best);
    best
}

#[test]
fn epa_pairing_matches_permutation_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for seed in 0..30 {
        let config = NetworkConfig {
            ms_weights: vec![rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)],
            rs_power_budget: vec![rng.random_range(1.0..20.0), rng.random_range(1.0..20.0)],
            ..network(2, 2, 6)
        };
        let ch = realize(&config, seed);
        let gains = ch.power_gains();
        let mut rates = vec![0.0; 36];
        for i in 0..6 {
            for j in 0..6 {
                for u in 0..2 {
                    for k in 0..2 {
                        let ctx = TupleContext::from_gains(&gains, &config, u, k, i, j);
                        let x = config.ms_weights[u] * ctx.rate(config.rs_power_budget[k] / 6.0);
                        rates[i * 6 + j] = f64::max(rates[i * 6 + j], x);
                    }
                }
            }
        }
        let report = epa_solve(&ch, &config).unwrap();
        let best = permutations_best(6, &rates);
        assert!((report.primal_value - best).abs() <= 1e-12 * best);
        assert_eq!(report.allocation.active_tuples.len(), 6);
        assert!(report.dual_value.is_none());
    }
}

#[test]
fn epa_never_beats_the_dual_bound() {
    for seed in 0..6 {
        let config = network(4, 3, 12);
        let ch = realize(&config, seed);
        let epa = epa_solve(&ch, &config).unwrap();
        let proposed = solve(&ch, &config, &SolverOptions::default()).unwrap();
        assert!(proposed.weak_duality_holds());
        assert!(epa.primal_value <= proposed.dual_value.unwrap());
    }
}

#[test]
fn random_allocation_trails_equal_power_on_average() {
    let config = NetworkConfig::reference();
    let (mut rra, mut epa) = (0.0, 0.0);
    for seed in 0..500u64 {
        let ch = realize(&config, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        rra += rra_solve(&ch, &config, &mut rng).unwrap().sum_rate;
        epa += epa_solve(&ch, &config).unwrap().sum_rate;
    }
    assert!(rra / 500.0 <= epa / 500.0, "{rra} vs {epa}");
}

#[test]
fn baselines_are_feasible_with_exact_budgets() {
    for seed in 0..20 {
        let config = network(3, 2, 10);
        let ch = realize(&config, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for report in [
            epa_solve(&ch, &config).unwrap(),
            rra_solve(&ch, &config, &mut rng).unwrap(),
        ] {
            assert!(report.allocation.is_exclusive());
            for (load, budget) in report
                .allocation
                .relay_loads(2)
                .iter()
                .zip(&config.rs_power_budget)
            {
                assert!(load <= budget);
            }
        }
    }
}

#[test]
fn rra_uses_every_pair_and_repeats_under_a_seed() {
    let config = network(4, 3, 16);
    let ch = realize(&config, 3);
    let a = rra_solve(&ch, &config, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let b = rra_solve(&ch, &config, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.allocation.active_tuples.len(), 16);
    let c = rra_solve(&ch, &config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_ne!(a.allocation, c.allocation);
}

#[test]
fn proposed_dominates_equal_power_almost_always() {
    let config = network(4, 3, 8);
    let runs = 60;
    let mut wins = 0;
    for seed in 0..runs {
        let ch = realize(&config, 1000 + seed);
        let proposed = solve(&ch, &config, &SolverOptions::default()).unwrap();
        let epa = epa_solve(&ch, &config).unwrap();
        assert!(proposed.weak_duality_holds());
        if proposed.primal_value >= epa.primal_value {
            wins += 1;
        }
    }
    assert!(wins as f64 >= 0.95 * runs as f64, "{wins}/{runs}");
}
