//! Comparison schemes with equal relay power.
//!
//! Both give every used BC subcarrier `P_k / N` of its relay's budget. EPA
//! still picks the best (mobile, relay) per subcarrier pair and the best
//! pairing; RRA draws the pairing and the (mobile, relay) choices at random.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::assignment::{solve_pairing, ActiveTuple, Allocation, ProfitMatrix};
use crate::channel::{ChannelRealization, NetworkConfig};
use crate::dual::SolverReport;
use crate::error::Result;
use crate::rate::TupleContext;

/// Equal power assignment with optimized selection and pairing.
pub fn epa_solve(channels: &ChannelRealization, config: &NetworkConfig) -> Result<SolverReport> {
    config.validate()?;
    channels.check_against(config)?;
    let gains = channels.power_gains();
    let (m, n) = (config.num_ms, config.num_subcarriers);
    let share: Vec<f64> = config
        .rs_power_budget
        .iter()
        .map(|b| b / n as f64)
        .collect();

    let cells = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let mut best = (f64::NEG_INFINITY, 0, 0, 0.0);
            for u in 0..m {
                for (k, &p) in share.iter().enumerate() {
                    let ctx = TupleContext::from_gains(&gains, config, u, k, i, j);
                    let x = config.ms_weights[u] * ctx.rate(p);
                    if x > best.0 {
                        best = (x, u, k, p);
                    }
                }
            }
            best
        });
    let matrix = ProfitMatrix::from_parts(n, cells);
    let allocation = solve_pairing(&matrix);
    Ok(SolverReport::primal_only(allocation, &gains, config))
}

/// Random pairing, random (mobile, relay) per pair, equal power.
/// All `N` pairs are used.
pub fn rra_solve<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    config: &NetworkConfig,
    rng: &mut R,
) -> Result<SolverReport> {
    config.validate()?;
    channels.check_against(config)?;
    let gains = channels.power_gains();
    let n = config.num_subcarriers;
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(rng);
    let active_tuples = sigma
        .into_iter()
        .enumerate()
        .map(|(i, j)| {
            let u = rng.random_range(0..config.num_ms);
            let k = rng.random_range(0..config.num_rs);
            ActiveTuple {
                u,
                k,
                i,
                j,
                power: config.rs_power_budget[k] / n as f64,
            }
        })
        .collect();
    Ok(SolverReport::primal_only(
        Allocation { active_tuples },
        &gains,
        config,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::realize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(m: usize, k: usize, n: usize) -> NetworkConfig {
        NetworkConfig {
            num_ms: m,
            num_rs: k,
            rs_power_budget: vec![10.0; k],
            ms_weights: vec![1.0; m],
            ..NetworkConfig::reference().with_subcarriers(n)
        }
    }

    #[test]
    fn epa_single_tuple_uses_the_whole_budget() {
        let cfg = config(1, 1, 1);
        let ch = realize(&cfg, 4);
        let report = epa_solve(&ch, &cfg).unwrap();
        let ctx = TupleContext::from_gains(&ch.power_gains(), &cfg, 0, 0, 0, 0);
        assert_eq!(report.primal_value, crate::sum_rate(&ctx, 10.0).unwrap());
        assert_eq!(report.dual_value, None);
        assert_eq!(report.allocation.active_tuples[0].power, 10.0);
    }

    #[test]
    fn rra_is_seeded_and_feasible() {
        let cfg = config(4, 3, 16);
        let ch = realize(&cfg, 4);
        let a = rra_solve(&ch, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = rra_solve(&ch, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.allocation.active_tuples.len(), 16);
        a.allocation.check_feasible(&cfg, 0.0).unwrap();
    }

    #[test]
    fn rra_with_one_subcarrier_pairs_it_with_itself() {
        let cfg = config(3, 2, 1);
        let ch = realize(&cfg, 4);
        for seed in 0..10 {
            let r = rra_solve(&ch, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let t = r.allocation.active_tuples[0];
            assert_eq!((t.i, t.j), (0, 0));
        }
    }

    #[test]
    fn epa_is_feasible_on_the_reference_network() {
        let cfg = NetworkConfig::reference();
        let ch = realize(&cfg, 12);
        let r = epa_solve(&ch, &cfg).unwrap();
        r.allocation.check_feasible(&cfg, 0.0).unwrap();
        assert_eq!(r.allocation.active_tuples.len(), cfg.num_subcarriers);
    }
}
