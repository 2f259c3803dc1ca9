//! Exhaustive reference solver for tiny instances.
//!
//! Enumerates every partial pairing of MAC to BC subcarriers together with
//! every (mobile, relay) label per used pair, and for each one grids every
//! relay's power simplex `{p >= 0, sum p <= P_k}` with step `P_k / steps`.
//! It only evaluates the rate function, and shares no code with the dual
//! solver.

use serde::Serialize;

use crate::assignment::{ActiveTuple, Allocation};
use crate::channel::{NetworkConfig, PowerGains};
use crate::error::{Error, Result};
use crate::rate::TupleContext;

/// Refuses instances whose enumeration would exceed this many rate
/// evaluations.
pub const MAX_WORK: f64 = 5e8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    /// Best weighted sum-rate found.
    pub value: f64,
    pub allocation: Allocation,
    /// Number of (pairing, labeling) structures enumerated.
    pub structures: usize,
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, x| acc * (n - x) as f64 / (x + 1) as f64)
}

/// Upper bound on rate evaluations for an instance.
pub fn estimated_work(config: &NetworkConfig, steps: usize) -> f64 {
    let n = config.num_subcarriers;
    let labels = (config.num_ms * config.num_rs) as f64;
    (0..=n)
        .map(|s| {
            let factorial: f64 = (1..=s).map(|x| x as f64).product();
            let structures = binomial(n, s).powi(2) * factorial * labels.powi(s as i32);
            structures * binomial(steps + s, s) * s.max(1) as f64
        })
        .sum()
}

/// Best feasible weighted sum-rate by exhaustive enumeration.
pub fn exhaustive_optimum(
    gains: &PowerGains,
    config: &NetworkConfig,
    steps: usize,
) -> Result<OracleSolution> {
    config.validate()?;
    if steps == 0 {
        return Err(Error::InvalidConfig("grid needs at least one step".into()));
    }
    let work = estimated_work(config, steps);
    if work > MAX_WORK {
        return Err(Error::InvalidConfig(format!(
            "instance too large for exhaustive search (~{work:.2e} evaluations)"
        )));
    }

    let mut search = Search {
        gains,
        config,
        steps,
        used_j: vec![false; config.num_subcarriers],
        current: Vec::new(),
        best: OracleSolution {
            value: 0.0,
            allocation: Allocation::default(),
            structures: 0,
        },
    };
    search.visit(0);
    Ok(search.best)
}

struct Search<'a> {
    gains: &'a PowerGains,
    config: &'a NetworkConfig,
    steps: usize,
    used_j: Vec<bool>,
    current: Vec<ActiveTuple>,
    best: OracleSolution,
}

impl Search<'_> {
    fn visit(&mut self, i: usize) {
        let n = self.config.num_subcarriers;
        if i == n {
            self.evaluate();
            return;
        }
        // MAC subcarrier i unused.
        self.visit(i + 1);
        for j in 0..n {
            if self.used_j[j] {
                continue;
            }
            self.used_j[j] = true;
            for u in 0..self.config.num_ms {
                for k in 0..self.config.num_rs {
                    self.current.push(ActiveTuple {
                        u,
                        k,
                        i,
                        j,
                        power: 0.0,
                    });
                    self.visit(i + 1);
                    self.current.pop();
                }
            }
            self.used_j[j] = false;
        }
    }

    fn evaluate(&mut self) {
        self.best.structures += 1;
        let mut total = 0.0;
        let mut tuples = self.current.clone();
        for (k, &budget) in self.config.rs_power_budget.iter().enumerate() {
            let members: Vec<usize> = (0..tuples.len()).filter(|&t| tuples[t].k == k).collect();
            if members.is_empty() {
                continue;
            }
            let terms: Vec<(TupleContext, f64)> = members
                .iter()
                .map(|&t| {
                    let a = tuples[t];
                    (
                        TupleContext::from_gains(self.gains, self.config, a.u, a.k, a.i, a.j),
                        self.config.ms_weights[a.u],
                    )
                })
                .collect();
            let delta = budget / self.steps as f64;
            let (value, units) = best_on_simplex(&terms, self.steps, delta);
            total += value;
            for (&t, q) in members.iter().zip(units) {
                tuples[t].power = q as f64 * delta;
            }
        }
        if total > self.best.value {
            self.best.value = total;
            self.best.allocation = Allocation {
                active_tuples: tuples,
            };
        }
    }
}

/// Grid maximum of `sum_t w_t R_t(q_t delta)` over integer `q` with
/// `sum q <= steps`. Returns the value and the maximizing `q`.
fn best_on_simplex(terms: &[(TupleContext, f64)], steps: usize, delta: f64) -> (f64, Vec<usize>) {
    // Each term's value at every grid level, computed once.
    let table: Vec<Vec<f64>> = terms
        .iter()
        .map(|(ctx, w)| {
            (0..=steps)
                .map(|q| w * ctx.rate(q as f64 * delta))
                .collect()
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![0; terms.len()]);
    let mut q = vec![0usize; terms.len()];
    recurse(&table, 0, steps, 0.0, &mut q, &mut best);
    best
}

fn recurse(
    table: &[Vec<f64>],
    t: usize,
    remaining: usize,
    acc: f64,
    q: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if t == table.len() {
        if acc > best.0 {
            *best = (acc, q.clone());
        }
        return;
    }
    for level in 0..=remaining {
        q[t] = level;
        recurse(
            table,
            t + 1,
            remaining - level,
            acc + table[t][level],
            q,
            best,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::realize;

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
    fn counts_every_structure() {
        // N=2, MK=4: 1 empty + 4 single-pair slots x 4 labels + 2 full
        // pairings x 16 labelings.
        let cfg = config(2, 2, 2);
        let ch = realize(&cfg, 1);
        let sol = exhaustive_optimum(&ch.power_gains(), &cfg, 20).unwrap();
        assert_eq!(sol.structures, 1 + 16 + 32);
        sol.allocation.check_feasible(&cfg, 1e-12).unwrap();
        let recomputed = sol.allocation.weighted_rate(&ch.power_gains(), &cfg);
        assert!((recomputed - sol.value).abs() < 1e-12);
    }

    #[test]
    fn single_tuple_takes_the_full_budget() {
        let cfg = config(1, 1, 1);
        let ch = realize(&cfg, 1);
        let sol = exhaustive_optimum(&ch.power_gains(), &cfg, 50).unwrap();
        assert_eq!(sol.allocation.active_tuples.len(), 1);
        assert_eq!(sol.allocation.active_tuples[0].power, 10.0);
    }

    #[test]
    fn refuses_large_instances() {
        let cfg = config(4, 3, 8);
        let ch = realize(&cfg, 1);
        assert!(exhaustive_optimum(&ch.power_gains(), &cfg, 200).is_err());
    }
}
