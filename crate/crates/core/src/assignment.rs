//! Per-pair (mobile, relay) selection and subcarrier pairing.
//!
//! For a fixed price vector the Lagrangian separates over subcarrier pairs:
//! each MAC/BC pair `(i, j)` is worth the best profit over all (mobile,
//! relay) choices, and choosing which pairs to use is a max-weight
//! assignment on the resulting `N x N` matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{NetworkConfig, PowerGains};
use crate::error::{Error, Result};
use crate::power::{optimal_power_unchecked, PowerTolerances};
use crate::rate::{profit_unchecked, TupleContext};

mod hungarian;

pub use hungarian::min_cost_assignment;

/// Best profit, its (mobile, relay) arg max and the power that produced it,
/// for every subcarrier pair. Stored row-major, row = MAC subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitMatrix {
    n: usize,
    values: Vec<f64>,
    argmax_ms: Vec<usize>,
    argmax_rs: Vec<usize>,
    power: Vec<f64>,
}

impl ProfitMatrix {
    /// A bare value matrix, with arg max fields zero. Useful for driving
    /// [`solve_pairing`] directly.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "expected {} values for a {n}x{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("profit matrix entries must be finite".into()));
        }
        Ok(ProfitMatrix {
            n,
            argmax_ms: vec![0; n * n],
            argmax_rs: vec![0; n * n],
            power: vec![0.0; n * n],
            values,
        })
    }

    pub(crate) fn from_parts(
        n: usize,
        cells: impl IntoIterator<Item = (f64, usize, usize, f64)>,
    ) -> Self {
        let mut matrix = ProfitMatrix {
            n,
            values: Vec::with_capacity(n * n),
            argmax_ms: Vec::with_capacity(n * n),
            argmax_rs: Vec::with_capacity(n * n),
            power: Vec::with_capacity(n * n),
        };
        for (x, u, k, p) in cells {
            matrix.values.push(x);
            matrix.argmax_ms.push(u);
            matrix.argmax_rs.push(k);
            matrix.power.push(p);
        }
        debug_assert_eq!(matrix.values.len(), n * n);
        matrix
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn argmax_ms(&self, i: usize, j: usize) -> usize {
        self.argmax_ms[i * self.n + j]
    }

    pub fn argmax_rs(&self, i: usize, j: usize) -> usize {
        self.argmax_rs[i * self.n + j]
    }

    pub fn power(&self, i: usize, j: usize) -> f64 {
        self.power[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One active `(u, k, i, j)` with its relay power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveTuple {
    pub u: usize,
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub power: f64,
}

/// A sparse binary assignment plus relay powers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub active_tuples: Vec<ActiveTuple>,
}

impl Allocation {
    /// No MAC subcarrier and no BC subcarrier is used twice.
    pub fn is_exclusive(&self) -> bool {
        let mut seen_i = std::collections::HashSet::new();
        let mut seen_j = std::collections::HashSet::new();
        self.active_tuples
            .iter()
            .all(|t| seen_i.insert(t.i) && seen_j.insert(t.j))
    }

    /// Total power drawn from each relay.
    pub fn relay_loads(&self, num_rs: usize) -> Vec<f64> {
        let mut loads = vec![0.0; num_rs];
        for t in &self.active_tuples {
            loads[t.k] += t.power;
        }
        loads
    }

    /// Checks exclusivity, index ranges, nonnegative powers and every relay
    /// budget up to `rel_tol`.
    pub fn check_feasible(&self, config: &NetworkConfig, rel_tol: f64) -> Result<()> {
        if !self.is_exclusive() {
            return Err(Error::Domain("a subcarrier is assigned twice".into()));
        }
        for t in &self.active_tuples {
            if t.u >= config.num_ms
                || t.k >= config.num_rs
                || t.i >= config.num_subcarriers
                || t.j >= config.num_subcarriers
            {
                return Err(Error::Domain(format!("tuple out of range: {t:?}")));
            }
            if !(t.power.is_finite() && t.power >= 0.0) {
                return Err(Error::Domain(format!("bad relay power in {t:?}")));
            }
        }
        for (k, (load, budget)) in self
            .relay_loads(config.num_rs)
            .into_iter()
            .zip(&config.rs_power_budget)
            .enumerate()
        {
            if load > budget * (1.0 + rel_tol) {
                return Err(Error::Domain(format!(
                    "relay {k} uses {load} over its budget {budget}"
                )));
            }
        }
        Ok(())
    }

    /// Rate of every active tuple, in tuple order.
    pub fn tuple_rates(&self, gains: &PowerGains, config: &NetworkConfig) -> Vec<f64> {
        self.active_tuples
            .iter()
            .map(|t| TupleContext::from_gains(gains, config, t.u, t.k, t.i, t.j).rate(t.power))
            .collect()
    }

    /// Unweighted sum-rate in bits/s/Hz.
    pub fn sum_rate(&self, gains: &PowerGains, config: &NetworkConfig) -> f64 {
        self.tuple_rates(gains, config).iter().sum()
    }

    /// Weighted sum-rate, the optimization objective.
    pub fn weighted_rate(&self, gains: &PowerGains, config: &NetworkConfig) -> f64 {
        self.active_tuples
            .iter()
            .zip(self.tuple_rates(gains, config))
            .map(|(t, r)| config.ms_weights[t.u] * r)
            .sum()
    }

    /// Rate delivered to each mobile.
    pub fn per_ms_rates(&self, gains: &PowerGains, config: &NetworkConfig) -> Vec<f64> {
        let mut rates = vec![0.0; config.num_ms];
        for (t, r) in self
            .active_tuples
            .iter()
            .zip(self.tuple_rates(gains, config))
        {
            rates[t.u] += r;
        }
        rates
    }
}

/// Evaluates the best priced profit for every subcarrier pair.
///
/// Ties between (mobile, relay) choices go to the lowest mobile index, then
/// the lowest relay index.
pub fn build_profit_matrix(
    gains: &PowerGains,
    config: &NetworkConfig,
    lambda: &[f64],
    tolerances: &PowerTolerances,
) -> Result<ProfitMatrix> {
    if lambda.len() != config.num_rs {
        return Err(Error::InvalidConfig(format!(
            "price vector has {} entries, expected {}",
            lambda.len(),
            config.num_rs
        )));
    }
    if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Domain(
            "dual prices must be finite and nonnegative".into(),
        ));
    }
    let (m, k_count, n) = (config.num_ms, config.num_rs, config.num_subcarriers);
    let cfgs = tolerances.per_relay(config);

    let rows: Vec<Vec<(f64, usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut best = (f64::NEG_INFINITY, 0, 0, 0.0);
                    for u in 0..m {
                        let w = config.ms_weights[u];
                        for k in 0..k_count {
                            let ctx = TupleContext::from_gains(gains, config, u, k, i, j);
                            let p = optimal_power_unchecked(&ctx, lambda[k], w, &cfgs[k])?;
                            let x = profit_unchecked(&ctx, lambda[k], w, p);
                            if x > best.0 {
                                best = (x, u, k, p);
                            }
                        }
                    }
                    Ok(best)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    Ok(ProfitMatrix::from_parts(n, rows.into_iter().flatten()))
}

/// Max-weight pairing where any row or column may stay unused.
///
/// Runs the Hungarian method on the values clamped at zero, then drops the
/// selected cells whose value is not positive. Returned tuples carry the
/// arg max indices and powers stored in the matrix.
pub fn solve_pairing(matrix: &ProfitMatrix) -> Allocation {
    let n = matrix.n;
    let costs: Vec<f64> = matrix.values.iter().map(|v| -v.max(0.0)).collect();
    let row_to_col = min_cost_assignment(n, &costs);
    let active_tuples = row_to_col
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| matrix.value(i, j) > 0.0)
        .map(|(i, j)| ActiveTuple {
            u: matrix.argmax_ms(i, j),
            k: matrix.argmax_rs(i, j),
            i,
            j,
            power: matrix.power(i, j),
        })
        .collect();
    Allocation { active_tuples }
}

/// Sum of the matrix values over the pairs used by `allocation`.
pub fn pairing_objective(matrix: &ProfitMatrix, allocation: &Allocation) -> f64 {
    allocation
        .active_tuples
        .iter()
        .map(|t| matrix.value(t.i, t.j))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::realize;

    #[test]
    fn diagonal_dominant_matrix_pairs_identity() {
        let n = 5;
        let values = (0..n * n)
            .map(|c| if c / n == c % n { 10.0 } else { 1.0 })
            .collect();
        let matrix = ProfitMatrix::from_values(n, values).unwrap();
        let alloc = solve_pairing(&matrix);
        assert_eq!(alloc.active_tuples.len(), n);
        assert!(alloc.active_tuples.iter().all(|t| t.i == t.j));
        assert_eq!(pairing_objective(&matrix, &alloc), 10.0 * n as f64);
    }

    #[test]
    fn all_negative_matrix_stays_empty() {
        let matrix = ProfitMatrix::from_values(3, vec![-1.0; 9]).unwrap();
        let alloc = solve_pairing(&matrix);
        assert!(alloc.active_tuples.is_empty());
        assert_eq!(pairing_objective(&matrix, &alloc), 0.0);
    }

    #[test]
    fn negative_cells_are_dropped_even_when_matched() {
        // The clamped matrix is indifferent on row 1; whatever gets matched
        // there is non-positive and must not appear.
        let matrix = ProfitMatrix::from_values(2, vec![5.0, -1.0, -2.0, -3.0]).unwrap();
        let alloc = solve_pairing(&matrix);
        assert_eq!(alloc.active_tuples.len(), 1);
        assert_eq!((alloc.active_tuples[0].i, alloc.active_tuples[0].j), (0, 0));
    }

    #[test]
    fn from_values_rejects_bad_input() {
        assert!(ProfitMatrix::from_values(2, vec![1.0; 3]).is_err());
        assert!(ProfitMatrix::from_values(1, vec![f64::NAN]).is_err());
    }

    fn config(m: usize, k: usize, n: usize) -> NetworkConfig {
        NetworkConfig {
            num_ms: m,
            num_rs: k,
            num_subcarriers: n,
            rs_power_budget: vec![10.0; k],
            ms_weights: vec![1.0; m],
            ..NetworkConfig::reference()
        }
    }

    #[test]
    fn singleton_network_has_trivial_argmax() {
        let cfg = config(1, 1, 3);
        let ch = realize(&cfg, 1);
        let gains = ch.power_gains();
        let tol = PowerTolerances::default();
        let matrix = build_profit_matrix(&gains, &cfg, &[0.1], &tol).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!((matrix.argmax_ms(i, j), matrix.argmax_rs(i, j)), (0, 0));
                let ctx = TupleContext::from_gains(&gains, &cfg, 0, 0, i, j);
                let p = crate::optimal_power(&ctx, 0.1, 1.0, &tol.for_budget(10.0)).unwrap();
                let x = crate::profit(&ctx, 0.1, 1.0, p).unwrap();
                assert_eq!(matrix.value(i, j), x);
                assert_eq!(matrix.power(i, j), p);
            }
        }
    }

    #[test]
    fn identical_mobiles_tie_to_the_lower_index() {
        let cfg = config(2, 2, 3);
        let mut ch = realize(&cfg, 8);
        ch.f_mac[1] = ch.f_mac[0].clone();
        for k in 0..2 {
            ch.f_bc[k][1] = ch.f_bc[k][0].clone();
        }
        let tol = PowerTolerances::default();
        let matrix = build_profit_matrix(&ch.power_gains(), &cfg, &[0.2, 0.3], &tol).unwrap();
        let mut swapped = ch.clone();
        swapped.f_mac.swap(0, 1);
        for k in 0..2 {
            swapped.f_bc[k].swap(0, 1);
        }
        let matrix2 = build_profit_matrix(&swapped.power_gains(), &cfg, &[0.2, 0.3], &tol).unwrap();
        assert_eq!(matrix.values(), matrix2.values());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(matrix.argmax_ms(i, j), 0);
            }
        }
    }

    #[test]
    fn allocation_accounting() {
        let alloc = Allocation {
            active_tuples: vec![
                ActiveTuple {
                    u: 0,
                    k: 1,
                    i: 0,
                    j: 2,
                    power: 1.5,
                },
                ActiveTuple {
                    u: 1,
                    k: 1,
                    i: 2,
                    j: 0,
                    power: 2.0,
                },
            ],
        };
        assert!(alloc.is_exclusive());
        assert_eq!(alloc.relay_loads(2), vec![0.0, 3.5]);
        let mut cfg = config(2, 2, 3);
        assert!(alloc.check_feasible(&cfg, 1e-6).is_ok());
        cfg.rs_power_budget = vec![10.0, 3.0];
        assert!(alloc.check_feasible(&cfg, 1e-6).is_err());

        let clash = Allocation {
            active_tuples: vec![
                ActiveTuple {
                    u: 0,
                    k: 0,
                    i: 1,
                    j: 0,
                    power: 0.0,
                },
                ActiveTuple {
                    u: 1,
                    k: 1,
                    i: 2,
                    j: 0,
                    power: 0.0,
                },
            ],
        };
        assert!(!clash.is_exclusive());
    }
}
