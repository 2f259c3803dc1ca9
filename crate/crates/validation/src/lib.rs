//! Brute-force reference solutions used to check `ofdma-twr`.
//!
//! Nothing here calls into the solver paths it is compared with: the scalar
//! oracle only evaluates the rate, and the pairing oracle enumerates
//! permutations directly.

use ofdma_twr::rate::{LinkGains, TupleIndex};
use ofdma_twr::TupleContext;
use rand::Rng;

pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Random tuple with gains log-uniform in `[1e-2, 1e2]` and BS/mobile powers
/// log-uniform in `[0.1, 10]`.
pub fn random_context<R: Rng + ?Sized>(rng: &mut R) -> TupleContext {
    let gains = LinkGains {
        ms_to_rs: log_uniform(rng, 1e-2, 1e2),
        bs_to_rs: log_uniform(rng, 1e-2, 1e2),
        rs_to_bs: log_uniform(rng, 1e-2, 1e2),
        rs_to_ms: log_uniform(rng, 1e-2, 1e2),
    };
    let (p_b, p_u) = (log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.1, 10.0));
    TupleContext::new(
        TupleIndex {
            u: 0,
            k: 0,
            i: 0,
            j: 0,
        },
        gains,
        p_b,
        p_u,
    )
    .expect("positive inputs")
}

/// A scalar power-pricing problem `max_p w R(p) - lambda p` on `[0, cap]`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarProblem {
    pub ctx: TupleContext,
    pub lambda: f64,
    pub weight: f64,
    pub cap: f64,
}

impl ScalarProblem {
    /// Price near the marginal utility at a random point of `[0, 1.2 cap]`,
    /// which puts a good share of the optima strictly inside the interval.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let ctx = random_context(rng);
        let cap = log_uniform(rng, 0.5, 20.0);
        let weight = rng.random_range(0.1..2.0);
        let at = cap * rng.random_range(0.0..1.2);
        let lambda = weight * ctx.rate_derivative(at) * log_uniform(rng, 0.3, 3.0);
        ScalarProblem {
            ctx,
            lambda,
            weight,
            cap,
        }
    }

    pub fn objective(&self, p: f64) -> f64 {
        self.weight * self.ctx.rate(p) - self.lambda * p
    }

    /// Best objective over `points + 1` evenly spaced powers.
    pub fn grid_best(&self, points: usize) -> f64 {
        (0..=points)
            .map(|s| self.objective(self.cap * s as f64 / points as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Largest `sum_i max(v[i][sigma(i)], 0)` over all permutations `sigma` of an
/// `n x n` row-major matrix. Any partial matching extends to a permutation,
/// so this is also the best pairing with free drops.
pub fn best_pairing_value(n: usize, values: &[f64]) -> f64 {
    fn go(n: usize, v: &[f64], row: usize, used: &mut [bool], acc: f64, best: &mut f64) {
        if row == n {
            *best = best.max(acc);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                go(n, v, row + 1, used, acc + v[row * n + j].max(0.0), best);
                used[j] = false;
            }
        }
    }
    assert_eq!(values.len(), n * n);
    let mut best = 0.0;
    go(n, values, 0, &mut vec![false; n], 0.0, &mut best);
    best
}

/// Matrix of multiples of 1/256 in `[-8, 24)`. Sums of up to 7 such values
/// are exact in `f64`.
pub fn dyadic_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n * n)
        .map(|_| rng.random_range(-2048i32..6144) as f64 / 256.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_oracle_on_a_known_matrix() {
        // Best: (0,1) + (1,0) = 9 + 105.
        assert_eq!(best_pairing_value(2, &[10.0, 9.0, 105.0, 100.0]), 114.0);
        assert_eq!(best_pairing_value(2, &[-1.0, -2.0, -3.0, -4.0]), 0.0);
        assert_eq!(
            best_pairing_value(3, &[5.0, -1.0, -1.0, -1.0, -1.0, 7.0, -1.0, 2.0, -1.0]),
            14.0
        );
    }
}
