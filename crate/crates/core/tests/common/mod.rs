#![allow(dead_code)]

use ofdma_twr::rate::{LinkGains, TupleIndex};
use ofdma_twr::{NetworkConfig, TupleContext};
use rand::Rng;

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Tuple context with log-uniform gains in [1e-2, 1e2] and node powers in
/// [0.1, 10].
pub fn random_context<R: Rng>(rng: &mut R) -> TupleContext {
    let gains = LinkGains {
        ms_to_rs: log_uniform(rng, 1e-2, 1e2),
        bs_to_rs: log_uniform(rng, 1e-2, 1e2),
        rs_to_bs: log_uniform(rng, 1e-2, 1e2),
        rs_to_ms: log_uniform(rng, 1e-2, 1e2),
    };
    let p_b = log_uniform(rng, 0.1, 10.0);
    let p_u = log_uniform(rng, 0.1, 10.0);
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
    .unwrap()
}

pub fn context(g: [f64; 4], p_b: f64, p_u: f64) -> TupleContext {
    let gains = LinkGains {
        ms_to_rs: g[0],
        bs_to_rs: g[1],
        rs_to_bs: g[2],
        rs_to_ms: g[3],
    };
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
    .unwrap()
}

/// Reference network resized to `m` mobiles, `k` relays and `n` subcarriers
/// with the same per-node powers.
pub fn network(m: usize, k: usize, n: usize) -> NetworkConfig {
    let base = NetworkConfig::reference().with_subcarriers(n);
    NetworkConfig {
        num_ms: m,
        num_rs: k,
        rs_power_budget: vec![base.rs_power_budget[0]; k],
        ms_weights: vec![1.0; m],
        ..base
    }
}

/// `w R(p) - lambda p`.
pub fn objective(ctx: &TupleContext, lambda: f64, w: f64, p: f64) -> f64 {
    w * ctx.rate(p) - lambda * p
}

/// Best objective over `points + 1` evenly spaced powers in `[0, cap]`.
pub fn grid_best(ctx: &TupleContext, lambda: f64, w: f64, cap: f64, points: usize) -> (f64, f64) {
    (0..=points)
        .map(|s| {
            let p = cap * s as f64 / points as f64;
            (objective(ctx, lambda, w, p), p)
        })
        .fold(
            (f64::NEG_INFINITY, 0.0),
            |a, b| if b.0 > a.0 { b } else { a },
        )
}
