//! Relay power for a single tuple at a given price, and per-relay power
//! refinement.
//!
//! The priced objective `w R(p) - lambda p` is concave, so its maximizer on
//! `[0, p_cap]` is the unique zero of the strictly decreasing marginal
//! `w R'(p) - lambda`, or an endpoint. We find that zero with a bracketed
//! Newton iteration that falls back to bisection whenever the Newton step
//! leaves the bracket or stalls.
//!
//! Clearing the denominators of `w R'(p) = lambda` gives a quartic in `p`.
//! [`stationarity_quartic`] returns its coefficients re-derived from the rate
//! expression. [`simplified_quartic`] is a widely quoted closed form that
//! drops the `(1 + x_up)`, `(1 + x_dn)` factors contributed by the outer
//! logarithm, so it is exact only as the received SNR at the relay goes to
//! zero. Neither quartic is used to compute powers.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::assignment::Allocation;
use crate::channel::{NetworkConfig, PowerGains};
use crate::error::{Error, Result};
use crate::rate::TupleContext;

/// Settings for one [`optimal_power`] evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSolverConfig {
    /// Upper end of the power bracket, the owning relay's budget.
    pub p_cap: f64,
    /// Absolute tolerance on the returned power.
    pub root_tol: f64,
    pub max_iters: usize,
    /// Prices below this are treated as equal to it.
    pub lambda_floor: f64,
}

impl PowerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p_cap > 0.0
            && self.p_cap.is_finite()
            && self.root_tol > 0.0
            && self.lambda_floor > 0.0
            && self.max_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "bad power solver config {self:?}"
            )))
        }
    }
}

/// Budget-independent tolerances; [`PowerTolerances::for_budget`] turns
/// them into a [`PowerSolverConfig`] for one relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTolerances {
    /// Root tolerance as a fraction of the relay budget.
    pub root_tol_rel: f64,
    pub max_iters: usize,
    pub lambda_floor: f64,
}

impl Default for PowerTolerances {
    fn default() -> Self {
        PowerTolerances {
            root_tol_rel: 1e-9,
            max_iters: 200,
            lambda_floor: 1e-8,
        }
    }
}

impl PowerTolerances {
    pub fn for_budget(&self, budget: f64) -> PowerSolverConfig {
        PowerSolverConfig {
            p_cap: budget,
            root_tol: self.root_tol_rel * budget,
            max_iters: self.max_iters,
            lambda_floor: self.lambda_floor,
        }
    }

    pub fn per_relay(&self, config: &NetworkConfig) -> Vec<PowerSolverConfig> {
        config
            .rs_power_budget
            .iter()
            .map(|&b| self.for_budget(b))
            .collect()
    }
}

fn check_price_and_weight(lambda_k: f64, w_u: f64) -> Result<()> {
    if !(lambda_k.is_finite() && lambda_k >= 0.0) {
        return Err(Error::Domain(format!(
            "dual price must be finite and >= 0, got {lambda_k}"
        )));
    }
    if !(w_u.is_finite() && w_u >= 0.0) {
        return Err(Error::Domain(format!(
            "weight must be finite and >= 0, got {w_u}"
        )));
    }
    Ok(())
}

/// Maximizer of `w_u R(p) - lambda_k p` over `[0, cfg.p_cap]`.
pub fn optimal_power(
    ctx: &TupleContext,
    lambda_k: f64,
    w_u: f64,
    cfg: &PowerSolverConfig,
) -> Result<f64> {
    check_price_and_weight(lambda_k, w_u)?;
    optimal_power_unchecked(ctx, lambda_k, w_u, cfg)
}

pub(crate) fn optimal_power_unchecked(
    ctx: &TupleContext,
    lambda_k: f64,
    w_u: f64,
    cfg: &PowerSolverConfig,
) -> Result<f64> {
    if w_u == 0.0 || !ctx.has_positive_rate() {
        return Ok(0.0);
    }
    let price = lambda_k.max(cfg.lambda_floor);
    let marginal = |p: f64| w_u * ctx.rate_derivative(p) - price;

    if marginal(0.0) <= 0.0 {
        return Ok(0.0);
    }
    if marginal(cfg.p_cap) >= 0.0 {
        return Ok(cfg.p_cap);
    }

    // Invariant: marginal(lo) > 0 > marginal(hi).
    let (mut lo, mut hi) = (0.0, cfg.p_cap);
    let mut dx_old = hi - lo;
    let mut dx = dx_old;
    let mut x = 0.5 * (lo + hi);
    let mut g = marginal(x);
    let mut dg = w_u * ctx.rate_second_derivative(x);

    for _ in 0..cfg.max_iters {
        if g == 0.0 {
            return Ok(x);
        }
        let newton_outside = ((x - hi) * dg - g) * ((x - lo) * dg - g) > 0.0;
        let newton_slow = (2.0 * g).abs() > (dx_old * dg).abs();
        dx_old = dx;
        if newton_outside || newton_slow || dg == 0.0 {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx = g / dg;
            x -= dx;
        }
        if dx.abs() < cfg.root_tol {
            return Ok(x.clamp(0.0, cfg.p_cap));
        }
        g = marginal(x);
        dg = w_u * ctx.rate_second_derivative(x);
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    Err(Error::Numerical(format!(
        "power root search did not converge in {} iterations for {:?} (lambda={lambda_k}, w={w_u})",
        cfg.max_iters,
        ctx.index()
    )))
}

/// Coefficients `[a, b, c, d, e]` of `a p^4 + b p^3 + c p^2 + d p + e`,
/// whose nonnegative root is the stationary point of `w R(p) - lambda p`.
///
/// Obtained by multiplying `2 ln2 (w R'(p) - lambda) = 0` through by both
/// rate-term denominators and dividing by `-m`, so that the constant term
/// is `2 ln2 lambda m^3 - w m^2 (x_up g_bs + x_dn g_ms)`.
pub fn stationarity_quartic(ctx: &TupleContext, lambda: f64, w: f64) -> [f64; 5] {
    let (up, dn, m) = (ctx.uplink_snr(), ctx.downlink_snr(), ctx.m());
    let (g1, g2) = (ctx.gains().rs_to_bs, ctx.gains().rs_to_ms);
    // Uplink denominator (g1 p + m)((1 + up) g1 p + m) = a2 p^2 + a1 p + a0,
    // downlink denominator likewise with b2, b1, b0.
    let (a2, a1, a0) = ((1.0 + up) * g1 * g1, (2.0 + up) * m * g1, m * m);
    let (b2, b1, b0) = ((1.0 + dn) * g2 * g2, (2.0 + dn) * m * g2, m * m);
    let price = 2.0 * LN_2 * lambda;
    let (cu, cd) = (w * m * up * g1, w * m * dn * g2);
    [
        price * a2 * b2 / m,
        price * (a2 * b1 + a1 * b2) / m,
        (price * (a2 * b0 + a1 * b1 + a0 * b2) - cu * b2 - cd * a2) / m,
        (price * (a1 * b0 + a0 * b1) - cu * b1 - cd * a1) / m,
        (price * a0 * b0 - cu * b0 - cd * a0) / m,
    ]
}

/// Low relay-SNR form of [`stationarity_quartic`], without the `1/m`
/// normalization of the lower-order terms.
pub fn simplified_quartic(ctx: &TupleContext, lambda: f64, w: f64) -> [f64; 5] {
    let (up, dn, m) = (ctx.uplink_snr(), ctx.downlink_snr(), ctx.m());
    let (h, f) = (ctx.gains().rs_to_bs, ctx.gains().rs_to_ms);
    let l2 = LN_2 * lambda;
    [
        2.0 * l2 * h * h * f * f / m,
        4.0 * l2 * h * f * (f + h),
        2.0 * m * l2 * (h * h + f * f + 4.0 * h * f) - w * h * f * (up * f + dn * h),
        4.0 * m * m * l2 * (f + h) - 2.0 * w * m * h * f * (up + dn),
        2.0 * m * m * m * l2 - w * m * m * (up * h + dn * f),
    ]
}

/// `|q(p)| / max_n |q_n p^n|` for coefficients in descending order.
pub fn quartic_relative_residual(coeffs: &[f64; 5], p: f64) -> f64 {
    let monomials: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| c * p.powi(4 - idx as i32))
        .collect();
    let scale = monomials.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    monomials.iter().sum::<f64>().abs() / scale
}

/// Output of [`refine_powers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// Same tuples as the input, with refined powers.
    pub allocation: Allocation,
    /// Per-relay power price at which the refined powers were computed.
    pub multipliers: Vec<f64>,
}

/// Re-optimizes the relay powers of a fixed assignment so that every relay
/// meets its budget.
///
/// Each relay is independent: its powers are `optimal_power` at a common
/// price `mu_k`, and `mu_k` is the floor price when that already fits the
/// budget, or otherwise found by bisection so the budget is met from below.
pub fn refine_powers(
    allocation: &Allocation,
    gains: &PowerGains,
    config: &NetworkConfig,
    tolerances: &PowerTolerances,
) -> Result<Refinement> {
    let mut refined = allocation.clone();
    let mut multipliers = vec![tolerances.lambda_floor; config.num_rs];

    for (k, &budget) in config.rs_power_budget.iter().enumerate() {
        let members: Vec<usize> = allocation
            .active_tuples
            .iter()
            .enumerate()
            .filter(|(_, t)| t.k == k)
            .map(|(idx, _)| idx)
            .collect();
        if members.is_empty() {
            continue;
        }
        let cfg = tolerances.for_budget(budget);
        let ctxs: Vec<(TupleContext, f64)> = members
            .iter()
            .map(|&idx| {
                let t = &allocation.active_tuples[idx];
                (
                    TupleContext::from_gains(gains, config, t.u, t.k, t.i, t.j),
                    config.ms_weights[t.u],
                )
            })
            .collect();
        let demand = |mu: f64| -> Result<(f64, Vec<f64>)> {
            let powers = ctxs
                .iter()
                .map(|(ctx, w)| optimal_power_unchecked(ctx, mu, *w, &cfg))
                .collect::<Result<Vec<f64>>>()?;
            Ok((powers.iter().sum(), powers))
        };

        let (mu, powers) = relay_price(&demand, budget, tolerances.lambda_floor)?;
        multipliers[k] = mu;
        for (&idx, p) in members.iter().zip(powers) {
            refined.active_tuples[idx].power = p;
        }
    }

    Ok(Refinement {
        allocation: refined,
        multipliers,
    })
}

/// Smallest price (up to bisection accuracy) whose demand fits `budget`.
fn relay_price<F>(demand: &F, budget: f64, floor: f64) -> Result<(f64, Vec<f64>)>
where
    F: Fn(f64) -> Result<(f64, Vec<f64>)>,
{
    let (total, powers) = demand(floor)?;
    if total <= budget {
        return Ok((floor, powers));
    }

    let mut lo = floor;
    let mut hi = 2.0 * floor;
    let mut fit = loop {
        let (total, powers) = demand(hi)?;
        if total <= budget {
            break (total, powers);
        }
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("relay price bracket diverged".into()));
        }
    };

    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi || budget - fit.0 <= 1e-10 * budget {
            break;
        }
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let (total, powers) = demand(mid)?;
        if total <= budget {
            hi = mid;
            fit = (total, powers);
        } else {
            lo = mid;
        }
    }
    Ok((hi, fit.1))
}
