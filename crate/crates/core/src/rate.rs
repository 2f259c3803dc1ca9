//! Two-way AF sum-rate of one (mobile, relay, MAC subcarrier, BC subcarrier)
//! tuple as a function of the relay power, and the priced profit built on it.
//!
//! With `x_up = p_u |f_mac|^2`, `x_dn = p_b |h_mac|^2` and
//! `m = 1 + x_up + x_dn`, the rate at relay power `p` is
//!
//! ```text
//! R(p) = 1/2 log2(1 + x_up g_bs p / (g_bs p + m))
//!      + 1/2 log2(1 + x_dn g_ms p / (g_ms p + m))
//! ```
//!
//! where `g_bs = |h_bc|^2` and `g_ms = |f_bc|^2` are the BC-phase gains from
//! the relay to the BS and to the mobile. `R` is concave and nondecreasing
//! in `p`.

use std::f64::consts::LN_2;

use crate::channel::{NetworkConfig, PowerGains};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TupleIndex {
    pub u: usize,
    pub k: usize,
    pub i: usize,
    pub j: usize,
}

/// Squared channel magnitudes seen by one tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    /// `|f_{u,k,i}|^2`, mobile to relay on the MAC subcarrier.
    pub ms_to_rs: f64,
    /// `|h_{b,k,i}|^2`, BS to relay on the MAC subcarrier.
    pub bs_to_rs: f64,
    /// `|h_{k,b,j}|^2`, relay to BS on the BC subcarrier.
    pub rs_to_bs: f64,
    /// `|f_{k,u,j}|^2`, relay to mobile on the BC subcarrier.
    pub rs_to_ms: f64,
}

/// Everything the rate of one tuple depends on besides the relay power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TupleContext {
    index: TupleIndex,
    gains: LinkGains,
    p_b: f64,
    p_u: f64,
    /// Received uplink SNR at the relay, `p_u |f_mac|^2`.
    up: f64,
    /// Received downlink SNR at the relay, `p_b |h_mac|^2`.
    down: f64,
    m: f64,
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be finite and nonnegative, got {x}"
        )))
    }
}

impl TupleContext {
    pub fn new(index: TupleIndex, gains: LinkGains, p_b: f64, p_u: f64) -> Result<Self> {
        check_nonneg("ms_to_rs gain", gains.ms_to_rs)?;
        check_nonneg("bs_to_rs gain", gains.bs_to_rs)?;
        check_nonneg("rs_to_bs gain", gains.rs_to_bs)?;
        check_nonneg("rs_to_ms gain", gains.rs_to_ms)?;
        check_nonneg("BS power", p_b)?;
        check_nonneg("MS power", p_u)?;
        Ok(Self::new_unchecked(index, gains, p_b, p_u))
    }

    pub(crate) fn new_unchecked(index: TupleIndex, gains: LinkGains, p_b: f64, p_u: f64) -> Self {
        let up = p_u * gains.ms_to_rs;
        let down = p_b * gains.bs_to_rs;
        TupleContext {
            index,
            gains,
            p_b,
            p_u,
            up,
            down,
            m: 1.0 + down + up,
        }
    }

    /// Context of tuple `(u, k, i, j)` in a realization.
    pub fn from_gains(
        gains: &PowerGains,
        config: &NetworkConfig,
        u: usize,
        k: usize,
        i: usize,
        j: usize,
    ) -> Self {
        let link = LinkGains {
            ms_to_rs: gains.f_mac(u, k, i),
            bs_to_rs: gains.h_mac(k, i),
            rs_to_bs: gains.h_bc(k, j),
            rs_to_ms: gains.f_bc(k, u, j),
        };
        Self::new_unchecked(
            TupleIndex { u, k, i, j },
            link,
            config.bs_power_per_subcarrier,
            config.ms_power_per_subcarrier,
        )
    }

    pub fn index(&self) -> TupleIndex {
        self.index
    }

    pub fn gains(&self) -> LinkGains {
        self.gains
    }

    pub fn bs_power(&self) -> f64 {
        self.p_b
    }

    pub fn ms_power(&self) -> f64 {
        self.p_u
    }

    pub fn uplink_snr(&self) -> f64 {
        self.up
    }

    pub fn downlink_snr(&self) -> f64 {
        self.down
    }

    /// `1 + p_b |h_mac|^2 + p_u |f_mac|^2`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// True when some relay power yields a positive rate.
    pub fn has_positive_rate(&self) -> bool {
        self.up * self.gains.rs_to_bs > 0.0 || self.down * self.gains.rs_to_ms > 0.0
    }

    /// `R(p)` without argument checks.
    #[inline]
    pub fn rate(&self, p: f64) -> f64 {
        if p == 0.0 {
            return 0.0;
        }
        let half_term = |src: f64, g: f64| {
            if src == 0.0 || g == 0.0 {
                0.0
            } else {
                let gp = g * p;
                (src * gp / (gp + self.m)).ln_1p()
            }
        };
        (half_term(self.up, self.gains.rs_to_bs) + half_term(self.down, self.gains.rs_to_ms))
            / (2.0 * LN_2)
    }

    /// `dR/dp`.
    #[inline]
    pub fn rate_derivative(&self, p: f64) -> f64 {
        let m = self.m;
        let term = |src: f64, g: f64| {
            let gp = g * p;
            src * g * m / ((gp + m) * ((1.0 + src) * gp + m))
        };
        (term(self.up, self.gains.rs_to_bs) + term(self.down, self.gains.rs_to_ms)) / (2.0 * LN_2)
    }

    /// `d^2R/dp^2`, always `<= 0`.
    #[inline]
    pub fn rate_second_derivative(&self, p: f64) -> f64 {
        let m = self.m;
        let term = |src: f64, g: f64| {
            let gp = g * p;
            let (e1, e2) = (gp + m, (1.0 + src) * gp + m);
            let de = g * e2 + (1.0 + src) * g * e1;
            -src * g * m * de / (e1 * e1 * e2 * e2)
        };
        (term(self.up, self.gains.rs_to_bs) + term(self.down, self.gains.rs_to_ms)) / (2.0 * LN_2)
    }
}

/// Two-way sum-rate in bits/s/Hz at relay power `p_relay`.
pub fn sum_rate(ctx: &TupleContext, p_relay: f64) -> Result<f64> {
    check_nonneg("relay power", p_relay)?;
    Ok(ctx.rate(p_relay))
}

/// Throughput revenue minus power cost, `w_u R(p) - lambda_k p`.
pub fn profit(ctx: &TupleContext, lambda_k: f64, w_u: f64, p_star: f64) -> Result<f64> {
    check_nonneg("dual price", lambda_k)?;
    check_nonneg("weight", w_u)?;
    check_nonneg("relay power", p_star)?;
    Ok(profit_unchecked(ctx, lambda_k, w_u, p_star))
}

#[inline]
pub(crate) fn profit_unchecked(ctx: &TupleContext, lambda_k: f64, w_u: f64, p: f64) -> f64 {
    w_u * ctx.rate(p) - lambda_k * p
}
