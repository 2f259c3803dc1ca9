//! Network geometry and random channel realizations.
//!
//! The BS sits at the origin, the relays are equally spaced on a ring, and
//! the mobiles are dropped uniformly (by area) in the annulus between the
//! relay ring and the cell edge. Every BS-relay and mobile-relay link gets a
//! distance-based path loss, one log-normal shadowing draw, and i.i.d.
//! Rayleigh fading per subcarrier. Noise power is normalized to one, and the
//! path loss is one at the cell radius, so transmit powers are SNRs at the
//! cell edge.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Links shorter than this are evaluated at this distance.
pub const MIN_LINK_DISTANCE: f64 = 1.0;

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub num_ms: usize,
    pub num_rs: usize,
    pub num_subcarriers: usize,
    /// BS transmit power on each MAC subcarrier (linear, noise-normalized).
    pub bs_power_per_subcarrier: f64,
    /// Mobile transmit power on each MAC subcarrier (linear, noise-normalized).
    pub ms_power_per_subcarrier: f64,
    /// Total power budget of each relay (linear), one entry per relay.
    pub rs_power_budget: Vec<f64>,
    /// Priority weight of each mobile.
    pub ms_weights: Vec<f64>,
    /// Cell radius in meters; also the path-loss reference distance.
    pub cell_radius: f64,
    /// Radius of the relay ring in meters.
    pub rs_ring_radius: f64,
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    /// Reuse the MAC-phase small-scale fading on the BC phase.
    #[serde(default)]
    pub reciprocal_fading: bool,
}

impl NetworkConfig {
    /// The reference setup: 4 mobiles, 3 relays, 32 subcarriers, 10 dB per
    /// node at the BS, mobiles and relays, 2 km cell with a 1 km relay ring,
    /// path-loss exponent 4 and 5.8 dB shadowing.
    pub fn reference() -> Self {
        let (num_ms, num_rs, num_subcarriers) = (4, 3, 32);
        let node_power = db_to_linear(10.0);
        NetworkConfig {
            num_ms,
            num_rs,
            num_subcarriers,
            bs_power_per_subcarrier: node_power / num_subcarriers as f64,
            ms_power_per_subcarrier: node_power / num_subcarriers as f64,
            rs_power_budget: vec![node_power; num_rs],
            ms_weights: vec![1.0; num_ms],
            cell_radius: 2000.0,
            rs_ring_radius: 1000.0,
            path_loss_exponent: 4.0,
            shadowing_sigma_db: 5.8,
            reciprocal_fading: false,
        }
    }

    /// Same network with `num_subcarriers` subcarriers, keeping the total BS
    /// and mobile node powers fixed.
    pub fn with_subcarriers(&self, num_subcarriers: usize) -> Self {
        let scale = self.num_subcarriers as f64 / num_subcarriers as f64;
        NetworkConfig {
            num_subcarriers,
            bs_power_per_subcarrier: self.bs_power_per_subcarrier * scale,
            ms_power_per_subcarrier: self.ms_power_per_subcarrier * scale,
            ..self.clone()
        }
    }

    /// Sets every relay budget to `db` decibels.
    pub fn with_relay_power_db(&self, db: f64) -> Self {
        NetworkConfig {
            rs_power_budget: vec![db_to_linear(db); self.num_rs],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_ms == 0 || self.num_rs == 0 || self.num_subcarriers == 0 {
            return bad("num_ms, num_rs and num_subcarriers must all be at least 1".into());
        }
        if self.rs_power_budget.len() != self.num_rs {
            return bad(format!(
                "rs_power_budget has {} entries, expected {}",
                self.rs_power_budget.len(),
                self.num_rs
            ));
        }
        if self.ms_weights.len() != self.num_ms {
            return bad(format!(
                "ms_weights has {} entries, expected {}",
                self.ms_weights.len(),
                self.num_ms
            ));
        }
        let powers = [self.bs_power_per_subcarrier, self.ms_power_per_subcarrier];
        if powers
            .iter()
            .chain(&self.rs_power_budget)
            .any(|p| !(p.is_finite() && *p > 0.0))
        {
            return bad("all transmit powers and relay budgets must be finite and positive".into());
        }
        if self
            .ms_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return bad("mobile weights must be finite and nonnegative".into());
        }
        if !(self.rs_ring_radius > 0.0 && self.rs_ring_radius < self.cell_radius) {
            return bad("need 0 < rs_ring_radius < cell_radius".into());
        }
        if !self.cell_radius.is_finite() {
            return bad("cell_radius must be finite".into());
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent >= 0.0) {
            return bad("path_loss_exponent must be finite and nonnegative".into());
        }
        if !(self.shadowing_sigma_db.is_finite() && self.shadowing_sigma_db >= 0.0) {
            return bad("shadowing_sigma_db must be finite and nonnegative".into());
        }
        Ok(())
    }

    /// Distance-based path loss as a linear power gain.
    pub fn path_loss(&self, distance: f64) -> f64 {
        (distance.max(MIN_LINK_DISTANCE) / self.cell_radius).powf(-self.path_loss_exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePositions {
    pub bs: [f64; 2],
    pub relays: Vec<[f64; 2]>,
    pub mobiles: Vec<[f64; 2]>,
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Places the BS at the origin, the relays at equal angles (starting at 0)
/// on the relay ring, and the mobiles uniformly by area in the annulus
/// between the ring and the cell edge.
pub fn place_nodes<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> NodePositions {
    let k = config.num_rs;
    let relays = (0..k)
        .map(|idx| {
            let angle = 2.0 * PI * idx as f64 / k as f64;
            [
                config.rs_ring_radius * angle.cos(),
                config.rs_ring_radius * angle.sin(),
            ]
        })
        .collect();

    let (inner2, outer2) = (
        config.rs_ring_radius * config.rs_ring_radius,
        config.cell_radius * config.cell_radius,
    );
    let mobiles = (0..config.num_ms)
        .map(|_| {
            let r = (inner2 + rng.random::<f64>() * (outer2 - inner2)).sqrt();
            let angle = 2.0 * PI * rng.random::<f64>();
            [r * angle.cos(), r * angle.sin()]
        })
        .collect();

    NodePositions {
        bs: [0.0, 0.0],
        relays,
        mobiles,
    }
}

/// One channel realization. Indexing follows the tensor names:
/// `h_mac[k][i]`, `f_mac[u][k][i]`, `h_bc[k][j]`, `f_bc[k][u][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// BS to relay `k` on MAC subcarrier `i`.
    pub h_mac: Vec<Vec<Complex64>>,
    /// Mobile `u` to relay `k` on MAC subcarrier `i`.
    pub f_mac: Vec<Vec<Vec<Complex64>>>,
    /// Relay `k` to BS on BC subcarrier `j`.
    pub h_bc: Vec<Vec<Complex64>>,
    /// Relay `k` to mobile `u` on BC subcarrier `j`.
    pub f_bc: Vec<Vec<Vec<Complex64>>>,
    pub positions: NodePositions,
    /// Shadowing of each BS-relay link in dB.
    pub bs_rs_shadowing_db: Vec<f64>,
    /// Shadowing of each mobile-relay link in dB, indexed `[u][k]`.
    pub ms_rs_shadowing_db: Vec<Vec<f64>>,
    pub seed: Option<u64>,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn fading<R: Rng + ?Sized>(amplitude: f64, n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n).map(|_| complex_gaussian(rng) * amplitude).collect()
}

/// Draws a realization for fixed node positions.
///
/// Shadowing is drawn once per link and shared by both phases; small-scale
/// fading is drawn per subcarrier, independently for the two phases unless
/// `reciprocal_fading` is set.
pub fn sample_channels<R: Rng + ?Sized>(
    config: &NetworkConfig,
    positions: &NodePositions,
    rng: &mut R,
) -> ChannelRealization {
    let (m, k, n) = (config.num_ms, config.num_rs, config.num_subcarriers);
    let shadow = Normal::new(0.0, config.shadowing_sigma_db).expect("sigma validated");

    let bs_rs_shadowing_db: Vec<f64> = (0..k).map(|_| shadow.sample(rng)).collect();
    let ms_rs_shadowing_db: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..k).map(|_| shadow.sample(rng)).collect())
        .collect();

    let amplitude = |d: f64, shadow_db: f64| (config.path_loss(d) * db_to_linear(shadow_db)).sqrt();
    let bs_amp: Vec<f64> = (0..k)
        .map(|kk| {
            amplitude(
                distance(positions.bs, positions.relays[kk]),
                bs_rs_shadowing_db[kk],
            )
        })
        .collect();
    let ms_amp: Vec<Vec<f64>> = (0..m)
        .map(|u| {
            (0..k)
                .map(|kk| {
                    amplitude(
                        distance(positions.mobiles[u], positions.relays[kk]),
                        ms_rs_shadowing_db[u][kk],
                    )
                })
                .collect()
        })
        .collect();

    let h_mac: Vec<Vec<Complex64>> = bs_amp.iter().map(|&a| fading(a, n, rng)).collect();
    let f_mac: Vec<Vec<Vec<Complex64>>> = ms_amp
        .iter()
        .map(|row| row.iter().map(|&a| fading(a, n, rng)).collect())
        .collect();

    let (h_bc, f_bc) = if config.reciprocal_fading {
        let f_bc = (0..k)
            .map(|kk| (0..m).map(|u| f_mac[u][kk].clone()).collect())
            .collect();
        (h_mac.clone(), f_bc)
    } else {
        let h_bc = bs_amp.iter().map(|&a| fading(a, n, rng)).collect();
        let f_bc = (0..k)
            .map(|kk| (0..m).map(|u| fading(ms_amp[u][kk], n, rng)).collect())
            .collect();
        (h_bc, f_bc)
    };

    ChannelRealization {
        h_mac,
        f_mac,
        h_bc,
        f_bc,
        positions: positions.clone(),
        bs_rs_shadowing_db,
        ms_rs_shadowing_db,
        seed: None,
    }
}

/// Places nodes and draws channels from a ChaCha8 stream seeded with `seed`.
pub fn realize(config: &NetworkConfig, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = place_nodes(config, &mut rng);
    let mut channels = sample_channels(config, &positions, &mut rng);
    channels.seed = Some(seed);
    channels
}

impl ChannelRealization {
    pub fn dims(&self) -> (usize, usize, usize) {
        let m = self.f_mac.len();
        let k = self.h_mac.len();
        let n = self.h_mac.first().map_or(0, Vec::len);
        (m, k, n)
    }

    /// Checks tensor shapes against `config` and that every gain is finite.
    pub fn check_against(&self, config: &NetworkConfig) -> Result<()> {
        let (m, k, n) = (config.num_ms, config.num_rs, config.num_subcarriers);
        let shape_ok = self.h_mac.len() == k
            && self.h_bc.len() == k
            && self.h_mac.iter().chain(&self.h_bc).all(|v| v.len() == n)
            && self.f_mac.len() == m
            && self
                .f_mac
                .iter()
                .all(|row| row.len() == k && row.iter().all(|v| v.len() == n))
            && self.f_bc.len() == k
            && self
                .f_bc
                .iter()
                .all(|row| row.len() == m && row.iter().all(|v| v.len() == n));
        if !shape_ok {
            return Err(Error::InvalidConfig(format!(
                "channel tensors do not match M={m}, K={k}, N={n}"
            )));
        }
        if self
            .all_gains()
            .any(|g| !(g.re.is_finite() && g.im.is_finite()))
        {
            return Err(Error::Domain("non-finite channel gain".into()));
        }
        Ok(())
    }

    pub fn all_gains(&self) -> impl Iterator<Item = &Complex64> {
        self.h_mac
            .iter()
            .chain(&self.h_bc)
            .flatten()
            .chain(self.f_mac.iter().flatten().flatten())
            .chain(self.f_bc.iter().flatten().flatten())
    }

    /// Squared magnitudes in flat arrays, for the solver hot loops.
    pub fn power_gains(&self) -> PowerGains {
        let (m, k, n) = self.dims();
        let sq = |g: &Complex64| g.norm_sqr();
        PowerGains {
            m,
            k,
            n,
            hm: self.h_mac.iter().flatten().map(sq).collect(),
            fm: self.f_mac.iter().flatten().flatten().map(sq).collect(),
            hb: self.h_bc.iter().flatten().map(sq).collect(),
            fb: self.f_bc.iter().flatten().flatten().map(sq).collect(),
        }
    }
}

/// `|g|^2` of every gain, laid out row-major in the same index order as
/// [`ChannelRealization`].
#[derive(Debug, Clone)]
pub struct PowerGains {
    m: usize,
    k: usize,
    n: usize,
    hm: Vec<f64>,
    fm: Vec<f64>,
    hb: Vec<f64>,
    fb: Vec<f64>,
}

impl PowerGains {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m, self.k, self.n)
    }

    #[inline]
    pub fn h_mac(&self, k: usize, i: usize) -> f64 {
        self.hm[k * self.n + i]
    }

    #[inline]
    pub fn f_mac(&self, u: usize, k: usize, i: usize) -> f64 {
        self.fm[(u * self.k + k) * self.n + i]
    }

    #[inline]
    pub fn h_bc(&self, k: usize, j: usize) -> f64 {
        self.hb[k * self.n + j]
    }

    #[inline]
    pub fn f_bc(&self, k: usize, u: usize, j: usize) -> f64 {
        self.fb[(k * self.m + u) * self.n + j]
    }
}
