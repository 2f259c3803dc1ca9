//! Monte Carlo experiments comparing the dual solver with the baselines.
//!
//! Every realization draws fresh node positions and channels from a child
//! seed of the master seed, and every scheme at every relay power level is
//! run on that same realization.

mod config_file;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{epa_solve, rra_solve};
use crate::channel::{realize, ChannelRealization, NetworkConfig};
use crate::dual::{solve, SolverOptions, SolverReport};
use crate::error::{Error, Result};

pub use config_file::ConfigFile;
pub use output::{emit_results, Manifest, MANIFEST_FILE, RECORDS_FILE, SUMMARY_FILE, TIMINGS_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    Epa,
    Rra,
    /// Best dual value of the proposed solver, an upper bound on any scheme.
    DualBound,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Proposed,
        Scheme::Epa,
        Scheme::Rra,
        Scheme::DualBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Epa => "epa",
            Scheme::Rra => "rra",
            Scheme::DualBound => "dual_bound",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMode {
    #[default]
    FixedWeights,
    /// Realizations are run in order as epochs, and each epoch reweights
    /// the mobiles by the inverse of their accumulated rate.
    Proportional,
}

impl FromStr for FairnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed_weights" | "fixed" => Ok(FairnessMode::FixedWeights),
            "proportional" => Ok(FairnessMode::Proportional),
            other => Err(Error::InvalidConfig(format!(
                "unknown fairness mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub network: NetworkConfig,
    pub schemes: Vec<Scheme>,
    pub num_realizations: usize,
    /// Relay power per node in dB; each level sets every relay budget.
    pub rs_power_sweep_db: Vec<f64>,
    pub master_seed: u64,
    pub fairness_mode: FairnessMode,
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

impl ExperimentSpec {
    /// The reference network at 200 realizations over 0..=20 dB in 5 dB steps.
    pub fn reference() -> Self {
        ExperimentSpec {
            network: NetworkConfig::reference(),
            schemes: Scheme::ALL.to_vec(),
            num_realizations: 200,
            rs_power_sweep_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            master_seed: 2013,
            fairness_mode: FairnessMode::FixedWeights,
            solver: SolverOptions::default(),
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.solver.validate()?;
        if self.num_realizations == 0 {
            return Err(Error::InvalidConfig("need at least one realization".into()));
        }
        if self.rs_power_sweep_db.is_empty() {
            return Err(Error::InvalidConfig("relay power sweep is empty".into()));
        }
        if self.rs_power_sweep_db.iter().any(|db| !db.is_finite()) {
            return Err(Error::InvalidConfig(
                "relay power levels must be finite".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("no schemes selected".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.schemes.iter().all(|s| seen.insert(*s)) {
            return Err(Error::InvalidConfig("a scheme is listed twice".into()));
        }
        Ok(())
    }
}

/// One (realization, power level, scheme) outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub realization: usize,
    pub seed: u64,
    pub power_db: f64,
    pub scheme: Scheme,
    /// Unweighted sum-rate; the dual value for `dual_bound`.
    pub sum_rate: f64,
    /// Weighted objective; the dual value for `dual_bound`.
    pub weighted_rate: f64,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub power_db: f64,
    pub scheme: Scheme,
    pub mean_rate: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// Ordered by realization, then power level, then scheme.
    pub records: Vec<Record>,
    /// Ordered by power level, then scheme, as listed in the spec.
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn mean(&self, power_db: f64, scheme: Scheme) -> Option<f64> {
        self.summary
            .iter()
            .find(|row| row.power_db == power_db && row.scheme == scheme)
            .map(|row| row.mean_rate)
    }
}

/// SplitMix64 output function.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of realization `r` under `master`.
pub fn child_seed(master: u64, r: usize) -> u64 {
    mix64(master ^ mix64((r as u64).wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Proportional-fair weights `w_u = 1 / T_u`.
pub fn update_weights(accumulated: &[f64]) -> Result<Vec<f64>> {
    accumulated
        .iter()
        .map(|&t| {
            if t.is_finite() && t > 0.0 {
                Ok(1.0 / t)
            } else {
                Err(Error::Domain(format!(
                    "accumulated rate must be positive, got {t}"
                )))
            }
        })
        .collect()
}

fn rra_rng(seed: u64, power_idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(power_idx as u64 + 1);
    rng
}

fn run_scheme(
    scheme: Scheme,
    channels: &ChannelRealization,
    config: &NetworkConfig,
    solver: &SolverOptions,
    rng_seed: u64,
    power_idx: usize,
) -> Result<SolverReport> {
    match scheme {
        Scheme::Proposed | Scheme::DualBound => solve(channels, config, solver),
        Scheme::Epa => epa_solve(channels, config),
        Scheme::Rra => rra_solve(channels, config, &mut rra_rng(rng_seed, power_idx)),
    }
}

fn record_from(
    report: &SolverReport,
    scheme: Scheme,
    realization: usize,
    seed: u64,
    power_db: f64,
    wall_time_s: f64,
) -> Record {
    let (sum_rate, weighted_rate) = match scheme {
        Scheme::DualBound => {
            let d = report.dual_value.unwrap_or(f64::NAN);
            (d, d)
        }
        _ => (report.sum_rate, report.primal_value),
    };
    Record {
        realization,
        seed,
        power_db,
        scheme,
        sum_rate,
        weighted_rate,
        gap: report.gap,
        iterations: report.iterations,
        converged: report.converged,
        wall_time_s,
    }
}

/// Runs every requested scheme at every power level on one realization.
/// `weights` overrides the mobile weights per scheme when given.
fn run_realization(
    spec: &ExperimentSpec,
    r: usize,
    channels: &ChannelRealization,
    weights: Option<&dyn Fn(usize, Scheme) -> Vec<f64>>,
) -> Result<Vec<(Record, Option<SolverReport>)>> {
    let seed = channels.seed.unwrap_or(0);
    let mut out = Vec::with_capacity(spec.rs_power_sweep_db.len() * spec.schemes.len());
    for (pi, &db) in spec.rs_power_sweep_db.iter().enumerate() {
        let base = spec.network.with_relay_power_db(db);
        let mut proposed: Option<(SolverReport, f64)> = None;
        for &scheme in &spec.schemes {
            let family = if scheme == Scheme::DualBound {
                Scheme::Proposed
            } else {
                scheme
            };
            let config = match weights {
                Some(w) => NetworkConfig {
                    ms_weights: w(pi, family),
                    ..base.clone()
                },
                None => base.clone(),
            };
            let (report, elapsed) = match (&proposed, family) {
                (Some((rep, t)), Scheme::Proposed) => (rep.clone(), *t),
                _ => {
                    let start = Instant::now();
                    let rep = run_scheme(scheme, channels, &config, &spec.solver, seed, pi)
                        .map_err(|e| {
                            Error::Numerical(format!(
                                "{scheme} failed on realization {r} (seed {seed}) at {db} dB: {e}"
                            ))
                        })?;
                    let t = start.elapsed().as_secs_f64();
                    if family == Scheme::Proposed {
                        proposed = Some((rep.clone(), t));
                    }
                    (rep, t)
                }
            };
            let record = record_from(&report, scheme, r, seed, db, elapsed);
            out.push((record, Some(report)));
        }
    }
    Ok(out)
}

/// Runs the experiment and aggregates per (power level, scheme).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let records = match spec.fairness_mode {
        FairnessMode::FixedWeights => (0..spec.num_realizations)
            .into_par_iter()
            .map(|r| {
                let channels = realize(&spec.network, child_seed(spec.master_seed, r));
                run_realization(spec, r, &channels, None)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .map(|(rec, _)| rec)
            .collect(),
        FairnessMode::Proportional => run_proportional(spec)?,
    };
    let summary = summarize(spec, &records);
    Ok(ExperimentResult {
        spec: spec.clone(),
        records,
        summary,
    })
}

/// Sequential epochs; each (power level, scheme family) keeps its own
/// accumulated per-mobile rates.
fn run_proportional(spec: &ExperimentSpec) -> Result<Vec<Record>> {
    let m = spec.network.num_ms;
    let families = [Scheme::Proposed, Scheme::Epa, Scheme::Rra];
    let slot =
        |pi: usize, s: Scheme| pi * families.len() + families.iter().position(|f| *f == s).unwrap();
    let mut accumulated = vec![vec![0.0; m]; spec.rs_power_sweep_db.len() * families.len()];
    let mut records = Vec::new();

    for r in 0..spec.num_realizations {
        let channels = realize(&spec.network, child_seed(spec.master_seed, r));
        let weights_now: Vec<Vec<f64>> = accumulated
            .iter()
            .map(|acc| fairness_weights(acc, &spec.network.ms_weights))
            .collect();
        let lookup = |pi: usize, s: Scheme| weights_now[slot(pi, s)].clone();
        let outcomes = run_realization(spec, r, &channels, Some(&lookup))?;
        let gains = channels.power_gains();
        for (idx, (record, report)) in outcomes.into_iter().enumerate() {
            let pi = idx / spec.schemes.len();
            if record.scheme != Scheme::DualBound {
                if let Some(report) = report {
                    let config = spec.network.with_relay_power_db(spec.rs_power_sweep_db[pi]);
                    let rates = report.allocation.per_ms_rates(&gains, &config);
                    for (acc, rate) in accumulated[slot(pi, record.scheme)].iter_mut().zip(rates) {
                        *acc += rate;
                    }
                }
            }
            records.push(record);
        }
    }
    Ok(records)
}

/// `1/T_u` once every mobile has been served, else the base weights.
fn fairness_weights(accumulated: &[f64], base: &[f64]) -> Vec<f64> {
    update_weights(accumulated).unwrap_or_else(|_| base.to_vec())
}

/// Runs `scheme` over `realizations` as consecutive epochs and returns the
/// rate accumulated by each mobile.
pub fn run_epochs(
    config: &NetworkConfig,
    realizations: &[ChannelRealization],
    scheme: Scheme,
    mode: FairnessMode,
    solver: &SolverOptions,
) -> Result<Vec<f64>> {
    config.validate()?;
    let mut accumulated = vec![0.0; config.num_ms];
    for (epoch, channels) in realizations.iter().enumerate() {
        let weights = match mode {
            FairnessMode::FixedWeights => config.ms_weights.clone(),
            FairnessMode::Proportional => fairness_weights(&accumulated, &config.ms_weights),
        };
        let cfg = NetworkConfig {
            ms_weights: weights,
            ..config.clone()
        };
        let report = run_scheme(scheme, channels, &cfg, solver, epoch as u64, 0)?;
        let rates = report
            .allocation
            .per_ms_rates(&channels.power_gains(), &cfg);
        for (acc, rate) in accumulated.iter_mut().zip(rates) {
            *acc += rate;
        }
    }
    Ok(accumulated)
}

fn summarize(spec: &ExperimentSpec, records: &[Record]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &db in &spec.rs_power_sweep_db {
        for &scheme in &spec.schemes {
            let values: Vec<f64> = records
                .iter()
                .filter(|rec| rec.power_db == db && rec.scheme == scheme)
                .map(|rec| rec.sum_rate)
                .collect();
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            rows.push(SummaryRow {
                power_db: db,
                scheme,
                mean_rate: mean,
                stderr,
                n,
            });
        }
    }
    rows
}
