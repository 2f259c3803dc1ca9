//! Dual decomposition over the relay power budgets.
//!
//! Each relay budget gets a price `lambda_k`. For fixed prices the dual
//! function is the best pairing of the profit matrix plus
//! `sum_k lambda_k P_k`; it is convex in the prices and is minimized by a
//! projected subgradient method with a diminishing step. The pairing of the
//! lowest dual iterate is kept, and its powers are refined per relay to
//! restore the budgets.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{build_profit_matrix, pairing_objective, solve_pairing, Allocation};
use crate::channel::{ChannelRealization, NetworkConfig, PowerGains};
use crate::error::{Error, Result};
use crate::power::{refine_powers, PowerTolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum LambdaInit {
    /// `lambda_k = (sum_u w_u) K / (M P_k)`.
    Scaled,
    /// Uniform on `[0, 2 x scaled]`, from the given seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop once `|lambda' - lambda| <= tol_lambda |lambda|`.
    pub tol_lambda: f64,
    pub init: LambdaInit,
    /// Initial step is `step_scale * max_k lambda_k`, decaying as `1/sqrt(l+1)`.
    pub step_scale: f64,
    pub power: PowerTolerances,
    /// Refine the candidate at every iteration to log a feasible primal
    /// value in the history.
    pub track_primal: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 500,
            tol_lambda: 1e-4,
            init: LambdaInit::Scaled,
            step_scale: 0.1,
            power: PowerTolerances::default(),
            track_primal: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.tol_lambda >= 0.0
            && self.step_scale > 0.0
            && self.step_scale.is_finite()
            && self.power.root_tol_rel > 0.0
            && self.power.lambda_floor > 0.0
            && self.power.max_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad solver options {self:?}")))
        }
    }

    pub fn initial_lambda(&self, config: &NetworkConfig) -> Vec<f64> {
        let total_weight: f64 = config.ms_weights.iter().sum();
        let scaled = config
            .rs_power_budget
            .iter()
            .map(|&budget| total_weight * config.num_rs as f64 / (config.num_ms as f64 * budget));
        let floor = self.power.lambda_floor;
        match self.init {
            LambdaInit::Scaled => scaled.map(|l| l.max(floor)).collect(),
            LambdaInit::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                scaled
                    .map(|l| (2.0 * l * rng.random::<f64>()).max(floor))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub l: usize,
    pub dual_value: f64,
    /// Weighted rate of the refined candidate, when tracked.
    pub primal_feasible_value: Option<f64>,
    pub gap: Option<f64>,
    pub subgradient_norm: f64,
    /// Step size used to leave this iterate.
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: Vec<f64>,
    pub iteration: usize,
    pub omega0: f64,
    /// Step size of the most recent update.
    pub step_omega: f64,
    /// `P_k - sum of the candidate's powers on relay k`.
    pub subgradient: Vec<f64>,
    pub dual_value: f64,
    pub best_dual: f64,
    pub lambda_floor: f64,
    pub history: Vec<IterationRecord>,
}

impl DualState {
    pub fn new(lambda: Vec<f64>, omega0: f64, lambda_floor: f64) -> Self {
        let k = lambda.len();
        DualState {
            lambda,
            iteration: 0,
            omega0,
            step_omega: 0.0,
            subgradient: vec![0.0; k],
            dual_value: f64::INFINITY,
            best_dual: f64::INFINITY,
            lambda_floor,
            history: Vec::new(),
        }
    }

    /// Step size for the current iteration.
    pub fn omega(&self) -> f64 {
        self.omega0 / ((self.iteration + 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    pub dual_value: f64,
    /// Pairing maximizing the Lagrangian, with the unrefined powers.
    pub candidate: Allocation,
    pub subgradient: Vec<f64>,
}

/// Evaluates the dual function and a subgradient at `lambda`.
pub fn evaluate_dual(
    lambda: &[f64],
    gains: &PowerGains,
    config: &NetworkConfig,
    tolerances: &PowerTolerances,
) -> Result<DualEvaluation> {
    let matrix = build_profit_matrix(gains, config, lambda, tolerances)?;
    let candidate = solve_pairing(&matrix);
    let priced_budget: f64 = lambda
        .iter()
        .zip(&config.rs_power_budget)
        .map(|(l, p)| l * p)
        .sum();
    let dual_value = pairing_objective(&matrix, &candidate) + priced_budget;
    let subgradient = config
        .rs_power_budget
        .iter()
        .zip(candidate.relay_loads(config.num_rs))
        .map(|(budget, load)| budget - load)
        .collect();
    Ok(DualEvaluation {
        dual_value,
        candidate,
        subgradient,
    })
}

/// One projected subgradient step on the prices.
///
/// The dual function is minimized and `P_k - load_k` is its subgradient,
/// so prices move against it: an overloaded relay gets more expensive.
pub fn subgradient_step(mut state: DualState) -> DualState {
    let omega = state.omega();
    for (l, g) in state.lambda.iter_mut().zip(&state.subgradient) {
        *l = (*l - omega * g).max(state.lambda_floor);
    }
    state.step_omega = omega;
    state.iteration += 1;
    state
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub allocation: Allocation,
    /// Weighted sum-rate of `allocation`.
    pub primal_value: f64,
    /// Unweighted sum-rate of `allocation`.
    pub sum_rate: f64,
    /// Best dual upper bound; absent for schemes without a dual.
    pub dual_value: Option<f64>,
    /// `(dual - primal) / dual`.
    pub gap: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Prices at the iterate the pairing was taken from.
    pub lambda: Vec<f64>,
    pub history: Vec<IterationRecord>,
}

impl SolverReport {
    pub(crate) fn primal_only(
        allocation: Allocation,
        gains: &PowerGains,
        config: &NetworkConfig,
    ) -> Self {
        SolverReport {
            primal_value: allocation.weighted_rate(gains, config),
            sum_rate: allocation.sum_rate(gains, config),
            allocation,
            dual_value: None,
            gap: None,
            iterations: 0,
            converged: true,
            lambda: Vec::new(),
            history: Vec::new(),
        }
    }

    /// `primal <= dual + 1e-9 |dual|`, vacuous without a dual.
    pub fn weak_duality_holds(&self) -> bool {
        self.dual_value
            .is_none_or(|d| self.primal_value <= d + 1e-9 * d.abs())
    }
}

/// Runs the full dual algorithm on one realization.
pub fn solve(
    channels: &ChannelRealization,
    config: &NetworkConfig,
    options: &SolverOptions,
) -> Result<SolverReport> {
    config.validate()?;
    options.validate()?;
    channels.check_against(config)?;
    solve_with_gains(&channels.power_gains(), config, options)
}

pub(crate) fn solve_with_gains(
    gains: &PowerGains,
    config: &NetworkConfig,
    options: &SolverOptions,
) -> Result<SolverReport> {
    let tolerances = &options.power;
    let lambda0 = options.initial_lambda(config);
    let omega0 = options.step_scale * lambda0.iter().cloned().fold(0.0, f64::max);
    let mut state = DualState::new(lambda0, omega0, tolerances.lambda_floor);

    let mut best_candidate = Allocation::default();
    let mut best_lambda = state.lambda.clone();
    let mut converged = false;
    let mut iterations = 0;

    for l in 0..options.max_iters {
        let eval = evaluate_dual(&state.lambda, gains, config, tolerances)?;
        iterations = l + 1;
        state.dual_value = eval.dual_value;
        state.subgradient = eval.subgradient;
        if eval.dual_value < state.best_dual {
            state.best_dual = eval.dual_value;
            best_candidate = eval.candidate.clone();
            best_lambda = state.lambda.clone();
        }

        let primal = if options.track_primal {
            let refined = refine_powers(&eval.candidate, gains, config, tolerances)?;
            Some(refined.allocation.weighted_rate(gains, config))
        } else {
            None
        };
        let subgradient_norm = norm(&state.subgradient);
        state.history.push(IterationRecord {
            l,
            dual_value: eval.dual_value,
            primal_feasible_value: primal,
            gap: primal.map(|p| relative_gap(eval.dual_value, p)),
            subgradient_norm,
            omega: state.omega(),
        });

        if subgradient_norm == 0.0 {
            converged = true;
            break;
        }
        let previous = state.lambda.clone();
        state = subgradient_step(state);
        let moved: Vec<f64> = state
            .lambda
            .iter()
            .zip(&previous)
            .map(|(a, b)| a - b)
            .collect();
        if norm(&moved) <= options.tol_lambda * norm(&previous) {
            converged = true;
            break;
        }
    }

    let refined = refine_powers(&best_candidate, gains, config, tolerances)?;
    let allocation = refined.allocation;
    let primal_value = allocation.weighted_rate(gains, config);
    Ok(SolverReport {
        sum_rate: allocation.sum_rate(gains, config),
        primal_value,
        dual_value: Some(state.best_dual),
        gap: Some(relative_gap(state.best_dual, primal_value)),
        iterations,
        converged,
        lambda: best_lambda,
        history: std::mem::take(&mut state.history),
        allocation,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_gap(dual: f64, primal: f64) -> f64 {
    if dual == 0.0 {
        0.0
    } else {
        (dual - primal) / dual
    }
}

/// Writes the iteration history as CSV with columns
/// `l,dual_value,primal_feasible_value,gap,subgradient_norm,omega`.
/// Untracked primal values are left empty.
pub fn write_history_csv<W: Write>(history: &[IterationRecord], out: W) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Parse {
        what: "history csv".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "l",
        "dual_value",
        "primal_feasible_value",
        "gap",
        "subgradient_norm",
        "omega",
    ])
    .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in history {
        w.write_record([
            r.l.to_string(),
            r.dual_value.to_string(),
            opt(r.primal_feasible_value),
            opt(r.gap),
            r.subgradient_norm.to_string(),
            r.omega.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<history>", e))?;
    Ok(())
}
