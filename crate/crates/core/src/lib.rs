//! Resource allocation for OFDMA two-way amplify-and-forward relay networks.
//!
//! A base station exchanges uplink and downlink traffic with several mobile
//! stations through a set of half-duplex relays. Each relay amplifies the
//! superposition it hears on a MAC-phase subcarrier `i` and broadcasts it on
//! a BC-phase subcarrier `j`. The solver jointly picks the `(i, j)` pairing,
//! the serving (mobile, relay) pair for each subcarrier pair, and the relay
//! transmit powers, by pricing each relay's power budget with a Lagrange
//! multiplier and running a projected subgradient method on the prices.
//!
//! Module map:
//!
//! * [`channel`]: node geometry and fading realizations.
//! * [`rate`]: the two-way AF sum-rate and the per-tuple profit.
//! * [`power`]: KKT power for one tuple at a given price, and the per-relay
//!   power refinement that restores feasibility after the dual loop.
//! * [`assignment`]: best (mobile, relay) per subcarrier pair and the
//!   Hungarian pairing.
//! * [`dual`]: the subgradient loop and primal recovery.
//! * [`baselines`]: equal-power (EPA) and random (RRA) allocation.
//! * [`oracle`]: exhaustive reference solver for tiny instances.
//! * [`harness`]: Monte Carlo experiments, config files and result files.

pub mod assignment;
pub mod baselines;
pub mod channel;
pub mod dual;
mod error;
pub mod harness;
pub mod oracle;
pub mod power;
pub mod rate;

pub use assignment::{build_profit_matrix, solve_pairing, ActiveTuple, Allocation, ProfitMatrix};
pub use baselines::{epa_solve, rra_solve};
pub use channel::{
    place_nodes, realize, sample_channels, ChannelRealization, NetworkConfig, NodePositions,
};
pub use dual::{evaluate_dual, solve, subgradient_step, DualState, SolverOptions, SolverReport};
pub use error::{Error, Result};
pub use power::{optimal_power, refine_powers, PowerSolverConfig};
pub use rate::{profit, sum_rate, TupleContext};
