//! Flat TOML configuration files.
//!
//! Every key is optional and falls back to the reference setup. Transmit
//! powers can be given either per subcarrier in linear units
//! (`bs_power_per_subcarrier`, `ms_power_per_subcarrier`,
//! `rs_power_budget`) or as node totals in dB (`bs_power_db`, `ms_power_db`,
//! `rs_power_db`); BS and mobile node totals are split evenly over the
//! subcarriers.
//!
//! ```toml
//! num_ms = 4
//! num_rs = 3
//! num_subcarriers = 32
//! bs_power_db = 10.0
//! ms_power_db = 10.0
//! rs_power_db = 10.0
//! shadowing_sigma_db = 5.8
//! schemes = ["proposed", "epa", "rra", "dual_bound"]
//! realizations = 200
//! seed = 2013
//! power_sweep_db = [0.0, 5.0, 10.0, 15.0, 20.0]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::channel::{db_to_linear, NetworkConfig};
use crate::dual::{LambdaInit, SolverOptions};
use crate::error::{Error, Result};
use crate::harness::{ExperimentSpec, FairnessMode, Scheme};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub num_ms: Option<usize>,
    pub num_rs: Option<usize>,
    pub num_subcarriers: Option<usize>,
    pub bs_power_per_subcarrier: Option<f64>,
    pub ms_power_per_subcarrier: Option<f64>,
    pub bs_power_db: Option<f64>,
    pub ms_power_db: Option<f64>,
    pub rs_power_budget: Option<Vec<f64>>,
    pub rs_power_db: Option<f64>,
    pub ms_weights: Option<Vec<f64>>,
    pub cell_radius: Option<f64>,
    pub rs_ring_radius: Option<f64>,
    pub path_loss_exponent: Option<f64>,
    pub shadowing_sigma_db: Option<f64>,
    pub reciprocal_fading: Option<bool>,

    pub schemes: Option<Vec<String>>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub power_sweep_db: Option<Vec<f64>>,
    pub fairness_mode: Option<String>,

    pub max_iters: Option<usize>,
    pub tol_lambda: Option<f64>,
    pub step_scale: Option<f64>,
    /// `"scaled"` or `"random"`.
    pub lambda_init: Option<String>,
    pub lambda_init_seed: Option<u64>,
    pub track_primal: Option<bool>,
}

fn exclusive<T>(a: Option<T>, b: Option<T>, names: (&str, &str)) -> Result<Option<T>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "give either {} or {}, not both",
            names.0, names.1
        ))),
        (a, b) => Ok(a.or(b)),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "config file".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                what: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        let reference = NetworkConfig::reference();
        let num_ms = self.num_ms.unwrap_or(reference.num_ms);
        let num_rs = self.num_rs.unwrap_or(reference.num_rs);
        let n = self.num_subcarriers.unwrap_or(reference.num_subcarriers);
        let per_subcarrier = |db: f64| db_to_linear(db) / n.max(1) as f64;

        let bs = exclusive(
            self.bs_power_per_subcarrier,
            self.bs_power_db.map(per_subcarrier),
            ("bs_power_per_subcarrier", "bs_power_db"),
        )?;
        let ms = exclusive(
            self.ms_power_per_subcarrier,
            self.ms_power_db.map(per_subcarrier),
            ("ms_power_per_subcarrier", "ms_power_db"),
        )?;
        let rs = exclusive(
            self.rs_power_budget.clone(),
            self.rs_power_db.map(|db| vec![db_to_linear(db); num_rs]),
            ("rs_power_budget", "rs_power_db"),
        )?;

        let config = NetworkConfig {
            num_ms,
            num_rs,
            num_subcarriers: n,
            bs_power_per_subcarrier: bs.unwrap_or_else(|| per_subcarrier(10.0)),
            ms_power_per_subcarrier: ms.unwrap_or_else(|| per_subcarrier(10.0)),
            rs_power_budget: rs.unwrap_or_else(|| vec![db_to_linear(10.0); num_rs]),
            ms_weights: self.ms_weights.clone().unwrap_or_else(|| vec![1.0; num_ms]),
            cell_radius: self.cell_radius.unwrap_or(reference.cell_radius),
            rs_ring_radius: self.rs_ring_radius.unwrap_or(reference.rs_ring_radius),
            path_loss_exponent: self
                .path_loss_exponent
                .unwrap_or(reference.path_loss_exponent),
            shadowing_sigma_db: self
                .shadowing_sigma_db
                .unwrap_or(reference.shadowing_sigma_db),
            reciprocal_fading: self.reciprocal_fading.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn solver(&self) -> Result<SolverOptions> {
        let defaults = SolverOptions::default();
        let init = match self.lambda_init.as_deref() {
            None | Some("scaled") => LambdaInit::Scaled,
            Some("random") => LambdaInit::Random {
                seed: self.lambda_init_seed.unwrap_or(0),
            },
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "unknown lambda_init '{other}'"
                )))
            }
        };
        let options = SolverOptions {
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            tol_lambda: self.tol_lambda.unwrap_or(defaults.tol_lambda),
            step_scale: self.step_scale.unwrap_or(defaults.step_scale),
            track_primal: self.track_primal.unwrap_or(defaults.track_primal),
            init,
            power: defaults.power,
        };
        options.validate()?;
        Ok(options)
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let reference = ExperimentSpec::reference();
        let schemes = match &self.schemes {
            Some(names) => names
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Scheme>>>()?,
            None => reference.schemes,
        };
        let fairness_mode = match &self.fairness_mode {
            Some(s) => s.parse::<FairnessMode>()?,
            None => reference.fairness_mode,
        };
        let spec = ExperimentSpec {
            network: self.network()?,
            schemes,
            num_realizations: self.realizations.unwrap_or(reference.num_realizations),
            rs_power_sweep_db: self
                .power_sweep_db
                .clone()
                .unwrap_or(reference.rs_power_sweep_db),
            master_seed: self.seed.unwrap_or(reference.master_seed),
            fairness_mode,
            solver: self.solver()?,
            output_path: None,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_setup() {
        let cfg = ConfigFile::parse("").unwrap();
        assert_eq!(cfg.network().unwrap(), NetworkConfig::reference());
        assert_eq!(cfg.experiment().unwrap(), ExperimentSpec::reference());
    }

    #[test]
    fn db_keys_split_over_subcarriers() {
        let cfg = ConfigFile::parse(
            "num_subcarriers = 8\nbs_power_db = 20.0\nms_power_per_subcarrier = 0.5\nrs_power_db = 0.0\nnum_rs = 2\n",
        )
        .unwrap();
        let net = cfg.network().unwrap();
        assert!((net.bs_power_per_subcarrier - 100.0 / 8.0).abs() < 1e-12);
        assert_eq!(net.ms_power_per_subcarrier, 0.5);
        assert_eq!(net.rs_power_budget, vec![1.0, 1.0]);
    }

    #[test]
    fn rejects_conflicts_and_unknown_keys() {
        let both =
            ConfigFile::parse("bs_power_db = 10.0\nbs_power_per_subcarrier = 1.0\n").unwrap();
        assert!(both.network().is_err());
        assert!(ConfigFile::parse("colour = \"blue\"\n").is_err());
        let bad_scheme = ConfigFile::parse("schemes = [\"proposed\", \"greedy\"]\n").unwrap();
        assert!(bad_scheme.experiment().is_err());
        let empty_sweep = ConfigFile::parse("power_sweep_db = []\n").unwrap();
        assert!(empty_sweep.experiment().is_err());
    }

    #[test]
    fn solver_keys() {
        let cfg = ConfigFile::parse(
            "max_iters = 50\nlambda_init = \"random\"\nlambda_init_seed = 3\nfairness_mode = \"proportional\"\n",
        )
        .unwrap();
        let spec = cfg.experiment().unwrap();
        assert_eq!(spec.solver.max_iters, 50);
        assert_eq!(spec.solver.init, LambdaInit::Random { seed: 3 });
        assert_eq!(spec.fairness_mode, FairnessMode::Proportional);
    }
}
