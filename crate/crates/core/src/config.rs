//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "price":    { "levels": [1.0, 1.25, 1.5, 1.75, 2.0], "p_up": 0.5, "p_down": 0.3 },
//!   "device":   { "kind": "control", "num_temperature_levels": 10,
//!                 "e_cool": 0.1, "e_keep": 1.0, "e_heat": 2.1 },
//!   "solver":   { "algorithm": "value_iteration", "gamma": 0.99 },
//!   "analysis": { "initial": "uniform", "monte_carlo": { "steps": 1000000, "seed": 7 } },
//!   "output":   { "directory": "out" }
//! }
//! ```
//!
//! Only `price` and `device` are required. Unknown keys anywhere are errors.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::devices::{DeviceSpec, RewardPrice};
use crate::error::{Error, Result};
use crate::price::PriceChain;

pub const DEFAULT_GAMMA: f64 = 0.99;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
pub const DEFAULT_MC_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub price: PriceConfig,
    pub device: DeviceSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    pub levels: Vec<f64>,
    pub p_up: f64,
    pub p_down: f64,
    #[serde(default)]
    pub reward_price: RewardPrice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    ValueIteration,
    PolicyIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::default(),
            gamma: DEFAULT_GAMMA,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Initial distribution for the joint stationary iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDistribution {
    #[default]
    Uniform,
    /// All mass on machine state `x` at price level `c`.
    Point { x: usize, c: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "default_mc_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_mc_steps() -> usize {
    DEFAULT_MC_STEPS
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            steps: DEFAULT_MC_STEPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub initial: InitialDistribution,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    Policy,
    Stationary,
    PriceMarginal,
    MachineMarginal,
    DemandCurve,
    Summary,
}

impl Table {
    pub const ALL: [Table; 6] = [
        Table::Policy,
        Table::Stationary,
        Table::PriceMarginal,
        Table::MachineMarginal,
        Table::DemandCurve,
        Table::Summary,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Table::Policy => "policy.csv",
            Table::Stationary => "stationary.csv",
            Table::PriceMarginal => "price_marginal.csv",
            Table::MachineMarginal => "machine_marginal.csv",
            Table::DemandCurve => "demand_curve.csv",
            Table::Summary => "summary.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "all_tables")]
    pub tables: Vec<Table>,
}

fn all_tables() -> Vec<Table> {
    Table::ALL.to_vec()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            tables: all_tables(),
        }
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// Canonical JSON form; `parse_config` of the result gives back `self`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn price_chain(&self) -> Result<PriceChain> {
        PriceChain::birth_death(
            self.price.levels.clone(),
            self.price.p_up,
            self.price.p_down,
        )
    }

    /// Checks every downstream precondition, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let price = &self.price;
        if price.levels.is_empty() {
            return Err(Error::config(
                "price.levels",
                "at least one level is required",
            ));
        }
        if price.levels.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("price.levels", "levels must be finite"));
        }
        if price.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "price.levels",
                "levels must be strictly increasing",
            ));
        }
        for (field, p) in [("price.p_up", price.p_up), ("price.p_down", price.p_down)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, format!("{p} is not a probability")));
            }
        }
        if price.p_up + price.p_down > 1.0 {
            return Err(Error::config(
                "price.p_up",
                format!(
                    "p_up + p_down > 1 ({} + {} = {})",
                    price.p_up,
                    price.p_down,
                    price.p_up + price.p_down
                ),
            ));
        }

        self.device
            .check()
            .map_err(|v| Error::config(format!("device.{}", v.field), v.reason))?;

        let solver = &self.solver;
        if !(solver.gamma > 0.0 && solver.gamma < 1.0) {
            return Err(Error::config(
                "solver.gamma",
                format!("must lie in (0, 1), got {}", solver.gamma),
            ));
        }
        if !(solver.tol > 0.0 && solver.tol.is_finite()) {
            return Err(Error::config(
                "solver.tol",
                format!("must be positive, got {}", solver.tol),
            ));
        }
        if solver.max_iter == 0 {
            return Err(Error::config("solver.max_iter", "must be at least 1"));
        }

        if let InitialDistribution::Point { x, c } = self.analysis.initial {
            let machines = self.device.kernel().num_machine_states();
            if x >= machines {
                return Err(Error::config(
                    "analysis.initial.point.x",
                    format!("machine state {x} outside 0..{machines}"),
                ));
            }
            if c >= price.levels.len() {
                return Err(Error::config(
                    "analysis.initial.point.c",
                    format!("price level {c} outside 0..{}", price.levels.len()),
                ));
            }
        }
        if let Some(mc) = &self.analysis.monte_carlo {
            if mc.steps == 0 {
                return Err(Error::config(
                    "analysis.monte_carlo.steps",
                    "must be at least 1",
                ));
            }
        }
        if self.output.tables.is_empty() {
            return Err(Error::config("output.tables", "select at least one table"));
        }
        Ok(())
    }
}
