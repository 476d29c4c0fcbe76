//! End-to-end experiment runs and CSV output.

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{self, AnalysisReport, SimulationReport};
use crate::config::{Algorithm, ExperimentConfig, InitialDistribution, MonteCarloConfig, Table};
use crate::devices::state_index;
use crate::error::{Error, Result};
use crate::markov::Distribution;
use crate::mdp::{self, MdpModel, Policy, Solution};

/// What a run computes and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Optimal policy only.
    Solve,
    /// Policy plus stationary analysis.
    Analyze,
    /// Analysis plus a Monte Carlo cross-check.
    Simulate,
    /// Configuration check only.
    Validate,
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    /// Analyze this fixed action instead of the optimal policy.
    pub baseline_policy: Option<String>,
}

impl ExperimentConfig {
    /// Applies overrides and re-validates.
    pub fn with_overrides(mut self, overrides: &Overrides) -> Result<Self> {
        if let Some(out) = &overrides.out {
            self.output.directory = Some(out.clone());
        }
        if let Some(gamma) = overrides.gamma {
            self.solver.gamma = gamma;
        }
        if let Some(seed) = overrides.seed {
            self.analysis
                .monte_carlo
                .get_or_insert_with(MonteCarloConfig::default)
                .seed = seed;
        }
        self.validate()?;
        Ok(self)
    }
}

/// Baseline comparison against the device's price-ignoring policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub action: String,
    pub average_reward: f64,
    pub average_consumption: f64,
}

impl Baseline {
    /// Reward gain relative to the baseline's reward magnitude, in percent.
    pub fn savings_percent(&self, average_reward: f64) -> f64 {
        100.0 * (average_reward - self.average_reward) / self.average_reward.abs()
    }

    pub fn consumption_increase_percent(&self, average_consumption: f64) -> f64 {
        100.0 * (average_consumption - self.average_consumption) / self.average_consumption.abs()
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: MdpModel,
    pub policy: Policy,
    /// `None` when a fixed baseline policy was requested.
    pub solution: Option<Solution>,
    pub fixed_action: Option<String>,
    pub report: Option<AnalysisReport>,
    pub baseline: Option<Baseline>,
    pub simulation: Option<SimulationReport>,
}

/// Builds, solves and analyses; writes nothing.
pub fn run_experiment(
    config: &ExperimentConfig,
    command: Command,
    baseline_policy: Option<&str>,
) -> Result<Experiment> {
    config.validate()?;
    let chain = config.price_chain()?;
    let model = config.device.build(&chain, config.price.reward_price)?;

    let (policy, solution) = match baseline_policy {
        Some(name) => (Policy::fixed_action(&model, name)?, None),
        None => {
            let solution = solve(&model, config)?;
            (solution.policy.clone(), Some(solution))
        }
    };

    let mut experiment = Experiment {
        config: config.clone(),
        model,
        policy,
        solution,
        fixed_action: baseline_policy.map(str::to_string),
        report: None,
        baseline: None,
        simulation: None,
    };
    if matches!(command, Command::Solve | Command::Validate) {
        return Ok(experiment);
    }

    let initial = initial_distribution(config, &experiment.model)?;
    let model = &experiment.model;
    experiment.report = Some(analysis::analyze(model, &experiment.policy, &initial)?);

    let naive = config.device.naive_action();
    let naive_policy = Policy::fixed_action(model, naive)?;
    let naive_report = analysis::analyze(model, &naive_policy, &initial)?;
    experiment.baseline = Some(Baseline {
        action: naive.to_string(),
        average_reward: naive_report.average_reward,
        average_consumption: naive_report.average_consumption,
    });

    if command == Command::Simulate {
        let mc = config.analysis.monte_carlo.unwrap_or_default();
        experiment.simulation = Some(analysis::simulate_trajectory(
            model,
            &experiment.policy,
            mc.steps,
            mc.seed,
        )?);
    }
    Ok(experiment)
}

fn solve(model: &MdpModel, config: &ExperimentConfig) -> Result<Solution> {
    let s = &config.solver;
    match s.algorithm {
        Algorithm::ValueIteration => mdp::value_iteration(model, s.gamma, s.tol, s.max_iter),
        Algorithm::PolicyIteration => mdp::policy_iteration(model, s.gamma),
    }
}

fn initial_distribution(config: &ExperimentConfig, model: &MdpModel) -> Result<Distribution> {
    match config.analysis.initial {
        InitialDistribution::Uniform => Distribution::uniform(model.num_states()),
        InitialDistribution::Point { x, c } => Distribution::point(
            model.num_states(),
            state_index(x, c, model.num_price_levels()),
        ),
    }
}

impl Experiment {
    /// `(metric, value)` rows of summary.csv.
    pub fn summary(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
        let solver = &self.config.solver;
        push(
            "device",
            format!("{:?}", self.config.device.kind()).to_lowercase(),
        );
        push("states", self.model.num_states().to_string());
        push("gamma", num(solver.gamma));
        match &self.solution {
            Some(sol) => {
                push(
                    "policy",
                    match solver.algorithm {
                        Algorithm::ValueIteration => "value_iteration",
                        Algorithm::PolicyIteration => "policy_iteration",
                    }
                    .to_string(),
                );
                push("iterations", sol.iterations.to_string());
            }
            None => push(
                "policy",
                format!("fixed:{}", self.fixed_action.as_deref().unwrap_or_default()),
            ),
        }
        if let Some(report) = &self.report {
            push("irreducible", report.irreducible.to_string());
            push("closed_classes", report.closed_classes.to_string());
            push("average_reward", num(report.average_reward));
            push("average_consumption", num(report.average_consumption));
            if let Some(b) = &self.baseline {
                push("baseline_action", b.action.clone());
                push("baseline_average_reward", num(b.average_reward));
                push("baseline_average_consumption", num(b.average_consumption));
                push(
                    "savings_percent",
                    num(b.savings_percent(report.average_reward)),
                );
                push(
                    "consumption_increase_percent",
                    num(b.consumption_increase_percent(report.average_consumption)),
                );
            }
            if let Some(sim) = &self.simulation {
                push("mc_steps", sim.steps.to_string());
                push("mc_seed", sim.seed.to_string());
                push("mc_average_reward", num(sim.average_reward));
                push("mc_reward_std_error", num(sim.reward_std_error));
                push("mc_average_consumption", num(sim.average_consumption));
                push("mc_consumption_std_error", num(sim.consumption_std_error));
                push(
                    "mc_total_variation",
                    num(0.5 * report.joint_stationary.l1_distance(&sim.occupancy)),
                );
            }
        }
        rows
    }

    /// Tables this run can produce, restricted to the configured selection.
    pub fn tables(&self) -> Vec<Table> {
        self.config
            .output
            .tables
            .iter()
            .copied()
            .filter(|t| self.report.is_some() || *t == Table::Policy)
            .collect()
    }

    /// Writes the selected tables into `dir` and returns their paths.
    pub fn emit_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for table in self.tables() {
            let path = dir.join(table.file_name());
            let rows = self.table_rows(table);
            write_csv(&path, &rows)?;
            written.push(path);
        }
        Ok(written)
    }

    fn table_rows(&self, table: Table) -> Vec<Vec<String>> {
        let model = &self.model;
        let labels = model.labels();
        let levels = &self.config.price.levels;
        let machine_names = self.config.device.kernel().machine_states;
        let report = self.report.as_ref();
        let header = |cols: &[&str]| cols.iter().map(|c| c.to_string()).collect::<Vec<_>>();
        match table {
            Table::Policy => std::iter::once(header(&["x", "c", "action"]))
                .chain(labels.iter().enumerate().map(|(s, l)| {
                    vec![
                        l.machine.to_string(),
                        l.price.to_string(),
                        model.action_name(self.policy.action(s)).to_string(),
                    ]
                }))
                .collect(),
            Table::Stationary => {
                let p = report
                    .expect("analysis ran")
                    .joint_stationary
                    .probabilities();
                std::iter::once(header(&["x", "c", "probability"]))
                    .chain(
                        labels.iter().zip(p).map(|(l, p)| {
                            vec![l.machine.to_string(), l.price.to_string(), num(*p)]
                        }),
                    )
                    .collect()
            }
            Table::PriceMarginal => {
                let p = report.expect("analysis ran").price_marginal.probabilities();
                std::iter::once(header(&["c", "price", "probability"]))
                    .chain(
                        p.iter()
                            .enumerate()
                            .map(|(c, p)| vec![c.to_string(), num(levels[c]), num(*p)]),
                    )
                    .collect()
            }
            Table::MachineMarginal => {
                let p = report
                    .expect("analysis ran")
                    .machine_marginal
                    .probabilities();
                std::iter::once(header(&["x", "state", "probability"]))
                    .chain(
                        p.iter()
                            .enumerate()
                            .map(|(x, p)| vec![x.to_string(), machine_names[x].clone(), num(*p)]),
                    )
                    .collect()
            }
            Table::DemandCurve => {
                let curve = &report.expect("analysis ran").demand_curve;
                std::iter::once(header(&["c", "price", "expected_demand"]))
                    .chain(curve.iter().enumerate().map(|(c, e)| {
                        vec![
                            c.to_string(),
                            num(levels[c]),
                            e.map(num).unwrap_or_default(),
                        ]
                    }))
                    .collect()
            }
            Table::Summary => std::iter::once(header(&["metric", "value"]))
                .chain(self.summary().into_iter().map(|(k, v)| vec![k, v]))
                .collect(),
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Writes through a temporary sibling and renames, so a failed write never
/// leaves a truncated table behind.
fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&tmp)
            .map_err(csv_err)?;
        for row in rows {
            writer.write_record(row).map_err(csv_err)?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: tmp.clone(),
            source,
        })?;
    }
    fs::rename(&tmp, path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
