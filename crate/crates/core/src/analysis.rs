//! Long-run behaviour of a device running a fixed policy: joint stationary
//! occupancy, the price-conditional demand curve, per-interval averages and a
//! seeded Monte Carlo cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov::{Distribution, TransitionMatrix};
use crate::mdp::{MdpModel, Policy};

/// L1 residual at which the joint stationary iteration stops.
pub const JOINT_TOL: f64 = 1e-12;
pub const JOINT_MAX_ITER: usize = 1_000_000;
/// Batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 100;

/// Transition matrix M(s,s') = P_{π(s)}(s,s').
pub fn induced_chain(model: &MdpModel, policy: &Policy) -> Result<TransitionMatrix> {
    policy.check(model)?;
    let rows = (0..model.num_states())
        .map(|s| {
            policy
                .chosen(model, s)
                .transitions
                .iter()
                .map(|t| (t.next, t.probability))
                .collect()
        })
        .collect();
    TransitionMatrix::from_sparse_rows(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointStationary {
    pub distribution: Distribution,
    /// Every state communicates with every other.
    pub irreducible: bool,
    /// Closed communicating classes of the induced chain. With more than one
    /// the result depends on the initial distribution.
    pub closed_classes: usize,
}

/// Long-run occupancy P_st(x,c) of the induced chain started from `initial`.
pub fn joint_stationary(
    model: &MdpModel,
    policy: &Policy,
    initial: &Distribution,
) -> Result<JointStationary> {
    let chain = induced_chain(model, policy)?;
    let distribution = chain.limiting_distribution(initial, JOINT_TOL, JOINT_MAX_ITER)?;
    Ok(JointStationary {
        distribution,
        irreducible: chain.is_irreducible(),
        closed_classes: chain.closed_class_count(),
    })
}

fn check_len(model: &MdpModel, stationary: &Distribution) -> Result<()> {
    if stationary.len() != model.num_states() {
        return Err(Error::InvalidDistribution(format!(
            "distribution has {} entries, model has {} states",
            stationary.len(),
            model.num_states()
        )));
    }
    Ok(())
}

/// Marginal over price levels.
pub fn price_marginal(model: &MdpModel, stationary: &Distribution) -> Result<Distribution> {
    check_len(model, stationary)?;
    let mut marginal = vec![0.0; model.num_price_levels()];
    for (label, p) in model.labels().iter().zip(stationary.probabilities()) {
        marginal[label.price] += p;
    }
    Distribution::new(marginal)
}

/// Marginal over machine states.
pub fn machine_marginal(model: &MdpModel, stationary: &Distribution) -> Result<Distribution> {
    check_len(model, stationary)?;
    let mut marginal = vec![0.0; model.num_machine_states()];
    for (label, p) in model.labels().iter().zip(stationary.probabilities()) {
        marginal[label.machine] += p;
    }
    Distribution::new(marginal)
}

/// Expected demand at each price level,
///
/// ```text
/// ⟨E|c⟩ = Σ_x E_{π(x,c)} P_st(x,c) / Σ_x P_st(x,c)
/// ```
///
/// `None` marks price levels the stationary distribution never visits.
pub fn demand_curve(
    model: &MdpModel,
    policy: &Policy,
    stationary: &Distribution,
) -> Result<Vec<Option<f64>>> {
    policy.check(model)?;
    check_len(model, stationary)?;
    let levels = model.num_price_levels();
    let mut weighted = vec![0.0; levels];
    let mut mass = vec![0.0; levels];
    for (s, p) in stationary.probabilities().iter().enumerate() {
        let c = model.label(s).price;
        weighted[c] += policy.chosen(model, s).energy * p;
        mass[c] += p;
    }
    Ok(weighted
        .into_iter()
        .zip(mass)
        .map(|(w, m)| (m > 0.0).then(|| w / m))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRunAverages {
    /// Expected reward per interval.
    pub reward: f64,
    /// Expected energy per interval.
    pub consumption: f64,
}

pub fn long_run_averages(
    model: &MdpModel,
    policy: &Policy,
    stationary: &Distribution,
) -> Result<LongRunAverages> {
    policy.check(model)?;
    check_len(model, stationary)?;
    let (reward, consumption) =
        stationary
            .probabilities()
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(r, e), (s, p)| {
                let choice = policy.chosen(model, s);
                (r + p * choice.expected_reward(), e + p * choice.energy)
            });
    Ok(LongRunAverages {
        reward,
        consumption,
    })
}

/// Everything reported about a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub joint_stationary: Distribution,
    pub irreducible: bool,
    pub closed_classes: usize,
    pub demand_curve: Vec<Option<f64>>,
    pub price_marginal: Distribution,
    pub machine_marginal: Distribution,
    pub average_reward: f64,
    pub average_consumption: f64,
}

pub fn analyze(
    model: &MdpModel,
    policy: &Policy,
    initial: &Distribution,
) -> Result<AnalysisReport> {
    let stationary = joint_stationary(model, policy, initial)?;
    let averages = long_run_averages(model, policy, &stationary.distribution)?;
    Ok(AnalysisReport {
        demand_curve: demand_curve(model, policy, &stationary.distribution)?,
        price_marginal: price_marginal(model, &stationary.distribution)?,
        machine_marginal: machine_marginal(model, &stationary.distribution)?,
        average_reward: averages.reward,
        average_consumption: averages.consumption,
        irreducible: stationary.irreducible,
        closed_classes: stationary.closed_classes,
        joint_stationary: stationary.distribution,
    })
}

/// One sampled interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub next: usize,
    pub reward: f64,
    pub energy: f64,
}

/// Sample path of the induced chain driven by ChaCha8 seeded from a `u64`.
///
/// The first state is drawn uniformly; each step then samples a successor
/// by inverting the cumulative transition row.
#[derive(Debug, Clone)]
pub struct Trajectory<'m> {
    model: &'m MdpModel,
    policy: &'m Policy,
    rng: ChaCha8Rng,
    state: usize,
}

impl<'m> Trajectory<'m> {
    pub fn new(model: &'m MdpModel, policy: &'m Policy, seed: u64) -> Result<Self> {
        policy.check(model)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = rng.random_range(0..model.num_states());
        Ok(Trajectory {
            model,
            policy,
            rng,
            state,
        })
    }
}

impl Iterator for Trajectory<'_> {
    type Item = Step;

    fn next(&mut self) -> Option<Step> {
        let choice = self.policy.chosen(self.model, self.state);
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        let mut picked = choice.transitions.last().expect("non-empty row");
        for t in &choice.transitions {
            acc += t.probability;
            if u < acc {
                picked = t;
                break;
            }
        }
        let step = Step {
            state: self.state,
            action: choice.action,
            next: picked.next,
            reward: picked.reward,
            energy: choice.energy,
        };
        self.state = picked.next;
        Some(step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub steps: usize,
    pub seed: u64,
    /// Fraction of steps spent in each state.
    pub occupancy: Vec<f64>,
    pub average_reward: f64,
    pub average_consumption: f64,
    /// Batch-means standard error of `average_reward`.
    pub reward_std_error: f64,
    pub consumption_std_error: f64,
    pub batches: usize,
}

/// Simulates `steps` intervals and summarises occupancy and averages.
pub fn simulate_trajectory(
    model: &MdpModel,
    policy: &Policy,
    steps: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "simulation needs at least one step".into(),
        ));
    }
    let batches = DEFAULT_BATCHES.min(steps);
    let batch_len = steps / batches;
    let mut counts = vec![0usize; model.num_states()];
    let (mut total_reward, mut total_energy) = (0.0, 0.0);
    let mut batch_rewards = vec![0.0; batches];
    let mut batch_energy = vec![0.0; batches];
    for (i, step) in Trajectory::new(model, policy, seed)?
        .take(steps)
        .enumerate()
    {
        counts[step.state] += 1;
        total_reward += step.reward;
        total_energy += step.energy;
        let b = i / batch_len;
        if b < batches {
            batch_rewards[b] += step.reward;
            batch_energy[b] += step.energy;
        }
    }
    let n = steps as f64;
    Ok(SimulationReport {
        steps,
        seed,
        occupancy: counts.into_iter().map(|k| k as f64 / n).collect(),
        average_reward: total_reward / n,
        average_consumption: total_energy / n,
        reward_std_error: batch_std_error(&batch_rewards, batch_len),
        consumption_std_error: batch_std_error(&batch_energy, batch_len),
        batches,
    })
}

fn batch_std_error(sums: &[f64], batch_len: usize) -> f64 {
    let b = sums.len();
    if b < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = sums.iter().map(|s| s / batch_len as f64).collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}
