//! Finite-state, finite-action Markov decision processes.
//!
//! States carry a `(machine, price)` label. Each state lists the actions
//! available in it, and each available action owns a sparse transition row
//! with a reward attached to every successor, so rewards may depend on where
//! the transition lands.

mod solver;

pub use solver::{
    bellman_backup, bellman_residual, policy_evaluation, policy_iteration, value_iteration,
    Solution, DIRECT_SOLVE_LIMIT, TIE_TOLERANCE,
};

use crate::error::{Error, Result};

/// Tolerance on the probability mass of every transition row.
pub const ROW_TOLERANCE: f64 = 1e-12;

/// One possible successor of a state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub probability: f64,
    pub reward: f64,
}

/// An action available in a particular state.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub action: usize,
    /// Energy consumed during the interval when this action is taken.
    pub energy: f64,
    pub transitions: Vec<Transition>,
}

impl Choice {
    /// Σ P(s'|s,a) R(s,s').
    pub fn expected_reward(&self) -> f64 {
        self.transitions
            .iter()
            .map(|t| t.probability * t.reward)
            .sum()
    }

    fn expected_value(&self, values: &[f64]) -> f64 {
        self.transitions
            .iter()
            .map(|t| t.probability * values[t.next])
            .sum()
    }
}

/// Machine-state and price-level indices of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateLabel {
    pub machine: usize,
    pub price: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    action_names: Vec<String>,
    labels: Vec<StateLabel>,
    choices: Vec<Vec<Choice>>,
}

impl MdpModel {
    /// Builds a model, checking that every state has at least one action,
    /// that each available action appears once with a stochastic row, and
    /// that all rewards and energies are finite.
    pub fn new(
        action_names: Vec<String>,
        labels: Vec<StateLabel>,
        mut choices: Vec<Vec<Choice>>,
    ) -> Result<Self> {
        let n = choices.len();
        if n == 0 {
            return Err(Error::InvalidModel("model has no states".into()));
        }
        if labels.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} labels for {n} states",
                labels.len()
            )));
        }
        for (s, state_choices) in choices.iter_mut().enumerate() {
            if state_choices.is_empty() {
                return Err(Error::InvalidModel(format!(
                    "state {s} has no available action"
                )));
            }
            state_choices.sort_by_key(|c| c.action);
            if state_choices.windows(2).any(|w| w[0].action == w[1].action) {
                return Err(Error::InvalidModel(format!(
                    "state {s} lists an action twice"
                )));
            }
            for choice in state_choices.iter() {
                if choice.action >= action_names.len() {
                    return Err(Error::InvalidModel(format!(
                        "state {s} uses unknown action {}",
                        choice.action
                    )));
                }
                if !choice.energy.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "state {s}, action {}: energy is not finite",
                        choice.action
                    )));
                }
                let mut mass = 0.0;
                for t in &choice.transitions {
                    if t.next >= n {
                        return Err(Error::InvalidModel(format!(
                            "state {s}, action {}: successor {} out of range",
                            choice.action, t.next
                        )));
                    }
                    if !(0.0..=1.0).contains(&t.probability) {
                        return Err(Error::InvalidModel(format!(
                            "state {s}, action {}: probability {} out of range",
                            choice.action, t.probability
                        )));
                    }
                    if !t.reward.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "state {s}, action {}: reward is not finite",
                            choice.action
                        )));
                    }
                    mass += t.probability;
                }
                if (mass - 1.0).abs() > ROW_TOLERANCE {
                    return Err(Error::InvalidModel(format!(
                        "state {s}, action {}: transition row sums to {mass}",
                        choice.action
                    )));
                }
            }
        }
        Ok(MdpModel {
            action_names,
            labels,
            choices,
        })
    }

    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn num_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn action_name(&self, action: usize) -> &str {
        &self.action_names[action]
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|a| a == name)
    }

    pub fn label(&self, state: usize) -> StateLabel {
        self.labels[state]
    }

    pub fn labels(&self) -> &[StateLabel] {
        &self.labels
    }

    /// Number of distinct machine states, read off the labels.
    pub fn num_machine_states(&self) -> usize {
        self.labels
            .iter()
            .map(|l| l.machine)
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Number of distinct price levels, read off the labels.
    pub fn num_price_levels(&self) -> usize {
        self.labels
            .iter()
            .map(|l| l.price)
            .max()
            .map_or(0, |m| m + 1)
    }

    /// Available actions of `state`, in increasing index order.
    pub fn choices(&self, state: usize) -> &[Choice] {
        &self.choices[state]
    }

    pub fn available(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.choices[state].iter().map(|c| c.action)
    }

    pub fn is_available(&self, state: usize, action: usize) -> bool {
        self.choice(state, action).is_some()
    }

    pub fn choice(&self, state: usize, action: usize) -> Option<&Choice> {
        self.choices.get(state)?.iter().find(|c| c.action == action)
    }

    fn require_choice(&self, state: usize, action: usize) -> Result<&Choice> {
        if state >= self.num_states() {
            return Err(Error::InvalidArgument(format!(
                "state {state} out of range 0..{}",
                self.num_states()
            )));
        }
        self.choice(state, action).ok_or_else(|| {
            Error::InvalidArgument(format!("action {action} is not available in state {state}"))
        })
    }

    /// Σ_{s'} P_a(s,s') R_a(s,s').
    pub fn expected_reward(&self, state: usize, action: usize) -> Result<f64> {
        Ok(self.require_choice(state, action)?.expected_reward())
    }

    /// Energy consumed by `action` in `state`.
    pub fn energy(&self, state: usize, action: usize) -> Result<f64> {
        Ok(self.require_choice(state, action)?.energy)
    }

    /// Dense row P_a(s,·), or `None` if `action` is unavailable in `state`.
    pub fn kernel_row(&self, state: usize, action: usize) -> Option<Vec<f64>> {
        let choice = self.choice(state, action)?;
        let mut row = vec![0.0; self.num_states()];
        for t in &choice.transitions {
            row[t.next] += t.probability;
        }
        Some(row)
    }

    /// Smallest and largest action energy anywhere in the model.
    pub fn energy_range(&self) -> (f64, f64) {
        self.choices
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.energy), hi.max(c.energy))
            })
    }

    /// Largest |R_a(s,s')| over all transitions.
    pub fn max_abs_reward(&self) -> f64 {
        self.choices
            .iter()
            .flatten()
            .flat_map(|c| c.transitions.iter())
            .fold(0.0, |m, t| m.max(t.reward.abs()))
    }
}

/// Deterministic stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy(Vec<usize>);

impl Policy {
    /// Checks every action against the model's availability sets.
    pub fn new(model: &MdpModel, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != model.num_states() {
            return Err(Error::InvalidPolicy(format!(
                "{} actions for {} states",
                actions.len(),
                model.num_states()
            )));
        }
        if let Some((s, a)) = actions
            .iter()
            .enumerate()
            .find(|(s, a)| !model.is_available(*s, **a))
        {
            return Err(Error::InvalidPolicy(format!(
                "action {a} is not available in state {s}"
            )));
        }
        Ok(Policy(actions))
    }

    /// Uses the named action wherever it is available and the lowest-index
    /// available action everywhere else.
    pub fn fixed_action(model: &MdpModel, name: &str) -> Result<Self> {
        let action = model.action_index(name).ok_or_else(|| {
            Error::InvalidPolicy(format!(
                "unknown action `{name}`; model actions are {:?}",
                model.action_names()
            ))
        })?;
        let actions = (0..model.num_states())
            .map(|s| {
                if model.is_available(s, action) {
                    action
                } else {
                    model.choices(s)[0].action
                }
            })
            .collect();
        Ok(Policy(actions))
    }

    pub fn action(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The chosen [`Choice`] in every state.
    pub(crate) fn chosen<'m>(&self, model: &'m MdpModel, state: usize) -> &'m Choice {
        model
            .choice(state, self.0[state])
            .expect("policy validated against model")
    }

    pub(crate) fn check(&self, model: &MdpModel) -> Result<()> {
        Policy::new(model, self.0.clone()).map(|_| ())
    }
}

/// Expected discounted reward per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(Vec<f64>);

impl ValueFunction {
    pub fn new(values: Vec<f64>) -> Self {
        ValueFunction(values)
    }

    pub fn zeros(len: usize) -> Self {
        ValueFunction(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, state: usize) -> f64 {
        self.0[state]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Sup-norm distance.
    pub fn max_distance(&self, other: &ValueFunction) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(next: usize, reward: f64) -> Vec<Transition> {
        vec![Transition {
            next,
            probability: 1.0,
            reward,
        }]
    }

    #[test]
    fn expected_reward_examples() {
        let model = MdpModel::new(
            vec!["a".into(), "b".into()],
            vec![
                StateLabel {
                    machine: 0,
                    price: 0,
                },
                StateLabel {
                    machine: 1,
                    price: 0,
                },
            ],
            vec![
                vec![
                    Choice {
                        action: 0,
                        energy: 0.0,
                        transitions: point(1, -2.1),
                    },
                    Choice {
                        action: 1,
                        energy: 0.0,
                        transitions: vec![
                            Transition {
                                next: 0,
                                probability: 0.5,
                                reward: 0.0,
                            },
                            Transition {
                                next: 1,
                                probability: 0.5,
                                reward: -2.0,
                            },
                        ],
                    },
                ],
                vec![Choice {
                    action: 0,
                    energy: 0.0,
                    transitions: point(1, 0.0),
                }],
            ],
        )
        .unwrap();
        assert_eq!(model.expected_reward(0, 0).unwrap(), -2.1);
        assert_eq!(model.expected_reward(0, 1).unwrap(), -1.0);
        assert!(model.expected_reward(1, 1).is_err());
        assert_eq!(model.available(0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn rejects_invalid_models() {
        let label = vec![StateLabel {
            machine: 0,
            price: 0,
        }];
        assert!(MdpModel::new(vec!["a".into()], label.clone(), vec![vec![]]).is_err());
        let short = vec![vec![Choice {
            action: 0,
            energy: 0.0,
            transitions: vec![Transition {
                next: 0,
                probability: 0.9,
                reward: 0.0,
            }],
        }]];
        assert!(MdpModel::new(vec!["a".into()], label.clone(), short).is_err());
        let infinite = vec![vec![Choice {
            action: 0,
            energy: 0.0,
            transitions: point(0, f64::INFINITY),
        }]];
        assert!(MdpModel::new(vec!["a".into()], label.clone(), infinite).is_err());
        let unknown = vec![vec![Choice {
            action: 3,
            energy: 0.0,
            transitions: point(0, 0.0),
        }]];
        assert!(MdpModel::new(vec!["a".into()], label, unknown).is_err());
    }

    #[test]
    fn policy_respects_availability() {
        let model = MdpModel::new(
            vec!["a".into(), "b".into()],
            vec![StateLabel {
                machine: 0,
                price: 0,
            }],
            vec![vec![Choice {
                action: 1,
                energy: 0.0,
                transitions: point(0, 0.0),
            }]],
        )
        .unwrap();
        assert!(Policy::new(&model, vec![0]).is_err());
        assert!(Policy::new(&model, vec![1]).is_ok());
        assert_eq!(Policy::fixed_action(&model, "a").unwrap().actions(), &[1]);
        assert!(Policy::fixed_action(&model, "zzz").is_err());
    }
}
