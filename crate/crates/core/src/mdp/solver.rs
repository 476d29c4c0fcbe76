//! Discounted-reward solvers.

use nalgebra::{DMatrix, DVector};

use super::{MdpModel, Policy, ValueFunction};
use crate::error::{Error, Result};

/// Actions whose Q-values differ by less than this (relative to
/// `max(1, |q|)`) are tied; ties go to the lowest action index.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Largest model evaluated with a dense LU solve; bigger models iterate.
pub const DIRECT_SOLVE_LIMIT: usize = 2_000;

/// Optimal values with their greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: ValueFunction,
    pub policy: Policy,
    pub iterations: usize,
}

fn check_discount(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "discount factor must lie in (0, 1), got {gamma}"
        )))
    }
}

fn check_values(model: &MdpModel, v: &[f64]) -> Result<()> {
    if v.len() != model.num_states() {
        return Err(Error::InvalidArgument(format!(
            "value function has {} entries, model has {} states",
            v.len(),
            model.num_states()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "value function is not finite".into(),
        ));
    }
    Ok(())
}

/// Backup of one state: maximal Q-value and the lowest-index action attaining it.
fn best_action(model: &MdpModel, v: &[f64], gamma: f64, state: usize) -> (f64, usize) {
    let choices = model.choices(state);
    let q: Vec<f64> = choices
        .iter()
        .map(|c| c.expected_reward() + gamma * c.expected_value(v))
        .collect();
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOLERANCE * best.abs().max(1.0);
    let pick = q
        .iter()
        .position(|&x| x >= best - slack)
        .expect("non-empty action set");
    (best, choices[pick].action)
}

fn backup_raw(model: &MdpModel, v: &[f64], gamma: f64) -> (Vec<f64>, Vec<usize>) {
    (0..model.num_states())
        .map(|s| best_action(model, v, gamma, s))
        .unzip()
}

/// One application of the Bellman optimality operator with its greedy policy.
pub fn bellman_backup(
    model: &MdpModel,
    v: &ValueFunction,
    gamma: f64,
) -> Result<(ValueFunction, Policy)> {
    check_discount(gamma)?;
    check_values(model, v.values())?;
    let (values, actions) = backup_raw(model, v.values(), gamma);
    Ok((ValueFunction(values), Policy(actions)))
}

/// ‖v − Bv‖∞.
pub fn bellman_residual(model: &MdpModel, v: &ValueFunction, gamma: f64) -> Result<f64> {
    let (backed_up, _) = bellman_backup(model, v, gamma)?;
    Ok(v.max_distance(&backed_up))
}

/// Value iteration from v = 0 with the span stopping rule.
///
/// Stops once sp(v_{k+1} − v_k) ≤ tol·(1−γ)/γ, which makes the greedy policy
/// tol-optimal, and returns the midpoint of the standard lower/upper value
/// bounds. The iterate is re-centred on state 0 after every sweep; the span
/// is shift-invariant so the stopping point is unchanged, but the numbers
/// stay of the order of the value spread rather than r/(1−γ).
pub fn value_iteration(
    model: &MdpModel,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    check_discount(gamma)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let threshold = tol * (1.0 - gamma) / gamma;
    let mut w = vec![0.0; model.num_states()];
    let mut span = f64::INFINITY;
    for iteration in 1..=max_iter {
        let (next, _) = backup_raw(model, &w, gamma);
        let (lo, hi) = next
            .iter()
            .zip(&w)
            .map(|(a, b)| a - b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                (lo.min(d), hi.max(d))
            });
        span = hi - lo;
        if span <= threshold {
            let shift = gamma / (1.0 - gamma) * 0.5 * (lo + hi);
            let values: Vec<f64> = next.iter().map(|x| x + shift).collect();
            let (_, actions) = backup_raw(model, &values, gamma);
            return Ok(Solution {
                values: ValueFunction(values),
                policy: Policy(actions),
                iterations: iteration,
            });
        }
        let anchor = next[0];
        w = next.into_iter().map(|x| x - anchor).collect();
    }
    Err(Error::NotConverged {
        what: "value iteration",
        iterations: max_iter,
        residual: span,
    })
}

/// Solves v = r_π + γ P_π v.
///
/// Models with at most [`DIRECT_SOLVE_LIMIT`] states use a dense LU solve and
/// ignore `tol`; larger ones iterate until successive iterates differ by at
/// most tol·(1−γ)/γ in sup norm.
pub fn policy_evaluation(
    model: &MdpModel,
    policy: &Policy,
    gamma: f64,
    tol: f64,
) -> Result<ValueFunction> {
    check_discount(gamma)?;
    policy.check(model)?;
    let n = model.num_states();
    let rewards: Vec<f64> = (0..n)
        .map(|s| policy.chosen(model, s).expected_reward())
        .collect();
    if n <= DIRECT_SOLVE_LIMIT {
        let mut a = DMatrix::<f64>::identity(n, n);
        for s in 0..n {
            for t in &policy.chosen(model, s).transitions {
                a[(s, t.next)] -= gamma * t.probability;
            }
        }
        let b = DVector::from_vec(rewards);
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidModel("policy evaluation system is singular".into()))?;
        return Ok(ValueFunction(x.iter().copied().collect()));
    }

    let threshold = tol * (1.0 - gamma) / gamma;
    let max_iter = iteration_bound(gamma, tol, model.max_abs_reward());
    let mut v = vec![0.0; n];
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let next: Vec<f64> = (0..n)
            .map(|s| rewards[s] + gamma * policy.chosen(model, s).expected_value(&v))
            .collect();
        delta = next
            .iter()
            .zip(&v)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
        v = next;
        if delta <= threshold {
            return Ok(ValueFunction(v));
        }
    }
    Err(Error::NotConverged {
        what: "policy evaluation",
        iterations: max_iter,
        residual: delta,
    })
}

fn iteration_bound(gamma: f64, tol: f64, scale: f64) -> usize {
    // γ^k · scale/(1−γ) ≤ tol·(1−γ)/γ, with headroom
    let target = (tol * (1.0 - gamma) * (1.0 - gamma) / (scale.max(1.0))).ln();
    let k = target / gamma.ln();
    (2.0 * k.max(1.0)).ceil() as usize + 100
}

/// Howard policy iteration starting from the myopic (one-step greedy) policy.
pub fn policy_iteration(model: &MdpModel, gamma: f64) -> Result<Solution> {
    check_discount(gamma)?;
    let n = model.num_states();
    let (_, mut actions) = backup_raw(model, &vec![0.0; n], gamma);
    let max_iter = 10 * n.max(1);
    for iteration in 1..=max_iter {
        let policy = Policy(actions);
        let values = policy_evaluation(model, &policy, gamma, 1e-12)?;
        let (_, improved) = backup_raw(model, values.values(), gamma);
        if improved == policy.0 {
            return Ok(Solution {
                values,
                policy,
                iterations: iteration,
            });
        }
        actions = improved;
    }
    Err(Error::NotConverged {
        what: "policy iteration",
        iterations: max_iter,
        residual: f64::NAN,
    })
}
