//! Exogenous electricity price process.
//!
//! Prices move on a finite ladder of levels according to a stationary Markov
//! chain T(c'|c) that devices cannot influence.

use crate::error::{Error, Result};
use crate::markov::{Distribution, TransitionMatrix};

/// Default stopping tolerance (L1 residual) for stationary distributions.
pub const STATIONARY_TOL: f64 = 1e-12;
/// Default iteration cap for stationary distributions.
pub const STATIONARY_MAX_ITER: usize = 1_000_000;

/// Price levels together with their transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceChain {
    levels: Vec<f64>,
    transition: Vec<Vec<f64>>,
}

impl PriceChain {
    /// Row sum tolerance for the transition matrix.
    pub const ROW_TOLERANCE: f64 = 1e-12;

    /// Checks that `levels` is strictly increasing and `transition` is a
    /// row-stochastic square matrix of matching size.
    pub fn new(levels: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        validate_levels(&levels)?;
        let n = levels.len();
        if transition.len() != n {
            return Err(Error::InvalidChain(format!(
                "{} transition rows for {n} levels",
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidChain(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidChain(format!(
                    "row {i} contains {p}, not a probability"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > Self::ROW_TOLERANCE {
                return Err(Error::InvalidChain(format!("row {i} sums to {total}")));
            }
        }
        Ok(PriceChain { levels, transition })
    }

    /// Nearest-neighbour random walk on `levels`: up one level with `p_up`,
    /// down one with `p_down`, otherwise stay. At the top and bottom the
    /// unavailable move stays put instead.
    pub fn birth_death(levels: Vec<f64>, p_up: f64, p_down: f64) -> Result<Self> {
        validate_levels(&levels)?;
        for (name, p) in [("p_up", p_up), ("p_down", p_down)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidChain(format!(
                    "{name} = {p} is not a probability"
                )));
            }
        }
        if p_up + p_down > 1.0 {
            return Err(Error::InvalidChain(format!(
                "p_up + p_down = {} exceeds 1",
                p_up + p_down
            )));
        }
        let n = levels.len();
        let mut transition = vec![vec![0.0; n]; n];
        for (i, row) in transition.iter_mut().enumerate() {
            let up = if i + 1 < n { p_up } else { 0.0 };
            let down = if i > 0 { p_down } else { 0.0 };
            if i + 1 < n {
                row[i + 1] = up;
            }
            if i > 0 {
                row[i - 1] = down;
            }
            row[i] = 1.0 - up - down;
        }
        PriceChain::new(levels, transition)
    }

    /// `count` equidistant levels from `min` to `max` inclusive.
    pub fn equidistant_levels(min: f64, max: f64, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![min],
            _ => (0..count)
                .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// T(c'|c) for level indices `from`, `to`.
    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.transition[from][to]
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn to_matrix(&self) -> TransitionMatrix {
        TransitionMatrix::from_dense(&self.transition).expect("validated price chain")
    }

    /// Long-run distribution of price levels starting from the uniform
    /// distribution; for non-ergodic chains this is the Cesàro limit.
    pub fn stationary_distribution(&self, tol: f64, max_iter: usize) -> Result<Distribution> {
        let start = Distribution::uniform(self.len())?;
        self.to_matrix()
            .limiting_distribution(&start, tol, max_iter)
    }

    /// Σ πᵢ cᵢ under the stationary distribution.
    pub fn expected_price(&self) -> Result<f64> {
        let pi = self.stationary_distribution(STATIONARY_TOL, STATIONARY_MAX_ITER)?;
        Ok(pi.expectation(&self.levels))
    }
}

fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidChain("no price levels".into()));
    }
    if let Some(c) = levels.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidChain(format!(
            "price level {c} is not finite"
        )));
    }
    if let Some(w) = levels.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidChain(format!(
            "levels must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}
