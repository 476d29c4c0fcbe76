//! Finite Markov chains: probability vectors, sparse transition matrices and
//! their long-run limits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`Distribution`].
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Largest chain whose limit is computed by dense linear solves.
pub const DIRECT_LIMIT: usize = 2_000;

/// A probability vector over a finite index set.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates that entries are non-negative and sum to one within [`MASS_TOLERANCE`].
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some((i, p)) = probabilities
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}, expected a non-negative number"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Distribution(probabilities))
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Ok(Distribution(vec![1.0 / len as f64; len]))
    }

    /// All mass on `index`.
    pub fn point(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidDistribution(format!(
                "point mass at {index} outside support of size {len}"
            )));
        }
        let mut p = vec![0.0; len];
        p[index] = 1.0;
        Ok(Distribution(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Σ pᵢ fᵢ
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// L1 distance, equal to twice the total variation distance.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        l1(&self.0, other)
    }
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Row-stochastic matrix stored as sparse rows of `(successor, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    /// Tolerance on each row sum.
    pub const ROW_TOLERANCE: f64 = 1e-12;

    pub fn from_sparse_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "transition matrix has no rows".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut total = 0.0;
            for &(j, p) in row {
                if j >= n {
                    return Err(Error::InvalidArgument(format!(
                        "row {i} points to state {j} outside 0..{n}"
                    )));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i},{j}) = {p} is not a probability"
                    )));
                }
                total += p;
            }
            if (total - 1.0).abs() > Self::ROW_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "row {i} sums to {total}, expected 1"
                )));
            }
        }
        Ok(TransitionMatrix { rows })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let sparse = rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, p)| **p != 0.0)
                    .map(|(j, p)| (j, *p))
                    .collect()
            })
            .collect();
        Self::from_sparse_rows(sparse)
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; n];
                for &(j, p) in row {
                    dense[j] += p;
                }
                dense
            })
            .collect()
    }

    /// Row vector times matrix: (pM)_j = Σ_i p_i M(i,j).
    pub fn left_multiply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        for (row, &mass) in self.rows.iter().zip(p) {
            if mass == 0.0 {
                continue;
            }
            for &(j, prob) in row {
                out[j] += mass * prob;
            }
        }
        out
    }

    /// Communicating class of every state, numbered from 0.
    pub fn communicating_classes(&self) -> Vec<usize> {
        let n = self.size();
        let successors: Vec<Vec<usize>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(j, _)| *j)
                    .collect()
            })
            .collect();
        let mut predecessors = vec![Vec::new(); n];
        for (i, succ) in successors.iter().enumerate() {
            for &j in succ {
                predecessors[j].push(i);
            }
        }

        // Kosaraju: finishing order on the graph, then sweep the reverse graph.
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for root in 0..n {
            if visited[root] {
                continue;
            }
            visited[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some((node, next_edge)) = stack.pop() {
                if let Some(&child) = successors[node].get(next_edge) {
                    stack.push((node, next_edge + 1));
                    if !visited[child] {
                        visited[child] = true;
                        stack.push((child, 0));
                    }
                } else {
                    order.push(node);
                }
            }
        }
        let mut class = vec![usize::MAX; n];
        let mut count = 0;
        for &root in order.iter().rev() {
            if class[root] != usize::MAX {
                continue;
            }
            class[root] = count;
            let mut stack = vec![root];
            while let Some(node) = stack.pop() {
                for &prev in &predecessors[node] {
                    if class[prev] == usize::MAX {
                        class[prev] = count;
                        stack.push(prev);
                    }
                }
            }
            count += 1;
        }
        class
    }

    /// True when every state reaches every other state.
    pub fn is_irreducible(&self) -> bool {
        self.communicating_classes().iter().all(|&c| c == 0)
    }

    /// Number of closed communicating classes. A chain with exactly one has
    /// a unique stationary distribution even if some states are transient.
    pub fn closed_class_count(&self) -> usize {
        let classes = self.communicating_classes();
        self.closed_flags(&classes)
            .into_iter()
            .filter(|&c| c)
            .count()
    }

    fn closed_flags(&self, classes: &[usize]) -> Vec<bool> {
        let count = classes.iter().max().map_or(0, |m| m + 1);
        let mut closed = vec![true; count];
        for (i, row) in self.rows.iter().enumerate() {
            if row
                .iter()
                .any(|&(j, p)| p > 0.0 && classes[j] != classes[i])
            {
                closed[classes[i]] = false;
            }
        }
        closed
    }

    /// Cesàro limit from `initial` by dense linear algebra: the stationary
    /// distribution of each closed class, weighted by the mass that starts in
    /// it or is absorbed into it from the transient states. `None` if a
    /// system is numerically singular.
    pub fn cesaro_limit(&self, initial: &Distribution) -> Option<Vec<f64>> {
        let n = self.size();
        let p0 = initial.probabilities();
        let classes = self.communicating_classes();
        let closed = self.closed_flags(&classes);
        let mut members = vec![Vec::new(); closed.len()];
        for (i, &c) in classes.iter().enumerate() {
            members[c].push(i);
        }

        let mut mass = vec![0.0; closed.len()];
        let transient: Vec<usize> = (0..n).filter(|&i| !closed[classes[i]]).collect();
        for i in (0..n).filter(|&i| closed[classes[i]]) {
            mass[classes[i]] += p0[i];
        }
        if !transient.is_empty() {
            let mut pos = vec![usize::MAX; n];
            for (k, &i) in transient.iter().enumerate() {
                pos[i] = k;
            }
            // y(I − Q) = p0 restricted to the transient states
            let t = transient.len();
            let mut a = DMatrix::<f64>::identity(t, t);
            for (k, &i) in transient.iter().enumerate() {
                for &(j, p) in &self.rows[i] {
                    if pos[j] != usize::MAX {
                        a[(pos[j], k)] -= p;
                    }
                }
            }
            let b = DVector::from_iterator(t, transient.iter().map(|&i| p0[i]));
            let y = a.lu().solve(&b)?;
            for (k, &i) in transient.iter().enumerate() {
                for &(j, p) in &self.rows[i] {
                    if pos[j] == usize::MAX {
                        mass[classes[j]] += y[k] * p;
                    }
                }
            }
        }

        let mut limit = vec![0.0; n];
        let mut local = vec![0; n];
        for (c, states) in members.iter().enumerate() {
            if !closed[c] || mass[c] <= 0.0 {
                continue;
            }
            let k = states.len();
            for (r, &i) in states.iter().enumerate() {
                local[i] = r;
            }
            // π(P − I) = 0 on the class, last equation replaced by Σπ = 1
            let mut a = DMatrix::<f64>::zeros(k, k);
            for (r, &i) in states.iter().enumerate() {
                for &(j, p) in &self.rows[i] {
                    if classes[j] == c {
                        a[(local[j], r)] += p;
                    }
                }
                a[(r, r)] -= 1.0;
            }
            for r in 0..k {
                a[(k - 1, r)] = 1.0;
            }
            let mut b = DVector::<f64>::zeros(k);
            b[k - 1] = 1.0;
            let pi = a.lu().solve(&b)?;
            for (r, &i) in states.iter().enumerate() {
                limit[i] = mass[c] * pi[r];
            }
        }
        let limit = normalized(limit);
        limit.iter().all(|x| x.is_finite()).then_some(limit)
    }

    /// Long-run limit of the chain started from `initial`.
    ///
    /// Iterates the averaged operator p ↦ ½(p + pM). It shares its fixed points
    /// with M, is aperiodic even when M is periodic, and from any start it
    /// converges to the Cesàro limit lim (1/n) Σₖ p Mᵏ, so reducible chains
    /// yield the limit reached from `initial`. Stops once ‖p − pM‖₁ ≤ `tol`.
    ///
    /// Chains with at most [`DIRECT_LIMIT`] states start the iteration from
    /// [`TransitionMatrix::cesaro_limit`], so slowly mixing chains converge
    /// in a handful of sweeps.
    pub fn limiting_distribution(
        &self,
        initial: &Distribution,
        tol: f64,
        max_iter: usize,
    ) -> Result<Distribution> {
        if initial.len() != self.size() {
            return Err(Error::InvalidDistribution(format!(
                "initial distribution has {} entries, chain has {} states",
                initial.len(),
                self.size()
            )));
        }
        let mut p = match self.size() <= DIRECT_LIMIT {
            true => self
                .cesaro_limit(initial)
                .unwrap_or_else(|| initial.probabilities().to_vec()),
            false => initial.probabilities().to_vec(),
        };
        let mut residual = f64::INFINITY;
        for _ in 0..=max_iter {
            let next = self.left_multiply(&p);
            residual = l1(&p, &next);
            if residual <= tol {
                return Ok(Distribution(normalized(p)));
            }
            for (pi, qi) in p.iter_mut().zip(&next) {
                *pi = 0.5 * (*pi + qi);
            }
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
        }
        Err(Error::NotConverged {
            what: "stationary distribution",
            iterations: max_iter,
            residual,
        })
    }
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::point(3, 3).is_err());
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(TransitionMatrix::from_dense(&[vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(TransitionMatrix::from_sparse_rows(vec![vec![(1, 1.0)]]).is_err());
    }

    #[test]
    fn periodic_chain_converges() {
        let flip = TransitionMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let start = Distribution::point(2, 0).unwrap();
        let p = flip.limiting_distribution(&start, 1e-12, 1000).unwrap();
        assert!((p.probabilities()[0] - 0.5).abs() < 1e-12);
        assert!(flip.is_irreducible());
        assert_eq!(flip.closed_class_count(), 1);
    }

    #[test]
    fn reducible_chain_keeps_initial_mass() {
        let id = TransitionMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let start = Distribution::new(vec![0.25, 0.75]).unwrap();
        let p = id.limiting_distribution(&start, 1e-12, 10).unwrap();
        assert_eq!(p.probabilities(), &[0.25, 0.75]);
        assert!(!id.is_irreducible());
        assert_eq!(id.closed_class_count(), 2);
    }

    #[test]
    fn absorbing_limit() {
        // state 0 drains into the absorbing state 1
        let m = TransitionMatrix::from_dense(&[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        let p = m
            .limiting_distribution(&Distribution::uniform(2).unwrap(), 1e-12, 10_000)
            .unwrap();
        assert!(p.probabilities()[0] < 1e-11);
        assert!(!m.is_irreducible());
        assert_eq!(m.closed_class_count(), 1);
    }

    #[test]
    fn non_convergence_reports_residual() {
        // too large for the direct start, so only the iteration runs
        let n = DIRECT_LIMIT + 1;
        let cycle =
            TransitionMatrix::from_sparse_rows((0..n).map(|i| vec![((i + 1) % n, 1.0)]).collect())
                .unwrap();
        let err = cycle
            .limiting_distribution(&Distribution::point(n, 0).unwrap(), 1e-12, 3)
            .unwrap_err();
        match err {
            Error::NotConverged { residual, .. } => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn absorption_splits_mass_between_closed_classes() {
        let m = TransitionMatrix::from_dense(&[
            vec![0.6, 0.3, 0.1],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let start = Distribution::point(3, 0).unwrap();
        let direct = m.cesaro_limit(&start).unwrap();
        assert!(l1(&direct, &[0.0, 0.75, 0.25]) < 1e-14);
        let p = m.limiting_distribution(&start, 1e-12, 10).unwrap();
        assert!(p.l1_distance(&[0.0, 0.75, 0.25]) < 1e-12);
    }

    #[test]
    fn slowly_draining_chain_converges() {
        // state 0 leaks into the absorbing state 1 at rate 1e-9
        let m = TransitionMatrix::from_dense(&[vec![1.0 - 1e-9, 1e-9], vec![0.0, 1.0]]).unwrap();
        let p = m
            .limiting_distribution(&Distribution::point(2, 0).unwrap(), 1e-12, 10)
            .unwrap();
        assert!(p.probabilities()[1] > 1.0 - 1e-12);
    }
}
