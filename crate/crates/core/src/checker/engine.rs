//! Numerical core: uniformization for transient quantities, dense linear
//! solves for unbounded reachability and steady state.

use crate::markov::MarkovModel;
use crate::{Error, Result};

/// Target truncation error for transient sums.
pub const TOLERANCE: f64 = 1e-9;

pub(crate) struct Engine<'m> {
    pub model: &'m MarkovModel,
    /// Uniformized jump chain: rows of (target, probability), including
    /// the self-residual `1 - exit/lambda`.
    rows: Vec<Vec<(usize, f64)>>,
    /// Embedded jump chain: rate / exit-rate.
    embedded: Vec<Vec<(usize, f64)>>,
    lambda: f64,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m MarkovModel) -> Self {
        let n = model.n_states();
        let exit = model.exit_rates();
        let lambda = exit.iter().cloned().fold(f64::MIN, f64::max).max(1e-12);
        let mut rows = vec![Vec::new(); n];
        let mut embedded = vec![Vec::new(); n];
        for &(from, to, rate) in &model.transitions {
            rows[from].push((to, rate / lambda));
            embedded[from].push((to, rate / exit[from]));
        }
        for (s, row) in rows.iter_mut().enumerate() {
            let residual = 1.0 - exit[s] / lambda;
            if residual > 1e-15 {
                row.push((s, residual));
            }
        }
        Engine {
            model,
            rows,
            embedded,
            lambda,
        }
    }

    pub fn n(&self) -> usize {
        self.model.n_states()
    }

    /// Successor lists of the embedded chain.
    pub fn embedded_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.embedded
    }

    /// One backward step of the uniformized chain; absorbing states keep
    /// their value.
    fn step(&self, absorbing: &[bool], w: &[f64]) -> Vec<f64> {
        (0..w.len())
            .map(|s| {
                if absorbing[s] {
                    w[s]
                } else {
                    self.rows[s].iter().map(|&(to, p)| p * w[to]).sum()
                }
            })
            .collect()
    }

    /// `sum_k pmf(lambda t; k) * P^k w0` per state: the expected value of
    /// `w0` under the state distribution at time `t`, viewed backward.
    pub fn transient_backward(
        &self,
        absorbing: &[bool],
        w0: Vec<f64>,
        t: f64,
    ) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Ok(w0);
        }
        let lt = self.lambda * t;
        let ln_lt = lt.ln();
        let k_max = (lt + 12.0 * lt.sqrt() + 200.0) as usize;
        let mut result = vec![0.0; w0.len()];
        let mut w = w0;
        let mut cum = 0.0;
        let mut ln_fact = 0.0;
        for k in 0..=k_max {
            if k > 0 {
                ln_fact += (k as f64).ln();
                w = self.step(absorbing, &w);
            }
            let pmf = (-lt + k as f64 * ln_lt - ln_fact).exp();
            for (r, v) in result.iter_mut().zip(&w) {
                *r += pmf * v;
            }
            cum += pmf;
            if cum >= 1.0 - TOLERANCE && k as f64 >= lt {
                // Renormalize the truncated distribution so the lost
                // mass cannot bias values (absorbing states stay exact).
                for v in &mut result {
                    *v /= cum;
                }
                return Ok(result);
            }
        }
        Err(Error::NonConvergence {
            achieved: 1.0 - cum,
            requested: TOLERANCE,
        })
    }

    /// Expected accumulated rate reward up to `t` per initial state:
    /// `sum_k c_k * P^k r` with `c_k = (1 - PoissonCdf(lambda t; k)) / lambda`.
    pub fn cumulative_backward(&self, r: Vec<f64>, t: f64) -> Result<Vec<f64>> {
        let r_max = r.iter().cloned().fold(0.0, f64::max);
        if t == 0.0 || r_max == 0.0 {
            return Ok(vec![0.0; r.len()]);
        }
        let absorbing = vec![false; r.len()];
        let lt = self.lambda * t;
        let ln_lt = lt.ln();
        let k_max = (lt + 12.0 * lt.sqrt() + 200.0) as usize;
        let mut result = vec![0.0; r.len()];
        let mut w = r;
        let mut cdf = 0.0;
        let mut c_sum = 0.0;
        let mut ln_fact = 0.0;
        for k in 0..=k_max {
            if k > 0 {
                ln_fact += (k as f64).ln();
                w = self.step(&absorbing, &w);
            }
            let pmf = (-lt + k as f64 * ln_lt - ln_fact).exp();
            cdf += pmf;
            let c = (1.0 - cdf).max(0.0) / self.lambda;
            for (res, v) in result.iter_mut().zip(&w) {
                *res += c * v;
            }
            c_sum += c;
            if (t - c_sum) * r_max < TOLERANCE {
                return Ok(result);
            }
        }
        Err(Error::NonConvergence {
            achieved: (t - c_sum) * r_max,
            requested: TOLERANCE,
        })
    }

    /// Probability of `lhs U rhs` (no time bound) per state, via backward
    /// reachability plus a dense linear solve on the embedded chain.
    pub fn unbounded_until(&self, lhs: &[bool], rhs: &[bool]) -> Result<Vec<f64>> {
        let n = self.n();
        // States that can reach rhs through lhs states.
        let mut predecessors = vec![Vec::new(); n];
        for (s, row) in self.embedded.iter().enumerate() {
            for &(to, _) in row {
                predecessors[to].push(s);
            }
        }
        let mut can_reach = rhs.to_vec();
        let mut queue: Vec<usize> = (0..n).filter(|&s| rhs[s]).collect();
        while let Some(s) = queue.pop() {
            for &p in &predecessors[s] {
                if !can_reach[p] && lhs[p] && !rhs[p] {
                    can_reach[p] = true;
                    queue.push(p);
                }
            }
        }
        let unknown: Vec<usize> = (0..n)
            .filter(|&s| can_reach[s] && !rhs[s])
            .collect();
        let mut value = vec![0.0; n];
        for s in 0..n {
            if rhs[s] {
                value[s] = 1.0;
            }
        }
        if unknown.is_empty() {
            return Ok(value);
        }
        let index: std::collections::HashMap<usize, usize> =
            unknown.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let m = unknown.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for (i, &s) in unknown.iter().enumerate() {
            a[i][i] = 1.0;
            for &(to, p) in &self.embedded[s] {
                if rhs[to] {
                    b[i] += p;
                } else if let Some(&j) = index.get(&to) {
                    a[i][j] -= p;
                }
            }
        }
        let x = solve_dense(a, b)?;
        for (i, &s) in unknown.iter().enumerate() {
            value[s] = x[i].clamp(0.0, 1.0);
        }
        Ok(value)
    }

    /// Long-run average rate reward per initial state: reachability
    /// probabilities into each bottom strongly-connected component times
    /// its stationary gain.
    pub fn steady_values(&self, r: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let bsccs = bottom_sccs(&self.embedded, n);
        let mut value = vec![0.0; n];
        let all = vec![true; n];
        for class in &bsccs {
            let gain = self.bscc_gain(class, r)?;
            if gain == 0.0 {
                continue;
            }
            let mut in_class = vec![false; n];
            for &s in class {
                in_class[s] = true;
            }
            let reach = self.unbounded_until(&all, &in_class)?;
            for s in 0..n {
                value[s] += reach[s] * gain;
            }
        }
        Ok(value)
    }

    /// Expected reward under the stationary distribution of one closed
    /// class.
    fn bscc_gain(&self, class: &[usize], r: &[f64]) -> Result<f64> {
        if class.len() == 1 {
            return Ok(r[class[0]]);
        }
        let m = class.len();
        let index: std::collections::HashMap<usize, usize> =
            class.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        // Solve pi Q = 0 with sum(pi) = 1 over the class generator.
        let mut a = vec![vec![0.0; m]; m];
        for (i, &s) in class.iter().enumerate() {
            for &(from, to, rate) in &self.model.transitions {
                if from == s && from != to {
                    if let Some(&j) = index.get(&to) {
                        // Column i of Q^T picks up the outgoing rates.
                        a[j][i] += rate;
                        a[i][i] -= rate;
                    }
                }
            }
        }
        for cell in a[m - 1].iter_mut() {
            *cell = 1.0;
        }
        let mut b = vec![0.0; m];
        b[m - 1] = 1.0;
        let pi = solve_dense(a, b)?;
        Ok(class.iter().zip(&pi).map(|(&s, p)| p * r[s]).sum())
    }
}

/// Bottom strongly-connected components of a successor-list graph
/// (Kosaraju, iterative).
pub(crate) fn bottom_sccs(rows: &[Vec<(usize, f64)>], n: usize) -> Vec<Vec<usize>> {
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&mut (s, ref mut next)) = stack.last_mut() {
            if *next < rows[s].len() {
                let to = rows[s][*next].0;
                *next += 1;
                if !visited[to] {
                    visited[to] = true;
                    stack.push((to, 0));
                }
            } else {
                order.push(s);
                stack.pop();
            }
        }
    }
    let mut reverse = vec![Vec::new(); n];
    for (s, row) in rows.iter().enumerate() {
        for &(to, _) in row {
            reverse[to].push(s);
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut n_components = 0;
    for &start in order.iter().rev() {
        if component[start] != usize::MAX {
            continue;
        }
        let id = n_components;
        n_components += 1;
        let mut stack = vec![start];
        component[start] = id;
        while let Some(s) = stack.pop() {
            for &p in &reverse[s] {
                if component[p] == usize::MAX {
                    component[p] = id;
                    stack.push(p);
                }
            }
        }
    }
    let mut is_bottom = vec![true; n_components];
    for (s, row) in rows.iter().enumerate() {
        for &(to, _) in row {
            if component[s] != component[to] {
                is_bottom[component[s]] = false;
            }
        }
    }
    let mut classes = vec![Vec::new(); n_components];
    for s in 0..n {
        classes[component[s]].push(s);
    }
    classes
        .into_iter()
        .enumerate()
        .filter(|(id, _)| is_bottom[*id])
        .map(|(_, c)| c)
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::ModelInvariant(
                "singular linear system in reachability solve".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Minimal hand-built chain for checker tests.
#[cfg(test)]
pub(crate) fn test_chain(n: usize, transitions: Vec<(usize, usize, f64)>) -> MarkovModel {
    use std::collections::BTreeMap;
    MarkovModel {
        states: (0..n)
            .map(|i| {
                let mut vars = BTreeMap::new();
                vars.insert("timestep".to_string(), i as i64);
                crate::markov::StateValuation { vars }
            })
            .collect(),
        transitions,
        initial: 0,
        labels: BTreeMap::new(),
        rewards: BTreeMap::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use super::test_chain as chain;

    #[test]
    fn two_state_reachability_matches_the_closed_form() {
        let model = chain(2, vec![(0, 1, 1.0), (1, 1, 1.0)]);
        let engine = Engine::new(&model);
        let absorbing = vec![false, true];
        let v = engine
            .transient_backward(&absorbing, vec![0.0, 1.0], 1.0)
            .unwrap();
        assert_relative_eq!(v[0], 1.0 - (-1.0f64).exp(), epsilon = 1e-6);
        assert_relative_eq!(v[1], 1.0);
    }

    #[test]
    fn cumulative_reward_matches_expected_sojourn() {
        // Reward 1 in state 0, rate 1 to absorbing state 1: expected
        // accumulated reward up to T is 1 - e^{-T}.
        let model = chain(2, vec![(0, 1, 1.0), (1, 1, 1.0)]);
        let engine = Engine::new(&model);
        let v = engine.cumulative_backward(vec![1.0, 0.0], 1.0).unwrap();
        assert_relative_eq!(v[0], 1.0 - (-1.0f64).exp(), epsilon = 1e-6);
        let v = engine.cumulative_backward(vec![1.0, 0.0], 60.0).unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn unbounded_reachability_solves_a_branching_chain() {
        // 0 -> goal 1 with rate 1, 0 -> sink 2 with rate 3.
        let model = chain(
            3,
            vec![(0, 1, 1.0), (0, 2, 3.0), (1, 1, 1.0), (2, 2, 1.0)],
        );
        let engine = Engine::new(&model);
        let lhs = vec![true, true, true];
        let rhs = vec![false, true, false];
        let v = engine.unbounded_until(&lhs, &rhs).unwrap();
        assert_relative_eq!(v[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(v[1], 1.0);
        assert_relative_eq!(v[2], 0.0);
    }

    #[test]
    fn steady_state_of_a_two_state_cycle() {
        // Rates 2 (0->1) and 1 (1->0): stationary (1/3, 2/3).
        let model = chain(2, vec![(0, 1, 2.0), (1, 0, 1.0)]);
        let engine = Engine::new(&model);
        let v = engine.steady_values(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(v[0], 1.0 / 3.0, epsilon = 1e-9);
        assert_relative_eq!(v[1], 1.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn bottom_sccs_of_a_fork() {
        let model = chain(
            3,
            vec![(0, 1, 1.0), (0, 2, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
        );
        let engine = Engine::new(&model);
        let mut bsccs = bottom_sccs(engine.embedded_rows(), 3);
        bsccs.sort();
        assert_eq!(bsccs, vec![vec![1], vec![2]]);
    }

    #[test]
    fn dense_solver_handles_a_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let b = vec![3.0, 5.0];
        let x = solve_dense(a, b).unwrap();
        assert_relative_eq!(x[0], 0.8, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.4, epsilon = 1e-12);
    }

    #[test]
    fn singular_system_is_reported() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(solve_dense(a, vec![1.0, 2.0]).is_err());
    }
}
