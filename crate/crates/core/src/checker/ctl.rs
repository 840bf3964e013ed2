//! CTL invariant/reachability queries with counterexample and witness
//! traces.

use crate::markov::MarkovModel;

/// Outcome of a CTL query. A failed invariant carries a counterexample, a
/// satisfied reachability query a witness: the shortest path by
/// transition count from the initial state, ties broken by expanding the
/// smallest successor index first.
#[derive(Debug, Clone, PartialEq)]
pub struct CtlOutcome {
    pub holds: bool,
    pub trace: Option<Vec<usize>>,
}

fn sorted_successors(model: &MarkovModel) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); model.n_states()];
    for &(from, to, _) in &model.transitions {
        succ[from].push(to);
    }
    for row in &mut succ {
        row.sort_unstable();
        row.dedup();
    }
    succ
}

/// Shortest path from the initial state to any target state, if one is
/// reachable.
fn bfs_path(model: &MarkovModel, target: &[bool]) -> Option<Vec<usize>> {
    let succ = sorted_successors(model);
    let n = model.n_states();
    let mut parent = vec![usize::MAX; n];
    let init = model.initial;
    if target[init] {
        return Some(vec![init]);
    }
    let mut queue = std::collections::VecDeque::from([init]);
    parent[init] = init;
    while let Some(s) = queue.pop_front() {
        for &to in &succ[s] {
            if parent[to] != usize::MAX {
                continue;
            }
            parent[to] = s;
            if target[to] {
                let mut path = vec![to];
                let mut cur = to;
                while cur != init {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(to);
        }
    }
    None
}

/// `A [ G phi ]`: true iff no reachable state violates `phi`; otherwise
/// returns the shortest counterexample path to a violating state.
pub(crate) fn check_invariant(model: &MarkovModel, phi: &[bool]) -> CtlOutcome {
    let violating: Vec<bool> = phi.iter().map(|v| !v).collect();
    match bfs_path(model, &violating) {
        Some(path) => CtlOutcome {
            holds: false,
            trace: Some(path),
        },
        None => CtlOutcome {
            holds: true,
            trace: None,
        },
    }
}

/// `E [ F goal ]`: true iff a goal state is reachable; the witness is the
/// shortest path to one.
pub(crate) fn check_reach(model: &MarkovModel, goal: &[bool]) -> CtlOutcome {
    match bfs_path(model, goal) {
        Some(path) => CtlOutcome {
            holds: true,
            trace: Some(path),
        },
        None => CtlOutcome {
            holds: false,
            trace: None,
        },
    }
}

/// Per-state truth of `A [ G phi ]`: states from which no `!phi` state is
/// reachable.
pub(crate) fn invariant_states(model: &MarkovModel, phi: &[bool]) -> Vec<bool> {
    let reach = reach_states(model, &phi.iter().map(|v| !v).collect::<Vec<_>>());
    reach.into_iter().map(|r| !r).collect()
}

/// Per-state truth of `E [ F goal ]`: backward reachability.
pub(crate) fn reach_states(model: &MarkovModel, goal: &[bool]) -> Vec<bool> {
    let n = model.n_states();
    let mut predecessors = vec![Vec::new(); n];
    for &(from, to, _) in &model.transitions {
        predecessors[to].push(from);
    }
    let mut reach = goal.to_vec();
    let mut queue: Vec<usize> = (0..n).filter(|&s| goal[s]).collect();
    while let Some(s) = queue.pop() {
        for &p in &predecessors[s] {
            if !reach[p] {
                reach[p] = true;
                queue.push(p);
            }
        }
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::super::engine::test_chain as chain;
    use super::*;

    #[test]
    fn invariant_violated_at_timestep_11_yields_a_12_state_trace() {
        let n = 50;
        let mut transitions: Vec<(usize, usize, f64)> =
            (0..n - 1).map(|t| (t, t + 1, 1.0)).collect();
        transitions.push((n - 1, n - 1, 1.0));
        let model = chain(n, transitions);
        let mut phi = vec![true; n];
        phi[11] = false; // the flagged state
        let outcome = check_invariant(&model, &phi);
        assert!(!outcome.holds);
        let trace = outcome.trace.unwrap();
        assert_eq!(trace.len(), 12);
        assert_eq!(trace[0], 0);
        assert_eq!(*trace.last().unwrap(), 11);
    }

    #[test]
    fn trivially_true_invariant_has_no_trace() {
        let model = chain(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 2, 1.0)]);
        let outcome = check_invariant(&model, &[true, true, true]);
        assert!(outcome.holds);
        assert!(outcome.trace.is_none());
    }

    #[test]
    fn unreachable_goal_gives_false_without_trace() {
        let model = chain(3, vec![(0, 1, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let outcome = check_reach(&model, &[false, false, true]);
        assert!(!outcome.holds);
        assert!(outcome.trace.is_none());
    }

    #[test]
    fn witness_is_the_shortest_path_with_smallest_indices() {
        // Two routes to state 3: 0->3 direct is not present, 0->1->3 and
        // 0->2->3 are; BFS expands 1 before 2.
        let model = chain(
            4,
            vec![
                (0, 2, 1.0),
                (0, 1, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
                (3, 3, 1.0),
            ],
        );
        let outcome = check_reach(&model, &[false, false, false, true]);
        assert_eq!(outcome.trace.unwrap(), vec![0, 1, 3]);
    }

    #[test]
    fn traces_step_along_existing_transitions() {
        let model = chain(
            5,
            vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 3, 1.0),
                (3, 4, 1.0),
                (4, 4, 1.0),
            ],
        );
        let outcome = check_reach(&model, &[false, false, false, false, true]);
        let trace = outcome.trace.unwrap();
        for pair in trace.windows(2) {
            assert!(model
                .transitions
                .iter()
                .any(|&(f, t, _)| f == pair[0] && t == pair[1]));
        }
    }

    #[test]
    fn per_state_forms_agree_with_path_queries() {
        let model = chain(3, vec![(0, 1, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let goal = [false, true, false];
        assert_eq!(reach_states(&model, &goal), vec![true, true, false]);
        let phi = [true, false, true];
        assert_eq!(invariant_states(&model, &phi), vec![false, false, true]);
    }
}
