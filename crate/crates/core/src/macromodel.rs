//! Macroscopic population model of the swarm.
//!
//! The swarm is represented by expected robot counts per (state,
//! sojourn-step) compartment and evolved by synchronous difference
//! equations over the six-state machine. The update is linear in the
//! population and conserves the total by construction.
//!
//! Sojourn bookkeeping: a robot entering avoidance from a main state with
//! sojourn index `m` remains in avoidance for exactly `t_s` steps (its `k`
//! index runs 0..t_s-1) and then re-enters the main chain at index `m+1`.
//! Both the main-chain sojourn index and the avoidance memory index
//! saturate at `t_s - 1`; the dropoff chain's top compartment flows back
//! to searching in full.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lfsim::BehaviourState;
use crate::{Error, Result};

/// Transition probabilities and sojourn horizon of the population model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroParams {
    /// Probability of finding a carrier while searching.
    pub p_s: f64,
    /// Probability of picking up a carrier.
    pub p_p: f64,
    /// Probability of entering an avoidance state.
    pub p_a: f64,
    /// Sojourn horizon: the number of timesteps a robot can be tracked
    /// within one state.
    pub t_s: usize,
    /// Swarm size.
    pub n: f64,
}

impl MacroParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_s", self.p_s), ("p_p", self.p_p), ("p_a", self.p_a)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a probability, got {p}"
                )));
            }
        }
        if self.t_s == 0 {
            return Err(Error::InvalidConfig("t_s must be at least 1".into()));
        }
        if self.n < 1.0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: MacroParams = serde_json::from_str(&text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Expected robot counts per compartment.
///
/// Main chains are indexed by sojourn step `k`; avoidance chains by
/// (memory `m`, sojourn step `k`), both in `0..t_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector {
    pub searching: Vec<f64>,
    pub pickup: Vec<f64>,
    pub dropoff: Vec<f64>,
    pub avoid_s: Vec<Vec<f64>>,
    pub avoid_p: Vec<Vec<f64>>,
    pub avoid_d: Vec<Vec<f64>>,
}

impl PopulationVector {
    pub fn zero(t_s: usize) -> Self {
        PopulationVector {
            searching: vec![0.0; t_s],
            pickup: vec![0.0; t_s],
            dropoff: vec![0.0; t_s],
            avoid_s: vec![vec![0.0; t_s]; t_s],
            avoid_p: vec![vec![0.0; t_s]; t_s],
            avoid_d: vec![vec![0.0; t_s]; t_s],
        }
    }

    /// All mass searching with sojourn index 0: the initial swarm.
    pub fn all_searching(t_s: usize, n: f64) -> Self {
        let mut pop = Self::zero(t_s);
        pop.searching[0] = n;
        pop
    }

    pub fn t_s(&self) -> usize {
        self.searching.len()
    }

    pub fn total(&self) -> f64 {
        let mains: f64 = self
            .searching
            .iter()
            .chain(&self.pickup)
            .chain(&self.dropoff)
            .sum();
        let avoids: f64 = [&self.avoid_s, &self.avoid_p, &self.avoid_d]
            .into_iter()
            .flat_map(|grid| grid.iter().flatten())
            .sum();
        mains + avoids
    }

    /// Aggregate expected counts per behavioural state, in `STATE_ORDER`.
    pub fn state_totals(&self) -> [f64; 6] {
        let sum2 = |grid: &Vec<Vec<f64>>| grid.iter().flatten().sum::<f64>();
        [
            self.searching.iter().sum(),
            self.pickup.iter().sum(),
            self.dropoff.iter().sum(),
            sum2(&self.avoid_s),
            sum2(&self.avoid_p),
            sum2(&self.avoid_d),
        ]
    }
}

/// Drift tolerance for the conservation check inside `step`.
const CONSERVATION_TOL: f64 = 1e-9;

fn step_main_chain(
    old_main: &[f64],
    old_avoid: &[Vec<f64>],
    new_main: &mut [f64],
    new_avoid: &mut [Vec<f64>],
    exit_prob: f64,
    p_a: f64,
    exit_inflow: &mut f64,
) {
    let t_s = old_main.len();
    let top = t_s - 1;
    for j in 0..t_s {
        let mass = old_main[j];
        // Into avoidance, memory = current sojourn index.
        new_avoid[j][0] += p_a * mass;
        // Out of the chain.
        *exit_inflow += (1.0 - p_a) * exit_prob * mass;
        // Stay in the chain; the top compartment saturates.
        let stay = (1.0 - p_a) * (1.0 - exit_prob) * mass;
        new_main[(j + 1).min(top)] += stay;
    }
    step_avoidance(old_avoid, new_main, new_avoid);
}

/// Shifts the avoidance grid one sojourn step and re-enters completed mass
/// into the main chain at index m+1 (saturating).
fn step_avoidance(old_avoid: &[Vec<f64>], new_main: &mut [f64], new_avoid: &mut [Vec<f64>]) {
    let t_s = new_main.len();
    let top = t_s - 1;
    for m in 0..t_s {
        for k in 0..t_s {
            let mass = old_avoid[m][k];
            if mass == 0.0 {
                continue;
            }
            if k == top {
                new_main[(m + 1).min(top)] += mass;
            } else {
                new_avoid[(m + 1).min(top)][k + 1] += mass;
            }
        }
    }
}

/// One synchronous update of the population.
///
/// Errors if the update fails to conserve the total (a closure bug).
pub fn step(pop: &PopulationVector, params: &MacroParams) -> Result<PopulationVector> {
    params.validate()?;
    let t_s = pop.t_s();
    if t_s != params.t_s {
        return Err(Error::InvalidConfig(format!(
            "population horizon {t_s} does not match params t_s {}",
            params.t_s
        )));
    }
    let top = t_s - 1;
    let mut new = PopulationVector::zero(t_s);

    // Dropoff completion feeds searching in full.
    new.searching[0] += pop.dropoff[top];
    let mut pickup_inflow = 0.0;
    let mut dropoff_inflow = 0.0;
    step_main_chain(
        &pop.searching,
        &pop.avoid_s,
        &mut new.searching,
        &mut new.avoid_s,
        params.p_s,
        params.p_a,
        &mut pickup_inflow,
    );
    step_main_chain(
        &pop.pickup,
        &pop.avoid_p,
        &mut new.pickup,
        &mut new.avoid_p,
        params.p_p,
        params.p_a,
        &mut dropoff_inflow,
    );
    // Dropoff chain: no further exit probability; the top compartment was
    // already routed to searching, lower compartments avoid or advance.
    for j in 0..top {
        let mass = pop.dropoff[j];
        new.avoid_d[j][0] += params.p_a * mass;
        new.dropoff[j + 1] += (1.0 - params.p_a) * mass;
    }
    step_avoidance(&pop.avoid_d, &mut new.dropoff, &mut new.avoid_d);
    new.pickup[0] += pickup_inflow;
    new.dropoff[0] += dropoff_inflow;

    let before = pop.total();
    let after = new.total();
    let tol = CONSERVATION_TOL * before.abs().max(1.0);
    if (after - before).abs() > tol {
        return Err(Error::ModelInvariant(format!(
            "population update lost mass: {before} -> {after}"
        )));
    }
    Ok(new)
}

/// Repeated `step`; returns the trajectory including the initial vector.
pub fn evolve(
    pop0: &PopulationVector,
    params: &MacroParams,
    steps: usize,
) -> Result<Vec<PopulationVector>> {
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(pop0.clone());
    for _ in 0..steps {
        let next = step(trajectory.last().unwrap(), params)?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Frequency estimates of the model parameters from a simulation campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub params: MacroParams,
    pub main_steps: usize,
    pub avoidance_entries: usize,
    pub searching_decisions: usize,
    pub pickup_decisions: usize,
}

/// Maximum-likelihood frequency estimation of (P_a, P_s, P_p, T_s) from
/// the per-robot state traces of a campaign.
///
/// `t_s_cap` bounds the sojourn horizon so the population vector stays
/// tractable.
pub fn estimate_params(campaign: &Path, t_s_cap: usize) -> Result<ParamEstimate> {
    let traces = read_campaign_state_traces(campaign)?;
    if traces.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no trial state traces under {}",
            campaign.display()
        )));
    }
    let mut n_robots = 0usize;
    let mut main_steps = 0usize;
    let mut avoidance_entries = 0usize;
    let mut searching_decisions = 0usize;
    let mut searching_to_pickup = 0usize;
    let mut pickup_decisions = 0usize;
    let mut pickup_to_dropoff = 0usize;
    let mut max_sojourn = 1usize;
    for trial in &traces {
        n_robots = n_robots.max(trial.len());
        for robot in trial {
            let mut run = 1usize;
            for w in robot.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a == b {
                    run += 1;
                } else {
                    max_sojourn = max_sojourn.max(run);
                    run = 1;
                }
                if !a.is_avoidance() {
                    main_steps += 1;
                    if b.is_avoidance() {
                        avoidance_entries += 1;
                    }
                }
                match a {
                    BehaviourState::Searching => {
                        if matches!(b, BehaviourState::Searching | BehaviourState::Pickup) {
                            searching_decisions += 1;
                            if b == BehaviourState::Pickup {
                                searching_to_pickup += 1;
                            }
                        }
                    }
                    BehaviourState::Pickup => {
                        if matches!(b, BehaviourState::Pickup | BehaviourState::Dropoff) {
                            pickup_decisions += 1;
                            if b == BehaviourState::Dropoff {
                                pickup_to_dropoff += 1;
                            }
                        }
                    }
                    _ => {}
                }
            }
            max_sojourn = max_sojourn.max(run);
        }
    }
    if main_steps == 0 {
        return Err(Error::UndefinedParameter(
            "p_a: no main-state steps observed".into(),
        ));
    }
    if searching_decisions == 0 {
        return Err(Error::UndefinedParameter(
            "p_s: no searching steps observed".into(),
        ));
    }
    if pickup_decisions == 0 {
        return Err(Error::UndefinedParameter(
            "p_p: the pickup state never occurs".into(),
        ));
    }
    let params = MacroParams {
        p_a: avoidance_entries as f64 / main_steps as f64,
        p_s: searching_to_pickup as f64 / searching_decisions as f64,
        p_p: pickup_to_dropoff as f64 / pickup_decisions as f64,
        t_s: max_sojourn.min(t_s_cap).max(1),
        n: n_robots as f64,
    };
    Ok(ParamEstimate {
        params,
        main_steps,
        avoidance_entries,
        searching_decisions,
        pickup_decisions,
    })
}

/// Per-trial, per-robot behavioural state sequences from `states.csv`.
pub fn read_campaign_state_traces(campaign: &Path) -> Result<Vec<Vec<Vec<BehaviourState>>>> {
    let mut trial_dirs: Vec<_> = std::fs::read_dir(campaign)
        .map_err(|e| Error::io(campaign, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("trial_"))
        })
        .collect();
    trial_dirs.sort();
    let mut trials = Vec::with_capacity(trial_dirs.len());
    for dir in trial_dirs {
        trials.push(read_state_trace(&dir.join("states.csv"))?);
    }
    Ok(trials)
}

/// Reads one `states.csv` into per-robot state sequences.
pub fn read_state_trace(path: &Path) -> Result<Vec<Vec<BehaviourState>>> {
    let mut reader = csv::Reader::from_path(path).map_err(Error::from)?;
    let mut robots: Vec<Vec<BehaviourState>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::schema(path, "expected columns t,robot_id,state"));
        }
        let id: usize = record[1]
            .parse()
            .map_err(|_| Error::schema(path, format!("bad robot_id {}", &record[1])))?;
        let state = BehaviourState::parse(&record[2])
            .ok_or_else(|| Error::schema(path, format!("unknown state {}", &record[2])))?;
        if robots.len() <= id {
            robots.resize(id + 1, Vec::new());
        }
        robots[id].push(state);
    }
    Ok(robots)
}

/// Writes an evolve trajectory as CSV of per-state expected counts.
pub fn write_trajectory_csv(path: &Path, trajectory: &[PopulationVector]) -> Result<()> {
    let mut out = String::from("step,searching,pickup,dropoff,avoid_s,avoid_p,avoid_d\n");
    for (i, pop) in trajectory.iter().enumerate() {
        let t = pop.state_totals();
        out.push_str(&format!(
            "{i},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            t[0], t[1], t[2], t[3], t[4], t[5]
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
