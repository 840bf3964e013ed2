//! Labelled continuous-time Markov chains built from discretized series.
//!
//! The chains are unrolled in time: one state per sampled timestep plus an
//! absorbing terminal state, connected by unit-rate transitions so that
//! model time units equal sampled timesteps. Zone flags become labels and
//! the main/avoidance occupancy probabilities become rate rewards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::lfsim::BehaviourState;
use crate::pipeline::DiscreteSeries;
use crate::{Error, Result};

/// Variable valuation of one CTMC state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateValuation {
    pub vars: BTreeMap<String, i64>,
}

impl StateValuation {
    pub fn get(&self, name: &str) -> Option<i64> {
        self.vars.get(name).copied()
    }
}

/// Labelled CTMC with reward structures.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    pub states: Vec<StateValuation>,
    /// (from, to, rate), rate strictly positive.
    pub transitions: Vec<(usize, usize, f64)>,
    pub initial: usize,
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    /// name -> per-state rate reward.
    pub rewards: BTreeMap<String, Vec<f64>>,
}

impl MarkovModel {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Outgoing transitions grouped per state.
    pub fn outgoing(&self) -> Vec<Vec<(usize, f64)>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for &(from, to, rate) in &self.transitions {
            out[from].push((to, rate));
        }
        out
    }

    /// Exit rate per state.
    pub fn exit_rates(&self) -> Vec<f64> {
        let mut rates = vec![0.0; self.states.len()];
        for &(from, _, rate) in &self.transitions {
            rates[from] += rate;
        }
        rates
    }

    pub fn has_label(&self, label: &str, state: usize) -> bool {
        self.labels.get(label).is_some_and(|set| set.contains(&state))
    }

    /// Domain of a state variable over all states, if every state defines
    /// it.
    pub fn var_range(&self, name: &str) -> Option<(i64, i64)> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        let mut n = 0usize;
        for s in &self.states {
            if let Some(v) = s.get(name) {
                lo = lo.min(v);
                hi = hi.max(v);
                n += 1;
            }
        }
        (n > 0).then_some((lo, hi))
    }
}

/// How to unroll a discrete series into a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildMode {
    /// One chain per behavioural state: state variables `s` (fixed id of
    /// the channel), `l` (level at that timestep) and `timestep`.
    PerStateChain(BehaviourState),
    /// One chain carrying the level vector of all six channels as
    /// `l1`..`l6` plus `timestep`.
    Joint,
}

const MAIN_CHANNELS: std::ops::Range<usize> = 0..3;
const AVOID_CHANNELS: std::ops::Range<usize> = 3..6;

/// Builds the labelled chain for a discretized, averaged series.
pub fn build_model(series: &DiscreteSeries, mode: BuildMode) -> Result<MarkovModel> {
    if series.is_empty() {
        return Err(Error::EmptyInput("cannot build a model from an empty series".into()));
    }
    let n = series.len();
    let mut states = Vec::with_capacity(n + 1);
    let mut labels: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for name in [
        "unsafe_red",
        "unsafe_fireexitsblocked",
        "unsafe_amber",
        "unsafe_amber_critical",
        "density_violation",
    ] {
        labels.insert(name.to_string(), BTreeSet::new());
    }
    let mut main_reward = Vec::with_capacity(n + 1);
    let mut avoid_reward = Vec::with_capacity(n + 1);

    for (idx, sample) in series.samples.iter().enumerate() {
        let mut vars = BTreeMap::new();
        vars.insert("timestep".to_string(), idx as i64);
        match mode {
            BuildMode::PerStateChain(channel) => {
                vars.insert("s".to_string(), channel.index() as i64);
                if let Some(levels) = &sample.levels {
                    vars.insert("l".to_string(), levels[channel.index()] as i64);
                }
            }
            BuildMode::Joint => {
                if let Some(levels) = &sample.levels {
                    for (c, level) in levels.iter().enumerate() {
                        vars.insert(format!("l{}", c + 1), *level as i64);
                    }
                }
            }
        }
        states.push(StateValuation { vars });
        if sample.red_occupied {
            labels.get_mut("unsafe_red").unwrap().insert(idx);
            labels.get_mut("unsafe_fireexitsblocked").unwrap().insert(idx);
        }
        if sample.amber_single {
            labels.get_mut("unsafe_amber").unwrap().insert(idx);
        }
        if sample.amber_critical {
            labels.get_mut("unsafe_amber_critical").unwrap().insert(idx);
        }
        if sample.density_violation {
            labels.get_mut("density_violation").unwrap().insert(idx);
        }
        let probs = series.probabilities.get(idx).copied().flatten();
        let (main, avoid) = match (mode, probs) {
            (BuildMode::PerStateChain(channel), Some(p)) => {
                let c = channel.index();
                if MAIN_CHANNELS.contains(&c) {
                    (p[c], 0.0)
                } else {
                    (0.0, p[c])
                }
            }
            (BuildMode::Joint, Some(p)) => (
                p[MAIN_CHANNELS].iter().sum(),
                p[AVOID_CHANNELS].iter().sum(),
            ),
            (_, None) => (0.0, 0.0),
        };
        main_reward.push(main);
        avoid_reward.push(avoid);
    }

    // Absorbing terminal state closes the chain.
    let terminal = states.len();
    let mut vars = BTreeMap::new();
    vars.insert("timestep".to_string(), terminal as i64);
    if let BuildMode::PerStateChain(channel) = mode {
        vars.insert("s".to_string(), channel.index() as i64);
    }
    states.push(StateValuation { vars });
    main_reward.push(0.0);
    avoid_reward.push(0.0);

    let mut transitions: Vec<(usize, usize, f64)> =
        (0..n).map(|t| (t, t + 1, 1.0)).collect();
    transitions.push((terminal, terminal, 1.0));

    let mut rewards = BTreeMap::new();
    rewards.insert("main_states".to_string(), main_reward);
    rewards.insert("avoidance_states".to_string(), avoid_reward);

    let model = MarkovModel {
        states,
        transitions,
        initial: 0,
        labels,
        rewards,
    };
    let diagnostics = validate_model(&model);
    if !diagnostics.is_empty() {
        return Err(Error::ModelInvariant(diagnostics.join("; ")));
    }
    Ok(model)
}

/// Checks the model invariants; an empty list means valid.
pub fn validate_model(model: &MarkovModel) -> Vec<String> {
    let mut issues = Vec::new();
    let n = model.n_states();
    if n == 0 {
        issues.push("model has no states".to_string());
        return issues;
    }
    if model.initial >= n {
        issues.push(format!("initial state {} out of range", model.initial));
    }
    let mut has_outgoing = vec![false; n];
    for &(from, to, rate) in &model.transitions {
        if from >= n || to >= n {
            issues.push(format!("transition {from}->{to} references missing state"));
            continue;
        }
        if !(rate > 0.0) || !rate.is_finite() {
            issues.push(format!("transition {from}->{to} has non-positive rate {rate}"));
        }
        has_outgoing[from] = true;
    }
    for (i, ok) in has_outgoing.iter().enumerate() {
        if !ok {
            issues.push(format!("state {i} has no outgoing transition"));
        }
    }
    for (name, set) in &model.labels {
        for idx in set {
            if *idx >= n {
                issues.push(format!("label {name} references missing state {idx}"));
            }
        }
    }
    for (name, values) in &model.rewards {
        if values.len() != n {
            issues.push(format!(
                "reward structure {name} has {} entries for {n} states",
                values.len()
            ));
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            issues.push(format!("reward structure {name} has a negative entry"));
        }
    }
    issues
}

const FORMAT_HEADER: &str = "SWARMVERIFY-MODEL 1";

/// Serializes the model to the sectioned line-oriented text format.
pub fn export_model(model: &MarkovModel, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(out, "STATES {}", model.n_states()).unwrap();
    for (i, state) in model.states.iter().enumerate() {
        write!(out, "{i}").unwrap();
        for (name, value) in &state.vars {
            write!(out, " {name}={value}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "INIT {}", model.initial).unwrap();
    writeln!(out, "TRANSITIONS {}", model.transitions.len()).unwrap();
    for (from, to, rate) in &model.transitions {
        writeln!(out, "{from} {to} {rate}").unwrap();
    }
    writeln!(out, "LABELS {}", model.labels.len()).unwrap();
    for (name, set) in &model.labels {
        write!(out, "{name}:").unwrap();
        for idx in set {
            write!(out, " {idx}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "REWARDS {}", model.rewards.len()).unwrap();
    for (name, values) in &model.rewards {
        write!(out, "{name}:").unwrap();
        for (idx, value) in values.iter().enumerate() {
            if *value != 0.0 {
                write!(out, " {idx}={value}").unwrap();
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn section_count(path: &Path, line: Option<&str>, keyword: &str) -> Result<usize> {
    let line = line.ok_or_else(|| Error::schema(path, format!("missing {keyword} section")))?;
    let rest = line
        .strip_prefix(keyword)
        .ok_or_else(|| Error::schema(path, format!("expected {keyword}, got {line:?}")))?;
    rest.trim()
        .parse()
        .map_err(|_| Error::schema(path, format!("bad {keyword} count")))
}

/// Exact inverse of `export_model`.
pub fn import_model(path: &Path) -> Result<MarkovModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(FORMAT_HEADER) => {}
        other => {
            return Err(Error::schema(
                path,
                format!("unsupported model format header {other:?}"),
            ))
        }
    }
    let n_states = section_count(path, lines.next(), "STATES")?;
    let mut states = Vec::with_capacity(n_states);
    for i in 0..n_states {
        let line = lines
            .next()
            .ok_or_else(|| Error::schema(path, "truncated STATES section"))?;
        let mut parts = line.split_whitespace();
        let idx: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::schema(path, "bad state index"))?;
        if idx != i {
            return Err(Error::schema(path, format!("state index {idx} out of order")));
        }
        let mut vars = BTreeMap::new();
        for part in parts {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::schema(path, format!("bad valuation {part:?}")))?;
            let value: i64 = value
                .parse()
                .map_err(|_| Error::schema(path, format!("bad value in {part:?}")))?;
            vars.insert(name.to_string(), value);
        }
        states.push(StateValuation { vars });
    }
    let initial = section_count(path, lines.next(), "INIT")?;
    let n_transitions = section_count(path, lines.next(), "TRANSITIONS")?;
    let mut transitions = Vec::with_capacity(n_transitions);
    for _ in 0..n_transitions {
        let line = lines
            .next()
            .ok_or_else(|| Error::schema(path, "truncated TRANSITIONS section"))?;
        let mut parts = line.split_whitespace();
        let from: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::schema(path, "bad transition source"))?;
        let to: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::schema(path, "bad transition target"))?;
        let rate: f64 = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::schema(path, "bad transition rate"))?;
        transitions.push((from, to, rate));
    }
    let n_labels = section_count(path, lines.next(), "LABELS")?;
    let mut labels = BTreeMap::new();
    for _ in 0..n_labels {
        let line = lines
            .next()
            .ok_or_else(|| Error::schema(path, "truncated LABELS section"))?;
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::schema(path, "bad label line"))?;
        let set: BTreeSet<usize> = rest
            .split_whitespace()
            .map(|p| {
                p.parse()
                    .map_err(|_| Error::schema(path, format!("bad label index {p:?}")))
            })
            .collect::<Result<_>>()?;
        labels.insert(name.to_string(), set);
    }
    let n_rewards = section_count(path, lines.next(), "REWARDS")?;
    let mut rewards = BTreeMap::new();
    for _ in 0..n_rewards {
        let line = lines
            .next()
            .ok_or_else(|| Error::schema(path, "truncated REWARDS section"))?;
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::schema(path, "bad reward line"))?;
        let mut values = vec![0.0; n_states];
        for part in rest.split_whitespace() {
            let (idx, value) = part
                .split_once('=')
                .ok_or_else(|| Error::schema(path, format!("bad reward entry {part:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::schema(path, format!("bad reward index {idx:?}")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| Error::schema(path, format!("bad reward value {value:?}")))?;
            if idx >= n_states {
                return Err(Error::schema(path, format!("reward index {idx} out of range")));
            }
            values[idx] = value;
        }
        rewards.insert(name.to_string(), values);
    }
    Ok(MarkovModel {
        states,
        transitions,
        initial,
        labels,
        rewards,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{discretize_ewd, CleanSample, CleanSeries, Source};
    use approx::assert_relative_eq;

    fn series(len: usize, red_at: &[usize]) -> DiscreteSeries {
        let samples = (0..len)
            .map(|t| {
                let occupancy = t as f64 / len.max(2) as f64;
                CleanSample::from_flags(
                    t,
                    Some([
                        1.0 - occupancy,
                        0.0,
                        0.0,
                        occupancy,
                        0.0,
                        0.0,
                    ]),
                    red_at.contains(&t),
                    false,
                    red_at.contains(&t),
                    false,
                )
            })
            .collect();
        let clean = CleanSeries {
            source: Source::Lf,
            samples,
        };
        discretize_ewd(&clean, 5).unwrap().series
    }

    #[test]
    fn chain_shape_matches_series_length() {
        let model = build_model(&series(200, &[]), BuildMode::Joint).unwrap();
        assert_eq!(model.n_states(), 201);
        assert_eq!(model.transitions.len(), 201); // 200 steps + self-loop
        assert_eq!(
            model
                .transitions
                .iter()
                .filter(|(f, t, _)| f != t)
                .count(),
            200
        );
    }

    #[test]
    fn red_flag_becomes_a_label_at_its_timestep() {
        let model = build_model(&series(50, &[11]), BuildMode::Joint).unwrap();
        assert!(model.has_label("unsafe_red", 11));
        assert!(model.has_label("unsafe_fireexitsblocked", 11));
        assert!(!model.has_label("unsafe_red", 10));
    }

    #[test]
    fn red_labels_are_a_subset_of_amber_labels() {
        let model = build_model(&series(60, &[3, 14]), BuildMode::Joint).unwrap();
        let red = &model.labels["unsafe_red"];
        let amber = &model.labels["unsafe_amber"];
        assert!(red.is_subset(amber));
    }

    #[test]
    fn length_one_series_builds_a_two_state_chain() {
        let model = build_model(&series(1, &[]), BuildMode::Joint).unwrap();
        assert_eq!(model.n_states(), 2);
        assert!(validate_model(&model).is_empty());
    }

    #[test]
    fn per_state_chain_carries_s_and_l() {
        let model = build_model(
            &series(10, &[]),
            BuildMode::PerStateChain(BehaviourState::AvoidanceS),
        )
        .unwrap();
        assert_eq!(model.states[0].get("s"), Some(3));
        assert!(model.states[0].get("l").is_some());
        // Avoidance channel feeds the avoidance reward structure.
        let avoid = &model.rewards["avoidance_states"];
        assert!(avoid.iter().sum::<f64>() > 0.0);
        assert_relative_eq!(model.rewards["main_states"].iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn build_output_passes_validation() {
        let model = build_model(&series(30, &[2]), BuildMode::Joint).unwrap();
        assert!(validate_model(&model).is_empty());
    }

    #[test]
    fn validation_flags_bad_rates_and_dangling_labels() {
        let mut model = build_model(&series(5, &[]), BuildMode::Joint).unwrap();
        model.transitions[0].2 = 0.0;
        model
            .labels
            .get_mut("unsafe_red")
            .unwrap()
            .insert(999);
        let issues = validate_model(&model);
        assert!(issues.iter().any(|i| i.contains("non-positive rate")));
        assert!(issues.iter().any(|i| i.contains("missing state 999")));
    }

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let model = build_model(&series(40, &[7, 8]), BuildMode::Joint).unwrap();
        export_model(&model, &path).unwrap();
        let back = import_model(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_with_no_label_members_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let model = build_model(&series(5, &[]), BuildMode::Joint).unwrap();
        assert!(model.labels.values().all(|s| s.is_empty()));
        export_model(&model, &path).unwrap();
        assert_eq!(import_model(&path).unwrap(), model);
    }
}
