//! Property evaluation on labelled CTMCs.
//!
//! Transient (time-bounded) probabilities and rewards use
//! uniformization: Poisson-weighted sums of jump-chain powers with
//! truncation error below [`TOLERANCE`]. Unbounded queries reduce to
//! dense linear solves on the embedded chain, CTL queries to graph
//! search.

mod ctl;
mod engine;
mod experiment;

pub use ctl::CtlOutcome;
pub use engine::TOLERANCE;
pub use experiment::{
    run_experiment, write_experiment_csv, write_experiment_svg, SweepSpec,
};

use crate::markov::MarkovModel;
use crate::propspec::{
    BoundProperty, FilterKind, NumExpr, PathFormula, ProbBound, Property, RewardForm,
    StateFormula, TimeBound,
};
use crate::{Error, Result};

use engine::Engine;

/// Result of evaluating one property.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckResult {
    Probability(f64),
    Reward(f64),
    /// Outcome of a `P>=p` / `P<=p` bound, with the computed probability.
    Decision { holds: bool, value: f64 },
    Filter(FilterAggregate),
    Ctl(CtlOutcome),
}

impl CheckResult {
    /// Numeric reading used for experiment plots and CSV output.
    pub fn as_number(&self) -> f64 {
        match self {
            CheckResult::Probability(v) | CheckResult::Reward(v) => *v,
            CheckResult::Decision { value, .. } => *value,
            CheckResult::Filter(agg) => match agg.kind {
                FilterKind::Count | FilterKind::Print => agg.count as f64,
                FilterKind::Sum => agg.sum,
                FilterKind::Avg => agg.avg.unwrap_or(f64::NAN),
            },
            CheckResult::Ctl(outcome) => outcome.holds as u8 as f64,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            CheckResult::Decision { holds, .. } => Some(*holds),
            CheckResult::Ctl(outcome) => Some(outcome.holds),
            _ => None,
        }
    }

    /// Short textual form for results files.
    pub fn render(&self) -> String {
        match self {
            CheckResult::Probability(v) | CheckResult::Reward(v) => format!("{v:.9}"),
            CheckResult::Decision { holds, .. } | CheckResult::Ctl(CtlOutcome { holds, .. }) => {
                holds.to_string()
            }
            CheckResult::Filter(agg) => match agg.kind {
                FilterKind::Count => agg.count.to_string(),
                FilterKind::Sum => format!("{:.9}", agg.sum),
                FilterKind::Avg => match agg.avg {
                    Some(v) => format!("{v:.9}"),
                    None => "undefined".to_string(),
                },
                FilterKind::Print => format!("{:?}", agg.states),
            },
        }
    }
}

/// Aggregate over the satisfying states of a filter's inner property.
/// `avg` is `sum / count`, undefined when the satisfying set is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterAggregate {
    pub kind: FilterKind,
    pub count: usize,
    pub sum: f64,
    pub avg: Option<f64>,
    pub states: Vec<usize>,
}

fn bound_value(e: &NumExpr) -> Result<f64> {
    e.value()
        .ok_or_else(|| Error::Unresolved(vec![format!("parameter {e}")]))
}

/// Truth of a resolved state formula in every state. Variables a state
/// does not define make the atom false there.
fn sat(model: &MarkovModel, phi: &StateFormula) -> Result<Vec<bool>> {
    let n = model.n_states();
    Ok(match phi {
        StateFormula::True => vec![true; n],
        StateFormula::False => vec![false; n],
        StateFormula::Label(name) => {
            if !model.labels.contains_key(name) {
                return Err(Error::Unresolved(vec![format!("label \"{name}\"")]));
            }
            (0..n).map(|s| model.has_label(name, s)).collect()
        }
        StateFormula::Cmp { var, op, value } => {
            let v = bound_value(value)?;
            model
                .states
                .iter()
                .map(|state| state.get(var).is_some_and(|x| op.eval(x as f64, v)))
                .collect()
        }
        StateFormula::Not(inner) => sat(model, inner)?.into_iter().map(|b| !b).collect(),
        StateFormula::And(a, b) => sat(model, a)?
            .into_iter()
            .zip(sat(model, b)?)
            .map(|(x, y)| x && y)
            .collect(),
        StateFormula::Or(a, b) => sat(model, a)?
            .into_iter()
            .zip(sat(model, b)?)
            .map(|(x, y)| x || y)
            .collect(),
    })
}

/// Path-formula probability from every state as the initial state.
fn prob_vector(model: &MarkovModel, path: &PathFormula) -> Result<Vec<f64>> {
    let engine = Engine::new(model);
    let n = model.n_states();
    let clamp = |v: Vec<f64>| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let result: Vec<f64> = match path {
        PathFormula::Next(phi) => {
            let phi = sat(model, phi)?;
            engine
                .embedded_rows()
                .iter()
                .map(|row| row.iter().map(|&(to, p)| p * phi[to] as u8 as f64).sum())
                .collect()
        }
        PathFormula::Finally { bound, phi } => {
            let phi = sat(model, phi)?;
            match bound {
                TimeBound::Unbounded => engine.unbounded_until(&vec![true; n], &phi)?,
                TimeBound::Upper(t) => bounded_until(&engine, &vec![true; n], &phi, bound_value(t)?)?,
                TimeBound::Interval(a, b) => {
                    let (a, b) = (bound_value(a)?, bound_value(b)?);
                    let u = bounded_until(&engine, &vec![true; n], &phi, b - a)?;
                    engine.transient_backward(&vec![false; n], u, a)?
                }
            }
        }
        PathFormula::Globally { bound, phi } => {
            let negated = PathFormula::Finally {
                bound: bound.clone(),
                phi: StateFormula::Not(Box::new(phi.clone())),
            };
            return Ok(prob_vector(model, &negated)?
                .into_iter()
                .map(|p| (1.0 - p).clamp(0.0, 1.0))
                .collect());
        }
        PathFormula::Until { bound, lhs, rhs } => {
            let lhs = sat(model, lhs)?;
            let rhs = sat(model, rhs)?;
            match bound {
                TimeBound::Unbounded => engine.unbounded_until(&lhs, &rhs)?,
                TimeBound::Upper(t) => bounded_until(&engine, &lhs, &rhs, bound_value(t)?)?,
                TimeBound::Interval(a, b) => {
                    let (a, b) = (bound_value(a)?, bound_value(b)?);
                    if a == 0.0 {
                        bounded_until(&engine, &lhs, &rhs, b)?
                    } else {
                        // Before `a` the left side must hold; violating
                        // states absorb with value 0.
                        let u = bounded_until(&engine, &lhs, &rhs, b - a)?;
                        let absorbing: Vec<bool> = lhs.iter().map(|l| !l).collect();
                        let u0 = u
                            .iter()
                            .zip(&lhs)
                            .map(|(&v, &l)| if l { v } else { 0.0 })
                            .collect();
                        engine.transient_backward(&absorbing, u0, a)?
                    }
                }
            }
        }
    };
    Ok(clamp(result))
}

/// `lhs U<=t rhs` per state via the absorbing transformation.
fn bounded_until(engine: &Engine, lhs: &[bool], rhs: &[bool], t: f64) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::InvalidConfig(format!("negative time bound {t}")));
    }
    let absorbing: Vec<bool> = lhs
        .iter()
        .zip(rhs)
        .map(|(&l, &r)| r || !l)
        .collect();
    let w0 = rhs.iter().map(|&r| r as u8 as f64).collect();
    engine.transient_backward(&absorbing, w0, t)
}

/// Expected reward from every state as the initial state.
fn reward_vector(model: &MarkovModel, structure: &str, form: &RewardForm) -> Result<Vec<f64>> {
    let r = model
        .rewards
        .get(structure)
        .ok_or_else(|| Error::UnknownRewardStructure(structure.to_string()))?
        .clone();
    let engine = Engine::new(model);
    match form {
        RewardForm::Cumulative(t) => engine.cumulative_backward(r, bound_value(t)?),
        RewardForm::Instantaneous(t) => {
            let n = model.n_states();
            engine.transient_backward(&vec![false; n], r, bound_value(t)?)
        }
        RewardForm::SteadyState => engine.steady_values(&r),
    }
}

/// Per-state value of a property plus whether it is boolean-valued.
fn evaluate_vector(model: &MarkovModel, property: &Property) -> Result<(Vec<f64>, bool)> {
    match property {
        Property::Prob {
            bound: ProbBound::Query,
            path,
        } => Ok((prob_vector(model, path)?, false)),
        Property::Prob { bound, path } => {
            let v = prob_vector(model, path)?;
            let decide: Vec<f64> = v
                .into_iter()
                .map(|p| decision(bound, p) as u8 as f64)
                .collect();
            Ok((decide, true))
        }
        Property::Reward { structure, form } => {
            Ok((reward_vector(model, structure, form)?, false))
        }
        Property::CtlInvariant(phi) => {
            let phi = sat(model, phi)?;
            let holds = ctl::invariant_states(model, &phi);
            Ok((holds.into_iter().map(|b| b as u8 as f64).collect(), true))
        }
        Property::CtlReach(phi) => {
            let phi = sat(model, phi)?;
            let holds = ctl::reach_states(model, &phi);
            Ok((holds.into_iter().map(|b| b as u8 as f64).collect(), true))
        }
        Property::Filter { .. } => Err(Error::InvalidConfig(
            "filter inside filter: inner property is not state-evaluable".into(),
        )),
    }
}

fn decision(bound: &ProbBound, value: f64) -> bool {
    match bound {
        ProbBound::Query => true,
        ProbBound::AtLeast(p) => value >= p - TOLERANCE,
        ProbBound::AtMost(p) => value <= p + TOLERANCE,
    }
}

/// Evaluates a bound property from the model's initial state.
pub fn evaluate(model: &MarkovModel, property: &BoundProperty) -> Result<CheckResult> {
    evaluate_ast(model, &property.ast)
}

fn evaluate_ast(model: &MarkovModel, ast: &Property) -> Result<CheckResult> {
    match ast {
        Property::Filter { kind, inner } => {
            Ok(CheckResult::Filter(check_filter(model, *kind, inner)?))
        }
        Property::CtlInvariant(_) | Property::CtlReach(_) => {
            Ok(CheckResult::Ctl(check_ctl(model, ast)?))
        }
        Property::Prob { bound, path } => {
            let value = prob_vector(model, path)?[model.initial];
            Ok(match bound {
                ProbBound::Query => CheckResult::Probability(value),
                _ => CheckResult::Decision {
                    holds: decision(bound, value),
                    value,
                },
            })
        }
        Property::Reward { structure, form } => Ok(CheckResult::Reward(
            reward_vector(model, structure, form)?[model.initial],
        )),
    }
}

/// Probability of a time-bounded path formula from the initial state.
/// Unbounded formulas are routed to the unbounded solver.
pub fn check_prob_bounded(model: &MarkovModel, path: &PathFormula) -> Result<f64> {
    Ok(prob_vector(model, path)?[model.initial])
}

/// Probability of an unbounded path formula from the initial state.
pub fn check_prob_unbounded(model: &MarkovModel, path: &PathFormula) -> Result<f64> {
    check_prob_bounded(model, path)
}

/// Expected reward of the given form from the initial state.
pub fn check_reward(model: &MarkovModel, structure: &str, form: &RewardForm) -> Result<f64> {
    Ok(reward_vector(model, structure, form)?[model.initial])
}

/// Evaluates the inner property from every state and aggregates over the
/// satisfying states: those where a boolean inner holds, or a numeric
/// inner is strictly positive.
pub fn check_filter(
    model: &MarkovModel,
    kind: FilterKind,
    inner: &Property,
) -> Result<FilterAggregate> {
    let (values, is_bool) = evaluate_vector(model, inner)?;
    let states: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| if is_bool { v > 0.5 } else { v > 0.0 })
        .map(|(s, _)| s)
        .collect();
    let count = states.len();
    let sum: f64 = states.iter().map(|&s| values[s]).sum();
    let avg = (count > 0).then(|| sum / count as f64);
    Ok(FilterAggregate {
        kind,
        count,
        sum,
        avg,
        states,
    })
}

/// CTL invariant/reachability query with counterexample or witness.
pub fn check_ctl(model: &MarkovModel, property: &Property) -> Result<CtlOutcome> {
    match property {
        Property::CtlInvariant(phi) => Ok(ctl::check_invariant(model, &sat(model, phi)?)),
        Property::CtlReach(phi) => Ok(ctl::check_reach(model, &sat(model, phi)?)),
        _ => Err(Error::InvalidConfig(
            "check_ctl expects an A[G ...] or E[F ...] property".into(),
        )),
    }
}
