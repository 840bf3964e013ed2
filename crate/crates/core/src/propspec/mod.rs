//! Property-specification language: a CSL subset with filters and two CTL
//! query forms.
//!
//! Grammar (EBNF):
//!
//! ```text
//! property   = filter | prob | reward | ctl ;
//! filter     = "filter" "(" ("count"|"sum"|"avg"|"print") "," property ")" ;
//! prob       = "P" ( "=?" | ">=" number | "<=" number ) "[" path "]" ;
//! reward     = "R" "{" label "}" "=?" "["
//!                ( "C" "<=" numexpr | "I" "=" numexpr | "S" ) "]" ;
//! ctl        = "A" "[" "G" state "]" | "E" "[" "F" state "]" ;
//! path       = "X" state
//!            | ("F"|"G") [ bound ] state
//!            | state "U" [ bound ] state ;
//! bound      = "<=" numexpr | "[" numexpr "," numexpr "]" ;
//! state      = conj { "|" conj } ;
//! conj       = unary { "&" unary } ;
//! unary      = "!" unary | "(" state ")" | "true" | "false"
//!            | label | ident ("="|"<"|"<="|">"|">=") numexpr ;
//! numexpr    = number | ident ;          (* ident = named parameter, e.g. T *)
//! label      = '"' chars '"' ;
//! ```
//!
//! Operator precedence is `!` > `&` > `|`, so `a|b&c` reads `a|(b&c)`.
//! `//` comments run to end of line. Property files hold one property per
//! line with an optional `name:` prefix. Identifiers appearing where a
//! number is expected (such as `T`) are named parameters, resolved when
//! the property is bound against a model.

mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use crate::markov::MarkovModel;
use crate::{Error, Result};

pub use parser::{parse, parse_file};

/// A numeric position in the AST: a literal or a named parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum NumExpr {
    Const(f64),
    Var(String),
}

impl NumExpr {
    pub fn value(&self) -> Option<f64> {
        match self {
            NumExpr::Const(v) => Some(*v),
            NumExpr::Var(_) => None,
        }
    }
}

impl fmt::Display for NumExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumExpr::Const(v) => write!(f, "{v}"),
            NumExpr::Var(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    False,
    Label(String),
    Cmp {
        var: String,
        op: CmpOp,
        value: NumExpr,
    },
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
}

impl StateFormula {
    fn precedence(&self) -> u8 {
        match self {
            StateFormula::Or(..) => 1,
            StateFormula::And(..) => 2,
            _ => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            StateFormula::True => write!(f, "true")?,
            StateFormula::False => write!(f, "false")?,
            StateFormula::Label(name) => write!(f, "\"{name}\"")?,
            StateFormula::Cmp { var, op, value } => {
                write!(f, "{var}{}{value}", op.symbol())?
            }
            StateFormula::Not(inner) => {
                write!(f, "!")?;
                inner.fmt_prec(f, 3)?;
            }
            StateFormula::And(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "&")?;
                b.fmt_prec(f, 2)?;
            }
            StateFormula::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "|")?;
                b.fmt_prec(f, 1)?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Time bound on a path operator.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeBound {
    Unbounded,
    Upper(NumExpr),
    Interval(NumExpr, NumExpr),
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeBound::Unbounded => Ok(()),
            TimeBound::Upper(t) => write!(f, "<={t}"),
            TimeBound::Interval(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathFormula {
    Finally {
        bound: TimeBound,
        phi: StateFormula,
    },
    Globally {
        bound: TimeBound,
        phi: StateFormula,
    },
    Next(StateFormula),
    Until {
        bound: TimeBound,
        lhs: StateFormula,
        rhs: StateFormula,
    },
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Finally { bound, phi } => write!(f, "F{bound} {phi}"),
            PathFormula::Globally { bound, phi } => write!(f, "G{bound} {phi}"),
            PathFormula::Next(phi) => write!(f, "X {phi}"),
            PathFormula::Until { bound, lhs, rhs } => {
                write!(f, "{lhs} U{bound} {rhs}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbBound {
    Query,
    AtLeast(f64),
    AtMost(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewardForm {
    Cumulative(NumExpr),
    Instantaneous(NumExpr),
    SteadyState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Count,
    Sum,
    Avg,
    Print,
}

impl FilterKind {
    fn name(self) -> &'static str {
        match self {
            FilterKind::Count => "count",
            FilterKind::Sum => "sum",
            FilterKind::Avg => "avg",
            FilterKind::Print => "print",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Property {
    Prob {
        bound: ProbBound,
        path: PathFormula,
    },
    Reward {
        structure: String,
        form: RewardForm,
    },
    Filter {
        kind: FilterKind,
        inner: Box<Property>,
    },
    /// `A [ G phi ]`
    CtlInvariant(StateFormula),
    /// `E [ F phi ]`
    CtlReach(StateFormula),
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Prob { bound, path } => {
                match bound {
                    ProbBound::Query => write!(f, "P=?")?,
                    ProbBound::AtLeast(p) => write!(f, "P>={p}")?,
                    ProbBound::AtMost(p) => write!(f, "P<={p}")?,
                }
                write!(f, " [ {path} ]")
            }
            Property::Reward { structure, form } => {
                write!(f, "R{{\"{structure}\"}}=? [")?;
                match form {
                    RewardForm::Cumulative(t) => write!(f, "C<={t}")?,
                    RewardForm::Instantaneous(t) => write!(f, "I={t}")?,
                    RewardForm::SteadyState => write!(f, "S")?,
                }
                write!(f, "]")
            }
            Property::Filter { kind, inner } => {
                write!(f, "filter({}, {inner})", kind.name())
            }
            Property::CtlInvariant(phi) => write!(f, "A [ G {phi} ]"),
            Property::CtlReach(phi) => write!(f, "E [ F {phi} ]"),
        }
    }
}

/// A property as read from a file: optional `name:` prefix plus source
/// line for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedProperty {
    pub name: Option<String>,
    pub line: usize,
    pub property: Property,
}

/// True when the property references the named parameter anywhere.
pub fn uses_variable(property: &Property, name: &str) -> bool {
    fn in_num(e: &NumExpr, name: &str) -> bool {
        matches!(e, NumExpr::Var(v) if v == name)
    }
    fn in_state(phi: &StateFormula, name: &str) -> bool {
        match phi {
            StateFormula::Cmp { value, .. } => in_num(value, name),
            StateFormula::Not(inner) => in_state(inner, name),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                in_state(a, name) || in_state(b, name)
            }
            _ => false,
        }
    }
    fn in_bound(bound: &TimeBound, name: &str) -> bool {
        match bound {
            TimeBound::Unbounded => false,
            TimeBound::Upper(t) => in_num(t, name),
            TimeBound::Interval(a, b) => in_num(a, name) || in_num(b, name),
        }
    }
    match property {
        Property::Prob { path, .. } => match path {
            PathFormula::Finally { bound, phi } | PathFormula::Globally { bound, phi } => {
                in_bound(bound, name) || in_state(phi, name)
            }
            PathFormula::Next(phi) => in_state(phi, name),
            PathFormula::Until { bound, lhs, rhs } => {
                in_bound(bound, name) || in_state(lhs, name) || in_state(rhs, name)
            }
        },
        Property::Reward { form, .. } => match form {
            RewardForm::Cumulative(t) | RewardForm::Instantaneous(t) => in_num(t, name),
            RewardForm::SteadyState => false,
        },
        Property::Filter { inner, .. } => uses_variable(inner, name),
        Property::CtlInvariant(phi) | Property::CtlReach(phi) => in_state(phi, name),
    }
}

/// A property resolved against a model: every parameter substituted,
/// every label and variable known to exist.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundProperty {
    pub ast: Property,
    pub warnings: Vec<String>,
}

struct Binder<'m> {
    model: &'m MarkovModel,
    defines: &'m BTreeMap<String, f64>,
    unresolved: Vec<String>,
    warnings: Vec<String>,
}

impl Binder<'_> {
    fn num(&mut self, e: &NumExpr) -> NumExpr {
        match e {
            NumExpr::Const(v) => NumExpr::Const(*v),
            NumExpr::Var(name) => match self.defines.get(name) {
                Some(v) => NumExpr::Const(*v),
                None => {
                    self.note_unresolved(format!("parameter {name}"));
                    e.clone()
                }
            },
        }
    }

    fn note_unresolved(&mut self, name: String) {
        if !self.unresolved.contains(&name) {
            self.unresolved.push(name);
        }
    }

    fn state(&mut self, phi: &StateFormula) -> StateFormula {
        match phi {
            StateFormula::True | StateFormula::False => phi.clone(),
            StateFormula::Label(name) => {
                if !self.model.labels.contains_key(name) {
                    self.note_unresolved(format!("label \"{name}\""));
                }
                phi.clone()
            }
            StateFormula::Cmp { var, op, value } => {
                let value = self.num(value);
                match (self.model.var_range(var), value.value()) {
                    (None, _) => {
                        self.note_unresolved(format!("variable {var}"));
                        StateFormula::Cmp {
                            var: var.clone(),
                            op: *op,
                            value,
                        }
                    }
                    (Some((lo, hi)), Some(v)) => {
                        let satisfiable = match op {
                            CmpOp::Eq => {
                                v.fract() == 0.0 && (lo as f64) <= v && v <= hi as f64
                            }
                            CmpOp::Lt => (lo as f64) < v,
                            CmpOp::Le => (lo as f64) <= v,
                            CmpOp::Gt => (hi as f64) > v,
                            CmpOp::Ge => (hi as f64) >= v,
                        };
                        if satisfiable {
                            StateFormula::Cmp {
                                var: var.clone(),
                                op: *op,
                                value,
                            }
                        } else {
                            self.warnings.push(format!(
                                "{var}{}{v} is unsatisfiable over the model range \
                                 {lo}..{hi}; treated as false",
                                op.symbol()
                            ));
                            StateFormula::False
                        }
                    }
                    (Some(_), None) => StateFormula::Cmp {
                        var: var.clone(),
                        op: *op,
                        value,
                    },
                }
            }
            StateFormula::Not(inner) => StateFormula::Not(Box::new(self.state(inner))),
            StateFormula::And(a, b) => {
                StateFormula::And(Box::new(self.state(a)), Box::new(self.state(b)))
            }
            StateFormula::Or(a, b) => {
                StateFormula::Or(Box::new(self.state(a)), Box::new(self.state(b)))
            }
        }
    }

    fn bound(&mut self, bound: &TimeBound) -> Result<TimeBound> {
        Ok(match bound {
            TimeBound::Unbounded => TimeBound::Unbounded,
            TimeBound::Upper(t) => {
                let t = self.num(t);
                self.check_time(&t)?;
                TimeBound::Upper(t)
            }
            TimeBound::Interval(a, b) => {
                let a = self.num(a);
                let b = self.num(b);
                self.check_time(&a)?;
                self.check_time(&b)?;
                if let (Some(a), Some(b)) = (a.value(), b.value()) {
                    if a > b {
                        return Err(Error::InvalidConfig(format!(
                            "interval bound [{a},{b}] has a > b"
                        )));
                    }
                }
                TimeBound::Interval(a, b)
            }
        })
    }

    fn check_time(&self, t: &NumExpr) -> Result<()> {
        if let Some(v) = t.value() {
            if v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "time bound {v} is negative"
                )));
            }
        }
        Ok(())
    }

    fn property(&mut self, p: &Property) -> Result<Property> {
        Ok(match p {
            Property::Prob { bound, path } => {
                if let ProbBound::AtLeast(p) | ProbBound::AtMost(p) = bound {
                    if !(0.0..=1.0).contains(p) {
                        return Err(Error::InvalidConfig(format!(
                            "probability bound {p} outside [0,1]"
                        )));
                    }
                }
                let path = match path {
                    PathFormula::Finally { bound: b, phi } => PathFormula::Finally {
                        bound: self.bound(b)?,
                        phi: self.state(phi),
                    },
                    PathFormula::Globally { bound: b, phi } => PathFormula::Globally {
                        bound: self.bound(b)?,
                        phi: self.state(phi),
                    },
                    PathFormula::Next(phi) => PathFormula::Next(self.state(phi)),
                    PathFormula::Until { bound: b, lhs, rhs } => PathFormula::Until {
                        bound: self.bound(b)?,
                        lhs: self.state(lhs),
                        rhs: self.state(rhs),
                    },
                };
                Property::Prob {
                    bound: bound.clone(),
                    path,
                }
            }
            Property::Reward { structure, form } => {
                if !self.model.rewards.contains_key(structure) {
                    return Err(Error::UnknownRewardStructure(structure.clone()));
                }
                let form = match form {
                    RewardForm::Cumulative(t) => {
                        let t = self.num(t);
                        self.check_time(&t)?;
                        RewardForm::Cumulative(t)
                    }
                    RewardForm::Instantaneous(t) => {
                        let t = self.num(t);
                        self.check_time(&t)?;
                        RewardForm::Instantaneous(t)
                    }
                    RewardForm::SteadyState => RewardForm::SteadyState,
                };
                Property::Reward {
                    structure: structure.clone(),
                    form,
                }
            }
            Property::Filter { kind, inner } => Property::Filter {
                kind: *kind,
                inner: Box::new(self.property(inner)?),
            },
            Property::CtlInvariant(phi) => Property::CtlInvariant(self.state(phi)),
            Property::CtlReach(phi) => Property::CtlReach(self.state(phi)),
        })
    }
}

/// Resolves a parsed property against a model, substituting parameters
/// from `defines`. Unknown labels, variables or parameters are collected
/// into an `Unresolved` error; comparisons that no state can satisfy
/// become `false` with a warning.
pub fn bind(
    property: &Property,
    model: &MarkovModel,
    defines: &BTreeMap<String, f64>,
) -> Result<BoundProperty> {
    let mut binder = Binder {
        model,
        defines,
        unresolved: Vec::new(),
        warnings: Vec::new(),
    };
    let ast = binder.property(property)?;
    if !binder.unresolved.is_empty() {
        return Err(Error::Unresolved(binder.unresolved));
    }
    Ok(BoundProperty {
        ast,
        warnings: binder.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfsim::BehaviourState;
    use crate::markov::{build_model, BuildMode};
    use crate::pipeline::{discretize_ewd, CleanSample, CleanSeries, Source};
    use proptest::prelude::*;

    pub(super) const GOLDEN: [&str; 11] = [
        "P=? [ F<=T \"unsafe_fireexitsblocked\" ]",
        "P=? [ F<=T \"unsafe_amber_critical\" ]",
        "P=? [ F<=T \"unsafe_amber\" ]",
        "filter(sum, P=? [ X \"unsafe_red\" ])",
        "filter(avg, P=? [ X \"unsafe_red\" ])",
        "R{\"main_states\"}=? [C<=T]",
        "R{\"avoidance_states\"}=? [C<=T]",
        "P=? [ F<=T (s=state&l=level&timestep=T) ]",
        "P=? [ F[0,99] (s=1&l>=3) ]",
        "P=? [ F[100,199] (s=4&l>=3) ]",
        "P>=0.25 [ s=4 U<=99.0 s=1 ]",
    ];

    fn demo_model() -> MarkovModel {
        let samples = (0..200)
            .map(|t| {
                let x = t as f64 / 200.0;
                CleanSample::from_flags(
                    t,
                    Some([1.0 - x, x * 0.5, x * 0.5, 0.0, 0.0, 0.0]),
                    t == 11,
                    false,
                    t == 11,
                    false,
                )
            })
            .collect();
        let clean = CleanSeries {
            source: Source::Lf,
            samples,
        };
        let series = discretize_ewd(&clean, 5).unwrap().series;
        build_model(&series, BuildMode::PerStateChain(BehaviourState::Searching)).unwrap()
    }

    fn defines() -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("T".to_string(), 50.0),
            ("state".to_string(), 0.0),
            ("level".to_string(), 3.0),
        ])
    }

    #[test]
    fn golden_strings_parse_and_bind() {
        let model = demo_model();
        let defines = defines();
        for text in GOLDEN {
            let prop = parse(text).unwrap_or_else(|e| panic!("{text}: {e}"));
            bind(&prop, &model, &defines).unwrap_or_else(|e| panic!("{text}: {e}"));
        }
    }

    #[test]
    fn unknown_label_is_an_unresolved_error() {
        let prop = parse("P=? [ F<=10 \"nope\" ]").unwrap();
        match bind(&prop, &demo_model(), &BTreeMap::new()) {
            Err(Error::Unresolved(names)) => {
                assert_eq!(names, vec!["label \"nope\"".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_parameter_is_reported_by_name() {
        let prop = parse("P=? [ F<=T \"unsafe_red\" ]").unwrap();
        match bind(&prop, &demo_model(), &BTreeMap::new()) {
            Err(Error::Unresolved(names)) => {
                assert_eq!(names, vec!["parameter T".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_comparison_is_statically_false_with_warning() {
        let prop = parse("P=? [ F<=10 s=9 ]").unwrap();
        let bound = bind(&prop, &demo_model(), &BTreeMap::new()).unwrap();
        assert_eq!(bound.warnings.len(), 1);
        match bound.ast {
            Property::Prob {
                path: PathFormula::Finally { phi, .. },
                ..
            } => assert_eq!(phi, StateFormula::False),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_reward_structure_is_an_error() {
        let prop = parse("R{\"bogus\"}=? [C<=10]").unwrap();
        assert!(matches!(
            bind(&prop, &demo_model(), &BTreeMap::new()),
            Err(Error::UnknownRewardStructure(_))
        ));
    }

    #[test]
    fn reversed_interval_is_rejected_at_bind() {
        // Constant reversed intervals already fail at parse time.
        assert!(parse("P=? [ F[20,10] \"unsafe_red\" ]").is_err());
        // A parameterized interval only becomes reversed at bind time.
        let prop = parse("P=? [ F[T,10] \"unsafe_red\" ]").unwrap();
        let defines = BTreeMap::from([("T".to_string(), 20.0)]);
        assert!(bind(&prop, &demo_model(), &defines).is_err());
    }

    #[test]
    fn sweep_variable_detection() {
        let prop = parse("P=? [ F<=T \"unsafe_red\" ]").unwrap();
        assert!(uses_variable(&prop, "T"));
        assert!(!uses_variable(&prop, "U"));
        let fixed = parse("P=? [ F<=10 \"unsafe_red\" ]").unwrap();
        assert!(!uses_variable(&fixed, "T"));
    }

    fn arb_num() -> impl Strategy<Value = NumExpr> {
        prop_oneof![
            (0u32..1000).prop_map(|v| NumExpr::Const(v as f64)),
            (0u32..10000).prop_map(|v| NumExpr::Const(v as f64 / 10.0)),
            Just(NumExpr::Var("T".into())),
        ]
    }

    fn arb_state() -> impl Strategy<Value = StateFormula> {
        let leaf = prop_oneof![
            Just(StateFormula::True),
            Just(StateFormula::False),
            "[a-z][a-z_]{0,8}".prop_map(StateFormula::Label),
            (
                prop_oneof![Just("s"), Just("l"), Just("timestep")],
                prop_oneof![
                    Just(CmpOp::Eq),
                    Just(CmpOp::Lt),
                    Just(CmpOp::Le),
                    Just(CmpOp::Gt),
                    Just(CmpOp::Ge)
                ],
                arb_num()
            )
                .prop_map(|(var, op, value)| StateFormula::Cmp {
                    var: var.to_string(),
                    op,
                    value,
                }),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(|p| StateFormula::Not(Box::new(p))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| StateFormula::And(Box::new(a), Box::new(b))),
                (inner.clone(), inner)
                    .prop_map(|(a, b)| StateFormula::Or(Box::new(a), Box::new(b))),
            ]
        })
    }

    fn arb_bound() -> impl Strategy<Value = TimeBound> {
        prop_oneof![
            Just(TimeBound::Unbounded),
            arb_num().prop_map(TimeBound::Upper),
            (0u32..100, 0u32..100).prop_map(|(a, b)| {
                let (a, b) = (a.min(b), a.max(b));
                TimeBound::Interval(NumExpr::Const(a as f64), NumExpr::Const(b as f64))
            }),
        ]
    }

    fn arb_property() -> impl Strategy<Value = Property> {
        let path = prop_oneof![
            (arb_bound(), arb_state())
                .prop_map(|(bound, phi)| PathFormula::Finally { bound, phi }),
            (arb_bound(), arb_state())
                .prop_map(|(bound, phi)| PathFormula::Globally { bound, phi }),
            arb_state().prop_map(PathFormula::Next),
            (arb_bound(), arb_state(), arb_state())
                .prop_map(|(bound, lhs, rhs)| PathFormula::Until { bound, lhs, rhs }),
        ];
        let prob_bound = prop_oneof![
            Just(ProbBound::Query),
            (0u32..=100).prop_map(|p| ProbBound::AtLeast(p as f64 / 100.0)),
            (0u32..=100).prop_map(|p| ProbBound::AtMost(p as f64 / 100.0)),
        ];
        let base = prop_oneof![
            (prob_bound, path).prop_map(|(bound, path)| Property::Prob { bound, path }),
            (
                "[a-z][a-z_]{0,8}",
                prop_oneof![
                    arb_num().prop_map(RewardForm::Cumulative),
                    arb_num().prop_map(RewardForm::Instantaneous),
                    Just(RewardForm::SteadyState)
                ]
            )
                .prop_map(|(structure, form)| Property::Reward { structure, form }),
            arb_state().prop_map(Property::CtlInvariant),
            arb_state().prop_map(Property::CtlReach),
        ];
        base.prop_recursive(2, 8, 2, |inner| {
            (
                prop_oneof![
                    Just(FilterKind::Count),
                    Just(FilterKind::Sum),
                    Just(FilterKind::Avg),
                    Just(FilterKind::Print)
                ],
                inner,
            )
                .prop_map(|(kind, inner)| Property::Filter {
                    kind,
                    inner: Box::new(inner),
                })
        })
    }

    proptest! {
        /// Pretty-printing and re-parsing is stable. The parser
        /// left-associates `&`/`|`, so compare renderings rather than
        /// raw trees.
        #[test]
        fn unparse_parse_round_trip(prop in arb_property()) {
            let text = prop.to_string();
            let back = parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
            prop_assert_eq!(back.to_string(), text);
            let again = parse(&back.to_string()).unwrap();
            prop_assert_eq!(again, back);
        }
    }
}
