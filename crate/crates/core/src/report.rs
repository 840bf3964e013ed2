//! Cross-source verification report: per-requirement verdicts for every
//! data source present in a run, zone-occupancy statistics and
//! counterexample references.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checker::{check_ctl, check_prob_bounded, CtlOutcome};
use crate::markov::MarkovModel;
use crate::pipeline::ZoneTimeStats;
use crate::propspec::{NumExpr, PathFormula, Property, StateFormula, TimeBound};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Satisfied,
    Violated,
    NoData,
}

impl Verdict {
    fn label(self) -> &'static str {
        match self {
            Verdict::Satisfied => "SATISFIED",
            Verdict::Violated => "VIOLATED",
            Verdict::NoData => "no data",
        }
    }
}

/// One requirement checked against one source's model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementVerdict {
    pub requirement: String,
    pub verdict: Verdict,
    /// Probability of violating the requirement within the model horizon.
    pub violation_probability: Option<f64>,
    /// Counterexample state trace when violated.
    pub trace: Option<Vec<usize>>,
}

/// Everything derived from one source's model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub source: String,
    pub verdicts: Vec<RequirementVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub sources: Vec<SourceReport>,
    pub zone_stats: Option<ZoneTimeStats>,
    pub notes: Vec<String>,
}

/// The requirements checked per source: name plus the label whose
/// reachability violates it.
const REQUIREMENTS: [(&str, &str); 3] = [
    ("REQ 1 fire exit kept clear (red zone)", "unsafe_red"),
    ("REQ 2 density limit (stationary robots)", "density_violation"),
    ("amber zone kept clear (advisory)", "unsafe_amber"),
];

/// Runs the requirement pack against one model. The horizon is the
/// number of sampled timesteps in the unrolled chain.
pub fn analyze_source(model: &MarkovModel, source: &str) -> Result<SourceReport> {
    let horizon = (model.n_states().saturating_sub(1)).max(1) as f64;
    let mut verdicts = Vec::new();
    for (requirement, label) in REQUIREMENTS {
        if !model.labels.contains_key(label) {
            verdicts.push(RequirementVerdict {
                requirement: requirement.to_string(),
                verdict: Verdict::NoData,
                violation_probability: None,
                trace: None,
            });
            continue;
        }
        let invariant =
            Property::CtlInvariant(StateFormula::Not(Box::new(StateFormula::Label(
                label.to_string(),
            ))));
        let CtlOutcome { holds, trace } = check_ctl(model, &invariant)?;
        let probability = check_prob_bounded(
            model,
            &PathFormula::Finally {
                bound: TimeBound::Upper(NumExpr::Const(horizon)),
                phi: StateFormula::Label(label.to_string()),
            },
        )?;
        verdicts.push(RequirementVerdict {
            requirement: requirement.to_string(),
            verdict: if holds {
                Verdict::Satisfied
            } else {
                Verdict::Violated
            },
            violation_probability: Some(probability),
            trace,
        });
    }
    Ok(SourceReport {
        source: source.to_string(),
        verdicts,
    })
}

impl Report {
    pub fn new(
        sources: Vec<SourceReport>,
        zone_stats: Option<ZoneTimeStats>,
        notes: Vec<String>,
    ) -> Self {
        Report {
            sources,
            zone_stats,
            notes,
        }
    }

    fn verdict_for(&self, source: &str, requirement: &str) -> Verdict {
        self.sources
            .iter()
            .find(|s| s.source == source)
            .and_then(|s| {
                s.verdicts
                    .iter()
                    .find(|v| v.requirement == requirement)
                    .map(|v| v.verdict)
            })
            .unwrap_or(Verdict::NoData)
    }

    /// Renders the report as Markdown.
    pub fn render(&self) -> String {
        let mut out = String::from("# Verification report\n\n## Requirement verdicts\n\n");
        let columns = ["LF", "HF", "PHYS"];
        out.push_str("| requirement | LF | HF | PHYS |\n|---|---|---|---|\n");
        for (requirement, _) in REQUIREMENTS {
            write!(out, "| {requirement} |").unwrap();
            for source in columns {
                write!(out, " {} |", self.verdict_for(source, requirement).label()).unwrap();
            }
            out.push('\n');
        }
        out.push_str("\n## Details per source\n");
        for source in &self.sources {
            write!(out, "\n### {}\n\n", source.source).unwrap();
            for v in &source.verdicts {
                write!(out, "- {}: {}", v.requirement, v.verdict.label()).unwrap();
                if let Some(p) = v.violation_probability {
                    write!(out, " (violation probability within horizon: {p:.6})").unwrap();
                }
                if let Some(trace) = &v.trace {
                    write!(
                        out,
                        "; counterexample reaches state {} after {} transitions",
                        trace.last().unwrap(),
                        trace.len() - 1
                    )
                    .unwrap();
                }
                out.push('\n');
            }
        }
        if let Some(stats) = &self.zone_stats {
            out.push_str("\n## Zone occupancy (mean seconds per trial)\n\n");
            out.push_str("| zone condition | seconds |\n|---|---|\n");
            writeln!(out, "| red zone occupied | {:.1} |", stats.red_s).unwrap();
            writeln!(
                out,
                "| amber zone, two or more robots | {:.1} |",
                stats.amber_critical_s
            )
            .unwrap();
            writeln!(
                out,
                "| amber zone, single robot | {:.1} |",
                stats.amber_single_s
            )
            .unwrap();
        }
        if !self.notes.is_empty() {
            out.push_str("\n## Notes\n\n");
            for note in &self.notes {
                writeln!(out, "- {note}").unwrap();
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| crate::Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lfsim::BehaviourState;
    use crate::markov::{build_model, BuildMode};
    use crate::pipeline::{discretize_ewd, CleanSample, CleanSeries, Source};

    fn model_with_red_at(red: &[usize]) -> MarkovModel {
        let samples = (0..60)
            .map(|t| {
                CleanSample::from_flags(
                    t,
                    Some([1.0 - t as f64 / 60.0, 0.0, 0.0, t as f64 / 60.0, 0.0, 0.0]),
                    red.contains(&t),
                    false,
                    red.contains(&t),
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

    #[test]
    fn reachable_red_zone_is_violated_with_a_trace() {
        let report = analyze_source(&model_with_red_at(&[11]), "LF").unwrap();
        let req1 = &report.verdicts[0];
        assert_eq!(req1.verdict, Verdict::Violated);
        assert!(req1.violation_probability.unwrap() > 0.0);
        let trace = req1.trace.as_ref().unwrap();
        assert_eq!(*trace.last().unwrap(), 11);
    }

    #[test]
    fn clean_run_is_satisfied_everywhere() {
        let report = analyze_source(&model_with_red_at(&[]), "LF").unwrap();
        for v in &report.verdicts {
            assert_eq!(v.verdict, Verdict::Satisfied, "{}", v.requirement);
            assert!(v.trace.is_none());
        }
    }

    #[test]
    fn missing_sources_render_as_no_data() {
        let report = Report::new(
            vec![analyze_source(&model_with_red_at(&[3]), "LF").unwrap()],
            None,
            vec![],
        );
        let text = report.render();
        assert!(text.contains("| REQ 1 fire exit kept clear (red zone) | VIOLATED | no data | no data |"));
    }

    #[test]
    fn zone_table_mirrors_the_reporting_format() {
        let report = Report::new(
            vec![],
            Some(ZoneTimeStats {
                red_s: 73.0,
                amber_critical_s: 44.0,
                amber_single_s: 80.0,
            }),
            vec!["physical trials: 5".into()],
        );
        let text = report.render();
        assert!(text.contains("| red zone occupied | 73.0 |"));
        assert!(text.contains("| amber zone, two or more robots | 44.0 |"));
        assert!(text.contains("| amber zone, single robot | 80.0 |"));
        assert!(text.contains("- physical trials: 5"));
    }

    #[test]
    fn report_writes_to_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.md");
        let report = Report::new(
            vec![analyze_source(&model_with_red_at(&[2]), "LF").unwrap()],
            None,
            vec![],
        );
        report.write(&path).unwrap();
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("# Verification report"));
    }
}
