//! Parameter-sweep experiments: evaluate one property at a series of
//! sweep-variable values, with CSV and SVG plot output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::markov::MarkovModel;
use crate::propspec::{bind, uses_variable, Property};
use crate::{Error, Result};

use super::{evaluate, CheckResult};

/// Sweep of one named variable over `start..=stop` in steps of `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: String,
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl SweepSpec {
    pub fn new(variable: impl Into<String>, start: f64, step: f64, stop: f64) -> Result<Self> {
        let spec = SweepSpec {
            variable: variable.into(),
            start,
            step,
            stop,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sweep step {} must be positive",
                self.step
            )));
        }
        if self.start > self.stop {
            return Err(Error::InvalidConfig(format!(
                "sweep start {} exceeds stop {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Parses the CLI form `NAME=START:STEP:STOP`, e.g. `T=0:10:200`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidConfig(format!(
                "sweep `{text}` is not of the form NAME=START:STEP:STOP"
            ))
        };
        let (name, range) = text.split_once('=').ok_or_else(bad)?;
        let mut parts = range.split(':');
        let mut next = || -> Result<f64> {
            parts
                .next()
                .and_then(|p| p.trim().parse().ok())
                .ok_or_else(bad)
        };
        let (start, step, stop) = (next()?, next()?, next()?);
        if parts.next().is_some() {
            return Err(bad());
        }
        SweepSpec::new(name.trim(), start, step, stop)
    }

    pub fn points(&self) -> Vec<f64> {
        let mut points = Vec::new();
        let mut k = 0u64;
        loop {
            let v = self.start + self.step * k as f64;
            if v > self.stop + 1e-9 {
                break;
            }
            points.push(v);
            k += 1;
        }
        points
    }
}

/// Evaluates `property` at every sweep point. The property must actually
/// reference the sweep variable; other parameters come from `defines`.
pub fn run_experiment(
    model: &MarkovModel,
    property: &Property,
    sweep: &SweepSpec,
    defines: &BTreeMap<String, f64>,
) -> Result<Vec<(f64, CheckResult)>> {
    sweep.validate()?;
    if !uses_variable(property, &sweep.variable) {
        return Err(Error::SweepVariableUnused(sweep.variable.clone()));
    }
    sweep
        .points()
        .into_par_iter()
        .map(|v| {
            let mut defines = defines.clone();
            defines.insert(sweep.variable.clone(), v);
            let bound = bind(property, model, &defines)?;
            Ok((v, evaluate(model, &bound)?))
        })
        .collect()
}

/// Writes sweep results as `variable,value` CSV.
pub fn write_experiment_csv(
    path: &Path,
    sweep: &SweepSpec,
    points: &[(f64, CheckResult)],
) -> Result<()> {
    let mut out = format!("{},value\n", sweep.variable);
    for (v, result) in points {
        writeln!(out, "{v},{}", result.render()).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Renders sweep results as a simple SVG polyline plot.
pub fn write_experiment_svg(
    path: &Path,
    title: &str,
    _sweep: &SweepSpec,
    points: &[(f64, CheckResult)],
) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 50.0;
    let xs: Vec<f64> = points.iter().map(|(v, _)| *v).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| r.as_number()).collect();
    if xs.is_empty() {
        return Err(Error::EmptyInput("no sweep points to plot".into()));
    }
    let (x_lo, x_hi) = (xs[0], *xs.last().unwrap());
    let y_lo = ys.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let mut y_hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let x_of = |x: f64| {
        MARGIN + (x - x_lo) / (x_hi - x_lo).max(1e-12) * (W - 2.0 * MARGIN)
    };
    let y_of = |y: f64| H - MARGIN - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * MARGIN);
    let polyline: String = points
        .iter()
        .map(|(x, r)| format!("{:.2},{:.2}", x_of(*x), y_of(r.as_number())))
        .collect::<Vec<_>>()
        .join(" ");
    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<text x=\"{:.0}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{}</text>",
        W / 2.0,
        title
    )
    .unwrap();
    // Axes.
    writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{b:.0}\" x2=\"{r:.0}\" y2=\"{b:.0}\" stroke=\"black\"/>",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    )
    .unwrap();
    writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b:.0}\" stroke=\"black\"/>",
        m = MARGIN,
        b = H - MARGIN
    )
    .unwrap();
    for (value, pos, anchor, dy) in [
        (x_lo, (x_of(x_lo), H - MARGIN + 18.0), "middle", 0.0),
        (x_hi, (x_of(x_hi), H - MARGIN + 18.0), "middle", 0.0),
        (y_lo, (MARGIN - 6.0, y_of(y_lo)), "end", 4.0),
        (y_hi, (MARGIN - 6.0, y_of(y_hi)), "end", 4.0),
    ] {
        writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"{}\" font-family=\"sans-serif\" \
             font-size=\"11\">{:.3}</text>",
            pos.0,
            pos.1 + dy,
            anchor,
            value
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<polyline points=\"{polyline}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>"
    )
    .unwrap();
    writeln!(svg, "</svg>").unwrap();
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::super::engine::test_chain as chain;
    use super::*;
    use crate::propspec::parse;
    use approx::assert_relative_eq;

    fn goal_model() -> MarkovModel {
        let mut model = chain(2, vec![(0, 1, 1.0), (1, 1, 1.0)]);
        model
            .labels
            .insert("goal".to_string(), std::iter::once(1).collect());
        model
    }

    #[test]
    fn sweep_parsing_round_trips_the_cli_form() {
        let sweep = SweepSpec::parse("T=0:10:200").unwrap();
        assert_eq!(sweep.variable, "T");
        assert_eq!(sweep.points().len(), 21);
        assert!(SweepSpec::parse("T=0:0:10").is_err());
        assert!(SweepSpec::parse("T=5:1:2").is_err());
        assert!(SweepSpec::parse("nonsense").is_err());
    }

    #[test]
    fn bounded_reachability_sweep_is_nondecreasing() {
        let model = goal_model();
        let prop = parse("P=? [ F<=T \"goal\" ]").unwrap();
        let sweep = SweepSpec::new("T", 0.0, 1.0, 10.0).unwrap();
        let points = run_experiment(&model, &prop, &sweep, &BTreeMap::new()).unwrap();
        assert_eq!(points.len(), 11);
        let mut last = -1.0;
        for (_, result) in &points {
            let v = result.as_number();
            assert!(v >= last - 1e-12);
            last = v;
        }
    }

    #[test]
    fn single_point_sweep_matches_a_direct_check() {
        let model = goal_model();
        let prop = parse("P=? [ F<=T \"goal\" ]").unwrap();
        let sweep = SweepSpec::new("T", 0.0, 1.0, 0.0).unwrap();
        let points = run_experiment(&model, &prop, &sweep, &BTreeMap::new()).unwrap();
        assert_eq!(points.len(), 1);
        assert_relative_eq!(points[0].1.as_number(), 0.0);
    }

    #[test]
    fn unused_sweep_variable_is_an_error() {
        let model = goal_model();
        let prop = parse("P=? [ F<=5 \"goal\" ]").unwrap();
        let sweep = SweepSpec::new("T", 0.0, 1.0, 10.0).unwrap();
        assert!(matches!(
            run_experiment(&model, &prop, &sweep, &BTreeMap::new()),
            Err(Error::SweepVariableUnused(_))
        ));
    }

    #[test]
    fn csv_and_svg_outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let model = goal_model();
        let prop = parse("P=? [ F<=T \"goal\" ]").unwrap();
        let sweep = SweepSpec::new("T", 0.0, 2.0, 10.0).unwrap();
        let points = run_experiment(&model, &prop, &sweep, &BTreeMap::new()).unwrap();
        let csv = dir.path().join("sweep.csv");
        let svg = dir.path().join("sweep.svg");
        write_experiment_csv(&csv, &sweep, &points).unwrap();
        write_experiment_svg(&svg, "bounded reachability", &sweep, &points).unwrap();
        let csv_text = std::fs::read_to_string(&csv).unwrap();
        assert!(csv_text.starts_with("T,value\n"));
        assert_eq!(csv_text.lines().count(), 7);
        let svg_text = std::fs::read_to_string(&svg).unwrap();
        assert!(svg_text.contains("<polyline"));
        assert!(svg_text.contains("</svg>"));
    }
}
