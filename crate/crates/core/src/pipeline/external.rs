//! Ingestion of externally produced position traces: the high-fidelity
//! simulator CSV format and physical recordings at irregular high rate.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scenario::{Point, ZoneMap};
use crate::{Error, Result};

use super::{CleanSample, CleanSeries, Source};

fn zone_flags(zones: &ZoneMap, positions: &[Point]) -> Result<(bool, bool, bool)> {
    let mut red = false;
    let mut amber = 0usize;
    for p in positions {
        zones.classify_point(*p)?;
        if zones.in_red(*p) {
            red = true;
        }
        if zones.in_amber(*p) {
            amber += 1;
        }
    }
    Ok((red, amber >= 2, amber >= 1))
}

/// Result of ingesting one high-fidelity trial file.
#[derive(Debug, Clone)]
pub struct HfIngest {
    pub series: CleanSeries,
    /// (second, robots missing at that second); those samples carry flags
    /// computed over the robots that are present.
    pub gaps: Vec<(usize, usize)>,
}

/// Ingests a high-fidelity CSV (`robot_id,t_s,x_m,y_m` at one sample per
/// second). State probabilities are unavailable for this source.
pub fn ingest_hf(csv: &Path, zones: &ZoneMap) -> Result<HfIngest> {
    let mut reader = csv::Reader::from_path(csv).map_err(Error::from)?;
    // second -> robot -> position
    let mut by_second: BTreeMap<usize, BTreeMap<usize, Point>> = BTreeMap::new();
    let mut robots: std::collections::BTreeSet<usize> = Default::default();
    for record in reader.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::schema(csv, "expected columns robot_id,t_s,x_m,y_m"));
        }
        let id: usize = record[0]
            .parse()
            .map_err(|_| Error::schema(csv, format!("bad robot_id {}", &record[0])))?;
        let t: f64 = record[1]
            .parse()
            .map_err(|_| Error::schema(csv, format!("bad timestamp {}", &record[1])))?;
        if t.fract() != 0.0 || t < 0.0 {
            return Err(Error::schema(
                csv,
                format!("timestamp {t} is not a whole second"),
            ));
        }
        let x: f64 = record[2]
            .parse()
            .map_err(|_| Error::schema(csv, format!("bad x {}", &record[2])))?;
        let y: f64 = record[3]
            .parse()
            .map_err(|_| Error::schema(csv, format!("bad y {}", &record[3])))?;
        robots.insert(id);
        by_second.entry(t as usize).or_default().insert(id, Point::new(x, y));
    }
    if by_second.is_empty() {
        return Err(Error::EmptyInput(format!("{} holds no samples", csv.display())));
    }
    let last = *by_second.keys().last().unwrap();
    let mut samples = Vec::with_capacity(last + 1);
    let mut gaps = Vec::new();
    for t in 0..=last {
        let present: Vec<Point> = by_second
            .get(&t)
            .map(|m| m.values().copied().collect())
            .unwrap_or_default();
        let missing = robots.len() - present.len();
        if missing > 0 {
            gaps.push((t, missing));
        }
        let (red, crit, single) = zone_flags(zones, &present)?;
        samples.push(CleanSample::from_flags(t, None, red, crit, single, false));
    }
    Ok(HfIngest {
        series: CleanSeries {
            source: Source::Hf,
            samples,
        },
        gaps,
    })
}

/// Coverage accounting for a physical recording.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AvailabilityReport {
    /// Fraction of robot-seconds with a sample within half a second.
    pub availability: f64,
    /// Longest interval between consecutive raw samples of one robot.
    pub max_gap_s: f64,
    pub missing: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct PhysicalIngest {
    pub series: CleanSeries,
    pub report: AvailabilityReport,
}

/// Downsamples an irregular high-rate recording (`robot_id,t_s,x_m,y_m`,
/// float seconds) to 1 Hz by taking the nearest sample to each whole
/// second. Seconds with no sample within half a second are missing and
/// count against availability.
pub fn downsample_physical(
    raw: &Path,
    zones: &ZoneMap,
    duration_s: usize,
) -> Result<PhysicalIngest> {
    let mut reader = csv::Reader::from_path(raw).map_err(Error::from)?;
    let mut per_robot: BTreeMap<usize, Vec<(f64, Point)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::schema(raw, "expected columns robot_id,t_s,x_m,y_m"));
        }
        let id: usize = record[0]
            .parse()
            .map_err(|_| Error::schema(raw, format!("bad robot_id {}", &record[0])))?;
        let t: f64 = record[1]
            .parse()
            .map_err(|_| Error::schema(raw, format!("bad timestamp {}", &record[1])))?;
        let x: f64 = record[2]
            .parse()
            .map_err(|_| Error::schema(raw, format!("bad x {}", &record[2])))?;
        let y: f64 = record[3]
            .parse()
            .map_err(|_| Error::schema(raw, format!("bad y {}", &record[3])))?;
        per_robot.entry(id).or_default().push((t, Point::new(x, y)));
    }
    if per_robot.is_empty() {
        return Err(Error::EmptyInput(format!("{} holds no samples", raw.display())));
    }
    let mut max_gap_s = 0.0f64;
    for samples in per_robot.values_mut() {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in samples.windows(2) {
            max_gap_s = max_gap_s.max(w[1].0 - w[0].0);
        }
    }

    let mut missing = Vec::new();
    let mut grid: Vec<Vec<Point>> = vec![Vec::new(); duration_s];
    let mut covered = 0usize;
    for (id, samples) in &per_robot {
        for (second, row) in grid.iter_mut().enumerate() {
            let target = second as f64;
            // Nearest sample to this second, ties to the earlier one.
            let best = samples
                .iter()
                .map(|(t, p)| ((t - target).abs(), *t, *p))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            match best {
                Some((d, _, p)) if d <= 0.5 => {
                    row.push(p);
                    covered += 1;
                }
                _ => missing.push((*id, second)),
            }
        }
    }
    let total = per_robot.len() * duration_s;
    let mut samples_out = Vec::with_capacity(duration_s);
    for (t, row) in grid.iter().enumerate() {
        let (red, crit, single) = zone_flags(zones, row)?;
        samples_out.push(CleanSample::from_flags(t, None, red, crit, single, false));
    }
    Ok(PhysicalIngest {
        series: CleanSeries {
            source: Source::Phys,
            samples: samples_out,
        },
        report: AvailabilityReport {
            availability: covered as f64 / total as f64,
            max_gap_s,
            missing,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_zone_map, default_scenario};
    use approx::assert_relative_eq;

    fn zones() -> ZoneMap {
        build_zone_map(&default_scenario()).unwrap()
    }

    fn write_csv(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn hf_trial_of_200_seconds() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("robot_id,t_s,x_m,y_m\n");
        for t in 0..200 {
            for id in 0..5 {
                body.push_str(&format!("{id},{t},1.2,0.0\n"));
            }
        }
        let path = write_csv(dir.path(), "hf.csv", &body);
        let ingest = ingest_hf(&path, &zones()).unwrap();
        assert_eq!(ingest.series.len(), 200);
        assert!(ingest.gaps.is_empty());
        // All positions in the deposit zone: no unsafe flags.
        for s in &ingest.series.samples {
            assert!(s.p_state.is_none());
            assert!(!s.red_occupied && !s.amber_single && !s.amber_critical);
        }
    }

    #[test]
    fn hf_red_occupancy_time() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("robot_id,t_s,x_m,y_m\n");
        for t in 0..200 {
            let (x, y) = if t < 46 { (-1.2, -0.5) } else { (0.0, 1.0) };
            body.push_str(&format!("0,{t},{x},{y}\n"));
        }
        let path = write_csv(dir.path(), "hf.csv", &body);
        let ingest = ingest_hf(&path, &zones()).unwrap();
        let red_seconds = ingest
            .series
            .samples
            .iter()
            .filter(|s| s.red_occupied)
            .count();
        assert_eq!(red_seconds, 46);
    }

    #[test]
    fn hf_missing_robot_is_a_flagged_gap() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("robot_id,t_s,x_m,y_m\n");
        for t in 0..5 {
            body.push_str(&format!("0,{t},0.0,1.0\n"));
            if t != 2 {
                body.push_str(&format!("1,{t},0.0,1.0\n"));
            }
        }
        let path = write_csv(dir.path(), "hf.csv", &body);
        let ingest = ingest_hf(&path, &zones()).unwrap();
        assert_eq!(ingest.gaps, vec![(2, 1)]);
    }

    #[test]
    fn physical_nearest_sample_selection() {
        let dir = tempfile::tempdir().unwrap();
        // Samples at 2.010 and 2.020: second 2 takes the 2.010 one.
        let body = "robot_id,t_s,x_m,y_m\n\
                    0,2.010,-1.2,-0.5\n\
                    0,2.020,0.0,1.0\n";
        let path = write_csv(dir.path(), "phys.csv", body);
        let ingest = downsample_physical(&path, &zones(), 3).unwrap();
        assert!(ingest.series.samples[2].red_occupied);
    }

    #[test]
    fn regular_100hz_input_has_full_availability() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("robot_id,t_s,x_m,y_m\n");
        for i in 0..1000 {
            body.push_str(&format!("0,{:.2},0.0,1.0\n", i as f64 * 0.01));
        }
        let path = write_csv(dir.path(), "phys.csv", &body);
        let ingest = downsample_physical(&path, &zones(), 10).unwrap();
        assert_relative_eq!(ingest.report.availability, 1.0);
        assert!(ingest.report.missing.is_empty());
    }

    #[test]
    fn gap_is_reported_with_its_length() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("robot_id,t_s,x_m,y_m\n");
        let mut t = 0.0;
        while t < 10.0 {
            body.push_str(&format!("0,{t:.2},0.0,1.0\n"));
            t += 0.01;
        }
        // 22.8 s silence, then more data.
        t = 32.8;
        while t < 40.0 {
            body.push_str(&format!("0,{t:.2},0.0,1.0\n"));
            t += 0.01;
        }
        let path = write_csv(dir.path(), "phys.csv", &body);
        let ingest = downsample_physical(&path, &zones(), 40).unwrap();
        assert_relative_eq!(ingest.report.max_gap_s, 22.81, epsilon = 0.02);
        assert!(!ingest.report.missing.is_empty());
        assert!(ingest.report.availability < 1.0);
    }

    #[test]
    fn idempotent_on_already_1hz_data() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("robot_id,t_s,x_m,y_m\n");
        for t in 0..20 {
            body.push_str(&format!("0,{t}.0,-1.2,-0.5\n"));
        }
        let path = write_csv(dir.path(), "phys.csv", &body);
        let once = downsample_physical(&path, &zones(), 20).unwrap();
        assert_relative_eq!(once.report.availability, 1.0);
        // Re-emitting the downsampled series and downsampling again
        // changes nothing.
        let mut body2 = String::from("robot_id,t_s,x_m,y_m\n");
        for s in &once.series.samples {
            assert!(s.red_occupied);
            body2.push_str(&format!("0,{}.0,-1.2,-0.5\n", s.t));
        }
        let path2 = write_csv(dir.path(), "phys2.csv", &body2);
        let twice = downsample_physical(&path2, &zones(), 20).unwrap();
        assert_eq!(once.series, twice.series);
    }
}
