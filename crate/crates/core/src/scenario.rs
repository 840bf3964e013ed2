//! Cloakroom world definition: arena geometry, zones and zone membership.
//!
//! The coordinate origin sits at the arena centre with x pointing right and
//! y pointing up, so the default 3.7 m arena spans [-1.85, 1.85] on both
//! axes and the carrier start positions (-1,0), (0,0), (1,0) are interior.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A planar point in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Closed axis-aligned rectangle in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Boundary points count as inside (closed rectangle).
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }
}

/// Scenario configuration: arena, zones, robot and carrier parameters.
///
/// Defaults reproduce the published cloakroom configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub arena_width_cm: f64,
    pub arena_height_cm: f64,
    pub n_robots: usize,
    pub n_carriers: usize,
    pub carrier_initial_positions_m: Vec<Point>,
    pub robot_diameter_cm: f64,
    pub carrier_diameter_cm: f64,
    pub robot_max_speed_cm_s: f64,
    pub camera_range_cm: f64,
    pub ir_range_cm: f64,
    pub avoidance_margin_cm: f64,
    pub heading_resample_period_s: f64,
    pub trial_duration_s: f64,
    pub timesteps_per_trial: usize,
    pub rng_seed: u64,
    /// Transport policy in the DROPOFF state: random walk biased toward the
    /// deposit wall (true) or an unbiased random walk (false).
    pub dropoff_bias: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            arena_width_cm: 370.0,
            arena_height_cm: 370.0,
            n_robots: 5,
            n_carriers: 3,
            carrier_initial_positions_m: vec![
                Point::new(-1.0, 0.0),
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
            ],
            robot_diameter_cm: 25.0,
            // Table value; the low-fidelity simulator may override to the
            // simplified 25 cm circular carrier.
            carrier_diameter_cm: 33.0,
            robot_max_speed_cm_s: 200.0,
            camera_range_cm: 100.0,
            ir_range_cm: 300.0,
            avoidance_margin_cm: 5.0,
            heading_resample_period_s: 0.4,
            trial_duration_s: 200.0,
            timesteps_per_trial: 10_000,
            rng_seed: 0,
            dropoff_bias: true,
        }
    }
}

impl ScenarioConfig {
    /// Timestep length in seconds.
    pub fn dt(&self) -> f64 {
        self.trial_duration_s / self.timesteps_per_trial as f64
    }

    pub fn arena_half_width_m(&self) -> f64 {
        self.arena_width_cm / 200.0
    }

    pub fn arena_half_height_m(&self) -> f64 {
        self.arena_height_cm / 200.0
    }

    /// The full arena rectangle, origin at the centre.
    pub fn arena(&self) -> Rect {
        let hw = self.arena_half_width_m();
        let hh = self.arena_half_height_m();
        Rect::new(-hw, hw, -hh, hh)
    }

    pub fn robot_radius_m(&self) -> f64 {
        self.robot_diameter_cm / 200.0
    }

    pub fn carrier_radius_m(&self) -> f64 {
        self.carrier_diameter_cm / 200.0
    }

    pub fn max_speed_m_s(&self) -> f64 {
        self.robot_max_speed_cm_s / 100.0
    }

    pub fn camera_range_m(&self) -> f64 {
        self.camera_range_cm / 100.0
    }

    pub fn ir_range_m(&self) -> f64 {
        self.ir_range_cm / 100.0
    }

    pub fn avoidance_margin_m(&self) -> f64 {
        self.avoidance_margin_cm / 100.0
    }

    /// Number of timesteps between heading resamples while random-walking.
    pub fn heading_resample_steps(&self) -> usize {
        (self.heading_resample_period_s / self.dt()).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("arena_width_cm", self.arena_width_cm),
            ("arena_height_cm", self.arena_height_cm),
            ("robot_diameter_cm", self.robot_diameter_cm),
            ("carrier_diameter_cm", self.carrier_diameter_cm),
            ("robot_max_speed_cm_s", self.robot_max_speed_cm_s),
            ("camera_range_cm", self.camera_range_cm),
            ("ir_range_cm", self.ir_range_cm),
            ("avoidance_margin_cm", self.avoidance_margin_cm),
            ("heading_resample_period_s", self.heading_resample_period_s),
            ("trial_duration_s", self.trial_duration_s),
        ];
        for (name, value) in positive {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if self.n_robots == 0 {
            return Err(Error::InvalidConfig("n_robots must be positive".into()));
        }
        if self.timesteps_per_trial == 0 {
            return Err(Error::InvalidConfig(
                "timesteps_per_trial must be positive".into(),
            ));
        }
        if self.carrier_initial_positions_m.len() < self.n_carriers {
            return Err(Error::InvalidConfig(format!(
                "{} carriers requested but only {} initial positions given",
                self.n_carriers,
                self.carrier_initial_positions_m.len()
            )));
        }
        let arena = self.arena();
        for p in self.carrier_initial_positions_m.iter().take(self.n_carriers) {
            if !arena.contains(*p) {
                return Err(Error::InvalidConfig(format!(
                    "carrier position ({}, {}) outside arena",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ScenarioConfig =
            toml::from_str(&text).map_err(|e| Error::Toml(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_file(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).map_err(|e| Error::Toml(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// The published cloakroom configuration.
pub fn default_scenario() -> ScenarioConfig {
    ScenarioConfig::default()
}

/// Zone membership tag for a point, priority-resolved (Red > AmberOnly >
/// Deposit > Open).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZoneTag {
    Red,
    AmberOnly,
    Deposit,
    Open,
}

/// The three cloakroom zones plus the fire exit marker.
///
/// `amber` is the enclosing rectangle (red expanded by the buffer margin,
/// clipped to the arena); the amber-only band is obtained by subtraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneMap {
    pub red: Rect,
    pub amber: Rect,
    pub deposit: Rect,
    pub fire_exit_marker: Point,
    arena: Rect,
}

pub const RED_WIDTH_M: f64 = 0.85;
pub const RED_HEIGHT_M: f64 = 1.85;
pub const AMBER_MARGIN_M: f64 = 0.50;
pub const DEPOSIT_WIDTH_M: f64 = 0.85;

/// Builds the zone map for a configuration.
///
/// Red is anchored at the bottom-left arena corner, the deposit strip runs
/// along the right wall at full arena height.
pub fn build_zone_map(config: &ScenarioConfig) -> Result<ZoneMap> {
    config.validate()?;
    let arena = config.arena();
    let red = Rect::new(
        arena.x_min,
        arena.x_min + RED_WIDTH_M,
        arena.y_min,
        arena.y_min + RED_HEIGHT_M,
    );
    let amber = Rect::new(
        (red.x_min - AMBER_MARGIN_M).max(arena.x_min),
        (red.x_max + AMBER_MARGIN_M).min(arena.x_max),
        (red.y_min - AMBER_MARGIN_M).max(arena.y_min),
        (red.y_max + AMBER_MARGIN_M).min(arena.y_max),
    );
    let deposit = Rect::new(
        arena.x_max - DEPOSIT_WIDTH_M,
        arena.x_max,
        arena.y_min,
        arena.y_max,
    );
    if red.x_max > arena.x_max || red.y_max > arena.y_max {
        return Err(Error::InvalidConfig(
            "arena too small to contain the fire exit zones".into(),
        ));
    }
    if deposit.x_min < arena.x_min {
        return Err(Error::InvalidConfig(
            "arena too small to contain the deposit zone".into(),
        ));
    }
    if amber.x_max >= deposit.x_min {
        return Err(Error::InvalidConfig(
            "amber buffer overlaps the deposit zone".into(),
        ));
    }
    // Fire exit marked on the left wall at the middle of the red zone.
    let fire_exit_marker = Point::new(arena.x_min, red.center().y);
    Ok(ZoneMap {
        red,
        amber,
        deposit,
        fire_exit_marker,
        arena,
    })
}

impl ZoneMap {
    pub fn arena(&self) -> Rect {
        self.arena
    }

    /// Classifies a point, red winning ties on shared boundaries.
    ///
    /// Points outside the arena signal corrupt trace data.
    pub fn classify_point(&self, p: Point) -> Result<ZoneTag> {
        if !self.arena.contains(p) {
            return Err(Error::PointOutsideArena { x: p.x, y: p.y });
        }
        if self.red.contains(p) {
            Ok(ZoneTag::Red)
        } else if self.amber.contains(p) {
            Ok(ZoneTag::AmberOnly)
        } else if self.deposit.contains(p) {
            Ok(ZoneTag::Deposit)
        } else {
            Ok(ZoneTag::Open)
        }
    }

    /// True when the point is in the amber rectangle (red included, per the
    /// counting rule: a robot in red counts against both requirements).
    pub fn in_amber(&self, p: Point) -> bool {
        self.amber.contains(p)
    }

    pub fn in_red(&self, p: Point) -> bool {
        self.red.contains(p)
    }

    pub fn in_deposit(&self, p: Point) -> bool {
        self.deposit.contains(p)
    }
}
