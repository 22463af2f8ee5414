//! Deterministic kinematic highway world.
//!
//! One autonomous vehicle (AV) drives a straight multi-lane road among
//! human-driven vehicles (HDVs). HDVs follow an intelligent-driver-model
//! longitudinal law and, optionally, scripted random lane changes. The AV is
//! controlled one discrete action per step; lane changes run as fixed-duration
//! lateral maneuvers. All randomness comes from the reset seed, so identical
//! `(config, seed, actions)` reproduce identical step outcomes bit for bit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::seeds;
use crate::Result;

/// Default vehicle footprint, used for every spawned vehicle.
pub const VEHICLE_LENGTH: f64 = 5.0;
pub const VEHICLE_WIDTH: f64 = 2.0;

/// Speed increment applied by one accelerate/decelerate action (m/s).
pub const SPEED_INCREMENT: f64 = 1.5;

/// Fixed duration of a lane-change maneuver (s).
pub const LANE_CHANGE_DURATION: f64 = 1.5;

/// Total-gap threshold of the neighbor-selection rule (m).
pub const SELECTION_GAP_THRESHOLD: f64 = 20.0;

/// Minimum bumper clearance enforced between spawned vehicles (m).
const SPAWN_CLEARANCE: f64 = 1.0;

// Intelligent-driver-model constants for HDV longitudinal control.
const IDM_MAX_ACCEL: f64 = 1.5; // m/s^2
const IDM_COMF_DECEL: f64 = 2.0; // m/s^2
const IDM_MIN_GAP: f64 = 2.0; // m
const IDM_HEADWAY: f64 = 1.5; // s

/// Pose, speed, and footprint of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Longitudinal position of the center (m).
    pub x: f64,
    /// Lateral position of the center (m); lane 0's center is at lane_width/2.
    pub y: f64,
    /// Speed (m/s), always >= 0.
    pub v: f64,
    /// Heading (rad); |heading| < pi/2, forward motion only.
    pub heading: f64,
    /// Lane index, 0 = bottom lane. Updated when a lane change completes.
    pub lane: usize,
    /// Footprint length (m).
    pub length: f64,
    /// Footprint width (m).
    pub width: f64,
    /// Role flag; exactly one vehicle per world has it set.
    pub is_av: bool,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, v: f64, lane: usize, is_av: bool) -> Self {
        VehicleState {
            x,
            y,
            v,
            heading: 0.0,
            lane,
            length: VEHICLE_LENGTH,
            width: VEHICLE_WIDTH,
            is_av,
        }
    }

    /// Corner coordinates of the oriented footprint rectangle.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        let (sin, cos) = self.heading.sin_cos();
        let rot = |dx: f64, dy: f64| (self.x + dx * cos - dy * sin, self.y + dx * sin + dy * cos);
        [rot(hl, hw), rot(hl, -hw), rot(-hl, -hw), rot(-hl, hw)]
    }

    /// True when the lateral extents of the two footprints overlap.
    pub fn lateral_overlap(&self, other: &VehicleState) -> bool {
        (self.y - other.y).abs() < (self.width + other.width) / 2.0
    }
}

/// Scenario shape and episode limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub lane_count: usize,
    pub lane_width: f64,
    pub road_length: f64,
    pub hdv_count: usize,
    pub av_speed_range: (f64, f64),
    pub hdv_speed_range: (f64, f64),
    pub hdv_spawn_gap_range: (f64, f64),
    pub max_speed: f64,
    pub dt: f64,
    pub max_steps: u64,
    pub seed: u64,
    /// Per-step probability that an idle HDV starts a scripted lane change.
    #[serde(default)]
    pub hdv_lane_change_prob: f64,
    /// Longitudinal range within which adjacent-lane vehicles count as
    /// relevant when the own-lane gap is open.
    #[serde(default = "default_relevant_range")]
    pub relevant_range: f64,
}

fn default_relevant_range() -> f64 {
    50.0
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            lane_count: 3,
            lane_width: 4.0,
            road_length: 1000.0,
            hdv_count: 5,
            av_speed_range: (23.0, 25.0),
            hdv_speed_range: (17.0, 22.0),
            hdv_spawn_gap_range: (25.0, 60.0),
            max_speed: 40.0,
            dt: 0.1,
            max_steps: 400,
            seed: 0,
            hdv_lane_change_prob: 0.0,
            relevant_range: default_relevant_range(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(msg.to_string()))
            }
        };
        check(self.lane_count >= 2, "lane_count must be >= 2")?;
        check(self.lane_width > 0.0, "lane_width must be > 0")?;
        check(self.road_length > 0.0, "road_length must be > 0")?;
        check(self.max_speed > 0.0, "max_speed must be > 0")?;
        check(self.dt > 0.0, "dt must be > 0")?;
        check(self.max_steps >= 1, "max_steps must be >= 1")?;
        for (name, (lo, hi)) in [
            ("av_speed_range", self.av_speed_range),
            ("hdv_speed_range", self.hdv_speed_range),
            ("hdv_spawn_gap_range", self.hdv_spawn_gap_range),
        ] {
            check(
                lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0,
                &format!("{name} must be a nonempty nonnegative interval"),
            )?;
        }
        check(
            (0.0..=1.0).contains(&self.hdv_lane_change_prob),
            "hdv_lane_change_prob must be in [0, 1]",
        )?;
        check(self.relevant_range > 0.0, "relevant_range must be > 0")?;
        Ok(())
    }

    /// Lateral center of a lane (m).
    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width
    }
}

/// One discrete control choice per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    KeepLane,
    ChangeLeft,
    ChangeRight,
    Accelerate,
    Decelerate,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::KeepLane,
        Action::ChangeLeft,
        Action::ChangeRight,
        Action::Accelerate,
        Action::Decelerate,
    ];

    pub fn index(self) -> usize {
        match self {
            Action::KeepLane => 0,
            Action::ChangeLeft => 1,
            Action::ChangeRight => 2,
            Action::Accelerate => 3,
            Action::Decelerate => 4,
        }
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    Collision,
    Horizon,
    Goal,
}

/// Immutable view of the world after a step.
#[derive(Debug, Clone)]
pub struct WorldSnapshot {
    pub av: VehicleState,
    pub hdvs: Vec<VehicleState>,
    pub time: f64,
}

/// Result of advancing the world by one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: WorldSnapshot,
    pub collided: bool,
    pub off_road: bool,
    pub av_speed: f64,
    /// True on the step a lane-change maneuver was initiated.
    pub lane_changed: bool,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
}

/// In-flight lateral maneuver.
#[derive(Debug, Clone)]
struct Maneuver {
    from_y: f64,
    to_y: f64,
    target_lane: usize,
    elapsed: f64,
}

/// Cubic ease between 0 and 1 with zero slope at both ends.
pub fn smoothstep01(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// The simulated world. Single-threaded; queries are pure.
#[derive(Debug, Clone)]
pub struct World {
    config: ScenarioConfig,
    av: VehicleState,
    hdvs: Vec<VehicleState>,
    hdv_desired: Vec<f64>,
    hdv_maneuvers: Vec<Option<Maneuver>>,
    av_maneuver: Option<Maneuver>,
    time: f64,
    steps: u64,
    done: bool,
    done_reason: Option<DoneReason>,
    rng: ChaCha8Rng,
}

impl World {
    /// Build the initial world: AV in a middle lane at x = 0, HDVs placed
    /// ahead with randomized gaps and speeds, no pairwise overlap.
    pub fn reset(config: &ScenarioConfig, seed: u64) -> Result<World> {
        config.validate()?;
        let mut rng = seeds::stream(seed, "world");

        let av_lane = config.lane_count / 2;
        let av_speed = draw_range(&mut rng, config.av_speed_range).min(config.max_speed);
        let av = VehicleState::new(0.0, config.lane_center(av_lane), av_speed, av_lane, true);

        // Round-robin lane assignment keeps feasibility a pure function of
        // the config; gaps and speeds stay randomized.
        let mut lane_counts = vec![0usize; config.lane_count];
        for i in 0..config.hdv_count {
            lane_counts[i % config.lane_count] += 1;
        }

        // Feasibility check up front: each lane must fit its share at the
        // minimum center spacing, starting from the AV's x.
        let min_gap = VEHICLE_LENGTH + SPAWN_CLEARANCE;
        for (lane, &count) in lane_counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let last_center = av.x + count as f64 * min_gap;
            if last_center + VEHICLE_LENGTH / 2.0 > config.road_length {
                return Err(Error::InfeasibleScenario {
                    requested: config.hdv_count,
                    road_length: config.road_length,
                    detail: format!("lane {lane} exceeds road length at minimum spacing"),
                });
            }
        }

        let mut hdvs = Vec::with_capacity(config.hdv_count);
        let mut hdv_desired = Vec::with_capacity(config.hdv_count);
        for (lane, &count) in lane_counts.iter().enumerate() {
            let mut cursor = av.x; // spawn ahead of the AV's start position
            for j in 0..count {
                let gap = draw_range(&mut rng, config.hdv_spawn_gap_range);
                let speed = draw_range(&mut rng, config.hdv_speed_range).min(config.max_speed);
                // Cap the placement so every remaining vehicle in this lane
                // still fits at the minimum spacing.
                let remaining = (count - 1 - j) as f64;
                let max_center = config.road_length - VEHICLE_LENGTH / 2.0 - remaining * min_gap;
                let x = (cursor + gap.max(min_gap)).min(max_center);
                hdvs.push(VehicleState::new(
                    x,
                    config.lane_center(lane),
                    speed,
                    lane,
                    false,
                ));
                hdv_desired.push(speed);
                cursor = x;
            }
        }

        let hdv_maneuvers = vec![None; hdvs.len()];
        Ok(World {
            config: config.clone(),
            av,
            hdvs,
            hdv_desired,
            hdv_maneuvers,
            av_maneuver: None,
            time: 0.0,
            steps: 0,
            done: false,
            done_reason: None,
            rng,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn av(&self) -> &VehicleState {
        &self.av
    }

    pub fn hdvs(&self) -> &[VehicleState] {
        &self.hdvs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn done_reason(&self) -> Option<DoneReason> {
        self.done_reason
    }

    /// True while the AV is mid lane-change; change actions are ignored then.
    pub fn av_maneuver_active(&self) -> bool {
        self.av_maneuver.is_some()
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            av: self.av.clone(),
            hdvs: self.hdvs.clone(),
            time: self.time,
        }
    }

    /// Build a world from explicit vehicle states (scene files, tests).
    /// Exactly one vehicle must carry the AV flag; HDV desired speeds default
    /// to their spawn speeds.
    pub fn from_vehicles(config: &ScenarioConfig, vehicles: Vec<VehicleState>) -> Result<World> {
        config.validate()?;
        let av_count = vehicles.iter().filter(|v| v.is_av).count();
        if av_count != 1 {
            return Err(Error::InvalidConfig(format!(
                "scene must contain exactly one vehicle with is_av=true, found {av_count}"
            )));
        }
        let av = vehicles.iter().find(|v| v.is_av).cloned().unwrap();
        let hdvs: Vec<VehicleState> = vehicles.into_iter().filter(|v| !v.is_av).collect();
        let hdv_desired = hdvs.iter().map(|h| h.v).collect();
        let hdv_maneuvers = vec![None; hdvs.len()];
        Ok(World {
            config: config.clone(),
            av,
            hdvs,
            hdv_desired,
            hdv_maneuvers,
            av_maneuver: None,
            time: 0.0,
            steps: 0,
            done: false,
            done_reason: None,
            rng: seeds::stream(config.seed, "world"),
        })
    }

    /// Insert an HDV into a running world; its desired speed is its current
    /// speed.
    pub fn push_hdv(&mut self, hdv: VehicleState) {
        self.hdv_desired.push(hdv.v);
        self.hdv_maneuvers.push(None);
        self.hdvs.push(hdv);
    }

    /// Advance every vehicle by `dt` with the AV applying `action`.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let dt = self.config.dt;

        // HDV accelerations come from the pre-step snapshot so the update
        // order of vehicles cannot leak into the result.
        let hdv_accels: Vec<f64> = (0..self.hdvs.len()).map(|i| self.hdv_accel(i)).collect();

        // Resolve the AV action. Change actions are masked at edge lanes and
        // while a maneuver is already running; speed holds during a maneuver.
        let mut lane_changed = false;
        if self.av_maneuver.is_none() {
            match action {
                Action::KeepLane => {}
                Action::Accelerate => {
                    self.av.v = (self.av.v + SPEED_INCREMENT).min(self.config.max_speed);
                }
                Action::Decelerate => {
                    self.av.v = (self.av.v - SPEED_INCREMENT).max(0.0);
                }
                Action::ChangeLeft | Action::ChangeRight => {
                    if let Some(target) = self.adjacent_lane(self.av.lane, action) {
                        self.av_maneuver = Some(Maneuver {
                            from_y: self.av.y,
                            to_y: self.config.lane_center(target),
                            target_lane: target,
                            elapsed: 0.0,
                        });
                        lane_changed = true;
                    }
                }
            }
        }

        // Advance the AV.
        let prev_y = self.av.y;
        self.av.x += self.av.v * dt;
        if let Some(m) = &mut self.av_maneuver {
            m.elapsed += dt;
            let u = m.elapsed / LANE_CHANGE_DURATION;
            self.av.y = m.from_y + (m.to_y - m.from_y) * smoothstep01(u);
            if m.elapsed + 1e-9 >= LANE_CHANGE_DURATION {
                self.av.y = m.to_y;
                self.av.lane = m.target_lane;
                self.av_maneuver = None;
            }
        }
        self.av.heading = if self.av.v * dt > 1e-12 {
            ((self.av.y - prev_y) / (self.av.v * dt)).atan()
        } else {
            0.0
        };

        // Advance HDVs: longitudinal IDM plus optional scripted lane changes.
        for i in 0..self.hdvs.len() {
            let hdv = &mut self.hdvs[i];
            hdv.v = (hdv.v + hdv_accels[i] * dt).clamp(0.0, self.config.max_speed);
            let prev_y = hdv.y;
            hdv.x += hdv.v * dt;
            if self.hdv_maneuvers[i].is_none() && self.config.hdv_lane_change_prob > 0.0 {
                let roll: f64 = self.rng.gen();
                if roll < self.config.hdv_lane_change_prob {
                    let dir = if self.rng.gen::<bool>() {
                        Action::ChangeLeft
                    } else {
                        Action::ChangeRight
                    };
                    let lane = self.hdvs[i].lane;
                    if let Some(target) = self.adjacent_lane(lane, dir) {
                        self.hdv_maneuvers[i] = Some(Maneuver {
                            from_y: self.hdvs[i].y,
                            to_y: self.config.lane_center(target),
                            target_lane: target,
                            elapsed: 0.0,
                        });
                    }
                }
            }
            if let Some(m) = &mut self.hdv_maneuvers[i] {
                m.elapsed += dt;
                let hdv = &mut self.hdvs[i];
                let u = m.elapsed / LANE_CHANGE_DURATION;
                hdv.y = m.from_y + (m.to_y - m.from_y) * smoothstep01(u);
                if m.elapsed + 1e-9 >= LANE_CHANGE_DURATION {
                    hdv.y = m.to_y;
                    hdv.lane = m.target_lane;
                    self.hdv_maneuvers[i] = None;
                }
            }
            let hdv = &mut self.hdvs[i];
            hdv.heading = if hdv.v * dt > 1e-12 {
                ((hdv.y - prev_y) / (hdv.v * dt)).atan()
            } else {
                0.0
            };
        }

        self.time += dt;
        self.steps += 1;

        let collided = self
            .hdvs
            .iter()
            .any(|hdv| rects_intersect(&self.av.corners(), &hdv.corners()));
        let road_width = self.config.lane_count as f64 * self.config.lane_width;
        let off_road = self.av.y - self.av.width / 2.0 < 0.0
            || self.av.y + self.av.width / 2.0 > road_width;

        let done_reason = if collided {
            Some(DoneReason::Collision)
        } else if self.av.x >= self.config.road_length {
            Some(DoneReason::Goal)
        } else if self.steps >= self.config.max_steps {
            Some(DoneReason::Horizon)
        } else {
            None
        };
        self.done = done_reason.is_some();
        self.done_reason = done_reason;

        Ok(StepOutcome {
            next_state: self.snapshot(),
            collided,
            off_road,
            av_speed: self.av.v,
            lane_changed,
            done: self.done,
            done_reason,
        })
    }

    fn adjacent_lane(&self, lane: usize, action: Action) -> Option<usize> {
        match action {
            Action::ChangeLeft if lane + 1 < self.config.lane_count => Some(lane + 1),
            Action::ChangeRight if lane > 0 => Some(lane - 1),
            _ => None,
        }
    }

    /// IDM acceleration for HDV `i` against its nearest same-lane leader
    /// (which may be the AV).
    fn hdv_accel(&self, i: usize) -> f64 {
        let hdv = &self.hdvs[i];
        let desired = self.hdv_desired[i].max(0.1);

        let mut leader: Option<(f64, f64, f64)> = None; // (x, v, length)
        let mut consider = |x: f64, v: f64, length: f64, lane: usize| {
            if lane == hdv.lane && x > hdv.x {
                match leader {
                    Some((lx, _, _)) if x >= lx => {}
                    _ => leader = Some((x, v, length)),
                }
            }
        };
        for (j, other) in self.hdvs.iter().enumerate() {
            if j != i {
                consider(other.x, other.v, other.length, other.lane);
            }
        }
        consider(self.av.x, self.av.v, self.av.length, self.av.lane);

        let free = IDM_MAX_ACCEL * (1.0 - (hdv.v / desired).powi(4));
        match leader {
            None => free,
            Some((lx, lv, llen)) => {
                let net_gap = (lx - hdv.x) - (llen + hdv.length) / 2.0;
                if net_gap <= 0.1 {
                    return -IDM_COMF_DECEL * 3.0;
                }
                let approaching = hdv.v - lv;
                let desired_gap = IDM_MIN_GAP
                    + hdv.v * IDM_HEADWAY
                    + hdv.v * approaching / (2.0 * (IDM_MAX_ACCEL * IDM_COMF_DECEL).sqrt());
                let interaction = (desired_gap.max(0.0) / net_gap).powi(2);
                (free - IDM_MAX_ACCEL * interaction).max(-IDM_COMF_DECEL * 3.0)
            }
        }
    }

    /// Nearest front / rear vehicle centers in a lane, relative to the AV.
    fn nearest_in_lane(&self, lane: usize) -> (Option<&VehicleState>, Option<&VehicleState>) {
        let mut front: Option<&VehicleState> = None;
        let mut rear: Option<&VehicleState> = None;
        for hdv in &self.hdvs {
            if hdv.lane != lane {
                continue;
            }
            if hdv.x > self.av.x {
                if front.map_or(true, |f| hdv.x < f.x) {
                    front = Some(hdv);
                }
            } else if rear.map_or(true, |r| hdv.x > r.x) {
                rear = Some(hdv);
            }
        }
        (front, rear)
    }

    /// The traffic the decision layer should attend to: the front and rear
    /// vehicles in the AV's lane always; per adjacent lane, everything within
    /// range when the own-lane gap is open (> 20 m total), otherwise only the
    /// nearest vehicle.
    pub fn select_relevant_hdvs(&self) -> Vec<VehicleState> {
        let (front, rear) = self.nearest_in_lane(self.av.lane);
        let front_gap = front.map_or(f64::INFINITY, |f| f.x - self.av.x);
        let rear_gap = rear.map_or(f64::INFINITY, |r| self.av.x - r.x);
        let total_gap = front_gap + rear_gap;

        let mut out = Vec::new();
        if let Some(f) = front {
            out.push(f.clone());
        }
        if let Some(r) = rear {
            out.push(r.clone());
        }

        let mut adjacent: Vec<usize> = Vec::new();
        if self.av.lane > 0 {
            adjacent.push(self.av.lane - 1);
        }
        if self.av.lane + 1 < self.config.lane_count {
            adjacent.push(self.av.lane + 1);
        }

        for lane in adjacent {
            if total_gap > SELECTION_GAP_THRESHOLD {
                let mut lane_vehicles: Vec<&VehicleState> = self
                    .hdvs
                    .iter()
                    .filter(|h| {
                        h.lane == lane
                            && ((h.x - self.av.x).abs() <= self.config.relevant_range
                                || h.lateral_overlap(&self.av))
                    })
                    .collect();
                lane_vehicles.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
                out.extend(lane_vehicles.into_iter().cloned());
            } else if let Some(nearest) = self
                .hdvs
                .iter()
                .filter(|h| h.lane == lane)
                .min_by(|a, b| {
                    let da = (a.x - self.av.x).abs();
                    let db = (b.x - self.av.x).abs();
                    da.partial_cmp(&db).unwrap()
                })
            {
                out.push(nearest.clone());
            }
        }
        out
    }

    /// Bumper-to-bumper distance to the nearest vehicle ahead of the AV in
    /// `lane`, or None when the lane is clear ahead.
    pub fn front_gap(&self, lane: usize) -> Option<f64> {
        self.hdvs
            .iter()
            .filter(|h| h.lane == lane && h.x > self.av.x)
            .map(|h| (h.x - h.length / 2.0) - (self.av.x + self.av.length / 2.0))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

fn draw_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Separating-axis intersection test for two convex quadrilaterals.
pub fn rects_intersect(a: &[(f64, f64); 4], b: &[(f64, f64); 4]) -> bool {
    let axes = |r: &[(f64, f64); 4]| {
        [
            (r[1].0 - r[0].0, r[1].1 - r[0].1),
            (r[3].0 - r[0].0, r[3].1 - r[0].1),
        ]
    };
    for (ax, ay) in axes(a).into_iter().chain(axes(b)) {
        let norm = (-ay, ax);
        let project = |r: &[(f64, f64); 4]| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &(px, py) in r {
                let p = px * norm.0 + py * norm.1;
                lo = lo.min(p);
                hi = hi.max(p);
            }
            (lo, hi)
        };
        let (alo, ahi) = project(a);
        let (blo, bhi) = project(b);
        if ahi < blo || bhi < alo {
            return false;
        }
    }
    true
}
