//! Synchronous discrete-time world stepper for the reactive controllers.
//!
//! Every tick runs four phases against a snapshot of the previous tick's
//! poses, so the update carries no order dependence:
//!
//! 1. snapshot all positions;
//! 2. recompute sensing-cone blocked flags (and open/close collision
//!    events) from the snapshot;
//! 3. apply the per-agent controller update (goal reassignment, step
//!    renewal, heading);
//! 4. integrate forward motion, stopping exactly on the goal tolerance
//!    circle via segment/disk intersection.
//!
//! RNG splitting: one ChaCha8 stream per agent drives its step durations
//! and heading noise (stream id `agent index + 1`), and stream 0 of the
//! same seed drives world-level draws (initial placement and every goal).
//! Trials with equal `(config, seed)` are bit-identical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{
    angle_diff, cone_contains_dir, delta_unchecked, sample_step, segment_disk_hit_fraction,
    wrap_angle, ConeSpec, Point2, Pose, StepPlan,
};

/// Collisions with head-on metric below this are classified as head-on.
pub const HEADON_THRESHOLD: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// No walls at all: goals stay inside the arena but noisy walkers may
    /// stray outside it.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnMode {
    Instantaneous,
    /// Rotate toward each new travel angle at `omega` rad/s; time spent
    /// turning does not count against the step duration.
    Finite { omega: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    ConstantNoise,
    ConditionalNoise,
    /// Handled by the `planner` module; `run_trial` here rejects it.
    Planner,
}

fn default_dt() -> f64 {
    0.1
}
fn default_trial_time() -> f64 {
    8000.0
}
fn default_boundary() -> Boundary {
    Boundary::Periodic
}
fn default_turn_mode() -> TurnMode {
    TurnMode::Instantaneous
}
fn default_controller() -> Controller {
    Controller::ConstantNoise
}
fn default_window() -> f64 {
    0.25
}

/// Full parameter set for one trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    /// arena side length
    pub l: f64,
    /// team size
    pub n: u32,
    /// rotational noise std dev (radians)
    pub sigma: f64,
    /// sensing cone radius
    pub r: f64,
    /// sensing cone opening angle (radians)
    pub gamma: f64,
    /// mean step length
    pub b: f64,
    /// cruising speed
    pub v: f64,
    /// goal tolerance radius
    pub epsilon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_trial_time")]
    pub trial_time: f64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default = "default_turn_mode")]
    pub turn_mode: TurnMode,
    #[serde(default = "default_controller")]
    pub controller: Controller,
    #[serde(default)]
    pub seed: u64,
    /// Fraction of the trial, at the end, over which attainment is measured.
    #[serde(default = "default_window")]
    pub measure_window_fraction: f64,
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 7] = [
            ("l", self.l),
            ("r", self.r),
            ("gamma", self.gamma),
            ("b", self.b),
            ("v", self.v),
            ("dt", self.dt),
            ("trial_time", self.trial_time),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(key, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.n < 1 {
            return Err(Error::validation("n", "must be >= 1"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::validation("sigma", format!("must be >= 0, got {}", self.sigma)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::validation(
                "epsilon",
                format!("must be finite and > 0, got {}", self.epsilon),
            ));
        }
        if self.epsilon >= self.l {
            return Err(Error::validation(
                "epsilon",
                format!("goal tolerance {} must be smaller than arena side {}", self.epsilon, self.l),
            ));
        }
        if self.gamma > 2.0 * PI {
            return Err(Error::validation("gamma", "cone angle cannot exceed 2pi"));
        }
        if !(self.measure_window_fraction > 0.0 && self.measure_window_fraction <= 1.0) {
            return Err(Error::validation(
                "measure_window_fraction",
                format!("must lie in (0, 1], got {}", self.measure_window_fraction),
            ));
        }
        if let TurnMode::Finite { omega } = self.turn_mode {
            if !(omega.is_finite() && omega > 0.0) {
                return Err(Error::validation("turn_mode", format!("omega must be > 0, got {omega}")));
            }
        }
        if self.dt > self.trial_time {
            return Err(Error::validation("dt", "timestep larger than trial time"));
        }
        Ok(())
    }

    pub fn theory_params(&self) -> crate::theory::TheoryParams {
        crate::theory::TheoryParams {
            n: self.n,
            sigma: self.sigma,
            l: self.l,
            r: self.r,
            gamma: self.gamma,
            b: self.b,
            v: self.v,
        }
    }
}

/// Per-agent simulation state.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub pose: Pose,
    pub goal: Point2,
    pub step: StepPlan,
    pub blocked: bool,
    /// Seconds of rotation left before the current travel angle is reached
    /// (always 0 in instantaneous turn mode).
    pub turning_remaining: f64,
    pub goals_reached: u64,
    pub distance_traveled: f64,
    /// RNG stream carrying this agent's duration/noise draws.
    pub stream_id: u64,
    arrived: bool,
    heading_cos: f64,
    heading_sin: f64,
}

impl AgentState {
    fn new(position: Point2, heading: f64, goal: Point2, stream_id: u64) -> Self {
        let heading = wrap_angle(heading);
        AgentState {
            pose: Pose::new(position, heading),
            goal,
            step: StepPlan::exhausted(),
            blocked: false,
            turning_remaining: 0.0,
            goals_reached: 0,
            distance_traveled: 0.0,
            stream_id,
            arrived: false,
            heading_cos: heading.cos(),
            heading_sin: heading.sin(),
        }
    }

    fn set_heading(&mut self, heading: f64) {
        let h = wrap_angle(heading);
        self.pose.heading = h;
        self.heading_cos = h.cos();
        self.heading_sin = h.sin();
    }
}

/// One sensing-cone blocked episode observed by a single agent.
#[derive(Clone, Debug)]
pub struct CollisionEvent {
    pub observer: usize,
    pub partner: usize,
    pub start: f64,
    /// Closed when the observer's cone frees; censored events are closed at
    /// trial end.
    pub end: f64,
    /// Head-on metric at the tick the collision started.
    pub headon: f64,
    pub theta_star_observer: f64,
    pub theta_star_partner: f64,
    pub bearing_observer_to_partner: f64,
    pub bearing_partner_to_observer: f64,
}

impl CollisionEvent {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Root-sum-square angular mismatch between two colliding agents' goal
/// directions and their mutual bearings; 0 for a perfectly head-on pair.
/// Differences are minimal signed angles.
pub fn headon_metric(theta_star_i: f64, theta_star_j: f64, alpha_ij: f64, alpha_ji: f64) -> f64 {
    let di = angle_diff(theta_star_i, alpha_ij);
    let dj = angle_diff(theta_star_j, alpha_ji);
    (di * di + dj * dj).sqrt()
}

/// Events emitted by a single tick.
#[derive(Clone, Debug, Default)]
pub struct TickEvents {
    /// `(agent, event time)` per goal reached this tick.
    pub goals: Vec<(usize, f64)>,
    pub collisions_started: Vec<usize>,
    pub collisions_ended: Vec<usize>,
}

/// Summary of one trial.
#[derive(Clone, Debug)]
pub struct TrialMetrics {
    /// Goals reached inside the measurement window.
    pub window_goals: u64,
    pub window_duration: f64,
    /// `window_goals / window_duration`.
    pub attainment_rate: f64,
    /// Fraction of agent-ticks spent blocked inside the window.
    pub blocked_fraction: f64,
    /// Every cone-blocked episode of the whole trial.
    pub collisions: Vec<CollisionEvent>,
    /// Full-trial goal counts per agent.
    pub per_agent_goals: Vec<u64>,
    pub total_goals: u64,
    pub per_agent_distance: Vec<f64>,
    /// Wall-clock seconds spent in the stepping loop only.
    pub wall_clock_secs: f64,
    pub simulated_secs: f64,
}

impl TrialMetrics {
    /// Collision episodes per goal over the full trial (dilute statistic).
    pub fn collisions_per_goal(&self) -> f64 {
        if self.total_goals == 0 {
            return f64::NAN;
        }
        self.collisions.len() as f64 / self.total_goals as f64
    }

    /// Mean duration of collisions classified head-on (`h <` threshold).
    pub fn mean_headon_duration(&self, threshold: f64) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for c in &self.collisions {
            if c.headon < threshold {
                sum += c.duration();
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

pub struct World {
    cfg: WorldConfig,
    cone: ConeSpec,
    periodic: bool,
    time: f64,
    agents: Vec<AgentState>,
    agent_rngs: Vec<ChaCha8Rng>,
    goal_rng: ChaCha8Rng,
    snapshot: Vec<Point2>,
    /// Index into `collision_log` of each agent's open episode.
    open_collision: Vec<Option<usize>>,
    collision_log: Vec<CollisionEvent>,
}

impl World {
    /// Build a world with uniformly random initial positions, headings, and
    /// goals, all drawn from the world stream.
    pub fn new(cfg: WorldConfig) -> Result<Self> {
        cfg.validate()?;
        let mut goal_rng = stream_rng(cfg.seed, 0);
        let n = cfg.n as usize;
        let mut agents = Vec::with_capacity(n);
        for i in 0..n {
            let position = Point2::new(
                goal_rng.random_range(0.0..cfg.l),
                goal_rng.random_range(0.0..cfg.l),
            );
            let heading = wrap_angle(goal_rng.random_range(-PI..PI));
            let goal = Point2::new(
                goal_rng.random_range(0.0..cfg.l),
                goal_rng.random_range(0.0..cfg.l),
            );
            agents.push(AgentState::new(position, heading, goal, i as u64 + 1));
        }
        Self::assemble(cfg, goal_rng, agents)
    }

    /// Build a world from explicit `(position, heading, goal)` triples;
    /// used by tests and scripted demonstrations.
    pub fn from_parts(cfg: WorldConfig, parts: Vec<(Point2, f64, Point2)>) -> Result<Self> {
        cfg.validate()?;
        if parts.len() != cfg.n as usize {
            return Err(Error::invalid(format!(
                "expected {} agents, got {}",
                cfg.n,
                parts.len()
            )));
        }
        let goal_rng = stream_rng(cfg.seed, 0);
        let agents = parts
            .into_iter()
            .enumerate()
            .map(|(i, (p, h, g))| AgentState::new(p, h, g, i as u64 + 1))
            .collect();
        Self::assemble(cfg, goal_rng, agents)
    }

    fn assemble(cfg: WorldConfig, goal_rng: ChaCha8Rng, agents: Vec<AgentState>) -> Result<Self> {
        if cfg.controller == Controller::Planner {
            return Err(Error::validation(
                "controller",
                "planner trials run through the planner module",
            ));
        }
        let cone = ConeSpec::new(cfg.r, cfg.gamma)?;
        let n = agents.len();
        let agent_rngs = (0..n).map(|i| stream_rng(cfg.seed, i as u64 + 1)).collect();
        Ok(World {
            periodic: cfg.boundary == Boundary::Periodic,
            cone,
            cfg,
            time: 0.0,
            agents,
            agent_rngs,
            goal_rng,
            snapshot: vec![Point2::new(0.0, 0.0); n],
            open_collision: vec![None; n],
            collision_log: Vec::new(),
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn collision_log(&self) -> &[CollisionEvent] {
        &self.collision_log
    }

    fn draw_goal(goal_rng: &mut ChaCha8Rng, l: f64) -> Point2 {
        Point2::new(goal_rng.random_range(0.0..l), goal_rng.random_range(0.0..l))
    }

    /// Advance one tick; returns the events it produced.
    pub fn step(&mut self) -> TickEvents {
        let mut events = TickEvents::default();
        let n = self.agents.len();
        let dt = self.cfg.dt;
        let l = self.cfg.l;
        let periodic = self.periodic;

        // phase 1: snapshot
        for (slot, agent) in self.snapshot.iter_mut().zip(&self.agents) {
            *slot = agent.pose.position;
        }

        // phase 2: blocked flags + collision episodes
        for i in 0..n {
            let pos = self.snapshot[i];
            let (hc, hs) = (self.agents[i].heading_cos, self.agents[i].heading_sin);
            let mut nearest: Option<(usize, f64)> = None;
            for (j, &other) in self.snapshot.iter().enumerate() {
                if j == i {
                    continue;
                }
                if cone_contains_dir(pos, hc, hs, other, &self.cone, l, periodic) {
                    let d2 = delta_unchecked(pos, other, l, periodic).norm_sq();
                    if nearest.map_or(true, |(_, best)| d2 < best) {
                        nearest = Some((j, d2));
                    }
                }
            }
            let blocked = nearest.is_some();
            let was_blocked = self.agents[i].blocked;
            self.agents[i].blocked = blocked;

            if blocked && !was_blocked {
                let (j, _) = nearest.unwrap();
                let theta_star_observer =
                    delta_unchecked(pos, self.agents[i].goal, l, periodic).bearing();
                let theta_star_partner =
                    delta_unchecked(self.snapshot[j], self.agents[j].goal, l, periodic).bearing();
                let bearing_ij = delta_unchecked(pos, self.snapshot[j], l, periodic).bearing();
                let bearing_ji = delta_unchecked(self.snapshot[j], pos, l, periodic).bearing();
                let headon =
                    headon_metric(theta_star_observer, theta_star_partner, bearing_ij, bearing_ji);
                self.open_collision[i] = Some(self.collision_log.len());
                self.collision_log.push(CollisionEvent {
                    observer: i,
                    partner: j,
                    start: self.time,
                    end: f64::NAN,
                    headon,
                    theta_star_observer,
                    theta_star_partner,
                    bearing_observer_to_partner: bearing_ij,
                    bearing_partner_to_observer: bearing_ji,
                });
                events.collisions_started.push(i);
            } else if !blocked && was_blocked {
                if let Some(idx) = self.open_collision[i].take() {
                    self.collision_log[idx].end = self.time;
                    events.collisions_ended.push(i);
                }
            }
        }

        // phase 3: controller updates
        for i in 0..n {
            self.update_controller(i, &mut events);
        }

        // phase 4: motion integration
        for i in 0..n {
            self.integrate(i, dt, &mut events);
        }

        self.time += dt;
        events
    }

    fn update_controller(&mut self, i: usize, events: &mut TickEvents) {
        let cfg = &self.cfg;
        let l = cfg.l;
        let periodic = self.periodic;
        let agent = &mut self.agents[i];
        let rng = &mut self.agent_rngs[i];

        // goal reached: either latched by the integrator's exact stop on the
        // tolerance circle, or the goal was drawn within epsilon outright
        let close_enough = delta_unchecked(agent.pose.position, agent.goal, l, periodic).norm_sq()
            <= cfg.epsilon * cfg.epsilon;
        if agent.arrived || close_enough {
            if !agent.arrived {
                agent.goals_reached += 1;
                events.goals.push((i, self.time));
            }
            agent.arrived = false;
            agent.goal = Self::draw_goal(&mut self.goal_rng, l);
            agent.step.remaining = 0.0;
        }

        if agent.step.remaining <= 0.0 {
            let toward = delta_unchecked(agent.pose.position, agent.goal, l, periodic).bearing();
            let step = match cfg.controller {
                Controller::ConstantNoise => sample_step(rng, toward, cfg.sigma, cfg.b, cfg.v),
                Controller::ConditionalNoise => {
                    let duration = rng.random_range(0.5 * cfg.b / cfg.v..1.5 * cfg.b / cfg.v);
                    let travel_angle = if agent.blocked {
                        wrap_angle(rng.random_range(-PI..PI))
                    } else {
                        toward
                    };
                    StepPlan {
                        travel_angle,
                        duration,
                        remaining: duration,
                    }
                }
                Controller::Planner => unreachable!("planner worlds use the planner module"),
            };
            agent.step = step;
            match cfg.turn_mode {
                TurnMode::Instantaneous => {
                    agent.set_heading(step.travel_angle);
                    agent.turning_remaining = 0.0;
                }
                TurnMode::Finite { omega } => {
                    agent.turning_remaining =
                        angle_diff(step.travel_angle, agent.pose.heading).abs() / omega;
                }
            }
        }
    }

    fn integrate(&mut self, i: usize, dt: f64, events: &mut TickEvents) {
        let cfg = &self.cfg;
        let l = cfg.l;
        let periodic = self.periodic;
        let agent = &mut self.agents[i];

        // finite turn mode: rotate first, forward motion suspended, and the
        // step clock does not run while turning
        if agent.turning_remaining > 0.0 {
            if let TurnMode::Finite { omega } = cfg.turn_mode {
                let diff = angle_diff(agent.step.travel_angle, agent.pose.heading);
                if agent.turning_remaining <= dt {
                    agent.set_heading(agent.step.travel_angle);
                    agent.turning_remaining = 0.0;
                } else {
                    let turned = agent.pose.heading + diff.signum() * omega * dt;
                    agent.set_heading(turned);
                    agent.turning_remaining -= dt;
                }
                return;
            }
            agent.turning_remaining = 0.0;
        }

        if !agent.blocked && !agent.arrived {
            let p0 = agent.pose.position;
            let dx = cfg.v * dt * agent.heading_cos;
            let dy = cfg.v * dt * agent.heading_sin;
            let p1 = Point2::new(p0.x + dx, p0.y + dy);
            match segment_disk_hit_fraction(p0, p1, agent.goal, cfg.epsilon, l, periodic) {
                Some(t) => {
                    let stop = Point2::new(p0.x + t * dx, p0.y + t * dy);
                    agent.pose.position = if periodic { stop.wrapped(l) } else { stop };
                    agent.distance_traveled += t * (dx * dx + dy * dy).sqrt();
                    agent.goals_reached += 1;
                    agent.arrived = true;
                    agent.step.remaining = 0.0;
                    events.goals.push((i, self.time + t * dt));
                }
                None => {
                    agent.pose.position = if periodic { p1.wrapped(l) } else { p1 };
                    agent.distance_traveled += (dx * dx + dy * dy).sqrt();
                }
            }
        }

        agent.step.remaining -= dt;
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run one full trial and aggregate its metrics. Attainment is measured
/// over the final `measure_window_fraction` of the trial; collision episodes
/// are logged for the whole trial.
pub fn run_trial(cfg: WorldConfig) -> Result<TrialMetrics> {
    cfg.validate()?;
    let mut world = World::new(cfg.clone())?;
    let ticks = (cfg.trial_time / cfg.dt).round().max(1.0) as u64;
    let simulated = ticks as f64 * cfg.dt;
    let window_start = simulated * (1.0 - cfg.measure_window_fraction);

    let mut window_goals = 0u64;
    let mut blocked_ticks = 0u64;
    let mut window_agent_ticks = 0u64;

    let started = Instant::now();
    for _ in 0..ticks {
        let in_window = world.time >= window_start - 1e-9;
        let events = world.step();
        for &(_, t) in &events.goals {
            if t >= window_start - 1e-9 {
                window_goals += 1;
            }
        }
        if in_window {
            blocked_ticks += world.agents.iter().filter(|a| a.blocked).count() as u64;
            window_agent_ticks += world.agents.len() as u64;
        }
    }
    let wall_clock_secs = started.elapsed().as_secs_f64();

    // censored episodes close at trial end
    let end_time = world.time;
    for slot in world.open_collision.iter_mut() {
        if let Some(idx) = slot.take() {
            world.collision_log[idx].end = end_time;
        }
    }

    let window_duration = simulated - window_start;
    Ok(TrialMetrics {
        window_goals,
        window_duration,
        attainment_rate: window_goals as f64 / window_duration,
        blocked_fraction: if window_agent_ticks == 0 {
            0.0
        } else {
            blocked_ticks as f64 / window_agent_ticks as f64
        },
        per_agent_goals: world.agents.iter().map(|a| a.goals_reached).collect(),
        total_goals: world.agents.iter().map(|a| a.goals_reached).sum(),
        per_agent_distance: world.agents.iter().map(|a| a.distance_traveled).collect(),
        collisions: world.collision_log,
        wall_clock_secs,
        simulated_secs: simulated,
    })
}
