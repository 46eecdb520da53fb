//! Synchronous discrete-time simulation of the team.
//!
//! Each step rebuilds the communication graph from the current states, computes
//! every agent's nominal and filtered inputs from that one snapshot, then
//! applies an explicit Euler update with floor clamps on `z` and `lambda`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barrier::{ncbf_value, Component, ComponentSet, DEFAULT_EPSILON, DEFAULT_GUARD_THRESHOLD};
use crate::controller::{agent_control, ClassK, ConstraintKey, ControllerParams};
use crate::coverage::{coverage_eval, CoverageGrid, DensityField, SensingParams};
use crate::geometry::{build_graph, default_oracle_resolution, detect_holes_grid, hole_exists_exact, AgentState, CommGraph};

/// Steps within which a hole that appears at a graph switch must close again.
pub const HOLE_RECOVERY_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Full composed barrier filter.
    Ncbf,
    /// Filter on the footprint component only.
    HfOnly,
    /// No filter.
    NominalOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ncbf => "ncbf",
            Mode::HfOnly => "hf_only",
            Mode::NominalOnly => "nominal_only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "ncbf" => Ok(Mode::Ncbf),
            "hf_only" => Ok(Mode::HfOnly),
            "nominal_only" => Ok(Mode::NominalOnly),
            other => Err(format!("unknown mode `{other}` (expected ncbf, hf_only or nominal_only)")),
        }
    }
}

/// Source of the unfiltered input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NominalKind {
    /// Gradient ascent on the coverage objective.
    Coverage,
    /// Fixed per-agent velocity from the scenario.
    Velocity,
}

impl NominalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NominalKind::Coverage => "coverage",
            NominalKind::Velocity => "velocity",
        }
    }
}

impl FromStr for NominalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coverage" => Ok(NominalKind::Coverage),
            "velocity" => Ok(NominalKind::Velocity),
            other => Err(format!("unknown nominal `{other}` (expected coverage or velocity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: Vec<AgentState>,
    /// Per-agent constant input used when `nominal` is `Velocity`.
    pub velocities: Vec<Vector4<f64>>,
    pub sensing: SensingParams,
    pub density: DensityField,
    pub dt: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub alpha: ClassK,
    pub w_lambda: f64,
    pub mode: Mode,
    pub nominal: NominalKind,
    pub guard_threshold: f64,
    /// Cell size of the coverage quadrature grid.
    pub resolution: f64,
    /// Cell size of the hole oracle grid; defaults to 1/200 of the mission diagonal.
    pub oracle_resolution: Option<f64>,
    /// Run the grid oracle every this many steps (0 disables it).
    pub oracle_every: usize,
    pub min_z: f64,
    pub min_lambda: f64,
    pub seed: u64,
    /// Half-width of the uniform perturbation applied to initial `x`, `y`.
    pub jitter: f64,
}

impl Scenario {
    /// Scenario with default controller and simulation settings.
    pub fn new(agents: Vec<AgentState>, sensing: SensingParams, density: DensityField) -> Self {
        let n = agents.len();
        Self {
            agents,
            velocities: vec![Vector4::zeros(); n],
            sensing,
            density,
            dt: 0.01,
            steps: 1000,
            epsilon: DEFAULT_EPSILON,
            alpha: ClassK::default(),
            w_lambda: 3.0e6,
            mode: Mode::Ncbf,
            nominal: NominalKind::Coverage,
            guard_threshold: DEFAULT_GUARD_THRESHOLD,
            resolution: 0.3,
            oracle_resolution: None,
            oracle_every: 10,
            min_z: 0.05,
            min_lambda: 1e-4,
            seed: 0,
            jitter: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.agents.is_empty() {
            return Err("at least one agent is required".into());
        }
        if self.velocities.len() != self.agents.len() {
            return Err("one velocity per agent is required".into());
        }
        if let Some(i) = self.agents.iter().position(|a| !a.is_valid()) {
            return Err(format!("agent {i} must have finite state with z > 0 and lambda > 0"));
        }
        self.sensing.validate()?;
        self.density.validate()?;
        self.alpha.validate()?;
        let checks = [
            (self.dt > 0.0 && self.dt.is_finite(), "dt must be positive"),
            (self.steps >= 1, "steps must be at least 1"),
            (self.epsilon >= 0.0, "epsilon must be nonnegative"),
            (self.w_lambda > 0.0, "w_lambda must be positive"),
            (self.guard_threshold > 0.0, "guard_threshold must be positive"),
            (self.resolution > 0.0, "resolution must be positive"),
            (self.oracle_resolution.is_none_or(|r| r > 0.0), "oracle_resolution must be positive"),
            (self.min_z > 0.0, "min_z must be positive"),
            (self.min_lambda > 0.0, "min_lambda must be positive"),
            (self.jitter >= 0.0, "jitter must be nonnegative"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(msg.to_string()),
            None => Ok(()),
        }
    }

    pub fn controller_params(&self) -> ControllerParams {
        ControllerParams {
            epsilon: self.epsilon,
            alpha: self.alpha,
            w_lambda: self.w_lambda,
            guard_threshold: self.guard_threshold,
            components: match self.mode {
                Mode::HfOnly => ComponentSet::FovOnly,
                _ => ComponentSet::All,
            },
        }
    }

    pub fn oracle_cell(&self) -> f64 {
        self.oracle_resolution.unwrap_or_else(|| default_oracle_resolution(&self.density.mission))
    }

    /// Initial states after the seeded jitter.
    pub fn initial_states(&self) -> Vec<AgentState> {
        let mut states = self.agents.clone();
        if self.jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for s in &mut states {
                s.x += rng.gen_range(-self.jitter..=self.jitter);
                s.y += rng.gen_range(-self.jitter..=self.jitter);
            }
        }
        states
    }
}

/// Per-agent row of a trace record.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub state: AgentState,
    pub radius: f64,
    /// Minimum composed barrier over the agent's trios (all four components).
    pub min_ncbf: Option<f64>,
    /// Maximizing component of the trio attaining `min_ncbf`.
    pub argmax: Option<Component>,
    pub trio_count: usize,
    pub input: Vector4<f64>,
    pub fallback: bool,
}

/// One simulation step, logged against the state at the start of the step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub step: usize,
    pub agents: Vec<AgentRecord>,
    pub h: f64,
    pub h_m: f64,
    pub h_o: f64,
    /// Grid-oracle witness count, on sampled steps only.
    pub hole_witnesses: Option<usize>,
    /// Trios whose radical center is inside the triangle and uncovered.
    pub exact_holes: usize,
    pub switched: bool,
    pub clamped: bool,
}

impl TraceRecord {
    pub fn min_ncbf(&self) -> Option<f64> {
        self.agents.iter().filter_map(|a| a.min_ncbf).reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub steps: usize,
    pub final_h: f64,
    pub final_h_m: f64,
    pub final_h_o: f64,
    pub min_ncbf: Option<f64>,
    pub sampled_steps: usize,
    pub hole_witness_steps: usize,
    pub exact_hole_steps: usize,
    pub switch_count: usize,
    /// Hole episodes (exact check) that began at a graph switch.
    pub switch_induced_holes: usize,
    /// Hole episodes that began without a switch.
    pub other_holes: usize,
    /// Longest hole episode in steps.
    pub longest_hole: usize,
    /// Episodes that lasted longer than the recovery window or never closed.
    pub unrecovered_holes: usize,
    /// Worst min barrier value at a non-switch step after a safe step (0 if none negative).
    pub safety_slack: f64,
    pub clamp_events: usize,
    pub qp_fallbacks: usize,
}

impl RunSummary {
    pub fn witness_fraction(&self) -> f64 {
        if self.sampled_steps == 0 {
            0.0
        } else {
            self.hole_witness_steps as f64 / self.sampled_steps as f64
        }
    }
}

/// Mutable simulation state.
#[derive(Debug, Clone)]
pub struct World {
    pub states: Vec<AgentState>,
    pub step: usize,
    prev_trios: Option<BTreeSet<[usize; 3]>>,
    warm: Vec<Vec<ConstraintKey>>,
}

impl World {
    pub fn new(scenario: &Scenario) -> Self {
        let states = scenario.initial_states();
        let n = states.len();
        Self { states, step: 0, prev_trios: None, warm: vec![Vec::new(); n] }
    }
}

fn min_ncbf_of(graph: &CommGraph, i: usize, epsilon: f64) -> (Option<f64>, Option<Component>) {
    let mut best: Option<(f64, Component)> = None;
    for trio in graph.trios_of(i) {
        match ncbf_value(trio, i, epsilon) {
            Ok(v) if best.is_none_or(|(b, _)| v.value < b) => best = Some((v.value, v.argmax)),
            Ok(_) => {}
            Err(e) => log::warn!("agent {i}: trio {:?}: {e}", trio.ids),
        }
    }
    (best.map(|b| b.0), best.map(|b| b.1))
}

/// Advance `world` by one step and return the record for the pre-step state.
pub fn step(world: &mut World, scenario: &Scenario, cov: &CoverageGrid) -> TraceRecord {
    let r = scenario.sensing.r;
    let graph = build_graph(&world.states, r);
    let trios: BTreeSet<[usize; 3]> = graph.trio_keys().into_iter().collect();
    let switched = world.prev_trios.as_ref().is_some_and(|p| *p != trios);
    world.prev_trios = Some(trios);

    let snapshot = world.states.clone();
    let eval = coverage_eval(&snapshot, &scenario.sensing, cov);
    let params = scenario.controller_params();

    let mut agents = Vec::with_capacity(snapshot.len());
    let mut inputs = Vec::with_capacity(snapshot.len());
    for (i, st) in snapshot.iter().enumerate() {
        let u_nom = match scenario.nominal {
            NominalKind::Coverage => eval.nominal[i],
            NominalKind::Velocity => scenario.velocities[i],
        };
        let (u, fallback) = match scenario.mode {
            Mode::NominalOnly => (u_nom, false),
            Mode::Ncbf | Mode::HfOnly => {
                let out = agent_control(i, &graph, u_nom, &params, &world.warm[i]);
                world.warm[i] = out.active;
                (out.u, out.fallback.is_some())
            }
        };
        let (min_ncbf, argmax) = min_ncbf_of(&graph, i, scenario.epsilon);
        agents.push(AgentRecord {
            state: *st,
            radius: st.fov_radius(r),
            min_ncbf,
            argmax,
            trio_count: graph.agent_trios[i].len(),
            input: u,
            fallback,
        });
        inputs.push(u);
    }

    let exact_holes = graph.trios.iter().filter(|t| hole_exists_exact(t).unwrap_or(false)).count();
    let hole_witnesses = (scenario.oracle_every > 0 && world.step.is_multiple_of(scenario.oracle_every)).then(|| {
        detect_holes_grid(&snapshot, r, &scenario.density.mission, scenario.oracle_cell(), &graph.trios).len()
    });

    let mut clamped = false;
    for (s, u) in world.states.iter_mut().zip(&inputs) {
        s.x += scenario.dt * u[0];
        s.y += scenario.dt * u[1];
        s.z += scenario.dt * u[2];
        s.lambda += scenario.dt * u[3];
        if s.z < scenario.min_z {
            s.z = scenario.min_z;
            clamped = true;
        }
        if s.lambda < scenario.min_lambda {
            s.lambda = scenario.min_lambda;
            clamped = true;
        }
    }
    if clamped {
        log::warn!("step {}: state clamp engaged", world.step);
    }

    let record = TraceRecord {
        step: world.step,
        agents,
        h: eval.report.h,
        h_m: eval.report.h_m,
        h_o: eval.report.h_o,
        hole_witnesses,
        exact_holes,
        switched,
        clamped,
    };
    world.step += 1;
    record
}

/// Full run: one record per step plus the summary.
pub fn run(scenario: &Scenario) -> (Vec<TraceRecord>, RunSummary) {
    let cov = CoverageGrid::new(&scenario.density, scenario.resolution);
    let mut world = World::new(scenario);
    let trace: Vec<TraceRecord> = (0..scenario.steps).map(|_| step(&mut world, scenario, &cov)).collect();
    let summary = summarize(&trace);
    (trace, summary)
}

pub fn summarize(trace: &[TraceRecord]) -> RunSummary {
    let mut s = RunSummary { steps: trace.len(), ..Default::default() };
    if let Some(last) = trace.last() {
        s.final_h = last.h;
        s.final_h_m = last.h_m;
        s.final_h_o = last.h_o;
    }
    let mut episode: Option<usize> = None;
    let mut prev_min: Option<f64> = None;
    for rec in trace {
        let m = rec.min_ncbf();
        s.min_ncbf = match (s.min_ncbf, m) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if let Some(w) = rec.hole_witnesses {
            s.sampled_steps += 1;
            if w > 0 {
                s.hole_witness_steps += 1;
            }
        }
        s.switch_count += usize::from(rec.switched);
        s.clamp_events += usize::from(rec.clamped);
        s.qp_fallbacks += rec.agents.iter().filter(|a| a.fallback).count();
        if !rec.switched && prev_min.is_some_and(|p| p >= 0.0) {
            if let Some(v) = m {
                s.safety_slack = s.safety_slack.min(v);
            }
        }
        prev_min = m;

        if rec.exact_holes > 0 {
            s.exact_hole_steps += 1;
            match episode {
                Some(ref mut len) => *len += 1,
                None => {
                    episode = Some(1);
                    if rec.switched {
                        s.switch_induced_holes += 1;
                    } else {
                        s.other_holes += 1;
                    }
                }
            }
        } else if let Some(len) = episode.take() {
            s.longest_hole = s.longest_hole.max(len);
            if len > HOLE_RECOVERY_STEPS {
                s.unrecovered_holes += 1;
            }
        }
    }
    if let Some(len) = episode {
        s.longest_hole = s.longest_hole.max(len);
        s.unrecovered_holes += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::GaussianBump;
    use crate::geometry::{Rect, Vec2};

    fn tiny() -> Scenario {
        let density = DensityField::new(
            Rect::new(-6.0, -6.0, 6.0, 6.0),
            vec![GaussianBump { weight: 1.0, mean: Vec2::zeros(), scale: 2.0 }],
        );
        let sensing = SensingParams { r: 1.0, kappa: 4.0, sigma: 1.0, m: 0.7, w: 0.2 };
        let mut sc = Scenario::new(
            vec![AgentState::new(-1.0, 0.0, 1.5, 1.0), AgentState::new(1.0, 0.0, 1.5, 1.0), AgentState::new(0.0, 1.5, 1.5, 1.0)],
            sensing,
            density,
        );
        sc.steps = 5;
        sc.resolution = 0.1;
        sc
    }

    #[test]
    fn zero_velocity_is_a_fixed_point() {
        let mut sc = tiny();
        sc.nominal = NominalKind::Velocity;
        let (trace, summary) = run(&sc);
        assert_eq!(trace.len(), 5);
        assert!(trace.iter().all(|r| r.agents.iter().zip(&sc.agents).all(|(a, s)| a.state == *s)));
        assert_eq!(summary.switch_count, 0);
    }

    #[test]
    fn one_step_run_matches_step() {
        let mut sc = tiny();
        sc.steps = 1;
        let (trace, _) = run(&sc);
        let cov = CoverageGrid::new(&sc.density, sc.resolution);
        let mut w = World::new(&sc);
        assert_eq!(trace[0], step(&mut w, &sc, &cov));
    }

    #[test]
    fn clamps_engage() {
        let mut sc = tiny();
        sc.nominal = NominalKind::Velocity;
        sc.mode = Mode::NominalOnly;
        sc.velocities[0] = Vector4::new(0.0, 0.0, -1000.0, -1000.0);
        let cov = CoverageGrid::new(&sc.density, sc.resolution);
        let mut w = World::new(&sc);
        step(&mut w, &sc, &cov);
        assert_eq!((w.states[0].z, w.states[0].lambda), (sc.min_z, sc.min_lambda));
    }

    #[test]
    fn validation_messages() {
        let mut sc = tiny();
        sc.dt = 0.0;
        assert_eq!(sc.validate().unwrap_err(), "dt must be positive");
        assert!("hf-only".parse::<Mode>().is_ok());
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn jitter_is_seeded() {
        let mut sc = tiny();
        sc.jitter = 0.1;
        sc.seed = 7;
        let a = sc.initial_states();
        assert_eq!(a, sc.initial_states());
        sc.seed = 8;
        assert_ne!(a, sc.initial_states());
    }

    #[test]
    fn summary_tracks_hole_episodes() {
        let mk = |exact, switched| TraceRecord {
            step: 0,
            agents: vec![],
            h: 0.0,
            h_m: 0.0,
            h_o: 0.0,
            hole_witnesses: None,
            exact_holes: exact,
            switched,
            clamped: false,
        };
        let trace = vec![mk(0, false), mk(1, true), mk(1, false), mk(0, false), mk(2, false)];
        let s = summarize(&trace);
        assert_eq!((s.switch_induced_holes, s.other_holes, s.longest_hole), (1, 1, 2));
        assert_eq!(s.unrecovered_holes, 1);
        assert_eq!(s.exact_hole_steps, 3);
    }
}
