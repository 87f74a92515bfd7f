//! The planner loop shared by RRT*, Informed RRT* and the guided variants.
//!
//! Each iteration draws one sample, extends and rewires the tree, and records
//! new goal-region vertices. Guided variants mix two branches 50/50: the
//! informed (or uniform) sampler, and a uniform pick among the current
//! guidance states. With retriggering enabled, guidance is recomputed inside
//! the informed set whenever `c_best < alpha * c_update`.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::geometry::{RngHandle, State};
use crate::guidance::{pointnet_guide, GuidanceProvider, GuidanceSet, GuideConfig};
use crate::informed::{informed_or_uniform, InformedSet};
use crate::record::{EventKind, RunEvent, RunRecord, SampleCounts, TracePoint};
use crate::rrt_star::{best_solution, extend_and_rewire, in_goal_region, solution_cost, PlannerConfig, Tree};
use crate::world::ProblemInstance;

pub const DEFAULT_ALPHA: f64 = 0.9;

/// Stream offset for guidance clouds, so guide construction never shifts the
/// main sample sequence.
const GUIDE_STREAM: u64 = 0x6775_6964_6500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    RrtStar,
    IrrtStar,
    NrrtPng,
    NrrtPngC,
    NirrtPng,
    NirrtPngF,
    NirrtPngFc,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 7] = [
        PlannerKind::RrtStar,
        PlannerKind::IrrtStar,
        PlannerKind::NrrtPng,
        PlannerKind::NrrtPngC,
        PlannerKind::NirrtPng,
        PlannerKind::NirrtPngF,
        PlannerKind::NirrtPngFc,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PlannerKind::RrtStar => "rrt-star",
            PlannerKind::IrrtStar => "irrt-star",
            PlannerKind::NrrtPng => "nrrt-png",
            PlannerKind::NrrtPngC => "nrrt-png-c",
            PlannerKind::NirrtPng => "nirrt-png",
            PlannerKind::NirrtPngF => "nirrt-png-f",
            PlannerKind::NirrtPngFc => "nirrt-png-fc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == s)
    }

    pub fn rules(self) -> SamplingRules {
        let none = SamplingRules::default();
        match self {
            PlannerKind::RrtStar => none,
            PlannerKind::IrrtStar => SamplingRules { informed: true, ..none },
            PlannerKind::NrrtPng => SamplingRules { guided: true, ..none },
            PlannerKind::NrrtPngC => SamplingRules {
                guided: true,
                connect: true,
                ..none
            },
            PlannerKind::NirrtPng => SamplingRules {
                informed: true,
                guided: true,
                retrigger: true,
                ..none
            },
            PlannerKind::NirrtPngF => SamplingRules {
                informed: true,
                guided: true,
                retrigger: true,
                focus: true,
                ..none
            },
            PlannerKind::NirrtPngFc => SamplingRules {
                informed: true,
                guided: true,
                retrigger: true,
                focus: true,
                connect: true,
            },
        }
    }

    pub fn needs_provider(self) -> bool {
        self.rules().guided
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Which sampling features a planner uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingRules {
    /// Sample the informed set once a solution exists.
    pub informed: bool,
    /// Mix in guidance states.
    pub guided: bool,
    /// Recompute guidance as the solution improves.
    pub retrigger: bool,
    /// Build guidance clouds inside the informed set.
    pub focus: bool,
    /// Re-infer from advanced endpoints until the guide is connected.
    pub connect: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NirrtConfig {
    pub planner: PlannerConfig,
    /// Retrigger ratio in `[0, 1]`; 0 disables retriggering.
    pub alpha: f64,
    pub guide: GuideConfig,
}

impl NirrtConfig {
    pub fn for_problem(problem: &ProblemInstance) -> Self {
        let planner = PlannerConfig::for_world(&problem.world);
        let guide = GuideConfig::new(planner.eta);
        Self {
            planner,
            alpha: DEFAULT_ALPHA,
            guide,
        }
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        self.planner.max_iterations = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.planner.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(contract(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.guide.n_points == 0 {
            return Err(contract("guidance cloud size must be positive"));
        }
        Ok(())
    }
}

/// Where a sample came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSource {
    Uniform,
    Informed,
    Guide,
    GuideFallback,
}

/// Mutable planner state.
#[derive(Clone, Debug)]
pub struct NirrtState {
    pub tree: Tree,
    pub solutions: Vec<usize>,
    pub c_best: f64,
    /// `c_best` when guidance was last computed.
    pub c_update: f64,
    pub guide: GuidanceSet,
    pub alpha: f64,
    /// False once the provider has failed.
    pub guidance_available: bool,
}

impl NirrtState {
    pub fn new(problem: &ProblemInstance, cfg: &NirrtConfig) -> Self {
        Self {
            tree: Tree::new(problem.start, &problem.world, cfg.planner.eta),
            solutions: Vec::new(),
            c_best: f64::INFINITY,
            c_update: f64::INFINITY,
            guide: GuidanceSet::default(),
            alpha: cfg.alpha,
            guidance_available: true,
        }
    }

    /// Retrigger test `c_best < alpha * c_update`.
    pub fn should_retrigger(&self) -> bool {
        self.c_best.is_finite() && self.c_best < self.alpha * self.c_update
    }
}

/// One draw and anything that happened on the way.
#[derive(Clone, Debug)]
pub struct SampleStep {
    pub x: State,
    pub source: SampleSource,
    pub event: Option<EventKind>,
}

/// Sampling context that stays fixed over a run.
pub struct Sampler<'a> {
    pub problem: &'a ProblemInstance,
    pub provider: Option<&'a dyn GuidanceProvider>,
    pub cfg: &'a NirrtConfig,
    pub rules: SamplingRules,
}

impl Sampler<'_> {
    fn guide_config(&self) -> GuideConfig {
        GuideConfig {
            focus: self.rules.focus,
            connect: self.rules.connect,
            ..self.cfg.guide.clone()
        }
    }

    /// Computes guidance for `c_curr`, turning failures into events.
    pub fn refresh_guide(&self, state: &mut NirrtState, c_curr: f64, rng: &mut RngHandle) -> EventKind {
        let Some(provider) = self.provider else {
            state.guidance_available = false;
            return EventKind::GuidanceUnavailable {
                reason: "no provider".into(),
            };
        };
        match pointnet_guide(self.problem, c_curr, provider, &self.guide_config(), rng) {
            Ok(out) => {
                state.guide = out.guide;
                state.c_update = c_curr;
                if c_curr.is_finite() {
                    EventKind::GuidanceRetrigger {
                        c_curr,
                        guide_size: state.guide.len(),
                        connected: out.connected,
                        rounds: out.rounds.len(),
                    }
                } else {
                    EventKind::GuidanceInitial {
                        guide_size: state.guide.len(),
                        connected: out.connected,
                        rounds: out.rounds.len(),
                    }
                }
            }
            Err(e @ (Error::DegenerateDomain { .. } | Error::InfeasibleFocus(_))) => {
                log::debug!("keeping previous guide: {e}");
                state.c_update = c_curr;
                EventKind::GuidanceDegenerate { reason: e.to_string() }
            }
            Err(e) => {
                log::warn!("guidance disabled for this run: {e}");
                state.guidance_available = false;
                state.guide = GuidanceSet::default();
                EventKind::GuidanceUnavailable { reason: e.to_string() }
            }
        }
    }

    fn base_sample(&self, state: &NirrtState, rng: &mut RngHandle) -> Result<(State, SampleSource)> {
        let p = self.problem;
        if self.rules.informed && state.c_best.is_finite() {
            let set = InformedSet::new(p.start, p.goal, state.c_best.max(p.c_min()))?;
            match informed_or_uniform(Some(&set), &p.world, rng) {
                Ok(x) => return Ok((x, SampleSource::Informed)),
                Err(Error::InfeasibleFocus(_)) => return Ok((p.world.sample_free(rng)?, SampleSource::Uniform)),
                Err(e) => return Err(e),
            }
        }
        Ok((p.world.sample_free(rng)?, SampleSource::Uniform))
    }

    /// Guided sampling: retrigger guidance if the solution improved enough,
    /// then take the base sampler with probability 1/2 and a uniformly chosen
    /// guidance state otherwise (the base sampler if the guide is empty).
    pub fn pointnet_guided_sampling(
        &self,
        state: &mut NirrtState,
        rng: &mut RngHandle,
        guide_rng: &mut RngHandle,
    ) -> Result<SampleStep> {
        let mut event = None;
        if self.rules.guided && self.rules.retrigger && state.guidance_available && state.should_retrigger() {
            event = Some(self.refresh_guide(state, state.c_best, guide_rng));
        }
        if !self.rules.guided || !state.guidance_available {
            let (x, source) = self.base_sample(state, rng)?;
            return Ok(SampleStep { x, source, event });
        }
        let u: f64 = rng.random();
        let (x, source) = if u < 0.5 {
            self.base_sample(state, rng)?
        } else if state.guide.is_empty() {
            (self.base_sample(state, rng)?.0, SampleSource::GuideFallback)
        } else {
            let k = rng.random_range(0..state.guide.len());
            (state.guide.states[k], SampleSource::Guide)
        };
        Ok(SampleStep { x, source, event })
    }
}

/// A finished run.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub tree: Tree,
    pub solutions: Vec<usize>,
    pub record: RunRecord,
    /// Start-to-goal states of the best solution.
    pub best_path: Option<Vec<State>>,
}

/// Runs `kind` for `cfg.planner.max_iterations` iterations.
pub fn plan(
    problem: &ProblemInstance,
    kind: PlannerKind,
    provider: Option<&dyn GuidanceProvider>,
    cfg: &NirrtConfig,
    rng: &mut RngHandle,
) -> Result<PlanOutcome> {
    let mut out = plan_with_rules(problem, kind.rules(), provider, cfg, rng)?;
    out.record.planner = kind.id().to_string();
    Ok(out)
}

/// [`plan`] with explicit sampling rules.
pub fn plan_with_rules(
    problem: &ProblemInstance,
    rules: SamplingRules,
    provider: Option<&dyn GuidanceProvider>,
    cfg: &NirrtConfig,
    rng: &mut RngHandle,
) -> Result<PlanOutcome> {
    plan_observed(problem, rules, provider, cfg, rng, |_, _| {})
}

/// [`plan_with_rules`] calling `observe(iteration, step)` after each draw.
pub fn plan_observed(
    problem: &ProblemInstance,
    rules: SamplingRules,
    provider: Option<&dyn GuidanceProvider>,
    cfg: &NirrtConfig,
    rng: &mut RngHandle,
    mut observe: impl FnMut(usize, &SampleStep),
) -> Result<PlanOutcome> {
    cfg.validate()?;
    if rules.guided && provider.is_none() {
        return Err(contract("guided planner needs a guidance provider"));
    }
    let started = Instant::now();
    let sampler = Sampler {
        problem,
        provider,
        cfg,
        rules,
    };
    let mut guide_rng = rng.substream(rng.stream() ^ GUIDE_STREAM);
    let mut state = NirrtState::new(problem, cfg);
    let mut events = Vec::new();
    let mut trace = Vec::new();
    let mut samples = SampleCounts::default();

    if rules.guided {
        let kind = sampler.refresh_guide(&mut state, f64::INFINITY, &mut guide_rng);
        events.push(RunEvent { iteration: 0, kind });
    }

    let goal = problem.goal;
    for i in 1..=cfg.planner.max_iterations {
        let step = sampler.pointnet_guided_sampling(&mut state, rng, &mut guide_rng)?;
        observe(i, &step);
        match step.source {
            SampleSource::Uniform => samples.uniform += 1,
            SampleSource::Informed => samples.informed += 1,
            SampleSource::Guide => samples.guide += 1,
            SampleSource::GuideFallback => samples.guide_fallback += 1,
        }
        if let Some(kind) = step.event {
            events.push(RunEvent { iteration: i, kind });
        }
        if let Some(v) = extend_and_rewire(&mut state.tree, &step.x, &problem.world, &cfg.planner) {
            let x = *state.tree.state(v);
            if in_goal_region(&x, &goal, &cfg.planner)
                && problem
                    .world
                    .collision_free_segment_with(&x, &goal, cfg.planner.collision_resolution)
            {
                state.solutions.push(v);
            }
        }
        let c = solution_cost(&state.tree, &state.solutions, &goal);
        if c < state.c_best {
            if !state.c_best.is_finite() {
                events.push(RunEvent {
                    iteration: i,
                    kind: EventKind::FirstSolution { cost: c },
                });
            }
            state.c_best = c;
            trace.push(TracePoint { iteration: i, cost: c });
        }
    }

    let best_path = best_solution(&state.tree, &state.solutions, &goal).map(|(v, _)| {
        let mut p = state.tree.path_to(v);
        p.push(goal);
        p
    });
    let record = RunRecord {
        planner: String::new(),
        problem: String::new(),
        seed: rng.seed(),
        iterations: cfg.planner.max_iterations,
        trace,
        events,
        samples,
        vertices: state.tree.len(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(PlanOutcome {
        tree: state.tree,
        solutions: state.solutions,
        record,
        best_path,
    })
}

pub fn rrt_star(problem: &ProblemInstance, cfg: &NirrtConfig, rng: &mut RngHandle) -> Result<PlanOutcome> {
    plan(problem, PlannerKind::RrtStar, None, cfg, rng)
}

pub fn irrt_star(problem: &ProblemInstance, cfg: &NirrtConfig, rng: &mut RngHandle) -> Result<PlanOutcome> {
    plan(problem, PlannerKind::IrrtStar, None, cfg, rng)
}

/// The full planner: informed sampling, retriggered guidance, Neural Focus
/// and Neural Connect.
pub fn nirrt_star(
    problem: &ProblemInstance,
    provider: &dyn GuidanceProvider,
    cfg: &NirrtConfig,
    rng: &mut RngHandle,
) -> Result<PlanOutcome> {
    plan(problem, PlannerKind::NirrtPngFc, Some(provider), cfg, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::OracleProvider;
    use crate::guidance::{GuidanceQuery, NullProvider};
    use crate::world::World;

    fn open_problem() -> ProblemInstance {
        let w = World::empty(State::xy(0.0, 0.0), State::xy(100.0, 100.0)).unwrap();
        ProblemInstance::new(w, State::xy(10.0, 50.0), State::xy(90.0, 50.0)).unwrap()
    }

    fn small_cfg(p: &ProblemInstance, iters: usize) -> NirrtConfig {
        let mut cfg = NirrtConfig::for_problem(p).with_iterations(iters);
        cfg.guide.n_points = 256;
        cfg
    }

    #[test]
    fn kinds_round_trip() {
        for k in PlannerKind::ALL {
            assert_eq!(PlannerKind::parse(k.id()), Some(k));
        }
        assert!(!PlannerKind::IrrtStar.needs_provider());
        assert!(PlannerKind::NirrtPngFc.rules().connect);
    }

    #[test]
    fn retrigger_threshold() {
        let p = open_problem();
        let mut s = NirrtState::new(&p, &small_cfg(&p, 1));
        s.c_update = 100.0;
        s.c_best = 95.0;
        assert!(!s.should_retrigger());
        s.c_best = 89.9;
        assert!(s.should_retrigger());
        s.c_best = 90.0;
        assert!(!s.should_retrigger());
        s.alpha = 0.0;
        s.c_update = f64::INFINITY;
        s.c_best = 1.0;
        assert!(!s.should_retrigger());
    }

    #[test]
    fn rrt_star_trace_is_monotone_and_solves_open_map() {
        let p = open_problem();
        let out = rrt_star(&p, &small_cfg(&p, 1500), &mut RngHandle::new(2)).unwrap();
        assert!(out.record.trace_is_monotone());
        let path = out.best_path.unwrap();
        assert_eq!(path.first(), Some(&p.start));
        assert_eq!(path.last(), Some(&p.goal));
        let len: f64 = path.windows(2).map(|w| w[0].distance(&w[1])).sum();
        assert!((len - out.record.final_cost()).abs() < 1e-9);
        assert_eq!(out.record.planner, "rrt-star");
    }

    #[test]
    fn irrt_star_draws_only_members_after_a_solution() {
        let p = open_problem();
        let cfg = small_cfg(&p, 800);
        let mut draws = Vec::new();
        let out = plan_observed(
            &p,
            PlannerKind::IrrtStar.rules(),
            None,
            &cfg,
            &mut RngHandle::new(3),
            |i, step| draws.push((i, step.x, step.source)),
        )
        .unwrap();
        let first = out.record.first_solution().unwrap().iteration;
        let mut informed = 0;
        for (i, x, source) in draws {
            let c = out.record.cost_at(i - 1);
            if i <= first {
                assert_eq!(source, SampleSource::Uniform);
            } else if source == SampleSource::Informed {
                assert!(InformedSet::new(p.start, p.goal, c).unwrap().contains(&x));
                informed += 1;
            }
        }
        assert_eq!(informed, 800 - first);
    }

    #[test]
    fn guided_planner_requires_provider() {
        let p = open_problem();
        let r = plan(
            &p,
            PlannerKind::NirrtPngFc,
            None,
            &small_cfg(&p, 10),
            &mut RngHandle::new(0),
        );
        assert!(r.is_err());
    }

    #[test]
    fn failing_provider_degrades_to_informed_sampling() {
        let p = open_problem();
        let broken = |_: &GuidanceQuery<'_>| -> Result<Vec<f64>> { Err(Error::GuidanceUnavailable("offline".into())) };
        let out = plan(
            &p,
            PlannerKind::NirrtPngFc,
            Some(&broken),
            &small_cfg(&p, 600),
            &mut RngHandle::new(4),
        )
        .unwrap();
        assert!(matches!(
            out.record.events[0].kind,
            EventKind::GuidanceUnavailable { .. }
        ));
        assert_eq!(out.record.samples.guide + out.record.samples.guide_fallback, 0);
        assert!(out.record.first_solution().is_some());
    }

    #[test]
    fn empty_guidance_never_yields_guide_samples() {
        let p = open_problem();
        let out = plan(
            &p,
            PlannerKind::NirrtPngFc,
            Some(&NullProvider),
            &small_cfg(&p, 400),
            &mut RngHandle::new(5),
        )
        .unwrap();
        assert_eq!(out.record.samples.guide, 0);
        assert!(out.record.samples.guide_fallback > 0);
    }

    #[test]
    fn oracle_guidance_is_sampled() {
        let p = open_problem();
        let oracle = OracleProvider::new(&p.world, 10.0);
        let out = nirrt_star(&p, &oracle, &small_cfg(&p, 400), &mut RngHandle::new(6)).unwrap();
        assert!(out.record.samples.guide > 0);
        assert!(matches!(
            out.record.events[0].kind,
            EventKind::GuidanceInitial { connected: true, .. }
        ));
        assert!(out.record.trace_is_monotone());
    }

    #[test]
    fn runs_are_reproducible() {
        let p = open_problem();
        let oracle = OracleProvider::new(&p.world, 10.0);
        let cfg = small_cfg(&p, 300);
        let a = nirrt_star(&p, &oracle, &cfg, &mut RngHandle::new(7)).unwrap();
        let b = nirrt_star(&p, &oracle, &cfg, &mut RngHandle::new(7)).unwrap();
        assert_eq!(a.record.trace, b.record.trace);
        assert_eq!(a.record.events, b.record.events);
        assert_eq!(a.tree.vertices(), b.tree.vertices());
    }
}
