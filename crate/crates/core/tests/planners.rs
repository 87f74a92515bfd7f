//! Planner-level statistics and configuration collapses.

use nirrt_core::grid::oracle_guidance_provider;
use nirrt_core::guidance::GuidanceQuery;
use nirrt_core::nirrt::{plan_observed, SampleSource};
use nirrt_core::{plan, Error, NirrtConfig, PlannerKind, ProblemInstance, RngHandle, State, World};

fn open_map() -> ProblemInstance {
    let w = World::empty(State::xy(0.0, 0.0), State::xy(224.0, 224.0)).unwrap();
    ProblemInstance::new(w, State::xy(12.0, 112.0), State::xy(212.0, 112.0)).unwrap()
}

#[test]
fn rrt_star_solves_the_open_map_on_almost_every_seed() {
    let p = open_map();
    let cfg = NirrtConfig::for_problem(&p);
    assert_eq!(cfg.planner.max_iterations, 3000);
    let solved = (0..50)
        .filter(|&s| {
            let run = plan(&p, PlannerKind::RrtStar, None, &cfg, &mut RngHandle::new(s)).unwrap();
            assert!(run.record.trace_is_monotone());
            run.record.first_solution().is_some()
        })
        .count();
    assert!(solved >= 49, "{solved}/50");
}

#[test]
fn nirrt_star_converges_on_the_open_map() {
    let p = open_map();
    let cfg = NirrtConfig::for_problem(&p).with_iterations(2000);
    let oracle = oracle_guidance_provider(&p, cfg.guide.eta);
    let straight = p.c_min();
    let close = (0..50)
        .filter(|&s| {
            let run = plan(&p, PlannerKind::NirrtPngFc, Some(&oracle), &cfg, &mut RngHandle::new(s)).unwrap();
            run.record.final_cost() <= 1.02 * straight
        })
        .count();
    assert!(close >= 45, "{close}/50");
}

#[test]
fn nrrt_png_is_nirrt_png_without_retrigger_or_informed_sampling() {
    let p = open_map();
    let mut cfg = NirrtConfig::for_problem(&p).with_iterations(800);
    cfg.guide.n_points = 512;
    let oracle = oracle_guidance_provider(&p, cfg.guide.eta);

    let mut collapsed = PlannerKind::NirrtPng.rules();
    collapsed.informed = false;
    let mut alpha0 = cfg.clone();
    alpha0.alpha = 0.0;

    let mut a = Vec::new();
    let mut b = Vec::new();
    let ra = plan_observed(
        &p,
        PlannerKind::NrrtPng.rules(),
        Some(&oracle),
        &cfg,
        &mut RngHandle::new(4),
        |i, s| a.push((i, s.x, s.source)),
    )
    .unwrap();
    let rb = plan_observed(&p, collapsed, Some(&oracle), &alpha0, &mut RngHandle::new(4), |i, s| {
        b.push((i, s.x, s.source))
    })
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.record.trace, rb.record.trace);
    assert_eq!(rb.record.retriggers(), 0);
    assert!(a.iter().any(|s| s.2 == SampleSource::Guide));
}

#[test]
fn failed_provider_reduces_to_irrt_star() {
    let p = open_map();
    let cfg = NirrtConfig::for_problem(&p).with_iterations(1500);
    let broken = |_: &GuidanceQuery| -> nirrt_core::Result<Vec<f64>> { Err(Error::GuidanceUnavailable("down".into())) };
    for seed in 0..5 {
        let n = plan(
            &p,
            PlannerKind::NirrtPngFc,
            Some(&broken),
            &cfg,
            &mut RngHandle::new(seed),
        )
        .unwrap();
        let i = plan(&p, PlannerKind::IrrtStar, None, &cfg, &mut RngHandle::new(seed)).unwrap();
        assert_eq!(n.record.trace, i.record.trace);
        assert_eq!(n.record.samples.guide, 0);
    }
}

#[test]
fn guided_branch_keeps_at_least_half_the_draws() {
    let p = open_map();
    let cfg = NirrtConfig::for_problem(&p);
    let oracle = oracle_guidance_provider(&p, cfg.guide.eta);
    let run = plan(
        &p,
        PlannerKind::NirrtPngFc,
        Some(&oracle),
        &cfg,
        &mut RngHandle::new(11),
    )
    .unwrap();
    let s = run.record.samples;
    let base = s.uniform + s.informed;
    let total = base + s.guide + s.guide_fallback;
    assert_eq!(total, 3000);
    // binomial(3000, 1/2) stays within four standard deviations
    assert!((base as f64 - 1500.0).abs() < 4.0 * (750f64).sqrt(), "{base}");
}

#[test]
fn best_path_is_collision_free_and_matches_the_trace() {
    let p = open_map();
    let cfg = NirrtConfig::for_problem(&p).with_iterations(1000);
    let run = plan(&p, PlannerKind::IrrtStar, None, &cfg, &mut RngHandle::new(7)).unwrap();
    let path = run.best_path.unwrap();
    assert_eq!(path.first(), Some(&p.start));
    assert_eq!(path.last(), Some(&p.goal));
    let len: f64 = path.windows(2).map(|w| w[0].distance(&w[1])).sum();
    assert!((len - run.record.final_cost()).abs() < 1e-9);
    assert!(path.windows(2).all(|w| p.world.collision_free_segment(&w[0], &w[1])));
}
