//! Generator properties checked with the grid and visibility oracles.

use std::collections::BTreeSet;

use nirrt_core::grid::astar;
use nirrt_core::problems::{
    center_block, center_block_optimal_cost, flanking_cost, gen_family, gen_narrow_passage, gen_random_world, Family,
    RandomWorldConfig, CENTER_BLOCK_SG,
};
use nirrt_core::visibility::shortest_path_cost;
use nirrt_core::{rasterize, Obstacle, RngHandle};

#[test]
fn block_twenty_by_forty_costs_two_legs_and_the_top_face() {
    let p = center_block(150.0, 20.0, 40.0).unwrap();
    // legs from (25,75) to (65,95) and from (85,95) to (125,75), plus the 20-unit face
    let expected = 2.0 * (40f64 * 40.0 + 20.0 * 20.0).sqrt() + 20.0;
    assert!((expected - 109.442_719_099_991_6).abs() < 1e-12);
    let vis = shortest_path_cost(&p.world, &p.start, &p.goal).unwrap().unwrap();
    assert!((vis - expected).abs() < 1e-9, "{vis}");
    assert!((center_block_optimal_cost(&p) - expected).abs() < 1e-9);
}

#[test]
fn degenerate_block_gives_the_straight_line() {
    let p = center_block(110.0, 0.0, 50.0).unwrap();
    assert_eq!(
        shortest_path_cost(&p.world, &p.start, &p.goal).unwrap(),
        Some(CENTER_BLOCK_SG)
    );
}

#[test]
fn center_block_draws_have_distinct_widths_and_are_feasible() {
    let problems = gen_family(Family::CenterBlock, 100, &mut RngHandle::new(2024)).unwrap();
    let widths: BTreeSet<u64> = problems
        .iter()
        .map(|p| match &p.world.obstacles()[0] {
            Obstacle::Box { lo, hi } => (hi.get(0) - lo.get(0)).to_bits(),
            _ => unreachable!(),
        })
        .collect();
    assert_eq!(widths.len(), 100);
    for p in &problems {
        let vis = shortest_path_cost(&p.world, &p.start, &p.goal).unwrap().unwrap();
        assert!((vis - center_block_optimal_cost(p)).abs() < 1e-9);
        assert!(astar(&rasterize(&p.world), &p.start, &p.goal).unwrap().is_some());
    }
}

#[test]
fn gap_eight_is_cheaper_than_flanking() {
    let mut rng = RngHandle::new(8);
    for _ in 0..10 {
        let p = gen_narrow_passage(8.0, &mut rng).unwrap();
        let through = shortest_path_cost(&p.world, &p.start, &p.goal).unwrap().unwrap();
        let flank = flanking_cost(&p).unwrap().unwrap();
        assert!(through < flank, "{through} vs {flank}");
    }
}

#[test]
fn random_2d_worlds_respect_ranges_and_are_feasible() {
    let cfg = RandomWorldConfig::planar();
    let mut rng = RngHandle::new(500);
    for _ in 0..500 {
        let p = gen_random_world(&cfg, &mut rng).unwrap();
        let boxes = p
            .world
            .obstacles()
            .iter()
            .filter(|o| matches!(o, Obstacle::Box { .. }))
            .count();
        let balls = p.world.obstacles().len() - boxes;
        assert!((cfg.boxes.0..=cfg.boxes.1).contains(&boxes));
        assert!((cfg.balls.0..=cfg.balls.1).contains(&balls));
        assert_eq!(p.world.clearance(), 3.0);
        assert!(p.world.is_free(&p.start) && p.world.is_free(&p.goal));
    }
    // feasibility on a subsample keeps the test fast
    for p in gen_family(Family::Random2d, 25, &mut RngHandle::new(1)).unwrap() {
        assert!(astar(&rasterize(&p.world), &p.start, &p.goal).unwrap().is_some());
    }
}

#[test]
fn random_3d_worlds_are_feasible_and_bounded() {
    for p in gen_family(Family::Random3d, 20, &mut RngHandle::new(3)).unwrap() {
        assert_eq!(p.dim(), 3);
        assert_eq!(p.world.clearance(), 2.0);
        assert!(astar(&rasterize(&p.world), &p.start, &p.goal).unwrap().is_some());
        for o in p.world.obstacles() {
            let center = match o {
                Obstacle::Box { lo, hi } => lo.lerp(hi, 0.5),
                Obstacle::Ball { center, .. } => *center,
            };
            assert!(p.world.in_bounds(&center));
        }
    }
}

#[test]
fn seeded_generation_is_byte_identical() {
    for cfg in [RandomWorldConfig::planar(), RandomWorldConfig::spatial()] {
        let a = gen_random_world(&cfg, &mut RngHandle::new(42)).unwrap().to_json();
        let b = gen_random_world(&cfg, &mut RngHandle::new(42)).unwrap().to_json();
        assert_eq!(a, b);
    }
}
