//! Grid search and guidance geometry checked against brute-force references.

mod common;

use common::{dijkstra_steps, random_free_cell, random_grid};
use nirrt_core::grid::{astar_cells, label_guidance, Cell, OccupancyGrid, OracleProvider};
use nirrt_core::guidance::{
    add_one_hot_features, bfs_connectivity, boundary_next_endpoint, boundary_score, farthest_point_indices,
    point_cloud_sampling, pointnet_guide, GuidanceSet, GuideConfig, PointCloud,
};
use nirrt_core::problems::{gen_narrow_passage, PassageLayout};
use nirrt_core::visibility::shortest_path_cost;
use nirrt_core::{astar, rasterize, Obstacle, ProblemInstance, RngHandle, State, World};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn astar_matches_dijkstra(seed in any::<u64>(), dim in 2usize..=3, density in 0.0..0.45f64) {
        let mut rng = RngHandle::new(seed);
        let g = random_grid(dim, if dim == 2 { 24 } else { 10 }, density, &mut rng);
        let (s, t) = (random_free_cell(&g, &mut rng), random_free_cell(&g, &mut rng));
        let a = astar_cells(&g, s, t).unwrap();
        let d = dijkstra_steps(&g, s, t);
        prop_assert_eq!(a.as_ref().map(|p| p.steps), d);
        if let Some(p) = a {
            prop_assert_eq!(p.cells.first(), Some(&s));
            prop_assert_eq!(p.cells.last(), Some(&t));
        }
    }
}

#[test]
fn diagonal_chain_agrees_with_dijkstra() {
    let g = OccupancyGrid::free(2, [10, 10, 1], 1.0, [0.0; 3]);
    let p = astar_cells(&g, [0, 0, 0], [9, 9, 0]).unwrap().unwrap();
    assert_eq!(Some(p.steps), dijkstra_steps(&g, [0, 0, 0], [9, 9, 0]));
    assert_eq!(p.cost, 9.0 * 2f64.sqrt());
}

#[test]
fn straight_path_labels_form_a_capsule() {
    let g = OccupancyGrid::free(2, [60, 40, 1], 1.0, [0.0; 3]);
    let path: Vec<Cell> = (10..50).map(|x| [x, 20, 0]).collect();
    let pts: Vec<State> = (0..60)
        .flat_map(|x| (0..40).map(move |y| State::xy(x as f64 + 0.25, y as f64 + 0.75)))
        .collect();
    let labels = label_guidance(&g, &path, &pts, 10.0);
    for (p, l) in pts.iter().zip(labels) {
        // distance to the segment between the first and last centers
        let x = p.get(0).clamp(10.5, 49.5);
        let inside = State::xy(x, 20.5).distance(p) <= 10.0;
        assert_eq!(l, inside, "{p:?}");
    }
}

fn union_find_connected(points: &[State], eta: f64) -> bool {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if points[i].distance(&points[j]) <= eta {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    find(&mut parent, 0) == find(&mut parent, n - 1)
}

#[test]
fn bfs_matches_union_find_on_fuzz_cases() {
    let mut rng = RngHandle::new(77);
    let mut both = [0, 0];
    for case in 0..100 {
        let n = rng.random_range(0..160);
        let guide: Vec<State> = (0..n)
            .map(|_| State::xy(rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0))
            .collect();
        let (s, g) = (State::xy(5.0, 5.0), State::xy(95.0, 95.0));
        let mut all = vec![s];
        all.extend(&guide);
        all.push(g);
        let expected = union_find_connected(&all, 14.0);
        let got = bfs_connectivity(&guide, &s, &g, 14.0);
        assert_eq!(got.connected, expected, "case {case}");
        both[usize::from(expected)] += 1;
    }
    assert!(
        both[0] > 0 && both[1] > 0,
        "fuzz cases should cover both outcomes: {both:?}"
    );
}

#[test]
fn chain_at_nine_tenths_eta_connects() {
    let eta = 10.0;
    let chain: Vec<State> = (1..20).map(|k| State::xy(0.9 * eta * k as f64, 0.0)).collect();
    let goal = State::xy(0.9 * eta * 20.0, 0.0);
    assert!(bfs_connectivity(&chain, &State::xy(0.0, 0.0), &goal, eta).connected);
}

#[test]
fn collinear_boundary_picks_the_far_candidate() {
    let (start, goal) = (State::xy(0.0, 0.0), State::xy(100.0, 0.0));
    let b1 = State::xy(30.0, 0.0);
    let b2 = State::xy(60.0, 0.0);
    let cloud = PointCloud::new(vec![State::xy(30.0, 2.0), State::xy(60.0, 2.0)]);
    let e = boundary_next_endpoint(&[start, b1, b2], &cloud, &GuidanceSet::default(), &start, &goal, 10.0).unwrap();
    let scores: Vec<f64> = [start, b1, b2]
        .iter()
        .map(|b| boundary_score(b, &start, &goal))
        .collect();
    // start has no unlabelled point within eta/2; among b1 and b2 the max wins
    assert!(scores[2] > scores[1]);
    assert_eq!(e.state, b2);
}

#[test]
fn dominating_candidate_wins() {
    let (start, goal) = (State::xy(0.0, 0.0), State::xy(100.0, 0.0));
    let weak = State::xy(20.0, 30.0);
    let strong = State::xy(50.0, 5.0);
    let cloud = PointCloud::new(vec![State::xy(20.0, 31.0), State::xy(50.0, 6.0)]);
    let e = boundary_next_endpoint(&[weak, strong], &cloud, &GuidanceSet::default(), &start, &goal, 10.0).unwrap();
    assert_eq!(e.state, strong);
}

#[test]
fn overlapping_endpoints_set_both_flags() {
    let cloud = PointCloud::new(vec![State::xy(5.0, 0.0), State::xy(0.0, 0.0), State::xy(30.0, 30.0)]);
    let f = add_one_hot_features(&cloud, &State::xy(0.0, 0.0), &State::xy(8.0, 0.0), 10.0);
    assert_eq!(f, vec![[1, 1], [1, 1], [0, 0]]);
}

fn min_pairwise(points: &[State]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            m = m.min(points[i].distance(&points[j]));
        }
    }
    m
}

#[test]
fn farthest_point_cloud_is_more_even_than_a_random_subsample() {
    let w = World::empty(State::xy(0.0, 0.0), State::xy(224.0, 224.0)).unwrap();
    let n = 2048;
    for seed in 0..20 {
        let mut rng = RngHandle::new(seed);
        let candidates: Vec<State> = (0..4 * n).map(|_| w.sample_free(&mut rng).unwrap()).collect();
        let fps: Vec<State> = farthest_point_indices(&candidates, n)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        // the uniform subsample of the same size is the first n candidates
        assert!(min_pairwise(&fps) >= min_pairwise(&candidates[..n]), "seed {seed}");
    }
    let c = point_cloud_sampling(&w, None, 64, &mut RngHandle::new(1)).unwrap();
    assert_eq!(c.len(), 64);
}

#[test]
fn oracle_on_empty_world_returns_the_straight_capsule() {
    let w = World::empty(State::xy(0.0, 0.0), State::xy(100.0, 100.0)).unwrap();
    let p = ProblemInstance::new(w.clone(), State::xy(20.5, 50.5), State::xy(80.5, 50.5)).unwrap();
    let oracle = OracleProvider::new(&w, 10.0);
    let pts: Vec<State> = (0..100)
        .flat_map(|x| (0..100).map(move |y| State::xy(x as f64 + 0.5, y as f64 + 0.1)))
        .collect();
    let probs = oracle.probabilities(&p.start, &p.goal, &pts);
    for (q, pr) in pts.iter().zip(probs) {
        let x = q.get(0).clamp(20.5, 80.5);
        let inside = State::xy(x, 50.5).distance(q) <= 10.0;
        assert_eq!(pr == 1.0, inside, "{q:?}");
    }
}

#[test]
fn oracle_is_silent_when_disconnected() {
    let w = World::new(
        State::xy(0.0, 0.0),
        State::xy(100.0, 100.0),
        vec![Obstacle::rect(State::xy(45.0, -5.0), State::xy(55.0, 105.0))],
        0.0,
    )
    .unwrap();
    let oracle = OracleProvider::new(&w, 10.0);
    let pts = vec![State::xy(10.0, 10.0), State::xy(40.0, 50.0)];
    assert_eq!(
        oracle.probabilities(&State::xy(10.0, 50.0), &State::xy(90.0, 50.0), &pts),
        vec![0.0, 0.0]
    );
}

#[test]
fn oracle_guidance_passes_through_the_gap() {
    let mut rng = RngHandle::new(9);
    for gap in [6.0, 10.0, 14.0] {
        let p = gen_narrow_passage(gap, &mut rng).unwrap();
        let layout = PassageLayout::detect(&p.world).unwrap();
        let oracle = OracleProvider::new(&p.world, 10.0);
        let cloud = point_cloud_sampling(&p.world, None, 2048, &mut rng).unwrap();
        let probs = oracle.probabilities(&p.start, &p.goal, cloud.points());
        let in_gap = cloud.points().iter().zip(&probs).filter(|(q, &pr)| {
            pr > 0.5
                && (layout.x.0..=layout.x.1).contains(&q.get(0))
                && (layout.gap.0..=layout.gap.1).contains(&q.get(1))
        });
        assert!(in_gap.count() > 0, "gap {gap}");
    }
}

#[test]
fn oracle_guide_connects_in_one_round_on_an_empty_map() {
    let w = World::empty(State::xy(0.0, 0.0), State::xy(224.0, 224.0)).unwrap();
    let p = ProblemInstance::new(w.clone(), State::xy(40.0, 112.0), State::xy(180.0, 112.0)).unwrap();
    let oracle = OracleProvider::new(&w, 10.0);
    let out = pointnet_guide(
        &p,
        f64::INFINITY,
        &oracle,
        &GuideConfig::new(10.0),
        &mut RngHandle::new(3),
    )
    .unwrap();
    assert!(out.connected);
    assert_eq!(out.rounds.len(), 1);
}

#[test]
fn grid_cost_stays_close_to_the_continuous_optimum() {
    let mut rng = RngHandle::new(5);
    for _ in 0..20 {
        let mut obstacles = Vec::new();
        for _ in 0..6 {
            let (x, y) = (rng.random_range(20.0..180.0), rng.random_range(20.0..180.0));
            let (w, h) = (rng.random_range(5.0..30.0), rng.random_range(5.0..30.0));
            obstacles.push(Obstacle::rect(State::xy(x, y), State::xy(x + w, y + h)));
        }
        let world = World::new(State::xy(0.0, 0.0), State::xy(224.0, 224.0), obstacles, 0.0).unwrap();
        let (s, g) = (State::xy(5.5, 5.5), State::xy(218.5, 218.5));
        if !world.is_free(&s) || !world.is_free(&g) {
            continue;
        }
        let grid = rasterize(&world);
        let Some(path) = astar(&grid, &s, &g).unwrap() else {
            continue;
        };
        let exact = shortest_path_cost(&world, &s, &g).unwrap().unwrap();
        assert!(path.cost <= 1.10 * exact, "{} vs {exact}", path.cost);
        assert!(path.cost >= s.distance(&g));
    }
}
