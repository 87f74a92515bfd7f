//! Exact shortest paths among axis-aligned boxes in the plane.
//!
//! With zero clearance, an optimal path among convex polygonal obstacles only
//! bends at obstacle corners, so Dijkstra over the visibility graph of start,
//! goal and free box corners gives the true optimum. Paths may slide along box
//! faces and pass through shared corners.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{contract, Result};
use crate::geometry::State;
use crate::world::{Obstacle, World};

const OVERLAP_EPS: f64 = 1e-12;

/// True when the segment `a -> b` passes through the open interior of the box.
pub fn segment_hits_open_box(a: &State, b: &State, lo: &State, hi: &State) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for i in 0..a.dim() {
        let p = a.get(i);
        let d = b.get(i) - p;
        let (l, h) = (lo.get(i), hi.get(i));
        if d == 0.0 {
            if p <= l || p >= h {
                return false;
            }
        } else {
            let (mut e, mut x) = ((l - p) / d, (h - p) / d);
            if e > x {
                std::mem::swap(&mut e, &mut x);
            }
            t0 = t0.max(e);
            t1 = t1.min(x);
        }
    }
    t1 - t0 > OVERLAP_EPS
}

fn boxes(world: &World) -> Result<Vec<(State, State)>> {
    if world.dim() != 2 {
        return Err(contract("visibility graph needs a 2D world"));
    }
    if world.clearance() != 0.0 {
        return Err(contract("visibility graph needs zero clearance"));
    }
    world
        .obstacles()
        .iter()
        .map(|o| match o {
            Obstacle::Box { lo, hi } => Ok((*lo, *hi)),
            Obstacle::Ball { .. } => Err(contract("visibility graph supports boxes only")),
        })
        .collect()
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Shortest collision-free path. `None` if the endpoints are disconnected.
pub fn shortest_path(world: &World, start: &State, goal: &State) -> Result<Option<(f64, Vec<State>)>> {
    let bx = boxes(world)?;
    let mut nodes = vec![*start, *goal];
    for (lo, hi) in &bx {
        for (x, y) in [
            (lo.get(0), lo.get(1)),
            (hi.get(0), lo.get(1)),
            (lo.get(0), hi.get(1)),
            (hi.get(0), hi.get(1)),
        ] {
            let c = State::xy(x, y);
            if world.in_bounds(&c) && world.is_free(&c) && !nodes.contains(&c) {
                nodes.push(c);
            }
        }
    }
    let visible = |a: &State, b: &State| !bx.iter().any(|(lo, hi)| segment_hits_open_box(a, b, lo, hi));

    let n = nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, 0)]);
    while let Some(Entry(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == 1 {
            break;
        }
        for v in 0..n {
            if done[v] {
                continue;
            }
            let nd = d + nodes[u].distance(&nodes[v]);
            if nd < dist[v] && visible(&nodes[u], &nodes[v]) {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Entry(nd, v));
            }
        }
    }
    if !dist[1].is_finite() {
        return Ok(None);
    }
    let mut path = vec![nodes[1]];
    let mut cur = 1;
    while cur != 0 {
        cur = prev[cur];
        path.push(nodes[cur]);
    }
    path.reverse();
    Ok(Some((dist[1], path)))
}

/// Cost of [`shortest_path`].
pub fn shortest_path_cost(world: &World, start: &State, goal: &State) -> Result<Option<f64>> {
    Ok(shortest_path(world, start, goal)?.map(|p| p.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_world(obs: Vec<Obstacle>) -> World {
        World::new(State::xy(0.0, 0.0), State::xy(100.0, 100.0), obs, 0.0).unwrap()
    }

    #[test]
    fn straight_line_when_unobstructed() {
        let w = square_world(vec![]);
        let c = shortest_path_cost(&w, &State::xy(10.0, 10.0), &State::xy(40.0, 50.0)).unwrap();
        assert_eq!(c, Some(50.0));
    }

    #[test]
    fn detours_around_a_block() {
        let w = square_world(vec![Obstacle::rect(State::xy(40.0, 30.0), State::xy(60.0, 70.0))]);
        let (c, path) = shortest_path(&w, &State::xy(20.0, 50.0), &State::xy(80.0, 50.0))
            .unwrap()
            .unwrap();
        let expected = 2.0 * (20f64 * 20.0 + 20.0 * 20.0).sqrt() + 20.0;
        assert!((c - expected).abs() < 1e-9);
        assert_eq!(path.len(), 4);
    }

    #[test]
    fn face_sliding_is_not_a_collision() {
        let lo = State::xy(0.0, 0.0);
        let hi = State::xy(10.0, 10.0);
        assert!(!segment_hits_open_box(
            &State::xy(0.0, -5.0),
            &State::xy(0.0, 15.0),
            &lo,
            &hi
        ));
        assert!(!segment_hits_open_box(
            &State::xy(-5.0, -5.0),
            &State::xy(0.0, 0.0),
            &lo,
            &hi
        ));
        assert!(!segment_hits_open_box(
            &State::xy(-5.0, 5.0),
            &State::xy(5.0, -5.0),
            &lo,
            &hi
        ));
        assert!(segment_hits_open_box(
            &State::xy(-5.0, 5.0),
            &State::xy(15.0, 5.0),
            &lo,
            &hi
        ));
        assert!(segment_hits_open_box(
            &State::xy(5.0, 5.0),
            &State::xy(5.0, 6.0),
            &lo,
            &hi
        ));
    }

    #[test]
    fn sealed_start_is_disconnected() {
        let w = square_world(vec![Obstacle::rect(State::xy(-10.0, 40.0), State::xy(110.0, 45.0))]);
        let c = shortest_path_cost(&w, &State::xy(10.0, 10.0), &State::xy(10.0, 90.0)).unwrap();
        assert_eq!(c, None);
    }

    #[test]
    fn rejects_unsupported_worlds() {
        let w = square_world(vec![Obstacle::ball(State::xy(50.0, 50.0), 5.0)]);
        assert!(shortest_path_cost(&w, &State::xy(1.0, 1.0), &State::xy(2.0, 2.0)).is_err());
    }
}
