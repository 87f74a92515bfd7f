//! The RRT* core: nearest, steer, near, choose-parent and rewire.
//!
//! Costs are Euclidean arc length. After every call to [`extend_and_rewire`]
//! each non-root vertex satisfies `cost(v) == cost(parent(v)) + |parent(v) - v|`
//! up to floating-point accumulation along the branch.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::geometry::State;
use crate::spatial::BucketIndex;
use crate::world::World;

/// Steering and rewiring parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Maximum extension length per iteration.
    pub eta: f64,
    /// Rewiring constant in `r = min(gamma * (ln n / n)^(1/d), eta)`.
    pub gamma: f64,
    /// Radius of the closed goal ball.
    pub goal_radius: f64,
    pub max_iterations: usize,
    /// Segment collision-check spacing.
    pub collision_resolution: f64,
}

impl PlannerConfig {
    /// Defaults for a world: `eta` 10 in 2D and 5 in 3D, goal radius equal to
    /// `eta`, and `gamma` computed from the bounds measure.
    pub fn for_world(world: &World) -> Self {
        let dim = world.dim();
        let eta = if dim == 3 { 5.0 } else { 10.0 };
        Self {
            eta,
            gamma: rewire_gamma(world),
            goal_radius: eta,
            max_iterations: if dim == 3 { 5000 } else { 3000 },
            collision_resolution: world.resolution(),
        }
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(contract("eta must be positive"));
        }
        if !(self.goal_radius.is_finite() && self.goal_radius > 0.0) {
            return Err(contract("goal radius must be positive"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(contract("gamma must be non-negative"));
        }
        if !(self.collision_resolution.is_finite() && self.collision_resolution > 0.0) {
            return Err(contract("collision resolution must be positive"));
        }
        Ok(())
    }

    /// Rewiring radius for a tree with `n` vertices.
    pub fn rewire_radius(&self, n: usize, dim: usize) -> f64 {
        let n = n.max(1) as f64;
        let shrinking = self.gamma * (n.ln() / n).powf(1.0 / dim as f64);
        shrinking.min(self.eta)
    }
}

/// `2 (1 + 1/d)^(1/d) (mu / zeta_d)^(1/d)` with the bounds measure standing
/// in for the free-space measure.
pub fn rewire_gamma(world: &World) -> f64 {
    let d = world.dim() as f64;
    let zeta = unit_ball_volume(world.dim());
    2.0 * (1.0 + 1.0 / d).powf(1.0 / d) * (world.measure() / zeta).powf(1.0 / d)
}

pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        2 => PI,
        3 => 4.0 / 3.0 * PI,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Planner tree rooted at the start state.
#[derive(Clone, Debug)]
pub struct Tree {
    vertices: Vec<State>,
    parent: Vec<Option<usize>>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
    index: BucketIndex,
}

impl Tree {
    /// Single-vertex tree. `bucket` sizes the spatial index cells.
    pub fn new(root: State, world: &World, bucket: f64) -> Self {
        let mut index = BucketIndex::new(world.lo(), world.hi(), bucket);
        index.insert(0, &root);
        Self {
            vertices: vec![root],
            parent: vec![None],
            cost: vec![0.0],
            children: vec![Vec::new()],
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Always false: a tree holds at least its root.
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn root(&self) -> &State {
        &self.vertices[0]
    }

    pub fn vertices(&self) -> &[State] {
        &self.vertices
    }

    pub fn state(&self, v: usize) -> &State {
        &self.vertices[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn cost(&self, v: usize) -> f64 {
        self.cost[v]
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// Parent/child edges as `(parent, child)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent.iter().enumerate().filter_map(|(v, p)| p.map(|p| (p, v)))
    }

    /// Root-to-`v` state sequence.
    pub fn path_to(&self, v: usize) -> Vec<State> {
        let mut path = vec![self.vertices[v]];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(self.vertices[p]);
            cur = p;
        }
        path.reverse();
        path
    }

    fn is_ancestor(&self, ancestor: usize, mut v: usize) -> bool {
        loop {
            if v == ancestor {
                return true;
            }
            match self.parent[v] {
                Some(p) => v = p,
                None => return false,
            }
        }
    }

    pub(crate) fn add(&mut self, x: State, parent: usize, cost: f64) -> usize {
        let v = self.vertices.len();
        self.vertices.push(x);
        self.parent.push(Some(parent));
        self.cost.push(cost);
        self.children.push(Vec::new());
        self.children[parent].push(v);
        self.index.insert(v, &x);
        v
    }

    /// Moves `v` under `new_parent` and propagates the cost change to every
    /// descendant.
    pub(crate) fn reparent(&mut self, v: usize, new_parent: usize, new_cost: f64) {
        if let Some(old) = self.parent[v] {
            self.children[old].retain(|&c| c != v);
        }
        self.parent[v] = Some(new_parent);
        self.children[new_parent].push(v);
        self.cost[v] = new_cost;
        let mut stack = self.children[v].clone();
        while let Some(c) = stack.pop() {
            let p = self.parent[c].expect("child has a parent");
            self.cost[c] = self.cost[p] + self.vertices[p].distance(&self.vertices[c]);
            stack.extend_from_slice(&self.children[c]);
        }
    }

    /// Largest deviation from the cost-consistency invariant, or an error
    /// describing a structural defect (cycle, multiple roots).
    pub fn consistency_error(&self) -> std::result::Result<f64, String> {
        let roots = self.parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 || self.parent[0].is_some() {
            return Err(format!("expected a single root at index 0, found {roots} roots"));
        }
        let mut worst: f64 = 0.0;
        for v in 1..self.len() {
            // acyclic: walking up must reach the root within len steps
            let mut cur = v;
            let mut steps = 0;
            while let Some(p) = self.parent[cur] {
                cur = p;
                steps += 1;
                if steps > self.len() {
                    return Err(format!("cycle through vertex {v}"));
                }
            }
            let p = self.parent[v].unwrap();
            let expect = self.cost[p] + self.vertices[p].distance(&self.vertices[v]);
            worst = worst.max((expect - self.cost[v]).abs());
        }
        Ok(worst)
    }
}

/// Vertex closest to `x`; ties go to the lowest index.
pub fn nearest(tree: &Tree, x: &State) -> usize {
    tree.index
        .nearest(&tree.vertices, x)
        .expect("tree always holds its root")
}

/// All vertices within `radius` of `x`, ascending by index.
pub fn near(tree: &Tree, x: &State, radius: f64) -> Vec<usize> {
    assert!(radius >= 0.0, "contract violation: negative near radius");
    tree.index.within(&tree.vertices, x, radius)
}

/// Moves from `from` toward `to` by at most `eta`.
pub fn steer(from: &State, to: &State, eta: f64) -> State {
    assert!(eta > 0.0, "contract violation: eta must be positive");
    let d = from.distance(to);
    if d <= eta {
        *to
    } else {
        from.lerp(to, eta / d)
    }
}

/// One RRT* iteration for the sample `x_rand`: steer from the nearest vertex,
/// insert under the cheapest collision-free neighbour, then rewire neighbours
/// that become cheaper through the new vertex.
///
/// Returns the new vertex, or `None` when the extension is blocked or has zero
/// length (the sample coincides with an existing vertex).
pub fn extend_and_rewire(tree: &mut Tree, x_rand: &State, world: &World, cfg: &PlannerConfig) -> Option<usize> {
    let delta = cfg.collision_resolution;
    let x_nearest_idx = nearest(tree, x_rand);
    let x_nearest = tree.vertices[x_nearest_idx];
    let x_new = steer(&x_nearest, x_rand, cfg.eta);
    let step = x_nearest.distance(&x_new);
    if step == 0.0 || !world.collision_free_segment_with(&x_nearest, &x_new, delta) {
        return None;
    }

    let radius = cfg.rewire_radius(tree.len(), tree.dim());
    let x_near = near(tree, &x_new, radius);

    let mut x_min = x_nearest_idx;
    let mut c_min = tree.cost[x_nearest_idx] + step;
    for &v in &x_near {
        if v == x_nearest_idx {
            continue;
        }
        let c = tree.cost[v] + tree.vertices[v].distance(&x_new);
        if c < c_min && world.collision_free_segment_with(&tree.vertices[v], &x_new, delta) {
            x_min = v;
            c_min = c;
        }
    }
    let new_idx = tree.add(x_new, x_min, c_min);

    for &v in &x_near {
        if v == x_min {
            continue;
        }
        let c = c_min + x_new.distance(&tree.vertices[v]);
        if c < tree.cost[v]
            && !tree.is_ancestor(v, new_idx)
            && world.collision_free_segment_with(&x_new, &tree.vertices[v], delta)
        {
            tree.reparent(v, new_idx, c);
        }
    }
    Some(new_idx)
}

/// Closed-ball goal test.
pub fn in_goal_region(x: &State, goal: &State, cfg: &PlannerConfig) -> bool {
    x.distance(goal) <= cfg.goal_radius
}

/// `min over v of cost(v) + |v - goal|`, or infinity for an empty set.
pub fn solution_cost(tree: &Tree, solutions: &[usize], goal: &State) -> f64 {
    best_solution(tree, solutions, goal).map_or(f64::INFINITY, |(_, c)| c)
}

/// Cheapest solution vertex and its cost to the goal; ties go to the first
/// vertex in `solutions`.
pub fn best_solution(tree: &Tree, solutions: &[usize], goal: &State) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &v in solutions {
        let c = tree.cost[v] + tree.vertices[v].distance(goal);
        if best.is_none_or(|(_, bc)| c < bc) {
            best = Some((v, c));
        }
    }
    best
}
