//! The informed set: states whose focal-distance sum to start and goal does
//! not exceed the current best cost, and direct uniform sampling from it.
//!
//! Samples are drawn by mapping the unit ball through
//! `center + C * diag(c_best / 2, sqrt(c_best^2 - c_min^2) / 2, ...)`, where
//! `C` is a rotation taking the first axis onto the start-to-goal direction.

use crate::error::{contract, Error, Result};
use crate::geometry::{sample_unit_ball, RngHandle, State};
use crate::world::World;

/// Rejection budget for sampling the informed set intersected with free space.
pub const FOCUS_SAMPLE_BUDGET: usize = 100_000;

/// Conjugate diameters collapse to zero within this margin of `c_min`.
const DEGENERATE_MARGIN: f64 = 1e-9;

pub type Rotation = [[f64; 3]; 3];

/// Prolate hyperspheroid with foci at start and goal.
#[derive(Clone, Debug, PartialEq)]
pub struct InformedSet {
    start: State,
    goal: State,
    c_best: f64,
    c_min: f64,
    center: State,
    rotation: Rotation,
    radii: [f64; 3],
}

impl InformedSet {
    /// Fails when `c_best` is not finite or below the start-goal distance.
    pub fn new(start: State, goal: State, c_best: f64) -> Result<Self> {
        let c_min = start.try_distance(&goal)?;
        if !c_best.is_finite() {
            return Err(contract("informed set needs a finite cost"));
        }
        if c_best < c_min {
            return Err(contract(format!(
                "cost {c_best} is below the start-goal distance {c_min}"
            )));
        }
        let dim = start.dim();
        let transverse = if c_best <= c_min + DEGENERATE_MARGIN {
            0.0
        } else {
            (c_best * c_best - c_min * c_min).sqrt() / 2.0
        };
        let mut radii = [0.0; 3];
        radii[0] = c_best / 2.0;
        for r in radii.iter_mut().take(dim).skip(1) {
            *r = transverse;
        }
        Ok(Self {
            start,
            goal,
            c_best,
            c_min,
            center: start.lerp(&goal, 0.5),
            rotation: rotation_to_world(&start, &goal),
            radii,
        })
    }

    pub fn start(&self) -> &State {
        &self.start
    }

    pub fn goal(&self) -> &State {
        &self.goal
    }

    pub fn c_best(&self) -> f64 {
        self.c_best
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn center(&self) -> &State {
        &self.center
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    /// Semi-axis lengths (transverse axes repeated; unused axes zero).
    pub fn radii(&self) -> [f64; 3] {
        self.radii
    }

    /// Exact focal-sum test.
    #[inline]
    pub fn contains(&self, x: &State) -> bool {
        x.distance(&self.start) + x.distance(&self.goal) <= self.c_best
    }

    /// Axis-aligned bounding box of the set.
    pub fn aabb(&self) -> (State, State) {
        let dim = self.start.dim();
        let mut half = [0.0; 3];
        for (i, h) in half.iter_mut().enumerate().take(dim) {
            *h = (0..dim)
                .map(|j| (self.rotation[i][j] * self.radii[j]).powi(2))
                .sum::<f64>()
                .sqrt();
        }
        (self.center.map(|i, c| c - half[i]), self.center.map(|i, c| c + half[i]))
    }

    /// Area (2D) or volume (3D) of the set.
    pub fn measure(&self) -> f64 {
        let dim = self.start.dim();
        crate::rrt_star::unit_ball_volume(dim) * self.radii[..dim].iter().product::<f64>()
    }
}

/// Rotation whose first column is the unit vector from `start` to `goal`.
/// Orthonormal with determinant +1. Coincident start and goal give identity.
pub fn rotation_to_world(start: &State, goal: &State) -> Rotation {
    let dim = start.dim();
    let mut a = [0.0; 3];
    let len = start.distance(goal);
    let mut eye = [[0.0; 3]; 3];
    for (i, row) in eye.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if len == 0.0 {
        return eye;
    }
    for (i, ai) in a.iter_mut().enumerate().take(dim) {
        *ai = (goal.get(i) - start.get(i)) / len;
    }
    if dim == 2 {
        let (c, s) = (a[0], a[1]);
        return [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
    }
    // Householder reflection H = I - 2 v v^T / (v^T v) with v = e1 - a maps
    // e1 onto a; flipping the last column restores det = +1.
    let v = [1.0 - a[0], -a[1], -a[2]];
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv < 1e-24 {
        return eye;
    }
    let mut h = eye;
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    for row in h.iter_mut() {
        row[2] = -row[2];
    }
    h
}

/// Uniform sample from the informed set.
///
/// Samples that round outside the exact focal-sum test are redrawn, so every
/// returned state satisfies [`InformedSet::contains`].
pub fn informed_sample(set: &InformedSet, rng: &mut RngHandle) -> State {
    let dim = set.start.dim();
    // Only a set pinned at c_best == c_min can keep rounding out; its start
    // focus is always a member.
    for _ in 0..1000 {
        let ball = sample_unit_ball(dim, rng).expect("informed set dimension is 2 or 3");
        let mut scaled = [0.0; 3];
        for (i, s) in scaled.iter_mut().enumerate().take(dim) {
            *s = set.radii[i] * ball.get(i);
        }
        let x = set
            .center
            .map(|i, c| c + (0..dim).map(|j| set.rotation[i][j] * scaled[j]).sum::<f64>());
        if set.contains(&x) {
            return x;
        }
    }
    set.start
}

/// Informed sample intersected with free space when a solution exists,
/// otherwise a plain free-space sample.
pub fn informed_or_uniform(set: Option<&InformedSet>, world: &World, rng: &mut RngHandle) -> Result<State> {
    let Some(set) = set else {
        return world.sample_free(rng);
    };
    for _ in 0..FOCUS_SAMPLE_BUDGET {
        let x = informed_sample(set, rng);
        if world.is_free(&x) {
            return Ok(x);
        }
    }
    Err(Error::InfeasibleFocus(FOCUS_SAMPLE_BUDGET))
}
