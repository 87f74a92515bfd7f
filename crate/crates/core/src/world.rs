//! Obstacles, clearance-aware collision checking and the versioned world
//! document format.
//!
//! Clearance is exact Euclidean inflation: a state is blocked by an obstacle
//! when it lies in the obstacle's interior or closer than `clearance` to its
//! surface. With zero clearance, touching an obstacle's boundary is allowed.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::geometry::{sample_box_unchecked, RngHandle, State};

/// Rejection budget for [`World::sample_free`].
pub const FREE_SAMPLE_BUDGET: usize = 100_000;

/// Current version of the world document.
pub const WORLD_DOC_VERSION: u32 = 1;

/// Default segment collision-check spacing for a dimension.
pub fn default_resolution(dim: usize) -> f64 {
    if dim == 3 {
        0.25
    } else {
        0.5
    }
}

/// An axis-aligned box or a ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Obstacle {
    Box { lo: State, hi: State },
    Ball { center: State, radius: f64 },
}

impl Obstacle {
    pub fn rect(lo: State, hi: State) -> Self {
        Obstacle::Box { lo, hi }
    }

    pub fn ball(center: State, radius: f64) -> Self {
        Obstacle::Ball { center, radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            Obstacle::Box { lo, .. } => lo.dim(),
            Obstacle::Ball { center, .. } => center.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Obstacle::Box { lo, hi } => {
                if lo.dim() != hi.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: lo.dim(),
                        got: hi.dim(),
                    });
                }
                if (0..lo.dim()).any(|i| lo.get(i) >= hi.get(i)) {
                    return Err(contract(format!("box {lo:?}..{hi:?} is empty")));
                }
            }
            Obstacle::Ball { radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(contract(format!("ball radius must be positive, got {radius}")));
                }
            }
        }
        Ok(())
    }

    /// Distance from `x` to the obstacle; zero inside or on the surface.
    #[inline]
    pub fn distance_to(&self, x: &State) -> f64 {
        match self {
            Obstacle::Box { lo, hi } => {
                let mut acc = 0.0;
                for i in 0..x.dim() {
                    let v = x.get(i);
                    let d = (lo.get(i) - v).max(v - hi.get(i)).max(0.0);
                    acc += d * d;
                }
                acc.sqrt()
            }
            Obstacle::Ball { center, radius } => (x.distance(center) - radius).max(0.0),
        }
    }

    /// Strict interior membership (the surface is not included).
    #[inline]
    pub fn contains_interior(&self, x: &State) -> bool {
        match self {
            Obstacle::Box { lo, hi } => (0..x.dim()).all(|i| lo.get(i) < x.get(i) && x.get(i) < hi.get(i)),
            Obstacle::Ball { center, radius } => x.distance(center) < *radius,
        }
    }

    /// Whether the inflated obstacle blocks `x`.
    #[inline]
    pub fn blocks(&self, x: &State, clearance: f64) -> bool {
        self.contains_interior(x) || self.distance_to(x) < clearance
    }

    /// Axis-aligned bounding box of the obstacle.
    pub fn aabb(&self) -> (State, State) {
        match self {
            Obstacle::Box { lo, hi } => (*lo, *hi),
            Obstacle::Ball { center, radius } => (center.map(|_, c| c - radius), center.map(|_, c| c + radius)),
        }
    }
}

/// Bounds, obstacles and clearance: the ground truth for collision queries.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    lo: State,
    hi: State,
    obstacles: Vec<Obstacle>,
    clearance: f64,
    resolution: f64,
}

impl World {
    pub fn new(lo: State, hi: State, obstacles: Vec<Obstacle>, clearance: f64) -> Result<Self> {
        let dim = lo.dim();
        if hi.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: hi.dim(),
            });
        }
        if (0..dim).any(|i| lo.get(i) >= hi.get(i)) {
            return Err(contract("world bounds must satisfy lo < hi on every axis"));
        }
        if !(clearance.is_finite() && clearance >= 0.0) {
            return Err(contract(format!("clearance must be >= 0, got {clearance}")));
        }
        for ob in &obstacles {
            if ob.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: ob.dim(),
                });
            }
            ob.validate()?;
            let (olo, ohi) = ob.aabb();
            let disjoint = (0..dim).any(|i| ohi.get(i) <= lo.get(i) || olo.get(i) >= hi.get(i));
            if disjoint {
                return Err(contract(format!("obstacle {ob:?} does not intersect the bounds")));
            }
        }
        Ok(Self {
            lo,
            hi,
            obstacles,
            clearance,
            resolution: default_resolution(dim),
        })
    }

    /// Obstacle-free world.
    pub fn empty(lo: State, hi: State) -> Result<Self> {
        Self::new(lo, hi, Vec::new(), 0.0)
    }

    /// Overrides the segment collision-check spacing.
    pub fn with_resolution(mut self, resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(contract("collision resolution must be positive"));
        }
        self.resolution = resolution;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &State {
        &self.lo
    }

    pub fn hi(&self) -> &State {
        &self.hi
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Copy of this world with a different clearance.
    pub fn with_clearance(&self, clearance: f64) -> Result<Self> {
        let mut w = Self::new(self.lo, self.hi, self.obstacles.clone(), clearance)?;
        w.resolution = self.resolution;
        Ok(w)
    }

    /// Lebesgue measure of the bounding box.
    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|i| self.hi.get(i) - self.lo.get(i)).product()
    }

    #[inline]
    pub fn in_bounds(&self, x: &State) -> bool {
        (0..self.dim()).all(|i| self.lo.get(i) <= x.get(i) && x.get(i) <= self.hi.get(i))
    }

    /// Free-space membership under the world's clearance.
    ///
    /// Panics on a dimension mismatch; see [`World::try_is_free`].
    #[inline]
    pub fn is_free(&self, x: &State) -> bool {
        assert_eq!(
            x.dim(),
            self.dim(),
            "contract violation: state dimension differs from world dimension"
        );
        self.in_bounds(x) && !self.obstacles.iter().any(|o| o.blocks(x, self.clearance))
    }

    pub fn try_is_free(&self, x: &State) -> Result<bool> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.is_free(x))
    }

    /// Checks the segment `[a, b]` at the world's resolution.
    pub fn collision_free_segment(&self, a: &State, b: &State) -> bool {
        self.collision_free_segment_with(a, b, self.resolution)
    }

    /// Checks both endpoints and evenly spaced points no farther apart than
    /// `delta` along `[a, b]`. The result does not depend on argument order.
    pub fn collision_free_segment_with(&self, a: &State, b: &State, delta: f64) -> bool {
        assert!(delta > 0.0, "contract violation: collision resolution must be positive");
        // canonical order makes the sampled point set identical for (a,b) and (b,a)
        let (a, b) = if lexicographic_le(a, b) { (a, b) } else { (b, a) };
        let len = a.distance(b);
        let steps = ((len / delta).ceil() as usize).max(1);
        (0..=steps).all(|k| {
            let p = if k == steps {
                *b
            } else {
                a.lerp(b, k as f64 / steps as f64)
            };
            self.is_free(&p)
        })
    }

    /// Uniform sample from free space by rejection inside the bounds.
    pub fn sample_free(&self, rng: &mut RngHandle) -> Result<State> {
        for _ in 0..FREE_SAMPLE_BUDGET {
            let x = sample_box_unchecked(&self.lo, &self.hi, rng);
            if self.is_free(&x) {
                return Ok(x);
            }
        }
        Err(Error::InfeasibleSpace(FREE_SAMPLE_BUDGET))
    }

    /// Uniform sample from the bounds (free or not).
    pub fn sample_bounds(&self, rng: &mut RngHandle) -> State {
        sample_box_unchecked(&self.lo, &self.hi, rng)
    }
}

fn lexicographic_le(a: &State, b: &State) -> bool {
    for i in 0..a.dim() {
        match a.get(i).total_cmp(&b.get(i)) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

/// A world together with start and goal states.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub world: World,
    pub start: State,
    pub goal: State,
}

impl ProblemInstance {
    pub fn new(world: World, start: State, goal: State) -> Result<Self> {
        for (name, s) in [("start", &start), ("goal", &goal)] {
            if !world.try_is_free(s)? {
                return Err(contract(format!("{name} {s:?} is not in free space")));
            }
        }
        Ok(Self { world, start, goal })
    }

    pub fn dim(&self) -> usize {
        self.world.dim()
    }

    /// Straight-line start-goal distance.
    pub fn c_min(&self) -> f64 {
        self.start.distance(&self.goal)
    }

    pub fn to_doc(&self) -> WorldDoc {
        WorldDoc {
            version: WORLD_DOC_VERSION,
            dimension: self.dim(),
            bounds: BoundsDoc {
                lo: self.world.lo,
                hi: self.world.hi,
            },
            clearance: self.world.clearance,
            obstacles: self.world.obstacles.clone(),
            start: self.start,
            goal: self.goal,
        }
    }

    pub fn from_doc(doc: WorldDoc) -> Result<Self> {
        if doc.version != WORLD_DOC_VERSION {
            return Err(contract(format!("unsupported world document version {}", doc.version)));
        }
        for s in [&doc.bounds.lo, &doc.bounds.hi, &doc.start, &doc.goal] {
            if s.dim() != doc.dimension {
                return Err(Error::DimensionMismatch {
                    expected: doc.dimension,
                    got: s.dim(),
                });
            }
        }
        let world = World::new(doc.bounds.lo, doc.bounds.hi, doc.obstacles, doc.clearance)?;
        Self::new(world, doc.start, doc.goal)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("world document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// On-disk world document (version 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldDoc {
    pub version: u32,
    pub dimension: usize,
    pub bounds: BoundsDoc,
    pub clearance: f64,
    pub obstacles: Vec<Obstacle>,
    pub start: State,
    pub goal: State,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsDoc {
    pub lo: State,
    pub hi: State,
}
