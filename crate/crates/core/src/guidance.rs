//! Point-cloud guidance: cloud construction (optionally inside the informed
//! set), per-point start/goal flags, normalization, provider inference, and
//! iterative re-inference from advanced endpoints until the guidance set links
//! start to goal.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RngHandle, State};
use crate::informed::{informed_or_uniform, InformedSet};
use crate::spatial::BucketIndex;
use crate::world::{ProblemInstance, World};

pub const DEFAULT_CLOUD_SIZE: usize = 2048;
pub const CLOUD_OVERSAMPLE: usize = 4;
pub const DEFAULT_GUIDE_ROUNDS: usize = 5;

/// Free-space states the provider labels, in the world frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<State>,
}

impl PointCloud {
    pub fn new(points: Vec<State>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[State] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `(near_start, near_goal)` per point; both may be set.
pub fn add_one_hot_features(cloud: &PointCloud, start: &State, goal: &State, eta: f64) -> Vec<[u8; 2]> {
    cloud
        .points
        .iter()
        .map(|p| [u8::from(p.distance(start) <= eta), u8::from(p.distance(goal) <= eta)])
        .collect()
}

/// Centroid offset and isotropic scale of the network frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: [f64; 3],
    pub scale: f64,
}

impl Normalization {
    pub fn apply(&self, x: &State) -> [f64; 3] {
        let p = x.padded();
        [
            (p[0] - self.offset[0]) / self.scale,
            (p[1] - self.offset[1]) / self.scale,
            (p[2] - self.offset[2]) / self.scale,
        ]
    }

    pub fn invert(&self, q: &[f64; 3], dim: usize) -> State {
        let mut p = [0.0; 3];
        for i in 0..dim {
            p[i] = q[i] * self.scale + self.offset[i];
        }
        State::from_padded(p, dim)
    }
}

/// Network-frame coordinates: centered on the centroid and scaled into
/// `[-1, 1]`, always three components (z = 0 for planar clouds).
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedCloud {
    pub points: Vec<[f64; 3]>,
    pub features: Vec<[u8; 2]>,
    pub normalization: Normalization,
}

/// Centers the cloud and divides by the largest absolute coordinate. A cloud
/// of identical points keeps scale 1.
pub fn normalize_coordinates(cloud: &PointCloud) -> Result<Normalization> {
    if cloud.is_empty() {
        return Err(crate::error::contract("cannot normalize an empty cloud"));
    }
    let n = cloud.len() as f64;
    let mut offset = [0.0; 3];
    for p in &cloud.points {
        let c = p.padded();
        for i in 0..3 {
            offset[i] += c[i];
        }
    }
    for o in offset.iter_mut() {
        *o /= n;
    }
    let mut scale = 0.0f64;
    for p in &cloud.points {
        let c = p.padded();
        for i in 0..3 {
            scale = scale.max((c[i] - offset[i]).abs());
        }
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    Ok(Normalization { offset, scale })
}

impl NormalizedCloud {
    pub fn new(cloud: &PointCloud, start: &State, goal: &State, eta: f64) -> Result<Self> {
        let normalization = normalize_coordinates(cloud)?;
        Ok(Self {
            points: cloud.points.iter().map(|p| normalization.apply(p)).collect(),
            features: add_one_hot_features(cloud, start, goal, eta),
            normalization,
        })
    }
}

/// Everything a provider may look at for one inference.
#[derive(Clone, Copy, Debug)]
pub struct GuidanceQuery<'a> {
    pub cloud: &'a PointCloud,
    pub normalized: &'a NormalizedCloud,
    /// Endpoints of this round (advanced endpoints under Neural Connect).
    pub start: &'a State,
    pub goal: &'a State,
}

/// Maps a featured, normalized cloud to one probability per point.
pub trait GuidanceProvider: Send + Sync {
    fn infer(&self, query: &GuidanceQuery<'_>) -> Result<Vec<f64>>;
}

impl<F> GuidanceProvider for F
where
    F: Fn(&GuidanceQuery<'_>) -> Result<Vec<f64>> + Send + Sync,
{
    fn infer(&self, query: &GuidanceQuery<'_>) -> Result<Vec<f64>> {
        self(query)
    }
}

/// Provider that labels nothing.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullProvider;

impl GuidanceProvider for NullProvider {
    fn infer(&self, query: &GuidanceQuery<'_>) -> Result<Vec<f64>> {
        Ok(vec![0.0; query.cloud.len()])
    }
}

/// Guidance states: cloud points whose probability exceeds 0.5.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GuidanceSet {
    /// Cloud index of each member, ascending.
    pub indices: Vec<usize>,
    pub states: Vec<State>,
    pub probabilities: Vec<f64>,
}

impl GuidanceSet {
    pub fn from_probabilities(cloud: &PointCloud, probabilities: &[f64]) -> Self {
        let mut set = Self::default();
        for (i, (&p, s)) in probabilities.iter().zip(&cloud.points).enumerate() {
            if p > 0.5 {
                set.indices.push(i);
                set.states.push(*s);
                set.probabilities.push(p);
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Adds members of `other` that are not already present.
    pub fn union_with(&mut self, other: &GuidanceSet) {
        for (k, &i) in other.indices.iter().enumerate() {
            if let Err(pos) = self.indices.binary_search(&i) {
                self.indices.insert(pos, i);
                self.states.insert(pos, other.states[k]);
                self.probabilities.insert(pos, other.probabilities[k]);
            }
        }
    }
}

/// Calls the provider and thresholds its answer. Any failure, wrong length or
/// out-of-range probability is reported as guidance-unavailable.
pub fn infer_guidance(
    cloud: &PointCloud,
    normalized: &NormalizedCloud,
    start: &State,
    goal: &State,
    provider: &dyn GuidanceProvider,
) -> Result<GuidanceSet> {
    let query = GuidanceQuery {
        cloud,
        normalized,
        start,
        goal,
    };
    let probs = provider.infer(&query).map_err(|e| match e {
        Error::GuidanceUnavailable(m) => Error::GuidanceUnavailable(m),
        other => Error::GuidanceUnavailable(other.to_string()),
    })?;
    if probs.len() != cloud.len() {
        return Err(Error::GuidanceUnavailable(format!(
            "provider returned {} probabilities for {} points",
            probs.len(),
            cloud.len()
        )));
    }
    if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::GuidanceUnavailable(format!("probability {bad} outside [0, 1]")));
    }
    Ok(GuidanceSet::from_probabilities(cloud, &probs))
}

/// Greedy farthest-point selection of `n` indices, seeded with index 0. Ties
/// go to the lowest index.
pub fn farthest_point_indices(points: &[State], n: usize) -> Vec<usize> {
    let n = n.min(points.len());
    if n == 0 {
        return Vec::new();
    }
    let mut chosen = Vec::with_capacity(n);
    let mut gap = vec![f64::INFINITY; points.len()];
    let mut next = 0;
    for _ in 0..n {
        chosen.push(next);
        let p = points[next];
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, g) in gap.iter_mut().enumerate() {
            let d = points[i].distance(&p);
            if d < *g {
                *g = d;
            }
            if *g > best.0 {
                best = (*g, i);
            }
        }
        next = best.1;
    }
    chosen
}

/// `n` evenly spread free states: `4n` candidates drawn uniformly from free
/// space (or from the informed set intersected with free space), thinned by
/// farthest-point selection.
pub fn point_cloud_sampling(
    world: &World,
    focus: Option<&InformedSet>,
    n: usize,
    rng: &mut RngHandle,
) -> Result<PointCloud> {
    let wanted = CLOUD_OVERSAMPLE * n;
    let mut candidates = Vec::with_capacity(wanted);
    for _ in 0..wanted {
        match informed_or_uniform(focus, world, rng) {
            Ok(x) => candidates.push(x),
            Err(Error::InfeasibleSpace(_) | Error::InfeasibleFocus(_)) => break,
            Err(e) => return Err(e),
        }
    }
    if candidates.len() < n {
        return Err(Error::DegenerateDomain {
            got: candidates.len(),
            wanted: n,
        });
    }
    let idx = farthest_point_indices(&candidates, n);
    Ok(PointCloud::new(idx.into_iter().map(|i| candidates[i]).collect()))
}

/// Outcome of a radius-graph breadth-first search.
#[derive(Clone, Debug, PartialEq)]
pub struct BfsResult {
    pub connected: bool,
    /// Reached states in visiting order, starting with `start`.
    pub visited: Vec<State>,
}

/// Breadth-first search over `{start} ∪ guide ∪ {goal}` with edges between
/// states at most `eta` apart. No collision checks.
pub fn bfs_connectivity(guide: &[State], start: &State, goal: &State, eta: f64) -> BfsResult {
    let mut nodes = Vec::with_capacity(guide.len() + 2);
    nodes.push(*start);
    nodes.extend_from_slice(guide);
    nodes.push(*goal);
    let goal_idx = nodes.len() - 1;

    let index = bucket_over(&nodes, eta);
    let mut seen = vec![false; nodes.len()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for v in index.within(&nodes, &nodes[u], eta) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    BfsResult {
        connected: seen[goal_idx],
        visited: order.into_iter().map(|i| nodes[i]).collect(),
    }
}

fn bucket_over(points: &[State], cell: f64) -> BucketIndex {
    let dim = points[0].dim();
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.map(|i, c| c.min(p.get(i)));
        hi = hi.map(|i, c| c.max(p.get(i)));
    }
    let hi = hi.map(|i, c| if c > lo.get(i) { c } else { lo.get(i) + 1.0 });
    let mut idx = BucketIndex::new(&lo, &hi, cell.max(1e-9));
    for (i, p) in points.iter().enumerate() {
        idx.insert(i, p);
    }
    debug_assert_eq!(lo.dim(), dim);
    idx
}

/// `d(b, from) / (d(b, from) + d(b, to))`: 0 at the near anchor, 1 at the far one.
pub fn boundary_score(b: &State, anchor_from: &State, anchor_to: &State) -> f64 {
    let a = b.distance(anchor_from);
    let t = b.distance(anchor_to);
    if a + t == 0.0 {
        0.0
    } else {
        a / (a + t)
    }
}

/// A selected Neural Connect endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub state: State,
    pub score: f64,
}

/// Among visited states with an unlabelled cloud point within `eta / 2`,
/// the one with the highest [`boundary_score`]; ties go to the state closer
/// to `anchor_to`.
pub fn boundary_next_endpoint(
    visited: &[State],
    cloud: &PointCloud,
    guide: &GuidanceSet,
    anchor_from: &State,
    anchor_to: &State,
    eta: f64,
) -> Option<Endpoint> {
    let outside: Vec<State> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(i, _)| !guide.contains_index(*i))
        .map(|(_, p)| *p)
        .collect();
    if outside.is_empty() || visited.is_empty() {
        return None;
    }
    let half = eta / 2.0;
    let index = bucket_over(&outside, half);
    let mut best: Option<(f64, f64, State)> = None;
    for b in visited {
        if index.within(&outside, b, half).is_empty() {
            continue;
        }
        let score = boundary_score(b, anchor_from, anchor_to);
        let to = b.distance(anchor_to);
        let better = match best {
            None => true,
            Some((bs, bt, _)) => score > bs || (score == bs && to < bt),
        };
        if better {
            best = Some((score, to, *b));
        }
    }
    best.map(|(score, _, state)| Endpoint { state, score })
}

/// Guide construction settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuideConfig {
    pub n_points: usize,
    /// Feature radius, BFS radius and boundary radius scale.
    pub eta: f64,
    /// Maximum inference rounds with Neural Connect.
    pub n_guide: usize,
    /// Build the cloud inside the informed set once a solution exists.
    pub focus: bool,
    /// Re-infer from advanced endpoints until connected.
    pub connect: bool,
}

impl GuideConfig {
    pub fn new(eta: f64) -> Self {
        Self {
            n_points: DEFAULT_CLOUD_SIZE,
            eta,
            n_guide: DEFAULT_GUIDE_ROUNDS,
            focus: true,
            connect: true,
        }
    }
}

/// Diagnostics for one inference round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub start: State,
    pub goal: State,
    /// Members added to the accumulated set this round.
    pub added: usize,
    pub connected: bool,
    pub forward: Option<Endpoint>,
    pub backward: Option<Endpoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuideOutcome {
    pub guide: GuidanceSet,
    pub cloud: PointCloud,
    pub connected: bool,
    pub rounds: Vec<RoundTrace>,
}

/// Builds a cloud (inside the informed set for `c_curr` when focus is on and
/// `c_curr` is finite), then runs inference rounds. Each round unions the new
/// guidance into the accumulated set and checks start-goal connectivity; if
/// disconnected, the next round starts from the forward boundary endpoint and
/// ends at the backward boundary endpoint.
pub fn pointnet_guide(
    problem: &ProblemInstance,
    c_curr: f64,
    provider: &dyn GuidanceProvider,
    cfg: &GuideConfig,
    rng: &mut RngHandle,
) -> Result<GuideOutcome> {
    let (start, goal) = (problem.start, problem.goal);
    let focus = if cfg.focus && c_curr.is_finite() {
        Some(InformedSet::new(start, goal, c_curr.max(problem.c_min()))?)
    } else {
        None
    };
    let cloud = point_cloud_sampling(&problem.world, focus.as_ref(), cfg.n_points, rng)?;
    let rounds = if cfg.connect { cfg.n_guide.max(1) } else { 1 };

    let mut guide = GuidanceSet::default();
    let mut trace = Vec::new();
    let (mut s_j, mut g_j) = (start, goal);
    let mut connected = false;
    for _ in 0..rounds {
        let normalized = NormalizedCloud::new(&cloud, &s_j, &g_j, cfg.eta)?;
        let found = infer_guidance(&cloud, &normalized, &s_j, &g_j, provider)?;
        let before = guide.len();
        guide.union_with(&found);
        let forward = bfs_connectivity(&guide.states, &start, &goal, cfg.eta);
        connected = forward.connected;
        let mut round = RoundTrace {
            start: s_j,
            goal: g_j,
            added: guide.len() - before,
            connected,
            forward: None,
            backward: None,
        };
        if connected || !cfg.connect {
            trace.push(round);
            break;
        }
        let backward = bfs_connectivity(&guide.states, &goal, &start, cfg.eta);
        round.forward = boundary_next_endpoint(&forward.visited, &cloud, &guide, &start, &goal, cfg.eta);
        round.backward = boundary_next_endpoint(&backward.visited, &cloud, &guide, &goal, &start, cfg.eta);
        if let Some(e) = round.forward {
            s_j = e.state;
        }
        if let Some(e) = round.backward {
            g_j = e.state;
        }
        trace.push(round);
    }
    Ok(GuideOutcome {
        guide,
        cloud,
        connected,
        rounds: trace,
    })
}
