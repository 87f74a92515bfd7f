//! Grid A* with clearance.
//!
//! This is the label generator for guidance training data, the feasibility
//! check used by the problem generators, and the reference "oracle" guidance
//! provider. Obstacles are rasterized by cell center, then dilated by
//! `round(clearance * resolution)` cells: a Chebyshev square in 2D and a
//! Euclidean ball in 3D.
//!
//! Path costs are kept as integer counts of axis, face-diagonal and
//! cube-diagonal steps. The float cost is a fixed function of those counts, so
//! two searches that find optimal paths report bit-identical costs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RngHandle, State};
use crate::guidance::{point_cloud_sampling, GuidanceProvider, GuidanceQuery};
use crate::world::{ProblemInstance, World, WorldDoc};

/// Integer cell coordinates; unused axes are zero.
pub type Cell = [usize; 3];

/// Boolean occupancy after clearance dilation.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    dim: usize,
    dims: [usize; 3],
    resolution: f64,
    origin: [f64; 3],
    dilation: usize,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// Grid with every cell free.
    pub fn free(dim: usize, dims: [usize; 3], resolution: f64, origin: [f64; 3]) -> Self {
        let mut d = dims;
        for v in d.iter_mut().skip(dim) {
            *v = 1;
        }
        Self {
            dim,
            dims: d,
            resolution,
            origin,
            dilation: 0,
            occupied: vec![false; d.iter().product()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Dilation radius in cells.
    pub fn dilation(&self) -> usize {
        self.dilation
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    #[inline]
    pub fn flat(&self, c: &Cell) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    #[inline]
    pub fn unflat(&self, f: usize) -> Cell {
        let x = f % self.dims[0];
        let y = (f / self.dims[0]) % self.dims[1];
        let z = f / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    pub fn contains_cell(&self, c: &Cell) -> bool {
        (0..3).all(|i| c[i] < self.dims[i])
    }

    #[inline]
    pub fn is_occupied(&self, c: &Cell) -> bool {
        self.occupied[self.flat(c)]
    }

    pub fn set_occupied(&mut self, c: &Cell, occupied: bool) {
        let f = self.flat(c);
        self.occupied[f] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Cell containing `x`, if inside the grid.
    pub fn cell_of(&self, x: &State) -> Option<Cell> {
        let mut c = [0usize; 3];
        for (i, ci) in c.iter_mut().enumerate().take(self.dim) {
            let v = (x.get(i) - self.origin[i]) * self.resolution;
            if !(0.0..=self.dims[i] as f64).contains(&v) {
                return None;
            }
            // the upper bound face belongs to the last cell
            *ci = (v.floor() as usize).min(self.dims[i] - 1);
        }
        Some(c)
    }

    /// World-frame center of a cell.
    pub fn center(&self, c: &Cell) -> State {
        let mut p = [0.0; 3];
        for (i, pi) in p.iter_mut().enumerate().take(self.dim) {
            *pi = self.origin[i] + (c[i] as f64 + 0.5) / self.resolution;
        }
        State::from_padded(p, self.dim)
    }

    fn dilate(&mut self, radius: usize) {
        self.dilation = radius;
        if radius == 0 {
            return;
        }
        if self.dim == 2 {
            // Chebyshev square: separable max filter along x then y.
            for axis in 0..2 {
                let src = self.occupied.clone();
                for f in (0..src.len()).filter(|&f| src[f]) {
                    let c = self.unflat(f);
                    let lo = c[axis].saturating_sub(radius);
                    let hi = (c[axis] + radius).min(self.dims[axis] - 1);
                    for v in lo..=hi {
                        let mut n = c;
                        n[axis] = v;
                        let nf = self.flat(&n);
                        self.occupied[nf] = true;
                    }
                }
            }
        } else {
            let r = radius as isize;
            let mut offsets = Vec::new();
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx * dx + dy * dy + dz * dz <= r * r {
                            offsets.push([dx, dy, dz]);
                        }
                    }
                }
            }
            let src = self.occupied.clone();
            for (f, _) in src.iter().enumerate().filter(|(_, &o)| o) {
                let c = self.unflat(f);
                for o in &offsets {
                    let n = [c[0] as isize + o[0], c[1] as isize + o[1], c[2] as isize + o[2]];
                    if (0..3).all(|i| n[i] >= 0 && (n[i] as usize) < self.dims[i]) {
                        let nf = self.flat(&[n[0] as usize, n[1] as usize, n[2] as usize]);
                        self.occupied[nf] = true;
                    }
                }
            }
        }
    }
}

/// Rasterizes at one cell per world unit.
pub fn rasterize(world: &World) -> OccupancyGrid {
    rasterize_with(world, 1.0)
}

/// Rasterizes at `resolution` cells per world unit: a cell is occupied when
/// its center lies strictly inside an obstacle, then occupancy is dilated by
/// the world's clearance.
pub fn rasterize_with(world: &World, resolution: f64) -> OccupancyGrid {
    assert!(resolution > 0.0, "grid resolution must be positive");
    let dim = world.dim();
    let mut dims = [1usize; 3];
    for (i, d) in dims.iter_mut().enumerate().take(dim) {
        *d = (((world.hi().get(i) - world.lo().get(i)) * resolution).round() as usize).max(1);
    }
    let mut grid = OccupancyGrid::free(dim, dims, resolution, world.lo().padded());
    for ob in world.obstacles() {
        let (lo, hi) = ob.aabb();
        let mut lo_c = [0usize; 3];
        let mut hi_c = [0usize; 3];
        for i in 0..dim {
            let a = ((lo.get(i) - grid.origin[i]) * resolution - 0.5).floor().max(0.0) as usize;
            let b = ((hi.get(i) - grid.origin[i]) * resolution - 0.5).ceil().max(0.0) as usize;
            lo_c[i] = a.min(dims[i] - 1);
            hi_c[i] = b.min(dims[i] - 1);
        }
        for z in lo_c[2]..=hi_c[2] {
            for y in lo_c[1]..=hi_c[1] {
                for x in lo_c[0]..=hi_c[0] {
                    let c = [x, y, z];
                    if ob.contains_interior(&grid.center(&c)) {
                        grid.set_occupied(&c, true);
                    }
                }
            }
        }
    }
    let radius = (world.clearance() * resolution).round() as usize;
    grid.dilate(radius);
    grid
}

/// Optimal grid path between two cells.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    /// World-unit length.
    pub cost: f64,
    /// Counts of axis, face-diagonal and cube-diagonal steps.
    pub steps: [u32; 3],
}

impl GridPath {
    pub fn centers(&self, grid: &OccupancyGrid) -> Vec<State> {
        self.cells.iter().map(|c| grid.center(c)).collect()
    }
}

/// World-unit cost of a step-count triple.
#[inline]
pub fn step_cost(steps: [u32; 3], resolution: f64) -> f64 {
    (steps[0] as f64 + steps[1] as f64 * std::f64::consts::SQRT_2 + steps[2] as f64 * 3f64.sqrt()) / resolution
}

/// Neighbour offsets with their step class (number of changed axes - 1).
pub fn neighbour_offsets(dim: usize) -> Vec<([isize; 3], usize)> {
    let zr: &[isize] = if dim == 3 { &[-1, 0, 1] } else { &[0] };
    let mut out = Vec::new();
    for &dz in zr {
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let moved = [dx, dy, dz].iter().filter(|&&v| v != 0).count();
                if moved > 0 {
                    out.push(([dx, dy, dz], moved - 1));
                }
            }
        }
    }
    out
}

#[derive(PartialEq)]
struct Frontier {
    f: f64,
    h: f64,
    cell: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap pops the smallest (f, h, cell)
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* between the cells containing `start` and `goal`.
pub fn astar(grid: &OccupancyGrid, start: &State, goal: &State) -> Result<Option<GridPath>> {
    let to_cell = |s: &State| {
        grid.cell_of(s)
            .ok_or_else(|| Error::OccupiedEndpoint(s.coords().iter().map(|v| *v as i64).collect()))
    };
    astar_cells(grid, to_cell(start)?, to_cell(goal)?)
}

/// 8-connected (2D) or 26-connected (3D) A* with Euclidean step costs and a
/// Euclidean heuristic. Ties pop lower heuristic first, then lower cell index.
pub fn astar_cells(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<Option<GridPath>> {
    for c in [&start, &goal] {
        if !grid.contains_cell(c) || grid.is_occupied(c) {
            return Err(Error::OccupiedEndpoint(c.iter().map(|&v| v as i64).collect()));
        }
    }
    let res = grid.resolution;
    let heuristic = |c: &Cell| {
        let mut acc = 0.0;
        for i in 0..3 {
            let d = c[i] as f64 - goal[i] as f64;
            acc += d * d;
        }
        acc.sqrt() / res
    };
    let n = grid.len();
    let mut g_steps: Vec<[u32; 3]> = vec![[0; 3]; n];
    let mut g_cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let offsets = neighbour_offsets(grid.dim);

    let s = grid.flat(&start);
    let gf = grid.flat(&goal);
    g_cost[s] = 0.0;
    let mut heap = BinaryHeap::new();
    let h0 = heuristic(&start);
    heap.push(Frontier { f: h0, h: h0, cell: s });

    while let Some(Frontier { cell, .. }) = heap.pop() {
        if closed[cell] {
            continue;
        }
        closed[cell] = true;
        if cell == gf {
            let mut cells = vec![goal];
            let mut cur = cell;
            while cur != s {
                cur = parent[cur];
                cells.push(grid.unflat(cur));
            }
            cells.reverse();
            return Ok(Some(GridPath {
                cells,
                cost: g_cost[cell],
                steps: g_steps[cell],
            }));
        }
        let c = grid.unflat(cell);
        for (o, class) in &offsets {
            let nb = [c[0] as isize + o[0], c[1] as isize + o[1], c[2] as isize + o[2]];
            if (0..3).any(|i| nb[i] < 0 || nb[i] as usize >= grid.dims[i]) {
                continue;
            }
            let nc = [nb[0] as usize, nb[1] as usize, nb[2] as usize];
            let nf = grid.flat(&nc);
            if grid.occupied[nf] || closed[nf] {
                continue;
            }
            let mut steps = g_steps[cell];
            steps[*class] += 1;
            let cost = step_cost(steps, res);
            if cost < g_cost[nf] {
                g_cost[nf] = cost;
                g_steps[nf] = steps;
                parent[nf] = cell;
                let h = heuristic(&nc);
                heap.push(Frontier {
                    f: cost + h,
                    h,
                    cell: nf,
                });
            }
        }
    }
    Ok(None)
}

/// Marks points within `eta` of any path cell center.
pub fn label_guidance(grid: &OccupancyGrid, path: &[Cell], points: &[State], eta: f64) -> Vec<bool> {
    let centers: Vec<State> = path.iter().map(|c| grid.center(c)).collect();
    points
        .iter()
        .map(|p| centers.iter().any(|c| c.distance(p) <= eta))
        .collect()
}

/// Guidance from grid A* labels: probability 1 for points within `eta` of the
/// optimal grid path between the query endpoints, 0 elsewhere. Occupied or
/// disconnected endpoints yield all zeros.
type PathCache = HashMap<(Cell, Cell), Option<Vec<Cell>>>;

#[derive(Debug)]
pub struct OracleProvider {
    grid: OccupancyGrid,
    eta: f64,
    paths: Mutex<PathCache>,
}

impl OracleProvider {
    pub fn new(world: &World, eta: f64) -> Self {
        Self::from_grid(rasterize(world), eta)
    }

    pub fn from_grid(grid: OccupancyGrid, eta: f64) -> Self {
        Self {
            grid,
            eta,
            paths: Mutex::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    fn path_between(&self, start: &State, goal: &State) -> Option<Vec<Cell>> {
        let s = self.grid.cell_of(start)?;
        let g = self.grid.cell_of(goal)?;
        if let Some(hit) = self.paths.lock().expect("oracle cache poisoned").get(&(s, g)) {
            return hit.clone();
        }
        let path = astar_cells(&self.grid, s, g).ok().flatten().map(|p| p.cells);
        self.paths
            .lock()
            .expect("oracle cache poisoned")
            .insert((s, g), path.clone());
        path
    }

    /// Probabilities for `points` given explicit endpoints.
    pub fn probabilities(&self, start: &State, goal: &State, points: &[State]) -> Vec<f64> {
        match self.path_between(start, goal) {
            Some(cells) => label_guidance(&self.grid, &cells, points, self.eta)
                .into_iter()
                .map(|b| if b { 1.0 } else { 0.0 })
                .collect(),
            None => vec![0.0; points.len()],
        }
    }
}

impl GuidanceProvider for OracleProvider {
    fn infer(&self, query: &GuidanceQuery<'_>) -> Result<Vec<f64>> {
        Ok(self.probabilities(query.start, query.goal, query.cloud.points()))
    }
}

/// Convenience constructor matching the problem-level oracle contract.
pub fn oracle_guidance_provider(problem: &ProblemInstance, eta: f64) -> OracleProvider {
    OracleProvider::new(&problem.world, eta)
}

/// One line of guidance training data.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrainingRecord {
    pub world: WorldDoc,
    pub points: Vec<State>,
    pub labels: Vec<u8>,
    pub path: Vec<State>,
}

/// Builds a labelled free-space cloud for a problem: `n` evenly spread free
/// points, the A* path between start and goal, and `eta` capsule labels.
pub fn training_record(
    problem: &ProblemInstance,
    n: usize,
    eta: f64,
    rng: &mut RngHandle,
) -> Result<Option<TrainingRecord>> {
    let grid = rasterize(&problem.world);
    let Some(path) = astar(&grid, &problem.start, &problem.goal).ok().flatten() else {
        return Ok(None);
    };
    let cloud = point_cloud_sampling(&problem.world, None, n, rng)?;
    let labels = label_guidance(&grid, &path.cells, cloud.points(), eta)
        .into_iter()
        .map(u8::from)
        .collect();
    Ok(Some(TrainingRecord {
        world: problem.to_doc(),
        points: cloud.points().to_vec(),
        labels,
        path: path.centers(&grid),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Obstacle;

    fn empty_grid(nx: usize, ny: usize) -> OccupancyGrid {
        OccupancyGrid::free(2, [nx, ny, 1], 1.0, [0.0; 3])
    }

    #[test]
    fn empty_world_rasterizes_free() {
        let w = World::empty(State::xy(0.0, 0.0), State::xy(30.0, 20.0)).unwrap();
        let g = rasterize(&w);
        assert_eq!(g.dims(), [30, 20, 1]);
        assert_eq!(g.occupied_count(), 0);
    }

    #[test]
    fn box_with_clearance_three_occupies_16_by_16() {
        let w = World::new(
            State::xy(0.0, 0.0),
            State::xy(40.0, 40.0),
            vec![Obstacle::rect(State::xy(10.0, 10.0), State::xy(20.0, 20.0))],
            3.0,
        )
        .unwrap();
        let g = rasterize(&w);
        assert_eq!(g.dilation(), 3);
        assert_eq!(g.occupied_count(), 16 * 16);
        assert!(g.is_occupied(&[7, 7, 0]) && g.is_occupied(&[22, 22, 0]));
        assert!(!g.is_occupied(&[6, 10, 0]) && !g.is_occupied(&[23, 10, 0]));
    }

    #[test]
    fn three_d_clearance_two_dilates_by_ball() {
        let w = World::new(
            State::xyz(0.0, 0.0, 0.0),
            State::xyz(20.0, 20.0, 20.0),
            vec![Obstacle::rect(State::xyz(9.0, 9.0, 9.0), State::xyz(10.0, 10.0, 10.0))],
            2.0,
        )
        .unwrap();
        let g = rasterize(&w);
        assert_eq!(g.dilation(), 2);
        // lattice points with |o|^2 <= 4 around a single voxel: 33
        assert_eq!(g.occupied_count(), 33);
        assert!(g.is_occupied(&[11, 9, 9]) && !g.is_occupied(&[11, 10, 9]));
    }

    #[test]
    fn start_equals_goal() {
        let g = empty_grid(5, 5);
        let p = astar_cells(&g, [2, 2, 0], [2, 2, 0]).unwrap().unwrap();
        assert_eq!(p.cells.len(), 1);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn diagonal_chain_cost() {
        let g = empty_grid(10, 10);
        let p = astar_cells(&g, [0, 0, 0], [9, 9, 0]).unwrap().unwrap();
        assert_eq!(p.cost, 9.0 * std::f64::consts::SQRT_2);
        assert_eq!(p.steps, [0, 9, 0]);
        assert_eq!(p.cells.len(), 10);
    }

    #[test]
    fn occupied_endpoint_is_an_error() {
        let mut g = empty_grid(5, 5);
        g.set_occupied(&[0, 0, 0], true);
        assert!(matches!(
            astar_cells(&g, [0, 0, 0], [4, 4, 0]),
            Err(Error::OccupiedEndpoint(_))
        ));
        assert!(astar_cells(&g, [1, 1, 0], [9, 9, 0]).is_err());
    }

    #[test]
    fn disconnected_grid_has_no_path() {
        let mut g = empty_grid(10, 10);
        for y in 0..10 {
            g.set_occupied(&[5, y, 0], true);
        }
        assert_eq!(astar_cells(&g, [0, 0, 0], [9, 9, 0]).unwrap(), None);
    }

    #[test]
    fn path_is_connected_and_free() {
        let mut g = empty_grid(20, 20);
        for y in 0..15 {
            g.set_occupied(&[10, y, 0], true);
        }
        let p = astar_cells(&g, [2, 2, 0], [18, 2, 0]).unwrap().unwrap();
        for w in p.cells.windows(2) {
            let cheb = (0..3).map(|i| w[0][i].abs_diff(w[1][i])).max().unwrap();
            assert_eq!(cheb, 1);
            assert!(!g.is_occupied(&w[1]));
        }
        let recomputed: f64 = p
            .cells
            .windows(2)
            .map(|w| g.center(&w[0]).distance(&g.center(&w[1])))
            .sum();
        assert!((recomputed - p.cost).abs() < 1e-9);
    }

    #[test]
    fn labels_respect_radius() {
        let g = empty_grid(50, 50);
        let path = vec![[10, 10, 0], [11, 10, 0], [12, 10, 0]];
        let on_path = State::xy(11.5, 10.5);
        let eps = 1e-6;
        let just_out = State::xy(12.5 + 10.0 + eps, 10.5);
        let labels = label_guidance(&g, &path, &[on_path, just_out], 10.0);
        assert_eq!(labels, vec![true, false]);
    }

    #[test]
    fn labels_are_monotone_in_eta() {
        use rand::Rng;
        let g = empty_grid(50, 50);
        let path: Vec<Cell> = (5..40).map(|x| [x, 25, 0]).collect();
        let mut rng = RngHandle::new(1);
        let pts: Vec<State> = (0..500)
            .map(|_| State::xy(rng.random::<f64>() * 50.0, rng.random::<f64>() * 50.0))
            .collect();
        let mut prev = vec![false; pts.len()];
        for eta in [0.0, 1.0, 3.0, 7.5, 10.0, 20.0] {
            let l = label_guidance(&g, &path, &pts, eta);
            for (a, b) in prev.iter().zip(&l) {
                assert!(!a || *b);
            }
            prev = l;
        }
    }

    #[test]
    fn cell_lookup_includes_upper_face() {
        let g = empty_grid(10, 10);
        assert_eq!(g.cell_of(&State::xy(10.0, 10.0)), Some([9, 9, 0]));
        assert_eq!(g.cell_of(&State::xy(0.0, 0.0)), Some([0, 0, 0]));
        assert_eq!(g.cell_of(&State::xy(-0.1, 0.0)), None);
        assert_eq!(g.cell_of(&State::xy(10.5, 0.0)), None);
    }
}
