//! Problem generators: center block, narrow passage, and random 2D/3D worlds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{RngHandle, State};
use crate::grid::{astar, rasterize};
use crate::visibility::shortest_path_cost;
use crate::world::{Obstacle, ProblemInstance, World};

/// Start-goal distance of the center-block family.
pub const CENTER_BLOCK_SG: f64 = 100.0;
pub const CENTER_BLOCK_MAP_WIDTHS: [f64; 5] = [110.0, 130.0, 150.0, 170.0, 190.0];
pub const CENTER_BLOCK_HEIGHT: (f64, f64) = (30.0, 90.0);
pub const CENTER_BLOCK_WIDTH: (f64, f64) = (20.0, 80.0);

pub const NARROW_PASSAGE_SIDE: f64 = 224.0;
pub const NARROW_PASSAGE_WALL_X: (f64, f64) = (107.0, 117.0);
pub const NARROW_PASSAGE_WALL_Y: (f64, f64) = (62.0, 162.0);
pub const NARROW_PASSAGE_MARGIN: f64 = 10.0;
pub const NARROW_PASSAGE_GAPS: [f64; 5] = [6.0, 8.0, 10.0, 12.0, 14.0];

const REGENERATION_ATTEMPTS: usize = 100;

/// Corpus families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    CenterBlock,
    NarrowPassage,
    Random2d,
    Random3d,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::CenterBlock,
        Family::NarrowPassage,
        Family::Random2d,
        Family::Random3d,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::CenterBlock => "center-block",
            Family::NarrowPassage => "narrow-passage",
            Family::Random2d => "random2d",
            Family::Random3d => "random3d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.id() == s)
    }

    /// Family encoded in a corpus problem id such as `center-block_7`.
    pub fn of_problem_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| {
            id.strip_prefix(f.id())
                .is_some_and(|rest| rest.is_empty() || rest.starts_with('_'))
        })
    }
}

/// A block of `block_width` (along the start-goal axis) by `block_height`
/// centered in a square map, with start and goal `CENTER_BLOCK_SG` apart on
/// its horizontal midline. No clearance.
pub fn center_block(map_width: f64, block_width: f64, block_height: f64) -> Result<ProblemInstance> {
    if map_width < CENTER_BLOCK_SG {
        return Err(Error::Generation(format!(
            "map width {map_width} is below the start-goal distance {CENTER_BLOCK_SG}"
        )));
    }
    if block_width >= CENTER_BLOCK_SG {
        return Err(Error::Generation(format!(
            "block width {block_width} would cover start or goal"
        )));
    }
    if block_height >= map_width {
        return Err(Error::Generation("block spans the whole map".into()));
    }
    let m = map_width / 2.0;
    let mut obstacles = Vec::new();
    if block_width > 0.0 && block_height > 0.0 {
        obstacles.push(Obstacle::rect(
            State::xy(m - block_width / 2.0, m - block_height / 2.0),
            State::xy(m + block_width / 2.0, m + block_height / 2.0),
        ));
    }
    let world = World::new(State::xy(0.0, 0.0), State::xy(map_width, map_width), obstacles, 0.0)?;
    let half = CENTER_BLOCK_SG / 2.0;
    ProblemInstance::new(world, State::xy(m - half, m), State::xy(m + half, m))
}

/// Center block of the given width with a random height.
pub fn gen_center_block(map_width: f64, block_width: f64, rng: &mut RngHandle) -> Result<ProblemInstance> {
    let h = rng.random_range(CENTER_BLOCK_HEIGHT.0..CENTER_BLOCK_HEIGHT.1);
    center_block(map_width, block_width, h)
}

/// Closed-form optimum around a center block: two tangent legs to the block
/// corners plus the top face.
pub fn center_block_optimal_cost(problem: &ProblemInstance) -> f64 {
    match problem.world.obstacles().first() {
        Some(Obstacle::Box { lo, hi }) => {
            let bw = hi.get(0) - lo.get(0);
            let bh = hi.get(1) - lo.get(1);
            let leg = CENTER_BLOCK_SG / 2.0 - bw / 2.0;
            2.0 * (leg * leg + bh * bh / 4.0).sqrt() + bw
        }
        _ => problem.c_min(),
    }
}

/// A vertical wall across the middle of the map with one opening.
pub fn narrow_passage(gap_lo: f64, gap_height: f64) -> Result<ProblemInstance> {
    let (x0, x1) = NARROW_PASSAGE_WALL_X;
    let (y0, y1) = NARROW_PASSAGE_WALL_Y;
    if !(gap_height >= 0.0 && gap_lo >= y0 && gap_lo + gap_height <= y1) {
        return Err(Error::Generation(format!(
            "gap [{gap_lo}, {}] does not fit the wall",
            gap_lo + gap_height
        )));
    }
    let mut obstacles = Vec::new();
    if gap_lo > y0 {
        obstacles.push(Obstacle::rect(State::xy(x0, y0), State::xy(x1, gap_lo)));
    }
    if gap_lo + gap_height < y1 {
        obstacles.push(Obstacle::rect(State::xy(x0, gap_lo + gap_height), State::xy(x1, y1)));
    }
    let s = NARROW_PASSAGE_SIDE;
    let world = World::new(State::xy(0.0, 0.0), State::xy(s, s), obstacles, 0.0)?;
    let mid = s / 2.0;
    ProblemInstance::new(world, State::xy(mid - 50.0, mid), State::xy(mid + 50.0, mid))
}

/// Narrow passage with the opening placed uniformly along the wall, at least
/// `NARROW_PASSAGE_MARGIN` from either wall end when it fits.
pub fn gen_narrow_passage(gap_height: f64, rng: &mut RngHandle) -> Result<ProblemInstance> {
    let (y0, y1) = NARROW_PASSAGE_WALL_Y;
    let slack = y1 - y0 - gap_height;
    if slack < 0.0 {
        return Err(Error::Generation(format!("gap {gap_height} exceeds the wall")));
    }
    let margin = NARROW_PASSAGE_MARGIN.min(slack / 2.0);
    let u: f64 = rng.random();
    narrow_passage(y0 + margin + u * (slack - 2.0 * margin), gap_height)
}

/// Wall geometry recovered from a narrow-passage world.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassageLayout {
    pub x: (f64, f64),
    pub gap: (f64, f64),
}

impl PassageLayout {
    /// Finds two boxes sharing their x-extent and stacked with an opening
    /// between them.
    pub fn detect(world: &World) -> Option<Self> {
        let boxes: Vec<(State, State)> = world
            .obstacles()
            .iter()
            .filter_map(|o| match o {
                Obstacle::Box { lo, hi } if lo.dim() == 2 => Some((*lo, *hi)),
                _ => None,
            })
            .collect();
        for (i, a) in boxes.iter().enumerate() {
            for b in &boxes[i + 1..] {
                if a.0.get(0) != b.0.get(0) || a.1.get(0) != b.1.get(0) {
                    continue;
                }
                let (low, high) = if a.0.get(1) < b.0.get(1) { (a, b) } else { (b, a) };
                if low.1.get(1) < high.0.get(1) {
                    return Some(Self {
                        x: (a.0.get(0), a.1.get(0)),
                        gap: (low.1.get(1), high.0.get(1)),
                    });
                }
            }
        }
        None
    }

    pub fn gap_height(&self) -> f64 {
        self.gap.1 - self.gap.0
    }

    /// The same world with the opening filled in. The plug overlaps the wall
    /// pieces so no zero-width seam remains between them.
    pub fn sealed(&self, world: &World) -> Result<World> {
        const OVERLAP: f64 = 0.5;
        let mut obstacles = world.obstacles().to_vec();
        obstacles.push(Obstacle::rect(
            State::xy(self.x.0, self.gap.0 - OVERLAP),
            State::xy(self.x.1, self.gap.1 + OVERLAP),
        ));
        World::new(*world.lo(), *world.hi(), obstacles, world.clearance())
    }
}

/// Cost of the best path that goes around the wall instead of through the
/// opening, from the visibility graph of the sealed world.
pub fn flanking_cost(problem: &ProblemInstance) -> Result<Option<f64>> {
    let Some(layout) = PassageLayout::detect(&problem.world) else {
        return Ok(None);
    };
    let sealed = layout.sealed(&problem.world)?;
    shortest_path_cost(&sealed, &problem.start, &problem.goal)
}

/// Obstacle count and size ranges for random worlds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomWorldConfig {
    pub dim: usize,
    pub side: f64,
    pub clearance: f64,
    pub boxes: (usize, usize),
    pub box_side: (f64, f64),
    pub balls: (usize, usize),
    pub ball_radius: (f64, f64),
    /// Minimum start-goal distance as a fraction of the side.
    pub min_separation: f64,
}

impl RandomWorldConfig {
    pub fn planar() -> Self {
        Self {
            dim: 2,
            side: 224.0,
            clearance: 3.0,
            boxes: (10, 20),
            box_side: (10.0, 50.0),
            balls: (5, 10),
            ball_radius: (5.0, 25.0),
            min_separation: 0.5,
        }
    }

    pub fn spatial() -> Self {
        Self {
            dim: 3,
            side: 50.0,
            clearance: 2.0,
            boxes: (8, 15),
            box_side: (5.0, 15.0),
            balls: (4, 8),
            ball_radius: (3.0, 8.0),
            min_separation: 0.5,
        }
    }
}

fn random_point(dim: usize, side: f64, rng: &mut RngHandle) -> State {
    let c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * side).collect();
    State::new(&c).expect("dimension is 2 or 3")
}

/// Random boxes and balls with start and goal that are free, far apart, and
/// connected on the clearance-inflated grid. Regenerates up to 100 times.
pub fn gen_random_world(cfg: &RandomWorldConfig, rng: &mut RngHandle) -> Result<ProblemInstance> {
    for _ in 0..REGENERATION_ATTEMPTS {
        let nb = rng.random_range(cfg.boxes.0..=cfg.boxes.1);
        let nc = rng.random_range(cfg.balls.0..=cfg.balls.1);
        let mut obstacles = Vec::with_capacity(nb + nc);
        for _ in 0..nb {
            let c = random_point(cfg.dim, cfg.side, rng);
            let half: Vec<f64> = (0..cfg.dim)
                .map(|_| rng.random_range(cfg.box_side.0..=cfg.box_side.1) / 2.0)
                .collect();
            obstacles.push(Obstacle::rect(c.map(|i, v| v - half[i]), c.map(|i, v| v + half[i])));
        }
        for _ in 0..nc {
            let c = random_point(cfg.dim, cfg.side, rng);
            obstacles.push(Obstacle::ball(
                c,
                rng.random_range(cfg.ball_radius.0..=cfg.ball_radius.1),
            ));
        }
        let lo = State::zeros(cfg.dim);
        let hi = lo.map(|_, _| cfg.side);
        let world = World::new(lo, hi, obstacles, cfg.clearance)?;
        let grid = rasterize(&world);
        let free_on_grid = |x: &State| world.is_free(x) && grid.cell_of(x).is_some_and(|c| !grid.is_occupied(&c));
        let Ok(start) = world.sample_free(rng) else { continue };
        let Ok(goal) = world.sample_free(rng) else { continue };
        if !free_on_grid(&start) || !free_on_grid(&goal) || start.distance(&goal) < cfg.min_separation * cfg.side {
            continue;
        }
        if matches!(astar(&grid, &start, &goal), Ok(Some(_))) {
            return ProblemInstance::new(world, start, goal);
        }
    }
    Err(Error::Generation(format!(
        "no feasible random world after {REGENERATION_ATTEMPTS} attempts"
    )))
}

/// Generates `count` problems of a family. Center-block maps cycle through the
/// five map widths; narrow-passage maps cycle through the five gap heights.
pub fn gen_family(family: Family, count: usize, rng: &mut RngHandle) -> Result<Vec<ProblemInstance>> {
    (0..count)
        .map(|k| match family {
            Family::CenterBlock => {
                let w = rng.random_range(CENTER_BLOCK_WIDTH.0..CENTER_BLOCK_WIDTH.1);
                gen_center_block(CENTER_BLOCK_MAP_WIDTHS[k % CENTER_BLOCK_MAP_WIDTHS.len()], w, rng)
            }
            Family::NarrowPassage => gen_narrow_passage(NARROW_PASSAGE_GAPS[k % NARROW_PASSAGE_GAPS.len()], rng),
            Family::Random2d => gen_random_world(&RandomWorldConfig::planar(), rng),
            Family::Random3d => gen_random_world(&RandomWorldConfig::spatial(), rng),
        })
        .collect()
}

/// Grouping label used in reports: map width for center blocks, gap height
/// for narrow passages.
pub fn group_label(family: Family, problem: &ProblemInstance) -> String {
    match family {
        Family::CenterBlock => format!("w{}", problem.world.hi().get(0) - problem.world.lo().get(0)),
        Family::NarrowPassage => {
            PassageLayout::detect(&problem.world).map_or_else(|| "open".to_string(), |l| format!("g{}", l.gap_height()))
        }
        Family::Random2d | Family::Random3d => "all".to_string(),
    }
}
