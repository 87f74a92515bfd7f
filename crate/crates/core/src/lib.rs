//! Sampling-based path planning with learned guidance.
//!
//! The crate provides RRT*, Informed RRT* and Neural Informed RRT* for 2D and
//! 3D worlds of boxes and balls. Guided planners sample a mix of the informed
//! set and "guidance states" that a provider marks as lying near the optimal
//! path. Providers can be the built-in grid A* oracle or a remote model over
//! HTTP.
//!
//! ```
//! use nirrt_core::{irrt_star, NirrtConfig, ProblemInstance, RngHandle, State, World};
//!
//! let world = World::empty(State::xy(0.0, 0.0), State::xy(100.0, 100.0)).unwrap();
//! let problem = ProblemInstance::new(world, State::xy(10.0, 50.0), State::xy(90.0, 50.0)).unwrap();
//! let cfg = NirrtConfig::for_problem(&problem).with_iterations(500);
//! let run = irrt_star(&problem, &cfg, &mut RngHandle::new(7)).unwrap();
//! assert!(run.record.final_cost() < 90.0);
//! ```

pub mod bench;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod guidance;
pub mod informed;
pub mod nirrt;
pub mod problems;
pub mod record;
pub mod remote;
pub mod rrt_star;
pub mod spatial;
pub mod visibility;
pub mod world;

pub use error::{Error, Result};
pub use geometry::{distance, RngHandle, State};
pub use grid::{astar, rasterize, OccupancyGrid, OracleProvider};
pub use guidance::{GuidanceProvider, GuidanceQuery, GuidanceSet, GuideConfig, PointCloud};
pub use informed::{informed_or_uniform, informed_sample, InformedSet};
pub use nirrt::{irrt_star, nirrt_star, plan, rrt_star, NirrtConfig, PlanOutcome, PlannerKind};
pub use record::RunRecord;
pub use remote::RemoteProvider;
pub use rrt_star::{PlannerConfig, Tree};
pub use world::{Obstacle, ProblemInstance, World};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/worlds.md")]
    mod worlds {}
    #[doc = include_str!("../../../book/src/rrt-star.md")]
    mod rrt_star {}
    #[doc = include_str!("../../../book/src/informed.md")]
    mod informed {}
    #[doc = include_str!("../../../book/src/guidance.md")]
    mod guidance {}
    #[doc = include_str!("../../../book/src/grid-oracle.md")]
    mod grid_oracle {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
