//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nirrt_core::grid::{Cell, OccupancyGrid};
use nirrt_core::RngHandle;
use rand::Rng;

/// Plain Dijkstra over step counts, compared by their real value.
pub fn dijkstra_steps(grid: &OccupancyGrid, s: Cell, g: Cell) -> Option<[u32; 3]> {
    let value = |c: [u32; 3]| c[0] as f64 + c[1] as f64 * 2f64.sqrt() + c[2] as f64 * 3f64.sqrt();
    let dims = grid.dims();
    let mut best: Vec<Option<[u32; 3]>> = vec![None; grid.len()];
    let mut heap = BinaryHeap::new();
    best[grid.flat(&s)] = Some([0; 3]);
    heap.push(Reverse((ordered(0.0), grid.flat(&s))));
    while let Some(Reverse((_, u))) = heap.pop() {
        let cu = best[u].unwrap();
        let c = grid.unflat(u);
        if c == g {
            return Some(cu);
        }
        for k in 0..27 {
            let o = [k % 3, k / 3 % 3, k / 9].map(|v| v as isize - 1);
            let moved = o.iter().filter(|&&v| v != 0).count();
            if moved == 0 || (grid.dim() == 2 && o[2] != 0) {
                continue;
            }
            let class = moved - 1;
            let n: Vec<isize> = (0..3).map(|i| c[i] as isize + o[i]).collect();
            if (0..3).any(|i| n[i] < 0 || n[i] as usize >= dims[i]) {
                continue;
            }
            let nc = [n[0] as usize, n[1] as usize, n[2] as usize];
            if grid.is_occupied(&nc) {
                continue;
            }
            let mut steps = cu;
            steps[class] += 1;
            let f = grid.flat(&nc);
            if best[f].is_none_or(|b| value(steps) < value(b)) {
                best[f] = Some(steps);
                heap.push(Reverse((ordered(value(steps)), f)));
            }
        }
    }
    None
}

fn ordered(v: f64) -> u64 {
    // non-negative floats order like their bit patterns
    v.to_bits()
}

pub fn random_grid(dim: usize, side: usize, density: f64, rng: &mut RngHandle) -> OccupancyGrid {
    let dims = if dim == 2 { [side, side, 1] } else { [side, side, side] };
    let mut g = OccupancyGrid::free(dim, dims, 1.0, [0.0; 3]);
    for f in 0..g.len() {
        if rng.random::<f64>() < density {
            let c = g.unflat(f);
            g.set_occupied(&c, true);
        }
    }
    g
}

pub fn random_free_cell(g: &OccupancyGrid, rng: &mut RngHandle) -> Cell {
    loop {
        let c = g.unflat(rng.random_range(0..g.len()));
        if !g.is_occupied(&c) {
            return c;
        }
    }
}
