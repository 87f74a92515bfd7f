//! Uniform bucket grid over the world bounds for nearest and radius queries.
//!
//! Results are identical to a linear scan: distances are computed with
//! [`State::distance`] and nearest-neighbour ties go to the lowest index.

use crate::geometry::State;

#[derive(Clone, Debug)]
pub struct BucketIndex {
    dim: usize,
    lo: [f64; 3],
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
    // points outside the bounds; always scanned
    overflow: Vec<usize>,
}

impl BucketIndex {
    /// Grid covering `[lo, hi]` with cubic cells of side `cell`.
    pub fn new(lo: &State, hi: &State, cell: f64) -> Self {
        assert!(cell > 0.0, "bucket cell size must be positive");
        let dim = lo.dim();
        let mut dims = [1usize; 3];
        for (i, d) in dims.iter_mut().enumerate().take(dim) {
            *d = (((hi.get(i) - lo.get(i)) / cell).ceil() as usize).clamp(1, 4096);
        }
        let total = dims.iter().product();
        Self {
            dim,
            lo: lo.padded(),
            cell,
            dims,
            buckets: vec![Vec::new(); total],
            overflow: Vec::new(),
        }
    }

    fn cell_coord(&self, x: &State) -> Option<[usize; 3]> {
        let mut c = [0usize; 3];
        for (i, ci) in c.iter_mut().enumerate().take(self.dim) {
            let f = ((x.get(i) - self.lo[i]) / self.cell).floor();
            if f < 0.0 || f > self.dims[i] as f64 {
                return None;
            }
            // points on the upper face fall into the last cell
            *ci = (f as usize).min(self.dims[i] - 1);
        }
        Some(c)
    }

    #[inline]
    fn flat(&self, c: &[usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn insert(&mut self, index: usize, x: &State) {
        match self.cell_coord(x) {
            Some(c) => {
                let f = self.flat(&c);
                self.buckets[f].push(index);
            }
            None => self.overflow.push(index),
        }
    }

    /// Index of the point closest to `x`; ties resolve to the lowest index.
    pub fn nearest(&self, points: &[State], x: &State) -> Option<usize> {
        if points.is_empty() {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        let consider = |i: usize, best: &mut Option<(f64, usize)>| {
            let d = points[i].distance(x);
            match best {
                Some((bd, bi)) if d > *bd || (d == *bd && i > *bi) => {}
                _ => *best = Some((d, i)),
            }
        };
        for &i in &self.overflow {
            consider(i, &mut best);
        }
        let Some(center) = self.cell_coord(x) else {
            // query outside the grid: plain scan
            for i in 0..points.len() {
                consider(i, &mut best);
            }
            return best.map(|b| b.1);
        };
        let max_ring = (0..self.dim).map(|i| self.dims[i]).max().unwrap_or(1);
        for k in 0..=max_ring {
            self.for_ring(&center, k, |f| {
                for &i in &self.buckets[f] {
                    consider(i, &mut best);
                }
            });
            if let Some((bd, _)) = best {
                if bd < self.unexplored_gap(x, &center, k) {
                    break;
                }
            }
        }
        best.map(|b| b.1)
    }

    /// Lower bound on the distance from `x` to any cell outside the box of
    /// Chebyshev radius `k` around `center`.
    fn unexplored_gap(&self, x: &State, center: &[usize; 3], k: usize) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, &c) in center.iter().enumerate().take(self.dim) {
            if c > k {
                let face = self.lo[i] + (c - k) as f64 * self.cell;
                gap = gap.min(x.get(i) - face);
            }
            if c + k + 1 < self.dims[i] {
                let face = self.lo[i] + (c + k + 1) as f64 * self.cell;
                gap = gap.min(face - x.get(i));
            }
        }
        gap
    }

    fn for_ring(&self, center: &[usize; 3], k: usize, mut f: impl FnMut(usize)) {
        let k = k as isize;
        let range = |i: usize| -> (isize, isize) {
            if i < self.dim {
                let c = center[i] as isize;
                ((c - k).max(0), (c + k).min(self.dims[i] as isize - 1))
            } else {
                (0, 0)
            }
        };
        let (x0, x1) = range(0);
        let (y0, y1) = range(1);
        let (z0, z1) = range(2);
        for z in z0..=z1 {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let c = [x as usize, y as usize, z as usize];
                    let cheb = (0..self.dim)
                        .map(|i| (c[i] as isize - center[i] as isize).abs())
                        .max()
                        .unwrap_or(0);
                    if cheb == k {
                        f(self.flat(&c));
                    }
                }
            }
        }
    }

    /// All indices within `radius` of `x` (inclusive), ascending.
    pub fn within(&self, points: &[State], x: &State, radius: f64) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .overflow
            .iter()
            .copied()
            .filter(|&i| points[i].distance(x) <= radius)
            .collect();
        let mut lo_c = [0usize; 3];
        let mut hi_c = [0usize; 3];
        for i in 0..self.dim {
            let a = ((x.get(i) - radius - self.lo[i]) / self.cell).floor();
            let b = ((x.get(i) + radius - self.lo[i]) / self.cell).floor();
            if b < 0.0 || a > (self.dims[i] - 1) as f64 {
                out.sort_unstable();
                return out;
            }
            lo_c[i] = a.max(0.0) as usize;
            hi_c[i] = (b.min((self.dims[i] - 1) as f64)) as usize;
        }
        for z in lo_c[2]..=hi_c[2] {
            for y in lo_c[1]..=hi_c[1] {
                for xx in lo_c[0]..=hi_c[0] {
                    let f = self.flat(&[xx, y, z]);
                    out.extend(
                        self.buckets[f]
                            .iter()
                            .copied()
                            .filter(|&i| points[i].distance(x) <= radius),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }
}
