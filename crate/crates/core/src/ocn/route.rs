use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geometry::{Rect, Vec2};
use crate::geomworld::World;

/// Occupancy grid for coarse routing. Static clearance is computed once;
/// dynamic obstacles are checked per query at the query time.
#[derive(Debug, Clone)]
pub struct RouteGrid {
    area: Rect,
    resolution: f64,
    nx: usize,
    ny: usize,
    static_clearance: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key(u64);

fn key(f: f64) -> Key {
    // costs are non-negative, so the bit pattern orders like the value
    Key(f.to_bits())
}

impl RouteGrid {
    pub fn new(world: &World, area: Rect, resolution: f64) -> Self {
        let nx = (area.width() / resolution).ceil().max(1.0) as usize;
        let ny = (area.height() / resolution).ceil().max(1.0) as usize;
        let mut static_clearance = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = area.min + Vec2::new((i as f64 + 0.5) * resolution, (j as f64 + 0.5) * resolution);
                static_clearance.push(world.obstacles.iter().map(|o| o.distance_to_point(c)).fold(f64::INFINITY, f64::min));
            }
        }
        Self { area, resolution, nx, ny, static_clearance }
    }

    pub fn area(&self) -> Rect {
        self.area
    }

    fn center(&self, i: usize, j: usize) -> Vec2 {
        self.area.min + Vec2::new((i as f64 + 0.5) * self.resolution, (j as f64 + 0.5) * self.resolution)
    }

    fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.area.min.x) / self.resolution;
        let fy = (p.y - self.area.min.y) / self.resolution;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Shortest 8-connected route between cell centres avoiding cells closer
    /// than `inflate` to any obstacle at time `t`. Cells next to the start are
    /// exempt so a robot parked near an obstacle can still leave. `None` when
    /// no route exists.
    pub fn route(&self, world: &World, t: f64, from: Vec2, to: Vec2, inflate: f64) -> Option<Vec<Vec2>> {
        let start = self.cell_of(from)?;
        let goal = self.cell_of(to)?;
        let te = t - world.staleness;
        let movers: Vec<_> = world.dynamic.iter().map(|d| d.shape_at(te)).collect();
        let n = self.nx * self.ny;
        let idx = |(i, j): (usize, usize)| j * self.nx + i;
        let mut free_cache: Vec<u8> = vec![0; n];
        let mut free = |c: (usize, usize)| -> bool {
            let k = idx(c);
            if free_cache[k] == 0 {
                let near_start = c.0.abs_diff(start.0) <= 1 && c.1.abs_diff(start.1) <= 1;
                let ok = near_start
                    || c == goal
                    || (self.static_clearance[k] >= inflate
                        && movers.iter().all(|m| m.distance_to_point(self.center(c.0, c.1)) >= inflate));
                free_cache[k] = if ok { 1 } else { 2 };
            }
            free_cache[k] == 1
        };

        let h = |c: (usize, usize)| self.center(c.0, c.1).distance(self.center(goal.0, goal.1));
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut open = BinaryHeap::new();
        g[idx(start)] = 0.0;
        open.push(Reverse((key(h(start)), idx(start))));
        while let Some(Reverse((_, k))) = open.pop() {
            let c = (k % self.nx, k / self.nx);
            if c == goal {
                let mut cells = vec![k];
                while parent[*cells.last().unwrap()] != usize::MAX {
                    cells.push(parent[*cells.last().unwrap()]);
                }
                cells.reverse();
                let mut pts: Vec<Vec2> = cells.iter().map(|&k| self.center(k % self.nx, k / self.nx)).collect();
                pts[0] = from;
                *pts.last_mut().unwrap() = to;
                return Some(pts);
            }
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (ni, nj) = (c.0 as i64 + dx, c.1 as i64 + dy);
                if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
                    continue;
                }
                let nc = (ni as usize, nj as usize);
                if !free(nc) {
                    continue;
                }
                // no corner cutting on diagonals
                if dx != 0 && dy != 0 && !(free((nc.0, c.1)) && free((c.0, nc.1))) {
                    continue;
                }
                let step = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 } * self.resolution;
                let ng = g[k] + step;
                let nk = idx(nc);
                if ng < g[nk] {
                    g[nk] = ng;
                    parent[nk] = k;
                    open.push(Reverse((key(ng + h(nc)), nk)));
                }
            }
        }
        None
    }
}

/// Point `distance` along a route (clamped to its end).
pub fn point_along(route: &[Vec2], distance: f64) -> Vec2 {
    let mut left = distance;
    for w in route.windows(2) {
        let seg = w[0].distance(w[1]);
        if left <= seg && seg > 0.0 {
            return w[0] + (w[1] - w[0]) * (left / seg);
        }
        left -= seg;
    }
    *route.last().expect("route has points")
}
