use std::collections::VecDeque;

use super::mesh::{dist, solve_small, Mesh};

const NEWTON_MAX_ITERS: usize = 30;
const NEWTON_TOL: f64 = 1e-12;
const PARENT_TOL: f64 = 1e-10;

/// Search policy for [`Mesh::locate`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LocateOptions {
    /// Scan every element when the neighborhood search fails.
    pub global_fallback: bool,
}

impl Mesh {
    /// Parent coordinates of `x` in element `e`, if the inverse map converges.
    pub fn inverse_map(&self, e: usize, x: &[f64]) -> Option<[f64; 3]> {
        let d = self.dim();
        let mut xi = [0.0; 3];
        for _ in 0..NEWTON_MAX_ITERS {
            let (y, jac) = self.map(e, &xi[..d]);
            let mut r = [0.0; 3];
            for i in 0..d {
                r[i] = x[i] - y[i];
            }
            let dx = solve_small(&jac, &r, d)?;
            let mut step = 0.0f64;
            for i in 0..d {
                xi[i] += dx[i];
                step = step.max(dx[i].abs());
            }
            if xi.iter().any(|v| !v.is_finite() || v.abs() > 1e3) {
                return None;
            }
            if step <= NEWTON_TOL {
                return Some(xi);
            }
        }
        None
    }

    /// Whether the closed element `e` contains `x`.
    pub fn contains(&self, e: usize, x: &[f64]) -> bool {
        let (lo, hi) = self.bounding_box(e);
        for i in 0..self.dim() {
            let pad = 0.1 * (hi[i] - lo[i]) + 1e-12;
            if x[i] < lo[i] - pad || x[i] > hi[i] + pad {
                return false;
            }
        }
        match self.inverse_map(e, x) {
            Some(xi) => xi[..self.dim()].iter().all(|v| v.abs() <= 1.0 + PARENT_TOL),
            None => false,
        }
    }

    /// Element containing `x`.
    ///
    /// Starts at `hint` and walks neighbors breadth-first, visiting only elements whose
    /// centroid lies within `radius` plus their circumradius of `x`. Without a hint every
    /// element is scanned in index order.
    pub fn locate(&self, x: &[f64], hint: Option<usize>, radius: f64, opts: LocateOptions) -> Option<usize> {
        let Some(h) = hint else {
            return self.scan(x);
        };
        if self.contains(h, x) {
            return Some(h);
        }
        let mut visited = vec![false; self.element_count()];
        visited[h] = true;
        let mut queue = VecDeque::from([h]);
        while let Some(e) = queue.pop_front() {
            for &o in self.neighbors(e) {
                if visited[o] {
                    continue;
                }
                visited[o] = true;
                if dist(self.centroid(o), x) > radius + self.circumradius(o) {
                    continue;
                }
                if self.contains(o, x) {
                    return Some(o);
                }
                queue.push_back(o);
            }
        }
        if opts.global_fallback {
            self.scan(x)
        } else {
            None
        }
    }

    fn scan(&self, x: &[f64]) -> Option<usize> {
        (0..self.element_count()).find(|&e| self.contains(e, x))
    }
}
