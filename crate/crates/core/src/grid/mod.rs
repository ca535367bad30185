//! Lattice discretisation of the cylinder `B(x₀, R) × (0, T)` in one or two
//! space dimensions, with discrete calculus, an explicit solver and the
//! rescaling check.

mod calculus;
mod export;
mod initial;
mod rescale;
mod solver;

pub use calculus::{
    d_axis, d2_axis, gradient, gradient_norm, hessian, hessian_norm, interior_depth, laplacian,
};
pub use export::{write_field, write_trajectory};
pub use initial::InitialData;
pub(crate) use rescale::interpolate_space_time;
pub use rescale::{rescaling_residual, RescaleReport, TimeWindow};
pub use solver::{
    nonlinearity, power_source, BoundaryCondition, DerivativeOrder, Forcing, Solver,
    SolverConfig, StepOutcome, Termination, Trajectory,
};

use crate::error::{Error, Result};

/// Coordinates of a node; the second entry is unused in 1D.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Outside,
    Boundary,
    Interior,
}

/// Square lattice restricted to a ball (1D: an interval, 2D: a disc mask),
/// or a periodic 1D segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    center: Point,
    radius: f64,
    h: f64,
    half: usize,
    side: usize,
    kinds: Vec<NodeKind>,
    periodic: bool,
}

impl Grid {
    /// All lattice points within distance `radius` of `center`.
    pub fn ball(dim: usize, center: &[f64], radius: f64, h: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not supported (1 or 2)")));
        }
        if center.len() != dim {
            return Err(Error::InvalidGrid("center has wrong dimension".into()));
        }
        if !(radius > 0.0) || !(h > 0.0) || !(h < radius / 4.0) {
            return Err(Error::InvalidGrid(format!("need 0 < h < R/4, got h = {h}, R = {radius}")));
        }
        let half = (radius / h + 1e-9).floor() as usize;
        let side = 2 * half + 1;
        let mut c = [0.0; 2];
        c[..dim].copy_from_slice(center);
        let mut grid = Self {
            dim,
            center: c,
            radius,
            h,
            half,
            side,
            kinds: Vec::new(),
            periodic: false,
        };
        let n = grid.len();
        let inside: Vec<bool> = (0..n)
            .map(|i| {
                let x = grid.coords(i);
                grid.dist_to_center(&x) <= radius * (1.0 + 1e-12)
            })
            .collect();
        grid.kinds = (0..n)
            .map(|i| {
                if !inside[i] {
                    return NodeKind::Outside;
                }
                let all = (0..dim).all(|axis| {
                    [-1isize, 1].iter().all(|&o| {
                        grid.raw_neighbor(i, axis, o).map(|j| inside[j]).unwrap_or(false)
                    })
                });
                if all {
                    NodeKind::Interior
                } else {
                    NodeKind::Boundary
                }
            })
            .collect();
        Ok(grid)
    }

    /// Periodic 1D lattice of `2·half + 1` nodes with spacing `h`, all interior.
    pub fn periodic_segment(center: f64, half: usize, h: f64) -> Result<Self> {
        if half < 2 || !(h > 0.0) {
            return Err(Error::InvalidGrid("periodic segment needs half ≥ 2 and h > 0".into()));
        }
        let side = 2 * half + 1;
        Ok(Self {
            dim: 1,
            center: [center, 0.0],
            radius: half as f64 * h,
            h,
            half,
            side,
            kinds: vec![NodeKind::Interior; side],
            periodic: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn center(&self) -> Point {
        self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn side(&self) -> usize {
        self.side
    }
    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Number of lattice slots (including `Outside` ones in 2D).
    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn in_set(&self, node: usize) -> bool {
        self.kinds[node] != NodeKind::Outside
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.in_set(i))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.kinds[i] == NodeKind::Interior)
    }

    pub fn node_count(&self) -> usize {
        self.nodes().count()
    }

    fn multi_index(&self, node: usize) -> [usize; 2] {
        if self.dim == 1 {
            [node, 0]
        } else {
            [node % self.side, node / self.side]
        }
    }

    fn flat(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] + idx[1] * self.side
        }
    }

    pub fn coords(&self, node: usize) -> Point {
        let idx = self.multi_index(node);
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = self.center[a] + (idx[a] as f64 - self.half as f64) * self.h;
        }
        x
    }

    pub fn dist_to_center(&self, x: &Point) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            let d = x[a] - self.center[a];
            s += d * d;
        }
        s.sqrt()
    }

    /// Distance from a node to the sphere `|x − x₀| = R`.
    pub fn dist_to_boundary(&self, node: usize) -> f64 {
        (self.radius - self.dist_to_center(&self.coords(node))).max(0.0)
    }

    fn raw_neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut idx = self.multi_index(node);
        let i = idx[axis] as isize + offset;
        if self.periodic {
            idx[axis] = i.rem_euclid(self.side as isize) as usize;
        } else {
            if i < 0 || i >= self.side as isize {
                return None;
            }
            idx[axis] = i as usize;
        }
        Some(self.flat(idx))
    }

    /// Neighbour along `axis` at lattice offset `offset`, if it belongs to the node set.
    pub fn neighbor(&self, node: usize, axis: usize, offset: isize) -> Option<usize> {
        self.raw_neighbor(node, axis, offset).filter(|&j| self.in_set(j))
    }

    /// Node nearest to a point, if the point lies on the lattice box.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0usize; 2];
        for a in 0..self.dim {
            let f = (x[a] - self.center[a]) / self.h + self.half as f64;
            let r = f.round();
            if r < 0.0 || r >= self.side as f64 {
                return None;
            }
            idx[a] = r as usize;
        }
        let n = self.flat(idx);
        self.in_set(n).then_some(n)
    }

    /// Fractional lattice index of a coordinate along `axis`.
    pub(crate) fn lattice_coordinate(&self, x: f64, axis: usize) -> f64 {
        (x - self.center[axis]) / self.h + self.half as f64
    }

    pub(crate) fn node_at(&self, idx: [isize; 2]) -> Option<usize> {
        let mut u = [0usize; 2];
        for a in 0..self.dim {
            if idx[a] < 0 || idx[a] >= self.side as isize {
                return None;
            }
            u[a] = idx[a] as usize;
        }
        let n = self.flat(u);
        self.in_set(n).then_some(n)
    }

    /// Samples `f` at every node in the set; outside slots hold 0.
    pub fn sample<F: Fn(&Point) -> f64>(&self, t: f64, f: F) -> Field {
        let values = (0..self.len())
            .map(|i| if self.in_set(i) { f(&self.coords(i)) } else { 0.0 })
            .collect();
        Field { values, t }
    }

    pub fn zeros(&self, t: f64) -> Field {
        Field { values: vec![0.0; self.len()], t }
    }
}

/// Per-node values at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub t: f64,
}

impl Field {
    pub fn new(values: Vec<f64>, t: f64) -> Self {
        Self { values, t }
    }

    pub fn max_over(&self, grid: &Grid) -> f64 {
        grid.nodes().map(|i| self.values[i]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_over(&self, grid: &Grid) -> f64 {
        grid.nodes().map(|i| self.values[i]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_over(&self, grid: &Grid) -> f64 {
        grid.nodes().map(|i| self.values[i].abs()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_1d_layout() {
        let g = Grid::ball(1, &[0.0], 1.0, 0.1).unwrap();
        assert_eq!(g.node_count(), 21);
        assert_eq!(g.kind(0), NodeKind::Boundary);
        assert_eq!(g.kind(20), NodeKind::Boundary);
        assert_eq!(g.interior_nodes().count(), 19);
        assert!((g.coords(20)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disc_mask_stencils() {
        let g = Grid::ball(2, &[0.0, 0.0], 1.0, 0.1).unwrap();
        for i in g.interior_nodes() {
            for axis in 0..2 {
                assert!(g.neighbor(i, axis, 1).is_some());
                assert!(g.neighbor(i, axis, -1).is_some());
            }
        }
        let c = g.nearest_node(&[0.0, 0.0]).unwrap();
        assert_eq!(g.kind(c), NodeKind::Interior);
        assert!(g.nearest_node(&[0.95, 0.95]).is_none());
    }

    #[test]
    fn rejects_coarse_spacing() {
        assert!(Grid::ball(1, &[0.0], 1.0, 0.3).is_err());
        assert!(Grid::ball(3, &[0.0, 0.0, 0.0], 1.0, 0.1).is_err());
    }

    #[test]
    fn periodic_wraps() {
        let g = Grid::periodic_segment(0.0, 4, 0.5).unwrap();
        assert_eq!(g.neighbor(0, 0, -1), Some(8));
        assert_eq!(g.neighbor(8, 0, 1), Some(0));
    }
}
