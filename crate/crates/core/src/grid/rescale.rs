//! PDE residual of the scaled family
//! `u_λ(x,t) = λ^{-1} u(x₀ + λ^{(1−p)/2}(x − x₀), λ^{1−p} t)`,
//! which solves the same equation with `M` replaced by `λ^{((p+1)q−2p)/2} M`.

use serde::Serialize;

use super::calculus::{d2_axis, d_axis, interior_depth};
use super::solver::nonlinearity;
use super::{Grid, Point, Trajectory};
use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Closed time interval over which residuals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    /// `[a·T, b·T]` for the final time `T` of a trajectory.
    pub fn fraction(traj: &Trajectory, a: f64, b: f64) -> Self {
        let t = traj.last().t;
        Self { start: a * t, end: b * t }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaleReport {
    pub lambda: f64,
    /// `λ^{((p+1)q−2p)/2} M`.
    pub modified_m: f64,
    /// Max-norm residual against the equation with the modified coefficient.
    pub residual_modified: f64,
    /// Max-norm residual against the equation with the original `M`.
    pub residual_unmodified: f64,
    pub nodes: usize,
    pub times: usize,
}

/// Weights of the cubic Lagrange interpolant through `xs` evaluated at `x`.
pub(crate) fn lagrange4(xs: [f64; 4], x: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                w[i] *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
    }
    w
}

/// Cubic interpolation of nodal values at an arbitrary point (tensor product in 2D).
pub(crate) fn interpolate_space(grid: &Grid, values: &[f64], x: &Point) -> Option<f64> {
    let side = grid.side() as isize;
    let mut base = [0isize; 2];
    let mut weights = [[1.0, 0.0, 0.0, 0.0]; 2];
    for a in 0..grid.dim() {
        let f = grid.lattice_coordinate(x[a], a);
        let r = f.round();
        if (f - r).abs() < 1e-12 {
            base[a] = r as isize;
            weights[a] = [1.0, 0.0, 0.0, 0.0];
            continue;
        }
        let i0 = (f.floor() as isize - 1).clamp(0, side - 4);
        base[a] = i0;
        let xs = [i0 as f64, (i0 + 1) as f64, (i0 + 2) as f64, (i0 + 3) as f64];
        weights[a] = lagrange4(xs, f);
    }
    let span = |a: usize| if a < grid.dim() && weights[a][1..].iter().any(|w| *w != 0.0) { 4 } else { 1 };
    let (nx, ny) = (span(0), span(1));
    let mut acc = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let node = grid.node_at([base[0] + i as isize, base[1] + j as isize])?;
            acc += weights[0][i] * weights[1][j] * values[node];
        }
    }
    Some(acc)
}

/// Value of the trajectory at `(x, t)`: space interpolation on four snapshots
/// bracketing `t`, then cubic Lagrange in time.
pub(crate) fn interpolate_space_time(traj: &Trajectory, x: &Point, t: f64) -> Option<f64> {
    let snaps = traj.snapshots();
    let n = snaps.len();
    let (t0, t1) = (snaps[0].t, snaps[n - 1].t);
    if t < t0 - 1e-12 || t > t1 + 1e-12 {
        return None;
    }
    let grid = traj.grid();
    if let Some(k) = snaps.iter().position(|f| (f.t - t).abs() <= 1e-12 * t1.abs().max(1.0)) {
        return interpolate_space(grid, &snaps[k].values, x);
    }
    if n < 4 {
        return None;
    }
    let j = snaps.partition_point(|f| f.t <= t).saturating_sub(1);
    let i0 = (j as isize - 1).clamp(0, n as isize - 4) as usize;
    let ts = [snaps[i0].t, snaps[i0 + 1].t, snaps[i0 + 2].t, snaps[i0 + 3].t];
    let w = lagrange4(ts, t);
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        acc += wk * interpolate_space(grid, &snaps[i0 + k].values, x)?;
    }
    Some(acc)
}

/// Residuals of `u_λ` on nodes with `|x − x₀| ≤ R/2` at snapshot times in `window`.
pub fn rescaling_residual(
    traj: &Trajectory,
    lambda: f64,
    params: &ProblemParams,
    window: TimeWindow,
) -> Result<RescaleReport> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("scaling factor must be positive, got {lambda}")));
    }
    let grid = traj.grid();
    let p = params.p_f64();
    let q = params.q_f64();
    let mu = lambda.powf((1.0 - p) / 2.0);
    let modified_m = lambda.powf(((p + 1.0) * q - 2.0 * p) / 2.0) * params.m();
    let c = grid.center();
    let r_eval = grid.radius() / 2.0;
    if mu * (r_eval + grid.h()) > grid.radius() - 2.0 * grid.h() {
        return Err(Error::OutOfWindow(format!(
            "spatial preimage radius {:.4} exceeds the simulated ball",
            mu * (r_eval + grid.h())
        )));
    }
    let eval_nodes: Vec<usize> = grid
        .nodes()
        .filter(|&i| grid.dist_to_center(&grid.coords(i)) <= r_eval + 1e-12)
        .filter(|&i| interior_depth(grid, i) >= 1)
        .collect();
    let support: Vec<usize> = grid
        .nodes()
        .filter(|&i| grid.dist_to_center(&grid.coords(i)) <= r_eval + 1.5 * grid.h())
        .collect();
    let snaps = traj.snapshots();
    let t_last = snaps[snaps.len() - 1].t;
    let idx: Vec<usize> = (1..snaps.len().saturating_sub(1))
        .filter(|&j| snaps[j].t >= window.start - 1e-12 && snaps[j].t <= window.end + 1e-12)
        .collect();
    if idx.is_empty() {
        return Err(Error::OutOfWindow("no interior snapshot in the time window".into()));
    }
    if mu * mu * snaps[idx[idx.len() - 1] + 1].t > t_last + 1e-12 {
        return Err(Error::OutOfWindow("time preimage beyond the simulated horizon".into()));
    }
    let scaled = |j: usize| -> Result<Vec<f64>> {
        let t = snaps[j].t;
        let mut vals = vec![0.0; grid.len()];
        for &i in &support {
            let x = grid.coords(i);
            let mut y = [0.0; 2];
            for a in 0..grid.dim() {
                y[a] = c[a] + mu * (x[a] - c[a]);
            }
            vals[i] = interpolate_space_time(traj, &y, mu * mu * t).ok_or_else(|| {
                Error::OutOfWindow(format!("preimage of ({:?}, {t}) not covered", &x[..grid.dim()]))
            })? / lambda;
        }
        Ok(vals)
    };
    let mut res_mod: f64 = 0.0;
    let mut res_unmod: f64 = 0.0;
    for &j in &idx {
        let um = scaled(j - 1)?;
        let u0 = scaled(j)?;
        let up = scaled(j + 1)?;
        let h1 = snaps[j].t - snaps[j - 1].t;
        let h2 = snaps[j + 1].t - snaps[j].t;
        let (cm, c0, cp) =
            (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        for &i in &eval_nodes {
            let ut = cm * um[i] + c0 * u0[i] + cp * up[i];
            let mut lap = 0.0;
            let mut g2 = 0.0;
            for a in 0..grid.dim() {
                lap += d2_axis(grid, &u0, i, a);
                let d = d_axis(grid, &u0, i, a);
                g2 += d * d;
            }
            let gn = g2.sqrt();
            let base = ut - lap;
            let pm = params.with_m(modified_m)?;
            res_mod = res_mod.max((base - nonlinearity(&pm, u0[i], gn)).abs());
            res_unmod = res_unmod.max((base - nonlinearity(params, u0[i], gn)).abs());
        }
    }
    Ok(RescaleReport {
        lambda,
        modified_m,
        residual_modified: res_mod,
        residual_unmodified: res_unmod,
        nodes: eval_nodes.len(),
        times: idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Termination};

    #[test]
    fn lagrange_reproduces_cubics() {
        let xs = [0.0, 1.0, 2.5, 3.0];
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let w = lagrange4(xs, 1.7);
        let v: f64 = (0..4).map(|i| w[i] * f(xs[i])).sum();
        assert!((v - f(1.7)).abs() < 1e-12);
    }

    #[test]
    fn space_interpolation_exact_on_cubic_2d() {
        let g = Grid::ball(2, &[0.0, 0.0], 1.0, 0.125).unwrap();
        let f = |x: &Point| x[0].powi(3) - x[0] * x[1] + 2.0 * x[1].powi(2);
        let u = g.sample(0.0, f);
        let y = [0.11, -0.23];
        let v = interpolate_space(&g, &u.values, &y).unwrap();
        assert!((v - f(&y)).abs() < 1e-12);
        let node = g.nearest_node(&[0.25, 0.5]).unwrap();
        assert_eq!(interpolate_space(&g, &u.values, &g.coords(node)).unwrap(), u.values[node]);
    }

    #[test]
    fn space_time_interpolation_exact_on_polynomial() {
        let g = Grid::ball(1, &[0.0], 2.0, 0.125).unwrap();
        let f = |x: &Point, t: f64| 1.0 + x[0] * x[0] * t - t * t * t;
        let snaps: Vec<Field> =
            (0..8).map(|k| g.sample(0.1 * k as f64, |x| f(x, 0.1 * k as f64))).collect();
        let tr = Trajectory::from_snapshots(g, snaps, Termination::CompletedT).unwrap();
        let v = interpolate_space_time(&tr, &[0.3, 0.0], 0.37).unwrap();
        assert!((v - f(&[0.3, 0.0], 0.37)).abs() < 1e-12);
        assert!(interpolate_space_time(&tr, &[0.3, 0.0], 0.9).is_none());
    }
}
