//! Second-order finite differences on a [`Grid`].
//!
//! Central stencils where both neighbours exist, second-order one-sided
//! stencils otherwise. All first and second differences are exact on
//! polynomials of degree ≤ 2 whenever at least two neighbours are available
//! along the axis.

use super::{Field, Grid, Point};

/// First derivative of `vals` along `axis` at `node`.
pub fn d_axis(grid: &Grid, vals: &[f64], node: usize, axis: usize) -> f64 {
    let h = grid.h();
    let f0 = vals[node];
    let p1 = grid.neighbor(node, axis, 1);
    let m1 = grid.neighbor(node, axis, -1);
    match (m1, p1) {
        (Some(m), Some(p)) => (vals[p] - vals[m]) / (2.0 * h),
        (None, Some(p)) => match grid.neighbor(node, axis, 2) {
            Some(p2) => (-3.0 * f0 + 4.0 * vals[p] - vals[p2]) / (2.0 * h),
            None => (vals[p] - f0) / h,
        },
        (Some(m), None) => match grid.neighbor(node, axis, -2) {
            Some(m2) => (3.0 * f0 - 4.0 * vals[m] + vals[m2]) / (2.0 * h),
            None => (f0 - vals[m]) / h,
        },
        (None, None) => 0.0,
    }
}

/// Second derivative of `vals` along `axis` at `node`.
pub fn d2_axis(grid: &Grid, vals: &[f64], node: usize, axis: usize) -> f64 {
    let h2 = grid.h() * grid.h();
    let f0 = vals[node];
    let p1 = grid.neighbor(node, axis, 1);
    let m1 = grid.neighbor(node, axis, -1);
    let one_sided = |dir: isize| -> f64 {
        let n1 = grid.neighbor(node, axis, dir);
        let n2 = grid.neighbor(node, axis, 2 * dir);
        let n3 = grid.neighbor(node, axis, 3 * dir);
        match (n1, n2, n3) {
            (Some(a), Some(b), Some(c)) => {
                (2.0 * f0 - 5.0 * vals[a] + 4.0 * vals[b] - vals[c]) / h2
            }
            (Some(a), Some(b), None) => (f0 - 2.0 * vals[a] + vals[b]) / h2,
            _ => 0.0,
        }
    };
    match (m1, p1) {
        (Some(m), Some(p)) => (vals[p] - 2.0 * f0 + vals[m]) / h2,
        (None, Some(_)) => one_sided(1),
        (Some(_), None) => one_sided(-1),
        (None, None) => 0.0,
    }
}

fn axis_derivative_field(grid: &Grid, vals: &[f64], axis: usize) -> Vec<f64> {
    (0..grid.len())
        .map(|i| if grid.in_set(i) { d_axis(grid, vals, i, axis) } else { 0.0 })
        .collect()
}

/// Discrete gradient at every node of the set (zero outside).
pub fn gradient(grid: &Grid, u: &Field) -> Vec<Point> {
    let dx = axis_derivative_field(grid, &u.values, 0);
    if grid.dim() == 1 {
        return dx.into_iter().map(|g| [g, 0.0]).collect();
    }
    let dy = axis_derivative_field(grid, &u.values, 1);
    dx.into_iter().zip(dy).map(|(a, b)| [a, b]).collect()
}

/// `|∇u|` as a field.
pub fn gradient_norm(grid: &Grid, u: &Field) -> Field {
    let g = gradient(grid, u);
    Field::new(g.iter().map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt()).collect(), u.t)
}

/// Discrete Hessian; the mixed entry is the average of `∂_y∂_x` and `∂_x∂_y`.
pub fn hessian(grid: &Grid, u: &Field) -> Vec<[[f64; 2]; 2]> {
    let n = grid.len();
    let mut out = vec![[[0.0; 2]; 2]; n];
    let dim = grid.dim();
    let mixed = if dim == 2 {
        let dx = axis_derivative_field(grid, &u.values, 0);
        let dy = axis_derivative_field(grid, &u.values, 1);
        let dyx = axis_derivative_field(grid, &dx, 1);
        let dxy = axis_derivative_field(grid, &dy, 0);
        Some((dyx, dxy))
    } else {
        None
    };
    for i in grid.nodes() {
        for a in 0..dim {
            out[i][a][a] = d2_axis(grid, &u.values, i, a);
        }
        if let Some((dyx, dxy)) = &mixed {
            let m = 0.5 * (dyx[i] + dxy[i]);
            out[i][0][1] = m;
            out[i][1][0] = m;
        }
    }
    out
}

/// Frobenius norm of a Hessian entry.
pub fn hessian_norm(hess: &[[f64; 2]; 2]) -> f64 {
    let mut s = 0.0;
    for row in hess {
        for v in row {
            s += v * v;
        }
    }
    s.sqrt()
}

/// Discrete Laplacian, sum of the axis second differences.
pub fn laplacian(grid: &Grid, u: &Field) -> Field {
    let values = (0..grid.len())
        .map(|i| {
            if grid.in_set(i) {
                (0..grid.dim()).map(|a| d2_axis(grid, &u.values, i, a)).sum()
            } else {
                0.0
            }
        })
        .collect();
    Field::new(values, u.t)
}

/// Largest `d ≤ 4` such that the lattice box of half-width `d` around `node`
/// lies in the node set.
pub fn interior_depth(grid: &Grid, node: usize) -> usize {
    if !grid.in_set(node) {
        return 0;
    }
    if grid.is_periodic() {
        return 4;
    }
    let x = grid.coords(node);
    let base = [
        grid.lattice_coordinate(x[0], 0).round() as isize,
        if grid.dim() == 2 { grid.lattice_coordinate(x[1], 1).round() as isize } else { 0 },
    ];
    let mut depth = 0;
    'outer: for d in 1..=4isize {
        let ys: Vec<isize> = if grid.dim() == 2 { (-d..=d).collect() } else { vec![0] };
        for &oy in &ys {
            for ox in -d..=d {
                if grid.node_at([base[0] + ox, base[1] + oy]).is_none() {
                    break 'outer;
                }
            }
        }
        depth = d as usize;
    }
    depth
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_has_zero_derivatives() {
        let g = Grid::ball(2, &[0.0, 0.0], 1.0, 0.125).unwrap();
        let u = g.sample(0.0, |_| 3.5);
        let lap = laplacian(&g, &u);
        let grad = gradient(&g, &u);
        for i in g.nodes() {
            assert_eq!(lap.values[i], 0.0);
            assert_eq!(grad[i], [0.0, 0.0]);
        }
    }

    #[test]
    fn quadratic_exactness_2d() {
        let g = Grid::ball(2, &[0.25, -0.5], 1.0, 0.0625).unwrap();
        let c = g.center();
        let u = g.sample(0.0, |x| {
            let dx = x[0] - c[0];
            let dy = x[1] - c[1];
            dx * dx + dy * dy
        });
        let lap = laplacian(&g, &u);
        for i in g.interior_nodes() {
            assert_eq!(lap.values[i], 4.0, "node {i}");
        }
        // degree-2 polynomial with a mixed term, every node including boundary
        let v = g.sample(0.0, |x| 0.5 * x[0] * x[0] - 0.25 * x[0] * x[1] + 0.75 * x[1] + 1.0);
        let grad = gradient(&g, &v);
        let hess = hessian(&g, &v);
        for i in g.nodes() {
            if interior_depth(&g, i) < 1 {
                continue;
            }
            let x = g.coords(i);
            assert!((grad[i][0] - (x[0] - 0.25 * x[1])).abs() < 1e-12);
            assert!((grad[i][1] - (-0.25 * x[0] + 0.75)).abs() < 1e-12);
            assert!((hess[i][0][0] - 1.0).abs() < 1e-12);
            assert!((hess[i][0][1] + 0.25).abs() < 1e-12);
            assert!(hess[i][1][1].abs() < 1e-12);
        }
    }

    #[test]
    fn one_sided_stencils_exact_on_quadratics() {
        let g = Grid::ball(1, &[0.0], 1.0, 0.125).unwrap();
        let u = g.sample(0.0, |x| 2.0 * x[0] * x[0] - x[0] + 0.5);
        for i in g.nodes() {
            let x = g.coords(i)[0];
            assert!((d_axis(&g, &u.values, i, 0) - (4.0 * x - 1.0)).abs() < 1e-12);
            assert!((d2_axis(&g, &u.values, i, 0) - 4.0).abs() < 1e-11);
        }
    }

    #[test]
    fn sine_gradient_converges_at_second_order() {
        let mut errs = Vec::new();
        let hs = [0.02, 0.01, 0.005];
        for &h in &hs {
            let g = Grid::ball(1, &[0.0], 1.0, h).unwrap();
            let u = g.sample(0.0, |x| x[0].sin());
            let grad = gradient(&g, &u);
            let err = g
                .interior_nodes()
                .map(|i| (grad[i][0] - g.coords(i)[0].cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let slope = crate::stats::loglog_slope(&hs, &errs).slope;
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn depth_near_disc_edge() {
        let g = Grid::ball(2, &[0.0, 0.0], 1.0, 0.1).unwrap();
        let c = g.nearest_node(&[0.0, 0.0]).unwrap();
        assert_eq!(interior_depth(&g, c), 4);
        let e = g.nearest_node(&[1.0, 0.0]).unwrap();
        assert_eq!(interior_depth(&g, e), 0);
    }
}
