//! Plain-text snapshot files and a TOML trajectory manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{Field, Grid, Termination, Trajectory};
use crate::error::{Error, Result};

/// Writes `x [y] value` rows, one per node in the set.
pub fn write_field(grid: &Grid, field: &Field, path: &Path) -> Result<()> {
    let mut s = String::new();
    let header = if grid.dim() == 1 { "x,value" } else { "x,y,value" };
    writeln!(s, "# t = {:e}", field.t).ok();
    writeln!(s, "{header}").ok();
    for i in grid.nodes() {
        let x = grid.coords(i);
        if grid.dim() == 1 {
            writeln!(s, "{:e},{:e}", x[0], field.values[i]).ok();
        } else {
            writeln!(s, "{:e},{:e},{:e}", x[0], x[1], field.values[i]).ok();
        }
    }
    fs::write(path, s)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    dim: usize,
    center: Vec<f64>,
    radius: f64,
    h: f64,
    dt: f64,
    clamp_count: usize,
    termination: Termination,
    snapshots: Vec<Entry<'a>>,
}

#[derive(Serialize)]
struct Entry<'a> {
    t: f64,
    file: &'a str,
}

/// Writes `snap_NNNNN.csv` per snapshot and `manifest.toml` into `dir`.
pub fn write_trajectory(traj: &Trajectory, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let grid = traj.grid();
    let names: Vec<String> = (0..traj.len()).map(|k| format!("snap_{k:05}.csv")).collect();
    for (f, name) in traj.snapshots().iter().zip(&names) {
        write_field(grid, f, &dir.join(name))?;
    }
    let manifest = Manifest {
        dim: grid.dim(),
        center: grid.center()[..grid.dim()].to_vec(),
        radius: grid.radius(),
        h: grid.h(),
        dt: traj.dt(),
        clamp_count: traj.clamp_count(),
        termination: traj.termination(),
        snapshots: traj
            .snapshots()
            .iter()
            .zip(&names)
            .map(|(f, n)| Entry { t: f.t, file: n })
            .collect(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryCondition, InitialData, Solver, SolverConfig};
    use crate::params::ProblemParams;

    #[test]
    fn writes_snapshots_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::ball(1, &[0.0], 1.0, 0.1).unwrap();
        let cfg = SolverConfig::stable(&g, 0.05, BoundaryCondition::DirichletZero, 0.9).with_stride(2);
        let params = ProblemParams::from_parts(1, (3, 1), (3, 2), 1.0).unwrap();
        let tr = Solver::new(&g, &params, &cfg)
            .unwrap()
            .solve(InitialData::Paraboloid { amplitude: 0.01 }.field(&g))
            .unwrap();
        write_trajectory(&tr, dir.path()).unwrap();
        let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        assert!(manifest.contains("status = \"completed_t\""));
        let first = fs::read_to_string(dir.path().join("snap_00000.csv")).unwrap();
        assert_eq!(first.lines().count(), 2 + 21);
        assert_eq!(
            fs::read_dir(dir.path()).unwrap().count(),
            tr.len() + 1,
            "one file per snapshot plus manifest"
        );
    }
}
