use serde::{Deserialize, Serialize};

use super::calculus::{d2_axis, d_axis};
use super::{Field, Grid, NodeKind, Point};
use crate::error::{Error, Result};
use crate::params::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `u = 0` on boundary nodes.
    DirichletZero,
    /// Boundary nodes keep their initial values.
    DirichletFrozen,
    /// Only valid on a periodic grid.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub boundary: BoundaryCondition,
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Stop once the largest nodal update falls below this value.
    #[serde(default)]
    pub steady_tol: Option<f64>,
    /// Clamp negative values to zero (counted).
    #[serde(default = "default_true")]
    pub clamp_negative: bool,
}

fn default_threshold() -> f64 {
    1e8
}
fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl SolverConfig {
    /// Largest stable explicit step `h²/(2·dim)`.
    pub fn stability_bound(grid: &Grid) -> f64 {
        grid.h() * grid.h() / (2.0 * grid.dim() as f64)
    }

    /// Config with `dt = safety · h²/(2·dim)`.
    pub fn stable(grid: &Grid, t_final: f64, boundary: BoundaryCondition, safety: f64) -> Self {
        Self {
            dt: safety * Self::stability_bound(grid),
            t_final,
            boundary,
            blowup_threshold: default_threshold(),
            snapshot_stride: 1,
            steady_tol: None,
            clamp_negative: true,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride.max(1);
        self
    }

    pub fn with_steady_tol(mut self, tol: f64) -> Self {
        self.steady_tol = Some(tol);
        self
    }
}

/// How the trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    CompletedT,
    /// Threshold exceeded at `detected_at`; `last_stable` is the last recorded time.
    BlowUp { detected_at: f64, last_stable: f64 },
    Steady { at: f64 },
    NonFinite { at: f64 },
}

impl Termination {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Termination::BlowUp { .. })
    }
    pub fn label(&self) -> &'static str {
        match self {
            Termination::CompletedT => "completed",
            Termination::BlowUp { .. } => "blowup",
            Termination::Steady { .. } => "steady",
            Termination::NonFinite { .. } => "nonfinite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub field: Field,
    pub clamped: usize,
    pub min_before_clamp: f64,
    pub max_update: f64,
}

/// Accuracy of a time-derivative estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    Central,
    OneSided,
}

/// Source `s ↦ s^p`, extended oddly to negative arguments.
pub fn power_source(s: f64, p: f64) -> f64 {
    if s >= 0.0 {
        s.powf(p)
    } else {
        -(-s).powf(p)
    }
}

/// Right-hand side `u^p + M|∇u|^q` at one node.
pub fn nonlinearity(params: &ProblemParams, u: f64, grad_norm: f64) -> f64 {
    power_source(u, params.p_f64()) + params.m() * grad_norm.powf(params.q_f64())
}

type SpaceTimeFn<'a> = &'a (dyn Fn(&Point, f64) -> f64 + Sync);

/// Additional source term and boundary values for manufactured solutions.
#[derive(Clone, Copy)]
pub struct Forcing<'a> {
    pub source: SpaceTimeFn<'a>,
    pub boundary: Option<SpaceTimeFn<'a>>,
}

/// Explicit Euler solver for `u_t − Δu = u^p + M|∇u|^q`.
#[derive(Debug, Clone)]
pub struct Solver {
    grid: Grid,
    params: ProblemParams,
    cfg: SolverConfig,
}

impl Solver {
    pub fn new(grid: &Grid, params: &ProblemParams, cfg: &SolverConfig) -> Result<Self> {
        let bound = SolverConfig::stability_bound(grid);
        if !(cfg.dt > 0.0) || cfg.dt > bound * (1.0 + 1e-12) {
            return Err(Error::Unstable { dt: cfg.dt, bound });
        }
        if !(cfg.t_final > 0.0) {
            return Err(Error::Config(format!("final time must be positive, got {}", cfg.t_final)));
        }
        if (cfg.boundary == BoundaryCondition::Periodic) != grid.is_periodic() {
            return Err(Error::InvalidGrid(
                "periodic boundary condition requires a periodic grid and vice versa".into(),
            ));
        }
        if cfg.snapshot_stride == 0 {
            return Err(Error::Config("snapshot stride must be positive".into()));
        }
        Ok(Self { grid: grid.clone(), params: *params, cfg: cfg.clone() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn params(&self) -> &ProblemParams {
        &self.params
    }
    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// One step of size `cfg.dt` with boundary values taken from `u` itself.
    pub fn step(&self, u: &Field) -> Result<StepOutcome> {
        self.advance(u, self.cfg.dt, None, None)
    }

    fn advance(
        &self,
        u: &Field,
        dt: f64,
        initial: Option<&Field>,
        forcing: Option<Forcing<'_>>,
    ) -> Result<StepOutcome> {
        let g = &self.grid;
        let t_new = u.t + dt;
        let mut out = vec![0.0; g.len()];
        let mut clamped = 0;
        let mut min_before = f64::INFINITY;
        let mut max_update: f64 = 0.0;
        let mut max_val = f64::NEG_INFINITY;
        for i in g.nodes() {
            let val = if g.kind(i) == NodeKind::Boundary {
                match (forcing.and_then(|f| f.boundary), self.cfg.boundary) {
                    (Some(b), _) => b(&g.coords(i), t_new),
                    (None, BoundaryCondition::DirichletZero) => 0.0,
                    (None, _) => initial.map(|f| f.values[i]).unwrap_or(u.values[i]),
                }
            } else {
                let mut lap = 0.0;
                let mut g2 = 0.0;
                for a in 0..g.dim() {
                    lap += d2_axis(g, &u.values, i, a);
                    let d = d_axis(g, &u.values, i, a);
                    g2 += d * d;
                }
                let mut rhs = lap + nonlinearity(&self.params, u.values[i], g2.sqrt());
                if let Some(f) = forcing {
                    rhs += (f.source)(&g.coords(i), u.t);
                }
                u.values[i] + dt * rhs
            };
            if !val.is_finite() {
                return Err(Error::NonFinite { time: t_new });
            }
            min_before = min_before.min(val);
            let val = if self.cfg.clamp_negative && val < 0.0 {
                clamped += 1;
                0.0
            } else {
                val
            };
            max_update = max_update.max((val - u.values[i]).abs());
            max_val = max_val.max(val);
            out[i] = val;
        }
        if max_val > self.cfg.blowup_threshold {
            return Err(Error::BlowUp { time: t_new, max: max_val });
        }
        Ok(StepOutcome {
            field: Field::new(out, t_new),
            clamped,
            min_before_clamp: min_before,
            max_update,
        })
    }

    pub fn solve(&self, u0: Field) -> Result<Trajectory> {
        self.run(u0, None)
    }

    /// Solve `u_t − Δu = u^p + M|∇u|^q + g` with optional boundary values.
    pub fn solve_forced(&self, u0: Field, forcing: Forcing<'_>) -> Result<Trajectory> {
        self.run(u0, Some(forcing))
    }

    fn run(&self, u0: Field, forcing: Option<Forcing<'_>>) -> Result<Trajectory> {
        if u0.values.len() != self.grid.len() {
            return Err(Error::InvalidGrid("initial field does not match grid".into()));
        }
        if !u0.all_finite() {
            return Err(Error::NonFinite { time: u0.t });
        }
        let t0 = u0.t;
        let n_steps = ((self.cfg.t_final / self.cfg.dt) - 1e-9).ceil().max(1.0) as usize;
        let dt = self.cfg.t_final / n_steps as f64;
        let stride = self.cfg.snapshot_stride;
        let initial = u0.clone();
        let mut snapshots = vec![u0.clone()];
        let mut current = u0;
        let mut clamp_count = 0;
        let mut min_pre_clamp = f64::INFINITY;
        let mut termination = Termination::CompletedT;
        for s in 1..=n_steps {
            match self.advance(&current, dt, Some(&initial), forcing) {
                Ok(mut out) => {
                    out.field.t = t0 + s as f64 * dt;
                    clamp_count += out.clamped;
                    min_pre_clamp = min_pre_clamp.min(out.min_before_clamp);
                    current = out.field;
                    let steady = self.cfg.steady_tol.is_some_and(|tol| out.max_update < tol);
                    if s % stride == 0 || s == n_steps || steady {
                        snapshots.push(current.clone());
                    }
                    if steady {
                        termination = Termination::Steady { at: current.t };
                        break;
                    }
                }
                Err(Error::BlowUp { time, .. }) => {
                    if snapshots.last().map(|f| f.t) != Some(current.t) {
                        snapshots.push(current.clone());
                    }
                    termination = Termination::BlowUp { detected_at: time, last_stable: current.t };
                    break;
                }
                Err(Error::NonFinite { time }) => {
                    termination = Termination::NonFinite { at: time };
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Trajectory {
            grid: self.grid.clone(),
            snapshots,
            termination,
            dt,
            clamp_count,
            min_pre_clamp,
        })
    }
}

/// Snapshots of a solve, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    snapshots: Vec<Field>,
    termination: Termination,
    dt: f64,
    clamp_count: usize,
    min_pre_clamp: f64,
}

impl Trajectory {
    /// Builds a trajectory from externally computed snapshots.
    pub fn from_snapshots(grid: Grid, snapshots: Vec<Field>, termination: Termination) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidGrid("trajectory needs at least one snapshot".into()));
        }
        if snapshots.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidGrid("snapshot times must be strictly increasing".into()));
        }
        if snapshots.iter().any(|f| f.values.len() != grid.len()) {
            return Err(Error::InvalidGrid("snapshot size does not match grid".into()));
        }
        let dt = if snapshots.len() > 1 { snapshots[1].t - snapshots[0].t } else { 0.0 };
        Ok(Self { grid, snapshots, termination, dt, clamp_count: 0, min_pre_clamp: f64::INFINITY })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }
    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
    pub fn termination(&self) -> Termination {
        self.termination
    }
    /// Solver time step (spacing of the first two snapshots for external data).
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }
    /// Smallest value produced by a step before clamping (`+∞` if none recorded).
    pub fn min_pre_clamp(&self) -> f64 {
        self.min_pre_clamp
    }
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|f| f.t).collect()
    }
    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("non-empty")
    }
    pub fn sup_series(&self) -> Vec<f64> {
        self.snapshots.iter().map(|f| f.max_over(&self.grid)).collect()
    }

    /// Index of the first snapshot with time `≥ t`.
    pub fn index_at_or_after(&self, t: f64) -> Option<usize> {
        self.snapshots.iter().position(|f| f.t >= t - 1e-12)
    }

    /// `u_t` at snapshot `index`: three-point formula on the (possibly uneven)
    /// snapshot times, one-sided at the ends.
    pub fn time_derivative(&self, index: usize) -> Result<(Field, DerivativeOrder)> {
        let n = self.snapshots.len();
        if n < 2 || index >= n {
            return Err(Error::OutOfWindow(format!(
                "time derivative at snapshot {index} of {n}"
            )));
        }
        let s = &self.snapshots;
        let t = s[index].t;
        if index == 0 || index == n - 1 {
            let (a, b) = if index == 0 { (&s[0], &s[1]) } else { (&s[n - 2], &s[n - 1]) };
            let dt = b.t - a.t;
            let values = a.values.iter().zip(&b.values).map(|(x, y)| (y - x) / dt).collect();
            return Ok((Field::new(values, t), DerivativeOrder::OneSided));
        }
        let (um, u0, up) = (&s[index - 1], &s[index], &s[index + 1]);
        let h1 = u0.t - um.t;
        let h2 = up.t - u0.t;
        let cm = -h2 / (h1 * (h1 + h2));
        let c0 = (h2 - h1) / (h1 * h2);
        let cp = h1 / (h2 * (h1 + h2));
        let values = (0..u0.values.len())
            .map(|i| cm * um.values[i] + c0 * u0.values[i] + cp * up.values[i])
            .collect();
        Ok((Field::new(values, t), DerivativeOrder::Central))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::InitialData;

    fn params(p: (i64, i64), q: (i64, i64), m: f64) -> ProblemParams {
        ProblemParams::from_parts(1, p, q, m).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::ball(1, &[0.0], 1.0, 0.05).unwrap();
        let cfg = SolverConfig::stable(&g, 0.1, BoundaryCondition::DirichletZero, 0.9);
        let s = Solver::new(&g, &params((3, 1), (3, 2), 1.0), &cfg).unwrap();
        let tr = s.solve(g.zeros(0.0)).unwrap();
        assert_eq!(tr.termination(), Termination::CompletedT);
        assert!(tr.snapshots().iter().all(|f| f.max_abs_over(&g) == 0.0));
        assert!((tr.last().t - 0.1).abs() < 1e-12);
    }

    #[test]
    fn constant_on_periodic_grid_follows_ode_step() {
        let g = Grid::periodic_segment(0.0, 8, 0.1).unwrap();
        let cfg = SolverConfig::stable(&g, 1.0, BoundaryCondition::Periodic, 0.5);
        let s = Solver::new(&g, &params((2, 1), (4, 3), 1.0), &cfg).unwrap();
        let c = 0.7;
        let out = s.step(&g.sample(0.0, |_| c)).unwrap();
        let expect = c + cfg.dt * c * c;
        for i in g.nodes() {
            assert!((out.field.values[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unstable_step() {
        let g = Grid::ball(1, &[0.0], 1.0, 0.1).unwrap();
        let mut cfg = SolverConfig::stable(&g, 1.0, BoundaryCondition::DirichletZero, 1.0);
        cfg.dt *= 1.01;
        assert!(matches!(
            Solver::new(&g, &params((2, 1), (3, 2), 1.0), &cfg),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn large_data_blows_up() {
        let g = Grid::ball(1, &[0.0], 1.0, 0.05).unwrap();
        let cfg = SolverConfig::stable(&g, 1.0, BoundaryCondition::DirichletZero, 0.9);
        let s = Solver::new(&g, &params((2, 1), (3, 2), 0.0), &cfg).unwrap();
        let tr = s.solve(InitialData::Constant { value: 20.0 }.field(&g)).unwrap();
        match tr.termination() {
            Termination::BlowUp { detected_at, last_stable } => {
                assert!(last_stable < detected_at);
                assert!((tr.last().t - last_stable).abs() < 1e-15);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn time_derivative_of_ode_solution() {
        // u(t) = (u0^{1−p} − (p−1)t)^{−1/(p−1)} sampled on a uniform grid in t
        let g = Grid::periodic_segment(0.0, 2, 0.1).unwrap();
        let (p, u0) = (3.0, 0.5_f64);
        let exact = |t: f64| (u0.powf(1.0 - p) - (p - 1.0) * t).powf(-1.0 / (p - 1.0));
        let deriv = |t: f64| exact(t).powf(p);
        let mut errs = Vec::new();
        for &dt in &[0.02_f64, 0.01] {
            let n = (0.4 / dt).round() as usize;
            let snaps: Vec<Field> =
                (0..=n).map(|i| g.sample(i as f64 * dt, |_| exact(i as f64 * dt))).collect();
            let tr = Trajectory::from_snapshots(g.clone(), snaps, Termination::CompletedT).unwrap();
            let (f, order) = tr.time_derivative(n / 2).unwrap();
            assert_eq!(order, DerivativeOrder::Central);
            errs.push((f.values[0] - deriv(0.2)).abs());
            assert_eq!(tr.time_derivative(0).unwrap().1, DerivativeOrder::OneSided);
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn rejects_non_increasing_times() {
        let g = Grid::periodic_segment(0.0, 2, 0.1).unwrap();
        let snaps = vec![g.zeros(0.0), g.zeros(0.0)];
        assert!(Trajectory::from_snapshots(g, snaps, Termination::CompletedT).is_err());
    }
}
