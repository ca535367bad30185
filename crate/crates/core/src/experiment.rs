//! TOML experiment configuration and the check pipeline behind the CLI.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::bernstein::{
    bochner_residual, gamma_identity_residual, lemma_sweep, transform, AuxiliaryFunction, Cutoff, LemmaOptions,
    DEFAULT_C0,
};
use crate::doubling::{
    find_doubling_point, general_f_limit, grid_instance, random_instance, rescaling_frame, DoublingInstance,
    Metric,
};
use crate::error::{Error, Result};
use crate::estimates::{
    check_hypotheses, fit_bound, inner_gradient_sup, liouville_probe, max_time_derivative, probe_data,
    universal_bound_check, BoundTemplate, HypothesisOptions, ProbeConfig,
};
use crate::grid::{
    gradient_norm, rescaling_residual, write_trajectory, BoundaryCondition, Grid, InitialData, Solver,
    SolverConfig, Termination, TimeWindow, Trajectory,
};
use crate::integral::{
    admissible_k, default_alpha_bar, random_souplet_suite, space_time_quantities, verify_space_time_inequality,
    verify_scaling_decay, ScalingRun, SpaceTimeBump,
};
use crate::params::{
    bernstein_gamma, default_upper_constant, parse_rational, ProblemParams, Regime,
};
use crate::report::{num, Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Classify,
    Solve,
    Bernstein,
    Integral,
    Estimates,
    Doubling,
    Rescaling,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Classify => "classify",
            Check::Solve => "solve",
            Check::Bernstein => "bernstein",
            Check::Integral => "integral",
            Check::Estimates => "estimates",
            Check::Doubling => "doubling",
            Check::Rescaling => "rescaling",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default = "one")]
    pub dim: usize,
    pub p: String,
    pub q: String,
    pub m: f64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub radius: f64,
    pub h: f64,
    pub t_final: f64,
    pub safety: f64,
    pub snapshot_stride: usize,
    pub boundary: BoundaryCondition,
    /// Write every snapshot of the `solve` check.
    pub export_snapshots: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            radius: 2.0,
            h: 0.01,
            t_final: 0.5,
            safety: 0.9,
            snapshot_stride: 10,
            boundary: BoundaryCondition::DirichletZero,
            export_snapshots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub p: Option<Vec<String>>,
    pub q: Option<Vec<String>>,
    pub m: Option<Vec<f64>>,
    pub radius: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BernsteinSection {
    pub c0: f64,
    pub cutoff_alpha: f64,
    pub cutoff_k: f64,
    /// Evaluate every `every`-th snapshot.
    pub every: usize,
    pub time_stride: usize,
    pub identity_samples: usize,
}

impl Default for BernsteinSection {
    fn default() -> Self {
        Self { c0: DEFAULT_C0, cutoff_alpha: 0.5, cutoff_k: 4.0, every: 5, time_stride: 4, identity_samples: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegralSection {
    pub fields: usize,
    pub cells: usize,
    pub theta: f64,
    pub thetas: Vec<f64>,
    /// Radii for the `∬u^{2p}` scaling fit; empty skips it.
    pub scaling_radii: Vec<f64>,
}

impl Default for IntegralSection {
    fn default() -> Self {
        Self { fields: 20, cells: 64, theta: 1e-3, thetas: vec![1e-1, 1e-2, 1e-3, 1e-4], scaling_radii: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DoublingSection {
    pub instances: usize,
    pub max_points: usize,
    pub k: f64,
    pub metric: Metric,
    /// `k` of the grid instance; a quarter of the largest `M dist(·, Γ)` when absent.
    pub grid_k: Option<f64>,
    /// Upper bound on space-time points of the grid instance.
    pub max_grid_points: usize,
    /// Instance stored as TOML; checked from every admissible start.
    pub fixture: Option<PathBuf>,
}

impl Default for DoublingSection {
    fn default() -> Self {
        Self { instances: 200, max_points: 60, k: 0.1, metric: Metric::Parabolic, grid_k: None, max_grid_points: 20_000, fixture: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesSection {
    /// `c_{N,p,q}`; regime default when absent.
    pub constant: Option<f64>,
    /// Run the decay probe at this radius (horizon = radius, h = 0.25).
    pub probe_radius: Option<f64>,
    pub probe_amplitude: f64,
}

impl Default for EstimatesSection {
    fn default() -> Self {
        Self { constant: None, probe_radius: None, probe_amplitude: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RescalingSection {
    pub lambdas: Vec<f64>,
    pub window: (f64, f64),
}

impl Default for RescalingSection {
    fn default() -> Self {
        Self { lambdas: vec![1.0, 2.0], window: (0.2, 0.8) }
    }
}

fn default_data() -> InitialData {
    InitialData::Paraboloid { amplitude: 0.0015 }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub problem: ProblemSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default = "default_data")]
    pub data: InitialData,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub bernstein: BernsteinSection,
    #[serde(default)]
    pub integral: IntegralSection,
    #[serde(default)]
    pub estimates: EstimatesSection,
    #[serde(default)]
    pub doubling: DoublingSection,
    #[serde(default)]
    pub rescaling: RescalingSection,
}

/// One point of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub params: ProblemParams,
    pub radius: f64,
}

impl SweepPoint {
    pub fn label(&self) -> String {
        format!(
            "p{}_q{}_m{}_r{}",
            self.params.p().to_string().replace('/', "over"),
            self.params.q().to_string().replace('/', "over"),
            self.params.m(),
            self.radius
        )
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        if let Some(s) = &self.sweep {
            let empty = s.p.as_ref().is_some_and(Vec::is_empty)
                || s.q.as_ref().is_some_and(Vec::is_empty)
                || s.m.as_ref().is_some_and(Vec::is_empty)
                || s.radius.as_ref().is_some_and(Vec::is_empty);
            if empty {
                return Err(Error::Config("sweep axes must be nonempty".into()));
            }
        }
        if !(self.grid.radius > 0.0 && self.grid.h > 0.0 && self.grid.t_final > 0.0) {
            return Err(Error::Config("grid radius, h and t_final must be positive".into()));
        }
        self.points().map(|_| ())
    }

    /// Cartesian product of the sweep axes, in axis order `p, q, M, R`.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        let sweep = self.sweep.clone().unwrap_or_default();
        let ps = sweep.p.unwrap_or_else(|| vec![self.problem.p.clone()]);
        let qs = sweep.q.unwrap_or_else(|| vec![self.problem.q.clone()]);
        let ms = sweep.m.unwrap_or_else(|| vec![self.problem.m]);
        let rs = sweep.radius.unwrap_or_else(|| vec![self.grid.radius]);
        let mut out = Vec::new();
        for p in &ps {
            let p = parse_rational(p).map_err(cfg_err)?;
            for q in &qs {
                let q = parse_rational(q).map_err(cfg_err)?;
                for &m in &ms {
                    let params = ProblemParams::new(self.problem.dim, p, q, m).map_err(cfg_err)?;
                    for &radius in &rs {
                        if !(radius > 0.0) {
                            return Err(Error::Config(format!("radius must be positive, got {radius}")));
                        }
                        out.push(SweepPoint { params, radius });
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn solve(&self, point: &SweepPoint) -> Result<Trajectory> {
        let dim = point.params.dim();
        let grid = Grid::ball(dim, &vec![0.0; dim], point.radius, self.grid.h)?;
        let cfg = SolverConfig::stable(&grid, self.grid.t_final, self.grid.boundary, self.grid.safety)
            .with_stride(self.grid.snapshot_stride);
        Solver::new(&grid, &point.params, &cfg)?.solve(self.data.field(&grid))
    }
}

/// Reports of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub label: String,
    pub reports: Vec<Report>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub points: Vec<PointOutcome>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.reports.iter().all(Report::passed))
    }

    /// Writes `<out>/<label>/<check>.txt` (plus tables) and `<out>/index.csv`.
    pub fn write(&self, out: &Path) -> Result<()> {
        if self.points.iter().all(|p| p.reports.is_empty()) {
            return Ok(());
        }
        let mut index = Table::new("index", &["point", "check", "hard_pass"]);
        for p in &self.points {
            for r in &p.reports {
                r.write(&out.join(&p.label))?;
                index.push(vec![p.label.clone(), r.check.clone(), r.passed().to_string()]);
            }
        }
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("index.csv"), index.to_csv())?;
        Ok(())
    }
}

/// Runs `checks` at every sweep point on a pool of `jobs` workers; output is
/// ordered by sweep point then check, independent of scheduling.
pub fn run_checks(cfg: &ExperimentConfig, checks: &[Check], jobs: usize) -> Result<RunOutcome> {
    let mut checks = checks.to_vec();
    checks.sort();
    checks.dedup();
    let points = cfg.points()?;
    if checks.is_empty() {
        return Ok(RunOutcome { points: Vec::new() });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let points = pool.install(|| {
        points
            .par_iter()
            .map(|pt| run_point(cfg, pt, &checks))
            .collect::<Vec<_>>()
    });
    Ok(RunOutcome { points })
}

fn run_point(cfg: &ExperimentConfig, point: &SweepPoint, checks: &[Check]) -> PointOutcome {
    let needs_traj = checks.iter().any(|c| !matches!(c, Check::Classify));
    let traj = if needs_traj { Some(cfg.solve(point)) } else { None };
    let reports = checks
        .iter()
        .map(|&c| {
            let res = match (c, &traj) {
                (Check::Classify, _) => Ok(classify_report(&point.params)),
                (_, Some(Err(e))) => Err(Error::Config(format!("solve failed: {e}"))),
                (Check::Solve, Some(Ok(t))) => solve_report(cfg, t),
                (Check::Bernstein, Some(Ok(t))) => bernstein_report(cfg, &point.params, t),
                (Check::Integral, Some(Ok(t))) => integral_report(cfg, &point.params, t),
                (Check::Estimates, Some(Ok(t))) => estimates_report(cfg, &point.params, t),
                (Check::Doubling, Some(Ok(t))) => doubling_report(cfg, &point.params, t),
                (Check::Rescaling, Some(Ok(t))) => rescaling_report(cfg, &point.params, t),
                (_, None) => unreachable!("trajectory computed for every non-classify check"),
            };
            res.unwrap_or_else(|e| {
                let mut r = Report::new(c.name());
                r.field("error", e.to_string().replace('\n', " "));
                r.invariant("completed", false);
                r
            })
        })
        .collect();
    PointOutcome { label: point.label(), reports }
}

fn params_fields(r: &mut Report, params: &ProblemParams) {
    r.field("dim", params.dim())
        .field("p", params.p())
        .field("q", params.q())
        .float("m", params.m())
        .field("regime", params.regime());
}

pub fn classify_report(params: &ProblemParams) -> Report {
    let e = params.exponents();
    let mut r = Report::new("classify");
    params_fields(&mut r, params);
    r.field("q_c", e.q_c)
        .field("p_s", e.p_s)
        .field("p_b", e.p_b)
        .float("m0", e.m0)
        .float("gamma", e.gamma);
    let c = default_upper_constant(params.dim(), params.p_f64(), params.q_f64());
    r.float("default_constant", c.unwrap_or(f64::NAN));
    r
}

fn solve_report(cfg: &ExperimentConfig, traj: &Trajectory) -> Result<Report> {
    let mut r = Report::new("solve");
    let grid = traj.grid();
    r.float("h", grid.h())
        .float("dt", traj.dt())
        .field("snapshots", traj.len())
        .field("termination", traj.termination().label())
        .field("clamp_count", traj.clamp_count())
        .float("min_pre_clamp", traj.min_pre_clamp());
    r.invariant("finite", !matches!(traj.termination(), Termination::NonFinite { .. }));
    let mut t = Table::new("series", &["t", "sup_u", "sup_grad_u"]);
    for f in traj.snapshots() {
        let g = gradient_norm(grid, f);
        t.push(vec![num(f.t), num(f.max_over(grid)), num(g.max_over(grid))]);
    }
    r.tables.push(t);
    if cfg.grid.export_snapshots {
        if let Some(out) = &cfg.out {
            write_trajectory(traj, &out.join("snapshots"))?;
        }
    }
    Ok(r)
}

fn bernstein_report(cfg: &ExperimentConfig, params: &ProblemParams, traj: &Trajectory) -> Result<Report> {
    let b = &cfg.bernstein;
    let mut r = Report::new("bernstein");
    params_fields(&mut r, params);
    let grid = traj.grid();
    let sup = traj.snapshots().iter().map(|f| f.max_over(grid)).fold(0.0, f64::max);
    r.float("sup_u", sup);
    if !(sup > 0.0) || traj.termination().is_blowup() {
        r.field("status", "skipped: trivial or blown-up trajectory");
        return Ok(r);
    }
    let f = AuxiliaryFunction::for_params(params, sup)?;
    let samples: Vec<f64> =
        (0..b.identity_samples).map(|i| sup * (i as f64 + 0.5) / b.identity_samples as f64).collect();
    let id = gamma_identity_residual(&f, params.dim(), params.q_f64(), &samples)?;
    r.float("gamma", bernstein_gamma(params.dim(), params.q_f64()))
        .float("identity_residual_abs", id.absolute)
        .float("identity_residual_rel", id.relative);
    r.invariant("identity_holds", id.relative < 1e-12);
    let v = transform(grid, traj.last(), &f)?;
    r.float("bochner_residual", bochner_residual(grid, &v));
    let hyp = if params.regime() == Regime::Subcritical {
        let h = check_hypotheses(traj, params, &BoundTemplate::Subcritical, &HypothesisOptions::default())?;
        r.float("hypothesis_threshold", h.threshold).float("max_ut", h.max_ut);
        h.all_pass()
    } else {
        false
    };
    r.field("hypotheses_pass", hyp);
    let cutoff = Cutoff::on_grid(grid, b.cutoff_alpha, b.cutoff_k)?;
    let opts = LemmaOptions { time_stride: b.time_stride, ..LemmaOptions::default() };
    let sweep = lemma_sweep(traj, &f, &cutoff, params, &opts, None, b.c0, b.every)?;
    r.float("c0", sweep.c0)
        .float("tolerance", sweep.tolerance)
        .field("snapshots", sweep.snapshots)
        .field("included", sweep.included)
        .field("excluded_small_gradient", sweep.excluded_small_gradient)
        .field("violations", sweep.violations)
        .float("worst_relative_residual", sweep.worst_relative);
    if hyp {
        r.invariant("lemma_holds", sweep.violations == 0);
    }
    let mut t = Table::new("residuals", &["t", "included", "scale", "max_residual"]);
    for rep in &sweep.reports {
        t.push(vec![num(rep.t), rep.included.to_string(), num(rep.scale), num(rep.max_residual)]);
    }
    r.tables.push(t);
    Ok(r)
}

fn integral_report(cfg: &ExperimentConfig, params: &ProblemParams, traj: &Trajectory) -> Result<Report> {
    let ic = &cfg.integral;
    let mut r = Report::new("integral");
    params_fields(&mut r, params);
    let window = match admissible_k(params.dim(), params.p()) {
        Ok(w) => w,
        Err(e) => {
            r.field("status", format!("skipped: {e}"));
            return Ok(r);
        }
    };
    r.float("k_lower", window.lower).float("k_upper", window.upper);
    let suite = random_souplet_suite(params.dim().min(2), params.p(), ic.fields, cfg.seed, ic.cells)?;
    let mut t = Table::new("spatial", &["k", "lhs", "rhs", "margin", "tolerance", "oracle_rel_diff"]);
    for c in &suite {
        t.push(vec![
            num(c.coefficients.k),
            num(c.lhs),
            num(c.rhs),
            num(c.margin),
            num(c.tolerance),
            num(c.oracle_rel_diff),
        ]);
    }
    r.tables.push(t);
    r.field("spatial_cases", suite.len());
    r.invariant("spatial_holds", suite.iter().all(|c| c.passed));
    let grid = traj.grid();
    let t_end = traj.last().t;
    let radius = (0.5 * grid.radius()).min(0.95 * (0.5 * t_end).sqrt());
    let phi = SpaceTimeBump::new(
        params.dim(),
        &vec![0.0; params.dim()],
        0.5 * t_end,
        radius,
        default_alpha_bar(params.p_f64()),
    )?;
    let k = window.default_k();
    let c = verify_space_time_inequality(traj, ic.theta, &phi, params, k)?;
    r.float("k", k)
        .float("theta", ic.theta)
        .float("test_radius", radius)
        .float("lhs", c.lhs)
        .float("rhs", c.rhs)
        .float("rhs_sharp", c.rhs_sharp)
        .float("constant", c.constant)
        .float("margin", c.margin)
        .float("subsample_rel_diff", c.subsample_rel_diff);
    r.invariant("space_time_holds", c.passed);
    let mut th = Table::new("theta", &["theta", "i", "l", "g", "f_theta"]);
    for &theta in &ic.thetas {
        let q = space_time_quantities(traj, theta, &phi, params)?;
        th.push(vec![num(theta), num(q.i), num(q.l), num(q.g), num(q.f_theta_integral)]);
    }
    r.tables.push(th);
    if !ic.scaling_radii.is_empty() {
        let rep = verify_scaling_decay(params, &ic.scaling_radii, &ScalingRun::default())?;
        r.float("scaling_predicted", rep.predicted);
        r.float("scaling_slope", rep.fit.map_or(f64::NAN, |f| f.slope));
        let mut st = Table::new("scaling", &["radius", "integral"]);
        for (a, b) in rep.radii.iter().zip(&rep.integrals) {
            st.push(vec![num(*a), num(*b)]);
        }
        r.tables.push(st);
    }
    Ok(r)
}

fn estimates_report(cfg: &ExperimentConfig, params: &ProblemParams, traj: &Trajectory) -> Result<Report> {
    let mut r = Report::new("estimates");
    params_fields(&mut r, params);
    let grid = traj.grid();
    let template = match params.regime() {
        Regime::Subcritical => BoundTemplate::Subcritical,
        Regime::Critical => {
            let b = traj.snapshots().iter().map(|f| f.max_over(grid)).fold(0.0, f64::max);
            BoundTemplate::Critical { b }
        }
        Regime::Supercritical => BoundTemplate::SupercriticalGeneral { tau: max_time_derivative(traj)?.max(0.0) },
    };
    let opts = HypothesisOptions { constant: cfg.estimates.constant, ..HypothesisOptions::default() };
    let h = check_hypotheses(traj, params, &template, &opts)?;
    r.field("template", template.name())
        .float("threshold", h.threshold)
        .float("observed", h.observed)
        .field("bound_pass", h.bound_pass)
        .float("max_ut", h.max_ut)
        .field("monotone_pass", h.monotone_pass)
        .field("coefficient_pass", h.coefficient_pass);
    let fit = fit_bound(traj, params, &template, None)?;
    r.float("fitted_c", fit.fitted_c)
        .field("samples", fit.samples)
        .float("time_slope", fit.time_fit.slope)
        .float("time_exponent", template.time_exponent(params));
    r.invariant("fitted_bound_holds", fit.violation_count == 0);
    if params.regime() == Regime::Critical {
        let u = universal_bound_check(traj, params)?;
        r.float("universal_c", u.fitted_c).float("universal_centre_margin", u.centre_margin);
        r.invariant("universal_bound_holds", u.violation_count == 0);
    }
    let mut t = Table::new("gradient", &["t", "sup_inner_grad"]);
    for (tt, g) in traj.times().iter().zip(inner_gradient_sup(traj)) {
        t.push(vec![num(*tt), num(g)]);
    }
    r.tables.push(t);
    if let Some(radius) = cfg.estimates.probe_radius {
        let probe = liouville_probe(&ProbeConfig {
            params: *params,
            radius,
            horizon: radius,
            h: 0.25,
            data: probe_data(cfg.estimates.probe_amplitude),
            constant: cfg.estimates.constant,
            monotone_rel_tol: 1e-6,
        });
        match probe {
            Ok(p) => {
                r.float("probe_ratio", p.ratio).field("probe_trend", format!("{:?}", p.trend));
            }
            Err(e) => {
                r.field("probe_status", e.to_string());
            }
        }
    }
    Ok(r)
}

fn doubling_report(cfg: &ExperimentConfig, params: &ProblemParams, traj: &Trajectory) -> Result<Report> {
    let d = &cfg.doubling;
    let mut r = Report::new("doubling");
    params_fields(&mut r, params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut starts_total, mut certified, mut declared, mut within_bound) = (0usize, 0usize, 0usize, true);
    let mut consistent = true;
    for idx in 0..d.instances {
        let n = 2 + idx % d.max_points.saturating_sub(1).max(1);
        let inst = random_instance(&mut rng, n, 2, 0.3, d.k, d.metric);
        let admissible = inst.admissible_starts();
        for i in (0..inst.points.len()).filter(|&i| inst.in_d(i)) {
            starts_total += 1;
            match (find_doubling_point(&inst, i), admissible.contains(&i)) {
                (Ok(res), true) => {
                    certified += res.certificate.holds() as usize;
                    within_bound &= res.hops <= res.hop_bound;
                }
                (Err(Error::HypothesisFails { .. }), false) => declared += 1,
                (Err(e @ Error::NonTermination { .. }), _) => return Err(e),
                _ => consistent = false,
            }
        }
    }
    r.field("instances", d.instances)
        .field("starts", starts_total)
        .field("certified", certified)
        .field("hypothesis_failing_starts", declared);
    r.invariant("all_certified", consistent && certified + declared == starts_total);
    r.invariant("hops_within_bound", within_bound);
    if let Some(path) = &d.fixture {
        let inst = DoublingInstance::from_toml(&std::fs::read_to_string(path)?)?;
        let (ok, n) = check_fixture(&inst)?;
        r.field("fixture_starts", n);
        r.invariant("fixture_certified", ok);
    }
    // subsample snapshots so the brute-force certificate stays cheap
    let nodes = traj.grid().node_count();
    let stride = (traj.len() * nodes).div_ceil(d.max_grid_points).max(1);
    let snaps: Vec<_> = traj.snapshots().iter().step_by(stride).cloned().collect();
    let traj = &Trajectory::from_snapshots(traj.grid().clone(), snaps, traj.termination())?;
    let mut inst = grid_instance(traj, params, 1.0, 1, d.metric)?;
    inst.k = d.grid_k.unwrap_or_else(|| 0.25 * inst.max_hypothesis_product());
    let starts = inst.admissible_starts();
    r.float("grid_k", inst.k).field("grid_points", inst.points.len()).field("grid_admissible_starts", starts.len());
    if let Some(&s) = starts.first() {
        let res = find_doubling_point(&inst, s)?;
        r.field("grid_hops", res.hops).float("grid_m", res.m);
        r.invariant("grid_certified", res.certificate.holds());
        match rescaling_frame(traj, params, &res.point, 1.0 / res.m, inst.k) {
            Ok(frame) => {
                r.float("frame_normalization", frame.normalization)
                    .float("frame_max_m", frame.max_m)
                    .field("frame_samples", frame.samples);
                r.invariant("frame_normalized", (frame.normalization - 1.0).abs() <= 0.05);
                r.invariant("frame_bounded", frame.max_m <= 2.0 + 1e-9);
            }
            Err(e) => {
                r.field("frame_status", e.to_string());
            }
        }
    }
    let p = params.p_f64();
    let f = move |s: f64| s.powf(p) + s;
    let lim = general_f_limit(&f, p, &[1e1, 1e2, 1e3, 1e4, 1e5], 1.0);
    r.float("limit_estimate", lim.limit_estimate).field("limit_converging", lim.converging);
    Ok(r)
}

/// Runs the search from every admissible start of a fixture instance.
pub fn check_fixture(inst: &DoublingInstance) -> Result<(bool, usize)> {
    inst.validate()?;
    let starts = inst.admissible_starts();
    let mut ok = true;
    for &s in &starts {
        let res = find_doubling_point(inst, s)?;
        ok &= res.certificate.holds() && res.hops <= res.hop_bound;
    }
    Ok((ok, starts.len()))
}

fn rescaling_report(cfg: &ExperimentConfig, params: &ProblemParams, traj: &Trajectory) -> Result<Report> {
    let rc = &cfg.rescaling;
    let mut r = Report::new("rescaling");
    params_fields(&mut r, params);
    let window = TimeWindow::fraction(traj, rc.window.0, rc.window.1);
    let mut t = Table::new("residuals", &["lambda", "modified_m", "residual_modified", "residual_unmodified"]);
    let mut finite = true;
    for &lambda in &rc.lambdas {
        let rep = rescaling_residual(traj, lambda, params, window)?;
        finite &= rep.residual_modified.is_finite() && rep.residual_unmodified.is_finite();
        t.push(vec![num(lambda), num(rep.modified_m), num(rep.residual_modified), num(rep.residual_unmodified)]);
    }
    r.field("lambdas", rc.lambdas.len());
    r.invariant("residuals_finite", finite);
    r.tables.push(t);
    Ok(r)
}
