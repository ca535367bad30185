//! Hypothesis checks, fitted gradient bounds, the universal estimate and
//! desk-scale decay probes on solver output.

use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    gradient_norm, BoundaryCondition, Grid, InitialData, Solver, SolverConfig, Trajectory,
};
use crate::params::{
    default_upper_constant, m0_threshold, ProblemParams, Rational, Regime,
};
use crate::stats::{loglog_slope, LinearFit};

/// Right-hand sides of the pointwise gradient bounds, up to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum BoundTemplate {
    /// `R^{-1} + R^{-1/(q−1)} + t^{-1/q}`.
    Subcritical,
    /// `b(R^{-1} + R^{-(p+1)/(p−1)} + t^{-(p+1)/(2p)})`.
    Critical { b: f64 },
    /// `M^{-(p+1)/((p+1)q−2p)} + M^{-1/q}τ^{1/q} + R^{-1/(q−1)} + t^{-1/(2(q−1))}`.
    SupercriticalGeneral { tau: f64 },
    /// `R^{-1/(q−1)} + t^{-1/(2(q−1))}`.
    SupercriticalLarge,
    /// `d_P^{-2/(p−1)}` for `u + |∇u|^{2/(p+1)}`.
    Universal,
}

impl BoundTemplate {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Critical { .. } => "critical",
            Self::SupercriticalGeneral { .. } => "supercritical_general",
            Self::SupercriticalLarge => "supercritical_large",
            Self::Universal => "universal",
        }
    }

    pub fn regime(&self) -> Regime {
        match self {
            Self::Subcritical => Regime::Subcritical,
            Self::Critical { .. } | Self::Universal => Regime::Critical,
            Self::SupercriticalGeneral { .. } | Self::SupercriticalLarge => Regime::Supercritical,
        }
    }

    /// Template value at radius `r` and time `t > 0`.
    pub fn value(&self, params: &ProblemParams, r: f64, t: f64) -> f64 {
        let p = params.p_f64();
        let q = params.q_f64();
        let m = params.m();
        match *self {
            Self::Subcritical => r.recip() + r.powf(-1.0 / (q - 1.0)) + t.powf(-1.0 / q),
            Self::Critical { b } => {
                b * (r.recip() + r.powf(-(p + 1.0) / (p - 1.0)) + t.powf(-(p + 1.0) / (2.0 * p)))
            }
            Self::SupercriticalGeneral { tau } => {
                let d = (p + 1.0) * q - 2.0 * p;
                m.powf(-(p + 1.0) / d)
                    + m.powf(-1.0 / q) * tau.powf(1.0 / q)
                    + r.powf(-1.0 / (q - 1.0))
                    + t.powf(-1.0 / (2.0 * (q - 1.0)))
            }
            Self::SupercriticalLarge => r.powf(-1.0 / (q - 1.0)) + t.powf(-1.0 / (2.0 * (q - 1.0))),
            Self::Universal => f64::NAN,
        }
    }

    /// Exponent of `t` in the template.
    pub fn time_exponent(&self, params: &ProblemParams) -> f64 {
        let p = params.p_f64();
        let q = params.q_f64();
        match self {
            Self::Subcritical => -1.0 / q,
            Self::Critical { .. } => -(p + 1.0) / (2.0 * p),
            Self::SupercriticalGeneral { .. } | Self::SupercriticalLarge => -1.0 / (2.0 * (q - 1.0)),
            Self::Universal => -1.0 / (p - 1.0),
        }
    }

    fn check_regime(&self, params: &ProblemParams) -> Result<()> {
        let regime = params.regime();
        if regime != self.regime() {
            return Err(Error::TemplateMismatch {
                template: self.name().into(),
                regime: regime.to_string(),
            });
        }
        Ok(())
    }
}

/// Exact exponents `(1/q, 1/(q−1))` of the subcritical template and
/// `((p+1)/(2p), (p+1)/(p−1))` of the critical one.
pub fn template_exponents(p: Rational, q: Rational) -> [Rational; 4] {
    let one = Rational::one();
    [one / q, one / (q - one), (p + one) / (p * 2), (p + one) / (p - one)]
}

/// Thresholds used by [`check_hypotheses`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisOptions {
    /// `c_{N,p,q}`; `None` selects the default for the regime.
    pub constant: Option<f64>,
    /// Allowed `u_t` overshoot from discretisation.
    pub monotone_tol: f64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self { constant: None, monotone_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub template: String,
    /// Bound on `u` (upper, or lower for the large-data supercritical case).
    pub threshold: f64,
    /// `sup u` or `inf u` over the cylinder for `t ≥ dt`.
    pub observed: f64,
    /// Positive when the bound holds.
    pub bound_margin: f64,
    pub bound_pass: bool,
    /// Largest `u_t` over the cylinder for `t ≥ dt`.
    pub max_ut: f64,
    /// Upper bound imposed on `u_t`.
    pub tau: f64,
    pub monotone_pass: bool,
    /// `M ≥ M₀` (critical template only; true otherwise).
    pub coefficient_pass: bool,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.bound_pass && self.monotone_pass && self.coefficient_pass
    }
}

/// `c M^{2/(2p−(p+1)q)}` with `c` defaulting to the constant pinned by the
/// Bernstein argument.
pub fn subcritical_threshold(params: &ProblemParams, constant: Option<f64>) -> f64 {
    let (p, q) = (params.p_f64(), params.q_f64());
    let c = constant
        .or_else(|| default_upper_constant(params.dim(), p, q))
        .unwrap_or(f64::NAN);
    c * params.m().powf(2.0 / (2.0 * p - (p + 1.0) * q))
}

/// `c M^{-2/((p+1)q−2p)}` with `c` defaulting to 1.
pub fn supercritical_lower_threshold(params: &ProblemParams, constant: Option<f64>, tau: f64) -> f64 {
    let (p, q) = (params.p_f64(), params.q_f64());
    constant.unwrap_or(1.0) * (params.m().powf(-2.0 / ((p + 1.0) * q - 2.0 * p)) + tau.powf(1.0 / p))
}

/// Largest `u_t` over all snapshots after the first.
pub fn max_time_derivative(traj: &Trajectory) -> Result<f64> {
    let grid = traj.grid();
    let mut worst = f64::NEG_INFINITY;
    for k in 1..traj.len() {
        let (ut, _) = traj.time_derivative(k)?;
        worst = grid.nodes().map(|i| ut.values[i]).fold(worst, f64::max);
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

pub fn check_hypotheses(
    traj: &Trajectory,
    params: &ProblemParams,
    template: &BoundTemplate,
    opts: &HypothesisOptions,
) -> Result<HypothesisReport> {
    let grid = traj.grid();
    let later = &traj.snapshots()[1.min(traj.len() - 1)..];
    let sup = later.iter().map(|f| f.max_over(grid)).fold(f64::NEG_INFINITY, f64::max);
    let inf = later.iter().map(|f| f.min_over(grid)).fold(f64::INFINITY, f64::min);
    let max_ut = if traj.len() > 1 { max_time_derivative(traj)? } else { 0.0 };
    let mut tau = 0.0;
    let mut coefficient_pass = true;
    let (threshold, observed, margin) = match *template {
        BoundTemplate::Subcritical => {
            let th = subcritical_threshold(params, opts.constant);
            (th, sup, th - sup)
        }
        BoundTemplate::Critical { b } => {
            coefficient_pass = params.m() >= m0_threshold(params.dim(), params.p_f64());
            (b, sup, b - sup)
        }
        BoundTemplate::SupercriticalGeneral { tau: t } => {
            tau = t;
            (f64::INFINITY, sup, f64::INFINITY)
        }
        BoundTemplate::SupercriticalLarge => {
            let th = supercritical_lower_threshold(params, opts.constant, 0.0);
            (th, inf, inf - th)
        }
        BoundTemplate::Universal => (f64::INFINITY, sup, f64::INFINITY),
    };
    Ok(HypothesisReport {
        template: template.name().into(),
        threshold,
        observed,
        bound_margin: margin,
        bound_pass: margin >= 0.0,
        max_ut,
        tau,
        monotone_pass: max_ut <= tau + opts.monotone_tol,
        coefficient_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub template: String,
    pub radius: f64,
    /// Smallest constant for which the bound holds on all samples.
    pub fitted_c: f64,
    /// Samples exceeding the bound at `fitted_c` (0 by construction).
    pub violation_count: usize,
    pub samples: usize,
    /// Fit of `ln sup|∇u|` against `ln t` over `time_window`.
    pub time_fit: LinearFit,
    pub time_window: (f64, f64),
}

/// Nodes with `|x − x₀| ≤ r`.
fn nodes_within(grid: &Grid, r: f64) -> Vec<usize> {
    grid.nodes().filter(|&i| grid.dist_to_center(&grid.coords(i)) <= r + 1e-12).collect()
}

/// `sup_{|x−x₀| ≤ R/2} |∇u|` per snapshot.
pub fn inner_gradient_sup(traj: &Trajectory) -> Vec<f64> {
    let grid = traj.grid();
    let inner = nodes_within(grid, grid.radius() / 2.0);
    traj.snapshots()
        .iter()
        .map(|f| {
            let g = gradient_norm(grid, f);
            inner.iter().map(|&i| g.values[i]).fold(0.0, f64::max)
        })
        .collect()
}

/// Fitted constant of `|∇u| ≤ C·template(R, t)` on `Q_{T,R/2}`.
///
/// `time_window` defaults to the first decade `[t₁, 10t₁]` after the initial
/// snapshot.
pub fn fit_bound(
    traj: &Trajectory,
    params: &ProblemParams,
    template: &BoundTemplate,
    time_window: Option<(f64, f64)>,
) -> Result<EstimateReport> {
    template.check_regime(params)?;
    if matches!(template, BoundTemplate::Universal) {
        return Err(Error::Domain("use universal_bound_check for the universal form".into()));
    }
    let grid = traj.grid();
    let r = grid.radius();
    let inner = nodes_within(grid, r / 2.0);
    let mut ratios = Vec::new();
    for f in traj.snapshots().iter().filter(|f| f.t > 0.0) {
        let g = gradient_norm(grid, f);
        let tv = template.value(params, r, f.t);
        for &i in &inner {
            ratios.push((g.values[i], tv));
        }
    }
    let fitted_c = ratios.iter().map(|(g, t)| g / t).fold(0.0, f64::max);
    let violation_count = ratios.iter().filter(|(g, t)| *g > fitted_c * t * (1.0 + 1e-12)).count();
    let times = traj.times();
    let sups = inner_gradient_sup(traj);
    let t1 = times.iter().copied().find(|&t| t > 0.0).unwrap_or(0.0);
    let window = time_window.unwrap_or((t1, 10.0 * t1));
    let (ts, gs): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&sups)
        .filter(|(t, _)| **t >= window.0 - 1e-15 && **t <= window.1 + 1e-15 && **t > 0.0)
        .map(|(t, g)| (*t, *g))
        .unzip();
    Ok(EstimateReport {
        template: template.name().into(),
        radius: r,
        fitted_c,
        violation_count,
        samples: ratios.len(),
        time_fit: loglog_slope(&ts, &gs),
        time_window: window,
    })
}

/// Ratio of the larger to the smaller fitted constant.
pub fn stability_ratio(a: &EstimateReport, b: &EstimateReport) -> f64 {
    let (lo, hi) = if a.fitted_c <= b.fitted_c { (a.fitted_c, b.fitted_c) } else { (b.fitted_c, a.fitted_c) };
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniversalReport {
    /// Smallest `C` with `u + |∇u|^{2/(p+1)} ≤ C d_P^{-2/(p−1)}`.
    pub fitted_c: f64,
    pub violation_count: usize,
    pub samples: usize,
    /// `C d_P^{-2/(p−1)} / (u + |∇u|^{2/(p+1)})` at the centre, mid-time.
    pub centre_margin: f64,
    /// Fit of `ln sup_x (u + |∇u|^{2/(p+1)})` against `ln t` on the earliest decade.
    pub envelope_fit: LinearFit,
}

/// Parabolic distance from `(x, t)` to the boundary of `B(x₀,R) × (0,T)`.
pub fn parabolic_boundary_distance(grid: &Grid, node: usize, t: f64, t_final: f64) -> f64 {
    grid.dist_to_boundary(node).min(t.max(0.0).sqrt()).min((t_final - t).max(0.0).sqrt())
}

/// Fits the universal estimate on a Dirichlet run over the grid ball.
pub fn universal_bound_check(traj: &Trajectory, params: &ProblemParams) -> Result<UniversalReport> {
    BoundTemplate::Universal.check_regime(params)?;
    let grid = traj.grid();
    let p = params.p_f64();
    let t_final = traj.last().t;
    let centre = grid.nearest_node(&grid.center()[..grid.dim()]);
    let mut samples = Vec::new();
    let mut envelope = Vec::new();
    let mut centre_mid: Option<(f64, f64)> = None;
    let mut best_mid = f64::INFINITY;
    for f in traj.snapshots() {
        if f.t <= 0.0 || f.t >= t_final {
            continue;
        }
        let g = gradient_norm(grid, f);
        let mut sup_lhs: f64 = 0.0;
        for i in grid.nodes() {
            let d = parabolic_boundary_distance(grid, i, f.t, t_final);
            if d <= 0.0 {
                continue;
            }
            let lhs = f.values[i] + g.values[i].powf(2.0 / (p + 1.0));
            let env = d.powf(-2.0 / (p - 1.0));
            samples.push((lhs, env));
            sup_lhs = sup_lhs.max(lhs);
            if Some(i) == centre && (f.t - 0.5 * t_final).abs() < best_mid {
                best_mid = (f.t - 0.5 * t_final).abs();
                centre_mid = Some((lhs, env));
            }
        }
        envelope.push((f.t, sup_lhs));
    }
    let fitted_c = samples.iter().map(|(l, e)| l / e).fold(0.0, f64::max);
    let violation_count = samples.iter().filter(|(l, e)| *l > fitted_c * e * (1.0 + 1e-12)).count();
    let centre_margin = match centre_mid {
        Some((l, e)) if l > 0.0 => fitted_c * e / l,
        _ => f64::INFINITY,
    };
    let t1 = envelope.first().map(|e| e.0).unwrap_or(0.0);
    let (ts, ls): (Vec<f64>, Vec<f64>) =
        envelope.iter().filter(|(t, _)| *t <= 10.0 * t1).copied().unzip();
    Ok(UniversalReport {
        fitted_c,
        violation_count,
        samples: samples.len(),
        centre_margin,
        envelope_fit: loglog_slope(&ts, &ls),
    })
}

/// Ratio of the larger to the smaller fitted universal constant.
pub fn universality_ratio(a: &UniversalReport, b: &UniversalReport) -> f64 {
    let (lo, hi) = if a.fitted_c <= b.fitted_c { (a.fitted_c, b.fitted_c) } else { (b.fitted_c, a.fitted_c) };
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decaying,
    Stagnant,
    Growing,
    NotApplicable,
}

/// A Dirichlet-zero run on `B(0,R) × (0,T)` used as a finite proxy for an
/// ancient solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub params: ProblemParams,
    pub radius: f64,
    pub horizon: f64,
    pub h: f64,
    pub data: InitialData,
    /// `c_{N,p,q}` of the bound hypothesis (regime default when `None`).
    pub constant: Option<f64>,
    /// Allowed `u_t`, relative to `sup u₀`.
    pub monotone_rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub regime: Regime,
    pub radius: f64,
    pub horizon: f64,
    pub sup_initial: f64,
    pub sup_final: f64,
    pub ratio: f64,
    pub trend: Trend,
    pub max_ut: f64,
    pub note: String,
}

/// Ratio threshold below which a run is classed as decaying.
pub const DECAY_RATIO: f64 = 0.5;

pub fn liouville_probe(cfg: &ProbeConfig) -> Result<ProbeReport> {
    let params = &cfg.params;
    let regime = params.regime();
    let dim = params.dim();
    if dim > 2 {
        return Err(Error::InvalidGrid(format!("probes run in 1D or 2D, got N = {dim}")));
    }
    let grid = Grid::ball(dim, &vec![0.0; dim], cfg.radius, cfg.h)?;
    let u0 = cfg.data.field(&grid);
    let sup0 = u0.max_over(&grid);
    let not_applicable = |note: String| ProbeReport {
        regime,
        radius: cfg.radius,
        horizon: cfg.horizon,
        sup_initial: sup0,
        sup_final: f64::NAN,
        ratio: f64::NAN,
        trend: Trend::NotApplicable,
        max_ut: f64::NAN,
        note,
    };
    match regime {
        Regime::Subcritical => {
            let th = subcritical_threshold(params, cfg.constant);
            if sup0 > th {
                return Ok(not_applicable(format!("sup u0 = {sup0:.3e} exceeds bound {th:.3e}")));
            }
        }
        Regime::Critical => {
            let m0 = m0_threshold(dim, params.p_f64());
            if params.m() < m0 {
                return Ok(not_applicable(format!("M = {} below M0 = {m0:.4}", params.m())));
            }
        }
        Regime::Supercritical => {
            let th = supercritical_lower_threshold(params, cfg.constant, 0.0);
            let inf0 = u0.min_over(&grid);
            if inf0 < th {
                return Ok(not_applicable(format!(
                    "inf u0 = {inf0:.3e} below the lower bound {th:.3e}"
                )));
            }
        }
    }
    let sc = SolverConfig::stable(&grid, cfg.horizon, BoundaryCondition::DirichletZero, 0.9);
    let traj = Solver::new(&grid, params, &sc)?.solve(u0)?;
    if traj.termination().is_blowup() {
        return Ok(ProbeReport {
            regime,
            radius: cfg.radius,
            horizon: cfg.horizon,
            sup_initial: sup0,
            sup_final: f64::INFINITY,
            ratio: f64::INFINITY,
            trend: Trend::Growing,
            max_ut: f64::INFINITY,
            note: "blow-up".into(),
        });
    }
    let max_ut = max_time_derivative(&traj)?;
    if max_ut > cfg.monotone_rel_tol * sup0 {
        return Err(Error::HypothesisViolated(format!(
            "u_t reaches {max_ut:.3e} (allowed {:.3e})",
            cfg.monotone_rel_tol * sup0
        )));
    }
    let sup_final = traj.last().max_over(&grid);
    let ratio = if sup0 > 0.0 { sup_final / sup0 } else { 0.0 };
    let trend = if ratio < DECAY_RATIO {
        Trend::Decaying
    } else if ratio <= 1.0 {
        Trend::Stagnant
    } else {
        Trend::Growing
    };
    Ok(ProbeReport {
        regime,
        radius: cfg.radius,
        horizon: cfg.horizon,
        sup_initial: sup0,
        sup_final,
        ratio,
        trend,
        max_ut,
        note: String::new(),
    })
}

/// Superharmonic data `A[(1 − r²/R²) + 2 ln((R²+1)/(r²+1))]` used by the probes.
pub fn probe_data(amplitude: f64) -> InitialData {
    InitialData::LogPeak { amplitude, beta: 2.0, eps: 1.0 }
}

/// Upper bound on the blow-up time of `u_t = Δu + u^p` on `(−R, R)` with zero
/// boundary values and data whose first-eigenfunction average is `a0`:
/// `ln(a0^{p−1}/(a0^{p−1} − λ₁)) / ((p−1)λ₁)`, `λ₁ = (π/2R)²`.
/// Infinite when `a0^{p−1} ≤ λ₁`.
pub fn eigenfunction_blowup_deadline(p: f64, a0: f64, radius: f64) -> f64 {
    let lambda1 = (std::f64::consts::PI / (2.0 * radius)).powi(2);
    let ap = a0.powf(p - 1.0);
    if ap <= lambda1 {
        return f64::INFINITY;
    }
    (ap / (ap - lambda1)).ln() / ((p - 1.0) * lambda1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupControl {
    pub detected_at: Option<f64>,
    pub deadline: f64,
    pub fired_in_time: bool,
}

/// Runs `u_t = Δu + u^p` in 1D on `(−R, R)` from constant data `value`.
pub fn blowup_control(p: Rational, value: f64, radius: f64, h: f64) -> Result<BlowupControl> {
    let params = ProblemParams::new(1, p, Rational::new(3, 2), 0.0)?;
    let grid = Grid::ball(1, &[0.0], radius, h)?;
    let deadline = eigenfunction_blowup_deadline(params.p_f64(), value, radius);
    let horizon = if deadline.is_finite() { 2.0 * deadline } else { 10.0 };
    let sc = SolverConfig::stable(&grid, horizon, BoundaryCondition::DirichletZero, 0.9).with_stride(64);
    let traj = Solver::new(&grid, &params, &sc)?.solve(InitialData::Constant { value }.field(&grid))?;
    let detected_at = match traj.termination() {
        crate::grid::Termination::BlowUp { detected_at, .. } => Some(detected_at),
        _ => None,
    };
    Ok(BlowupControl {
        detected_at,
        deadline,
        fired_in_time: detected_at.is_some_and(|t| t <= deadline),
    })
}
