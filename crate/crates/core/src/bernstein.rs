//! Change of unknown `u = −f(v)`, the weight `η = ρ^k`, and the pointwise
//! differential inequality satisfied by `z = |∇v|² η`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    d_axis, gradient, hessian, hessian_norm, interior_depth, laplacian, Field, Forcing, Grid,
    Point, Solver, SolverConfig, Trajectory,
};
use crate::params::{bernstein_gamma, ProblemParams};

/// `f` with `u = −f(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AuxiliaryFunction {
    /// `f(s) = m(s+1)^γ − 2m`.
    PowerShift { m: f64, gamma: f64 },
    /// `f(s) = s`.
    Identity,
}

impl AuxiliaryFunction {
    pub fn power_shift(m: f64, gamma: f64) -> Result<Self> {
        if !(m > 0.0) || !(gamma > 1.0) || !m.is_finite() || !gamma.is_finite() {
            return Err(Error::Domain(format!("need m > 0 and γ > 1, got m = {m}, γ = {gamma}")));
        }
        Ok(Self::PowerShift { m, gamma })
    }

    /// Power-shift with `γ = 1 + N/(3(q−1))`.
    pub fn for_params(params: &ProblemParams, m: f64) -> Result<Self> {
        Self::power_shift(m, bernstein_gamma(params.dim(), params.q_f64()))
    }

    /// Right end `2^{1/γ} − 1` of the interval mapped onto `[−m, 0]`.
    pub fn domain_end(&self) -> f64 {
        match *self {
            Self::PowerShift { gamma, .. } => 2f64.powf(1.0 / gamma) - 1.0,
            Self::Identity => f64::INFINITY,
        }
    }

    pub fn f(&self, s: f64) -> f64 {
        match *self {
            Self::PowerShift { m, gamma } => m * (s + 1.0).powf(gamma) - 2.0 * m,
            Self::Identity => s,
        }
    }

    pub fn df(&self, s: f64) -> f64 {
        match *self {
            Self::PowerShift { m, gamma } => m * gamma * (s + 1.0).powf(gamma - 1.0),
            Self::Identity => 1.0,
        }
    }

    pub fn d2f(&self, s: f64) -> f64 {
        match *self {
            Self::PowerShift { m, gamma } => m * gamma * (gamma - 1.0) * (s + 1.0).powf(gamma - 2.0),
            Self::Identity => 0.0,
        }
    }

    pub fn d3f(&self, s: f64) -> f64 {
        match *self {
            Self::PowerShift { m, gamma } => {
                m * gamma * (gamma - 1.0) * (gamma - 2.0) * (s + 1.0).powf(gamma - 3.0)
            }
            Self::Identity => 0.0,
        }
    }

    /// `f″/f′`.
    pub fn ratio(&self, s: f64) -> f64 {
        self.d2f(s) / self.df(s)
    }

    /// `(f″/f′)′ = (f‴f′ − f″²)/f′²`.
    pub fn ratio_derivative(&self, s: f64) -> f64 {
        let d1 = self.df(s);
        let d2 = self.d2f(s);
        (self.d3f(s) * d1 - d2 * d2) / (d1 * d1)
    }

    /// `f⁻¹(y)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        match *self {
            Self::PowerShift { m, gamma } => {
                if !(y >= -m * (1.0 + 1e-12)) || !(y <= 0.0) {
                    return Err(Error::Range { value: -y, max: m });
                }
                let y = y.max(-m);
                Ok(((y + 2.0 * m) / m).powf(1.0 / gamma) - 1.0)
            }
            Self::Identity => Ok(y),
        }
    }
}

/// `v = f⁻¹(−u)` at every node of the set.
pub fn transform(grid: &Grid, u: &Field, f: &AuxiliaryFunction) -> Result<Field> {
    let mut values = vec![0.0; grid.len()];
    for i in grid.nodes() {
        values[i] = f.inverse(-u.values[i])?;
    }
    Ok(Field::new(values, u.t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub absolute: f64,
    /// Absolute residual divided by `|(f″/f′)′| + (3(q−1)/N)(f″/f′)²`.
    pub relative: f64,
}

/// Residual of `(f″/f′)′ + (3(q−1)/N)(f″/f′)² = 0` for the power-shift `f`
/// with exponent `gamma`, maximised over `samples`.
pub fn gamma_identity_residual(
    f: &AuxiliaryFunction,
    dim: usize,
    q: f64,
    samples: &[f64],
) -> Result<IdentityResidual> {
    if matches!(f, AuxiliaryFunction::Identity) {
        return Err(Error::Domain("identity is vacuous for f(s) = s (f″ ≡ 0)".into()));
    }
    let c = 3.0 * (q - 1.0) / dim as f64;
    let mut out = IdentityResidual { absolute: 0.0, relative: 0.0 };
    for &s in samples {
        let r = f.ratio(s);
        let dr = f.ratio_derivative(s);
        let res = (dr + c * r * r).abs();
        out.absolute = out.absolute.max(res);
        out.relative = out.relative.max(res / (dr.abs() + c * r * r));
    }
    Ok(out)
}

/// Value and analytic derivatives of the cutoff at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffValue {
    pub eta: f64,
    pub grad: Point,
    pub hess: [[f64; 2]; 2],
    /// `η⁻¹|∇η|²`, zero where `η = 0`.
    pub grad_sq_over_eta: f64,
}

/// `η = ρ^k`, `ρ = 1 − |x − x₀|²/R′²`, `R′ = 3R/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub dim: usize,
    pub center: Point,
    pub radius: f64,
    pub alpha: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffBounds {
    /// Smallest `C` with `|∇η| ≤ C R^{-1} η^α` on the sampled nodes.
    pub gradient_constant: f64,
    /// Smallest `C` with `|D²η| + η⁻¹|∇η|² ≤ C R^{-2} η^α`.
    pub hessian_constant: f64,
}

impl Cutoff {
    pub fn new(dim: usize, center: &[f64], radius: f64, alpha: f64, k: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("α must lie in (0,1), got {alpha}")));
        }
        if !(k >= 2.0 / (1.0 - alpha) - 1e-12) {
            return Err(Error::Domain(format!("k = {k} below 2/(1−α) = {}", 2.0 / (1.0 - alpha))));
        }
        if !(radius > 0.0) || center.len() != dim {
            return Err(Error::Domain("cutoff needs R > 0 and a centre of matching dimension".into()));
        }
        let mut c = [0.0; 2];
        c[..dim].copy_from_slice(center);
        Ok(Self { dim, center: c, radius, alpha, k })
    }

    /// Centred on the grid with the grid radius.
    pub fn on_grid(grid: &Grid, alpha: f64, k: f64) -> Result<Self> {
        Self::new(grid.dim(), &grid.center()[..grid.dim()], grid.radius(), alpha, k)
    }

    pub fn r_prime(&self) -> f64 {
        0.75 * self.radius
    }

    pub fn eval(&self, x: &Point) -> CutoffValue {
        let rp2 = self.r_prime().powi(2);
        let mut d = [0.0; 2];
        let mut r2 = 0.0;
        for a in 0..self.dim {
            d[a] = x[a] - self.center[a];
            r2 += d[a] * d[a];
        }
        let rho = 1.0 - r2 / rp2;
        if rho <= 0.0 {
            return CutoffValue { eta: 0.0, grad: [0.0; 2], hess: [[0.0; 2]; 2], grad_sq_over_eta: 0.0 };
        }
        let k = self.k;
        let grad_rho = [-2.0 * d[0] / rp2, -2.0 * d[1] / rp2];
        let g2 = grad_rho[0].powi(2) + grad_rho[1].powi(2);
        let eta = rho.powf(k);
        let c1 = k * rho.powf(k - 1.0);
        let c2 = k * (k - 1.0) * rho.powf(k - 2.0);
        let mut hess = [[0.0; 2]; 2];
        for a in 0..self.dim {
            for b in 0..self.dim {
                hess[a][b] = c2 * grad_rho[a] * grad_rho[b];
            }
            hess[a][a] += c1 * (-2.0 / rp2);
        }
        CutoffValue {
            eta,
            grad: [c1 * grad_rho[0], c1 * grad_rho[1]],
            hess,
            grad_sq_over_eta: k * k * rho.powf(k - 2.0) * g2,
        }
    }

    /// `η` sampled on the grid.
    pub fn field(&self, grid: &Grid) -> Field {
        grid.sample(0.0, |x| self.eval(x).eta)
    }

    /// Smallest constants in the two derivative bounds over nodes with `η > 0`.
    pub fn measure_bounds(&self, grid: &Grid) -> CutoffBounds {
        let r = self.radius;
        let mut out = CutoffBounds { gradient_constant: 0.0, hessian_constant: 0.0 };
        for i in grid.nodes() {
            let c = self.eval(&grid.coords(i));
            if c.eta <= 0.0 {
                continue;
            }
            let ea = c.eta.powf(self.alpha);
            let gn = (c.grad[0].powi(2) + c.grad[1].powi(2)).sqrt();
            out.gradient_constant = out.gradient_constant.max(gn * r / ea);
            let second = hessian_norm(&c.hess) + c.grad_sq_over_eta;
            out.hessian_constant = out.hessian_constant.max(second * r * r / ea);
        }
        out
    }
}

/// Max residual of `2∇v·∇(Δv) = Δw − 2|D²v|²`, `w = |∇v|²`, with discrete
/// operators, over nodes at interior depth ≥ 2.
pub fn bochner_residual(grid: &Grid, v: &Field) -> f64 {
    let grad = gradient(grid, v);
    let lap = laplacian(grid, v);
    let hess = hessian(grid, v);
    let w = Field::new(grad.iter().map(|g| g[0] * g[0] + g[1] * g[1]).collect(), v.t);
    let lap_w = laplacian(grid, &w);
    let mut worst: f64 = 0.0;
    for i in grid.nodes() {
        if interior_depth(grid, i) < 2 {
            continue;
        }
        let mut lhs = 0.0;
        for a in 0..grid.dim() {
            lhs += 2.0 * grad[i][a] * d_axis(grid, &lap.values, i, a);
        }
        let h = hessian_norm(&hess[i]);
        let rhs = lap_w.values[i] - 2.0 * h * h;
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Derived fields at one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinFields {
    pub v: Field,
    pub w: Field,
    pub z: Field,
    pub drift: Vec<Point>,
    /// `𝓛(z)` where evaluated, NaN elsewhere.
    pub lz: Field,
    /// Right side of the inequality where evaluated, NaN elsewhere.
    pub rhs: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaOptions {
    /// Nodes with `|∇u|` below this are excluded.
    pub grad_threshold: f64,
    /// Snapshot offset used for `∂_t z`.
    pub time_stride: usize,
    /// Constant multiplying `|∇η|²η⁻¹w`.
    pub c1: f64,
    /// Minimal interior depth of evaluation nodes.
    pub min_depth: usize,
    /// Largest admissible `u_t` when the monotonicity gate is on.
    pub monotone_tol: Option<f64>,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self { grad_threshold: 1e-8, time_stride: 4, c1: 4.0, min_depth: 2, monotone_tol: None }
    }
}

/// Result of evaluating `𝓛(z) − RHS` at one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub index: usize,
    pub t: f64,
    pub included: usize,
    pub excluded_small_gradient: usize,
    /// Largest `Σ|terms|` over included nodes.
    pub scale: f64,
    /// Largest `𝓛(z) − RHS` (positive values are violations before tolerance).
    pub max_residual: f64,
    /// Largest `|exact identity defect|`, relative to `scale` (manufactured runs only).
    pub identity_defect: f64,
}

struct Snapshot {
    v: Vec<f64>,
    w: Vec<f64>,
    z: Vec<f64>,
}

fn derive_snapshot(grid: &Grid, u: &Field, f: &AuxiliaryFunction, eta: &[f64]) -> Result<Snapshot> {
    let v = transform(grid, u, f)?;
    let g = gradient(grid, &v);
    let w: Vec<f64> = g.iter().map(|d| d[0] * d[0] + d[1] * d[1]).collect();
    let z = w.iter().zip(eta).map(|(a, b)| a * b).collect();
    Ok(Snapshot { v: v.values, w, z })
}

/// Source term `g` of a forced equation `u_t − Δu = u^p + M|∇u|^q + g`,
/// used to evaluate the exact identity on manufactured solutions.
pub type SourceTerm<'a> = &'a (dyn Fn(&Point, f64) -> (f64, Point) + Sync);

/// Evaluates `𝓛(z)` and the right side of the inequality at snapshot `index`.
///
/// `source`, when given, returns `(g, ∇g)` of a forcing term; the report then
/// also carries the defect of the exact identity
/// `𝓛(z) = η𝓝(w) + w𝓛(η) − 2∇w·∇η − 2|D²v|²η + ηE`.
pub fn operator_l_residual(
    traj: &Trajectory,
    f: &AuxiliaryFunction,
    cutoff: &Cutoff,
    params: &ProblemParams,
    index: usize,
    opts: &LemmaOptions,
    source: Option<SourceTerm<'_>>,
) -> Result<(BernsteinFields, LemmaReport)> {
    let grid = traj.grid();
    let snaps = traj.snapshots();
    let s = opts.time_stride.max(1);
    if index < s || index + s >= snaps.len() {
        return Err(Error::OutOfWindow(format!(
            "snapshot {index} lacks neighbours at offset {s} (have {})",
            snaps.len()
        )));
    }
    let u = &snaps[index];
    if let Some(tol) = opts.monotone_tol {
        let (ut, _) = traj.time_derivative(index)?;
        let worst = grid.nodes().map(|i| ut.values[i]).fold(f64::NEG_INFINITY, f64::max);
        if worst > tol {
            return Err(Error::HypothesisViolated(format!(
                "u_t reaches {worst:.3e} > {tol:.1e} at t = {}",
                u.t
            )));
        }
    }
    let cut: Vec<_> = (0..grid.len()).map(|i| cutoff.eval(&grid.coords(i))).collect();
    let eta: Vec<f64> = cut.iter().map(|c| c.eta).collect();
    let prev = derive_snapshot(grid, &snaps[index - s], f, &eta)?;
    let cur = derive_snapshot(grid, u, f, &eta)?;
    let next = derive_snapshot(grid, &snaps[index + s], f, &eta)?;
    let (tm, t0, tp) = (snaps[index - s].t, u.t, snaps[index + s].t);
    let (h1, h2) = (t0 - tm, tp - t0);
    let (cm, c0, cp) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));

    let v_field = Field::new(cur.v.clone(), t0);
    let grad_v = gradient(grid, &v_field);
    let hess_v = hessian(grid, &v_field);
    let z_field = Field::new(cur.z.clone(), t0);
    let lap_z = laplacian(grid, &z_field);
    let w_field = Field::new(cur.w.clone(), t0);
    let grad_w = gradient(grid, &w_field);

    let n = params.dim() as f64;
    let p = params.p_f64();
    let q = params.q_f64();
    let m = params.m();
    let mut lz = vec![f64::NAN; grid.len()];
    let mut rhs = vec![f64::NAN; grid.len()];
    let mut drift = vec![[0.0; 2]; grid.len()];
    let mut report = LemmaReport {
        index,
        t: t0,
        included: 0,
        excluded_small_gradient: 0,
        scale: 0.0,
        max_residual: f64::NEG_INFINITY,
        identity_defect: 0.0,
    };
    let mut defects = Vec::new();
    for i in grid.nodes() {
        if eta[i] <= 0.0 || interior_depth(grid, i) < opts.min_depth {
            continue;
        }
        let vi = cur.v[i];
        let fp = f.df(vi);
        let grad_u = fp * cur.w[i].sqrt();
        if grad_u < opts.grad_threshold {
            report.excluded_small_gradient += 1;
            continue;
        }
        let w = cur.w[i];
        let fpp = f.d2f(vi);
        let ratio = fpp / fp;
        let mf = -f.f(vi);
        let coef = q * m * fp.powf(q - 1.0) * w.powf((q - 2.0) / 2.0) - 2.0 * ratio;
        let h = [coef * grad_v[i][0], coef * grad_v[i][1]];
        drift[i] = h;
        let zt = cm * prev.z[i] + c0 * cur.z[i] + cp * next.z[i];
        let mut h_dot_grad_z = 0.0;
        for a in 0..grid.dim() {
            h_dot_grad_z += h[a] * d_axis(grid, &cur.z, i, a);
        }
        let l = zt - lap_z.values[i] + h_dot_grad_z;
        let c = &cut[i];
        let grad_eta = (c.grad[0].powi(2) + c.grad[1].powi(2)).sqrt();
        let d2v = hessian_norm(&hess_v[i]);
        let terms = [
            2.0 * p * mf.powf(p - 1.0) * w * eta[i],
            2.0 * fpp / (fp * fp) * mf.powf(p) * w * eta[i],
            2.0 * f.ratio_derivative(vi) * w * w * eta[i],
            -2.0 * (q - 1.0) * m * fp.powf(q - 2.0) * fpp * w.powf((q + 2.0) / 2.0) * eta[i],
            n.sqrt() * hessian_norm(&c.hess) * w,
            q * m * fp.powf(q - 1.0) * grad_eta * w.powf((q + 1.0) / 2.0),
            2.0 * ratio.abs() * grad_eta * w.powf(1.5),
            opts.c1 * c.grad_sq_over_eta * w,
            -d2v * d2v * eta[i],
        ];
        let r: f64 = terms.iter().sum();
        let scale = l.abs().max(terms.iter().map(|t| t.abs()).sum());
        lz[i] = l;
        rhs[i] = r;
        report.included += 1;
        report.scale = report.scale.max(scale);
        report.max_residual = report.max_residual.max(l - r);
        if let Some(src) = source {
            // exact identity with the forcing contribution to the w-equation
            let nw = terms[0] + terms[1] + terms[2] + terms[3];
            let lap_eta: f64 = (0..grid.dim()).map(|a| c.hess[a][a]).sum();
            let h_dot_grad_eta = h[0] * c.grad[0] + h[1] * c.grad[1];
            let w_l_eta = w * (-lap_eta + h_dot_grad_eta);
            let gw_ge = grad_w[i][0] * c.grad[0] + grad_w[i][1] * c.grad[1];
            let (gval, ggrad) = src(&grid.coords(i), t0);
            // u = −f(v): the source enters the v-equation as −g/f′
            let gv = ggrad[0] * grad_v[i][0] + ggrad[1] * grad_v[i][1];
            let ew = -2.0 * gv / fp + 2.0 * gval * fpp * w / (fp * fp);
            let exact = nw + w_l_eta - 2.0 * gw_ge - 2.0 * d2v * d2v * eta[i] + eta[i] * ew;
            defects.push((l - exact).abs());
        }
    }
    if report.included == 0 {
        report.max_residual = 0.0;
    }
    if report.scale > 0.0 {
        report.identity_defect = defects.iter().fold(0.0f64, |a, &b| a.max(b)) / report.scale;
    }
    Ok((
        BernsteinFields {
            v: v_field,
            w: w_field,
            z: z_field,
            drift,
            lz: Field::new(lz, t0),
            rhs: Field::new(rhs, t0),
        },
        report,
    ))
}

/// `−2(q−1)M(f′)^{q−2}f″w^{(q+2)/2}η` evaluated on given `v`, `w`, `η` values.
pub fn absorption_term(f: &AuxiliaryFunction, params: &ProblemParams, v: f64, w: f64, eta: f64) -> f64 {
    let q = params.q_f64();
    -2.0 * (q - 1.0) * params.m() * f.df(v).powf(q - 2.0) * f.d2f(v) * w.powf((q + 2.0) / 2.0) * eta
}

/// Default constant in the tolerance `C₀(h² + dt)` relative to the term scale.
pub const DEFAULT_C0: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSweep {
    pub c0: f64,
    /// `C₀(h² + dt)`, relative to the per-snapshot term scale.
    pub tolerance: f64,
    pub snapshots: usize,
    pub included: usize,
    pub excluded_small_gradient: usize,
    /// Included nodes with `𝓛(z) − RHS > tolerance · scale`.
    pub violations: usize,
    /// Largest `(𝓛(z) − RHS)/scale`.
    pub worst_relative: f64,
    /// Largest relative identity defect (forced runs only).
    pub worst_identity_defect: f64,
    pub reports: Vec<LemmaReport>,
}

/// Evaluates the inequality on every `every`-th admissible snapshot.
#[allow(clippy::too_many_arguments)]
pub fn lemma_sweep(
    traj: &Trajectory,
    f: &AuxiliaryFunction,
    cutoff: &Cutoff,
    params: &ProblemParams,
    opts: &LemmaOptions,
    source: Option<SourceTerm<'_>>,
    c0: f64,
    every: usize,
) -> Result<LemmaSweep> {
    let s = opts.time_stride.max(1);
    if traj.len() < 2 * s + 1 {
        return Err(Error::OutOfWindow(format!("{} snapshots are too few for stride {s}", traj.len())));
    }
    let h = traj.grid().h();
    let tolerance = c0 * (h * h + traj.dt());
    let mut out = LemmaSweep {
        c0,
        tolerance,
        snapshots: 0,
        included: 0,
        excluded_small_gradient: 0,
        violations: 0,
        worst_relative: f64::NEG_INFINITY,
        worst_identity_defect: 0.0,
        reports: Vec::new(),
    };
    for index in (s..traj.len() - s).step_by(every.max(1)) {
        let (fields, rep) = operator_l_residual(traj, f, cutoff, params, index, opts, source)?;
        let bar = tolerance * rep.scale;
        out.violations += fields
            .lz
            .values
            .iter()
            .zip(&fields.rhs.values)
            .filter(|(l, r)| !l.is_nan() && *l - *r > bar)
            .count();
        out.snapshots += 1;
        out.included += rep.included;
        out.excluded_small_gradient += rep.excluded_small_gradient;
        if rep.scale > 0.0 {
            out.worst_relative = out.worst_relative.max(rep.max_residual / rep.scale);
        }
        out.worst_identity_defect = out.worst_identity_defect.max(rep.identity_defect);
        out.reports.push(rep);
    }
    if !out.worst_relative.is_finite() {
        out.worst_relative = 0.0;
    }
    Ok(out)
}

/// `u = a e^{−t}(1 − |x|²/(2R²))` with the forcing that makes it an exact
/// solution; used to calibrate the inequality tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedParaboloid {
    pub amplitude: f64,
    pub radius: f64,
    pub params: ProblemParams,
}

impl ManufacturedParaboloid {
    pub fn exact(&self, x: &Point, t: f64) -> f64 {
        let r2 = self.radius * self.radius;
        let x2 = x[0] * x[0] + x[1] * x[1];
        self.amplitude * (-t).exp() * (1.0 - x2 / (2.0 * r2))
    }

    /// `(g, ∇g)` for `g = u_t − Δu − u^p − M|∇u|^q`.
    pub fn source(&self, x: &Point, t: f64) -> (f64, Point) {
        let (p, q, m) = (self.params.p_f64(), self.params.q_f64(), self.params.m());
        let n = self.params.dim() as f64;
        let r2 = self.radius * self.radius;
        let e = self.amplitude * (-t).exp();
        let u = self.exact(x, t);
        let du = [-e * x[0] / r2, -e * x[1] / r2];
        let gn = (du[0] * du[0] + du[1] * du[1]).sqrt();
        let lap = -e * n / r2;
        let g = -u - lap - u.powf(p) - m * gn.powf(q);
        // ∇|∇u|^q = q|∇u|^{q−2} D²u ∇u with D²u = −(e/R²) I
        let gq = if gn > 0.0 { q * gn.powf(q - 2.0) * (-e / r2) } else { 0.0 };
        let mut grad = [0.0; 2];
        for a in 0..self.params.dim() {
            grad[a] = -du[a] - p * u.powf(p - 1.0) * du[a] - m * gq * du[a];
        }
        (g, grad)
    }

    pub fn solve(&self, grid: &Grid, cfg: &SolverConfig) -> Result<Trajectory> {
        let src = |x: &Point, t: f64| self.source(x, t).0;
        let bnd = |x: &Point, t: f64| self.exact(x, t);
        Solver::new(grid, &self.params, cfg)?
            .solve_forced(grid.sample(0.0, |x| self.exact(x, 0.0)), Forcing { source: &src, boundary: Some(&bnd) })
    }
}
