//! Weighted integral identities of the integral Bernstein method: the
//! spatial inequality for `(I_a, J_a, K_a)`, its space-time version for
//! `v = u + θ`, and the `∬u^{2p}` scaling in `R`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    gradient, BoundaryCondition, Grid, InitialData, Point, Solver, SolverConfig, Trajectory,
};
use crate::params::{bidaut_veron_exponent, ratio_to_f64, Extended, ProblemParams, Rational};
use crate::stats::{loglog_slope, LinearFit};

/// Open interval `(lower, upper)` of admissible `−k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KWindow {
    pub lower: f64,
    pub upper: f64,
}

impl KWindow {
    pub fn contains(&self, neg_k: f64) -> bool {
        neg_k > self.lower && neg_k < self.upper
    }

    /// Default `k`: minus the midpoint of the window, or `−1/2` when the
    /// window is unbounded; nudged off `k = −1`.
    pub fn default_k(&self) -> f64 {
        let mid = if self.upper.is_finite() { 0.5 * (self.lower + self.upper) } else { 0.5 };
        if (mid - 1.0).abs() < 1e-9 {
            -(0.75 * self.lower + 0.25 * self.upper)
        } else {
            -mid
        }
    }
}

/// `p(N−1)/(N+2) < −k < N/(N−1)`, for `1 < p < p_B(N)`.
pub fn admissible_k(dim: usize, p: Rational) -> Result<KWindow> {
    if dim == 0 || p <= Rational::from_integer(1) {
        return Err(Error::Domain(format!("need N ≥ 1 and p > 1, got N = {dim}, p = {p}")));
    }
    if let Extended::Finite(pb) = bidaut_veron_exponent(dim) {
        if p >= pb {
            return Err(Error::Domain(format!("p = {p} is not below p_B = {pb}")));
        }
    }
    let n = dim as f64;
    let pf = ratio_to_f64(p);
    let lower = pf * (n - 1.0) / (n + 2.0);
    let upper = if dim == 1 { f64::INFINITY } else { n / (n - 1.0) };
    debug_assert!(lower < upper);
    Ok(KWindow { lower, upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoupletCoefficients {
    pub a: f64,
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `γ − β/p`.
    pub delta: f64,
}

pub fn souplet_coefficients(a: f64, k: f64, dim: usize, p: f64) -> Result<SoupletCoefficients> {
    if k == -1.0 {
        return Err(Error::Domain("k = −1 is excluded".into()));
    }
    let n = dim as f64;
    let alpha = -(n - 1.0) / n * k * k + (a - 1.0) * k - a * (a - 1.0) / 2.0;
    let beta = (n + 2.0) / n * k - 1.5 * a;
    let gamma = -(n - 1.0) / n;
    Ok(SoupletCoefficients { a, k, alpha, beta, gamma, delta: gamma - beta / p })
}

/// Smooth field with analytic value, gradient and Laplacian.
pub trait SmoothField: Sync {
    fn eval(&self, x: &Point) -> (f64, Point, f64);
}

/// `c₀ + Σ a_j cos(κ_j·x + θ_j)` with `c₀ > Σ|a_j|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigField {
    pub dim: usize,
    pub offset: f64,
    pub modes: Vec<(f64, Point, f64)>,
}

impl TrigField {
    /// Random positive field with `terms` modes, `|κ| ≤ 3`, and minimum at least `0.2`.
    pub fn random(dim: usize, terms: usize, rng: &mut impl Rng) -> Self {
        let mut modes = Vec::with_capacity(terms);
        let mut total = 0.0;
        for _ in 0..terms {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let mut kv = [0.0; 2];
            for c in kv.iter_mut().take(dim) {
                *c = rng.gen_range(-3.0..3.0);
            }
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            total += a.abs();
            modes.push((a, kv, th));
        }
        let offset = total + rng.gen_range(0.2..1.0);
        Self { dim, offset, modes }
    }
}

impl SmoothField for TrigField {
    fn eval(&self, x: &Point) -> (f64, Point, f64) {
        let mut v = self.offset;
        let mut g = [0.0; 2];
        let mut lap = 0.0;
        for (a, kv, th) in &self.modes {
            let arg = kv[0] * x[0] + kv[1] * x[1] + th;
            let (s, c) = arg.sin_cos();
            v += a * c;
            g[0] -= a * kv[0] * s;
            g[1] -= a * kv[1] * s;
            lap -= a * (kv[0] * kv[0] + kv[1] * kv[1]) * c;
        }
        (v, g, lap)
    }
}

/// `c + |x − x₀|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticField {
    pub dim: usize,
    pub center: Point,
    pub offset: f64,
}

impl SmoothField for QuadraticField {
    fn eval(&self, x: &Point) -> (f64, Point, f64) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r2 = if self.dim == 1 { d[0] * d[0] } else { d[0] * d[0] + d[1] * d[1] };
        let g = if self.dim == 1 { [2.0 * d[0], 0.0] } else { [2.0 * d[0], 2.0 * d[1]] };
        (self.offset + r2, g, 2.0 * self.dim as f64)
    }
}

/// Profile `Φ(s) = exp(1 − 1/(1−s))^b` on `s ∈ [0,1)` with its first two derivatives.
fn profile(s: f64, b: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let om = 1.0 - s;
    let phi = (b * (1.0 - 1.0 / om)).exp();
    let e = -1.0 / (om * om);
    let de = -2.0 / (om * om * om);
    let d1 = b * e * phi;
    let d2 = b * phi * (de + b * e * e);
    (phi, d1, d2)
}

/// Power `b = ⌈2/(1−ᾱ) + 1⌉` of the base bump.
pub fn bump_power(alpha_bar: f64) -> f64 {
    (2.0 / (1.0 - alpha_bar) + 1.0).ceil()
}

/// Midpoint of `((3p+1)/(4p), 1)`.
pub fn default_alpha_bar(p: f64) -> f64 {
    0.5 * ((3.0 * p + 1.0) / (4.0 * p) + 1.0)
}

/// `φ(x) = Φ(|x − x₀|²/R²)` with `Φ = exp(1 − 1/(1−s))^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialBump {
    pub dim: usize,
    pub center: Point,
    pub radius: f64,
    pub power: f64,
}

impl SpatialBump {
    /// `(φ, ∇φ, Δφ)`.
    pub fn eval(&self, x: &Point) -> (f64, Point, f64) {
        let r2 = self.radius * self.radius;
        let mut d = [0.0; 2];
        let mut s = 0.0;
        for a in 0..self.dim {
            d[a] = x[a] - self.center[a];
            s += d[a] * d[a];
        }
        s /= r2;
        let (phi, d1, d2) = profile(s, self.power);
        if phi == 0.0 {
            return (0.0, [0.0; 2], 0.0);
        }
        let gs = [2.0 * d[0] / r2, 2.0 * d[1] / r2];
        let gs2 = 4.0 * s / r2;
        let lap = d2 * gs2 + d1 * 2.0 * self.dim as f64 / r2;
        (phi, [d1 * gs[0], d1 * gs[1]], lap)
    }
}

/// `φ(x, t) = [ξ(|x−x₀|/R) ξ(|t−t₀|/R²)]^b` with `ξ(r) = exp(1 − 1/(1−r²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceTimeBump {
    pub dim: usize,
    pub center: Point,
    pub t_center: f64,
    pub radius: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpValue {
    pub phi: f64,
    pub grad: Point,
    pub lap: f64,
    pub dt: f64,
}

impl SpaceTimeBump {
    pub fn new(dim: usize, center: &[f64], t_center: f64, radius: f64, alpha_bar: f64) -> Result<Self> {
        if !(alpha_bar > 0.0 && alpha_bar < 1.0) || !(radius > 0.0) || center.len() != dim {
            return Err(Error::Domain("test function needs ᾱ ∈ (0,1), R > 0".into()));
        }
        let mut c = [0.0; 2];
        c[..dim].copy_from_slice(center);
        Ok(Self { dim, center: c, t_center, radius, power: bump_power(alpha_bar) })
    }

    pub fn eval(&self, x: &Point, t: f64) -> BumpValue {
        let space = SpatialBump { dim: self.dim, center: self.center, radius: self.radius, power: self.power };
        let (ps, gs, ls) = space.eval(x);
        let r4 = self.radius.powi(4);
        let tau = (t - self.t_center).powi(2) / r4;
        let (pt, dpt, _) = profile(tau, self.power);
        let dtau = 2.0 * (t - self.t_center) / r4;
        BumpValue {
            phi: ps * pt,
            grad: [gs[0] * pt, gs[1] * pt],
            lap: ls * pt,
            dt: ps * dpt * dtau,
        }
    }

    /// `(t₀ − R², t₀ + R²)`.
    pub fn time_support(&self) -> (f64, f64) {
        let r2 = self.radius * self.radius;
        (self.t_center - r2, self.t_center + r2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpBounds {
    /// Smallest `C` with `|∇φ| ≤ C R^{-1} φ^ᾱ`.
    pub gradient_constant: f64,
    /// Smallest `C` with `|Δφ| + φ^{-1}|∇φ|² + |∂_tφ| ≤ C R^{-2} φ^ᾱ`.
    pub second_constant: f64,
}

/// Measures the derivative-bound constants of `φ` on an `n^{N+1}` sample lattice.
pub fn measure_bump_bounds(phi: &SpaceTimeBump, alpha_bar: f64, n: usize) -> BumpBounds {
    let r = phi.radius;
    let mut out = BumpBounds { gradient_constant: 0.0, second_constant: 0.0 };
    let (t0, t1) = phi.time_support();
    let ys: Vec<f64> = if phi.dim == 2 { (0..n).map(|j| -r + (j as f64 + 0.5) * 2.0 * r / n as f64).collect() } else { vec![0.0] };
    for it in 0..n {
        let t = t0 + (it as f64 + 0.5) * (t1 - t0) / n as f64;
        for ix in 0..n {
            let x0 = -r + (ix as f64 + 0.5) * 2.0 * r / n as f64;
            for &y in &ys {
                let x = [phi.center[0] + x0, phi.center[1] + y];
                let v = phi.eval(&x, t);
                if v.phi <= 1e-300 {
                    continue;
                }
                let pa = v.phi.powf(alpha_bar);
                let g = (v.grad[0].powi(2) + v.grad[1].powi(2)).sqrt();
                out.gradient_constant = out.gradient_constant.max(g * r / pa);
                let second = v.lap.abs() + g * g / v.phi + v.dt.abs();
                out.second_constant = out.second_constant.max(second * r * r / pa);
            }
        }
    }
    out
}

/// The integrals appearing in the spatial inequality.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SoupletIntegrals {
    pub i_a: f64,
    pub j_a: f64,
    pub k_a: f64,
    /// `½∫v^a|∇v|²Δφ`.
    pub r_lap: f64,
    /// `∫v^aΔv∇v·∇φ`.
    pub r_mixed: f64,
    /// `∫v^{a−1}|∇v|²∇v·∇φ` (multiplied by `a − k` on the right side).
    pub r_cubic: f64,
}

impl SoupletIntegrals {
    pub fn lhs(&self, c: &SoupletCoefficients) -> f64 {
        c.alpha * self.i_a + c.beta * self.j_a + c.gamma * self.k_a
    }
    pub fn rhs(&self, c: &SoupletCoefficients) -> f64 {
        self.r_lap + self.r_mixed + (c.a - c.k) * self.r_cubic
    }
    /// Sum of absolute contributions, used to make differences relative.
    pub fn scale(&self, c: &SoupletCoefficients) -> f64 {
        (c.alpha * self.i_a).abs()
            + (c.beta * self.j_a).abs()
            + (c.gamma * self.k_a).abs()
            + self.r_lap.abs()
            + self.r_mixed.abs()
            + ((c.a - c.k) * self.r_cubic).abs()
    }
}

/// Midpoint rule with `n` cells per axis over the bounding box of `supp φ`.
pub fn souplet_integrals(v: &dyn SmoothField, phi: &SpatialBump, a: f64, n: usize) -> SoupletIntegrals {
    let dim = phi.dim;
    let r = phi.radius;
    let h = 2.0 * r / n as f64;
    let w = h.powi(dim as i32);
    let ny = if dim == 2 { n } else { 1 };
    let mut s = SoupletIntegrals::default();
    for iy in 0..ny {
        for ix in 0..n {
            let mut x = [phi.center[0] - r + (ix as f64 + 0.5) * h, 0.0];
            if dim == 2 {
                x[1] = phi.center[1] - r + (iy as f64 + 0.5) * h;
            }
            let (ph, gph, lph) = phi.eval(&x);
            if ph == 0.0 && lph == 0.0 {
                continue;
            }
            let (vv, gv, lv) = v.eval(&x);
            let g2 = gv[0] * gv[0] + gv[1] * gv[1];
            let va = vv.powf(a);
            let dot = gv[0] * gph[0] + gv[1] * gph[1];
            s.i_a += w * ph * va / (vv * vv) * g2 * g2;
            s.j_a += w * ph * va / vv * g2 * lv;
            s.k_a += w * ph * va * lv * lv;
            s.r_lap += w * 0.5 * va * g2 * lph;
            s.r_mixed += w * va * lv * dot;
            s.r_cubic += w * va / vv * g2 * dot;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoupletCheck {
    pub coefficients: SoupletCoefficients,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    /// Change of the margin under one refinement.
    pub tolerance: f64,
    /// Largest relative difference of either side against the 4× oracle.
    pub oracle_rel_diff: f64,
    pub passed: bool,
}

fn rel_diff(a: f64, b: f64, scale: f64) -> f64 {
    if scale <= 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Evaluates both sides at `n`, `2n` (error proxy) and `4n` (oracle) cells per axis.
pub fn verify_souplet_inequality(
    v: &dyn SmoothField,
    phi: &SpatialBump,
    a: f64,
    k: f64,
    n: usize,
) -> Result<SoupletCheck> {
    let c = souplet_coefficients(a, k, phi.dim, 1.0)?;
    let coarse = souplet_integrals(v, phi, a, n);
    let fine = souplet_integrals(v, phi, a, 2 * n);
    let oracle = souplet_integrals(v, phi, a, 4 * n);
    let scale = oracle.scale(&c).max(f64::MIN_POSITIVE);
    let refine = rel_diff(coarse.lhs(&c), fine.lhs(&c), scale).max(rel_diff(coarse.rhs(&c), fine.rhs(&c), scale));
    if refine > 0.05 {
        return Err(Error::QuadratureUnresolved { rel_diff: refine });
    }
    let oracle_rel_diff =
        rel_diff(coarse.lhs(&c), oracle.lhs(&c), scale).max(rel_diff(coarse.rhs(&c), oracle.rhs(&c), scale));
    let lhs = coarse.lhs(&c);
    let rhs = coarse.rhs(&c);
    let margin = rhs - lhs;
    let tolerance = (margin - (fine.rhs(&c) - fine.lhs(&c))).abs() + 1e-12 * scale;
    Ok(SoupletCheck {
        coefficients: c,
        lhs,
        rhs,
        margin,
        tolerance,
        oracle_rel_diff,
        passed: margin >= -tolerance && oracle_rel_diff <= 0.01,
    })
}

/// Seeded suite of random positive trigonometric fields on the unit ball.
pub fn random_souplet_suite(
    dim: usize,
    p: Rational,
    count: usize,
    seed: u64,
    n: usize,
) -> Result<Vec<SoupletCheck>> {
    let window = admissible_k(dim, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = SpatialBump { dim, center: [0.0; 2], radius: 1.0, power: bump_power(default_alpha_bar(ratio_to_f64(p))) };
    let hi = if window.upper.is_finite() { window.upper } else { window.lower + 2.0 };
    (0..count)
        .map(|_| {
            let field = TrigField::random(dim, 3, &mut rng);
            let mut neg_k = rng.gen_range(window.lower..hi);
            if (neg_k - 1.0).abs() < 1e-6 {
                neg_k = window.default_k().abs();
            }
            verify_souplet_inequality(&field, &phi, 0.0, -neg_k, n)
        })
        .collect()
}

/// Space-time integrals for `v = u + θ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IntegralQuantities {
    pub theta: f64,
    pub i: f64,
    pub l: f64,
    pub g: f64,
    pub j: f64,
    pub k: f64,
    pub f_theta_integral: f64,
    /// Largest pointwise `f_θ = u^p − v^p` (never positive).
    pub f_theta_max: f64,
    /// Terms of the bound, in the order of [`RHS_TERMS`].
    pub rhs_terms: [f64; 15],
    pub phi_integral: f64,
}

/// Names of the nonnegative integrals bounding `αI + δL − βG`.
pub const RHS_TERMS: [&str; 15] = [
    "phi M^2 |Dv|^2q",
    "phi M |v_t| |Dv|^q",
    "phi v^-1 |v_t| |Dv|^2",
    "phi v^p |v_t|",
    "phi M v^p |Dv|^q",
    "phi v_t^2",
    "|phi_t| v^(p+1)",
    "|lap phi| |Dv|^2",
    "|D phi| v^-1 |Dv|^3",
    "|D phi| |v_t - v^p - M|Dv|^q| |Dv|",
    "|D phi| v^p |Dv|",
    "phi v^-1 |Dv|^2 |f|",
    "phi v^p |f|",
    "|D phi| |Dv| |f|",
    "|F|",
];

/// Coefficients of [`RHS_TERMS`] produced by expanding `J` and `K` with the
/// equation for `v` and bounding every term by its absolute value.
pub fn rhs_coefficients(c: &SoupletCoefficients, p: f64) -> [f64; 15] {
    let (b, g, k) = (c.beta.abs(), c.gamma.abs(), c.k.abs());
    [
        g,
        2.0 * g,
        b,
        b / p,
        b / p + 2.0 * g,
        g,
        2.0 * g / (p + 1.0),
        0.5,
        k,
        1.0,
        b / p,
        b,
        b / p,
        1.0,
        g,
    ]
}

fn check_support(traj: &Trajectory, phi: &SpaceTimeBump) -> Result<()> {
    let grid = traj.grid();
    let (ta, tb) = phi.time_support();
    let times = traj.times();
    if ta < times[0] - 1e-12 || tb > times[times.len() - 1] + 1e-12 {
        return Err(Error::SupportNotCovered(format!(
            "time support ({ta}, {tb}) outside ({}, {})",
            times[0],
            times[times.len() - 1]
        )));
    }
    let c = grid.center();
    let mut d = 0.0;
    for a in 0..grid.dim() {
        d += (phi.center[a] - c[a]).powi(2);
    }
    if d.sqrt() + phi.radius > grid.radius() - grid.h() {
        return Err(Error::SupportNotCovered(format!(
            "spatial support radius {} at distance {:.3} exceeds the grid ball",
            phi.radius,
            d.sqrt()
        )));
    }
    Ok(())
}

/// Space-time quadrature on the solver grid: node weights `h^N`, snapshot
/// weights from the snapshot spacing. `space_stride`/`time_stride` subsample
/// the data for the refinement comparison.
pub fn space_time_quantities_strided(
    traj: &Trajectory,
    theta: f64,
    phi: &SpaceTimeBump,
    params: &ProblemParams,
    space_stride: usize,
    time_stride: usize,
) -> Result<IntegralQuantities> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("θ must be positive, got {theta}")));
    }
    check_support(traj, phi)?;
    let grid = traj.grid();
    let p = params.p_f64();
    let q = params.q_f64();
    let m = params.m();
    let snaps = traj.snapshots();
    let (ta, tb) = phi.time_support();
    let ss = space_stride.max(1);
    let ts = time_stride.max(1);
    let nodes: Vec<usize> = grid
        .nodes()
        .filter(|&i| {
            let x = grid.coords(i);
            let c = grid.center();
            (0..grid.dim()).all(|a| (((x[a] - c[a]) / grid.h()).round() as i64).rem_euclid(ss as i64) == 0)
        })
        .collect();
    let wx = (grid.h() * ss as f64).powi(grid.dim() as i32);
    let mut out = IntegralQuantities { theta, f_theta_max: f64::NEG_INFINITY, ..Default::default() };
    let idx: Vec<usize> = (0..snaps.len()).step_by(ts).collect();
    for (pos, &j) in idx.iter().enumerate() {
        let t = snaps[j].t;
        if t <= ta || t >= tb {
            continue;
        }
        let t_prev = if pos > 0 { snaps[idx[pos - 1]].t } else { t };
        let t_next = if pos + 1 < idx.len() { snaps[idx[pos + 1]].t } else { t };
        let wt = 0.5 * (t_next - t_prev);
        let u = &snaps[j];
        let (ut, _) = traj.time_derivative(j)?;
        let grad = gradient(grid, u);
        for &i in &nodes {
            let x = grid.coords(i);
            let b = phi.eval(&x, t);
            let gphi = (b.grad[0].powi(2) + b.grad[1].powi(2)).sqrt();
            if b.phi == 0.0 && gphi == 0.0 && b.lap == 0.0 && b.dt == 0.0 {
                continue;
            }
            let w = wx * wt;
            let uu = u.values[i].max(0.0);
            let v = uu + theta;
            let vt = ut.values[i];
            let g = (grad[i][0].powi(2) + grad[i][1].powi(2)).sqrt();
            let vp = v.powf(p);
            let gq = g.powf(q);
            let f = uu.powf(p) - vp;
            let residual = vt - vp - m * gq;
            out.f_theta_max = out.f_theta_max.max(f);
            out.i += w * b.phi * g.powi(4) / (v * v);
            out.l += w * b.phi * v.powf(2.0 * p);
            out.g += w * m * b.phi * g.powf(2.0 + q) / v;
            // Δv from the equation for v
            let lap_v = vt - vp - m * gq - f;
            out.j += w * b.phi * g * g * lap_v / v;
            out.k += w * b.phi * lap_v * lap_v;
            out.f_theta_integral += w * b.phi * (f * f - 2.0 * residual * f);
            out.phi_integral += w * b.phi;
            let terms = [
                b.phi * m * m * g.powf(2.0 * q),
                b.phi * m * vt.abs() * gq,
                b.phi * vt.abs() * g * g / v,
                b.phi * vp * vt.abs(),
                b.phi * m * vp * gq,
                b.phi * vt * vt,
                b.dt.abs() * v.powf(p + 1.0),
                b.lap.abs() * g * g,
                gphi * g.powi(3) / v,
                gphi * residual.abs() * g,
                gphi * vp * g,
                b.phi * g * g * f.abs() / v,
                b.phi * vp * f.abs(),
                gphi * g * f.abs(),
                0.0,
            ];
            for (acc, t) in out.rhs_terms.iter_mut().zip(terms) {
                *acc += w * t;
            }
        }
    }
    out.rhs_terms[14] = out.f_theta_integral.abs();
    if !out.f_theta_max.is_finite() {
        out.f_theta_max = 0.0;
    }
    Ok(out)
}

pub fn space_time_quantities(
    traj: &Trajectory,
    theta: f64,
    phi: &SpaceTimeBump,
    params: &ProblemParams,
) -> Result<IntegralQuantities> {
    space_time_quantities_strided(traj, theta, phi, params, 1, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeCheck {
    pub coefficients: SoupletCoefficients,
    pub quantities: IntegralQuantities,
    pub lhs: f64,
    /// `C Σ terms` with `C` the largest term coefficient.
    pub rhs: f64,
    /// `Σ c_i terms` with the individual coefficients.
    pub rhs_sharp: f64,
    pub constant: f64,
    pub margin: f64,
    pub margin_sharp: f64,
    /// Relative change of the sharp margin against a subsampled evaluation.
    pub subsample_rel_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `αI + δL − βG` against the bound with explicit constant.
pub fn verify_space_time_inequality(
    traj: &Trajectory,
    theta: f64,
    phi: &SpaceTimeBump,
    params: &ProblemParams,
    k: f64,
) -> Result<SpaceTimeCheck> {
    let p = params.p_f64();
    let c = souplet_coefficients(0.0, k, params.dim(), p)?;
    let full = space_time_quantities(traj, theta, phi, params)?;
    let sub = space_time_quantities_strided(traj, theta, phi, params, 1, 2)?;
    let coef = rhs_coefficients(&c, p);
    let constant = coef.iter().copied().fold(0.0, f64::max);
    let eval = |q: &IntegralQuantities| {
        let lhs = c.alpha * q.i + c.delta * q.l - c.beta * q.g;
        let sum: f64 = q.rhs_terms.iter().sum();
        let sharp: f64 = q.rhs_terms.iter().zip(&coef).map(|(t, w)| t * w).sum();
        (lhs, constant * sum, sharp)
    };
    let (lhs, rhs, rhs_sharp) = eval(&full);
    let (lhs2, _, sharp2) = eval(&sub);
    let scale = lhs.abs().max(rhs_sharp.abs()).max(f64::MIN_POSITIVE);
    let subsample_rel_diff = ((rhs_sharp - lhs) - (sharp2 - lhs2)).abs() / scale;
    if subsample_rel_diff > 0.05 {
        return Err(Error::QuadratureUnresolved { rel_diff: subsample_rel_diff });
    }
    let tolerance = subsample_rel_diff * scale + 1e-12 * scale;
    let margin = rhs - lhs;
    let margin_sharp = rhs_sharp - lhs;
    Ok(SpaceTimeCheck {
        coefficients: c,
        quantities: full,
        lhs,
        rhs,
        rhs_sharp,
        constant,
        margin,
        margin_sharp,
        subsample_rel_diff,
        tolerance,
        passed: margin >= -tolerance && margin_sharp >= -tolerance,
    })
}

/// `∬_{|x|<R/2} u^{2p}` over the time window `(R²/2, 3R²/2)` of one trajectory.
pub fn cylinder_integral(traj: &Trajectory, p: f64, r: f64) -> Result<f64> {
    let grid = traj.grid();
    let (ta, tb) = (0.5 * r * r, 1.5 * r * r);
    let times = traj.times();
    if tb > times[times.len() - 1] + 1e-9 || r / 2.0 > grid.radius() {
        return Err(Error::SupportNotCovered(format!("cylinder of radius {r} not covered")));
    }
    let nodes: Vec<usize> =
        grid.nodes().filter(|&i| grid.dist_to_center(&grid.coords(i)) < r / 2.0).collect();
    let wx = grid.h().powi(grid.dim() as i32);
    let snaps = traj.snapshots();
    let mut total = 0.0;
    for j in 0..snaps.len() {
        let t = snaps[j].t;
        // trapezoid weights on the snapshots inside the window
        if t < ta - 1e-12 || t > tb + 1e-12 {
            continue;
        }
        let lo = if j > 0 { snaps[j - 1].t.max(ta) } else { t };
        let hi = if j + 1 < snaps.len() { snaps[j + 1].t.min(tb) } else { t };
        let wt = 0.5 * ((t - lo).max(0.0) + (hi - t).max(0.0));
        let s: f64 = nodes.iter().map(|&i| snaps[j].values[i].max(0.0).powf(2.0 * p)).sum();
        total += wx * wt * s;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub radii: Vec<f64>,
    pub integrals: Vec<f64>,
    /// `None` when every integral vanishes.
    pub fit: Option<LinearFit>,
    /// `−4p/(p−1) + N + 2`.
    pub predicted: f64,
}

/// Layout of the single run used for the scaling check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRun {
    pub data: InitialData,
    pub domain_radius: f64,
    pub h: f64,
    pub snapshot_stride: usize,
}

impl Default for ScalingRun {
    fn default() -> Self {
        Self {
            data: InitialData::Bump { amplitude: 0.1, width: 1.0 },
            domain_radius: 48.0,
            h: 0.125,
            snapshot_stride: 64,
        }
    }
}

/// Solves once to `t = 1.5 R_max²` and integrates `u^{2p}` over each cylinder.
pub fn verify_scaling_decay(params: &ProblemParams, radii: &[f64], run: &ScalingRun) -> Result<ScalingReport> {
    let p = params.p_f64();
    let n = params.dim() as f64;
    let predicted = -4.0 * p / (p - 1.0) + n + 2.0;
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let dim = params.dim();
    let grid = Grid::ball(dim, &vec![0.0; dim], run.domain_radius, run.h)?;
    let cfg = SolverConfig::stable(&grid, 1.5 * r_max * r_max, BoundaryCondition::DirichletZero, 0.9)
        .with_stride(run.snapshot_stride);
    let traj = Solver::new(&grid, params, &cfg)?.solve(run.data.field(&grid))?;
    if traj.termination().is_blowup() {
        return Err(Error::BlowUp { time: traj.last().t, max: f64::INFINITY });
    }
    let integrals = radii.iter().map(|&r| cylinder_integral(&traj, p, r)).collect::<Result<Vec<_>>>()?;
    let fit = if integrals.iter().all(|&v| v == 0.0) { None } else { Some(loglog_slope(radii, &integrals)) };
    Ok(ScalingReport { radii: radii.to_vec(), integrals, fit, predicted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Termination;

    #[test]
    fn window_examples() {
        let w = admissible_k(3, Rational::new(2, 1)).unwrap();
        assert!((w.lower - 0.8).abs() < 1e-15 && (w.upper - 1.5).abs() < 1e-15);
        let w1 = admissible_k(1, Rational::new(3, 1)).unwrap();
        assert_eq!(w1.lower, 0.0);
        assert!(w1.upper.is_infinite());
        assert!(admissible_k(3, Rational::new(15, 4)).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let c = souplet_coefficients(0.0, -1.2, 3, 2.0).unwrap();
        assert!((c.alpha - 0.24).abs() < 1e-12);
        assert!((c.delta - 1.0 / 3.0).abs() < 1e-12);
        let z = souplet_coefficients(0.0, 0.0, 3, 2.0).unwrap();
        assert_eq!((z.alpha, z.beta), (0.0, 0.0));
        assert!(souplet_coefficients(0.0, -1.0, 2, 2.0).is_err());
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = SpaceTimeBump::new(2, &[0.1, -0.2], 3.0, 1.3, 0.8).unwrap();
        let x = [0.4, 0.1];
        let t = 3.4;
        let e = 1e-5;
        let v = b.eval(&x, t);
        let f = |dx: f64, dy: f64, dt: f64| b.eval(&[x[0] + dx, x[1] + dy], t + dt).phi;
        let gx = (f(e, 0.0, 0.0) - f(-e, 0.0, 0.0)) / (2.0 * e);
        let ft = (f(0.0, 0.0, e) - f(0.0, 0.0, -e)) / (2.0 * e);
        let lap = (f(e, 0.0, 0.0) + f(-e, 0.0, 0.0) + f(0.0, e, 0.0) + f(0.0, -e, 0.0) - 4.0 * v.phi) / (e * e);
        let s = v.phi.max(1e-12);
        assert!((gx - v.grad[0]).abs() / s < 1e-6);
        assert!((ft - v.dt).abs() / s < 1e-6);
        assert!((lap - v.lap).abs() / s < 1e-3);
    }

    #[test]
    fn constant_field_gives_zero_integrals() {
        struct One;
        impl SmoothField for One {
            fn eval(&self, _: &Point) -> (f64, Point, f64) {
                (1.0, [0.0; 2], 0.0)
            }
        }
        let phi = SpatialBump { dim: 2, center: [0.0; 2], radius: 1.0, power: 8.0 };
        let c = verify_souplet_inequality(&One, &phi, 0.0, -1.2, 32).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.passed);
    }

    #[test]
    fn support_must_be_covered() {
        let g = Grid::ball(1, &[0.0], 2.0, 0.1).unwrap();
        let snaps = (0..5).map(|k| g.zeros(k as f64 * 0.25)).collect();
        let tr = Trajectory::from_snapshots(g, snaps, Termination::CompletedT).unwrap();
        let params = ProblemParams::from_parts(1, (2, 1), (4, 3), 0.01).unwrap();
        let phi = SpaceTimeBump::new(1, &[0.0], 0.5, 1.0, 0.9).unwrap();
        assert!(matches!(
            space_time_quantities(&tr, 1.0, &phi, &params),
            Err(Error::SupportNotCovered(_))
        ));
    }
}
