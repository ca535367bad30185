//! Doubling search on finite point sets, its brute-force certificate, grid
//! instances built from `M(u) = u^{(p−1)/2} + |∇u|^{(p−1)/(p+1)}`, and the
//! rescaled frame around a doubling point.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, interpolate_space_time, Field, Grid, NodeKind, Point, Trajectory};
use crate::params::ProblemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl ParabolicPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Self { x, t }
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.x.iter().zip(&other.x) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.t.total_cmp(&other.t)
    }
}

fn space_distance(a: &ParabolicPoint, b: &ParabolicPoint) -> f64 {
    a.x.iter().zip(&b.x).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// `|x − y| + |t − s|^{1/2}`.
pub fn parabolic_distance(a: &ParabolicPoint, b: &ParabolicPoint) -> f64 {
    space_distance(a, b) + (a.t - b.t).abs().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Parabolic,
    /// Euclidean distance on `(x, t)`.
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: &ParabolicPoint, b: &ParabolicPoint) -> f64 {
        match self {
            Metric::Parabolic => parabolic_distance(a, b),
            Metric::Euclidean => {
                let s = space_distance(a, b);
                (s * s + (a.t - b.t).powi(2)).sqrt()
            }
        }
    }
}

/// Distance to `Γ`, infinite when `Γ` is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Distance {
    Finite(f64),
    Infinite,
}

impl Distance {
    /// `m · self > bound`, with `m > 0`.
    pub fn scaled_exceeds(self, m: f64, bound: f64) -> bool {
        match self {
            Distance::Finite(d) => m * d > bound,
            Distance::Infinite => true,
        }
    }

    pub fn scaled(self, m: f64) -> Distance {
        match self {
            Distance::Finite(d) => Distance::Finite(m * d),
            Distance::Infinite => Distance::Infinite,
        }
    }
}

/// Points of `Σ`; those with `m = Some(_)` form `D`, the rest `Γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct DoublingInstance {
    pub points: Vec<ParabolicPoint>,
    pub m: Vec<Option<f64>>,
    pub k: f64,
    pub metric: Metric,
}

/// Stored form: one `[[points]]` table per point, `gamma = true` marking `Γ`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    k: f64,
    #[serde(default)]
    metric: Metric,
    points: Vec<PointEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointEntry {
    x: Vec<f64>,
    t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    #[serde(default)]
    gamma: bool,
}

impl TryFrom<InstanceFile> for DoublingInstance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Self> {
        let mut points = Vec::with_capacity(f.points.len());
        let mut m = Vec::with_capacity(f.points.len());
        for (i, e) in f.points.into_iter().enumerate() {
            let value = match (e.gamma, e.m) {
                (true, None) => None,
                (false, Some(v)) => Some(v),
                (true, Some(_)) => return Err(Error::Config(format!("point {i} is in Γ but carries M"))),
                (false, None) => return Err(Error::Config(format!("point {i} in D lacks M"))),
            };
            points.push(ParabolicPoint::new(e.x, e.t));
            m.push(value);
        }
        DoublingInstance::new(points, m, f.k, f.metric)
    }
}

impl From<DoublingInstance> for InstanceFile {
    fn from(inst: DoublingInstance) -> Self {
        let points = inst
            .points
            .into_iter()
            .zip(inst.m)
            .map(|(p, m)| PointEntry { x: p.x, t: p.t, m, gamma: m.is_none() })
            .collect();
        InstanceFile { k: inst.k, metric: inst.metric, points }
    }
}

impl DoublingInstance {
    pub fn new(points: Vec<ParabolicPoint>, m: Vec<Option<f64>>, k: f64, metric: Metric) -> Result<Self> {
        let inst = Self { points, m, k, metric };
        inst.validate()?;
        Ok(inst)
    }

    /// Parses and validates an instance stored as TOML.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&InstanceFile::from(self.clone())).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.m.len() {
            return Err(Error::Domain("one M entry per point required".into()));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Domain(format!("k must be positive, got {}", self.k)));
        }
        if self.m.iter().all(Option::is_none) {
            return Err(Error::Domain("D is empty".into()));
        }
        if let Some(v) = self.m.iter().flatten().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("M must be positive and finite on D, got {v}")));
        }
        if self.points.iter().any(|p| !p.t.is_finite() || p.x.iter().any(|c| !c.is_finite())) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        Ok(())
    }

    pub fn in_d(&self, i: usize) -> bool {
        self.m[i].is_some()
    }

    pub fn dist_to_gamma(&self, i: usize) -> Distance {
        let mut best: Option<f64> = None;
        for (j, p) in self.points.iter().enumerate() {
            if self.m[j].is_none() {
                let d = self.metric.distance(&self.points[i], p);
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        best.map_or(Distance::Infinite, Distance::Finite)
    }

    fn m_of(&self, i: usize) -> f64 {
        self.m[i].expect("point in D")
    }

    /// Largest finite `M(y) dist(y, Γ)` over `D` (0 when `Γ` is empty).
    pub fn max_hypothesis_product(&self) -> f64 {
        (0..self.points.len())
            .filter(|&i| self.in_d(i))
            .filter_map(|i| match self.dist_to_gamma(i) {
                Distance::Finite(d) => Some(self.m_of(i) * d),
                Distance::Infinite => None,
            })
            .fold(0.0, f64::max)
    }

    /// Indices of `D` satisfying `M(y) dist(y, Γ) > 2k`.
    pub fn admissible_starts(&self) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.in_d(i) && self.dist_to_gamma(i).scaled_exceeds(self.m_of(i), 2.0 * self.k))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    /// `M(x) dist(x, Γ)`.
    pub m_dist: Distance,
    pub exceeds_two_k: bool,
    pub dominates_start: bool,
    /// Points `z ∈ D` with `d(z, x) ≤ k/M(x)` and `M(z) > 2M(x)`.
    pub violations: usize,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.exceeds_two_k && self.dominates_start && self.violations == 0
    }
}

/// Checks the three conclusions for `x` against every point of the instance.
pub fn certify(inst: &DoublingInstance, start: usize, x: usize) -> Certificate {
    let mx = inst.m_of(x);
    let m_dist = inst.dist_to_gamma(x).scaled(mx);
    let radius = inst.k / mx;
    let violations = (0..inst.points.len())
        .filter(|&z| {
            inst.m[z].is_some_and(|mz| mz > 2.0 * mx)
                && inst.metric.distance(&inst.points[x], &inst.points[z]) <= radius
        })
        .count();
    Certificate {
        m_dist,
        exceeds_two_k: inst.dist_to_gamma(x).scaled_exceeds(mx, 2.0 * inst.k),
        dominates_start: mx >= inst.m_of(start),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingResult {
    pub start: usize,
    pub index: usize,
    pub point: ParabolicPoint,
    pub m: f64,
    pub hops: usize,
    /// `⌈log₂(max M / M(y))⌉ + 1`.
    pub hop_bound: usize,
    pub path: Vec<usize>,
    pub certificate: Certificate,
}

/// Iterative doubling search from `start`: while the closed ball of radius
/// `k/M(x)` holds some `z ∈ D` with `M(z) > 2M(x)`, move to the largest such
/// `M(z)` (ties by lexicographic coordinates).
pub fn find_doubling_point(inst: &DoublingInstance, start: usize) -> Result<DoublingResult> {
    inst.validate()?;
    if start >= inst.points.len() || !inst.in_d(start) {
        return Err(Error::Domain(format!("start index {start} is not in D")));
    }
    let my = inst.m_of(start);
    let dist = inst.dist_to_gamma(start);
    if !dist.scaled_exceeds(my, 2.0 * inst.k) {
        let product = match dist {
            Distance::Finite(d) => my * d,
            Distance::Infinite => f64::INFINITY,
        };
        return Err(Error::HypothesisFails { product, two_k: 2.0 * inst.k });
    }
    let max_m = inst.m.iter().flatten().copied().fold(0.0, f64::max);
    let hop_bound = (max_m / my).log2().max(0.0).ceil() as usize + 1;
    let mut x = start;
    let mut path = vec![start];
    loop {
        let mx = inst.m_of(x);
        let radius = inst.k / mx;
        let mut best: Option<usize> = None;
        for z in 0..inst.points.len() {
            let Some(mz) = inst.m[z] else { continue };
            if mz <= 2.0 * mx || inst.metric.distance(&inst.points[x], &inst.points[z]) > radius {
                continue;
            }
            best = match best {
                None => Some(z),
                Some(b) => {
                    let mb = inst.m_of(b);
                    let better = mz > mb || (mz == mb && inst.points[z].lex_cmp(&inst.points[b]) == Ordering::Less);
                    Some(if better { z } else { b })
                }
            };
        }
        match best {
            None => break,
            Some(z) => {
                if path.len() > hop_bound {
                    return Err(Error::NonTermination { bound: hop_bound });
                }
                x = z;
                path.push(z);
            }
        }
    }
    let certificate = certify(inst, start, x);
    if !certificate.holds() {
        return Err(Error::HypothesisViolated(format!(
            "doubling point {x} fails its certificate: {certificate:?}"
        )));
    }
    Ok(DoublingResult {
        start,
        index: x,
        point: inst.points[x].clone(),
        m: inst.m_of(x),
        hops: path.len() - 1,
        hop_bound,
        path,
        certificate,
    })
}

/// Random instance with `n` points in `[0,1]^dim × [0,1]`, `M ∈ (0, 100)` on `D`
/// and each point in `Γ` with probability `gamma_prob` (at least one point in `D`).
pub fn random_instance(rng: &mut impl Rng, n: usize, dim: usize, gamma_prob: f64, k: f64, metric: Metric) -> DoublingInstance {
    let points: Vec<ParabolicPoint> = (0..n)
        .map(|_| ParabolicPoint::new((0..dim).map(|_| rng.gen::<f64>()).collect(), rng.gen::<f64>()))
        .collect();
    let mut m: Vec<Option<f64>> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < gamma_prob {
                None
            } else {
                Some(rng.gen_range(f64::MIN_POSITIVE..100.0))
            }
        })
        .collect();
    if m.iter().all(Option::is_none) {
        m[0] = Some(rng.gen_range(f64::MIN_POSITIVE..100.0));
    }
    DoublingInstance { points, m, k, metric }
}

/// `M(u) = u^{(p−1)/2} + |∇u|^{(p−1)/(p+1)}` on one field.
pub fn m_field(grid: &Grid, u: &Field, p: f64) -> Vec<f64> {
    let g = gradient(grid, u);
    (0..grid.len())
        .map(|i| {
            let gn = (g[i][0] * g[i][0] + g[i][1] * g[i][1]).sqrt();
            u.values[i].max(0.0).powf(0.5 * (p - 1.0)) + gn.powf((p - 1.0) / (p + 1.0))
        })
        .collect()
}

/// Instance on the space-time nodes of a trajectory (every `stride`-th
/// snapshot). `Γ` is the parabolic boundary: boundary nodes and the initial
/// snapshot. Points of `D` where `M(u) = 0` are dropped.
pub fn grid_instance(traj: &Trajectory, params: &ProblemParams, k: f64, stride: usize, metric: Metric) -> Result<DoublingInstance> {
    let grid = traj.grid();
    let p = params.p_f64();
    let mut points = Vec::new();
    let mut m = Vec::new();
    for (j, snap) in traj.snapshots().iter().enumerate().step_by(stride.max(1)) {
        let mf = m_field(grid, snap, p);
        for i in grid.nodes() {
            let x = grid.coords(i)[..grid.dim()].to_vec();
            let on_gamma = j == 0 || grid.kind(i) != NodeKind::Interior;
            if on_gamma {
                points.push(ParabolicPoint::new(x, snap.t));
                m.push(None);
            } else if mf[i] > 0.0 && mf[i].is_finite() {
                points.push(ParabolicPoint::new(x, snap.t));
                m.push(Some(mf[i]));
            }
        }
    }
    DoublingInstance::new(points, m, k, metric)
}

/// `M(u)` at an arbitrary point by cubic interpolation of its nodal values.
pub fn m_at(traj: &Trajectory, params: &ProblemParams, point: &ParabolicPoint) -> Result<f64> {
    let grid = traj.grid();
    let p = params.p_f64();
    let snaps = traj.snapshots().iter().map(|s| Field::new(m_field(grid, s, p), s.t)).collect();
    let mt = Trajectory::from_snapshots(grid.clone(), snaps, traj.termination())?;
    let mut x = [0.0; 2];
    x[..grid.dim()].copy_from_slice(&point.x);
    interpolate_space_time(&mt, &x, point.t).ok_or_else(|| Error::OutOfWindow("point outside the trajectory".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub lambda: f64,
    /// `M(v)` at the frame origin.
    pub normalization: f64,
    /// Largest `M(v)` over native samples with parabolic distance `≤ k` from the origin.
    pub max_m: f64,
    pub samples: usize,
    /// `(y, s, v)` samples.
    pub values: Vec<(Point, f64, f64)>,
}

/// `v(y, s) = λ^{2/(p−1)} u(x₀ + λy, t₀ + λ²s)` on the native nodes inside the
/// rescaled parabolic ball of radius `k`, clipped at the final time.
pub fn rescaling_frame(
    traj: &Trajectory,
    params: &ProblemParams,
    center: &ParabolicPoint,
    lambda: f64,
    k: f64,
) -> Result<Frame> {
    let grid = traj.grid();
    let dim = grid.dim();
    let p = params.p_f64();
    if !(lambda > 0.0) || center.x.len() != dim {
        return Err(Error::Domain("frame needs λ > 0 and a point of matching dimension".into()));
    }
    let reach = k * lambda;
    let mut x0 = [0.0; 2];
    x0[..dim].copy_from_slice(&center.x);
    let t_first = traj.snapshots()[0].t;
    if grid.dist_to_center(&x0) + reach > grid.radius() + 1e-12 || center.t - reach * reach < t_first - 1e-12 {
        return Err(Error::OutOfWindow(format!(
            "parabolic ball of radius {reach:.4} around ({:?}, {}) leaves the cylinder",
            center.x, center.t
        )));
    }
    let comps: Vec<Trajectory> = (0..dim)
        .map(|a| {
            let snaps = traj
                .snapshots()
                .iter()
                .map(|s| Field::new(gradient(grid, s).iter().map(|g| g[a]).collect(), s.t))
                .collect();
            Trajectory::from_snapshots(grid.clone(), snaps, traj.termination())
        })
        .collect::<Result<_>>()?;
    let u0 = interpolate_space_time(traj, &x0, center.t)
        .ok_or_else(|| Error::OutOfWindow("frame origin outside the grid".into()))?;
    let mut g2 = 0.0;
    for c in &comps {
        let g = interpolate_space_time(c, &x0, center.t)
            .ok_or_else(|| Error::OutOfWindow("frame origin outside the grid".into()))?;
        g2 += g * g;
    }
    let m_u = u0.max(0.0).powf(0.5 * (p - 1.0)) + g2.sqrt().powf((p - 1.0) / (p + 1.0));
    let normalization = lambda * m_u;
    let scale_u = lambda.powf(2.0 / (p - 1.0));
    let here = ParabolicPoint::new(center.x.clone(), center.t);
    let mut values = Vec::new();
    let mut max_m: f64 = 0.0;
    for snap in traj.snapshots() {
        if snap.t > center.t + reach * reach || snap.t < center.t - reach * reach {
            continue;
        }
        let mf = m_field(grid, snap, p);
        for i in grid.nodes() {
            let x = grid.coords(i);
            let pt = ParabolicPoint::new(x[..dim].to_vec(), snap.t);
            if parabolic_distance(&pt, &here) > reach {
                continue;
            }
            let mut y = [0.0; 2];
            for a in 0..dim {
                y[a] = (x[a] - x0[a]) / lambda;
            }
            values.push((y, (snap.t - center.t) / (lambda * lambda), scale_u * snap.values[i]));
            max_m = max_m.max(lambda * mf[i]);
        }
    }
    Ok(Frame { lambda, normalization, max_m, samples: values.len(), values })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub samples: Vec<f64>,
    /// `s^{-p} f(s)` at each sample.
    pub ratios: Vec<f64>,
    pub limit_estimate: f64,
    /// `|ratio − l|` non-increasing along the samples.
    pub converging: bool,
}

/// Pointwise check of `s^{-p} f(s) → l` along increasing samples.
pub fn general_f_limit(f: &dyn Fn(f64) -> f64, p: f64, samples: &[f64], l: f64) -> LimitReport {
    let ratios: Vec<f64> = samples.iter().map(|&s| f(s) / s.powf(p)).collect();
    let errs: Vec<f64> = ratios.iter().map(|r| (r - l).abs()).collect();
    LimitReport {
        samples: samples.to_vec(),
        limit_estimate: ratios.last().copied().unwrap_or(f64::NAN),
        converging: errs.windows(2).all(|w| w[1] <= w[0]),
        ratios,
    }
}

/// `λ^{2p/(p−1)} f(λ^{−2/(p−1)} v)`, the nonlinearity seen by the rescaled
/// function; tends to `l v^p` as `λ → 0`.
pub fn rescaled_nonlinearity(f: &dyn Fn(f64) -> f64, p: f64, lambda: f64, v: f64) -> f64 {
    lambda.powf(2.0 * p / (p - 1.0)) * f(lambda.powf(-2.0 / (p - 1.0)) * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, t: f64) -> ParabolicPoint {
        ParabolicPoint::new(vec![x], t)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(parabolic_distance(&pt(1.0, 2.0), &pt(1.0, 2.0)), 0.0);
        assert_eq!(parabolic_distance(&pt(0.0, 0.0), &pt(0.0, 4.0)), 2.0);
        assert_eq!(parabolic_distance(&pt(3.0, 0.0), &pt(0.0, 16.0)), 7.0);
        assert_eq!(Metric::Euclidean.distance(&pt(3.0, 0.0), &pt(0.0, 4.0)), 5.0);
    }

    #[test]
    fn constant_m_stays_put() {
        let points = (0..5).map(|i| pt(i as f64 * 0.1, 0.0)).collect();
        let inst = DoublingInstance::new(points, vec![Some(3.0); 5], 1.0, Metric::Parabolic).unwrap();
        let r = find_doubling_point(&inst, 2).unwrap();
        assert_eq!((r.index, r.hops), (2, 0));
        assert_eq!(r.certificate.m_dist, Distance::Infinite);
    }

    #[test]
    fn two_point_hop() {
        let inst = DoublingInstance::new(
            vec![pt(0.0, 0.0), pt(0.1, 0.0), pt(100.0, 0.0)],
            vec![Some(1.0), Some(3.0), None],
            1.0,
            Metric::Parabolic,
        )
        .unwrap();
        let r = find_doubling_point(&inst, 0).unwrap();
        assert_eq!((r.index, r.hops), (1, 1));
        assert!(r.certificate.holds());
    }

    #[test]
    fn hypothesis_failure() {
        let inst = DoublingInstance::new(vec![pt(0.0, 0.0), pt(0.5, 0.0)], vec![Some(1.0), None], 1.0, Metric::Parabolic).unwrap();
        assert!(matches!(find_doubling_point(&inst, 0), Err(Error::HypothesisFails { .. })));
    }

    #[test]
    fn invalid_instances() {
        assert!(DoublingInstance::new(vec![pt(0.0, 0.0)], vec![None], 1.0, Metric::Parabolic).is_err());
        assert!(DoublingInstance::new(vec![pt(0.0, 0.0)], vec![Some(0.0)], 1.0, Metric::Parabolic).is_err());
        assert!(DoublingInstance::new(vec![pt(0.0, 0.0)], vec![Some(1.0)], -1.0, Metric::Parabolic).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let inst = DoublingInstance::new(
            vec![pt(0.0, 0.0), pt(0.1, 0.5), pt(2.0, 1.0)],
            vec![Some(1.0), Some(3.0), None],
            0.25,
            Metric::Euclidean,
        )
        .unwrap();
        let text = inst.to_toml().unwrap();
        assert!(text.contains("gamma = true"));
        assert_eq!(DoublingInstance::from_toml(&text).unwrap(), inst);
        let bad = text.replace("gamma = true", "gamma = false");
        assert!(matches!(DoublingInstance::from_toml(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn limit_of_power_plus_linear() {
        let f = |s: f64| s.powi(3) + s;
        let r = general_f_limit(&f, 3.0, &[1.0, 10.0, 100.0, 1000.0], 1.0);
        assert!(r.converging);
        assert!((r.limit_estimate - 1.0).abs() < 1e-5);
        let v = 0.7;
        let a = rescaled_nonlinearity(&f, 3.0, 1e-3, v);
        assert!((a - v.powi(3)).abs() < 1e-5);
    }
}
