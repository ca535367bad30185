use serde::{Deserialize, Serialize};

use super::{Field, Grid, Point};

/// Families of initial data, all expressed relative to the grid centre `x₀`
/// and radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    Constant { value: f64 },
    /// `A(1 − |x−x₀|²/R²)`.
    Paraboloid { amplitude: f64 },
    /// `A·exp(−|x−x₀|²/w²)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `A·exp(1 − 1/(1 − |x−x₀|²/w²))` inside `|x−x₀| < w`, zero outside.
    Bump { amplitude: f64, width: f64 },
    /// `A[(1 − r²/R²) + β ln((R² + ε²)/(r² + ε²))]`, a superharmonic peak.
    LogPeak { amplitude: f64, beta: f64, eps: f64 },
    /// `offset + A cos(κ (x − x₀))` along the first axis.
    Cosine { offset: f64, amplitude: f64, wavenumber: f64 },
}

impl InitialData {
    pub fn value(&self, grid: &Grid, x: &Point) -> f64 {
        let r = grid.dist_to_center(x);
        let big_r = grid.radius();
        match *self {
            InitialData::Zero => 0.0,
            InitialData::Constant { value } => value,
            InitialData::Paraboloid { amplitude } => {
                amplitude * (1.0 - (r / big_r).powi(2)).max(0.0)
            }
            InitialData::Gaussian { amplitude, width } => {
                amplitude * (-(r / width).powi(2)).exp()
            }
            InitialData::Bump { amplitude, width } => {
                let s = (r / width).powi(2);
                if s < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }
            InitialData::LogPeak { amplitude, beta, eps } => {
                let r2 = r * r;
                let big_r2 = big_r * big_r;
                let e2 = eps * eps;
                let v = (1.0 - r2 / big_r2) + beta * ((big_r2 + e2) / (r2 + e2)).ln();
                amplitude * v.max(0.0)
            }
            InitialData::Cosine { offset, amplitude, wavenumber } => {
                offset + amplitude * (wavenumber * (x[0] - grid.center()[0])).cos()
            }
        }
    }

    pub fn field(&self, grid: &Grid) -> Field {
        grid.sample(0.0, |x| self.value(grid, x))
    }

    /// Same family with the amplitude multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InitialData::Zero => {}
            InitialData::Constant { value } => *value *= s,
            InitialData::Paraboloid { amplitude }
            | InitialData::Gaussian { amplitude, .. }
            | InitialData::Bump { amplitude, .. }
            | InitialData::LogPeak { amplitude, .. } => *amplitude *= s,
            InitialData::Cosine { offset, amplitude, .. } => {
                *offset *= s;
                *amplitude *= s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_at_centre_and_edge() {
        let g = Grid::ball(1, &[0.0], 2.0, 0.25).unwrap();
        let c = [0.0, 0.0];
        let e = [2.0, 0.0];
        let p = InitialData::Paraboloid { amplitude: 3.0 };
        assert_eq!(p.value(&g, &c), 3.0);
        assert_eq!(p.value(&g, &e), 0.0);
        let b = InitialData::Bump { amplitude: 2.0, width: 1.0 };
        assert_eq!(b.value(&g, &c), 2.0);
        assert_eq!(b.value(&g, &[1.5, 0.0]), 0.0);
        let l = InitialData::LogPeak { amplitude: 1.0, beta: 2.0, eps: 1.0 };
        assert!((l.value(&g, &c) - (1.0 + 2.0 * 5f64.ln())).abs() < 1e-14);
        assert!(l.value(&g, &e).abs() < 1e-14);
        assert_eq!(InitialData::Zero.field(&g).max_over(&g), 0.0);
    }

    #[test]
    fn scaling_multiplies_values() {
        let g = Grid::ball(1, &[0.0], 2.0, 0.25).unwrap();
        let d = InitialData::Gaussian { amplitude: 1.5, width: 0.7 };
        let x = [0.3, 0.0];
        assert!((d.scaled(4.0).value(&g, &x) - 4.0 * d.value(&g, &x)).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_toml() {
        let d = InitialData::LogPeak { amplitude: 1e-10, beta: 2.0, eps: 1.0 };
        let s = toml::to_string(&d).unwrap();
        let back: InitialData = toml::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
