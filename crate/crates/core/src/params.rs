//! Problem parameters, regime classification and the closed-form exponents.
//!
//! `p` and `q` are carried as exact rationals so that the critical manifold
//! `q (p + 1) = 2 p` is decided without rounding. Everything downstream of the
//! classification works in `f64`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// A rational number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extended {
    Finite(Rational),
    Infinite,
}

impl Extended {
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(r) => ratio_to_f64(r),
            Extended::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// Exact comparison `r < self`.
    pub fn exceeds(self, r: Rational) -> bool {
        match self {
            Extended::Finite(x) => r < x,
            Extended::Infinite => true,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(r) => write!(f, "{}", r),
            Extended::Infinite => write!(f, "inf"),
        }
    }
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3/2"`, `"3"` or a finite decimal such as `"1.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return Err(Error::Domain(format!("cannot parse rational {s:?}")));
        }
        let neg = int.starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse()
                .map_err(|_| Error::Domain(format!("cannot parse rational {s:?}")))?
        };
        let den = 10i64.pow(frac.len() as u32);
        let frac_part: i64 = frac.parse().unwrap_or(0);
        let mag = int_part.abs() * den + frac_part;
        let num = if neg || int_part < 0 { -mag } else { mag };
        return Ok(Rational::new(num, den));
    }
    Rational::from_str(s).map_err(|_| Error::Domain(format!("cannot parse rational {s:?}")))
}

/// The tuple `(N, p, q, M)` of the equation `u_t − Δu = u^p + M|∇u|^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    dim: usize,
    p: Rational,
    q: Rational,
    m: f64,
}

impl Serialize for ProblemParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ProblemParams", 4)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("p", &self.p.to_string())?;
        st.serialize_field("q", &self.q.to_string())?;
        st.serialize_field("m", &self.m)?;
        st.end()
    }
}

impl ProblemParams {
    pub fn new(dim: usize, p: Rational, q: Rational, m: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if p <= Rational::one() {
            return Err(Error::Domain(format!("p = {p} must exceed 1")));
        }
        if q <= Rational::one() {
            return Err(Error::Domain(format!("q = {q} must exceed 1")));
        }
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("M = {m} must be finite and nonnegative")));
        }
        Ok(Self { dim, p, q, m })
    }

    /// Convenience constructor from integer pairs `(p_num, p_den)`, `(q_num, q_den)`.
    pub fn from_parts(dim: usize, p: (i64, i64), q: (i64, i64), m: f64) -> Result<Self> {
        if p.1 == 0 || q.1 == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        Self::new(dim, Rational::new(p.0, p.1), Rational::new(q.0, q.1), m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn p(&self) -> Rational {
        self.p
    }
    pub fn q(&self) -> Rational {
        self.q
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn p_f64(&self) -> f64 {
        ratio_to_f64(self.p)
    }
    pub fn q_f64(&self) -> f64 {
        ratio_to_f64(self.q)
    }

    pub fn with_m(&self, m: f64) -> Result<Self> {
        Self::new(self.dim, self.p, self.q, m)
    }

    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(dim, self.p, self.q, self.m)
    }

    pub fn regime(&self) -> Regime {
        classify(self)
    }

    pub fn exponents(&self) -> CriticalExponents {
        exponents(self)
    }
}

/// Position of `q` relative to the critical exponent `2p/(p+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Subcritical => "Subcritical",
            Regime::Critical => "Critical",
            Regime::Supercritical => "Supercritical",
        };
        f.write_str(s)
    }
}

/// Classifies `(p, q)` by the sign of `q(p+1) − 2p`, evaluated exactly.
///
/// With `p = a/b` and `q = c/d` (positive denominators) the comparison is
/// `c (a + b)` against `2 a d`, done in 128-bit integers.
pub fn classify_pq(p: Rational, q: Rational) -> Result<Regime> {
    if p <= Rational::one() || q <= Rational::one() {
        return Err(Error::Domain(format!("need p > 1 and q > 1, got p = {p}, q = {q}")));
    }
    let (a, b) = (*p.numer() as i128, *p.denom() as i128);
    let (c, d) = (*q.numer() as i128, *q.denom() as i128);
    let lhs = c * (a + b);
    let rhs = 2 * a * d;
    Ok(match lhs.cmp(&rhs) {
        std::cmp::Ordering::Less => Regime::Subcritical,
        std::cmp::Ordering::Equal => Regime::Critical,
        std::cmp::Ordering::Greater => Regime::Supercritical,
    })
}

pub fn classify(params: &ProblemParams) -> Regime {
    classify_pq(params.p, params.q).expect("validated parameters")
}

/// `2p/(p+1)`.
pub fn critical_q(p: Rational) -> Rational {
    (p * 2) / (p + Rational::one())
}

/// `(N+2)/(N−2)`, infinite for `N ≤ 2`.
pub fn sobolev_exponent(dim: usize) -> Extended {
    if dim <= 2 {
        Extended::Infinite
    } else {
        let n = dim as i64;
        Extended::Finite(Rational::new(n + 2, n - 2))
    }
}

/// `N(N+2)/(N−1)²`, infinite for `N = 1`.
pub fn bidaut_veron_exponent(dim: usize) -> Extended {
    if dim <= 1 {
        Extended::Infinite
    } else {
        let n = dim as i64;
        Extended::Finite(Rational::new(n * (n + 2), (n - 1) * (n - 1)))
    }
}

/// Gradient-coefficient threshold of the critical pointwise estimate,
/// `(6N(p+1))^{p/(p+1)} ((p+1)/(p−1))^{1/2}`.
pub fn m0_threshold(dim: usize, p: f64) -> f64 {
    let n = dim as f64;
    (6.0 * n * (p + 1.0)).powf(p / (p + 1.0)) * ((p + 1.0) / (p - 1.0)).sqrt()
}

/// Exponent of the power-shift auxiliary function, `1 + N/(3(q−1))`.
pub fn bernstein_gamma(dim: usize, q: f64) -> f64 {
    1.0 + dim as f64 / (3.0 * (q - 1.0))
}

/// Natural log of the Young constant
/// `C(N,p,q) = ((q−1)/q) (6p)^{q/(q−1)} (2N/(q(q−1)))^{1/(q−1)}`.
pub fn young_constant_ln(dim: usize, p: f64, q: f64) -> f64 {
    let n = dim as f64;
    ((q - 1.0) / q).ln()
        + q / (q - 1.0) * (6.0 * p).ln()
        + (2.0 * n / (q * (q - 1.0))).ln() / (q - 1.0)
}

pub fn young_constant(dim: usize, p: f64, q: f64) -> f64 {
    young_constant_ln(dim, p, q).exp()
}

/// Default `c_{N,p,q}` of the subcritical bound `u ≤ c M^{2/(2p−(p+1)q)}`:
/// `(2N C(N,p,q)/(q−1))^{(q−1)/((p+1)q−2p)}`. `None` at the critical exponent.
pub fn default_upper_constant(dim: usize, p: f64, q: f64) -> Option<f64> {
    let denom = (p + 1.0) * q - 2.0 * p;
    if denom.abs() < 1e-14 {
        return None;
    }
    let n = dim as f64;
    let ln_base = (2.0 * n / (q - 1.0)).ln() + young_constant_ln(dim, p, q);
    Some(((q - 1.0) / denom * ln_base).exp())
}

/// Closed-form exponents and thresholds attached to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalExponents {
    pub q_c: Rational,
    pub p_s: Extended,
    pub p_b: Extended,
    pub m0: f64,
    pub gamma: f64,
}

pub fn exponents(params: &ProblemParams) -> CriticalExponents {
    CriticalExponents {
        q_c: critical_q(params.p),
        p_s: sobolev_exponent(params.dim),
        p_b: bidaut_veron_exponent(params.dim),
        m0: m0_threshold(params.dim, params.p_f64()),
        gamma: bernstein_gamma(params.dim, params.q_f64()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_pq(r(3, 1), r(3, 2)).unwrap(), Regime::Critical);
        assert_eq!(classify_pq(r(3, 1), r(6, 5)).unwrap(), Regime::Subcritical);
        assert_eq!(classify_pq(r(2, 1), r(19, 10)).unwrap(), Regime::Supercritical);
    }

    #[test]
    fn classify_rejects_out_of_domain() {
        assert!(classify_pq(r(1, 1), r(3, 2)).is_err());
        assert!(classify_pq(r(2, 1), r(1, 1)).is_err());
        assert!(classify_pq(r(1, 2), r(3, 2)).is_err());
        assert!(ProblemParams::from_parts(1, (3, 1), (1, 1), 1.0).is_err());
        assert!(ProblemParams::from_parts(0, (3, 1), (3, 2), 1.0).is_err());
        assert!(ProblemParams::from_parts(1, (3, 1), (3, 2), -1.0).is_err());
    }

    #[test]
    fn exponent_examples() {
        let p = ProblemParams::from_parts(3, (2, 1), (3, 2), 1.0).unwrap();
        let e = exponents(&p);
        assert_eq!(e.p_s, Extended::Finite(r(5, 1)));
        assert_eq!(e.p_b, Extended::Finite(r(15, 4)));
        assert_eq!(bidaut_veron_exponent(1), Extended::Infinite);
        assert_eq!(sobolev_exponent(2), Extended::Infinite);
        assert_eq!(sobolev_exponent(1), Extended::Infinite);

        let p1 = ProblemParams::from_parts(1, (3, 1), (3, 2), 1.0).unwrap();
        let e1 = exponents(&p1);
        assert!((e1.m0 - 15.336).abs() < 2e-3, "m0 = {}", e1.m0);
        assert!((e1.gamma - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(e1.q_c, r(3, 2));
    }

    #[test]
    fn p_b_below_p_s_for_dims_3_to_10() {
        for n in 3..=10 {
            let pb = bidaut_veron_exponent(n);
            let ps = sobolev_exponent(n);
            match (pb, ps) {
                (Extended::Finite(b), Extended::Finite(s)) => assert!(b < s, "N = {n}"),
                _ => panic!("finite exponents expected for N = {n}"),
            }
        }
    }

    #[test]
    fn gamma_diverges_near_one() {
        for n in 1..=5 {
            for eps in [1e-2, 1e-4] {
                let g = bernstein_gamma(n, 1.0 + eps);
                assert!(g > 1.0);
                assert!(g > n as f64 / (3.0 * eps), "N = {n}, eps = {eps}");
            }
        }
    }

    #[test]
    fn default_constant_matches_m0_route_at_criticality_limit() {
        // At q = q_c the Young-constant route reproduces M0 as
        // (2N C/(q−1))^{(q−1)/2}.
        for (n, p) in [(1usize, 3.0f64), (2, 2.0), (3, 1.5)] {
            let q = 2.0 * p / (p + 1.0);
            let ln = (2.0 * n as f64 / (q - 1.0)).ln() + young_constant_ln(n, p, q);
            let via_young = ((q - 1.0) / 2.0 * ln).exp();
            let closed = m0_threshold(n, p);
            assert!(((via_young - closed) / closed).abs() < 1e-12);
        }
        assert!(default_upper_constant(1, 3.0, 1.5).is_none());
        let c = default_upper_constant(1, 3.0, 1.2).unwrap();
        assert!(c > 0.0 && c < 1.0);
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("3/2").unwrap(), r(3, 2));
        assert_eq!(parse_rational("1.2").unwrap(), r(6, 5));
        assert_eq!(parse_rational("4").unwrap(), r(4, 1));
        assert_eq!(parse_rational(" 19/10 ").unwrap(), r(19, 10));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1.").is_err());
    }
}
