//! Period of the bounded oscillations as a function of their amplitude `M`.
//!
//! The defining integral
//!
//! ```text
//! T(M) = 2 ∫_{−M}^{M} dθ / √((2 − M² − θ²)(M² − θ²))
//! ```
//!
//! has inverse-square-root singularities at both ends. The substitution
//! `θ = M sin φ` removes them:
//!
//! ```text
//! T(M) = 2 ∫_{−π/2}^{π/2} dφ / √(2 − M² − M² sin²φ)
//! ```
//!
//! which is analytic and is integrated by Gauss–Legendre with node doubling.
//! The independent check is `T(M) = 4 K(m) / √(2 − M²)` with the parameter
//! `m = M² / (2 − M²)` (convention `K(m) = ∫₀^{π/2} dφ / √(1 − m sin²φ)`,
//! `m = k²`), and `K` from the arithmetic–geometric mean.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node doubling stops once successive estimates differ by less than this.
pub const QUADRATURE_TOL: f64 = 1e-12;

const MIN_NODES: usize = 8;
const MAX_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodMethod {
    SubstitutionQuadrature,
    EllipticAgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    pub amplitude: f64,
    pub period: f64,
    pub method: PeriodMethod,
    pub est_error: f64,
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn substituted_period(m: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let m2 = m * m;
    let sum: f64 = x
        .iter()
        .zip(&w)
        .map(|(x, w)| {
            let s = (FRAC_PI_2 * x).sin();
            w / (2.0 - m2 - m2 * s * s).sqrt()
        })
        .sum();
    // dφ = (π/2) dx
    2.0 * FRAC_PI_2 * sum
}

fn check_amplitude(m: f64) -> Result<()> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::domain(format!("amplitude must lie in (0, 1), got {m}")));
    }
    Ok(())
}

/// Period by sine substitution and Gauss–Legendre with node doubling.
pub fn period_integral(m: f64) -> Result<PeriodResult> {
    check_amplitude(m)?;
    let mut n = MIN_NODES;
    let mut prev = substituted_period(m, n);
    loop {
        n *= 2;
        let next = substituted_period(m, n);
        let diff = (next - prev).abs();
        if diff < QUADRATURE_TOL || n >= MAX_NODES {
            return Ok(PeriodResult {
                amplitude: m,
                period: next,
                method: PeriodMethod::SubstitutionQuadrature,
                est_error: diff.max(8.0 * f64::EPSILON * next),
            });
        }
        prev = next;
    }
}

/// Complete elliptic integral of the first kind, parameter convention
/// `m = k²`, by the arithmetic–geometric mean.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::domain(format!("parameter m must lie in [0, 1), got {m}")));
    }
    Ok(FRAC_PI_2 / agm(1.0, (1.0 - m).sqrt()))
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        if an == a && bn == b {
            break;
        }
        a = an;
        b = bn;
    }
    0.5 * (a + b)
}

/// Period through the closed form `4 K(M²/(2 − M²)) / √(2 − M²)`.
pub fn period_agm(m: f64) -> Result<PeriodResult> {
    check_amplitude(m)?;
    let s = 2.0 - m * m;
    let period = 4.0 * elliptic_k(m * m / s)? / s.sqrt();
    Ok(PeriodResult {
        amplitude: m,
        period,
        method: PeriodMethod::EllipticAgm,
        est_error: 8.0 * f64::EPSILON * period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    /// Independent oracle: composite Simpson on the defining integral of K.
    fn k_by_simpson(m: f64) -> f64 {
        let n = 20_000usize;
        let h = FRAC_PI_2 / n as f64;
        let f = |p: f64| 1.0 / (1.0 - m * p.sin().powi(2)).sqrt();
        let mut acc = f(0.0) + f(FRAC_PI_2);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 14 monomial: ∫ x^14 = 2/15
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let (x, w) = gauss_legendre(1024);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(x.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn elliptic_k_examples() {
        assert!((elliptic_k(0.0).unwrap() - FRAC_PI_2).abs() < 1e-16);
        let k = elliptic_k(0.5).unwrap();
        assert!((k - 1.854_074_7).abs() < 1e-7);
        assert!((k - k_by_simpson(0.5)).abs() < 1e-12);
        for m in [0.1, 0.3, 0.7, 0.9] {
            assert!((elliptic_k(m).unwrap() - k_by_simpson(m)).abs() < 1e-11, "m = {m}");
        }
        assert!(elliptic_k(0.9).unwrap() > elliptic_k(0.5).unwrap());
        assert!(elliptic_k(0.5).unwrap() > elliptic_k(0.1).unwrap());
    }

    #[test]
    fn elliptic_k_domain() {
        for m in [-0.1, 1.0, 2.0, f64::NAN] {
            assert!(matches!(elliptic_k(m), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn amplitude_domain() {
        for m in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(period_integral(m), Err(Error::Domain(_))));
            assert!(matches!(period_agm(m), Err(Error::Domain(_))));
        }
    }

    // Reference values from 40-digit evaluation of 4K(m)/√(2 − M²).
    const T_1E3: f64 = 4.442_884_604_240_457;
    const T_1E4: f64 = 4.442_882_954_819_177;
    const T_HALF: f64 = 4.934_422_337_439_706;

    #[test]
    fn small_amplitude_limit() {
        let lim = PI * SQRT_2;
        assert!((period_integral(1e-3).unwrap().period - T_1E3).abs() < 1e-14);
        assert!((period_integral(1e-4).unwrap().period - T_1E4).abs() < 1e-14);
        // Leading correction of the linearisation is (3/8)·π√2·M².
        let mut prev_err = f64::INFINITY;
        for m in [1e-2, 1e-3, 1e-4] {
            let err = period_integral(m).unwrap().period - lim;
            let predicted = 0.375 * lim * m * m;
            assert!((err - predicted).abs() <= 1e-3 * predicted + 1e-14, "M = {m}: {err} vs {predicted}");
            assert!(err < prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn half_amplitude_agrees_with_agm() {
        let q = period_integral(0.5).unwrap();
        let a = period_agm(0.5).unwrap();
        assert!((q.period - a.period).abs() <= 1e-10);
        assert!((q.period - T_HALF).abs() < 1e-13);
        assert!((a.period - T_HALF).abs() < 1e-13);
    }

    #[test]
    fn grid_agreement_and_monotonicity() {
        let mut prev = PI * SQRT_2;
        for i in 1..=9 {
            let m = 0.1 * i as f64;
            let q = period_integral(m).unwrap();
            let a = period_agm(m).unwrap();
            assert!((q.period - a.period).abs() <= 1e-10, "M = {m}");
            assert!((q.period - a.period).abs() <= q.est_error + a.est_error, "M = {m}");
            assert!(q.period > prev);
            prev = q.period;
        }
        let t999 = period_integral(0.999).unwrap();
        assert!(t999.period.is_finite() && t999.period > period_integral(0.9).unwrap().period);
        assert!((t999.period - period_agm(0.999).unwrap().period).abs() <= 1e-10);
    }
}
