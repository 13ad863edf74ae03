//! Exact solution families, the discrete residual oracle and the energy.
//!
//! Everything here is evaluated on the cylinder, where the radial equation
//! becomes the constant-coefficient ODE `−v_tt = 2v(1 − v²)`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RadialProfile;

/// Integrand magnitude below which a tail counts as decayed.
pub const TAIL_DECAY_THRESHOLD: f64 = 1e-12;

/// Scale and sign of the soliton `sign·(a² − r²)/(a² + r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    a: f64,
    sign: i8,
}

impl SolitonParams {
    pub fn new(a: f64, sign: i8) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::domain(format!("soliton scale must be positive, got {a}")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::domain(format!("soliton sign must be ±1, got {sign}")));
        }
        Ok(Self { a, sign })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Position of the kink on the cylinder, `ln a`.
    pub fn center(&self) -> f64 {
        self.a.ln()
    }
}

pub fn soliton_value(p: SolitonParams, r: f64) -> f64 {
    let a2 = p.a * p.a;
    let r2 = r * r;
    f64::from(p.sign) * (a2 - r2) / (a2 + r2)
}

/// The soliton on the cylinder: `−sign·tanh(t − ln a)`.
pub fn soliton_cylinder(p: SolitonParams, t: f64) -> f64 {
    -f64::from(p.sign) * (t - p.center()).tanh()
}

/// Central-difference residual `−v_tt − 2v(1 − v²)` at interior points of a
/// uniform grid with step `h`.
pub fn cylinder_residual(values: &[f64], h: f64) -> Result<Vec<f64>> {
    if values.len() < 3 {
        return Err(Error::domain(format!("need at least 3 points, got {}", values.len())));
    }
    let inv_h2 = 1.0 / (h * h);
    Ok(values
        .windows(3)
        .map(|w| {
            let v = w[1];
            -(w[0] - 2.0 * v + w[2]) * inv_h2 - 2.0 * v * (1.0 - v * v)
        })
        .collect())
}

/// Residual of the radial equation at the interior points of `profile`,
/// evaluated in cylinder form (so the `1/r²` weight never appears).
pub fn pde_residual(profile: &RadialProfile) -> Result<Vec<f64>> {
    if profile.len() < 3 {
        return Err(Error::domain(format!("need at least 3 points, got {}", profile.len())));
    }
    let h = profile.uniform_t_step()?;
    cylinder_residual(profile.values(), h)
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyWindow {
    Range(f64, f64),
    WholeLine,
}

/// Result of an energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    /// `+∞` when a whole-line request finds a non-decaying tail.
    pub value: f64,
    /// Value integrated over `span`, always finite.
    pub windowed: f64,
    pub window: EnergyWindow,
    /// The `t` interval actually integrated.
    pub span: (f64, f64),
}

impl EnergyValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Derivative at `x` of the quadratic interpolating three points, in divided
/// differences so that constant data give exactly zero.
fn quadratic_slope(ts: [f64; 3], vs: [f64; 3], x: f64) -> f64 {
    let [t0, t1, t2] = ts;
    let d01 = (vs[1] - vs[0]) / (t1 - t0);
    let d12 = (vs[2] - vs[1]) / (t2 - t1);
    let d012 = (d12 - d01) / (t2 - t0);
    d01 + d012 * ((x - t0) + (x - t1))
}

/// Second-order finite-difference `v_t` at every node of `t`.
pub fn grid_slope(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|i| {
            let j = i.clamp(1, n - 2) - 1;
            quadratic_slope([t[j], t[j + 1], t[j + 2]], [v[j], v[j + 1], v[j + 2]], t[i])
        })
        .collect()
}

/// Cylinder energy `2π ∫ (v_t² + (v² − 1)²) dt`, trapezoid rule on the grid.
pub fn energy(t: &[f64], v: &[f64], window: EnergyWindow) -> Result<EnergyValue> {
    let n = t.len();
    if n != v.len() {
        return Err(Error::domain("t and v lengths differ"));
    }
    if n < 3 {
        return Err(Error::domain("energy needs at least 3 samples"));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("t grid must be strictly increasing"));
    }
    let slope = grid_slope(t, v);
    let density: Vec<f64> = v
        .iter()
        .zip(&slope)
        .map(|(v, vt)| vt * vt + (v * v - 1.0).powi(2))
        .collect();

    let (lo, hi) = match window {
        EnergyWindow::Range(a, b) => {
            let slack = 1e-12 * (t[n - 1] - t[0]);
            if !(a < b) || a < t[0] - slack || b > t[n - 1] + slack {
                return Err(Error::domain(format!(
                    "window [{a}, {b}] is not inside the grid [{}, {}]",
                    t[0],
                    t[n - 1]
                )));
            }
            (a.max(t[0]), b.min(t[n - 1]))
        }
        EnergyWindow::WholeLine => (t[0], t[n - 1]),
    };

    let mut integral = 0.0;
    for i in 0..n - 1 {
        let (ta, tb) = (t[i], t[i + 1]);
        let a = ta.max(lo);
        let b = tb.min(hi);
        if b <= a {
            continue;
        }
        let lerp = |x: f64| density[i] + (density[i + 1] - density[i]) * (x - ta) / (tb - ta);
        integral += 0.5 * (b - a) * (lerp(a) + lerp(b));
    }
    let windowed = TAU * integral;

    let value = match window {
        EnergyWindow::WholeLine
            if density[0].abs() >= TAIL_DECAY_THRESHOLD || density[n - 1].abs() >= TAIL_DECAY_THRESHOLD =>
        {
            f64::INFINITY
        }
        _ => windowed,
    };
    Ok(EnergyValue { value, windowed, window, span: (lo, hi) })
}

/// Energy of a radial profile through its cylinder samples.
pub fn profile_energy(profile: &RadialProfile, window: EnergyWindow) -> Result<EnergyValue> {
    energy(&profile.t_grid(), profile.values(), window)
}
