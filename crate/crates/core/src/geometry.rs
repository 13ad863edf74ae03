//! Plane/cylinder coordinate changes and the Kelvin inversion.
//!
//! Radial functions are stored as samples `u(r_i)` on a grid that is uniform
//! in `t = ln r`, so moving to the cylinder is a relabelling of the grid and
//! never an interpolation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// `t = ln r`.
pub fn to_cylinder(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be positive and finite, got {r}")));
    }
    Ok(r.ln())
}

/// `r = e^t`.
pub fn from_cylinder(t: f64) -> f64 {
    t.exp()
}

/// A point `(t, θ)` on the cylinder `R × S¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderCoords {
    pub t: f64,
    /// Angle, interpreted mod 2π.
    pub theta: f64,
}

impl CylinderCoords {
    /// Polar point `(r, θ)` of the punctured plane mapped to the cylinder.
    pub fn from_polar(r: f64, theta: f64) -> Result<Self> {
        Ok(Self { t: to_cylinder(r)?, theta })
    }

    pub fn to_polar(self) -> (f64, f64) {
        (from_cylinder(self.t), self.theta)
    }

    /// Angle reduced to `[0, 2π)`.
    pub fn theta_reduced(self) -> f64 {
        self.theta.rem_euclid(std::f64::consts::TAU)
    }
}

/// Samples of a radial function `u(r)` on a strictly increasing positive grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct RadialProfile {
    r_grid: Vec<f64>,
    values: Vec<f64>,
    origin_value: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    r: Vec<f64>,
    u: Vec<f64>,
    origin_value: Option<f64>,
}

impl TryFrom<ProfileRepr> for RadialProfile {
    type Error = Error;

    fn try_from(repr: ProfileRepr) -> Result<Self> {
        let mut p = RadialProfile::new(repr.r, repr.u)?;
        p.origin_value = repr.origin_value;
        Ok(p)
    }
}

impl From<RadialProfile> for ProfileRepr {
    fn from(p: RadialProfile) -> Self {
        ProfileRepr { r: p.r_grid, u: p.values, origin_value: p.origin_value }
    }
}

impl RadialProfile {
    pub fn new(r_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if r_grid.len() != values.len() {
            return Err(Error::domain(format!(
                "grid has {} radii but {} values",
                r_grid.len(),
                values.len()
            )));
        }
        if r_grid.is_empty() {
            return Err(Error::domain("empty profile"));
        }
        if let Some(r) = r_grid.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::domain(format!("radius {r} is not positive and finite")));
        }
        if r_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("radii must be strictly increasing"));
        }
        if values.iter().any(|u| !u.is_finite()) {
            return Err(Error::domain("profile values must be finite"));
        }
        Ok(Self { r_grid, values, origin_value: None })
    }

    /// Profile from cylinder samples `v(t0 + i·h)`, i.e. `u(e^{t0 + i·h})`.
    pub fn from_cylinder_samples(t0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain("grid step must be positive"));
        }
        let r = (0..values.len()).map(|i| from_cylinder(t0 + i as f64 * h)).collect();
        Self::new(r, values)
    }

    /// Samples `f(t)` on `n` points uniformly spaced over `[t_min, t_max]`.
    pub fn sample_cylinder(t_min: f64, t_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(t_max > t_min) {
            return Err(Error::domain("need at least two points on a nondegenerate window"));
        }
        let h = (t_max - t_min) / (n - 1) as f64;
        let values = (0..n).map(|i| f(t_min + i as f64 * h)).collect();
        Self::from_cylinder_samples(t_min, h, values)
    }

    pub fn with_origin_value(mut self, origin_value: Option<f64>) -> Self {
        self.origin_value = origin_value;
        self
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin_value(&self) -> Option<f64> {
        self.origin_value
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The grid in cylinder coordinates.
    pub fn t_grid(&self) -> Vec<f64> {
        self.r_grid.iter().map(|r| r.ln()).collect()
    }

    /// Spacing of the `t` grid, or a domain error when it is not uniform.
    pub fn uniform_t_step(&self) -> Result<f64> {
        let t = self.t_grid();
        if t.len() < 2 {
            return Err(Error::domain("a single point has no grid step"));
        }
        let n = t.len();
        let h = (t[n - 1] - t[0]) / (n - 1) as f64;
        let scale = t[0].abs().max(t[n - 1].abs());
        let slack = 1e-8 * h + 1e-13 * scale;
        for w in t.windows(2) {
            if ((w[1] - w[0]) - h).abs() > slack {
                return Err(Error::domain(format!(
                    "t-grid is not uniform: step {} vs mean {}",
                    w[1] - w[0],
                    h
                )));
            }
        }
        Ok(h)
    }

    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "u"])?;
        for (r, u) in self.r_grid.iter().zip(&self.values) {
            wr.write_record([fmt_f64(*r), fmt_f64(*u)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn from_csv<R: Read>(rd: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(rd);
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "u" {
            return Err(Error::Parse(format!("expected header `r,u`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut r = Vec::new();
        let mut u = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            r.push(parse_f64(&rec[0])?);
            u.push(parse_f64(&rec[1])?);
        }
        Self::new(r, u)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

/// Kelvin inversion `ũ(x) = u(x/|x|²)`; radially `ũ(r) = u(1/r)`, i.e. `t ↦ −t`.
///
/// The inverted grid is re-sorted increasing, so the values come out reversed.
/// The origin value of the image is the `r → ∞` limit of the input, which a
/// finite sample does not determine; it is left unset.
pub fn kelvin(profile: &RadialProfile) -> RadialProfile {
    let r_grid = profile.r_grid.iter().rev().map(|r| 1.0 / r).collect();
    let values = profile.values.iter().rev().copied().collect();
    RadialProfile { r_grid, values, origin_value: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{soliton_value, SolitonParams};
    use proptest::prelude::*;

    #[test]
    fn cylinder_examples() {
        assert_eq!(to_cylinder(1.0).unwrap(), 0.0);
        assert!((to_cylinder(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!((to_cylinder((-3.0f64).exp()).unwrap() + 3.0).abs() < 1e-15);
        assert_eq!(from_cylinder(0.0), 1.0);
        assert!((from_cylinder(1.0) - std::f64::consts::E).abs() < 1e-15);
        assert!((from_cylinder(to_cylinder(7.3).unwrap()) - 7.3).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        assert!(matches!(to_cylinder(0.0), Err(Error::Domain(_))));
        assert!(matches!(to_cylinder(-1.0), Err(Error::Domain(_))));
        assert!(matches!(to_cylinder(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_rejects_bad_grids() {
        assert!(RadialProfile::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(RadialProfile::new(vec![1.0, 2.0], vec![0.0, f64::NAN]).is_err());
        assert!(RadialProfile::new(vec![1.0, 2.0], vec![0.0]).is_err());
    }

    #[test]
    fn kelvin_maps_soliton_to_inverse_scale_opposite_sign() {
        let p = SolitonParams::new(2.0, 1).unwrap();
        let q = SolitonParams::new(0.5, -1).unwrap();
        let prof = RadialProfile::sample_cylinder(-6.0, 6.0, 121, |t| soliton_value(p, from_cylinder(t))).unwrap();
        let k = kelvin(&prof);
        for (r, u) in k.r_grid().iter().zip(k.values()) {
            assert!((u - soliton_value(q, *r)).abs() < 1e-14, "r = {r}");
        }
        assert!(k.r_grid().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn kelvin_fixes_constants() {
        let prof = RadialProfile::sample_cylinder(-3.0, 3.0, 31, |_| 1.0).unwrap();
        assert!(kelvin(&prof).values().iter().all(|u| *u == 1.0));
    }

    #[test]
    fn uniform_step_detects_nonuniform_grids() {
        let prof = RadialProfile::sample_cylinder(-2.0, 2.0, 41, |_| 0.0).unwrap();
        assert!((prof.uniform_t_step().unwrap() - 0.1).abs() < 1e-12);
        let bad = RadialProfile::new(vec![1.0, 2.0, 5.0], vec![0.0; 3]).unwrap();
        assert!(bad.uniform_t_step().is_err());
    }

    #[test]
    fn kelvin_preserves_uniform_t_grid() {
        let prof = RadialProfile::sample_cylinder(-5.0, 3.0, 81, |t| t.tanh()).unwrap();
        let k = kelvin(&prof);
        assert!((k.uniform_t_step().unwrap() - 0.1).abs() < 1e-12);
        assert!((k.t_grid()[0] + 3.0).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn cylinder_round_trip(log10_r in -8.0f64..8.0) {
            let r = 10f64.powf(log10_r);
            let back = from_cylinder(to_cylinder(r).unwrap());
            prop_assert!(((back - r) / r).abs() <= 1e-14);
        }

        #[test]
        fn kelvin_is_an_involution(values in prop::collection::vec(-1.0f64..1.0, 3..40), t0 in -5.0f64..5.0) {
            let prof = RadialProfile::from_cylinder_samples(t0, 0.1, values).unwrap();
            let twice = kelvin(&kelvin(&prof));
            prop_assert_eq!(twice.values(), prof.values());
            for (a, b) in twice.r_grid().iter().zip(prof.r_grid()) {
                prop_assert!(((a - b) / b).abs() <= 1e-15);
            }
        }

        #[test]
        fn profile_csv_and_json_round_trip(values in prop::collection::vec(-1.0f64..1.0, 1..30), t0 in -10.0f64..10.0, ov in prop::option::of(-1.0f64..1.0)) {
            let prof = RadialProfile::from_cylinder_samples(t0, 0.37, values).unwrap().with_origin_value(ov);
            let mut buf = Vec::new();
            prof.to_csv(&mut buf).unwrap();
            let back = RadialProfile::from_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.values(), prof.values());
            prop_assert_eq!(back.r_grid(), prof.r_grid());
            let json = RadialProfile::from_json(&prof.to_json().unwrap()).unwrap();
            prop_assert_eq!(json, prof);
        }
    }
}
