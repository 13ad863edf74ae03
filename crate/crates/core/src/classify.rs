//! Sorting phase data and sampled profiles into the classes of radial
//! solutions: the zero solution, the constants `±1`, solitons, periodic
//! orbits, and the unbounded branches that are not global solutions.

use std::f64::consts::LN_10;

use serde::{Serialize, Serializer};

use crate::closedform::{max_abs, pde_residual, SolitonParams};
use crate::error::{Error, Result};
use crate::geometry::RadialProfile;
use crate::orbit::{amplitude_from_c, first_integral, integrate, Crossing, EventKind, PhasePoint};
use crate::period::period_integral;

/// Width of the bands around `c = 0` and `c = −1` that are snapped onto the
/// boundary classes.
pub const EPS_C: f64 = 1e-9;

/// Tolerance of the auxiliary integrations that locate soliton centres and
/// periodic phases.
const LOCATE_TOL: f64 = 1e-12;

/// Longest stretch integrated while looking for a soliton's zero crossing.
const SOLITON_SEARCH_SPAN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnboundedReason {
    CAboveZero,
    CBelowMinusOne,
    /// `c ∈ [−1, 0]` but outside the bounded band, `|v| ≥ √(2 − M²)`.
    OuterBand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    TrivialZero,
    Equilibrium { sign: i8 },
    Soliton(SolitonParams),
    /// Amplitude `M`, period `T` and the time from the sample to the next maximum.
    Periodic { amplitude: f64, period: f64, phase: f64 },
    UnboundedBranch { c: f64, reason: UnboundedReason },
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::TrivialZero => "TrivialZero",
            Classification::Equilibrium { .. } => "Equilibrium",
            Classification::Soliton(_) => "Soliton",
            Classification::Periodic { .. } => "Periodic",
            Classification::UnboundedBranch { .. } => "UnboundedBranch",
        }
    }
}

/// A classification together with the raw first integral it was based on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classified {
    pub class: Classification,
    pub c: f64,
    /// `c` fell within the snapping band of a boundary value.
    pub snapped: bool,
}

/// Limit of `u` at `r → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginBehavior {
    Value(i8),
    Discontinuous,
    /// Unbounded branches blow up at finite `t` and never reach the origin.
    Undefined,
}

impl Serialize for OriginBehavior {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            OriginBehavior::Value(v) => s.serialize_i8(*v),
            OriginBehavior::Discontinuous => s.serialize_str("discontinuous"),
            OriginBehavior::Undefined => s.serialize_str("undefined"),
        }
    }
}

pub fn origin_value(class: &Classification) -> OriginBehavior {
    match class {
        Classification::TrivialZero => OriginBehavior::Value(0),
        Classification::Equilibrium { sign } => OriginBehavior::Value(*sign),
        Classification::Soliton(p) => OriginBehavior::Value(p.sign()),
        Classification::Periodic { .. } => OriginBehavior::Discontinuous,
        Classification::UnboundedBranch { .. } => OriginBehavior::Undefined,
    }
}

/// Classifies the solution through `p` (taken at `t = 0`).
pub fn classify_initial(p: PhasePoint) -> Result<Classified> {
    classify_with(p, 0.0, EPS_C)
}

fn classify_with(p: PhasePoint, t_at: f64, eps: f64) -> Result<Classified> {
    if !p.is_finite() {
        return Err(Error::domain("phase point must be finite"));
    }
    let c = first_integral(p);
    let v = p.v.abs();
    let unbounded = |reason| Classified { class: Classification::UnboundedBranch { c, reason }, c, snapped: false };

    if c < -1.0 - eps {
        return Ok(unbounded(UnboundedReason::CBelowMinusOne));
    }
    if c > eps {
        return Ok(unbounded(UnboundedReason::CAboveZero));
    }
    if (c + 1.0).abs() <= eps {
        // c = −1 holds on v = 0 and on the outer curve v_t² = v²(v² − 2).
        if v < 1.0 {
            return Ok(Classified { class: Classification::TrivialZero, c, snapped: c != -1.0 });
        }
        return Ok(Classified { snapped: c != -1.0, ..unbounded(UnboundedReason::OuterBand) });
    }
    if c.abs() <= eps {
        let snapped = c != 0.0;
        if v > 1.0 + eps {
            return Ok(Classified { snapped, ..unbounded(UnboundedReason::OuterBand) });
        }
        if (v - 1.0).abs() <= eps && p.v_t.abs() <= eps {
            let sign = if p.v > 0.0 { 1 } else { -1 };
            return Ok(Classified { class: Classification::Equilibrium { sign }, c, snapped });
        }
        let params = locate_soliton(p, t_at)?;
        return Ok(Classified { class: Classification::Soliton(params), c, snapped });
    }

    let m = amplitude_from_c(c)?;
    if v <= m + eps {
        let period = period_integral(m)?.period;
        let phase = time_to_next_maximum(p, period)?;
        return Ok(Classified { class: Classification::Periodic { amplitude: m, period, phase }, c, snapped: false });
    }
    if v >= (2.0 - m * m).sqrt() - eps {
        return Ok(unbounded(UnboundedReason::OuterBand));
    }
    Err(Error::domain(format!("phase point ({}, {}) lies between the bounded and outer bands", p.v, p.v_t)))
}

/// Soliton through `p` at time `t_at`: its centre is where `v` vanishes.
fn locate_soliton(p: PhasePoint, t_at: f64) -> Result<SolitonParams> {
    if p.v == 0.0 {
        let sign = if p.v_t < 0.0 { 1 } else { -1 };
        return SolitonParams::new(t_at.exp(), sign);
    }
    let drift = if p.v_t != 0.0 { p.v_t } else { p.acceleration() };
    let dir = if p.v * drift < 0.0 { 1.0 } else { -1.0 };
    let orbit = integrate(p, (0.0, dir * SOLITON_SEARCH_SPAN), LOCATE_TOL)?;
    let crossing = if dir > 0.0 {
        orbit.events_of(EventKind::VZero).next()
    } else {
        orbit.events_of(EventKind::VZero).last()
    };
    match crossing {
        Some(e) => {
            let sign = if e.crossing == Crossing::Falling { 1 } else { -1 };
            SolitonParams::new((t_at + e.t).exp(), sign)
        }
        None => {
            // Too close to ±1 to reach zero within the search span: use the
            // closed form v = −s·tanh(t − ln a) instead.
            let sign: i8 = if p.v_t < 0.0 || (p.v_t == 0.0 && p.v > 0.0) { 1 } else { -1 };
            let s = f64::from(sign);
            SolitonParams::new((t_at + (s * p.v).atanh()).exp(), sign)
        }
    }
}

fn time_to_next_maximum(p: PhasePoint, period: f64) -> Result<f64> {
    let orbit = integrate(p, (0.0, 1.5 * period), LOCATE_TOL)?;
    let t = orbit
        .events_of(EventKind::VtZero)
        .find(|e| e.crossing == Crossing::Falling && orbit.eval(e.t).is_some_and(|q| q.v > 0.0))
        .map(|e| e.t)
        .ok_or_else(|| Error::NotConverged("no maximum found within one and a half periods".into()))?;
    Ok(if t >= period { t - period } else { t })
}

/// Result of classifying a sampled radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileClassification {
    pub classified: Classified,
    /// Cylinder time of the sample used for the phase-space estimate.
    pub t_sample: f64,
    /// Snapping band used, widened by the estimated error of `c`.
    pub eps_c: f64,
    pub origin: OriginBehavior,
}

/// Minimum `t`-extent of a profile (three decades in `r`).
pub const MIN_PROFILE_SPAN: f64 = 3.0 * LN_10;

const MIN_PROFILE_POINTS: usize = 9;

// Central first-derivative weights for offsets 1..=k (odd-symmetric).
const D1_ORDER6: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D1_ORDER8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

fn central_derivative(v: &[f64], i: usize, h: f64, w: &[f64]) -> f64 {
    w.iter().enumerate().map(|(k, w)| w * (v[i + k + 1] - v[i - k - 1])).sum::<f64>() / h
}

/// Classifies a sampled radial profile after checking that it solves the
/// equation to discretisation accuracy.
pub fn classify_profile(profile: &RadialProfile) -> Result<ProfileClassification> {
    let n = profile.len();
    if n < MIN_PROFILE_POINTS {
        return Err(Error::InsufficientData(format!("need at least {MIN_PROFILE_POINTS} samples, got {n}")));
    }
    let t = profile.t_grid();
    let extent = t[n - 1] - t[0];
    if extent < MIN_PROFILE_SPAN {
        return Err(Error::InsufficientData(format!(
            "profile covers {:.3} decades of r, need at least 3",
            extent / LN_10
        )));
    }
    let h = profile.uniform_t_step()?;
    let v = profile.values();

    let residual = max_abs(&pde_residual(profile)?);
    let gate = 100.0 * h * h + 64.0 * f64::EPSILON / (h * h);
    if residual > gate {
        return Err(Error::NotASolution { residual, gate });
    }

    let i = n / 2;
    let v_t = central_derivative(v, i, h, &D1_ORDER8);
    let v_t6 = central_derivative(v, i, h, &D1_ORDER6);
    let p = PhasePoint::new(v[i], v_t);
    let c_err = (first_integral(p) - first_integral(PhasePoint::new(v[i], v_t6))).abs();
    let eps = EPS_C.max(10.0 * c_err);

    let classified = classify_with(p, t[i], eps)?;
    Ok(ProfileClassification { classified, t_sample: t[i], eps_c: eps, origin: origin_value(&classified.class) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{soliton_cylinder, soliton_value};
    use crate::geometry::kelvin;
    use proptest::prelude::*;

    fn class_of(v: f64, vt: f64) -> Classification {
        classify_initial(PhasePoint::new(v, vt)).unwrap().class
    }

    #[test]
    fn zero_is_trivial() {
        let r = classify_initial(PhasePoint::new(0.0, 0.0)).unwrap();
        assert_eq!(r.class, Classification::TrivialZero);
        assert_eq!(r.c, -1.0);
        assert!(!r.snapped);
    }

    #[test]
    fn half_amplitude_is_periodic() {
        let r = classify_initial(PhasePoint::new(0.5, 0.0)).unwrap();
        assert_eq!(r.c, -0.5625);
        let Classification::Periodic { amplitude, period, phase } = r.class else { panic!("{r:?}") };
        assert!((amplitude - 0.5).abs() < 1e-15);
        assert_eq!(period, period_integral(0.5).unwrap().period);
        assert_eq!(phase, 0.0);
    }

    #[test]
    fn phase_is_time_to_next_maximum() {
        // at the minimum the next maximum is half a period away
        let Classification::Periodic { period, phase, .. } = class_of(-0.5, 0.0) else { panic!() };
        assert!((phase - period / 2.0).abs() < 1e-9);
        // just past a maximum: almost a full period
        let o = integrate(PhasePoint::new(0.5, 0.0), (0.0, 0.1), 1e-13).unwrap();
        let q = o.eval(0.1).unwrap();
        let Classification::Periodic { period, phase, .. } = class_of(q.v, q.v_t) else { panic!() };
        assert!((phase - (period - 0.1)).abs() < 1e-8, "{phase}");
    }

    #[test]
    fn heteroclinic_start_is_unit_soliton() {
        let Classification::Soliton(p) = class_of(0.0, -1.0) else { panic!() };
        assert_eq!((p.a(), p.sign()), (1.0, 1));
        let Classification::Soliton(p) = class_of(0.0, 1.0) else { panic!() };
        assert_eq!((p.a(), p.sign()), (1.0, -1));
    }

    #[test]
    fn soliton_points_recover_scale() {
        for (a, s) in [(2.0, 1), (0.3, -1), (5.0, -1)] {
            let params = SolitonParams::new(a, s).unwrap();
            for t in [-1.5, 0.0, 2.0] {
                let v = soliton_cylinder(params, t);
                let th = (t - params.center()).tanh();
                let vt = -f64::from(s) * (1.0 - th * th);
                // the point sits at time t on the soliton, but is classified at time 0
                let Classification::Soliton(p) = class_of(v, vt) else { panic!("a = {a}, t = {t}") };
                assert_eq!(p.sign(), s);
                assert!((p.a() - a * (-t).exp()).abs() <= 1e-9 * p.a(), "a = {a}, t = {t}: {}", p.a());
            }
        }
    }

    #[test]
    fn unbounded_examples() {
        assert_eq!(class_of(2.0, 0.0), Classification::UnboundedBranch { c: -9.0, reason: UnboundedReason::CBelowMinusOne });
        assert!(matches!(class_of(0.0, 2.0), Classification::UnboundedBranch { reason: UnboundedReason::CAboveZero, .. }));
        let Classification::UnboundedBranch { c, reason } = class_of(1.3, 0.0) else { panic!() };
        assert_eq!(reason, UnboundedReason::OuterBand);
        assert!((c + 0.4761).abs() < 1e-12);
        // band edge √(2 − M²) for this c is 1.3
        let m = amplitude_from_c(c).unwrap();
        assert!(((2.0 - m * m).sqrt() - 1.3).abs() < 1e-12);
        assert!((m - 0.5568).abs() < 1e-4);
        let o = integrate(PhasePoint::new(1.3, 0.0), (0.0, 20.0), 1e-10).unwrap();
        assert!(o.escaped());
        // c = 0 above 1 follows v_t = ±(v² − 1) and blows up
        assert!(matches!(class_of(2.0, 3.0), Classification::UnboundedBranch { reason: UnboundedReason::OuterBand, .. }));
        // c = −1 with |v| = √2
        assert!(matches!(class_of(2f64.sqrt(), 0.0), Classification::UnboundedBranch { reason: UnboundedReason::OuterBand, .. }));
    }

    #[test]
    fn equilibria_and_snapping() {
        assert_eq!(class_of(1.0, 0.0), Classification::Equilibrium { sign: 1 });
        assert_eq!(class_of(-1.0, 0.0), Classification::Equilibrium { sign: -1 });
        let r = classify_initial(PhasePoint::new(1e-6, 1e-6)).unwrap();
        assert_eq!(r.class, Classification::TrivialZero);
        assert!(r.snapped && r.c > -1.0);
    }

    #[test]
    fn nonfinite_input_is_domain_error() {
        assert!(matches!(classify_initial(PhasePoint::new(f64::NAN, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(classify_initial(PhasePoint::new(0.0, f64::INFINITY)), Err(Error::Domain(_))));
    }

    #[test]
    fn origin_values() {
        let s = SolitonParams::new(1.0, 1).unwrap();
        assert_eq!(origin_value(&Classification::Soliton(s)), OriginBehavior::Value(1));
        assert_eq!(soliton_value(s, 0.0), 1.0);
        assert_eq!(origin_value(&Classification::TrivialZero), OriginBehavior::Value(0));
        assert_eq!(origin_value(&Classification::Equilibrium { sign: -1 }), OriginBehavior::Value(-1));
        let per = Classification::Periodic { amplitude: 0.5, period: 4.9, phase: 0.0 };
        assert_eq!(origin_value(&per), OriginBehavior::Discontinuous);
        assert_eq!(serde_json::to_string(&OriginBehavior::Discontinuous).unwrap(), "\"discontinuous\"");
        assert_eq!(serde_json::to_string(&OriginBehavior::Value(-1)).unwrap(), "-1");
    }

    fn soliton_profile(a: f64, sign: i8) -> RadialProfile {
        let p = SolitonParams::new(a, sign).unwrap();
        RadialProfile::sample_cylinder(-10.0, 10.0, 2001, |t| soliton_cylinder(p, t)).unwrap()
    }

    #[test]
    fn sampled_soliton_round_trip() {
        let r = classify_profile(&soliton_profile(2.0, 1)).unwrap();
        let Classification::Soliton(p) = r.classified.class else { panic!("{r:?}") };
        assert_eq!(p.sign(), 1);
        assert!((p.a() - 2.0).abs() <= 1e-6, "{}", p.a());
        assert_eq!(r.origin, OriginBehavior::Value(1));
    }

    #[test]
    fn kelvin_image_flips_scale_and_sign() {
        for a in [0.5, 2.0, 3.0] {
            let r = classify_profile(&kelvin(&soliton_profile(a, 1))).unwrap();
            let Classification::Soliton(p) = r.classified.class else { panic!() };
            assert_eq!(p.sign(), -1);
            assert!((p.a() - 1.0 / a).abs() <= 1e-6);
        }
    }

    #[test]
    fn sampled_zero_and_periodic() {
        let zero = RadialProfile::sample_cylinder(-5.0, 5.0, 101, |_| 0.0).unwrap();
        let r = classify_profile(&zero).unwrap();
        assert_eq!(r.classified.class, Classification::TrivialZero);
        assert_eq!(r.origin, OriginBehavior::Value(0));

        let o = integrate(PhasePoint::new(0.5, 0.0), (0.0, 12.0), 1e-13).unwrap();
        let back = integrate(PhasePoint::new(0.5, 0.0), (0.0, -12.0), 1e-13).unwrap();
        let eval = |t: f64| if t >= 0.0 { o.eval(t).unwrap().v } else { back.eval(t).unwrap().v };
        let prof = RadialProfile::sample_cylinder(-10.0, 10.0, 2001, eval).unwrap();
        let r = classify_profile(&prof).unwrap();
        let Classification::Periodic { amplitude, period, .. } = r.classified.class else { panic!("{r:?}") };
        let t_ref = period_integral(0.5).unwrap().period;
        assert!((amplitude - 0.5).abs() <= 1e-6);
        assert!(((period - t_ref) / t_ref).abs() <= 1e-6);
        assert_eq!(r.origin, OriginBehavior::Discontinuous);
    }

    #[test]
    fn profile_errors() {
        let short = RadialProfile::sample_cylinder(-1.0, 1.0, 201, |t| -t.tanh()).unwrap();
        assert!(matches!(classify_profile(&short), Err(Error::InsufficientData(_))));
        let few = RadialProfile::sample_cylinder(-5.0, 5.0, 5, |t| -t.tanh()).unwrap();
        assert!(matches!(classify_profile(&few), Err(Error::InsufficientData(_))));
        let junk = RadialProfile::sample_cylinder(-5.0, 5.0, 201, |t| 0.5 * (3.0 * t).sin()).unwrap();
        assert!(matches!(classify_profile(&junk), Err(Error::NotASolution { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn every_finite_point_is_classified(v in -3.0f64..3.0, vt in -3.0f64..3.0) {
            let r = classify_initial(PhasePoint::new(v, vt)).unwrap();
            if let Classification::Periodic { amplitude, period, phase } = r.class {
                prop_assert!(amplitude > 0.0 && amplitude < 1.0);
                prop_assert!(phase >= 0.0 && phase < period);
                prop_assert!(v.abs() <= amplitude + EPS_C);
            }
        }
    }
}
