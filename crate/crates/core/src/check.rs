//! The acceptance criteria, runnable from the command line (`ymac check`) and
//! from the `acceptance` test target.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::classify::{classify_initial, classify_profile, Classification};
use crate::closedform::{cylinder_residual, max_abs, profile_energy, soliton_cylinder, EnergyWindow, SolitonParams};
use crate::cylinder::{
    horizontal_identity, moving_plane_check, relax, BoundaryCondition, CylinderField, InitSpec,
};
use crate::error::Result;
use crate::geometry::{kelvin, RadialProfile};
use crate::orbit::{detect_period, integrate, EventKind, Orbit, PhasePoint};
use crate::period::{period_agm, period_integral};

pub const GROUPS: [&str; 5] = ["period", "orbit", "energy", "classify", "cylinder"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOptions {
    /// Tolerance of the orbit integrations in the period and drift criteria.
    pub integrator_tol: f64,
    /// Halve the relaxation grids.
    pub fast: bool,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { integrator_tol: 1e-10, fast: false, seed: 0 }
    }
}

impl CheckOptions {
    /// Defaults, with `fast` taken from `YM_CHECK_FAST=1`.
    pub fn from_env() -> Self {
        Self { fast: std::env::var("YM_CHECK_FAST").is_ok_and(|v| v == "1"), ..Self::default() }
    }

    fn grid(&self, n: usize) -> usize {
        if self.fast {
            n / 2
        } else {
            n
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub group: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub group: &'static str,
    run: fn(&CheckOptions) -> Result<(bool, String)>,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "period-triple-agreement", group: "period", run: period_triple_agreement },
    Criterion { id: 2, name: "small-amplitude-limit", group: "period", run: small_amplitude_limit },
    Criterion { id: 3, name: "first-integral-drift", group: "orbit", run: first_integral_drift },
    Criterion { id: 4, name: "soliton-exactness", group: "orbit", run: soliton_exactness },
    Criterion { id: 5, name: "soliton-energy", group: "energy", run: soliton_energy },
    Criterion { id: 6, name: "taxonomy-consistency", group: "classify", run: taxonomy_consistency },
    Criterion { id: 7, name: "classification-round-trips", group: "classify", run: classification_round_trips },
    Criterion { id: 8, name: "cylinder-rigidity", group: "cylinder", run: cylinder_rigidity },
    Criterion { id: 9, name: "horizontal-identity", group: "cylinder", run: horizontal_identity_check },
    Criterion { id: 10, name: "zero-trap", group: "cylinder", run: zero_trap },
    Criterion { id: 11, name: "reflection-monotone-dichotomy", group: "cylinder", run: dichotomy },
];

/// Runs one criterion; an error inside it counts as a failure.
pub fn run_criterion(id: u8, opts: &CheckOptions) -> Option<CriterionResult> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let (passed, detail) = match (c.run)(opts) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Some(CriterionResult {
        id: c.id,
        name: c.name,
        group: c.group,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Criteria selected by group name or number; `None` selects all.
pub fn select(only: Option<&str>) -> Vec<u8> {
    CRITERIA
        .iter()
        .filter(|c| only.is_none_or(|o| o == c.group || o == c.name || o.parse::<u8>().ok() == Some(c.id)))
        .map(|c| c.id)
        .collect()
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn period_triple_agreement(opts: &CheckOptions) -> Result<(bool, String)> {
    let start = Instant::now();
    let (mut worst_agm, mut worst_ode) = (0.0_f64, 0.0_f64);
    for i in 1..=9 {
        let m = 0.1 * i as f64;
        let q = period_integral(m)?.period;
        let a = period_agm(m)?.period;
        let o = integrate(PhasePoint::new(m, 0.0), (0.0, 10.0 * q), opts.integrator_tol)?;
        let t_ode = detect_period(&o)?.unwrap_or(f64::NAN);
        worst_agm = worst_agm.max((q - a).abs());
        let rel = ((q - t_ode) / q).abs();
        worst_ode = worst_ode.max(if rel.is_nan() { f64::INFINITY } else { rel });
    }
    let el = start.elapsed();
    let ok = worst_agm <= 1e-10 && worst_ode <= 1e-6 && within(el, 10.0);
    Ok((ok, format!("max |Tq−Tagm| = {worst_agm:.2e} (≤ 1e-10), max |Tq−Tode|/T = {worst_ode:.2e} (≤ 1e-6)")))
}

fn small_amplitude_limit(_: &CheckOptions) -> Result<(bool, String)> {
    let t = period_integral(1e-4)?.period;
    let d = (t - PI * SQRT_2).abs();
    Ok((d <= 1e-8, format!("|T(1e-4) − π√2| = {d:.4e} (≤ 1e-8)")))
}

fn max_drift_over(starts: &[PhasePoint], tol: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for p in starts {
        let o = integrate(*p, (0.0, 100.0), tol)?;
        worst = worst.max(if o.escaped() { f64::INFINITY } else { o.max_drift() });
    }
    Ok(worst)
}

fn first_integral_drift(opts: &CheckOptions) -> Result<(bool, String)> {
    let mut starts: Vec<PhasePoint> = (1..=19).map(|i| PhasePoint::new(0.05 * i as f64, 0.0)).collect();
    starts.extend((1..=9).map(|i| PhasePoint::new(0.0, 0.1 * i as f64)));
    starts.extend((1..=9).map(|i| PhasePoint::new(-0.05 * i as f64, 0.08 * i as f64)));
    let worst = max_drift_over(&starts, opts.integrator_tol)?;
    Ok((
        worst <= 1e-8,
        format!("max |c(t) − c(0)| = {worst:.2e} over {} orbits at tol {:e} (≤ 1e-8)", starts.len(), opts.integrator_tol),
    ))
}

fn soliton_exactness(_: &CheckOptions) -> Result<(bool, String)> {
    let p = SolitonParams::new(1.0, 1)?;
    let res = |h: f64| -> Result<f64> {
        let n = (20.0 / h).round() as usize + 1;
        let v: Vec<f64> = (0..n).map(|i| soliton_cylinder(p, -10.0 + i as f64 * h)).collect();
        Ok(max_abs(&cylinder_residual(&v, h)?))
    };
    let r = [res(0.1)?, res(0.05)?, res(0.025)?];
    let orders = [(r[0] / r[1]).log2(), (r[1] / r[2]).log2()];
    let orders_ok = orders.iter().all(|o| (o - 2.0).abs() <= 0.1);

    let mut worst = 0.0_f64;
    for end in [10.0, -10.0] {
        let o = integrate(PhasePoint::new(0.0, -1.0), (0.0, end), 1e-13)?;
        for (t, s) in o.t_samples().iter().zip(o.states()) {
            worst = worst.max((s.v - soliton_cylinder(p, *t)).abs());
        }
    }
    Ok((
        orders_ok && worst <= 1e-8,
        format!(
            "residual orders {:.3}, {:.3} (2 ± 0.1); heteroclinic vs −tanh max {worst:.2e} (≤ 1e-8)",
            orders[0], orders[1]
        ),
    ))
}

fn soliton_energy(_: &CheckOptions) -> Result<(bool, String)> {
    let exact = 16.0 * PI / 3.0;
    let mut values = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        let p = SolitonParams::new(a, 1)?;
        let prof = RadialProfile::sample_cylinder(-20.0, 20.0, 160_001, |t| soliton_cylinder(p, t))?;
        values.push(profile_energy(&prof, EnergyWindow::Range(-20.0, 20.0))?.value);
    }
    let err = values.iter().fold(0.0_f64, |m, e| m.max((e - exact).abs()));
    let mut spread = 0.0_f64;
    for i in 0..3 {
        for j in 0..i {
            spread = spread.max((values[i] - values[j]).abs());
        }
    }
    Ok((
        err <= 1e-6 && spread <= 1e-8,
        format!("max |E − 16π/3| = {err:.2e} (≤ 1e-6), pairwise spread {spread:.2e} (≤ 1e-8)"),
    ))
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Points `1..=n` of the base-(2, 3) Halton sequence mapped to `[−2, 2]²`.
pub fn halton_starts(n: u64) -> Vec<PhasePoint> {
    (1..=n)
        .map(|i| PhasePoint::new(4.0 * radical_inverse(i, 2) - 2.0, 4.0 * radical_inverse(i, 3) - 2.0))
        .collect()
}

fn extrema(o: &Orbit) -> Vec<f64> {
    o.events_of(EventKind::VtZero).filter_map(|e| o.eval(e.t)).map(|q| q.v).collect()
}

/// Whether the orbit through `p` behaves as its classification predicts.
pub fn behaviour_agrees(p: PhasePoint, class: &Classification) -> Result<bool> {
    const TOL: f64 = 1e-10;
    Ok(match *class {
        Classification::UnboundedBranch { .. } => {
            integrate(p, (0.0, 100.0), TOL)?.escaped() && integrate(p, (0.0, -100.0), TOL)?.escaped()
        }
        Classification::Periodic { amplitude, period, .. } => {
            let o = integrate(p, (0.0, (4.0 * period).max(100.0)), TOL)?;
            let Some(t_obs) = detect_period(&o)? else { return Ok(false) };
            let ext = extrema(&o);
            let amp_obs = ext.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            !o.escaped() && ((t_obs - period) / period).abs() <= 1e-6 && (amp_obs - amplitude).abs() <= 1e-6
        }
        Classification::Soliton(s) => {
            // both tails converge to ∓sign, ten units from the centre
            let c = s.center();
            let sign = f64::from(s.sign());
            let mut ok = true;
            for (end, target) in [(c + 10.0, -sign), (c - 10.0, sign)] {
                let o = integrate(p, (0.0, end), 1e-12)?;
                let v = o.eval(end).map_or(f64::NAN, |q| q.v);
                ok &= !o.escaped() && (v - target).abs() <= 1e-3;
            }
            ok
        }
        Classification::TrivialZero => {
            let o = integrate(p, (0.0, 100.0), TOL)?;
            let (lo, hi) = o.v_range();
            lo.abs().max(hi.abs()) <= 1e-4
        }
        Classification::Equilibrium { sign } => {
            let o = integrate(p, (0.0, 1.0), TOL)?;
            let (lo, hi) = o.v_range();
            let s = f64::from(sign);
            (lo - s).abs().max((hi - s).abs()) <= 1e-4
        }
    })
}

fn taxonomy_consistency(_: &CheckOptions) -> Result<(bool, String)> {
    let start = Instant::now();
    let starts = halton_starts(1000);
    let mut mismatches = Vec::new();
    let mut counts = std::collections::BTreeMap::new();
    for p in &starts {
        let agrees = match classify_initial(*p) {
            Ok(r) => {
                *counts.entry(r.class.name()).or_insert(0) += 1;
                behaviour_agrees(*p, &r.class).unwrap_or(false)
            }
            Err(_) => false,
        };
        if !agrees {
            mismatches.push(*p);
        }
    }
    let el = start.elapsed();
    let mut detail = format!("{}/{} agree {counts:?}", starts.len() - mismatches.len(), starts.len());
    if let Some(p) = mismatches.first() {
        detail += &format!("; first mismatch ({}, {})", p.v, p.v_t);
    }
    Ok((mismatches.is_empty() && within(el, 60.0), detail))
}

fn classification_round_trips(_: &CheckOptions) -> Result<(bool, String)> {
    let plus2 = SolitonParams::new(2.0, 1)?;
    let prof = RadialProfile::sample_cylinder(-10.0, 10.0, 2001, |t| soliton_cylinder(plus2, t))?;
    let sol_err = match classify_profile(&prof)?.classified.class {
        Classification::Soliton(s) if s.sign() == 1 => (s.a() - 2.0).abs(),
        _ => f64::INFINITY,
    };

    let fwd = integrate(PhasePoint::new(0.5, 0.0), (0.0, 12.0), 1e-13)?;
    let back = integrate(PhasePoint::new(0.5, 0.0), (0.0, -12.0), 1e-13)?;
    let sample = |t: f64| if t >= 0.0 { fwd.eval(t) } else { back.eval(t) }.map_or(f64::NAN, |q| q.v);
    let per = RadialProfile::sample_cylinder(-10.0, 10.0, 2001, sample)?;
    let t_ref = period_integral(0.5)?.period;
    let (m_err, t_err) = match classify_profile(&per)?.classified.class {
        Classification::Periodic { amplitude, period, .. } => ((amplitude - 0.5).abs(), ((period - t_ref) / t_ref).abs()),
        _ => (f64::INFINITY, f64::INFINITY),
    };

    let mut kelvin_err = 0.0_f64;
    for a in [0.5, 2.0, 3.0] {
        let p = SolitonParams::new(a, 1)?;
        let prof = RadialProfile::sample_cylinder(-10.0, 10.0, 2001, |t| soliton_cylinder(p, t))?;
        kelvin_err = kelvin_err.max(match classify_profile(&kelvin(&prof))?.classified.class {
            Classification::Soliton(s) if s.sign() == -1 => (s.a() - 1.0 / a).abs(),
            _ => f64::INFINITY,
        });
    }
    let ok = sol_err <= 1e-6 && m_err <= 1e-6 && t_err <= 1e-6 && kelvin_err <= 1e-6;
    Ok((
        ok,
        format!("soliton |a−2| = {sol_err:.1e}; periodic |M−½| = {m_err:.1e}, rel T {t_err:.1e}; kelvin |a−1/a| = {kelvin_err:.1e} (all ≤ 1e-6)"),
    ))
}

const WINDOW: (f64, f64) = (-8.0, 8.0);
const RELAX_TOL: f64 = 1e-8;
const MAX_RELAX_STEPS: usize = 2_000_000;

fn cylinder_rigidity(opts: &CheckOptions) -> Result<(bool, String)> {
    let start = Instant::now();
    let init = InitSpec::PerturbedSoliton { a: 1.0, amp: 0.1 };
    let f = CylinderField::initialise(WINDOW, opts.grid(256), opts.grid(64), init, None, opts.seed)?;
    let (_, rep) = relax(f, RELAX_TOL, MAX_RELAX_STEPS)?;
    let el = start.elapsed();
    let ok = rep.converged
        && rep.anisotropy <= 1e-6
        && rep.final_residual <= 1e-8
        && rep.max_abs_seen <= 1.0 + 1e-12
        && within(el, 300.0);
    Ok((
        ok,
        format!(
            "{} steps, residual {:.2e} (≤ 1e-8), anisotropy {:.2e} (≤ 1e-6), max |v| − 1 = {:.1e} (≤ 1e-12)",
            rep.steps,
            rep.final_residual,
            rep.anisotropy,
            rep.max_abs_seen - 1.0
        ),
    ))
}

fn horizontal_identity_check(opts: &CheckOptions) -> Result<(bool, String)> {
    let init = InitSpec::Soliton { a: 1.0, sign: 1 };
    let f = CylinderField::initialise(WINDOW, opts.grid(256), opts.grid(64), init, None, opts.seed)?;
    let (f, rep) = relax(f, RELAX_TOL, MAX_RELAX_STEPS)?;
    let h = f.h_t();
    let bound = 50.0 * (h * h + RELAX_TOL);
    let hs = horizontal_identity(&f);
    let mean = hs.iter().map(|(_, v)| v).sum::<f64>() / hs.len() as f64;
    let sd = (hs.iter().map(|(_, v)| (v - mean).powi(2)).sum::<f64>() / hs.len() as f64).sqrt();
    let mut near_limit = 0.0_f64;
    for (i, (_, hv)) in hs.iter().enumerate() {
        // row i + 1 of the field
        if f.row(i + 1).iter().all(|v| v.abs() > 0.999) {
            near_limit = near_limit.max((hv + PI).abs());
        }
    }
    Ok((
        rep.converged && sd <= bound && near_limit <= bound,
        format!("stddev H = {sd:.2e}, max |H + π| where |v| > 0.999 = {near_limit:.2e} (both ≤ {bound:.2e})"),
    ))
}

fn zero_trap(opts: &CheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0_f64;
    let mut all_converged = true;
    for k in 0..5 {
        let init = InitSpec::Random { amp: 0.3, seed: Some(opts.seed + k) };
        let bc = BoundaryCondition::Dirichlet(0.0);
        let f = CylinderField::initialise(WINDOW, opts.grid(256), opts.grid(64), init, Some((bc, bc)), opts.seed)?;
        let (f, rep) = relax(f, RELAX_TOL, MAX_RELAX_STEPS / 16)?;
        all_converged &= rep.converged;
        worst = worst.max(f.max_abs());
    }
    Ok((
        all_converged && worst <= 1e-8,
        format!("max |v| after relaxation over 5 seeds = {worst:.3e} (≤ 1e-8), all converged: {all_converged}"),
    ))
}

fn dichotomy(opts: &CheckOptions) -> Result<(bool, String)> {
    let o = integrate(PhasePoint::new(0.5, 0.0), (0.0, 10.0), 1e-13)?;
    let zeros: Vec<f64> = o.events_of(EventKind::VtZero).map(|e| e.t).collect();
    let (t1, period) = (zeros[1], zeros[2]);
    let bc = BoundaryCondition::NeumannZero;
    let n_t = opts.grid(256) + 1;
    let per = CylinderField::from_fn((0.0, period), n_t, opts.grid(16), bc, bc, |t, _| {
        o.eval(t).map_or(f64::NAN, |q| q.v)
    })?;
    let pr = moving_plane_check(&per);
    let lambda_err = pr.best_lambda.map_or(f64::INFINITY, |l| (l - t1).abs());
    let sym_ok = pr.reflection_defect <= 1e-6 && lambda_err <= per.h_t();

    let init = InitSpec::Soliton { a: 1.0, sign: -1 };
    let sol = CylinderField::initialise(WINDOW, opts.grid(256), opts.grid(16), init, None, opts.seed)?;
    let sr = moving_plane_check(&sol);
    let mono_ok = sr.min_vt > 0.0 && sr.reflection_defect > 1e-6;
    Ok((
        sym_ok && mono_ok,
        format!(
            "periodic: defect {:.1e} at |Λ − t₁| = {lambda_err:.1e}; soliton: min v_t = {:.2e}, smallest defect {:.2e}",
            pr.reflection_defect, sr.min_vt, sr.reflection_defect
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection() {
        assert_eq!(select(None).len(), 11);
        assert_eq!(select(Some("period")), vec![1, 2]);
        assert_eq!(select(Some("cylinder")), vec![8, 9, 10, 11]);
        assert_eq!(select(Some("7")), vec![7]);
        assert!(select(Some("nothing")).is_empty());
    }

    #[test]
    fn halton_points() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
        let pts = halton_starts(1000);
        assert!(pts.iter().all(|p| p.v.abs() <= 2.0 && p.v_t.abs() <= 2.0));
    }

    #[test]
    fn loose_integrator_breaks_drift_criterion() {
        let opts = CheckOptions { integrator_tol: 1e-3, ..CheckOptions::default() };
        let r = run_criterion(3, &opts).unwrap();
        assert!(!r.passed, "{}", r.detail);
    }
}
