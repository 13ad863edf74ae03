//! The reduced ODE `−v_tt = 2v(1 − v²)`: first integral, adaptive
//! integration with dense output and event location, period detection and
//! the reflection symmetries of bounded orbits.

mod dopri;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use dopri::{DenseSegment, State};

/// `|v|` beyond which an orbit is declared to be on an unbounded branch.
pub const ESCAPE_BOUND: f64 = 3.0;

/// Event times are bisected on the dense output to this width.
pub const EVENT_TIME_TOL: f64 = 1e-12;

const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub v: f64,
    pub v_t: f64,
}

impl PhasePoint {
    pub fn new(v: f64, v_t: f64) -> Self {
        Self { v, v_t }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.v_t.is_finite()
    }

    /// `v_tt` from the equation.
    pub fn acceleration(&self) -> f64 {
        -2.0 * self.v * (1.0 - self.v * self.v)
    }

    /// Rest points `v ∈ {0, ±1}` with `v_t = 0`.
    pub fn is_equilibrium(&self) -> bool {
        self.v_t == 0.0 && self.acceleration() == 0.0
    }
}

fn rhs(y: &State) -> State {
    [y[1], -2.0 * y[0] * (1.0 - y[0] * y[0])]
}

/// `c = v_t² − (v² − 1)²`, constant along every solution.
pub fn first_integral(p: PhasePoint) -> f64 {
    let w = p.v * p.v - 1.0;
    p.v_t * p.v_t - w * w
}

/// Amplitude `M = √(1 − √(−c))` of the periodic orbit with first integral `c ∈ (−1, 0)`.
pub fn amplitude_from_c(c: f64) -> Result<f64> {
    if !(c > -1.0 && c < 0.0) {
        return Err(Error::domain(format!("first integral must lie in (-1, 0), got {c}")));
    }
    Ok((1.0 - (-c).sqrt()).sqrt())
}

/// First integral of the periodic orbit with amplitude `M`: `−(1 − M²)²`.
pub fn c_from_amplitude(m: f64) -> f64 {
    -(1.0 - m * m).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    VtZero,
    VZero,
    BoundExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    /// Direction in which the monitored quantity passes through its level.
    pub crossing: Crossing,
}

/// A dense, event-annotated trajectory.
///
/// Samples are the accepted step ends in increasing time, whatever the
/// direction of integration.
#[derive(Debug, Clone)]
pub struct Orbit {
    start: PhasePoint,
    start_time: f64,
    tol: f64,
    drift_tolerance: f64,
    t_samples: Vec<f64>,
    states: Vec<PhasePoint>,
    c_series: Vec<f64>,
    events: Vec<Event>,
    segments: Vec<DenseSegment>,
}

impl Orbit {
    pub fn start(&self) -> PhasePoint {
        self.start
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Bound on `|c(t) − c(t₀)|` declared when the orbit was integrated.
    pub fn drift_tolerance(&self) -> f64 {
        self.drift_tolerance
    }

    pub fn t_samples(&self) -> &[f64] {
        &self.t_samples
    }

    pub fn states(&self) -> &[PhasePoint] {
        &self.states
    }

    pub fn c_series(&self) -> &[f64] {
        &self.c_series
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_samples[0], *self.t_samples.last().unwrap())
    }

    pub fn escaped(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::BoundExceeded)
    }

    pub fn max_drift(&self) -> f64 {
        let c0 = first_integral(self.start);
        self.c_series.iter().fold(0.0, |m, c| m.max((c - c0).abs()))
    }

    pub fn drift_within_tolerance(&self) -> bool {
        self.max_drift() <= self.drift_tolerance
    }

    pub fn v_range(&self) -> (f64, f64) {
        self.states
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.v), hi.max(p.v)))
    }

    /// Dense-output state at `t`, or `None` outside the integrated range.
    pub fn eval(&self, t: f64) -> Option<PhasePoint> {
        let (lo, hi) = self.t_range();
        if !(t >= lo && t <= hi) {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.states[0]);
        }
        let idx = self.segments.partition_point(|s| s.hi() < t).min(self.segments.len() - 1);
        let y = self.segments[idx].eval(t);
        Some(PhasePoint::new(y[0], y[1]))
    }

    /// Events of one kind, in time order.
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

fn sign_change(a: f64, b: f64) -> bool {
    a != 0.0 && (b == 0.0 || (a < 0.0) != (b < 0.0))
}

fn crossing_of(before: f64) -> Crossing {
    if before < 0.0 {
        Crossing::Rising
    } else {
        Crossing::Falling
    }
}

/// Bisects `g ∘ segment` for a root between the step ends.
fn locate(seg: &DenseSegment, g: impl Fn(&State) -> f64) -> f64 {
    let (mut a, mut b) = (seg.t0, seg.t1());
    let mut ga = g(&seg.eval(a));
    for _ in 0..200 {
        if (b - a).abs() <= EVENT_TIME_TOL {
            break;
        }
        let m = 0.5 * (a + b);
        let gm = g(&seg.eval(m));
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Integrates from `start` at `t_span.0` towards `t_span.1` (either direction)
/// with an adaptive Dormand–Prince 5(4) pair, relative and absolute tolerance
/// `tol`.
///
/// Crossing `|v| = 3` ends the integration with a `BoundExceeded` event; the
/// orbit is returned normally. Step-size underflow returns
/// [`Error::IntegrationFailure`] carrying the partial orbit.
pub fn integrate(start: PhasePoint, t_span: (f64, f64), tol: f64) -> Result<Orbit> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(Error::domain("time span must be finite and nondegenerate"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if !start.is_finite() {
        return Err(Error::domain("start point must be finite"));
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut orbit = Orbit {
        start,
        start_time: t0,
        tol,
        drift_tolerance: 100.0 * tol,
        t_samples: vec![t0],
        states: vec![start],
        c_series: vec![first_integral(start)],
        events: Vec::new(),
        segments: Vec::new(),
    };

    // Levels present at the start point count as events there.
    if start.v_t == 0.0 && start.acceleration() != 0.0 {
        let falling = start.acceleration() < 0.0;
        orbit.events.push(Event {
            t: t0,
            kind: EventKind::VtZero,
            crossing: if falling { Crossing::Falling } else { Crossing::Rising },
        });
    }
    if start.v == 0.0 && start.v_t != 0.0 {
        let falling = start.v_t < 0.0;
        orbit.events.push(Event {
            t: t0,
            kind: EventKind::VZero,
            crossing: if falling { Crossing::Falling } else { Crossing::Rising },
        });
    }

    let mut t = t0;
    let mut y: State = [start.v, start.v_t];
    let mut k = rhs(&y);
    // compensated summation of the step increments
    let mut carry: State = [0.0; 2];
    let mut h = dir * span.min(0.01);
    let mut steps = 0usize;

    if start.v.abs() > ESCAPE_BOUND {
        orbit.events.push(Event { t: t0, kind: EventKind::BoundExceeded, crossing: Crossing::Rising });
        return Ok(finish(orbit, dir));
    }

    while (t1 - t) * dir > 0.0 {
        if (t1 - (t + h)) * dir < 0.0 {
            h = t1 - t;
        }
        if h.abs() <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("step size underflow (h = {h:e})"),
                partial: Box::new(finish(orbit, dir)),
            });
        }
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::IntegrationFailure {
                t,
                reason: "step budget exhausted".into(),
                partial: Box::new(finish(orbit, dir)),
            });
        }

        let mut out = dopri::trial_step(&rhs, t, &y, &k, h, tol);
        let mut next_carry = carry;
        for i in 0..2 {
            let d = out.increment[i] + carry[i];
            let sum = y[i] + d;
            next_carry[i] = d - (sum - y[i]);
            out.y[i] = sum;
        }
        let finite = out.y.iter().all(|x| x.is_finite()) && out.err.is_finite();
        if !finite || out.err > 1.0 {
            let fac = if finite { (0.9 * out.err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= fac;
            continue;
        }

        let seg = out.segment;
        let t_new = if (t1 - (t + h)) * dir <= 0.0 { t1 } else { t + h };
        let y_new = out.y;

        let mut step_events = Vec::new();
        if sign_change(y[1], y_new[1]) {
            step_events.push(Event { t: locate(&seg, |s| s[1]), kind: EventKind::VtZero, crossing: crossing_of(y[1] * dir) });
        }
        if sign_change(y[0], y_new[0]) {
            step_events.push(Event { t: locate(&seg, |s| s[0]), kind: EventKind::VZero, crossing: crossing_of(y[0] * dir) });
        }
        let escaped = y_new[0].abs() > ESCAPE_BOUND;
        let mut t_stop = t_new;
        if escaped {
            let side = y_new[0].signum();
            let t_esc = locate(&seg, |s| s[0] - side * ESCAPE_BOUND);
            step_events.retain(|e| (e.t - t_esc) * dir <= 0.0);
            step_events.push(Event {
                t: t_esc,
                kind: EventKind::BoundExceeded,
                crossing: if side > 0.0 { Crossing::Rising } else { Crossing::Falling },
            });
            t_stop = t_esc;
        }
        step_events.sort_by(|a, b| ((a.t - b.t) * dir).total_cmp(&0.0));
        orbit.events.extend(step_events);

        let y_rec = if escaped { seg.eval(t_stop) } else { y_new };
        let p = PhasePoint::new(y_rec[0], y_rec[1]);
        orbit.t_samples.push(t_stop);
        orbit.states.push(p);
        orbit.c_series.push(first_integral(p));
        orbit.segments.push(seg);
        if escaped {
            break;
        }

        t = t_new;
        y = y_new;
        carry = next_carry;
        k = rhs(&y);
        let fac = if out.err == 0.0 { 5.0 } else { (0.9 * out.err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(finish(orbit, dir))
}

fn finish(mut orbit: Orbit, dir: f64) -> Orbit {
    if dir < 0.0 {
        orbit.t_samples.reverse();
        orbit.states.reverse();
        orbit.c_series.reverse();
        orbit.events.reverse();
        orbit.segments.reverse();
    }
    orbit
}

/// Period of a bounded orbit from alternate (same-direction) `v_t` zeros.
///
/// Returns `None` when the orbit starts at an equilibrium.
pub fn detect_period(orbit: &Orbit) -> Result<Option<f64>> {
    if orbit.start().is_equilibrium() {
        return Ok(None);
    }
    let zeros: Vec<f64> = orbit.events_of(EventKind::VtZero).map(|e| e.t).collect();
    if zeros.len() < 3 {
        return Err(Error::InsufficientSpan { found: zeros.len() });
    }
    let n = zeros.len() - 2;
    let total: f64 = (0..n).map(|i| zeros[i + 2] - zeros[i]).sum();
    Ok(Some(total / n as f64))
}

/// Reflection defects of an orbit that starts at an extremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionReport {
    /// `max |v(2t₀ − t) − v(t)|`, `t₀` the start time.
    pub even_defect: f64,
    /// First `v_t` zero after the start.
    pub t1: Option<f64>,
    /// `max |v(2t₁ − t) − v(t)|` over the part of the orbit where both sides exist.
    pub t1_defect: f64,
}

/// Checks `v(−t) = v(t)` about the starting extremum and `v(2t₁ − t) = v(t)`
/// about the next one. The mirrored branch for the first identity is
/// integrated backward from the same start.
pub fn reflection_checks(orbit: &Orbit) -> Result<ReflectionReport> {
    let start = orbit.start();
    if start.v_t.abs() > orbit.tol() {
        return Err(Error::Precondition(format!("orbit does not start at an extremum (v_t = {:e})", start.v_t)));
    }
    let t0 = orbit.start_time();
    let (lo, hi) = orbit.t_range();
    if lo < t0 {
        return Err(Error::Precondition("reflection checks need a forward orbit".into()));
    }
    if start.is_equilibrium() {
        let even_defect = orbit.states().iter().fold(0.0_f64, |m, p| m.max((p.v - start.v).abs()));
        return Ok(ReflectionReport { even_defect, t1: None, t1_defect: even_defect });
    }

    let mirror = integrate(start, (t0, 2.0 * t0 - hi), orbit.tol())?;
    let mut even_defect: f64 = 0.0;
    for (t, p) in orbit.t_samples().iter().zip(orbit.states()) {
        if let Some(q) = mirror.eval(2.0 * t0 - t) {
            even_defect = even_defect.max((p.v - q.v).abs());
        }
    }

    let t1 = orbit.events_of(EventKind::VtZero).map(|e| e.t).find(|t| *t > t0);
    let Some(t1) = t1 else {
        return Err(Error::Precondition("orbit does not reach its next extremum".into()));
    };
    let mut t1_defect: f64 = 0.0;
    for (t, p) in orbit.t_samples().iter().zip(orbit.states()) {
        if let Some(q) = orbit.eval(2.0 * t1 - t) {
            t1_defect = t1_defect.max((p.v - q.v).abs());
        }
    }
    Ok(ReflectionReport { even_defect, t1: Some(t1), t1_defect })
}
