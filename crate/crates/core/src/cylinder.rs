//! Relaxation of `−v_tt − v_θθ = 2v(1 − v²)` on a truncated, θ-periodic
//! cylinder by explicit gradient flow, and diagnostics for stationary fields.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closedform::{soliton_cylinder, SolitonParams};
use crate::error::{Error, Result};
use crate::geometry::parse_f64;
use crate::io::fmt_f64;

/// Boundary condition at one end of the `t` window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum BoundaryCondition {
    Dirichlet(f64),
    NeumannZero,
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    /// `dirichlet:<value>` or `neumann`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("dirichlet", v)) => Ok(BoundaryCondition::Dirichlet(parse_f64(v)?)),
            None if s == "neumann" => Ok(BoundaryCondition::NeumannZero),
            _ => Err(Error::Parse(format!("boundary condition `{s}`: expected `dirichlet:<value>` or `neumann`"))),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Dirichlet(v) => write!(f, "dirichlet:{v}"),
            BoundaryCondition::NeumannZero => write!(f, "neumann"),
        }
    }
}

/// Initial data for a relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    Zero,
    Soliton { a: f64, sign: i8 },
    /// Soliton `(a, +)` plus `amp·cos θ·exp(−(t − ln a)²)`.
    PerturbedSoliton { a: f64, amp: f64 },
    /// Independent uniform values in `[−amp, amp]`; `None` takes the run seed.
    Random { amp: f64, seed: Option<u64> },
}

impl FromStr for InitSpec {
    type Err = Error;

    /// `zero | soliton:a[:sign] | perturbed-soliton:a:amp | random:amp[:seed]`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parse(format!("init spec `{s}`"));
        let num = |i: usize| parts.get(i).ok_or_else(bad).and_then(|p| parse_f64(p));
        let spec = match (parts[0], parts.len()) {
            ("zero", 1) => InitSpec::Zero,
            ("soliton", 2) => InitSpec::Soliton { a: num(1)?, sign: 1 },
            ("soliton", 3) => {
                let sign = match parts[2] {
                    "+" | "1" | "+1" => 1,
                    "-" | "-1" => -1,
                    _ => return Err(bad()),
                };
                InitSpec::Soliton { a: num(1)?, sign }
            }
            ("perturbed-soliton", 3) => InitSpec::PerturbedSoliton { a: num(1)?, amp: num(2)? },
            ("random", 2) => InitSpec::Random { amp: num(1)?, seed: None },
            ("random", 3) => {
                let seed = parts[2].parse().map_err(|_| bad())?;
                InitSpec::Random { amp: num(1)?, seed: Some(seed) }
            }
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

impl InitSpec {
    /// Dirichlet data matching the initial field at the window ends.
    pub fn default_bcs(&self, t_min: f64, t_max: f64) -> Result<(BoundaryCondition, BoundaryCondition)> {
        let p = match *self {
            InitSpec::Soliton { a, sign } => SolitonParams::new(a, sign)?,
            InitSpec::PerturbedSoliton { a, .. } => SolitonParams::new(a, 1)?,
            InitSpec::Zero | InitSpec::Random { .. } => {
                return Ok((BoundaryCondition::Dirichlet(0.0), BoundaryCondition::Dirichlet(0.0)))
            }
        };
        Ok((
            BoundaryCondition::Dirichlet(soliton_cylinder(p, t_min)),
            BoundaryCondition::Dirichlet(soliton_cylinder(p, t_max)),
        ))
    }
}

/// Samples `v(tᵢ, θⱼ)` on `tᵢ = t_min + i·h_t`, `θⱼ = 2πj/n_theta`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderField {
    t_min: f64,
    t_max: f64,
    n_t: usize,
    n_theta: usize,
    values: Vec<f64>,
    bc_left: BoundaryCondition,
    bc_right: BoundaryCondition,
}

impl CylinderField {
    pub fn new(
        (t_min, t_max): (f64, f64),
        n_t: usize,
        n_theta: usize,
        values: Vec<f64>,
        bc_left: BoundaryCondition,
        bc_right: BoundaryCondition,
    ) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(Error::domain(format!("window [{t_min}, {t_max}] is not a finite interval")));
        }
        if n_t < 3 || n_theta < 1 {
            return Err(Error::domain(format!("grid {n_t}×{n_theta} too small: need n_t ≥ 3, n_theta ≥ 1")));
        }
        if values.len() != n_t * n_theta {
            return Err(Error::domain(format!("expected {} values, got {}", n_t * n_theta, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("field values must be finite"));
        }
        for bc in [bc_left, bc_right] {
            if let BoundaryCondition::Dirichlet(v) = bc {
                if !v.is_finite() {
                    return Err(Error::domain("Dirichlet value must be finite"));
                }
            }
        }
        let mut field = Self { t_min, t_max, n_t, n_theta, values, bc_left, bc_right };
        field.apply_dirichlet();
        Ok(field)
    }

    /// Field `f(t, θ)` on the grid; Dirichlet rows take their boundary value.
    pub fn from_fn(
        window: (f64, f64),
        n_t: usize,
        n_theta: usize,
        bc_left: BoundaryCondition,
        bc_right: BoundaryCondition,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut field = Self::new(window, n_t, n_theta, vec![0.0; n_t * n_theta], bc_left, bc_right)?;
        for i in 0..n_t {
            let t = field.t(i);
            for j in 0..n_theta {
                field.values[i * n_theta + j] = f(t, field.theta(j));
            }
        }
        if field.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("field values must be finite"));
        }
        field.apply_dirichlet();
        Ok(field)
    }

    /// Initial field from a spec; `bcs` defaults to [`InitSpec::default_bcs`].
    pub fn initialise(
        window: (f64, f64),
        n_t: usize,
        n_theta: usize,
        init: InitSpec,
        bcs: Option<(BoundaryCondition, BoundaryCondition)>,
        run_seed: u64,
    ) -> Result<Self> {
        let (bl, br) = match bcs {
            Some(b) => b,
            None => init.default_bcs(window.0, window.1)?,
        };
        match init {
            InitSpec::Zero => Self::from_fn(window, n_t, n_theta, bl, br, |_, _| 0.0),
            InitSpec::Soliton { a, sign } => {
                let p = SolitonParams::new(a, sign)?;
                Self::from_fn(window, n_t, n_theta, bl, br, |t, _| soliton_cylinder(p, t))
            }
            InitSpec::PerturbedSoliton { a, amp } => {
                let p = SolitonParams::new(a, 1)?;
                let c = p.center();
                Self::from_fn(window, n_t, n_theta, bl, br, |t, th| {
                    soliton_cylinder(p, t) + amp * th.cos() * (-(t - c) * (t - c)).exp()
                })
            }
            InitSpec::Random { amp, seed } => {
                if !(amp >= 0.0 && amp.is_finite()) {
                    return Err(Error::domain(format!("random amplitude must be nonnegative, got {amp}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(run_seed));
                let values = (0..n_t * n_theta).map(|_| amp * rng.gen_range(-1.0..=1.0)).collect();
                Self::new(window, n_t, n_theta, values, bl, br)
            }
        }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bcs(&self) -> (BoundaryCondition, BoundaryCondition) {
        (self.bc_left, self.bc_right)
    }

    pub fn h_t(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_t - 1) as f64
    }

    pub fn h_theta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.n_t {
            self.t_max
        } else {
            self.t_min + i as f64 * self.h_t()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_theta as f64
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_theta + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    fn apply_dirichlet(&mut self) {
        let n = self.n_theta;
        if let BoundaryCondition::Dirichlet(v) = self.bc_left {
            self.values[..n].fill(v);
        }
        if let BoundaryCondition::Dirichlet(v) = self.bc_right {
            let len = self.values.len();
            self.values[len - n..].fill(v);
        }
    }

    /// Rows that evolve: all rows except Dirichlet ends.
    fn active_rows(&self) -> std::ops::Range<usize> {
        let lo = usize::from(matches!(self.bc_left, BoundaryCondition::Dirichlet(_)));
        let hi = self.n_t - usize::from(matches!(self.bc_right, BoundaryCondition::Dirichlet(_)));
        lo..hi
    }

    /// `Δ_h v + 2v(1 − v²)` at every active point (zero elsewhere); returns its max norm.
    fn flow_into(&self, out: &mut [f64]) -> f64 {
        let (nt, nth) = (self.n_t, self.n_theta);
        let it2 = 1.0 / (self.h_t() * self.h_t());
        let ith2 = 1.0 / (self.h_theta() * self.h_theta());
        let v = &self.values;
        let mut worst: f64 = 0.0;
        for i in self.active_rows() {
            // a zero-flux end reflects its neighbour row
            let up = if i == 0 { 1 } else { i - 1 };
            let down = if i + 1 == nt { nt - 2 } else { i + 1 };
            for j in 0..nth {
                let jl = if j == 0 { nth - 1 } else { j - 1 };
                let jr = if j + 1 == nth { 0 } else { j + 1 };
                let c = v[i * nth + j];
                let lap = (v[up * nth + j] - 2.0 * c + v[down * nth + j]) * it2
                    + (v[i * nth + jl] - 2.0 * c + v[i * nth + jr]) * ith2;
                let r = lap + 2.0 * c * (1.0 - c * c);
                out[i * nth + j] = r;
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Max norm of `v_tt + v_θθ + 2v(1 − v²)` over the evolving points.
    pub fn residual(&self) -> f64 {
        let mut scratch = vec![0.0; self.values.len()];
        self.flow_into(&mut scratch)
    }

    /// Writes `t,theta,v` rows, `t` outer and `θ` inner.
    pub fn to_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "theta", "v"])?;
        for i in 0..self.n_t {
            let t = fmt_f64(self.t(i));
            for j in 0..self.n_theta {
                wr.write_record([t.as_str(), &fmt_f64(self.theta(j)), &fmt_f64(self.get(i, j))])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the layout written by [`CylinderField::to_csv`].
    pub fn from_csv<R: Read>(rd: R, bc_left: BoundaryCondition, bc_right: BoundaryCondition) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(rd);
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "theta", "v"] {
            return Err(Error::Parse("expected header `t,theta,v`".into()));
        }
        let mut ts = Vec::new();
        let mut values = Vec::new();
        let mut n_theta = 0;
        for rec in reader.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse("expected three columns".into()));
            }
            let t = parse_f64(&rec[0])?;
            if ts.last() != Some(&t) {
                ts.push(t);
            }
            if ts.len() == 1 {
                n_theta += 1;
            }
            values.push(parse_f64(&rec[2])?);
        }
        if ts.len() < 2 {
            return Err(Error::Parse("field needs at least two rows".into()));
        }
        let field = Self::new((ts[0], ts[ts.len() - 1]), ts.len(), n_theta, values.clone(), bc_left, bc_right)?;
        if field.values != values {
            return Err(Error::Parse("boundary rows disagree with the Dirichlet data".into()));
        }
        Ok(field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    /// `dt = dt_factor·min(h_t², h_θ²)`; at most 0.25.
    pub dt_factor: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { dt_factor: 0.2 }
    }
}

/// Largest stable `dt_factor`.
pub const MAX_DT_FACTOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxReport {
    pub steps: usize,
    pub final_residual: f64,
    pub anisotropy: f64,
    pub converged: bool,
    /// Largest `|v|` over every iterate, including the initial one.
    pub max_abs_seen: f64,
}

pub fn relax(field: CylinderField, tol: f64, max_steps: usize) -> Result<(CylinderField, RelaxReport)> {
    relax_with(field, tol, max_steps, RelaxOptions::default())
}

/// Explicit Euler on `v_s = Δ_h v + 2v(1 − v²)` until the residual is at most `tol`.
pub fn relax_with(
    mut field: CylinderField,
    tol: f64,
    max_steps: usize,
    opts: RelaxOptions,
) -> Result<(CylinderField, RelaxReport)> {
    if !(opts.dt_factor > 0.0 && opts.dt_factor <= MAX_DT_FACTOR) {
        return Err(Error::Config(format!(
            "dt factor {} outside (0, {MAX_DT_FACTOR}]: explicit scheme unstable",
            opts.dt_factor
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let ht = field.h_t();
    let hth = field.h_theta();
    let dt = opts.dt_factor * (ht * ht).min(hth * hth);

    let mut flow = vec![0.0; field.values.len()];
    let mut max_abs_seen = field.max_abs();
    let mut steps = 0;
    let mut res = field.flow_into(&mut flow);
    while res > tol && steps < max_steps {
        for i in field.active_rows() {
            let row = i * field.n_theta..(i + 1) * field.n_theta;
            for (v, f) in field.values[row.clone()].iter_mut().zip(&flow[row]) {
                *v += dt * f;
            }
        }
        steps += 1;
        max_abs_seen = max_abs_seen.max(field.max_abs());
        res = field.flow_into(&mut flow);
        if !res.is_finite() {
            return Err(Error::NotConverged(format!("relaxation diverged after {steps} steps")));
        }
    }
    let report = RelaxReport {
        steps,
        final_residual: res,
        anisotropy: theta_anisotropy(&field),
        converged: res <= tol,
        max_abs_seen,
    };
    Ok((field, report))
}

/// `max_i (max_j v(tᵢ, θⱼ) − min_j v(tᵢ, θⱼ))`.
pub fn theta_anisotropy(field: &CylinderField) -> f64 {
    (0..field.n_t)
        .map(|i| {
            let row = field.row(i);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// `H(tᵢ) = ∫ (−½v_t² + ½v_θ² − v² + ½v⁴) dθ` at each interior row `i = 1..n_t−1`.
pub fn horizontal_identity(field: &CylinderField) -> Vec<(f64, f64)> {
    let nth = field.n_theta;
    let ht = field.h_t();
    let hth = field.h_theta();
    (1..field.n_t - 1)
        .map(|i| {
            let (prev, row, next) = (field.row(i - 1), field.row(i), field.row(i + 1));
            let sum: f64 = (0..nth)
                .map(|j| {
                    let vt = (next[j] - prev[j]) / (2.0 * ht);
                    let vth = (row[(j + 1) % nth] - row[(j + nth - 1) % nth]) / (2.0 * hth);
                    let v2 = row[j] * row[j];
                    -0.5 * vt * vt + 0.5 * vth * vth - v2 + 0.5 * v2 * v2
                })
                .sum();
            (field.t(i), sum * hth)
        })
        .collect()
}

/// `φ(tᵢ) = ∫ v² dθ` at every row.
pub fn phi_profile(field: &CylinderField) -> Vec<(f64, f64)> {
    let hth = field.h_theta();
    (0..field.n_t).map(|i| (field.t(i), field.row(i).iter().map(|v| v * v).sum::<f64>() * hth)).collect()
}

/// Whether `φ` never decreases by more than `slack` from one row to the next.
pub fn phi_nondecreasing(phi: &[(f64, f64)], slack: f64) -> bool {
    phi.windows(2).all(|w| w[1].1 >= w[0].1 - slack)
}

/// Minimum fraction of the window a reflection must overlap to be scored.
pub const MIN_REFLECTION_OVERLAP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingPlaneReport {
    /// Reflection centre with the smallest defect, refined between grid candidates.
    pub best_lambda: Option<f64>,
    /// `max |v(2Λ − t, θ) − v(t, θ)|` at the best grid candidate.
    pub reflection_defect: f64,
    /// Minimum of the central difference `v_t` over interior rows.
    pub min_vt: f64,
    /// The field is constant, so every reflection is exact.
    pub degenerate: bool,
}

/// Scores both alternatives of the reflection/monotonicity dichotomy.
///
/// Candidate centres sit on grid rows and midway between them, so every
/// reflection maps grid rows onto grid rows.
pub fn moving_plane_check(field: &CylinderField) -> MovingPlaneReport {
    let n = field.n_t;
    let ht = field.h_t();
    let min_vt = (1..n - 1)
        .flat_map(|i| {
            let (p, q) = (field.row(i - 1), field.row(i + 1));
            p.iter().zip(q).map(move |(a, b)| (b - a) / (2.0 * ht))
        })
        .fold(f64::INFINITY, f64::min);

    let (lo, hi) = field.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let degenerate = hi - lo <= 1e-12;

    // k indexes the centre t_min + (k/2)·h_t; row i reflects to row k − i.
    let min_rows = ((MIN_REFLECTION_OVERLAP * n as f64).ceil() as usize).max(2);
    let defect = |k: usize| -> Option<f64> {
        let i_lo = k.saturating_sub(n - 1);
        let i_hi = k.min(n - 1);
        if i_hi + 1 - i_lo < min_rows {
            return None;
        }
        let d = (i_lo..=i_hi)
            .flat_map(|i| field.row(i).iter().zip(field.row(k - i)).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        Some(d)
    };
    let scores: Vec<Option<f64>> = (0..=2 * (n - 1)).map(defect).collect();
    let best = scores
        .iter()
        .enumerate()
        .filter_map(|(k, d)| d.map(|d| (k, d)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let Some((k, d0)) = best else {
        return MovingPlaneReport { best_lambda: None, reflection_defect: f64::INFINITY, min_vt, degenerate };
    };
    let mut offset = 0.0;
    if let (Some(Some(dm)), Some(Some(dp))) = (k.checked_sub(1).map(|k| scores[k]), scores.get(k + 1)) {
        let curv = dm - 2.0 * d0 + dp;
        if curv > 0.0 {
            offset = (0.5 * (dm - dp) / curv).clamp(-0.5, 0.5);
        }
    }
    let lambda = if degenerate {
        0.5 * (field.t_min + field.t_max)
    } else {
        field.t_min + 0.5 * (k as f64 + offset) * ht
    };
    MovingPlaneReport { best_lambda: Some(lambda), reflection_defect: d0, min_vt, degenerate }
}

/// Value of `H` on any solution tending to `±1`.
pub const H_LIMIT: f64 = -PI;
