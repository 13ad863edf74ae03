//! Dormand–Prince 5(4) pair with Hairer's fourth-order continuous extension,
//! specialised to two-dimensional autonomous systems (so the nodes `c_i`
//! never enter).

pub(crate) type State = [f64; 2];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolation data for one accepted step.
#[derive(Debug, Clone)]
pub(crate) struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    rcont: [State; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn hi(&self) -> f64 {
        self.t0.max(self.t1())
    }

    /// State at time `t`; exact at both step ends up to rounding.
    pub fn eval(&self, t: f64) -> State {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        let mut y = [0.0; 2];
        for i in 0..2 {
            y[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        y
    }
}

pub(crate) struct StepOutcome {
    pub y: State,
    /// `y − y₀` before rounding into `y`.
    pub increment: State,
    pub err: f64,
    pub segment: DenseSegment,
}

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One trial step from `(t, y)` with slope `k1 = f(y)`; `err ≤ 1` accepts.
pub(crate) fn trial_step(f: &impl Fn(&State) -> State, t: f64, y: &State, k1: &State, h: f64, tol: f64) -> StepOutcome {
    let k2 = f(&axpy(y, &[(A21, k1)], h));
    let k3 = f(&axpy(y, &[(A31, k1), (A32, &k2)], h));
    let k4 = f(&axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(&axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
    let k6 = f(&axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
    let increment = axpy(&[0.0; 2], &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
    let y_new = [y[0] + increment[0], y[1] + increment[1]];
    let k7 = f(&y_new);

    let mut sq = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        // error per unit step: local errors sum to at most ~tol over unit time
        let scale = (tol + tol * y[i].abs().max(y_new[i].abs())) * h.abs().min(1.0);
        sq += (e / scale).powi(2);
    }
    let err = (sq / 2.0).sqrt();

    let mut rcont = [[0.0; 2]; 5];
    for i in 0..2 {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rcont[0][i] = y[i];
        rcont[1][i] = ydiff;
        rcont[2][i] = bspl;
        rcont[3][i] = ydiff - h * k7[i] - bspl;
        rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    StepOutcome { y: y_new, increment, err, segment: DenseSegment { t0: t, h, rcont } }
}
